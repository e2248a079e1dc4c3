import numpy as np
import pytest

from monodromy_lab import connections as cn
from monodromy_lab.sl2core import INF, eig2, same_line

RT = 1 / 3


def test_nabla_s3_residues():
    c = cn.build_nabla_s3(RT)
    assert np.allclose(cn.residue(c, 0), np.diag([0.125, -0.125]), atol=1e-15)
    assert cn.residue(c, 1)[0, 1] == 1
    total = cn.residue(c, 0) + cn.residue(c, 1) + cn.residue(c, INF)
    assert np.max(np.abs(total)) < 1e-12
    assert set(map(str, c.poles)) == {"0j", "(1+0j)", "INF"}


def test_nabla_s3_domain():
    with pytest.raises(cn.DomainError):
        cn.build_nabla_s3(0.5)
    with pytest.raises(cn.DomainError):
        cn.build_D(-0.1)


def test_D_residues():
    d = cn.build_D(RT)
    assert np.allclose(cn.residue(d, 1), np.diag([RT, -RT]), atol=1e-15)
    assert np.allclose(cn.residue(d, 1j), np.diag([-RT, RT]), atol=1e-15)
    assert np.allclose(cn.residue(d, -1), np.diag([RT, -RT]), atol=1e-15)
    assert np.max(np.abs(sum(cn.residue(d, p) for p in cn.FOUR_POLES))) < 1e-15
    assert INF not in d.poles


def test_nabla_tilde_residues():
    c = cn.build_nabla_tilde(RT)
    assert np.allclose(cn.residue(c, 1), [[0, RT], [RT, 0]], atol=1e-15)
    # direct limit (z-1) A(z) from the closed form dz/(z^4-1)
    z = 1 + 1e-7
    a = np.array([[0, 4 * RT], [4 * RT * z * z, 0]]) / (z**4 - 1)
    assert np.allclose((z - 1) * a, cn.residue(c, 1), atol=1e-6)
    l1, l2 = eig2(cn.residue(c, 1j))
    assert sorted([l1.real, l2.real]) == pytest.approx([-RT, RT], abs=1e-14)
    pd = cn.induced_parabolic(c)
    for x, w, line in zip(pd.points, pd.weights, pd.lines):
        assert w == pytest.approx(RT, abs=1e-12)
        assert same_line(line, np.array([x, 1]))


def test_nabla_tilde_regular_at_zero_and_infinity():
    c = cn.build_nabla_tilde(RT)
    assert np.max(np.abs(cn.residue(c, INF))) < 1e-15
    assert np.all(np.isfinite(c(0)))
    z = 3.0 - 2.0j
    ref = np.array([[0, 4 * RT], [4 * RT * z * z, 0]]) / (z**4 - 1)
    assert np.allclose(c(z), ref, atol=1e-14)


def test_phi():
    phi = cn.build_phi()
    rng = np.random.default_rng(3)
    for z in rng.normal(size=20) + 1j * rng.normal(size=20):
        m = phi(z)
        det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
        assert abs(det * (z**4 - 1) / 4j - 1) < 1e-10
        assert abs(m[0, 1] - 2 / (z * z - 1)) < 1e-12
        assert m[0, 0] == 0 and m[1, 1] == 0
    assert phi.residue(1)[0, 1] == 1
    for sq, kern in cn.phi_nilpotency_residuals(RT):
        assert sq < 1e-10 and kern < 1e-10


def test_family_D_tau():
    assert cn.family_D_tau(RT, 0) is not None
    d0 = cn.family_D_tau(RT, 0)
    assert all(np.allclose(cn.residue(d0, p), cn.residue(cn.build_D(RT), p)) for p in cn.FOUR_POLES)
    for tau in (1 + 1j, -0.3 + 2j, 5.0):
        c = cn.family_D_tau(RT, tau)
        for p in cn.FOUR_POLES:
            r = cn.residue(c, p)
            assert abs(np.trace(r)) < 1e-12
            l1, l2 = eig2(r)
            assert sorted([l1.real, l2.real]) == pytest.approx([-RT, RT], abs=1e-9)
            assert abs(l1.imag) < 1e-9


def test_nonresonance():
    assert cn.is_nonresonant(cn.build_D(RT))
    half = cn.MeromorphicConnection(cn.RationalMatrixForm.build([0], [np.diag([0.5, -0.5])]))
    assert not cn.is_nonresonant(half)
    assert cn.is_nonresonant(cn.build_nabla_s3(0.25))
    with pytest.raises(cn.UnsupportedStructure):
        cn.induced_parabolic(half)


def test_induced_parabolic_D():
    pd = cn.induced_parabolic(cn.build_D(RT))
    assert same_line(pd.lines[0], np.array([1, 0]))
    assert same_line(pd.lines[1], np.array([0, 1]))


def test_parabolic_degree():
    for k in (3, 5, 7):
        rt = (k - 1) / (2 * k)
        pd = cn.induced_parabolic(cn.build_nabla_tilde(rt))
        assert cn.parabolic_degree(pd, -1, [True] * 4) == pytest.approx(4 * rt - 1, abs=1e-12)
    pd = cn.induced_parabolic(cn.build_nabla_tilde(RT))
    assert cn.parabolic_degree(pd, -1, [True] * 4) == pytest.approx(1 / 3, abs=1e-12)
    assert cn.parabolic_degree(pd, 0, [False] * 4) == pytest.approx(-4 * RT, abs=1e-12)
    with pytest.raises(ValueError):
        cn.parabolic_degree(pd, 0, [True])


def test_residue_sum_and_validate():
    for c in (cn.build_nabla_s3(RT), cn.build_D(RT), cn.build_nabla_tilde(RT)):
        s = sum(cn.residue(c, p) for p in c.poles)
        assert np.max(np.abs(s)) < 1e-10
        assert c.form.validate()
    with pytest.raises(cn.DomainError):
        cn.residue(cn.build_D(RT), 0)


def test_pullback_period_c():
    c1 = cn.pullback_period_c()
    c2 = cn.pullback_period_c(center=0.6 + 0.6j, radius=0.8)
    assert c1 > 0
    assert abs(c1 - c2) < 1e-7
    tau = cn.tau_of_t(2.0, c1)
    assert abs(np.angle(tau) - np.pi / 4) < 1e-14


def test_json_roundtrip():
    f = cn.build_nabla_tilde(RT).form
    g = cn.RationalMatrixForm.from_json(f.to_json())
    assert np.allclose(g(0.3 + 0.2j), f(0.3 + 0.2j))
    assert cn.by_label("D", RT).label == "D"
