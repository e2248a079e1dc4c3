import math
from fractions import Fraction

import numpy as np
import pytest

from monodromy_lab import characters as ch
from monodromy_lab import connections as cn
from monodromy_lab import transport as tr
from monodromy_lab.sl2core import trace

S6 = math.sqrt(6)


def on_variety_points(rho, n, rng):
    """Random torus points: pick x, y and solve the quadratic for z."""
    kappa = 2 * math.cos(2 * math.pi * rho)
    out = []
    for _ in range(n):
        x, y = rng.normal(size=2) + 1j * rng.normal(size=2)
        b, c = -x * y, x * x + y * y - 2 - kappa
        z = (-b + np.sqrt(b * b - 4 * c)) / 2
        out.append(ch.TorusTraces(x, y, z, rho))
    return out


def test_torus_residual_examples():
    assert ch.torus_residual(ch.TorusTraces(2, 2, 2, 0.0)) == 0
    assert ch.torus_residual(ch.TorusTraces(S6, S6, 3, 1 / 6)) < 1e-12
    assert ch.torus_residual(ch.TorusTraces(0, 0, math.sqrt(3), 1 / 6)) < 1e-12


def test_sphere_residual_examples():
    assert ch.sphere_residual(ch.SphereTraces(-4, -4, -7, -1)) < 1e-12
    rt = 0.3
    mu = 2 * math.cos(2 * math.pi * rt)
    assert ch.sphere_residual(ch.SphereTraces(2, 2, 2 * math.cos(4 * math.pi * rt), mu)) < 1e-12
    # probe evaluated exactly: 4+4+4+8-48+12+16 = 0; z = 3 gives 17+12-56+12+16 = 1
    assert ch.sphere_residual(ch.SphereTraces(2, 2, 2, 2)) == 0
    assert ch.sphere_residual(ch.SphereTraces(2, 2, 3, 2)) == pytest.approx(1)


def test_cv_map_examples(rng):
    s = ch.cv_map(ch.TorusTraces(0, 0, 0, 1 / 6))
    assert s.as_tuple() == (2, 2, 2)
    s = ch.cv_map(ch.TorusTraces(S6, S6, 3, 1 / 6))
    assert np.allclose(s.as_tuple(), (-4, -4, -7), atol=1e-13) and s.mu == pytest.approx(-1)
    for rho in (1 / 6, 1 / 5, 0.3):
        for t in on_variety_points(rho, 100, rng):
            assert ch.torus_residual(t) < 1e-10 * ch.torus_scale(t)
            img = ch.cv_map(t)
            scale = max(1.0, *(abs(v) ** 2 for v in img.as_tuple()))
            assert ch.sphere_residual(img) < 1e-9 * scale**2


def test_factorization(rng):
    for _ in range(100):
        x, y, z = rng.normal(size=3) + 1j * rng.normal(size=3)
        mu = rng.uniform(-2, 2)
        assert ch.factorization_residual(x, y, z, mu) < 1e-9
    assert ch.factorization_residual(Fraction(0), Fraction(0), Fraction(0), Fraction(0),
                                     relative=False) == 0
    x, y, z, mu = S6, S6, 3.0, -1.0
    assert abs(x * x + y * y + z * z - x * y * z - 4 + mu * mu) < 1e-12


def test_kappa_mu_bookkeeping():
    for rho in np.linspace(0.01, 0.49, 25):
        mu = ch.mu_of(ch.rho_tilde(rho))
        assert abs((2 - mu * mu) - 2 * math.cos(2 * math.pi * rho)) < 1e-12


def test_z2_from():
    assert ch.z2_from(2, 3, 4) == 2
    assert ch.z2_from(0, 5.5, 1.25) == -1.25


def test_reality_conclusion():
    assert ch.reality_conclusion(3, 1, 2, 1e-9) is ch.Reality.Y_REAL_FORCED
    assert ch.reality_conclusion(0, 1.5, -0.3, 1e-9) is ch.Reality.X_ZERO_BRANCH
    assert ch.reality_conclusion(1 + 0.5j, 1, 2, 1e-9) is ch.Reality.INCONCLUSIVE


def test_goldman_classify_examples():
    lab = ch.goldman_classify(ch.TorusTraces(1, 1, 1, 1 / 4))
    assert lab.kind is ch.Kind.SU2_COMPACT
    lab = ch.goldman_classify(ch.TorusTraces(S6, S6, 3, 1 / 6))
    assert lab.kind is ch.Kind.SL2R_NONCOMPACT and lab.signature == (0, 0, 0)
    # 2.449 itself leaves a residual of ~1e-3, so the nudge is applied to sqrt 6
    lab = ch.goldman_classify(ch.TorusTraces(S6 + 1e-9j, S6, 3, 1 / 6), 1e-6)
    assert lab.kind is ch.Kind.SL2R_NONCOMPACT


def test_goldman_nonreal_boundary_and_errors():
    x, y = 1.5 + 0.5j, 0.7
    t = on_variety_points(0.2, 1, np.random.default_rng(1))[0]
    assert ch.goldman_classify(t).kind is ch.Kind.NON_REAL
    # reducible boundary point: (2, 2, 2) at rho -> 0 limit uses kappa = 2
    assert ch.goldman_classify(ch.TorusTraces(2, 2, 2, 0.0)).kind is ch.Kind.NEAR_BOUNDARY
    with pytest.raises(ch.DomainError):
        ch.goldman_classify(ch.TorusTraces(x, y, 0.0, 1 / 6))


def test_sign_change_orbit():
    orb = ch.sign_change_orbit(ch.TorusTraces(1, 2, 3, 0.1))
    assert {o.as_tuple() for o in orb} == {(1, 2, 3), (1, -2, -3), (-1, 2, -3), (-1, -2, 3)}
    t = ch.TorusTraces(S6, S6, 3, 1 / 6)
    for o in ch.sign_change_orbit(t):
        assert ch.torus_residual(o) == pytest.approx(ch.torus_residual(t), abs=1e-12)
        lab = ch.goldman_classify(o)
        assert lab.kind is ch.Kind.SL2R_NONCOMPACT and lab.signature == (0, 0, 0)
    assert len(ch.sign_change_orbit(ch.TorusTraces(0, 0, 0, 0.1))) == 1


def test_ffuchs_target():
    torus, sphere = ch.ffuchs_target(3)
    assert np.allclose(torus.as_tuple(), (S6, S6, 3), atol=1e-14) and torus.rho == Fraction(1, 6)
    assert np.allclose(sphere.as_tuple(), (-4, -4, -7), atol=1e-14)
    assert sphere.mu == pytest.approx(-1)
    for k in range(3, 11):
        torus, sphere = ch.ffuchs_target(k)
        img = ch.cv_map(torus)
        assert max(abs(a - b) for a, b in zip(img.as_tuple(), sphere.as_tuple())) < 1e-12
        assert abs(img.mu - sphere.mu) < 1e-12
        assert ch.torus_residual(torus) < 1e-12
    with pytest.raises(ch.DomainError):
        ch.ffuchs_target(2)


def test_monodromy_traces_on_sphere_variety():
    rep = tr.monodromy(cn.build_nabla_tilde(1 / 3), tr.sphere_loops(cn.FOUR_POLES))
    m = rep.images
    s = ch.SphereTraces(trace(m["g2"] @ m["g1"]), trace(m["g3"] @ m["g2"]),
                        trace(m["g3"] @ m["g1"]), ch.mu_of(1 / 3))
    assert ch.sphere_residual(s) < 1e-6


def test_csv_columns():
    cols = ch.csv_columns()
    assert cols[0] == "t" and "re_z2" in cols and "flag" in cols
    assert "sphere_consistency" in ch.csv_columns(True)
