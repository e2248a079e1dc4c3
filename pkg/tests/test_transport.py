import math

import numpy as np
import pytest
from scipy.linalg import expm

from monodromy_lab import connections as cn
from monodromy_lab import transport as tr
from monodromy_lab.sl2core import det, trace

RT = 1 / 3


class ZeroSystem:
    singularities = ()

    def field(self, z, v):
        return np.zeros(4, complex)


def diag_pole(a):
    return cn.MeromorphicConnection(cn.RationalMatrixForm.build([0], [np.diag([a, -a])]))


def unit_circle():
    return tr.Loop((tr.PathSegment.arc(0, 1, 0, 2 * np.pi),), 1 + 0j)


def test_zero_system_gives_identity():
    lp = tr.Loop((tr.PathSegment.line(0, 1 + 1j), tr.PathSegment.line(1 + 1j, 2)), 0j)
    assert np.allclose(tr.transport(ZeroSystem(), lp), np.eye(2), atol=1e-14)


def test_diagonal_scalar_holonomy():
    a = 0.23
    m = tr.transport(diag_pole(a), unit_circle())
    ref = np.diag([np.exp(-2j * np.pi * a), np.exp(2j * np.pi * a)])
    assert np.max(np.abs(m - ref)) < 1e-9


def test_constant_system_matrix_exponential():
    a = np.array([[0.3, 1 - 0.5j], [0.2j, -0.3]])
    form = cn.RationalMatrixForm.build([], [], [a])
    seg = tr.PathSegment.line(0.1, 1.3 + 0.4j)
    m = tr.transport(tr.SphereSystem(form), tr.Loop((seg,), 0.1 + 0j))
    ref = expm(-a * (seg.z1 - seg.z0))
    assert np.max(np.abs(m - ref)) < 1e-10


def test_tolerance_refinement_converges():
    a = np.array([[0.1, 3.0], [-3.0, -0.1]])
    form = cn.RationalMatrixForm.build([], [], [a])
    seg = tr.PathSegment.line(0, 6)
    ref = expm(-6 * a)
    errs = [np.max(np.abs(tr.transport(tr.SphereSystem(form), tr.Loop((seg,), 0j), tol) - ref))
            for tol in (1e-3, 1e-6, 1e-9, 1e-12)]
    for coarse, fine in zip(errs, errs[1:]):
        assert fine <= coarse + 1e-13
    assert errs[-1] < 1e-10 < errs[0]


def test_sphere_loops_relation_and_diagonal_oracle():
    loops = tr.sphere_loops(cn.FOUR_POLES)
    assert [lp.label for lp in loops] == ["g1", "g2", "g3", "g4"]
    assert all(lp.closed and lp.basepoint == 0 for lp in loops)
    rep = tr.monodromy(cn.build_D(RT), loops)
    prod = rep.evaluate([("g4", 1), ("g3", 1), ("g2", 1), ("g1", 1)])
    assert np.max(np.abs(prod - np.eye(2))) < 1e-8
    ref = np.diag([np.exp(-2j * np.pi * RT), np.exp(2j * np.pi * RT)])
    assert np.max(np.abs(rep.images["g1"] - ref)) < 1e-8
    for m in rep.images.values():
        assert abs(m[0, 1]) < 1e-8 and abs(m[1, 0]) < 1e-8
    assert rep.signs == [1]


def test_homotopic_radius_change():
    conn = cn.build_nabla_tilde(RT)
    m1 = tr.transport(conn, tr.pole_loop(1, 0, 0.3))
    m2 = tr.transport(conn, tr.pole_loop(1, 0, 0.25))
    m3 = tr.transport(conn, tr.pole_loop(1, 0, 0.4, via=(0.5 - 0.2j,)))
    assert np.max(np.abs(m1 - m2)) < 1e-8
    assert np.max(np.abs(m1 - m3)) < 1e-7


def test_nabla_s3_monodromy_traces():
    conn = cn.build_nabla_s3(RT)
    loops = tr.sphere_loops(conn.form.poles)
    assert loops[0].basepoint == -1
    rep = tr.monodromy(conn, loops)
    assert abs(trace(rep.images["g0"]) - math.sqrt(2)) < 1e-6
    assert abs(trace(rep.images["g1"]) - 2 * math.cos(2 * math.pi * RT)) < 1e-6


def test_local_monodromy_checks():
    assert tr.local_monodromy_check(cn.build_nabla_tilde(RT), 1) < 1e-6
    assert tr.local_monodromy_check(cn.build_nabla_s3(RT), 0) < 1e-6
    assert tr.local_monodromy_check(diag_pole(0.1), 0) < 1e-9
    with pytest.raises(cn.UnsupportedStructure):
        tr.local_monodromy_check(diag_pole(0.5), 0)


def test_det_and_reversal():
    conn = cn.build_nabla_tilde(RT)
    for lp in tr.sphere_loops(cn.FOUR_POLES):
        m = tr.transport(conn, lp)
        assert abs(det(m) - 1) < 1e-8
        mr = tr.transport(conn, lp.reversed())
        assert np.max(np.abs(mr @ m - np.eye(2))) < 1e-8


def test_errors():
    conn = cn.build_D(RT)
    bad = tr.Loop((tr.PathSegment.line(0, 0.9),), 0j)
    with pytest.raises(tr.ProximityError):
        tr.transport(conn, bad)
    with pytest.raises(tr.ConfigurationError):
        tr.sphere_loops(cn.FOUR_POLES, basepoint=1)
    with pytest.raises(ValueError):
        tr.Loop((tr.PathSegment.line(0, 1), tr.PathSegment.line(2, 3)), 0j)
    with pytest.raises(ValueError):
        tr.Representation({"a": 2 * np.eye(2)})


def test_loop_json_roundtrip():
    loops = tr.sphere_loops(cn.FOUR_POLES)
    back = tr.loops_from_json(tr.loops_to_json(loops))
    assert back == loops
