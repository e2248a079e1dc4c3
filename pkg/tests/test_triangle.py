import math

import numpy as np
import pytest

from monodromy_lab import connections as cn
from monodromy_lab import transport as tr
from monodromy_lab import triangle as tri
from monodromy_lab.sl2core import is_pm_identity, trace


def test_matrices_rho_third():
    x0, x1, xi = tri.triangle_matrices(1 / 3)
    for m in (x0, x1, xi):
        assert np.max(np.abs(m.imag)) == 0
    assert abs(trace(x1) + 1) < 1e-12
    assert is_pm_identity(xi @ x1 @ x0, 1e-9) != 0


def test_matrices_unitary_below_quarter():
    mats = tri.triangle_matrices(1 / 8)
    assert any(np.max(np.abs(m.imag)) > 0 for m in mats)
    for m in mats:
        assert np.max(np.abs(m @ m.conj().T - np.eye(2))) < 1e-9


def test_branch_degeneracy():
    with pytest.raises(tri.BranchDegeneracy):
        tri.triangle_matrices(0.25)
    with pytest.raises(tri.DomainError):
        tri.triangle_matrices(0.6)


def test_fixed_points():
    td = tri.TriangleData.for_k(3)
    assert abs(complex(td.p0) - 1j) < 1e-12
    assert abs(complex(td.pinf) - 1j * (2 + math.sqrt(3))) < 1e-12
    th = 0.7
    rot = np.array([[math.cos(th), -math.sin(th)], [math.sin(th), math.cos(th)]])
    assert abs(complex(tri.fixed_point(rot)) - 1j) < 1e-12
    with pytest.raises(tri.DomainError):
        tri.fixed_point(np.diag([2.0, 0.5]))


def test_rotation_derivatives():
    td = tri.TriangleData.for_k(3)
    d0, d1, _ = td.derivatives()
    assert abs(d0 + 1j) < 1e-12
    assert abs(d1 - np.exp(-2j * np.pi / 3)) < 1e-12
    assert abs(tri.rotation_derivative(np.eye(2), 1j) - 1) < 1e-15
    with pytest.raises(tri.DomainError):
        tri.rotation_derivative(td.X0, 2j)


def test_orders():
    td = tri.TriangleData.for_k(3)
    assert tri.order_in_psl2(td.X0) == 4
    assert tri.order_in_psl2(td.X1) == 3
    assert tri.order_in_psl2(np.eye(2)) == 1
    assert tri.order_in_psl2(np.diag([2.0, 0.5]), 10) is None


def test_table_k3_to_8():
    for row in tri.report(range(3, 9)):
        k = row["k"]
        assert row["fixed_point_err"] < 1e-9 and row["rotation_err"] < 1e-9
        assert row["relation_sign"] != 0
        assert row["orders"] == (4, k, 4)
        assert abs(row["tr_x1"] + 2 * math.cos(math.pi / k)) < 1e-10
        td = tri.TriangleData.for_k(k)
        assert abs(trace(td.X0) - math.sqrt(2)) < 1e-10
        assert all(np.max(np.abs(m.imag)) == 0 for m in (td.X0, td.X1, td.Xinf))
        angles = td.angles()
        assert angles == pytest.approx((math.pi / 4, math.pi / k, math.pi / 4), abs=1e-9)


def test_matches_nabla_s3_monodromy():
    rt = 1 / 3
    conn = cn.build_nabla_s3(rt)
    rep = tr.monodromy(conn, tr.sphere_loops(conn.form.poles))
    m0, m1 = rep.images["g0"], rep.images["g1"]
    x0, x1, _ = tri.triangle_matrices(rt)
    assert abs(trace(m0) - trace(x0)) < 1e-6
    assert abs(trace(m1) - trace(x1)) < 1e-6
    assert abs(trace(m1 @ m0) - trace(x1 @ x0)) < 1e-6
