import math

import numpy as np
import pytest

from monodromy_lab import characters as ch
from monodromy_lab import torus as tor
from monodromy_lab import transport as tr
from monodromy_lab.sl2core import trace

RHO = 1 / 6


@pytest.fixture(scope="module")
def t0_traces():
    conn = tor.family_t(0.0, RHO)
    loops, diag = tor.torus_loops(), tor.diagonal_loops()
    return {n: trace(tr.transport(conn, lp)) for n, lp in
            (("x", loops["x"]), ("y", loops["y"]), ("comm", loops["comm"]),
             ("z1", diag["yx"]), ("z2", diag["yinv_x"]))}


def test_commutator_trace(t0_traces):
    assert abs(t0_traces["comm"] - 2 * math.cos(2 * math.pi * RHO)) < 1e-6


def test_t0_point_matches_sphere_oracle(t0_traces):
    # D at rho~ = 1/3: Tr M2M1 = 2 and Tr M3M1 = 2 cos(4 pi / 3) = -1
    assert abs(t0_traces["x"]) < 1e-5
    assert abs(t0_traces["z1"] ** 2 - 3) < 1e-5
    assert abs((2 - t0_traces["z1"] ** 2) - 2 * math.cos(4 * math.pi / 3)) < 1e-5


def test_t0_on_variety_and_real(t0_traces):
    x, y, z1, z2 = (t0_traces[n] for n in ("x", "y", "z1", "z2"))
    assert abs(ch.torus_poly(x, y, z1, RHO)) < 1e-6
    assert abs(z1.imag) < 1e-6 and abs(z2.imag) < 1e-6
    assert abs(z2 - (x * y - z1)) < 1e-6


def test_family_parameters():
    c0 = tor.family_t(0.0, RHO)
    assert c0.a == pytest.approx(tor.A0)
    assert abs(c0.chi) == pytest.approx(abs(tor.CHI0))
    c1 = tor.family_t(1.0, RHO)
    assert c1.a == 0
    for t in (0.3, 2.0, 7.5):
        ct = tor.family_t(t, RHO)
        assert ct.chi == c0.chi and ct.rho == c0.rho
        assert ct.a - c0.a == pytest.approx(-t * np.pi * (1 + 1j) / 4)


def test_eta_symmetric():
    assert tor.eta_symmetric(tor.A0, tor.CHI0)
    for t in (-3.0, 0.0, 0.5, 40.0):
        assert tor.eta_symmetric((1 - t) * tor.A0, tor.CHI0)
        assert tor.eta_symmetric((1 - t) * tor.A0, -tor.CHI0)
    assert not tor.eta_symmetric(1.0, tor.CHI0)


def test_degenerate_and_domain():
    with pytest.raises(tor.DegenerateBundle):
        tor.build_torus_conn(0.1, np.pi / 2, RHO)
    with pytest.raises(tor.DomainError):
        tor.build_torus_conn(0.1, tor.CHI0, 0.7)


def test_loops():
    loops = tor.torus_loops()
    p0 = (1 + 1j) / 4
    gx = loops["x"]
    assert gx.start == p0 and abs(gx.end - (p0 + 1)) < 1e-15
    comm = loops["comm"]
    assert comm.closed
    # total winding around the lifts of o enclosed by the square
    total = sum(comm.winding_number(complex(i, j)) for i in range(-1, 3) for j in range(-1, 3))
    assert abs(total) == 1 and abs(comm.winding_number(1 + 1j)) == 1
    for lp in list(loops.values()) + list(tor.diagonal_loops().values()):
        for p in (0, 1, 1j, 1 + 1j, 2 + 1j, 1 - 1j, 2):
            assert lp.distance_to(p) >= 0.2


def test_sections():
    for t in (0.0, 10.0):
        conn = tor.family_t(t, RHO)
        assert tor.periodicity_residual(conn) < 1e-8
        assert tor.holomorphy_residual(conn) < 1e-5
        assert abs(tor.quadratic_residue(conn) - RHO**2) < 1e-8


def test_rescaling_invariance():
    conn = tor.family_t(1.5, RHO)
    resc = conn.rescaled(2.5 - 1j)
    loops = tor.torus_loops()
    for lp in (loops["x"], loops["y"], tor.diagonal_loops()["yx"]):
        a = trace(tr.transport(conn, lp, 1e-12))
        b = trace(tr.transport(resc, lp, 1e-12))
        assert abs(a - b) < 1e-8 * max(1, abs(a))


def test_json_dump():
    import json
    d = json.loads(tor.family_t(0.0, RHO).to_json())
    assert d["rho"] == RHO and set(d) >= {"a", "chi", "d_plus", "r_minus", "mu_plus"}


@pytest.mark.parametrize("t", [0.0, 2.0])
def test_diagonal_loops_match_products(t):
    conn = tor.family_t(t, RHO)
    loops, diag = tor.torus_loops(), tor.diagonal_loops()
    x = tr.transport(conn, loops["x"], 1e-12)
    y = tr.transport(conn, loops["y"], 1e-12)
    z1 = trace(tr.transport(conn, diag["yx"], 1e-12))
    z2 = trace(tr.transport(conn, diag["yinv_x"], 1e-12))
    assert abs(z1 - trace(y @ x)) < 1e-9 * max(1, abs(z1))
    assert abs(z2 - trace(np.linalg.inv(y) @ x)) < 1e-9 * max(1, abs(z2))
