from fractions import Fraction

import numpy as np
import pytest

from monodromy_lab import hiprec
from monodromy_lab import torus as tor
from monodromy_lab import transport as tr
from monodromy_lab.sl2core import trace


@pytest.mark.parametrize("t", [0.0, 3.0])
def test_matches_float_transport(t):
    traces, res = hiprec.family_traces(t, Fraction(1, 6))
    conn = tor.family_t(t, 1 / 6)
    loops, diag = tor.torus_loops(), tor.diagonal_loops()
    ref = {"x": loops["x"], "y": loops["y"], "z1": diag["yx"], "z2": diag["yinv_x"]}
    for name, lp in ref.items():
        f = trace(tr.transport(conn, lp, 1e-12))
        h = hiprec.to_complex(traces[name])
        assert abs(f - h) < 1e-9 * max(1, abs(h))
    assert abs(hiprec.to_complex(res["cubic"])) < 1e-15
    assert abs(hiprec.to_complex(res["identity"])) < 1e-15


def test_large_t_stays_on_variety():
    traces, res = hiprec.family_traces(12.0, Fraction(1, 6))
    x = hiprec.to_complex(traces["x"])
    assert abs(x) > 1e3
    assert abs(hiprec.to_complex(res["cubic"])) < 1e-10
    assert abs(hiprec.to_complex(traces["z1"]).imag) < 1e-12
    assert abs(hiprec.to_complex(traces["z2"]).imag) < 1e-12
    # the balls are genuinely tight
    assert float(traces["x"].real.rad()) < 1e-20 * abs(x)


def test_monodromy_det():
    m = hiprec.family_monodromy(2.0, Fraction(1, 6), hiprec.LOOP_SEGMENTS["x"])
    d = m[0][0] * m[1][1] - m[0][1] * m[1][0]
    assert abs(hiprec.to_complex(d) - 1) < 1e-15
    assert hiprec.to_numpy(m).shape == (2, 2)


def test_segment_near_lattice_rejected():
    with pytest.raises(ValueError):
        hiprec.family_monodromy(1.0, Fraction(1, 6), [(0.5 + 0.02j, 1.5 + 0.02j)])


def test_digits_grow_with_t():
    assert hiprec.digits_for(60) > hiprec.digits_for(10) >= 18
    assert np.isfinite(hiprec.STEP_RATIO)
