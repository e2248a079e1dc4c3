"""Multiprecision transport for the torus t-family.

Along the family the monodromy entries grow like exp(t pi / 4) per loop, so
the trace coordinates reach 1e20 (x, y) and 1e41 (z2) by t = 60.  Checking
the cubic relation or Im z2 there at absolute tolerances needs roughly
0.7 t + 20 significant digits, far beyond double precision.  This module
integrates the same system with ball arithmetic (python-flint) by a Taylor
series method on straight segments.

On a segment w = w0 + lam u, u in [0, 1], the system reads

    Psi' = -[[th, lam g_minus], [lam g_plus, -th]] Psi,   th = a lam + chi conj(lam)

and g_pm are analytic in u away from the lattice, so the Taylor series of Psi
around any point converges up to the nearest lattice point.  Steps use a
fixed fraction of that radius; the coefficient recurrence is exact.

python-flint keeps its working precision in a process-global context, so
calls must not run concurrently in threads of one process.
"""
from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
from flint import acb, acb_series, arb, ctx

# step = STEP_RATIO * (distance to the lattice); each Taylor term gains ~2 nats
STEP_RATIO = math.exp(-2.0)


def digits_for(t: float) -> int:
    """Working digits: z2 ~ exp(t pi / 2.3) needs 0.68 t digits, plus ~18 spare."""
    return int(18 + 0.7 * max(float(t), 0.0))


def _to_arb(v):
    if isinstance(v, arb):
        return v
    if isinstance(v, Fraction):
        return arb(v.numerator) / v.denominator
    return arb(v)


class _Params:
    """Family parameters (a, chi, d, K) as balls at the current precision."""

    def __init__(self, t, rho):
        pi = arb.pi()
        i = acb(0, 1)
        t = _to_arb(t)
        rho = _to_arb(rho)
        a0 = pi * (1 + i) / 4
        chi0 = pi * (1 - i) / 4
        self.a = (1 - t) * a0
        self.chi = -chi0
        d = 2 * self.chi / pi
        self.d = {+1: d, -1: -d}
        tau = acb(0, 1)
        th1p = acb_series([acb(0), acb(1)], prec=2).modular_theta(tau)[0].coeffs()[1]
        # h = K exp(-pi dd w) theta1(pi (w - dd)) / theta1(pi w), residue r at 0
        self.k = {s: rho * th1p / _theta_scalar(-dd) for s, dd in self.d.items()}


def _theta_scalar(z):
    return acb_series([z], prec=1).modular_theta(acb(0, 1))[0].coeffs()[0]


def _theta_series(z0, lam, n):
    """Taylor coefficients in u of theta1(pi (z0 + lam u))."""
    return acb_series([z0, lam], prec=n).modular_theta(acb(0, 1))[0]


def _coefficients(p: _Params, wc, lam, n):
    """Series of lam g_plus and lam g_minus around w = wc along direction lam."""
    pi = arb.pi()
    cw = wc.conjugate()
    clam = lam.conjugate()
    inv_den = _theta_series(wc, lam, n).inv()
    out = {}
    for s in (+1, -1):
        dd = p.d[s]
        lin = acb_series([2 * s * p.chi * cw - pi * dd * wc, 2 * s * p.chi * clam - pi * dd * lam],
                         prec=n)
        out[s] = (lam * p.k[s]) * lin.exp() * _theta_series(wc - dd, lam, n) * inv_den
    return out[+1].coeffs(), out[-1].coeffs()


def _taylor_step(th, fp, fm, h, n):
    """Psi(h) for Psi' = -[[th, fm], [fp, -th]] Psi, Psi(0) = I, by recurrence."""
    # columns (p, r); p_{k+1} = -(th p_k + sum fm_j r_{k-j}) / (k+1)
    cols = []
    for p0, r0 in ((acb(1), acb(0)), (acb(0), acb(1))):
        p = [p0]
        r = [r0]
        for k in range(n - 1):
            sp = th * p[k]
            sr = -th * r[k]
            for j in range(k + 1):
                sp += fm[j] * r[k - j]
                sr += fp[j] * p[k - j]
            p.append(-sp / (k + 1))
            r.append(-sr / (k + 1))
        cols.append((p, r))
    m = []
    for p, r in cols:
        pv = acb(0)
        rv = acb(0)
        for c in reversed(p):
            pv = pv * h + c
        for c in reversed(r):
            rv = rv * h + c
        m.append((pv, rv))
    (a11, a21), (a12, a22) = m
    return [[a11, a12], [a21, a22]]


def _matmul(x, y):
    return [[x[0][0] * y[0][0] + x[0][1] * y[1][0], x[0][0] * y[0][1] + x[0][1] * y[1][1]],
            [x[1][0] * y[0][0] + x[1][1] * y[1][0], x[1][0] * y[0][1] + x[1][1] * y[1][1]]]


def _lattice_distance(w: complex) -> float:
    fx = w.real - math.floor(w.real)
    fy = w.imag - math.floor(w.imag)
    return math.hypot(min(fx, 1 - fx), min(fy, 1 - fy))


def segment_transport(p: _Params, w0: complex, w1: complex, digits: int):
    """Transport matrix (list of acb rows) along the straight segment w0 -> w1."""
    lam_c = complex(w1) - complex(w0)
    # translate by a lattice vector so theta arguments stay moderate
    shift = complex(math.floor(w0.real), math.floor(w0.imag))
    w0 = complex(w0) - shift
    lam = acb(lam_c.real, lam_c.imag)
    alen = abs(lam_c)
    th = p.a * lam + p.chi * lam.conjugate()
    nterms = int(digits * math.log(10) / 2) + 12
    psi = [[acb(1), acb(0)], [acb(0), acb(1)]]
    u = 0.0
    while u < 1.0:
        wc_f = w0 + lam_c * u
        dist = _lattice_distance(wc_f)
        if dist < 0.05:
            raise ValueError(f"segment passes within {dist:.3g} of the marked point")
        u_next = min(u + STEP_RATIO * dist / alen, 1.0)
        # nodes are exact floats and steps their exact difference, so steps join
        wc = acb(w0.real, w0.imag) + lam * arb(u)
        fp, fm = _coefficients(p, wc, lam, nterms)
        step = _taylor_step(th, fp, fm, arb(u_next) - arb(u), nterms)
        psi = _matmul(step, psi)
        u = u_next
    return psi


def family_monodromy(t, rho, segments, digits=None):
    """Transport along a chain of straight segments [(w0, w1), ...] for family_t(t, rho).

    ``t`` may be a float or a decimal string; returns a 2x2 list of acb.
    """
    digits = digits or digits_for(_float(t))
    old_cap = ctx.cap
    ctx.cap = int(digits * math.log(10) / 2) + 12
    try:
        with ctx.workprec(int(digits * 3.33) + 16):
            return _chain(t, rho, segments, digits)
    finally:
        ctx.cap = old_cap


def _float(v) -> float:
    return float(v.mid()) if isinstance(v, arb) else float(v)


def _chain(t, rho, segments, digits):
    p = _Params(t, rho)
    psi = [[acb(1), acb(0)], [acb(0), acb(1)]]
    for w0, w1 in segments:
        psi = _matmul(segment_transport(p, w0, w1, digits), psi)
    return psi


def trace(m):
    return m[0][0] + m[1][1]


def to_complex(z) -> complex:
    return complex(float(z.real.mid()), float(z.imag.mid()))


def to_numpy(m) -> np.ndarray:
    return np.array([[to_complex(m[i][j]) for j in range(2)] for i in range(2)])


# loops of the trace coordinates, as straight segments in the flat chart
P0 = (1 + 1j) / 4
LOOP_SEGMENTS = {
    "x": [(P0, P0 + 1)],
    "y": [(P0, P0 + 1j)],
    "z1": [(0.5, 1.5 + 1j)],
    "z2": [(0.5, 1.5 - 1j)],
}


def family_traces(t, rho, which=("x", "y", "z1", "z2"), digits=None):
    """Trace coordinates of family_t(t, rho) as acb balls, plus the cubic residual.

    Returns (traces, residuals): traces maps names to acb balls; residuals
    holds "cubic" = x^2 + y^2 + z1^2 - x y z1 - 2 - 2 cos(2 pi rho) and
    "identity" = z2 - (x y - z1) when the needed traces were requested.
    ``t`` and ``rho`` may be floats, Fractions or arb balls.
    """
    digits = digits or digits_for(_float(t))
    old_cap = ctx.cap
    ctx.cap = int(digits * math.log(10) / 2) + 12
    try:
        with ctx.workprec(int(digits * 3.33) + 16):
            p = _Params(t, rho)
            out = {}
            for name in which:
                psi = [[acb(1), acb(0)], [acb(0), acb(1)]]
                for w0, w1 in LOOP_SEGMENTS[name]:
                    psi = _matmul(segment_transport(p, w0, w1, digits), psi)
                out[name] = trace(psi)
            res = {}
            if {"x", "y", "z1"} <= set(out):
                x, y, z = out["x"], out["y"], out["z1"]
                kappa = 2 * (2 * arb.pi() * _to_arb(rho)).cos()
                res["cubic"] = x * x + y * y + z * z - x * y * z - 2 - kappa
                if "z2" in out:
                    res["identity"] = out["z2"] - (x * y - z)
            return out, res
    finally:
        ctx.cap = old_cap
