"""The abelianized family on the square torus C/(Z + iZ) with one marked point.

The connection is

    d + [[theta, g_minus dw], [g_plus dw, -theta]],   theta = a dw + chi dwbar.

Flatness forces dbar g_plus = 2 chi g_plus and dbar g_minus = -2 chi g_minus,
so g_plus = exp(+2 chi wbar) h_plus(w) and g_minus = exp(-2 chi wbar) h_minus(w)
with h_plus, h_minus meromorphic and quasi-periodic.  Periodicity of g_plus,
g_minus fixes the multipliers h(w + l) = exp(-+2 chi conj(l)) h(w); these are
realized by

    h_plus  = r_plus  sigma(w - d) / (sigma(w) sigma(-d)),
    h_minus = r_minus sigma(w + d) / (sigma(w) sigma(d)),      d = 2 chi / pi,

using sigma(w + l) = -exp(eta_l (w + l/2)) sigma(w) with eta_1 = pi,
eta_i = -i pi.  Then h_plus h_minus = r_plus r_minus (P(w) - P(d)), so the
quadratic residue at o is r_plus r_minus = rho^2.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .transport import Loop, PathSegment

Q = np.exp(-np.pi)
NTHETA = 8
_N = np.arange(NTHETA)
_QPOW = 2 * (-1.0) ** _N * Q ** ((_N + 0.5) ** 2)
_ODD = 2 * _N + 1
THETA1_PRIME0 = float(np.sum(_QPOW * _ODD))

A0 = np.pi * (1 + 1j) / 4
CHI0 = np.pi * (1 - 1j) / 4
P0 = (1 + 1j) / 4
ETA = {1: np.pi, 1j: -1j * np.pi}


class DegenerateBundle(ValueError):
    pass


class DomainError(ValueError):
    pass


def theta1(v):
    """Jacobi theta_1(v | q = e^{-pi}), scalar or array argument."""
    v = np.asarray(v, dtype=complex)
    return np.tensordot(np.sin(np.multiply.outer(v, _ODD)), _QPOW, axes=([-1], [0]))


def sigma(w):
    """Weierstrass sigma of the lattice Z + iZ."""
    w = np.asarray(w, dtype=complex)
    return np.exp(np.pi * w * w / 2) * theta1(np.pi * w) / (np.pi * THETA1_PRIME0)


def wp_minus(w, d):
    """P(w) - P(d) via -sigma(w+d) sigma(w-d) / (sigma(w)^2 sigma(d)^2)."""
    return -sigma(w + d) * sigma(w - d) / (sigma(w) ** 2 * sigma(d) ** 2)


def in_half_dual(chi, tol: float = 1e-12) -> bool:
    """chi in (1/2) Gamma*, Gamma* = pi Z + i pi Z."""
    u = 2 * complex(chi) / np.pi
    return abs(u.real - round(u.real)) < tol and abs(u.imag - round(u.imag)) < tol


def _ray(z, direction, tol):
    z = complex(z)
    if abs(z) < tol:
        return True
    u = z / direction
    return abs(u.imag) <= tol * max(1.0, abs(u))


def eta_symmetric(a: complex, chi: complex, tol: float = 1e-12) -> bool:
    if in_half_dual(chi):
        return False
    return ((_ray(chi, 1 - 1j, tol) and _ray(a, 1 + 1j, tol))
            or (_ray(chi, 1 + 1j, tol) and _ray(a, 1 - 1j, tol)))


@dataclass(frozen=True)
class TorusConnection:
    a: complex
    chi: complex
    rho: float
    r_plus: complex
    r_minus: complex
    d_plus: complex
    d_minus: complex
    mu_plus: complex = 0j
    mu_minus: complex = 0j
    window: int = 3
    meta: dict = field(default_factory=dict, compare=False)

    # factors of h in theta form: K exp(-pi w dd) theta1(pi(w - dd)) / theta1(pi w)
    def _h(self, w, dd, r):
        k = r * np.pi * THETA1_PRIME0 / theta1(-np.pi * dd)
        return k * np.exp((-np.pi * dd) * w) * theta1(np.pi * (w - dd)) / theta1(np.pi * w)

    def h_plus(self, w):
        return self._h(w, self.d_plus, self.r_plus)

    def h_minus(self, w):
        return self._h(w, self.d_minus, self.r_minus)

    def gamma_plus(self, w):
        w = np.asarray(w, dtype=complex)
        return np.exp(2 * self.chi * np.conj(w)) * self.h_plus(w)

    def gamma_minus(self, w):
        w = np.asarray(w, dtype=complex)
        return np.exp(-2 * self.chi * np.conj(w)) * self.h_minus(w)

    def rescaled(self, c: complex) -> "TorusConnection":
        return TorusConnection(self.a, self.chi, self.rho, self.r_plus * c, self.r_minus / c,
                               self.d_plus, self.d_minus, window=self.window)

    @property
    def singularities(self):
        n = self.window
        return tuple(complex(i, j) for i in range(-n, n + 2) for j in range(-n, n + 2))

    def field(self, w, v):
        # pure-python scalar path: this is the integrator's inner loop
        th = self.a * v + self.chi * v.conjugate()
        cw = w.conjugate()
        ep = np.exp(2 * self.chi * cw)
        s = np.sin(np.multiply.outer(np.pi * np.array([w, w - self.d_plus, w - self.d_minus]), _ODD)) @ _QPOW
        base = np.pi * THETA1_PRIME0 / s[0]
        hp = self._kp * np.exp(-np.pi * self.d_plus * w) * s[1] * base
        hm = self._km * np.exp(-np.pi * self.d_minus * w) * s[2] * base
        return np.array([th, hm / ep * v, hp * ep * v, -th])

    def system(self):
        return self

    def __post_init__(self):
        object.__setattr__(self, "_kp", self.r_plus / complex(theta1(-np.pi * self.d_plus)))
        object.__setattr__(self, "_km", self.r_minus / complex(theta1(-np.pi * self.d_minus)))

    def to_json(self) -> str:
        enc = lambda z: [complex(z).real, complex(z).imag]  # noqa: E731
        return json.dumps({"a": enc(self.a), "chi": enc(self.chi), "rho": self.rho,
                           "mu_plus": enc(self.mu_plus), "mu_minus": enc(self.mu_minus),
                           "d_plus": enc(self.d_plus), "d_minus": enc(self.d_minus),
                           "r_plus": enc(self.r_plus), "r_minus": enc(self.r_minus)})


def build_torus_conn(a: complex, chi: complex, rho: float) -> TorusConnection:
    if not 0 < rho < 0.5:
        raise DomainError(f"rho {rho} outside (0, 1/2)")
    if in_half_dual(chi):
        raise DegenerateBundle(f"chi = {chi} lies in (1/2) Gamma*")
    d = 2 * complex(chi) / np.pi
    return TorusConnection(complex(a), complex(chi), float(rho), complex(rho), complex(rho), d, -d)


def family_t(t: float, rho: float) -> TorusConnection:
    """nabla^t = nabla^{(1-t) a0, -chi0, rho}; the sign of chi0 is fixed by x(0) = 0."""
    return build_torus_conn((1 - t) * A0, -CHI0, rho)


# --- diagnostics -------------------------------------------------------------

def sample_points(n: int = 50, seed: int = 0, rmin: float = 0.2):
    rng = np.random.default_rng(seed)
    pts = []
    while len(pts) < n:
        w = complex(rng.uniform(0, 1), rng.uniform(0, 1))
        if min(abs(w - complex(i, j)) for i in (0, 1) for j in (0, 1)) > rmin:
            pts.append(w)
    return np.array(pts)


def periodicity_residual(conn: TorusConnection, n: int = 50, seed: int = 0) -> float:
    w = sample_points(n, seed)
    worst = 0.0
    for g in (conn.gamma_plus, conn.gamma_minus):
        base = g(w)
        for lam in (1, 1j):
            worst = max(worst, float(np.max(np.abs(g(w + lam) - base) / np.maximum(1, np.abs(base)))))
    return worst


def holomorphy_residual(conn: TorusConnection, n: int = 50, seed: int = 1, h: float = 1e-4) -> float:
    """Finite-difference check of (dbar -+ 2 chi) gamma_pm = 0."""
    w = sample_points(n, seed)
    worst = 0.0
    for g, sgn in ((conn.gamma_plus, 1), (conn.gamma_minus, -1)):
        dx = (g(w + h) - g(w - h)) / (2 * h)
        dy = (g(w + 1j * h) - g(w - 1j * h)) / (2 * h)
        dbar = 0.5 * (dx + 1j * dy)
        res = dbar - sgn * 2 * conn.chi * g(w)
        worst = max(worst, float(np.max(np.abs(res) / np.maximum(1, np.abs(g(w))))))
    return worst


def quadratic_residue(conn: TorusConnection, eps: float = 1e-3) -> complex:
    """Coefficient of w^-2 in gamma_plus gamma_minus, by a contour average."""
    th = np.linspace(0, 2 * np.pi, 64, endpoint=False)
    w = eps * np.exp(1j * th)
    vals = conn.gamma_plus(w) * conn.gamma_minus(w) * w * w
    return complex(np.mean(vals))


# --- loops ---------------------------------------------------------------------

def torus_loops():
    """gamma_x, gamma_y based at p0 = (1+i)/4 and the commutator loop.

    Paths live in the flat chart C; gamma_x and gamma_y close up modulo the
    lattice.  gamma_comm = gamma_y^-1 gamma_x^-1 gamma_y gamma_x is the square
    p0 -> p0+1 -> p0+1+i -> p0+i -> p0.
    """
    gx = Loop((PathSegment.line(P0, P0 + 1),), P0, "x")
    gy = Loop((PathSegment.line(P0, P0 + 1j),), P0, "y")
    comm = Loop((PathSegment.line(P0, P0 + 1), PathSegment.line(P0 + 1, P0 + 1 + 1j),
                 PathSegment.line(P0 + 1 + 1j, P0 + 1j), PathSegment.line(P0 + 1j, P0)), P0, "comm")
    return {"x": gx, "y": gy, "comm": comm}


def diagonal_loops():
    """Straight loops freely homotopic to gamma_y gamma_x and gamma_y^-1 gamma_x.

    Both lines stay at distance 1/(2 sqrt 2) from the lattice.
    """
    b1 = 0.5 + 0j
    yx = Loop((PathSegment.line(b1, b1 + 1 + 1j),), b1, "yx")
    b2 = 0.5 + 0j
    yinvx = Loop((PathSegment.line(b2, b2 + 1 - 1j),), b2, "yinv_x")
    return {"yx": yx, "yinv_x": yinvx}
