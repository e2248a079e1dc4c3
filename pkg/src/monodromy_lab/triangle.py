"""Triangle-group matrices uniformizing the sphere with cone points at 0, 1, inf.

For rho~ in (1/4, 1/2) the three matrices below are real and generate the
orientation-preserving index-two subgroup of the reflection group of a
hyperbolic triangle; for rho~ < 1/4 they are unitary.  With
rho~ = (k-1)/(2k) the triangle has angles (pi/4, pi/k, pi/4).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .sl2core import HalfPlanePoint, I2, is_pm_identity, mobius_apply, trace


class BranchDegeneracy(ValueError):
    pass


class DomainError(ValueError):
    pass


def triangle_matrices(rt: float):
    """(X0, X1, Xinf) with Tr X0 = Tr Xinf = sqrt 2 and Tr X1 = 2 cos(2 pi rt)."""
    if not 0 < rt < 0.5:
        raise DomainError(f"rho~ {rt} outside (0, 1/2)")
    if abs(rt - 0.25) < 1e-12:
        raise BranchDegeneracy("rho~ = 1/4: the square root degenerates")
    c = math.cos(2 * math.pi * rt)
    r = np.sqrt(complex((-1 + c) * c))  # principal branch: real for rt > 1/4
    s2 = math.sqrt(2)
    x0 = np.array([[1, -1], [1, 1]], dtype=complex) / s2
    x1 = np.array([[c - r, 1 - c + r], [-1 + c + r, c + r]], dtype=complex)
    xinf = np.array([[1, -1 + 2 * c - 2 * r], [1 - 2 * c - 2 * r, 1]], dtype=complex) / s2
    return x0, x1, xinf


def rho_tilde_of_k(k: int) -> float:
    return (k - 1) / (2 * k)


def fixed_point(m) -> HalfPlanePoint:
    """Fixed point in the upper half plane of a real elliptic matrix."""
    m = np.asarray(m, dtype=complex)
    if np.max(np.abs(m.imag)) > 1e-9:
        raise DomainError("matrix is not real")
    if abs(trace(m).real) >= 2:
        raise DomainError("matrix is not elliptic")
    a, b, c, d = (m[0, 0].real, m[0, 1].real, m[1, 0].real, m[1, 1].real)
    # c z^2 + (d - a) z - b = 0
    roots = np.roots([c, d - a, -b]) if c != 0 else np.array([])
    up = [z for z in roots if z.imag > 0]
    if not up:
        raise DomainError("no fixed point in the upper half plane")
    return HalfPlanePoint(complex(up[0]))


def rotation_derivative(m, p, tol: float = 1e-8) -> complex:
    """Derivative of the Moebius map of ``m`` at its fixed point ``p``."""
    m = np.asarray(m, dtype=complex)
    p = complex(p)
    if abs(mobius_apply(m, p) - p) > tol:
        raise DomainError(f"{p} is not fixed")
    dm = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
    return complex(dm / (m[1, 0] * p + m[1, 1]) ** 2)


def order_in_psl2(m, nmax: int = 64, tol: float = 1e-7):
    """Smallest n <= nmax with m^n = +-I, else None."""
    m = np.asarray(m, dtype=complex)
    acc = I2.copy()
    for n in range(1, nmax + 1):
        acc = acc @ m
        if is_pm_identity(acc, tol):
            return n
    return None


def expected_fixed_points(k: int):
    """Closed forms for p0, p1, pinf at rho~ = (k-1)/(2k)."""
    c = math.cos(math.pi / k)
    s = math.sqrt(c * (1 + c))
    p0 = 1j
    p1 = (1 + c + s) / (s - 1j * math.sin(math.pi / k))
    pinf = 1j * (1 + 2 * c + 2 * s)
    return p0, p1, pinf


@dataclass(frozen=True)
class TriangleData:
    k: int
    X0: np.ndarray
    X1: np.ndarray
    Xinf: np.ndarray
    p0: HalfPlanePoint
    p1: HalfPlanePoint
    pinf: HalfPlanePoint

    @classmethod
    def for_k(cls, k: int) -> "TriangleData":
        if k < 3:
            raise DomainError("k must be at least 3")
        x0, x1, xi = triangle_matrices(rho_tilde_of_k(k))
        return cls(k, x0, x1, xi, fixed_point(x0), fixed_point(x1), fixed_point(xi))

    def relation_sign(self, tol: float = 1e-8) -> int:
        return is_pm_identity(self.Xinf @ self.X1 @ self.X0, tol)

    def derivatives(self):
        return (rotation_derivative(self.X0, self.p0), rotation_derivative(self.X1, self.p1),
                rotation_derivative(self.Xinf, self.pinf))

    def angles(self):
        """Interior angles of the triangle: half the rotation angles."""
        return tuple(abs(float(np.angle(d))) / 2 for d in self.derivatives())

    def orders(self, nmax: int = 64):
        return tuple(order_in_psl2(m, nmax) for m in (self.X0, self.X1, self.Xinf))


def report(ks=range(3, 9)):
    """Rows of the per-k verification table."""
    rows = []
    for k in ks:
        td = TriangleData.for_k(k)
        d0, d1, di = td.derivatives()
        e0, e1, ei = expected_fixed_points(k)
        rows.append({
            "k": k,
            "fixed_point_err": max(abs(complex(td.p0) - e0), abs(complex(td.p1) - e1),
                                   abs(complex(td.pinf) - ei)),
            "rotation_err": max(abs(d0 + 1j), abs(d1 - np.exp(-2j * np.pi / k)), abs(di + 1j)),
            "relation_sign": td.relation_sign(),
            "orders": td.orders(),
            "tr_x1": trace(td.X1).real,
        })
    return rows
