"""Complex 2x2 linear algebra and Moebius actions.

Matrices are plain ``numpy`` arrays of shape (2, 2) and dtype complex128.
The point at infinity is the explicit sentinel :data:`INF`, never a large
float.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

EPS_DET = 1e-9

I2 = np.eye(2, dtype=complex)


class _Infinity:
    """The point at infinity of the Riemann sphere."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "INF"

    def __reduce__(self):
        return (_Infinity, ())


INF = _Infinity()


class UndefinedInput(ValueError):
    """Raised for 0/0 in Moebius arithmetic."""


@dataclass(frozen=True)
class HalfPlanePoint:
    value: complex

    def __post_init__(self):
        if not np.imag(self.value) > 0:
            raise ValueError(f"not in the upper half plane: {self.value}")

    def __complex__(self):
        return complex(self.value)


def mat(a11, a12, a21, a22) -> np.ndarray:
    m = np.array([[a11, a12], [a21, a22]], dtype=complex)
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix entries must be finite")
    return m


def det(m) -> complex:
    return complex(m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0])


def trace(m) -> complex:
    return complex(m[0, 0] + m[1, 1])


def inv(m) -> np.ndarray:
    """Inverse via the adjugate; exact inverse for SL(2) up to 1/det."""
    d = det(m)
    return np.array([[m[1, 1], -m[0, 1]], [-m[1, 0], m[0, 0]]], dtype=complex) / d


def sl2inv(m) -> np.ndarray:
    return np.array([[m[1, 1], -m[0, 1]], [-m[1, 0], m[0, 0]]], dtype=complex)


def is_sl2(m, eps: float = EPS_DET) -> bool:
    return bool(np.all(np.isfinite(m))) and abs(det(m) - 1) <= eps


def normalize_sl2(m) -> np.ndarray:
    """Scale ``m`` to determinant one (principal square root)."""
    return np.asarray(m, dtype=complex) / np.sqrt(complex(det(m)))


def is_pm_identity(m, tol: float) -> int:
    """Return +1 or -1 if ``m`` is within ``tol`` of +I or -I, else 0."""
    if np.max(np.abs(m - I2)) <= tol:
        return 1
    if np.max(np.abs(m + I2)) <= tol:
        return -1
    return 0


def mobius_apply(m, z):
    """Apply the Moebius map of ``m`` to ``z`` (complex or :data:`INF`)."""
    a, b, c, d = m[0, 0], m[0, 1], m[1, 0], m[1, 1]
    if abs(det(m)) == 0:
        raise UndefinedInput("singular matrix")
    if z is INF:
        if c == 0:
            return INF
        return complex(a / c)
    num = a * z + b
    den = c * z + d
    if den == 0:
        if num == 0:
            raise UndefinedInput("0/0 in Moebius map")
        return INF
    return complex(num / den)


def conjugacy_residue(m1, m2) -> float:
    """Distance between conjugacy classes via traces (non-parabolic classes)."""
    return abs(trace(m1) - trace(m2))


def eig2(m):
    """Closed-form eigenvalues of a 2x2 matrix, ordered (t+s)/2, (t-s)/2."""
    t = trace(m)
    s = np.sqrt(complex(t * t - 4 * det(m)))
    return (t + s) / 2, (t - s) / 2


def eigenline(m, lam, tol: float = 1e-12) -> np.ndarray:
    """Unit vector spanning the kernel of m - lam I (2x2 closed form)."""
    n = np.asarray(m, dtype=complex) - lam * I2
    # kernel of a rank-one 2x2 matrix: orthogonal to the larger row
    r = n[0] if np.linalg.norm(n[0]) >= np.linalg.norm(n[1]) else n[1]
    if np.linalg.norm(r) <= tol:
        return np.array([1.0, 0.0], dtype=complex)
    v = np.array([-r[1], r[0]], dtype=complex)
    return v / np.linalg.norm(v)


def same_line(u, v, tol: float = 1e-8) -> bool:
    u = np.asarray(u, dtype=complex)
    v = np.asarray(v, dtype=complex)
    return abs(u[0] * v[1] - u[1] * v[0]) <= tol * np.linalg.norm(u) * np.linalg.norm(v)


def expm2(a) -> np.ndarray:
    """exp of a 2x2 matrix via the Cayley-Hamilton closed form."""
    a = np.asarray(a, dtype=complex)
    m = trace(a) / 2
    b = a - m * I2
    s = np.sqrt(complex(-det(b)))  # eigenvalues of the trace-free part are +-s
    if abs(s) < 1e-8:
        # sinh(s)/s series
        sh = 1 + s * s / 6 + s ** 4 / 120
    else:
        sh = np.sinh(s) / s
    return np.exp(m) * (np.cosh(s) * I2 + sh * b)


def random_sl2(rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    m = scale * (rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)))
    return normalize_sl2(m)
