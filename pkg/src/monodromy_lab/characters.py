"""Fricke character varieties of the one-punctured torus and four-punctured sphere.

Torus side: x = Tr X, y = Tr Y, z = Tr YX on

    x^2 + y^2 + z^2 - xyz - 2 - 2 cos(2 pi rho) = 0.

Sphere side: x~ = Tr M2M1, y~ = Tr M3M2, z~ = Tr M3M1 on

    x~^2 + y~^2 + z~^2 + x~y~z~ - 2 mu^2 (x~ + y~ + z~) + 4 (mu^2 - 1) + mu^4 = 0.

The map (x, y, z) -> (2 - x^2, 2 - y^2, 2 - z^2) pulls the sphere equation
back to the product of the torus equation and its sign-twisted partner.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np


class DomainError(ValueError):
    pass


@dataclass(frozen=True)
class TorusTraces:
    x: complex
    y: complex
    z: complex
    rho: float
    z1: complex | None = None
    z2: complex | None = None

    def kappa(self) -> float:
        return 2 * math.cos(2 * math.pi * float(self.rho))

    def as_tuple(self):
        return (self.x, self.y, self.z)


@dataclass(frozen=True)
class SphereTraces:
    x: complex
    y: complex
    z: complex
    mu: float

    def as_tuple(self):
        return (self.x, self.y, self.z)


class Kind(enum.Enum):
    SU2_COMPACT = "SU2Compact"
    SL2R_NONCOMPACT = "SL2RNoncompact"
    NON_REAL = "NonReal"
    NEAR_BOUNDARY = "NearBoundary"


@dataclass(frozen=True)
class ComponentLabel:
    kind: Kind
    # normalized epsilon-signature (SL2RNoncompact only) and the raw sign pattern
    signature: tuple | None = None
    raw: tuple | None = field(default=None, compare=False)

    def __str__(self):
        if self.kind is Kind.SL2R_NONCOMPACT:
            return f"{self.kind.value}{self.signature}"
        return self.kind.value


# sign patterns (eps1, eps2, eps3) with eps1 + eps2 + eps3 in {0, 2}
SIGN_CHANGES = ((0, 0, 0), (0, 1, 1), (1, 0, 1), (1, 1, 0))


def rho_tilde(rho) -> float | Fraction:
    """Sphere weight attached to the torus weight: (2 rho + 1) / 4."""
    return (2 * rho + 1) / 4


def mu_of(rho_t) -> float:
    return 2 * math.cos(2 * math.pi * float(rho_t))


# --- residuals -------------------------------------------------------------------

def torus_poly(x, y, z, rho):
    return x * x + y * y + z * z - x * y * z - 2 - 2 * math.cos(2 * math.pi * float(rho))


def torus_residual(t: TorusTraces) -> float:
    return float(abs(torus_poly(t.x, t.y, t.z, t.rho)))


def torus_scale(t: TorusTraces) -> float:
    """Size of the largest monomial; rounding error in the residual scales with it."""
    x, y, z = (abs(complex(v)) for v in t.as_tuple())
    return max(1.0, x * x, y * y, z * z, x * y * z)


def sphere_poly(x, y, z, mu):
    m2 = mu * mu
    return x * x + y * y + z * z + x * y * z - 2 * m2 * (x + y + z) + 4 * (m2 - 1) + m2 * m2


def sphere_residual(s: SphereTraces) -> float:
    return float(abs(sphere_poly(s.x, s.y, s.z, s.mu)))


def cv_map(t: TorusTraces) -> SphereTraces:
    mu = mu_of(rho_tilde(t.rho))
    return SphereTraces(2 - t.x * t.x, 2 - t.y * t.y, 2 - t.z * t.z, mu)


def factorization_residual(x, y, z, mu, relative: bool = True) -> float:
    """|Fricke4(2-x^2, 2-y^2, 2-z^2; mu) - (s - xyz - 4 + mu^2)(s + xyz - 4 + mu^2)|."""
    s = x * x + y * y + z * z
    m2 = mu * mu
    lhs = sphere_poly(2 - x * x, 2 - y * y, 2 - z * z, mu)
    rhs = (s - x * y * z - 4 + m2) * (s + x * y * z - 4 + m2)
    err = abs(lhs - rhs)
    if relative:
        scale = max(1.0, abs(s) ** 2, abs(x * y * z) ** 2, abs(m2) ** 2)
        return float(err / scale)
    return float(err)


def z2_from(x, y, z1):
    return x * y - z1


# --- reality ---------------------------------------------------------------------

class Reality(enum.Enum):
    Y_REAL_FORCED = "y-real-forced"
    X_ZERO_BRANCH = "x-zero-branch"
    INCONCLUSIVE = "inconclusive"


def reality_conclusion(x, z1, z2, tol: float) -> Reality:
    """If x, z1 = Tr YX and z2 = Tr Y^-1 X are real, then y is real or x = 0."""
    if max(abs(np.imag(x)), abs(np.imag(z1)), abs(np.imag(z2))) >= tol:
        return Reality.INCONCLUSIVE
    if abs(x) < tol:
        return Reality.X_ZERO_BRANCH
    return Reality.Y_REAL_FORCED


# --- real components -------------------------------------------------------------

def normalize_signature(eps) -> tuple:
    """Smallest representative of the sign-change orbit of ``eps``."""
    eps = tuple(int(e) % 2 for e in eps)
    return min(tuple((a + b) % 2 for a, b in zip(eps, s)) for s in SIGN_CHANGES)


def goldman_classify(t: TorusTraces, tol: float = 1e-6) -> ComponentLabel:
    """Label a torus character by its real component.

    On-variety status is tested relative to the largest monomial, so points
    far out on the noncompact ends are judged by their significant digits.
    """
    if torus_residual(t) > tol * torus_scale(t):
        raise DomainError(f"off the character variety: residual {torus_residual(t):.3g}")
    coords = [complex(v) for v in t.as_tuple()]
    if any(abs(c.imag) >= tol for c in coords):
        return ComponentLabel(Kind.NON_REAL)
    re = [c.real for c in coords]
    m = max(abs(v) for v in re)
    if 2 - tol <= m <= 2 + tol:
        return ComponentLabel(Kind.NEAR_BOUNDARY)
    if m < 2 - tol:
        return ComponentLabel(Kind.SU2_COMPACT)
    raw = tuple(1 if (v < 0 and abs(v) > 2) else 0 for v in re)
    return ComponentLabel(Kind.SL2R_NONCOMPACT, normalize_signature(raw), raw)


def sign_change_orbit(t: TorusTraces) -> set:
    out = set()
    for s in SIGN_CHANGES:
        sg = [(-1) ** e for e in s]
        out.add(TorusTraces(sg[0] * t.x, sg[1] * t.y, sg[2] * t.z, t.rho))
    return out


def ffuchs_target(k: int):
    """Trace coordinates of the Fuchsian point for the (k, k, k, k) orbifold data."""
    if k < 3:
        raise DomainError("k must be at least 3")
    c = math.cos(math.pi / k)
    xt = 2 * math.sqrt(1 + c)
    torus = TorusTraces(xt, xt, 4 * math.cos(math.pi / (2 * k)) ** 2, Fraction(k - 2, 2 * k))
    xs = -2 - 4 * c
    sphere = SphereTraces(xs, xs, -2 * (2 + 4 * c + math.cos(2 * math.pi / k)),
                          2 * math.cos(math.pi * (k - 1) / k))
    return torus, sphere


# --- CSV schema -------------------------------------------------------------------

CSV_TRACES = ("x", "y", "z1", "z2")


def csv_columns(sphere: bool = False):
    cols = ["t"]
    for n in CSV_TRACES:
        cols += [f"re_{n}", f"im_{n}"]
    cols += ["re_scaled_x", "im_scaled_x", "residual", "identity_residual", "precision", "label", "flag"]
    if sphere:
        cols += ["re_tau", "im_tau", "re_xs", "im_xs", "re_ys", "im_ys", "re_zs", "im_zs",
                 "sphere_consistency"]
    return cols
