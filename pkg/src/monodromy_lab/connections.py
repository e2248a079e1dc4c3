"""Meromorphic sl(2,C)-valued 1-forms on the Riemann sphere.

A form A(z)dz is stored in partial-fraction normal form

    A(z) = sum_j R_j / (z - p_j) + sum_k P_k z^k

so residues are read off exactly.  Only simple poles are supported.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from numpy.polynomial import polynomial as P
from scipy import integrate

from .sl2core import INF, I2, eig2, eigenline, trace

TOL_TRACE = 1e-10
TOL_RES = 1e-8


class DomainError(ValueError):
    pass


class UnsupportedStructure(ValueError):
    pass


class NumericError(RuntimeError):
    pass


def _key(p, digits=12):
    return (round(complex(p).real, digits), round(complex(p).imag, digits))


@dataclass(frozen=True)
class RationalMatrixForm:
    """Partial-fraction form: poles, residue matrices, polynomial part."""

    poles: tuple
    residues: tuple
    polynomial_part: tuple = ()

    def __post_init__(self):
        if len(self.poles) != len(self.residues):
            raise ValueError("one residue per pole")
        keys = [_key(p) for p in self.poles]
        if len(set(keys)) != len(keys):
            raise ValueError("duplicate poles")

    @classmethod
    def build(cls, poles, residues, polynomial_part=()):
        poles = tuple(complex(p) for p in poles)
        residues = tuple(np.array(r, dtype=complex) for r in residues)
        poly = tuple(np.array(c, dtype=complex) for c in polynomial_part)
        for r in residues + poly:
            r.setflags(write=False)
        return cls(poles, residues, poly)

    def __call__(self, z):
        """Evaluate A(z); accepts a scalar."""
        a = np.zeros((2, 2), dtype=complex)
        for p, r in zip(self.poles, self.residues):
            a = a + r / (z - p)
        zk = 1.0
        for c in self.polynomial_part:
            a = a + c * zk
            zk = zk * z
        return a

    def evaluator(self):
        """Fast closure z -> A(z) used by the integrator."""
        poles = np.array(self.poles, dtype=complex)
        res = np.array(self.residues, dtype=complex).reshape(-1, 4)
        poly = np.array(self.polynomial_part, dtype=complex).reshape(-1, 4)
        npoly = len(poly)

        def f(z):
            a = (1.0 / (z - poles)) @ res if len(poles) else np.zeros(4, complex)
            if npoly:
                a = a + (z ** np.arange(npoly)) @ poly
            return a

        return f

    def __add__(self, other: "RationalMatrixForm"):
        table = {}
        order = []
        for p, r in list(zip(self.poles, self.residues)) + list(zip(other.poles, other.residues)):
            k = _key(p)
            if k not in table:
                table[k] = [p, np.zeros((2, 2), complex)]
                order.append(k)
            table[k][1] = table[k][1] + r
        n = max(len(self.polynomial_part), len(other.polynomial_part))
        poly = []
        for i in range(n):
            c = np.zeros((2, 2), complex)
            if i < len(self.polynomial_part):
                c = c + self.polynomial_part[i]
            if i < len(other.polynomial_part):
                c = c + other.polynomial_part[i]
            poly.append(c)
        return RationalMatrixForm.build([table[k][0] for k in order],
                                        [table[k][1] for k in order], poly)

    def scale(self, s: complex):
        return RationalMatrixForm.build(self.poles, [s * r for r in self.residues],
                                        [s * c for c in self.polynomial_part])

    def residue(self, p) -> np.ndarray:
        if p is INF:
            if any(np.any(c != 0) for c in self.polynomial_part):
                raise UnsupportedStructure("infinity is not a simple pole")
            return -sum(self.residues, np.zeros((2, 2), complex))
        k = _key(p)
        for q, r in zip(self.poles, self.residues):
            if _key(q) == k:
                return np.array(r)
        raise DomainError(f"{p} is not a pole")

    def pole_set(self, include_infinity=True):
        """Finite poles with nonzero residue, plus INF if it is a pole."""
        out = [p for p, r in zip(self.poles, self.residues) if np.any(r != 0)]
        if include_infinity and not self.polynomial_part:
            if np.max(np.abs(self.residue(INF))) > 1e-14:
                out.append(INF)
        return out

    def entries_rational(self):
        """Each entry as (numerator, denominator) coefficient arrays, low degree first."""
        den = np.array([1.0 + 0j])
        for p in self.poles:
            den = P.polymul(den, [-p, 1.0])
        out = [[None, None], [None, None]]
        for i in range(2):
            for j in range(2):
                num = np.array([0j])
                for a, (p, r) in enumerate(zip(self.poles, self.residues)):
                    rest = np.array([1.0 + 0j])
                    for b, q in enumerate(self.poles):
                        if b != a:
                            rest = P.polymul(rest, [-q, 1.0])
                    num = P.polyadd(num, r[i, j] * rest)
                for k, c in enumerate(self.polynomial_part):
                    mono = np.zeros(k + 1, complex)
                    mono[k] = c[i, j]
                    num = P.polyadd(num, P.polymul(mono, den))
                out[i][j] = (num, den)
        return out

    def validate(self, rng=None):
        """Check the type invariants; raises ValueError on failure."""
        rng = rng or np.random.default_rng(0)
        zs = rng.normal(size=20) + 1j * rng.normal(size=20)
        for z in zs:
            if abs(trace(self(z))) > TOL_TRACE * max(1.0, np.max(np.abs(self(z)))):
                raise ValueError("form is not trace-free")
        # every listed pole is simple for some entry, no unlisted finite pole
        ents = self.entries_rational()
        listed = [_key(p) for p in self.poles]
        for i in range(2):
            for j in range(2):
                num, den = ents[i][j]
                roots = P.polyroots(den) if len(den) > 1 else []
                for rt in roots:
                    if min(abs(rt - complex(*k)) for k in listed) > 1e-6:
                        raise ValueError(f"unlisted pole at {rt}")
        for p, r in zip(self.poles, self.residues):
            if not np.any(np.abs(r) > 0):
                raise ValueError(f"listed pole {p} has zero residue")
        return True

    def to_json(self) -> str:
        enc = lambda z: [float(np.real(z)), float(np.imag(z))]  # noqa: E731
        encm = lambda m: [[enc(m[i, j]) for j in range(2)] for i in range(2)]  # noqa: E731
        return json.dumps({
            "poles": [enc(p) for p in self.poles],
            "residues": [encm(r) for r in self.residues],
            "polynomial_part": [encm(c) for c in self.polynomial_part],
        })

    @classmethod
    def from_json(cls, text: str):
        d = json.loads(text)
        dec = lambda v: complex(v[0], v[1])  # noqa: E731
        decm = lambda m: [[dec(m[i][j]) for j in range(2)] for i in range(2)]  # noqa: E731
        return cls.build([dec(p) for p in d["poles"]], [decm(r) for r in d["residues"]],
                         [decm(c) for c in d.get("polynomial_part", [])])


@dataclass(frozen=True)
class MeromorphicConnection:
    form: RationalMatrixForm
    label: str = ""
    weight: float | None = None

    def __post_init__(self):
        for r in self.form.residues:
            if abs(trace(r)) > TOL_TRACE:
                raise ValueError("residues must be trace-free")

    def __call__(self, z):
        return self.form(z)

    @property
    def poles(self):
        return self.form.pole_set()

    @property
    def finite_poles(self):
        return self.form.pole_set(include_infinity=False)


@dataclass(frozen=True)
class ParabolicData:
    points: tuple
    weights: tuple
    lines: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if not (len(self.points) == len(self.weights) == len(self.lines)):
            raise ValueError("one (weight, line) per point")


def _check_weight(rt):
    if not 0 < rt < 0.5:
        raise DomainError(f"weight {rt} outside (0, 1/2)")


def build_nabla_s3(rt: float) -> MeromorphicConnection:
    """d + diag(1/8,-1/8) dz/z + [[-4r^2, 1], [r^2-16r^4, 4r^2]] dz/(z-1)."""
    _check_weight(rt)
    r0 = np.diag([0.125, -0.125])
    r1 = np.array([[-4 * rt**2, 1.0], [rt**2 - 16 * rt**4, 4 * rt**2]])
    return MeromorphicConnection(RationalMatrixForm.build([0, 1], [r0, r1]), "nabla_s3", rt)


FOUR_POLES = (1.0 + 0j, 1j, -1.0 + 0j, -1j)


def build_D(rt: float) -> MeromorphicConnection:
    """Diagonal connection with residues +-diag(rt,-rt) at the fourth roots of unity."""
    _check_weight(rt)
    sig = (1, -1, 1, -1)
    res = [s * np.diag([rt, -rt]) for s in sig]
    return MeromorphicConnection(RationalMatrixForm.build(FOUR_POLES, res), "D", rt)


def build_nabla_tilde(rt: float) -> MeromorphicConnection:
    """d + [[0, 4rt], [4rt z^2, 0]] dz/(z^4-1), in partial fractions.

    Uses 1/(z^4-1) = sum_x x/(4(z-x)) and z^2/(z^4-1) = sum_x conj(x)/(4(z-x))
    over the fourth roots of unity x.
    """
    _check_weight(rt)
    res = [np.array([[0, rt * x], [rt / x, 0]]) for x in FOUR_POLES]
    return MeromorphicConnection(RationalMatrixForm.build(FOUR_POLES, res), "nabla_tilde", rt)


def build_phi() -> RationalMatrixForm:
    """Off-diagonal Higgs field [[0, 2/(z^2-1)], [-2i/(z^2+1), 0]] dz.

    The sign of the lower-left entry is fixed by det(Phi) = 4i dz^2/(z^4-1).
    """
    e12 = np.array([[0, 1], [0, 0]], dtype=complex)
    e21 = np.array([[0, 0], [1, 0]], dtype=complex)
    # 2/(z^2-1) = 1/(z-1) - 1/(z+1);  -2i/(z^2+1) = 1/(z+i) - 1/(z-i)
    res = [e12, -e21, -e12, e21]
    return RationalMatrixForm.build(FOUR_POLES, res)


def family_D_tau(rt: float, tau: complex) -> MeromorphicConnection:
    d = build_D(rt)
    if tau == 0:
        return d
    return MeromorphicConnection(d.form + build_phi().scale(tau), "D+tau*Phi", rt)


BUILDERS = {
    "nabla_s3": build_nabla_s3,
    "D": build_D,
    "nabla_tilde": build_nabla_tilde,
}


def by_label(label: str, rt: float | None = None):
    if label == "phi":
        return build_phi()
    if label not in BUILDERS:
        raise KeyError(f"unknown connection {label!r}")
    return BUILDERS[label](rt)


def residue(conn, p) -> np.ndarray:
    form = conn.form if isinstance(conn, MeromorphicConnection) else conn
    return form.residue(p)


def _residue_eigs(conn):
    for p in conn.poles:
        r = residue(conn, p)
        yield p, r, eig2(r)


def is_nonresonant(conn, tol: float = TOL_RES) -> bool:
    for _, _, (l1, l2) in _residue_eigs(conn):
        d = l1 - l2
        n = round(d.real)
        if n != 0 and abs(d - n) < tol:
            return False
    return True


def induced_parabolic(conn) -> ParabolicData:
    if not is_nonresonant(conn):
        raise UnsupportedStructure("resonant residue")
    pts, wts, lines = [], [], []
    for p, r, (l1, l2) in _residue_eigs(conn):
        lam = l1 if l1.real >= l2.real else l2
        if abs(lam.imag) > TOL_RES or not (0 < lam.real < 0.5):
            raise UnsupportedStructure(f"eigenvalue {lam} at {p} not real in (0,1/2)")
        pts.append(p)
        wts.append(float(lam.real))
        lines.append(eigenline(r, lam))
    return ParabolicData(tuple(pts), tuple(wts), tuple(lines))


def parabolic_degree(pd: ParabolicData, sub_degree: int, incidence) -> float | Fraction:
    incidence = list(incidence)
    if len(incidence) != len(pd.points):
        raise ValueError("incidence length must equal number of points")
    total = sub_degree
    for w, inc in zip(pd.weights, incidence):
        total = total + (w if inc else -w)
    return total


def phi_nilpotency_residuals(rt: float = 1 / 3):
    """For each pole: (|N^2|, |N . line of D|) with N the residue of Phi."""
    phi = build_phi()
    pd = induced_parabolic(build_D(rt))
    out = []
    for p, line in zip(pd.points, pd.lines):
        n = phi.residue(p)
        out.append((float(np.max(np.abs(n @ n))), float(np.max(np.abs(n @ line)))))
    return out


# --- period of sqrt(det Phi) -------------------------------------------------

def _det_phi_sqrt_integrand(z):
    return 4j / (z**4 - 1)


def contour_period(center: complex, radius: float, npieces: int = 64,
                   tol: float = 1e-10) -> complex:
    """Integral of sqrt(4i/(z^4-1)) dz over a CCW circle, branch continued.

    The circle is split into short arcs; on each arc the branch is
    w_c * sqrt(w / w_c^2) anchored at the arc midpoint, with the anchor sign
    chosen to continue the previous arc.
    """
    th = np.linspace(0, 2 * np.pi, npieces + 1)
    total = 0j
    prev_end = None
    for a, b in zip(th[:-1], th[1:]):
        zc = center + radius * np.exp(0.5j * (a + b))
        rc = np.sqrt(_det_phi_sqrt_integrand(zc))
        za = center + radius * np.exp(1j * a)
        ra = rc * np.sqrt(_det_phi_sqrt_integrand(za) / rc**2)
        if prev_end is not None and abs(ra + prev_end) < abs(ra - prev_end):
            rc = -rc
            ra = -ra

        def f(t, rc=rc):
            z = center + radius * np.exp(1j * t)
            return rc * np.sqrt(_det_phi_sqrt_integrand(z) / rc**2) * 1j * radius * np.exp(1j * t)

        re, e1 = integrate.quad(lambda t: f(t).real, a, b, epsabs=tol, epsrel=tol, limit=200)
        im, e2 = integrate.quad(lambda t: f(t).imag, a, b, epsabs=tol, epsrel=tol, limit=200)
        if max(e1, e2) > 1e-8:
            raise NumericError("period quadrature did not converge")
        total += re + 1j * im
        zb = center + radius * np.exp(1j * b)
        prev_end = rc * np.sqrt(_det_phi_sqrt_integrand(zb) / rc**2)
    return total


def pullback_period_c(rt: float | None = None, center: complex = 0.5 + 0.5j,
                      radius: float = 0.9) -> float:
    """Half the modulus of the period of sqrt(det Phi) around {1, i}.

    ``rt`` is accepted for interface symmetry; Phi does not depend on it.
    """
    if abs(center - 1) >= radius or abs(center - 1j) >= radius:
        raise DomainError("contour must encircle 1 and i")
    if abs(center + 1) <= radius or abs(center + 1j) <= radius:
        raise DomainError("contour must not encircle -1 or -i")
    return float(abs(contour_period(center, radius)) / 2)


def tau_of_t(t, c: float | None = None):
    """tau = pi (1+i) t / (4c)."""
    c = pullback_period_c() if c is None else c
    return np.pi * (1 + 1j) * np.asarray(t) / (4 * c)
