"""Parallel transport of flat 2x2 systems along piecewise paths.

Convention: parallel sections solve ds + A s = 0, so along a path gamma the
fundamental solution obeys Psi'(s) = -A(gamma(s)) gamma'(s) Psi(s), Psi(0)=I.
Loops run counterclockwise and composition is right to left: the product
``g2 g1`` traverses ``g1`` first and its transport is T(g2) T(g1).
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .connections import MeromorphicConnection, RationalMatrixForm, residue, is_nonresonant, UnsupportedStructure
from .sl2core import INF, I2, det, eig2, is_pm_identity, trace

TOL = 1e-10
R_MIN = 0.2
MAX_STEPS = 10**6


class ProximityError(RuntimeError):
    pass


class AccuracyError(RuntimeError):
    pass


class ConfigurationError(ValueError):
    pass


# --- paths -------------------------------------------------------------------

@dataclass(frozen=True)
class PathSegment:
    """A straight segment (``line``) or circular arc (``arc``), parameter s in [0,1]."""

    kind: str
    z0: complex = 0j
    z1: complex = 0j
    center: complex = 0j
    radius: float = 0.0
    a0: float = 0.0
    a1: float = 0.0

    def __post_init__(self):
        if self.kind not in ("line", "arc"):
            raise ValueError(self.kind)
        if self.kind == "arc" and not self.radius > 0:
            raise ValueError("arc radius must be positive")

    @classmethod
    def line(cls, z0, z1):
        return cls("line", z0=complex(z0), z1=complex(z1))

    @classmethod
    def arc(cls, center, radius, a0, a1):
        return cls("arc", center=complex(center), radius=float(radius), a0=float(a0), a1=float(a1))

    @property
    def start(self) -> complex:
        return self.point(0.0)

    @property
    def end(self) -> complex:
        return self.point(1.0)

    def point(self, s):
        if self.kind == "line":
            return self.z0 + (self.z1 - self.z0) * s
        return self.center + self.radius * np.exp(1j * (self.a0 + (self.a1 - self.a0) * s))

    def velocity(self, s):
        if self.kind == "line":
            return (self.z1 - self.z0) + 0 * s
        a = self.a0 + (self.a1 - self.a0) * s
        return 1j * (self.a1 - self.a0) * self.radius * np.exp(1j * a)

    def length(self) -> float:
        if self.kind == "line":
            return abs(self.z1 - self.z0)
        return abs(self.a1 - self.a0) * self.radius

    def reversed(self) -> "PathSegment":
        if self.kind == "line":
            return PathSegment.line(self.z1, self.z0)
        return PathSegment.arc(self.center, self.radius, self.a1, self.a0)

    def translated(self, w) -> "PathSegment":
        if self.kind == "line":
            return PathSegment.line(self.z0 + w, self.z1 + w)
        return PathSegment.arc(self.center + w, self.radius, self.a0, self.a1)

    def distance_to(self, p) -> float:
        p = complex(p)
        if self.kind == "line":
            d = self.z1 - self.z0
            if d == 0:
                return abs(p - self.z0)
            s = np.clip(((p - self.z0) * np.conj(d)).real / abs(d) ** 2, 0, 1)
            return abs(self.z0 + s * d - p)
        s = np.linspace(0, 1, 2001)
        return float(np.min(np.abs(self.point(s) - p)))

    def to_dict(self):
        if self.kind == "line":
            return {"kind": "line", "z0": [self.z0.real, self.z0.imag], "z1": [self.z1.real, self.z1.imag]}
        return {"kind": "arc", "center": [self.center.real, self.center.imag], "radius": self.radius,
                "a0": self.a0, "a1": self.a1}

    @classmethod
    def from_dict(cls, d):
        if d["kind"] == "line":
            return cls.line(complex(*d["z0"]), complex(*d["z1"]))
        return cls.arc(complex(*d["center"]), d["radius"], d["a0"], d["a1"])


@dataclass(frozen=True)
class Loop:
    """A chained list of segments.  ``closed`` paths start and end at ``basepoint``."""

    segments: tuple
    basepoint: complex
    label: str = ""

    def __post_init__(self):
        segs = self.segments
        if not segs:
            raise ValueError("empty path")
        for s0, s1 in zip(segs[:-1], segs[1:]):
            if abs(s0.end - s1.start) > 1e-12:
                raise ValueError("segments are not endpoint-chained")
        if abs(segs[0].start - self.basepoint) > 1e-12:
            raise ValueError("path does not start at the basepoint")

    @property
    def start(self):
        return self.segments[0].start

    @property
    def end(self):
        return self.segments[-1].end

    @property
    def closed(self) -> bool:
        return abs(self.end - self.start) <= 1e-12

    def reversed(self) -> "Loop":
        segs = tuple(s.reversed() for s in reversed(self.segments))
        return Loop(segs, segs[0].start, self.label + "^-1")

    def then(self, other: "Loop") -> "Loop":
        """Traverse self, then other (the product ``other * self``)."""
        return Loop(self.segments + other.segments, self.basepoint, f"{other.label}*{self.label}")

    def translated(self, w) -> "Loop":
        return Loop(tuple(s.translated(w) for s in self.segments), self.basepoint + w, self.label)

    def distance_to(self, p) -> float:
        return min(s.distance_to(p) for s in self.segments)

    def winding_number(self, p, n: int = 4000) -> int:
        tot = 0.0
        for seg in self.segments:
            s = np.linspace(0, 1, n)
            z = seg.point(s) - p
            tot += np.sum(np.angle(z[1:] / z[:-1]))
        return int(round(tot / (2 * np.pi)))

    def to_dict(self):
        return {"label": self.label, "basepoint": [self.basepoint.real, self.basepoint.imag],
                "segments": [s.to_dict() for s in self.segments]}

    @classmethod
    def from_dict(cls, d):
        return cls(tuple(PathSegment.from_dict(s) for s in d["segments"]),
                   complex(*d["basepoint"]), d.get("label", ""))


def compose(*loops: Loop) -> Loop:
    """Right-to-left product: compose(g2, g1) traverses g1 first."""
    out = loops[-1]
    for lp in reversed(loops[:-1]):
        out = out.then(lp)
    return out


def loops_to_json(loops) -> str:
    return json.dumps([lp.to_dict() for lp in loops])


def loops_from_json(text: str):
    return [Loop.from_dict(d) for d in json.loads(text)]


# --- systems -----------------------------------------------------------------

class SphereSystem:
    """ODE field of a meromorphic form: M(z, v) = A(z) v."""

    def __init__(self, form):
        if isinstance(form, MeromorphicConnection):
            form = form.form
        self.form = form
        self._f = form.evaluator()
        self.singularities = tuple(form.poles)

    def field(self, z, v):
        return self._f(z) * v


def as_system(obj):
    if isinstance(obj, (MeromorphicConnection, RationalMatrixForm)):
        return SphereSystem(obj)
    if hasattr(obj, "field") and hasattr(obj, "singularities"):
        return obj
    if hasattr(obj, "system"):
        return obj.system()
    raise TypeError(f"not an ODE field: {obj!r}")


def check_proximity(system, path: Loop, rmin: float = R_MIN):
    for p in system.singularities:
        d = path.distance_to(p)
        if d < rmin:
            raise ProximityError(f"path passes within {d:.3g} of singularity {p}")


def _transport_segment(field, seg: PathSegment, tol: float, max_step: float):
    def rhs(s, y):
        m = field(seg.point(s), seg.velocity(s))
        return -np.array([m[0] * y[0] + m[1] * y[2], m[0] * y[1] + m[1] * y[3],
                          m[2] * y[0] + m[3] * y[2], m[2] * y[1] + m[3] * y[3]])

    y0 = np.array([1, 0, 0, 1], dtype=complex)
    sol = solve_ivp(rhs, (0.0, 1.0), y0, method="DOP853", rtol=tol, atol=tol * 1e-3,
                    max_step=max_step)
    if not sol.success:
        raise AccuracyError(sol.message)
    if sol.nfev > 13 * MAX_STEPS:
        raise AccuracyError("step budget exhausted")
    return sol.y[:, -1].reshape(2, 2)


def transport(system, path: Loop, tol: float = TOL, rmin: float = R_MIN) -> np.ndarray:
    """Fundamental solution Psi(1) of Psi' = -A(gamma)gamma' Psi along ``path``."""
    if not tol > 0:
        raise ValueError("tol must be positive")
    system = as_system(system)
    check_proximity(system, path, rmin)
    field = system.field
    psi = I2.copy()
    for seg in path.segments:
        dmin = min([seg.distance_to(p) for p in system.singularities if p is not INF] or [np.inf])
        # clamp steps to a fraction of the distance to the nearest pole
        max_step = min(1.0, 0.5 * dmin / max(seg.length(), 1e-300)) if np.isfinite(dmin) else 1.0
        psi = _transport_segment(field, seg, tol, max_step) @ psi
    return psi


# --- loop sets -----------------------------------------------------------------

def pole_loop(pole, basepoint, radius: float = 0.3, via=()) -> Loop:
    """Lasso: go from basepoint (through ``via``) to the circle, around CCW, back."""
    pole = complex(pole)
    pts = [complex(basepoint)] + [complex(v) for v in via]
    d = pts[-1] - pole
    ang = float(np.angle(d))
    entry = pole + radius * np.exp(1j * ang)
    out = [PathSegment.line(a, b) for a, b in zip(pts[:-1], pts[1:])]
    out.append(PathSegment.line(pts[-1], entry))
    out.append(PathSegment.arc(pole, radius, ang, ang + 2 * np.pi))
    back = [s.reversed() for s in reversed(out[:-1])]
    return Loop(tuple(out + back), complex(basepoint))


def sphere_loops(poles, basepoint=None, radius: float = 0.3):
    """Standard loop sets.

    Four poles at the fourth roots of unity: basepoint 0, one lasso per pole
    in the order 1, i, -1, -i.  The three-point set {0, 1, inf}: basepoint -1,
    gamma_0 along the real axis, gamma_1 passing above 0.
    """
    finite = [complex(p) for p in poles if p is not INF]
    if not finite:
        raise ConfigurationError("need at least one finite pole")
    keys = sorted((round(p.real, 12), round(p.imag, 12)) for p in finite)
    if keys == sorted((round(p.real, 12), round(p.imag, 12)) for p in (1, 1j, -1, -1j)):
        b = 0j if basepoint is None else complex(basepoint)
        if any(abs(b - p) < 1e-12 for p in finite):
            raise ConfigurationError("basepoint equals a pole")
        loops = []
        for n, p in enumerate((1, 1j, -1, -1j), start=1):
            lp = pole_loop(p, b, radius)
            loops.append(Loop(lp.segments, b, f"g{n}"))
        return loops
    if keys == [(0.0, 0.0), (1.0, 0.0)]:
        b = -1 + 0j if basepoint is None else complex(basepoint)
        if any(abs(b - p) < 1e-12 for p in finite):
            raise ConfigurationError("basepoint equals a pole")
        g0 = pole_loop(0, b, radius)
        g1 = pole_loop(1, b, radius, via=(-0.5 + 0.5j, 0.7 + 0.5j))
        return [Loop(g0.segments, b, "g0"), Loop(g1.segments, b, "g1")]
    # generic: basepoint below all poles, straight lassos
    b = complex(basepoint) if basepoint is not None else complex(
        np.mean([p.real for p in finite]), min(p.imag for p in finite) - 1.0)
    if any(abs(b - p) < 1e-12 for p in finite):
        raise ConfigurationError("basepoint equals a pole")
    order = sorted(finite, key=lambda p: -np.angle(p - b))
    return [Loop(pole_loop(p, b, radius).segments, b, f"g{n}") for n, p in enumerate(order, 1)]


# --- representations -----------------------------------------------------------

@dataclass
class Representation:
    """Generator images plus relation words expected to map to +-I.

    A word is a sequence of (generator, exponent) pairs read as a group
    product left to right; its image is the ordered matrix product, so the
    rightmost letter acts first.  The determinant test is relative to
    max(1, |m|^2): ad - bc cancels that many digits for large entries.
    """

    images: dict
    relations: list = field(default_factory=list)
    signs: list = field(default_factory=list)
    det_tol: float = 1e-8

    def __post_init__(self):
        for g, m in self.images.items():
            scale = max(1.0, float(np.max(np.abs(m))) ** 2)
            if abs(det(m) - 1) > self.det_tol * scale:
                raise ValueError(f"image of {g} is not in SL(2): det={det(m)}")

    def evaluate(self, word) -> np.ndarray:
        out = I2.copy()
        for g, e in word:
            if g not in self.images:
                raise KeyError(f"missing generator {g!r}")
            m = self.images[g]
            if e < 0:
                m = np.array([[m[1, 1], -m[0, 1]], [-m[1, 0], m[0, 0]]])
            for _ in range(abs(e)):
                out = out @ m
        return out

    def check_relations(self, tol: float = 1e-6):
        signs = []
        for w in self.relations:
            s = is_pm_identity(self.evaluate(w), tol)
            if s == 0:
                raise AccuracyError(f"relation {w} fails: {self.evaluate(w)}")
            signs.append(s)
        self.signs = signs
        return signs


def monodromy(conn, loops, tol: float = TOL, rmin: float = R_MIN, relations=None,
              check: bool = True) -> Representation:
    bases = {complex(lp.basepoint) for lp in loops}
    if len(bases) != 1:
        raise ConfigurationError("loops must share a basepoint")
    system = as_system(conn)
    images = {lp.label: transport(system, lp, tol, rmin) for lp in loops}
    if relations is None:
        labels = [lp.label for lp in loops]
        relations = [[(g, 1) for g in reversed(labels)]] if len(labels) == 4 else []
    rep = Representation(images, list(relations))
    if check and rep.relations:
        rep.check_relations()
    return rep


def local_loop(conn, pole, radius: float = 0.3) -> Loop:
    """Small CCW circle around a finite pole, or CW big circle for INF."""
    system = as_system(conn)
    finite = [complex(p) for p in system.singularities if p is not INF]
    if pole is INF:
        r = max(abs(p) for p in finite) + 1.0
        return Loop((PathSegment.arc(0, r, 0, -2 * np.pi),), complex(r), "inf")
    others = [abs(complex(pole) - p) for p in finite if abs(complex(pole) - p) > 1e-12]
    if others:
        radius = min(radius, 0.5 * min(others))
    start = complex(pole) + radius
    return Loop((PathSegment.arc(pole, radius, 0, 2 * np.pi),), start, f"loc{pole}")


def local_monodromy_check(conn, pole, tol: float = TOL) -> float:
    if not is_nonresonant(conn):
        raise UnsupportedStructure("resonant connection")
    lam1, lam2 = eig2(residue(conn, pole))
    lp = local_loop(conn, pole)
    m = transport(conn, lp, tol, rmin=min(R_MIN, lp.distance_to(pole) if pole is not INF else R_MIN) * 0.999)
    pred = np.exp(-2j * np.pi * lam1) + np.exp(-2j * np.pi * lam2)
    return float(abs(trace(m) - pred))
