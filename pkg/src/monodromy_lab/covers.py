"""Cyclic branched covers Y^k = (Z^2 - 1)/(Z^2 + 1) at the level of fundamental groups.

Words are products in pi_1 of the four-punctured sphere, written as group
products whose matrix image is the product in written order (the rightmost
letter is traversed first).  Generator l in 1..4 is the loop around
1, i, -1, -i, with g4 g3 g2 g1 = 1.

The cover is cyclic with deck map g_l -> (+1, -1, +1, -1) mod k.  Kernel
generators come from Reidemeister-Schreier with transversal g1^j; closed
surface generators come from the lifted cell structure of the sphere
(k relator cells, one cone cell per puncture) reduced to the standard
polygon a1 b1 a1^-1 b1^-1 ... by cut-and-paste.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .sl2core import I2, det, is_pm_identity, trace
from .transport import Representation


class DomainError(ValueError):
    pass


class ConsistencyError(RuntimeError):
    pass


class NumericError(RuntimeError):
    pass


# --- words -----------------------------------------------------------------------

def _reduce(letters):
    out = []
    for g, e in letters:
        if out and out[-1][0] == g and out[-1][1] == -e:
            out.pop()
        else:
            out.append((g, e))
    return tuple(out)


@dataclass(frozen=True)
class Word:
    letters: tuple = ()

    def __post_init__(self):
        for g, e in self.letters:
            if e not in (1, -1):
                raise ValueError("exponents must be +-1")
        object.__setattr__(self, "letters", _reduce(tuple((int(g), int(e)) for g, e in self.letters)))

    @classmethod
    def from_signed(cls, seq) -> "Word":
        return cls(tuple((abs(int(s)), 1 if s > 0 else -1) for s in seq))

    def to_signed(self):
        return [g * e for g, e in self.letters]

    @classmethod
    def gen(cls, g: int, e: int = 1) -> "Word":
        return cls(((g, 1),) * e) if e > 0 else cls(((g, -1),) * (-e))

    def __mul__(self, other: "Word") -> "Word":
        return Word(self.letters + other.letters)

    def inverse(self) -> "Word":
        return Word(tuple((g, -e) for g, e in reversed(self.letters)))

    def __pow__(self, n: int) -> "Word":
        base = self if n >= 0 else self.inverse()
        out = Word()
        for _ in range(abs(n)):
            out = out * base
        return out

    def __len__(self):
        return len(self.letters)

    def substitute(self, table) -> "Word":
        """Replace generator g by table[g] (a Word); missing generators stay."""
        out = Word()
        for g, e in self.letters:
            w = table.get(g, Word(((g, 1),)))
            out = out * (w if e > 0 else w.inverse())
        return out

    def __repr__(self):
        return f"Word({self.to_signed()})"


IDENTITY = Word()
G4_ELIM = Word.from_signed([-1, -2, -3])  # g4 = (g3 g2 g1)^-1
RELATOR = Word.from_signed([4, 3, 2, 1])


def eliminate_g4(w: Word) -> Word:
    return w.substitute({4: G4_ELIM})


# --- the cover -------------------------------------------------------------------

@dataclass(frozen=True)
class CoverSpec:
    k: int
    deck_map: tuple

    def __post_init__(self):
        if self.k < 2:
            raise DomainError("k must be at least 2")
        if len(self.deck_map) != 4 or sum(self.deck_map) % self.k:
            raise DomainError("deck images must kill the relation g4 g3 g2 g1")

    def phi(self, w: Word) -> int:
        return sum(self.deck_map[g - 1] * e for g, e in w.letters) % self.k


def _winding_orders():
    """Zero/pole orders of (Z^2 - 1)/(Z^2 + 1) at 1, i, -1, -i by the argument principle."""
    th = np.linspace(0, 2 * np.pi, 4001)
    out = []
    for p in (1, 1j, -1, -1j):
        z = p + 0.3 * np.exp(1j * th)
        f = (z * z - 1) / (z * z + 1)
        out.append(int(round(np.sum(np.diff(np.unwrap(np.angle(f)))) / (2 * np.pi))))
    return tuple(out)


def covering_monodromy(k: int) -> CoverSpec:
    return CoverSpec(k, tuple(o % k for o in _winding_orders()))


def transversal(spec: CoverSpec, c: int) -> Word:
    """Schreier representative g1^c of the coset c (g1 maps to 1)."""
    return Word.gen(1, c % spec.k)


def _rs_table(spec: CoverSpec):
    """Nontrivial Schreier generators t_c s t_{c + phi(s)}^-1 of the kernel in F3."""
    table = {}
    idx = 1
    for s in (1, 2, 3):
        for c in range(spec.k):
            w = transversal(spec, c) * Word.gen(s) * transversal(spec, c + spec.deck_map[s - 1]).inverse()
            if len(w):
                table[(c, s)] = (idx, w)
                idx += 1
    return table


def kernel_generators(spec: CoverSpec):
    """Reidemeister-Schreier generators (words in g1, g2, g3), 2k + 1 of them."""
    return [w for _, w in sorted(_rs_table(spec).values(), key=lambda v: v[0])]


def rewrite(spec: CoverSpec, w: Word) -> Word:
    """Express a kernel element of F3 (or of pi_1, g4 allowed) in the Schreier generators."""
    w = eliminate_g4(w)
    if spec.phi(w):
        raise DomainError(f"{w} is not in the kernel")
    table = _rs_table(spec)
    out = []
    c = 0
    for s, e in w.letters:
        if e > 0:
            if (c, s) in table:
                out.append((table[(c, s)][0], 1))
            c = (c + spec.deck_map[s - 1]) % spec.k
        else:
            c = (c - spec.deck_map[s - 1]) % spec.k
            if (c, s) in table:
                out.append((table[(c, s)][0], -1))
    return Word(tuple(out))


def expand(spec: CoverSpec, w: Word) -> Word:
    """Inverse of rewrite: substitute the Schreier generators back into F3."""
    gens = kernel_generators(spec)
    return w.substitute({i + 1: g for i, g in enumerate(gens)})


def puncture_words(spec: CoverSpec):
    """Loops around the preimages of the punctures: g_l^(k / gcd) at the base sheet."""
    out = []
    for l in range(1, 5):
        order = spec.k // math.gcd(spec.k, spec.deck_map[l - 1])
        out.append(Word.gen(l, order))
    return out


# --- word evaluation and pullback --------------------------------------------------

def evaluate_word(rep: Representation, w: Word, prefix: str = "g") -> np.ndarray:
    return rep.evaluate([(f"{prefix}{g}", e) for g, e in w.letters])


def pullback_rep(rep: Representation, spec: CoverSpec, check: bool = True,
                 tol: float = 1e-6) -> Representation:
    gens = kernel_generators(spec)
    images = {f"h{i + 1}": evaluate_word(rep, g) for i, g in enumerate(gens)}
    relations = [[(f"h{g}", e) for g, e in rewrite(spec, p).letters] for p in puncture_words(spec)]
    out = Representation(images, relations)
    if check:
        for r in relations:
            if not is_pm_identity(out.evaluate(r), tol):
                raise ConsistencyError("puncture word is not +-I")
        out.signs = [is_pm_identity(out.evaluate(r), tol) for r in relations]
    return out


def diagonal_phase(w: Word, weights) -> float:
    """Exponent-sum phase sum_l weights[l] * (exponent sum of g_l) for diagonal reps."""
    return float(sum(weights[g - 1] * e for g, e in w.letters))


# --- closed surface from the lifted cell complex --------------------------------------

def _cell_faces(spec: CoverSpec):
    """Faces of the lifted sphere complex as lists of (edge, +-1); edges are (coset, l).

    Cone faces read g_l^k; relator faces read (g4 g3 g2 g1)^-1 from each coset,
    so every edge occurs once with each orientation.
    """
    k = spec.k
    faces = []
    for l in range(1, 5):
        order = k // math.gcd(k, spec.deck_map[l - 1])
        for c0 in range(k):
            if any(((c0 + j * spec.deck_map[l - 1]) % k, l) in {e for f in faces for e, _ in f}
                   for j in range(order)):
                continue
            c = c0
            face = []
            for _ in range(order):
                face.append(((c, l), 1))
                c = (c + spec.deck_map[l - 1]) % k
            faces.append(face)
    rinv = RELATOR.inverse()
    for c0 in range(k):
        c = c0
        face = []
        for s, e in rinv.letters:
            # e = -1 throughout: step back along the edge ending at c
            c = (c - spec.deck_map[s - 1]) % k
            face.append(((c, s), -1))
        faces.append(face)
    return faces


def _edge_meaning(spec: CoverSpec, edge) -> Word:
    c, s = edge
    return transversal(spec, c) * Word.gen(s) * transversal(spec, c + spec.deck_map[s - 1]).inverse()


def _merge_faces(faces):
    faces = [list(f) for f in faces]
    while len(faces) > 1:
        merged = False
        for i in range(len(faces)):
            edges_i = {e for e, _ in faces[i]}
            for j in range(len(faces)):
                if i == j:
                    continue
                shared = [e for e, _ in faces[j] if e in edges_i]
                if not shared:
                    continue
                x = shared[0]
                fi, fj = faces[i], faces[j]
                a = next(n for n, (e, _) in enumerate(fi) if e == x)
                b = next(n for n, (e, _) in enumerate(fj) if e == x)
                # rotate fi to P x, fj to x^-1 Q; merged face is P Q
                fi = fi[a + 1:] + fi[:a + 1]
                fj = fj[b:] + fj[:b]
                if fi[-1][1] != -fj[0][1]:
                    raise ConsistencyError("faces are not coherently oriented")
                new = fi[:-1] + fj[1:]
                faces = [f for n, f in enumerate(faces) if n not in (i, j)] + [new]
                merged = True
                break
            if merged:
                break
        if not merged:
            raise ConsistencyError("face adjacency graph is disconnected")
    return faces[0]


def _cyclic_reduce(face):
    face = list(face)
    changed = True
    while changed and face:
        changed = False
        for n in range(len(face)):
            a, b = face[n], face[(n + 1) % len(face)]
            if a[0] == b[0] and a[1] == -b[1] and len(face) > 1:
                for m in sorted({n, (n + 1) % len(face)}, reverse=True):
                    face.pop(m)
                changed = True
                break
    return face


def _inv(block):
    return [(e, -s) for e, s in reversed(block)]


def _normalize_polygon(face, meaning):
    """Cut-and-paste a one-vertex orientable polygon to prod [a_i, b_i].

    ``meaning`` maps edge labels to Words; new letters get their meanings.
    Uses  x A y B x^-1 C y^-1 D  ~  x' y' x'^-1 y'^-1 A D C B  with
    y' = A y B and x' = (C B)^-1 x.
    """
    w = list(face)
    done = set()
    fresh = 0

    def mean(block):
        out = Word()
        for e, s in block:
            out = out * (meaning[e] if s > 0 else meaning[e].inverse())
        return out

    while True:
        pending = [e for e, _ in w if e not in done]
        if not pending:
            break
        x = pending[0]
        pos = next(n for n, (e, s) in enumerate(w) if e == x and s > 0)
        w = w[pos:] + w[:pos]
        xi = next(n for n, (e, s) in enumerate(w) if e == x and s < 0)
        inner = w[1:xi]
        ycand = [(e, s) for e, s in inner if e not in done and e != x
                 and sum(1 for f, _ in inner if f == e) == 1]
        if not ycand:
            raise ConsistencyError("no linked letter: polygon is not a one-vertex surface")
        y, ys = ycand[0]
        if ys < 0:
            # rename y -> y^-1 so it appears positively between x and x^-1
            meaning[y] = meaning[y].inverse()
            w = [(e, -s) if e == y else (e, s) for e, s in w]
        yp = next(n for n, (e, s) in enumerate(w) if e == y and s > 0)
        yn = next(n for n, (e, s) in enumerate(w) if e == y and s < 0)
        A, B, C, D = w[1:yp], w[yp + 1:xi], w[xi + 1:yn], w[yn + 1:]
        xn, yn_ = ("a", fresh), ("b", fresh)
        fresh += 1
        meaning[yn_] = mean(A) * meaning[y] * mean(B)
        meaning[xn] = (mean(C) * mean(B)).inverse() * meaning[x]
        w = [(xn, 1), (yn_, 1), (xn, -1), (yn_, -1)] + A + D + C + B
        done |= {xn, yn_}
    # read off the blocks in order
    pairs = []
    n = 0
    while n < len(w):
        (a, sa), (b, sb) = w[n], w[n + 1]
        if not (sa > 0 and sb > 0 and w[n + 2] == (a, -1) and w[n + 3] == (b, -1)):
            raise ConsistencyError("normal form not reached")
        pairs.append((meaning[a], meaning[b]))
        n += 4
    return pairs


def surface_generators(spec: CoverSpec):
    """Words (A_i, B_i) in g1..g4 with prod [A_i, B_i] trivial in the closed surface group.

    The lifted cell complex has k vertices, 4k edges and k + 4 faces.  Tree
    edges (c, g1), c < k - 1, are contracted, so the remaining edges are the
    Schreier generators; faces are merged along shared edges and the
    resulting polygon is normalized.
    """
    faces = _cell_faces(spec)
    k = spec.k
    tree = {(c, 1) for c in range(k - 1)}
    faces = [[(e, s) for e, s in f if e not in tree] for f in faces]
    edges = {e for f in faces for e, _ in f}
    meaning = {e: _edge_meaning(spec, e) for e in edges}
    polygon = _cyclic_reduce(_merge_faces(faces))
    return _normalize_polygon(polygon, meaning)


def genus(spec: CoverSpec) -> int:
    k = spec.k
    ram = sum(k - math.gcd(k, d) for d in spec.deck_map)
    return (k * (-2) + ram + 2) // 2


def surface_relator(pairs) -> Word:
    out = Word()
    for a, b in pairs:
        out = out * a * b * a.inverse() * b.inverse()
    return out


def pairs_to_json(pairs) -> str:
    return json.dumps([[a.to_signed(), b.to_signed()] for a, b in pairs])


def pairs_from_json(text: str):
    return [(Word.from_signed(a), Word.from_signed(b)) for a, b in json.loads(text)]


def stored_genus2_words():
    """The k = 3 surface generators as stored data (words in g1..g4)."""
    text = resources.files("monodromy_lab").joinpath("data/genus2_k3.json").read_text()
    return pairs_from_json(text)


# --- lifted circle action ------------------------------------------------------------
#
# SL(2,R) acts on rays u(psi) = (cos psi, sin psi); the universal cover acts on
# R by lifts F of that action.  A lift is stored through F(0).  Boundary angle
# of H^2 (Cayley disk) is beta = -2 psi, so a Moebius rotation about i by
# theta has translation number theta / 2pi in boundary turns.

def _wrap(x: float) -> float:
    return (x + math.pi) % (2 * math.pi) - math.pi


def _ray_angle(m, psi: float) -> float:
    v = m @ np.array([math.cos(psi), math.sin(psi)])
    return math.atan2(v[1], v[0])


@dataclass(frozen=True)
class LiftedElement:
    base: np.ndarray
    lift_angle: float

    def __post_init__(self):
        b = np.asarray(self.base)
        if np.max(np.abs(np.imag(b))) > 1e-9:
            raise DomainError("lifted elements need real matrices")
        b = np.real(b).astype(float)
        if abs(b[0, 0] * b[1, 1] - b[0, 1] * b[1, 0] - 1) > 1e-6:
            raise DomainError("lifted elements need det 1")
        object.__setattr__(self, "base", b)
        if abs(_wrap(_ray_angle(b, 0.0) - self.lift_angle)) > 1e-9:
            raise DomainError("lift angle does not project to the base action")

    @classmethod
    def canonical(cls, m) -> "LiftedElement":
        """The lift with F(0) in (-pi, pi]."""
        m = np.real(np.asarray(m))
        return cls(m, _ray_angle(m, 0.0))

    def __call__(self, psi: float) -> float:
        d0 = self.lift_angle
        return psi + d0 + _wrap(_ray_angle(self.base, psi) - psi - d0)

    def __matmul__(self, other: "LiftedElement") -> "LiftedElement":
        return LiftedElement(self.base @ other.base, self(other(0.0)))

    def inverse(self) -> "LiftedElement":
        inv = np.array([[self.base[1, 1], -self.base[0, 1]], [-self.base[1, 0], self.base[0, 0]]])
        # F^-1(0) is the psi with F(psi) = 0; start from the projected guess
        g = LiftedElement.canonical(inv)
        shift = -self(g.lift_angle)
        return LiftedElement(inv, g.lift_angle + shift)

    def deck(self, n: int) -> "LiftedElement":
        """Compose with n full boundary turns (central, a ray shift by -n pi)."""
        return LiftedElement(self.base * (-1) ** n, self.lift_angle - n * math.pi)


def translation_number(g: LiftedElement, iterations: int = 4000) -> float:
    """Translation number in boundary turns (beta = -2 psi)."""
    if iterations < 2:
        raise NumericError("need at least two iterations")
    psi = 0.0
    half = iterations // 2
    mid = 0.0
    for n in range(1, iterations + 1):
        psi = g(psi)
        if n == half:
            mid = psi
    # difference of two orbit segments cancels the bounded start-up error
    est = (psi - mid) / (iterations - half)
    return -2 * est / (2 * math.pi)


def _central_turns(g: LiftedElement, tol: float = 1e-6) -> float:
    if not is_pm_identity(g.base.astype(complex), tol):
        raise ConsistencyError("relator image is not +-I")
    return -2 * g.lift_angle / (2 * math.pi)


def euler_number(rep: Representation, surface_relation, prefix: str = "g",
                 return_residual: bool = False):
    """Euler number of the SL(2,R) representation on the closed surface.

    ``surface_relation`` is a list of word pairs (A_i, B_i).  With canonical
    lifts of the images the relator prod [A_i, B_i] lifts to a central
    element; its translation in boundary turns is the PSL Euler number and
    half of it the Euler number of the plane bundle.
    """
    acc = LiftedElement(np.eye(2), 0.0)
    for a, b in surface_relation:
        ma = evaluate_word(rep, a, prefix)
        mb = evaluate_word(rep, b, prefix)
        for m in (ma, mb):
            if np.max(np.abs(np.imag(m))) > 1e-6:
                raise DomainError("representation is not real")
        la = LiftedElement.canonical(np.real(ma))
        lb = LiftedElement.canonical(np.real(mb))
        acc = acc @ la @ lb @ la.inverse() @ lb.inverse()
    turns = _central_turns(acc)
    e = turns / 2
    ei = int(round(e))
    if abs(e - ei) > 0.1:
        raise ConsistencyError(f"non-integer Euler number {e}")
    return (ei, abs(e - ei)) if return_residual else ei


def cellular_euler_number(rep: Representation, spec: CoverSpec) -> float:
    """Cross-check: sum over lifted cells of the central translations.

    Every lifted edge of g_l carries the canonical lift of M_l; cone cells
    contribute M_l^k, relator cells the inverse of M4 M3 M2 M1.
    """
    lifts = {l: LiftedElement.canonical(np.real(rep.images[f"g{l}"])) for l in range(1, 5)}
    total = 0.0
    for l in range(1, 5):
        order = spec.k // math.gcd(spec.k, spec.deck_map[l - 1])
        acc = LiftedElement(np.eye(2), 0.0)
        for _ in range(order):
            acc = acc @ lifts[l]
        total += _central_turns(acc)
    rel = lifts[4] @ lifts[3] @ lifts[2] @ lifts[1]
    total -= spec.k * _central_turns(rel)
    return total / 2


# --- conjugating into SL(2,R) -----------------------------------------------------------

def invariant_hermitian_form(mats, tol: float = 1e-6) -> np.ndarray:
    """H = H^* with M^* H M = H for all M, from the null space of the linear conditions."""
    basis = [np.array([[1, 0], [0, 0]], complex), np.array([[0, 0], [0, 1]], complex),
             np.array([[0, 1], [1, 0]], complex), np.array([[0, 1j], [-1j, 0]], complex)]
    rows = []
    for m in mats:
        cols = [(m.conj().T @ b @ m - b).ravel() for b in basis]
        a = np.array(cols).T
        rows.append(np.vstack([a.real, a.imag]))
    a = np.vstack(rows)
    _, s, vt = np.linalg.svd(a)
    if s[-1] > tol * max(1.0, s[0]):
        raise DomainError("no invariant Hermitian form")
    c = vt[-1]
    return sum(ci * b for ci, b in zip(c, basis))


def realify(rep: Representation, tol: float = 1e-6):
    """Conjugate a representation preserving an indefinite Hermitian form into SL(2,R).

    Returns (real representation, conjugator P) with images P^-1 M P.
    """
    mats = list(rep.images.values())
    h = invariant_hermitian_form(mats, tol)
    lam, u = np.linalg.eigh(h)
    if not (lam[0] < 0 < lam[1]):
        raise DomainError("invariant form is definite: representation is unitary")
    q = u[:, ::-1] @ np.diag(1 / np.sqrt(np.abs(lam[::-1])))  # q^* h q = diag(1, -1)
    cay = np.array([[1, -1j], [1, 1j]])  # K g K^-1 lies in SU(1, 1) for real g
    p = q @ cay
    p = p / np.sqrt(complex(det(p)))
    pinv = np.linalg.inv(p)
    images = {}
    for g, m in rep.images.items():
        r = pinv @ m @ p
        # the conjugator is unique up to SU(1,1) and a scalar; fix the phase
        images[g] = r
    worst = max(np.max(np.abs(r.imag)) for r in images.values())
    if worst > tol * max(1.0, max(np.max(np.abs(r)) for r in images.values())):
        raise DomainError(f"conjugated images are not real (imag {worst:.3g})")
    real = {g: np.real(r).astype(complex) for g, r in images.items()}
    return Representation(real, list(rep.relations)), p


def is_real_rep(rep: Representation, tol: float = 1e-6) -> bool:
    return all(np.max(np.abs(m.imag)) <= tol for m in rep.images.values())


def report(rep_d, rep_tilde, k: int = 3):
    """Verification table rows for the covers CLI."""
    spec = covering_monodromy(k)
    gens = kernel_generators(spec)
    rows = []
    for i, g in enumerate(gens):
        md = evaluate_word(rep_d, g)
        mt = evaluate_word(rep_tilde, g)
        rows.append({"generator": f"h{i + 1}", "word": g.to_signed(),
                     "D_dev": float(np.max(np.abs(md - I2))), "tilde_trace": trace(mt)})
    for l, p in enumerate(puncture_words(spec), start=1):
        m = evaluate_word(rep_tilde, p)
        rows.append({"generator": f"puncture{l}", "word": p.to_signed(),
                     "D_dev": float(np.max(np.abs(evaluate_word(rep_d, p) - I2))),
                     "tilde_sign": is_pm_identity(m, 1e-6)})
    return rows
