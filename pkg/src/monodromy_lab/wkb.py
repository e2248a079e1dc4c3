"""WKB limits on synthetic families and scans of the torus t-family.

Transport convention as everywhere: parallel sections solve ds + A s = 0.
For a path family with diagonal part t diag(alpha, -alpha) + B (Re alpha < 0)
the dominant block of the transport grows like exp(-t int alpha); after
rescaling by exp(t int alpha) it converges to the scalar transport of B_11
with an O(1/t) error.

The torus family x(t) = Tr X(t) behaves like C exp(t pi (1+i)/4); real
crossings t_n of x(t) are refined in multiprecision.
"""
from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.integrate import quad, solve_ivp
from scipy.linalg import expm

from . import characters as ch
from . import connections as cn
from . import hiprec
from . import torus as tor
from . import transport as tr

PHASE = np.pi * (1 + 1j) / 4
HP_SWITCH = 6.0  # rows with t above this use multiprecision in "auto" mode
ROW_RESIDUAL = 1e-5


class PreconditionError(ValueError):
    pass


class EstimateUnstable(RuntimeError):
    pass


# --- synthetic path families ----------------------------------------------------------

def _as_fn(v):
    if callable(v):
        return v
    return lambda s, _v=v: _v


@dataclass
class PathFamilyData:
    """alpha = omega(gamma') and the t-independent part B, as functions of u in [0, 1]."""

    alpha: object
    B: object
    t_grid: tuple = ()
    nsample: int = 65

    def __post_init__(self):
        self.alpha = _as_fn(self.alpha)
        self.B = _as_fn(np.asarray(self.B, dtype=complex) if not callable(self.B) else self.B)
        s = np.linspace(0, 1, self.nsample)
        if not all(np.real(self.alpha(u)) < 0 for u in s):
            raise PreconditionError("WKB condition Re alpha < 0 fails")

    def int_alpha(self) -> complex:
        re = quad(lambda u: np.real(self.alpha(u)), 0, 1, epsabs=1e-13)[0]
        im = quad(lambda u: np.imag(self.alpha(u)), 0, 1, epsabs=1e-13)[0]
        return complex(re, im)

    def is_constant(self) -> bool:
        s = np.linspace(0, 1, 5)
        a = [self.alpha(u) for u in s]
        b = [np.asarray(self.B(u)) for u in s]
        return np.allclose(a, a[0]) and all(np.allclose(x, b[0]) for x in b)


def scaled_transport(data: PathFamilyData, t: float, tol: float = 1e-11) -> np.ndarray:
    """exp(t int alpha) P^t, integrated directly in the rescaled frame.

    S' = -(diag(0, -2 t alpha) + B) S, so the rescaled dominant block stays
    bounded and the stiff direction decays.
    """
    def rhs(u, y):
        a = data.alpha(u)
        b = np.asarray(data.B(u), dtype=complex)
        m = b + np.array([[0, 0], [0, -2 * t * a]])
        return -(m @ y.reshape(2, 2)).ravel()

    amax = max(abs(data.alpha(u)) for u in np.linspace(0, 1, 9))
    sol = solve_ivp(rhs, (0, 1), np.eye(2, dtype=complex).ravel(), method="DOP853",
                    rtol=tol, atol=tol * 1e-2, max_step=min(1.0, 2.0 / max(1e-9, t * amax)))
    if not sol.success:
        raise RuntimeError(sol.message)
    return sol.y[:, -1].reshape(2, 2)


def scaled_transport_closed_form(alpha: complex, B, t: float) -> np.ndarray:
    """Constant coefficients: exp(t alpha) expm(-(t alpha diag(1, -1) + B))."""
    B = np.asarray(B, dtype=complex)
    return np.exp(t * alpha) * expm(-(t * alpha * np.diag([1, -1]) + B))


def block_limit(data: PathFamilyData) -> np.ndarray:
    b11 = quad(lambda u: np.real(np.asarray(data.B(u))[0, 0]), 0, 1, epsabs=1e-13)[0] + 1j * quad(
        lambda u: np.imag(np.asarray(data.B(u))[0, 0]), 0, 1, epsabs=1e-13)[0]
    return np.array([[np.exp(-b11), 0], [0, 0]], dtype=complex)


def _fit_slope(ts, devs):
    ts = np.asarray(ts, float)
    devs = np.asarray(devs, float)
    ok = devs > 0
    if ok.sum() < 2:
        return float("nan")
    return float(np.polyfit(np.log(ts[ok]), np.log(devs[ok]), 1)[0])


def scaled_limit_check(data: PathFamilyData, tol: float = 1e-11, fit_window=(20.0, 200.0)):
    """Deviation of exp(t int alpha) P^t from the block limit over data.t_grid."""
    lim = block_limit(data)
    tr_lim = complex(np.trace(lim))
    rows = []
    for t in data.t_grid:
        s = scaled_transport(data, t, tol)
        rows.append({"t": float(t), "deviation": float(np.max(np.abs(s - lim))),
                     "trace_deviation": float(abs(np.trace(s) - tr_lim))})
    fit = [r for r in rows if fit_window[0] <= r["t"] <= fit_window[1]]
    slope = _fit_slope([r["t"] for r in fit], [r["deviation"] for r in fit])
    devs = [r["deviation"] for r in fit]
    monotone = all(b <= 1.1 * a for a, b in zip(devs, devs[1:]))
    return {"rows": rows, "slope": slope, "monotone_tail": monotone,
            "limit_trace": [tr_lim.real, tr_lim.imag]}


def decay_check(alpha, beta, g, f0: complex, delta: float, t_grid, mirrored: bool = False,
                tol: float = 1e-10, nquad: int = 401):
    """Solve d_s f + (t alpha + beta) f = g, f(0) = f0 and report sup over [delta, 1].

    With ``mirrored`` the coefficients satisfy Re alpha < 0, the solution is
    fixed at s = 1 and the sup is taken over [0, 1 - delta].  Returns rows
    with the sup, eps = |f|_C0 + |g|_C0 and the fitted constant
    C1 = sup (1 + t) / eps.
    """
    alpha, beta, g = _as_fn(alpha), _as_fn(beta), _as_fn(g)
    if mirrored:
        # f1(s) = f(1 - s) turns the variant into the main case
        a2 = lambda s: -alpha(1 - s)  # noqa: E731
        b2 = lambda s: -beta(1 - s)  # noqa: E731
        g2 = lambda s: -g(1 - s)  # noqa: E731
        return decay_check(a2, b2, g2, f0, delta, t_grid, False, tol, nquad)
    s_eval = np.linspace(0, 1, nquad)
    rows = []
    for t in t_grid:
        def rhs(s, y):
            f = y[0] + 1j * y[1]
            d = g(s) - (t * alpha(s) + beta(s)) * f
            return [d.real, d.imag]

        amax = max(abs(alpha(s)) for s in np.linspace(0, 1, 9))
        sol = solve_ivp(rhs, (0, 1), [complex(f0).real, complex(f0).imag], method="DOP853",
                        t_eval=s_eval, rtol=tol, atol=tol * 1e-2,
                        max_step=min(0.05, 2.0 / max(1e-9, t * amax)))
        f = sol.y[0] + 1j * sol.y[1]
        gv = np.array([g(s) for s in s_eval])
        eps = float(np.max(np.abs(f)) + np.max(np.abs(gv)))
        sup = float(np.max(np.abs(f[s_eval >= delta])))
        rows.append({"t": float(t), "sup": sup, "eps": eps, "C1": sup * (1 + t) / eps,
                     "f": f, "s": s_eval})
    return rows


def decay_quadrature(alpha: complex, beta: complex, g: complex, f0: complex, t: float, s):
    """Exact solution for constant coefficients: f = e^{-k s} f0 + g (1 - e^{-k s}) / k."""
    k = t * alpha + beta
    s = np.asarray(s, float)
    return np.exp(-k * s) * f0 + g * (1 - np.exp(-k * s)) / k


# --- torus family scans ------------------------------------------------------------------

def _float_torus_row(t: float, rho, tol: float):
    conn = tor.family_t(t, float(rho))
    loops = tor.torus_loops()
    diag = tor.diagonal_loops()
    x, y, z1, z2 = (complex(np.trace(tr.transport(conn, lp, tol)))
                    for lp in (loops["x"], loops["y"], diag["yx"], diag["yinv_x"]))
    res = abs(ch.torus_poly(x, y, z1, rho))
    ident = abs(z2 - (x * y - z1))
    return x, y, z1, z2, res, ident


def _hp_torus_row(t: float, rho):
    traces, res = hiprec.family_traces(t, rho)
    vals = [hiprec.to_complex(traces[n]) for n in ("x", "y", "z1", "z2")]
    return (*vals, abs(hiprec.to_complex(res["cubic"])), abs(hiprec.to_complex(res["identity"])))


def sphere_row(t: float, rho, c: float, tol: float = 1e-12):
    """Sphere-side traces of D + tau Phi at tau = pi (1+i) t / (4c), rho~ = (2 rho + 1)/4."""
    tau = cn.tau_of_t(t, c)
    conn = cn.family_D_tau(float(ch.rho_tilde(rho)), tau)
    loops = tr.sphere_loops(cn.FOUR_POLES)
    m = {lp.label: tr.transport(conn, lp, tol) for lp in loops}
    xs = complex(np.trace(m["g2"] @ m["g1"]))
    ys = complex(np.trace(m["g3"] @ m["g2"]))
    zs = complex(np.trace(m["g3"] @ m["g1"]))
    return tau, xs, ys, zs


def scan_row(t: float, rho, side: str = "torus", precision: str = "auto", tol: float = 1e-12,
             c: float | None = None) -> dict:
    """One scan row; numeric failures are recorded in ``flag`` rather than raised."""
    row = {"t": float(t), "flag": ""}
    if side in ("torus", "both"):
        use_hp = precision == "high" or (precision == "auto" and t > HP_SWITCH)
        try:
            x, y, z1, z2, res, ident = _hp_torus_row(t, rho) if use_hp else _float_torus_row(t, rho, tol)
            row.update(x=x, y=y, z1=z1, z2=z2, residual=res, identity_residual=ident,
                       precision="high" if use_hp else "float64",
                       scaled_x=x * np.exp(-t * PHASE))
            if res > ROW_RESIDUAL:
                row["flag"] = "residual"
        except Exception as exc:  # rows are flagged, not dropped
            nan = complex(np.nan, np.nan)
            row.update(x=nan, y=nan, z1=nan, z2=nan, residual=np.nan, identity_residual=np.nan,
                       precision=precision, scaled_x=nan, flag=f"error: {exc}")
    if side in ("sphere", "both"):
        c = c if c is not None else cn.pullback_period_c()
        try:
            tau, xs, ys, zs = sphere_row(t, rho, c, tol)
            row.update(tau=tau, xs=xs, ys=ys, zs=zs)
            if "x" in row and np.isfinite(row["x"]):
                row["sphere_consistency"] = abs(xs - (2 - row["x"] ** 2)) / max(1.0, abs(xs))
        except Exception as exc:
            row["flag"] = (row["flag"] + "; " if row["flag"] else "") + f"sphere error: {exc}"
    return row


def _row_job(args):
    return scan_row(*args)


@dataclass
class FamilyScan:
    rho: object
    side: str
    rows: list = field(default_factory=list)

    def column(self, name):
        return np.array([r.get(name, np.nan) for r in self.rows])

    @property
    def t(self):
        return self.column("t").real.astype(float)

    def scaled(self):
        return self.column("scaled_x")

    def max_residual(self) -> float:
        return float(np.nanmax(self.column("residual").astype(float)))

    def to_csv(self, path_or_file):
        cols = ch.csv_columns(self.side in ("sphere", "both"))
        own = isinstance(path_or_file, (str, os.PathLike))
        fh = open(path_or_file, "w", newline="") if own else path_or_file
        try:
            w = csv.writer(fh, quoting=csv.QUOTE_MINIMAL, lineterminator="\r\n")
            w.writerow(cols)
            for r in self.rows:
                w.writerow([_csv_cell(r, c) for c in cols])
        finally:
            if own:
                fh.close()


def _csv_cell(row, col):
    if col in ("t", "residual", "identity_residual", "sphere_consistency"):
        v = row.get(col, "")
        return "" if v == "" else repr(float(np.real(v)))
    if col in ("precision", "flag"):
        return row.get(col, "")
    if col == "label":
        return row.get("label", "")
    part, name = col.split("_", 1)
    name = {"scaled_x": "scaled_x", "xs": "xs", "ys": "ys", "zs": "zs", "tau": "tau"}.get(name, name)
    v = row.get(name, "")
    if v == "":
        return ""
    v = complex(v)
    return repr(v.real if part == "re" else v.imag)


def threads() -> int:
    try:
        return max(1, int(os.environ.get("MONODROMY_LAB_THREADS", "1")))
    except ValueError:
        return 1


def family_scan(rho, t_grid, side: str = "torus", precision: str = "auto",
                tol: float = 1e-12, workers: int | None = None) -> FamilyScan:
    """Rows of traces along the t-family; independent rows may run in worker processes."""
    if side not in ("torus", "sphere", "both"):
        raise ValueError(f"unknown side {side!r}")
    c = cn.pullback_period_c() if side in ("sphere", "both") else None
    jobs = [(float(t), rho, side, precision, tol, c) for t in t_grid]
    workers = workers or threads()
    if workers > 1:
        # processes, not threads: the multiprecision context is process-global
        with ProcessPoolExecutor(max_workers=workers) as ex:
            rows = list(ex.map(_row_job, jobs))
    else:
        rows = [_row_job(j) for j in jobs]
    rows.sort(key=lambda r: r["t"])
    return FamilyScan(rho, side, rows)


def default_grid(tmax: float = 60.0, step: float = 0.05, tmin: float = 0.0):
    n = int(round((tmax - tmin) / step))
    return [tmin + i * step for i in range(n + 1)]


# --- the constant C ----------------------------------------------------------------------

def estimate_C(scan: FamilyScan, window=(30.0, 60.0), max_variation: float = 0.05):
    """Mean of x(t) exp(-t pi (1+i)/4) over the window, with max deviation as error bar."""
    t = scan.t
    sel = (t >= window[0]) & (t <= window[1])
    if not sel.any():
        raise EstimateUnstable("window outside the scan")
    vals = scan.scaled()[sel]
    mean = complex(np.mean(vals))
    err = float(np.max(np.abs(vals - mean)))
    if not np.isfinite(mean) or err > max_variation * abs(mean):
        raise EstimateUnstable(f"scaled trace varies by {err / abs(mean):.3g} over {window}")
    return mean, err


def estimate_C_sphere(scan: FamilyScan, window=(30.0, 60.0), max_variation: float = 0.05):
    """Mean of x~(t) exp(-t pi (1+i)/2), expected to approach -C^2."""
    t = scan.t
    sel = (t >= window[0]) & (t <= window[1])
    vals = scan.column("xs")[sel] * np.exp(-2 * t[sel] * PHASE)
    mean = complex(np.mean(vals))
    err = float(np.max(np.abs(vals - mean)))
    if not np.isfinite(mean) or err > max_variation * abs(mean):
        raise EstimateUnstable(f"sphere scaled trace varies by {err / abs(mean):.3g}")
    return mean, err


# --- real crossings t_n ---------------------------------------------------------------------

def _crossing_brackets(t, x):
    """Intervals where the unwrapped arg x passes a multiple of pi with |x| > 2."""
    ok = np.isfinite(x)
    t, x = t[ok], x[ok]
    ph = np.unwrap(np.angle(x))
    k = np.floor(ph / np.pi)
    out = []
    for i in range(len(t) - 1):
        if k[i] != k[i + 1] and abs(x[i]) > 2 and abs(x[i + 1]) > 2:
            out.append((float(t[i]), float(t[i + 1])))
    return out


def _hp_x(t, rho):
    traces, _ = hiprec.family_traces(t, rho, ("x",), digits=hiprec.digits_for(float(t.mid())) + 10)
    return traces["x"]


def refine_crossing(lo: float, hi: float, rho, target: float = 1e-12, maxit: int = 80):
    """Illinois iteration on Im x(t) = 0 with t as a multiprecision ball."""
    from flint import arb, ctx

    digits = hiprec.digits_for(hi) + 10
    with ctx.workprec(int(digits * 3.33) + 16):
        a, b = arb(lo), arb(hi)
        fa, fb = _hp_x(a, rho).imag, _hp_x(b, rho).imag
        if (fa > 0) == (fb > 0):
            raise ValueError("no sign change of Im x in the bracket")
        side = 0
        t, ft = a, fa
        for _ in range(maxit):
            t = b - fb * (b - a) / (fb - fa)
            ft = _hp_x(t, rho).imag
            if abs(float(ft.mid())) < target:
                break
            if (ft > 0) == (fb > 0):
                b, fb = t, ft
                if side == -1:
                    fa = fa / 2
                side = -1
            else:
                a, fa = t, ft
                if side == 1:
                    fb = fb / 2
                side = 1
        return t, abs(float(ft.mid()))


def find_tn(scan: FamilyScan, rho=None, tmin: float = 0.0, refine: bool = True, tol: float = 1e-5):
    """Real crossings of x(t) with |x| > 2, refined and classified."""
    rho = scan.rho if rho is None else rho
    t = scan.t
    x = scan.column("x")
    out = []
    for lo, hi in _crossing_brackets(t, x):
        if hi < tmin:
            continue
        if not refine:
            out.append({"t_n": 0.5 * (lo + hi), "bracket": (lo, hi)})
            continue
        tn, im_x = refine_crossing(lo, hi, rho)
        traces, res = hiprec.family_traces(tn, rho, digits=hiprec.digits_for(float(tn.mid())) + 10)
        v = {n: hiprec.to_complex(traces[n]) for n in traces}
        tt = ch.TorusTraces(v["x"], v["y"], v["z1"], rho, v["z1"], v["z2"])
        label = ch.goldman_classify(tt, tol)
        out.append({
            "t_n": float(tn.mid()), "t_n_digits": tn.mid().str(30, radius=False),
            "bracket": (lo, hi), "x": v["x"], "y": v["y"], "z1": v["z1"], "z2": v["z2"],
            "im_x": im_x, "im_y": abs(v["y"].imag),
            "residual": abs(hiprec.to_complex(res["cubic"])),
            "reality": ch.reality_conclusion(v["x"], v["z1"], v["z2"], tol).value,
            "label": label,
        })
    return out


def find_tn_sphere(scan: FamilyScan):
    """Sphere-only detection: crossings of Im x~ = 0 with Re x~ < -2 (no refinement)."""
    t = scan.t
    xs = scan.column("xs")
    out = []
    for i in range(len(t) - 1):
        a, b = xs[i], xs[i + 1]
        if np.isfinite(a) and np.isfinite(b) and (a.imag > 0) != (b.imag > 0):
            s = a.imag / (a.imag - b.imag)
            tn = t[i] + s * (t[i + 1] - t[i])
            re = a.real + s * (b.real - a.real)
            if re < -2:
                out.append({"t_n": float(tn), "xs": complex(re)})
    return out


def spacing(tns):
    return [b - a for a, b in zip(tns, tns[1:])]


def hp_rho(rho):
    """Exact rational weights when given as a Fraction or a simple decimal."""
    if isinstance(rho, Fraction):
        return rho
    f = Fraction(rho).limit_denominator(1000)
    return f if abs(float(f) - rho) < 1e-15 else rho


__all__ = ["PathFamilyData", "scaled_limit_check", "decay_check", "family_scan", "FamilyScan",
           "estimate_C", "estimate_C_sphere", "find_tn", "find_tn_sphere", "math"]
