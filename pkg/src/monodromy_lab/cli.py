"""Command-line front end: ``monodromy-lab <command> [options]``."""
from __future__ import annotations

import argparse
import json
import subprocess
import sys
from dataclasses import asdict, dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from . import characters as ch

COMMANDS = ("verify", "scan", "find-tn", "triangle-report", "covers-report", "wkb-appendix")

SCAN_HELP = """CSV columns (RFC 4180, '.' decimal, one row per t, sorted by t):
  t                         family parameter
  re_x, im_x ... re_z2, im_z2   x = Tr X, y = Tr Y, z1 = Tr YX, z2 = Tr Y^-1 X
  re_scaled_x, im_scaled_x  x(t) exp(-t pi (1+i)/4)
  residual                  |x^2 + y^2 + z1^2 - x y z1 - 2 - 2 cos 2 pi rho|
  identity_residual         |z2 - (x y - z1)|
  precision                 float64 or high (multiprecision rows)
  label                     unused in scans (filled by find-tn)
  flag                      empty, 'residual' or the error of a failed row
with --side sphere|both also
  re_tau, im_tau            tau = pi (1+i) t / (4c)
  re_xs ... im_zs           sphere traces Tr M2M1, Tr M3M2, Tr M3M1 of D + tau Phi
  sphere_consistency        |(2 - x^2) - xs| / max(1, |xs|)   (side both)
"""


@dataclass
class RunConfig:
    command: str
    k: int = 3
    rho: object = None
    rho_tilde: float | None = None
    tol: float = 1e-6
    tmin: float = 0.0
    tmax: float = 60.0
    step: float | None = None
    side: str = "torus"
    precision: str = "auto"
    out: str | None = None
    seed: int = 0
    only: tuple = ()

    def validate(self):
        """Return an error message for out-of-range parameters, else None."""
        if self.k < 2:
            return "--k must be at least 2"
        if self.rho is not None and not 0 < float(self.rho) < 0.5:
            return "--rho must lie in (0, 1/2)"
        if self.rho_tilde is not None and not 0 < self.rho_tilde < 0.5:
            return "--rho-tilde must lie in (0, 1/2)"
        if not self.tol > 0:
            return "--tol must be positive"
        if self.step is not None and not self.step > 0:
            return "--step must be positive"
        if not self.tmax > self.tmin >= 0:
            return "need 0 <= --tmin < --tmax"
        if any(not 1 <= n <= 14 for n in self.only):
            return "--only takes criterion numbers 1..14"
        return None

    def to_dict(self):
        d = asdict(self)
        d["rho"] = None if self.rho is None else str(self.rho)
        d["only"] = list(self.only)
        return d


def parse_rho(text: str):
    """'1/6' and '0.25' become exact fractions; anything else a float."""
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")


def parse_only(text: str):
    try:
        return tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of integers: {text!r}")


def version() -> str:
    """git-describe style version when run from a checkout, else the package version."""
    try:
        out = subprocess.run(["git", "describe", "--always", "--dirty", "--tags"],
                             cwd=Path(__file__).resolve().parent, capture_output=True,
                             text=True, timeout=5)
        if out.returncode == 0 and out.stdout.strip():
            return f"{__version__}+g{out.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return __version__


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="monodromy-lab",
                                description="Monodromy and character-variety verification tools.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, step_default):
        sp.add_argument("--k", type=int, default=3, help="cover degree / orbifold order (default 3)")
        sp.add_argument("--rho", type=parse_rho, default=None,
                        help="torus weight, e.g. 1/6 (default (k-2)/(2k))")
        sp.add_argument("--rho-tilde", type=float, default=None, help="sphere weight override")
        sp.add_argument("--tol", type=float, default=1e-6, help="classification tolerance")
        sp.add_argument("--tmin", type=float, default=0.0)
        sp.add_argument("--tmax", type=float, default=60.0)
        sp.add_argument("--step", type=float, default=step_default)
        sp.add_argument("--side", choices=("torus", "sphere", "both"), default="torus")
        sp.add_argument("--precision", choices=("auto", "float64", "high"), default="auto",
                        help="torus rows: float64, multiprecision, or auto (high above t = 6)")
        sp.add_argument("--out", default=None, help="output file (default stdout)")
        sp.add_argument("--seed", type=int, default=0, help="seed for all random sampling")

    v = sub.add_parser("verify", help="run the acceptance suite")
    common(v, 0.5)
    v.add_argument("--only", type=parse_only, default=(), help="comma-separated criterion numbers")
    common(sub.add_parser("scan", help="trace scan along the t-family (CSV)", epilog=SCAN_HELP,
                          formatter_class=argparse.RawDescriptionHelpFormatter), 0.05)
    common(sub.add_parser("find-tn", help="refined real crossings t_n (JSON)"), 0.5)
    common(sub.add_parser("triangle-report", help="triangle-group table for k = 3..k"), None)
    common(sub.add_parser("covers-report", help="kernel generators and pullback checks"), None)
    common(sub.add_parser("wkb-appendix", help="synthetic WKB limit and decay checks (JSON)"), None)
    return p


def config_from_args(ns) -> RunConfig:
    return RunConfig(command=ns.command, k=ns.k, rho=ns.rho, rho_tilde=ns.rho_tilde, tol=ns.tol,
                     tmin=ns.tmin, tmax=ns.tmax, step=ns.step, side=ns.side,
                     precision=ns.precision, out=ns.out, seed=ns.seed,
                     only=tuple(getattr(ns, "only", ()) or ()))


def _torus_rho(cfg: RunConfig):
    if cfg.rho is not None:
        return cfg.rho
    return Fraction(cfg.k - 2, 2 * cfg.k) if cfg.k >= 3 else Fraction(1, 6)


def _jsonable(v):
    from .suite import _jsonable as conv
    return conv(v)


def _emit(text: str, out: str | None):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _report(cfg: RunConfig, payload) -> str:
    return json.dumps({"version": version(), "config": cfg.to_dict(), **_jsonable(payload)},
                      indent=2, sort_keys=True) + "\n"


# --- commands ---------------------------------------------------------------------------

def cmd_verify(cfg: RunConfig) -> int:
    from . import suite

    scfg = suite.Config(k=cfg.k, rho=cfg.rho, tol=cfg.tol, tmax=cfg.tmax, step=cfg.step or 0.5,
                        seed=cfg.seed)
    print(f"monodromy-lab {version()} verify: {json.dumps(cfg.to_dict(), sort_keys=True)}")
    results = suite.run_suite(scfg, only=set(cfg.only) or None, echo=print)
    code = suite.exit_code(results)
    counts = {s: sum(r.status == s for r in results) for s in (suite.PASS, suite.FAIL, suite.SKIP)}
    print(f"summary: {counts['PASS']} passed, {counts['FAIL']} failed, {counts['SKIP']} skipped")
    if cfg.out:
        Path(cfg.out).write_text(_report(cfg, {"results": [r.to_dict() for r in results],
                                               "exit_code": code}))
    return code


def cmd_scan(cfg: RunConfig) -> int:
    from . import wkb

    grid = wkb.default_grid(cfg.tmax, cfg.step or 0.05, cfg.tmin)
    scan = wkb.family_scan(_torus_rho(cfg), grid, cfg.side, cfg.precision)
    if cfg.out:
        scan.to_csv(cfg.out)
    else:
        scan.to_csv(sys.stdout)
    return 0


def cmd_find_tn(cfg: RunConfig) -> int:
    from . import wkb

    grid = wkb.default_grid(cfg.tmax, cfg.step or 0.5, cfg.tmin)
    rho = _torus_rho(cfg)
    if cfg.side == "sphere":
        scan = wkb.family_scan(rho, grid, "sphere")
        tns = wkb.find_tn_sphere(scan)
    else:
        scan = wkb.family_scan(rho, grid, "torus", cfg.precision)
        tns = wkb.find_tn(scan, tol=cfg.tol)
    sp = wkb.spacing([r["t_n"] for r in tns])
    rows = []
    for i, r in enumerate(tns):
        row = dict(r)
        if "label" in row:
            lab = row.pop("label")
            row["label"] = lab.kind.value
            row["signature"] = lab.signature
            row["raw_signs"] = lab.raw
        row["spacing"] = sp[i - 1] if i > 0 else None
        rows.append(row)
    _emit(_report(cfg, {"rho": str(rho), "crossings": rows}), cfg.out)
    return 0


def cmd_triangle_report(cfg: RunConfig) -> int:
    from . import triangle as tri

    kmax = max(cfg.k, 3)
    rows = tri.report(range(3, kmax + 1))
    lines = ["k  fixed_point_err  rotation_err  relation_sign  orders"]
    for r in rows:
        lines.append(f"{r['k']:<2d} {r['fixed_point_err']:.3e}        {r['rotation_err']:.3e}     "
                     f"{r['relation_sign']:+d}             {r['orders']}")
    print("\n".join(lines))
    if cfg.out:
        Path(cfg.out).write_text(_report(cfg, {"rows": rows}))
    return 0


def cmd_covers_report(cfg: RunConfig) -> int:
    from . import connections as cn
    from . import covers as cv
    from . import transport as tr

    spec = cv.covering_monodromy(cfg.k)
    rt = cfg.rho_tilde if cfg.rho_tilde is not None else (cfg.k - 1) / (2 * cfg.k)
    loops = tr.sphere_loops(cn.FOUR_POLES)
    rep_d = tr.monodromy(cn.build_D(rt), loops, 1e-11, check=False)
    rep_t = tr.monodromy(cn.build_nabla_tilde(rt), loops, 1e-11, check=False)
    rows = cv.report(rep_d, rep_t, cfg.k)
    print(f"k = {cfg.k}, deck map {spec.deck_map}, genus {cv.genus(spec)}, rho~ = {rt:.6g}")
    for r in rows:
        extra = f"tilde_sign={r['tilde_sign']:+d}" if "tilde_sign" in r else \
            f"tilde_trace={complex(r['tilde_trace']):.6g}"
        print(f"{r['generator']:>10}  D_dev={r['D_dev']:.2e}  {extra}  word={r['word']}")
    if cfg.out:
        Path(cfg.out).write_text(_report(cfg, {"deck_map": spec.deck_map, "rows": rows}))
    return 0


def cmd_wkb_appendix(cfg: RunConfig) -> int:
    from . import wkb

    data = wkb.PathFamilyData(-1.0, np.array([[0.3, 0.2], [0.1, -0.3]]),
                              t_grid=(20, 30, 40, 60, 80, 100, 140, 200))
    limit = wkb.scaled_limit_check(data)
    ts = (10, 20, 40, 80, 160)
    main = wkb.decay_check(1.0 + 0.3j, 0.2, 0.1, 0.05, 0.2, ts)
    mirrored = wkb.decay_check(-1.0, 0.2, 0.1, 0.05, 0.2, ts, mirrored=True)
    strip = lambda rows: [{k: v for k, v in r.items() if k not in ("f", "s")} for r in rows]  # noqa: E731
    _emit(_report(cfg, {"scaled_limit": limit, "decay": strip(main),
                        "decay_mirrored": strip(mirrored)}), cfg.out)
    return 0


DISPATCH = {"verify": cmd_verify, "scan": cmd_scan, "find-tn": cmd_find_tn,
            "triangle-report": cmd_triangle_report, "covers-report": cmd_covers_report,
            "wkb-appendix": cmd_wkb_appendix}


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)  # exits with status 2 on usage errors
    cfg = config_from_args(ns)
    err = cfg.validate()
    if err:
        parser.error(err)
    try:
        return DISPATCH[cfg.command](cfg)
    except OSError as exc:
        print(f"monodromy-lab: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
