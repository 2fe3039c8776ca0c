"""Command line front end: configuration parsing, run orchestration, file emission.

    plateau solve|analyze|lsc-test|sweep --config <path> [--out <dir>]
            [--seed <u64>] [--threads <n>]

The configuration is an INI-style file with the flat sections [domain],
[curves], [solver] and [run]; see the README for every key.
"""
from __future__ import annotations

import argparse
import configparser
import logging
import math
import os
import sys
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import analysis, io
from .errors import ParseError, PlateauError, ValidationError
from .field import make_grid
from .geometry import Ball, Box, CircleCurve, Curve, Domain, PolylineCurve, make_domain
from .optimizer import LINE_SEARCHES, TRACE_COLUMNS, alternate_minimize, vertex_normals
from .params import SolverParams
from .sheet import ahlfors_ratio, dyadic_radii

logger = logging.getLogger(__name__)

MODES = ("solve", "analyze", "lsc-test", "sweep")
EXIT_OK, EXIT_ERROR, EXIT_USAGE = 0, 1, 2
U64_MAX = 2 ** 64 - 1


@dataclass(frozen=True)
class RunConfig:
    domain: Domain
    curves: tuple
    params: SolverParams
    M: int = 64
    K: int = 256
    mode: str = "solve"
    out_dir: Path = Path("plateau-out")
    seed: int = 0
    threads: int = 1
    line_search: str = "fixed"
    smoothing: Optional[float] = None
    epsilons: tuple = ()
    sequence: str = "wrinkle"
    terms: int = 32
    alpha: float = 0.5
    pairs: int = 100_000
    input_dir: Optional[Path] = None


# ---------------------------------------------------------------------------
# parsing


def _read_ini(path: Path) -> configparser.ConfigParser:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        text = path.read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError(_text_line(path, exc.start), "file is not valid UTF-8") from None
    try:
        cp.read_string(text, source=str(path))
    except configparser.MissingSectionHeaderError as exc:
        raise ParseError(exc.lineno, "key outside of any section") from None
    except configparser.DuplicateSectionError as exc:
        raise ParseError(exc.lineno or 0, f"duplicate section [{exc.section}]") from None
    except configparser.DuplicateOptionError as exc:
        raise ParseError(exc.lineno or 0, f"duplicate key {exc.option!r}") from None
    except configparser.ParsingError as exc:
        lineno, line = exc.errors[0]
        raise ParseError(lineno, f"cannot parse {line.strip()!r}") from None
    unknown = set(cp.sections()) - {"domain", "curves", "solver", "run"}
    if unknown:
        name = sorted(unknown)[0]
        raise ParseError(_section_line(text, name), f"unknown section [{name}]")
    return cp


def _text_line(path: Path, byte_offset: int) -> int:
    return path.read_bytes()[:byte_offset].count(b"\n") + 1


def _section_line(text: str, name: str) -> int:
    for n, line in enumerate(text.splitlines(), 1):
        if line.strip() == f"[{name}]":
            return n
    return 0


def _get(cp, section: str, key: str, default=None):
    if cp.has_option(section, key):
        return cp.get(section, key).strip()
    return default


def _float(value: str, name: str, positive: bool = False, nonneg: bool = False) -> float:
    try:
        x = float(value)
    except (TypeError, ValueError):
        raise ValidationError(name, f"not a number: {value!r}") from None
    if not math.isfinite(x):
        raise ValidationError(name, "must be finite")
    if positive and not x > 0:
        raise ValidationError(name, "must be positive")
    if nonneg and x < 0:
        raise ValidationError(name, "must be nonnegative")
    return x


def _int(value: str, name: str, lo: int = 1, hi: Optional[int] = None) -> int:
    try:
        x = int(value)
    except (TypeError, ValueError):
        raise ValidationError(name, f"not an integer: {value!r}") from None
    if x < lo or (hi is not None and x > hi):
        raise ValidationError(name, f"out of range: {x}")
    return x


def _vec(value: Optional[str], name: str, n: int = 3) -> np.ndarray:
    if value is None:
        raise ValidationError(name, "missing")
    parts = value.replace(",", " ").split()
    if len(parts) != n:
        raise ValidationError(name, f"expected {n} numbers")
    return np.array([_float(p, name) for p in parts])


def _parse_domain(cp) -> Domain:
    if not cp.has_section("domain"):
        raise ValidationError("domain", "missing [domain] section")
    outer = Box(_vec(_get(cp, "domain", "outer_lo"), "outer_lo"), _vec(_get(cp, "domain", "outer_hi"), "outer_hi"))
    kind = _get(cp, "domain", "inner", "box").lower()
    if kind == "box":
        inner = Box(_vec(_get(cp, "domain", "inner_lo"), "inner_lo"), _vec(_get(cp, "domain", "inner_hi"), "inner_hi"))
    elif kind == "ball":
        radius = _float(_get(cp, "domain", "inner_radius"), "inner_radius", positive=True)
        inner = Ball(_vec(_get(cp, "domain", "inner_center"), "inner_center"), radius)
    else:
        raise ValidationError("inner", f"unknown region type {kind!r} (box or ball)")
    return make_domain(outer, inner)


def _parse_curve(cp, name: str) -> Curve:
    kind = _get(cp, "curves", f"{name}.type", "circle").lower()
    if kind == "circle":
        radius = _float(_get(cp, "curves", f"{name}.radius"), f"{name}.radius", positive=True)
        axis = _get(cp, "curves", f"{name}.axis", "0 0 1")
        return CircleCurve(_vec(_get(cp, "curves", f"{name}.center"), f"{name}.center"), radius,
                           _vec(axis, f"{name}.axis"))
    if kind == "polyline":
        raw = _get(cp, "curves", f"{name}.points")
        if raw is None:
            raise ValidationError(f"{name}.points", "missing")
        pts = [_vec(chunk, f"{name}.points") for chunk in raw.split(";") if chunk.strip()]
        return PolylineCurve(np.array(pts))
    raise ValidationError(f"{name}.type", f"unknown curve type {kind!r} (circle or polyline)")


def _parse_curves(cp) -> tuple:
    if not cp.has_section("curves"):
        raise ValidationError("curves", "missing [curves] section")
    names = sorted({key.split(".", 1)[0] for key in cp.options("curves")})
    if names != ["gamma0", "gamma1"]:
        raise ValidationError("curves", f"exactly two curves gamma0 and gamma1 are supported, got {names}")
    return tuple(_parse_curve(cp, n) for n in names)


def _parse_params(cp) -> tuple[SolverParams, dict]:
    get = lambda key, default=None: _get(cp, "solver", key, default)  # noqa: E731
    if get("epsilon") is None:
        raise ValidationError("epsilon", "missing")
    eps = _float(get("epsilon"), "epsilon", positive=True)
    kw = {"epsilon": eps, "h": _float(get("h", repr(eps / 4.0)), "h", positive=True)}
    for key in ("c_eps", "lambda_cap", "cg_tol"):
        if get(key) is not None:
            kw[key] = _float(get(key), key, positive=True)
    if get("delta_eps") is not None:
        kw["delta_eps"] = _float(get("delta_eps"), "delta_eps", nonneg=True)
    for key in ("max_outer", "sheet_sweeps"):
        if get(key) is not None:
            kw[key] = _int(get(key), key)
    params = SolverParams(**kw)
    extra = {
        "M": _int(get("M", "64"), "M", lo=2),
        "K": _int(get("K", "256"), "K", lo=8),
        "line_search": get("line_search", "fixed"),
        "smoothing": None if get("smoothing") is None else _float(get("smoothing"), "smoothing", nonneg=True),
    }
    if extra["line_search"] not in LINE_SEARCHES:
        raise ValidationError("line_search", f"must be one of {LINE_SEARCHES}")
    return params, extra


def parse_config(path) -> RunConfig:
    """Read and validate a configuration file."""
    path = Path(path)
    if not path.is_file():
        raise ValidationError("config", f"no such file: {path}")
    cp = _read_ini(path)
    domain = _parse_domain(cp)
    curves = _parse_curves(cp)
    params, extra = _parse_params(cp)
    run = lambda key, default=None: _get(cp, "run", key, default)  # noqa: E731
    mode = run("mode", "solve")
    if mode not in MODES:
        raise ValidationError("mode", f"must be one of {MODES}")
    sequence = run("sequence", "wrinkle")
    if sequence not in analysis.GENERATORS:
        raise ValidationError("sequence", f"must be one of {sorted(analysis.GENERATORS)}")
    eps_list = run("epsilons")
    epsilons = tuple(_float(e, "epsilons", positive=True) for e in eps_list.replace(",", " ").split()) \
        if eps_list else ()
    return RunConfig(
        domain=domain, curves=curves, params=params, M=extra["M"], K=extra["K"], mode=mode,
        out_dir=Path(run("out", "plateau-out")), seed=_int(run("seed", "0"), "seed", lo=0, hi=U64_MAX),
        line_search=extra["line_search"], smoothing=extra["smoothing"], epsilons=epsilons,
        sequence=sequence, terms=_int(run("terms", "32"), "terms"),
        alpha=_float(run("alpha", "0.5"), "alpha", positive=True),
        pairs=_int(run("pairs", "100000"), "pairs"),
        input_dir=None if run("input") is None else Path(run("input")),
    )


# ---------------------------------------------------------------------------
# modes


def _solve_once(cfg: RunConfig, params: SolverParams):
    grid = make_grid(cfg.domain, params.h)
    return alternate_minimize(cfg.domain, cfg.curves, params, M=cfg.M, K=cfg.K, grid=grid,
                              line_search=cfg.line_search, smoothing=cfg.smoothing)


def run_solve(cfg: RunConfig, manifest: io.Manifest) -> int:
    res = _solve_once(cfg, cfg.params)
    out = cfg.out_dir
    io.write_csv(out / "trace.csv", TRACE_COLUMNS, (row.as_row() for row in res.trace))
    manifest.add("trace.csv")
    io.write_obj(out / "final.obj", res.sheet)
    manifest.add("final.obj")
    io.write_vtk(out / "field.vtk", res.u)
    manifest.add("field.vtk")
    manifest.complete("solve")
    last = res.trace[-1]
    print(f"solve: {res.termination} after {len(res.trace)} outer iterations; "
          f"total={last.report.total:.10g} area={last.area:.6g} lipschitz={last.lipschitz:.4g}")
    if res.ahlfors_flags:
        print(f"note: Ahlfors ratio above lambda_cap at iterations {res.ahlfors_flags}")
    return EXIT_OK


def run_analyze(cfg: RunConfig, manifest: io.Manifest) -> int:
    src = cfg.input_dir or cfg.out_dir
    for name in ("final.obj", "field.vtk"):
        if not (src / name).is_file():
            print(f"error: missing input file {src / name} (run 'plateau solve' first)", file=sys.stderr)
            return EXIT_USAGE
    sheet = io.read_obj(src / "final.obj")
    u = io.read_vtk(src / "field.vtk")
    p = cfg.params
    dist = analysis.node_distances(u.grid, sheet)
    reports = [
        analysis.decay_profile(u, sheet, p.epsilon, dist),
        analysis.gradient_decay(u, sheet, p.epsilon, dist),
        analysis.holder_quotient(u, cfg.alpha, cfg.pairs, cfg.seed, p),
        _ahlfors_report(sheet, p.lambda_cap),
    ]
    if not p.lemma_hypothesis(cfg.domain.eta0):
        note = f"standing hypothesis 11 eps < eta0/4 fails (eta0={cfg.domain.eta0:g})"
        reports[:2] = [replace(r, note=(r.note + "; " if r.note else "") + note) for r in reports[:2]]
    io.write_csv(cfg.out_dir / "lemmas.csv", analysis.REPORT_COLUMNS, (r.as_row() for r in reports))
    manifest.add("lemmas.csv")
    manifest.complete("analyze")
    _print_reports(reports)
    return EXIT_OK


def _ahlfors_report(sheet, lambda_cap: float) -> analysis.LemmaReport:
    rep = ahlfors_ratio(sheet, dyadic_radii(sheet))
    flagged = int(rep.sup_ratio > lambda_cap)
    return analysis.LemmaReport("ahlfors", int(len(np.unique(sheet.points, axis=0)) * len(rep.radii)),
                                flagged, float(lambda_cap - rep.sup_ratio),
                                {"lambda_cap": lambda_cap, "radii": len(rep.radii)}, rep.sup_ratio, rep.note)


def run_lsc(cfg: RunConfig, manifest: io.Manifest) -> int:
    seq = analysis.make_sequence(cfg.sequence, cfg.terms)
    balls = analysis.lsc_balls(seq.limit, 10, cfg.seed)
    rows, _, _ = analysis.lsc_terms(seq, balls)
    io.write_csv(cfg.out_dir / "lsc.csv", analysis.LSC_COLUMNS, rows)
    manifest.add("lsc.csv")
    reports = [analysis.lsc_harness(seq, seed=cfg.seed, balls=balls)]
    reports.append(analysis.density_estimate(seq, seed=cfg.seed))
    reports.append(_coverage_report(seq))
    io.write_csv(cfg.out_dir / "lsc_report.csv", analysis.REPORT_COLUMNS, (r.as_row() for r in reports))
    manifest.add("lsc_report.csv")
    manifest.complete("lsc-test")
    _print_reports(reports)
    verdict = "pass" if all(r.passed for r in reports) else "FAIL"
    print(f"lsc-test verdict: {verdict}")
    return EXIT_OK


def _coverage_report(seq: analysis.SheetSequence) -> analysis.LemmaReport:
    """Disk coverage by the last term around the middle of the limit sheet."""
    C = analysis.HARNESS_C
    lim = seq.limit
    i, j = lim.M // 2, 0
    center = lim.vertices[i, j]
    normal = vertex_normals(lim)[i, j]
    sd = float(seq.sup_dist[-1])
    p = lim.points
    diam = float(np.linalg.norm(p.max(axis=0) - p.min(axis=0)))
    r = C * sd / 0.25 if sd > 0 else diam / 16.0
    eta = sd / r
    frac = analysis.disk_coverage(seq.sheets[-1], center, r, normal, eta, C)
    return analysis.LemmaReport("disk_coverage", 1, int(frac < 1.0), frac - 1.0,
                                {"C": C, "eta": eta, "r": r}, frac, analysis.C_NOTE)


SWEEP_COLUMNS = ("eps", "c_eps", "delta_eps", "h", "outer_iterations", "termination", "total", "area",
                 "lipschitz", "ahlfors_sup", "min_u", "max_u")


def run_sweep(cfg: RunConfig, manifest: io.Manifest) -> int:
    if not cfg.epsilons:
        raise ValidationError("epsilons", "sweep needs [run] epsilons")
    rows = []
    for eps in cfg.epsilons:
        h = cfg.params.h if cfg.params.h <= eps / 2.0 else eps / 4.0
        params = cfg.params.with_(epsilon=eps, h=h, c_eps=math.sqrt(eps), delta_eps=eps)
        res = _solve_once(cfg, params)
        last = res.trace[-1]
        rows.append((eps, params.c_eps, params.delta_eps, h, len(res.trace), res.termination,
                     last.report.total, last.area, last.lipschitz, last.ahlfors_sup,
                     float(res.u.values.min()), float(res.u.values.max())))
        print(f"sweep eps={eps:g}: total={last.report.total:.10g} area={last.area:.6g} ({res.termination})")
    io.write_csv(cfg.out_dir / "scaling.csv", SWEEP_COLUMNS, rows)
    manifest.add("scaling.csv")
    manifest.complete("sweep")
    return EXIT_OK


def _print_reports(reports) -> None:
    print("---- lemma reports ----")
    for r in reports:
        print(r.summary())
        if r.note:
            print(f"    note: {r.note}")


RUNNERS = {"solve": run_solve, "analyze": run_analyze, "lsc-test": run_lsc, "sweep": run_sweep}


def run(cfg: RunConfig) -> int:
    """Execute ``cfg.mode`` and return a process exit status."""
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    manifest = io.Manifest(cfg.out_dir, [f"mode {cfg.mode}", f"seed {cfg.seed}", f"threads {cfg.threads}"])
    manifest.write()
    try:
        return RUNNERS[cfg.mode](cfg, manifest)
    except PlateauError as exc:
        manifest.complete(f"failed {type(exc).__name__}")
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


# ---------------------------------------------------------------------------
# entry point


def _u64(text: str) -> int:
    try:
        x = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= x <= U64_MAX:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return x


def _positive(text: str) -> int:
    try:
        x = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if x < 1:
        raise argparse.ArgumentTypeError("thread count must be at least 1")
    return x


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="plateau", description="Phase-field Plateau solver and lemma checks.")
    ap.add_argument("mode", choices=MODES)
    ap.add_argument("--config", required=True, type=Path, help="INI configuration file")
    ap.add_argument("--out", type=Path, help="output directory (default: [run] out or ./plateau-out)")
    ap.add_argument("--seed", type=_u64, help="seed for the randomized checks (default: [run] seed or 0)")
    ap.add_argument("--threads", type=_positive,
                    help="worker threads (default: $PLATEAU_THREADS or 1); recorded in the MANIFEST")
    ap.add_argument("-v", "--verbose", action="store_true", help="log solver progress")
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    threads = args.threads
    if threads is None:
        env = os.environ.get("PLATEAU_THREADS")
        try:
            threads = _positive(env) if env else 1
        except argparse.ArgumentTypeError as exc:
            print(f"error: PLATEAU_THREADS: {exc}", file=sys.stderr)
            return EXIT_USAGE
    try:
        cfg = parse_config(args.config)
    except (ParseError, ValidationError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except PlateauError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    cfg = replace(cfg, mode=args.mode, threads=threads,
                  out_dir=args.out if args.out is not None else cfg.out_dir,
                  seed=args.seed if args.seed is not None else cfg.seed)
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
