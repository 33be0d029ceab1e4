"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 data error, 3 degenerate statistic
under ``--strict``.
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .cpoint import estimate_cp
from .dgp import DGPSpec, simulate
from .experiments import load_plan, parse_flat_config, run_plan
from .limitdist import DEFAULT_GRID, DEFAULT_LEVELS, quantile_table
from .relevance import TestConfig, report_sqrt_scale, run_test
from .setestim import estimate_S
from .trim import emit_deltaF, select_m
from .tsdata import DataError, PreprocessPolicy, load_csv, preprocess, save_csv

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_DEGENERATE = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# config keys accepted by commands that read a data file, with converters
CONFIG_KEYS = {
    "delta": float,
    "alpha": float,
    "K": int,
    "m": lambda s: None if s.lower() in ("", "none", "auto") else int(s),
    "norm": str,
    "reps": int,
    "seed": int,
    "K_set": int,
    "kappa": float,
    "cutoff": float,
    "header": lambda s: _bool(s),
    "interpolate_missing": lambda s: _bool(s),
    "zero_negatives": lambda s: _bool(s),
}


def _bool(s: str) -> bool:
    low = s.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise UsageError(f"expected a boolean, got {s!r}")


def _read_config(path) -> dict:
    if path is None:
        return {}
    try:
        raw = parse_flat_config(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise UsageError(f"config file not found: {path}") from None
    except ValueError as exc:
        raise UsageError(f"{path}: {exc}") from None
    out = {}
    for key, value in raw.items():
        if key not in CONFIG_KEYS:
            raise UsageError(f"{path}: unknown config key {key!r}")
        try:
            out[key] = CONFIG_KEYS[key](value)
        except ValueError as exc:
            raise UsageError(f"{path}: bad value for {key!r}: {exc}") from None
    return out


def _settings(args) -> dict:
    """Config file values overridden by explicitly given flags."""
    s = _read_config(args.config)
    for key in CONFIG_KEYS:
        v = getattr(args, key, None)
        if v is not None:
            s[key] = v
    return s


def _load(args, s) -> np.ndarray:
    X = load_csv(args.input, has_header=s.get("header", False))
    policy = PreprocessPolicy(
        interpolate_missing=s.get("interpolate_missing", True),
        zero_negatives=s.get("zero_negatives", False),
    )
    if X.has_missing and not policy.interpolate_missing:
        raise DataError(f"{args.input}: missing values present and interpolation is disabled")
    return np.asarray(preprocess(X, policy))


def _emit(items: dict, fmt: str, out=None) -> None:
    out = out or sys.stdout
    if fmt == "csv":
        w = csv.writer(out, lineterminator="\n")
        w.writerow(list(items))
        w.writerow([_fmt(v) for v in items.values()])
    else:
        for k, v in items.items():
            out.write(f"{k} = {_fmt(v)}\n")


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _common(p: argparse.ArgumentParser, data=True):
    if data:
        p.add_argument("input", help="CSV file, one row per time point")
        p.add_argument("--header", action="store_const", const=True, default=None,
                       help="first CSV line is a header")
        p.add_argument("--no-interpolate", dest="interpolate_missing", action="store_const",
                       const=False, default=None, help="fail instead of filling missing values")
        p.add_argument("--zero-negatives", action="store_const", const=True, default=None,
                       help="clamp negative values to zero")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--threads", type=int, default=None,
                   help="worker threads (default: $RELCPD_THREADS or 1); never changes results")
    p.add_argument("--format", choices=("text", "csv"), default="text")
    p.add_argument("--config", default=None, help="flat key = value settings file")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="relcpd", description="Inference for relevant mean changes.")
    parser.add_argument("--version", action="version", version=f"relcpd {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    t = sub.add_parser("test", help="test H0: ||delta||^2 <= Delta")
    _common(t)
    t.add_argument("--delta", type=float, default=None, help="threshold on the squared scale (required)")
    t.add_argument("--alpha", type=float, default=None)
    t.add_argument("--K", type=int, default=None)
    t.add_argument("--norm", choices=("normalized_l2", "sparsity_adjusted"), default=None)
    t.add_argument("--m", type=int, default=None, help="fixed trimming lag (default: data-driven)")
    t.add_argument("--reps", type=int, default=None, help="draws for the quantile table")
    t.add_argument("--K-set", dest="K_set", type=int, default=None)
    t.add_argument("--kappa", type=float, default=None)
    t.add_argument("--cutoff", type=float, default=None)
    t.add_argument("--strict", action="store_true", help="exit 3 on a degenerate statistic")

    q = sub.add_parser("quantiles", help="Monte Carlo quantile table of G or H")
    _common(q, data=False)
    q.add_argument("dist", choices=("G", "H"))
    q.add_argument("K", type=int, nargs="?", default=20)
    q.add_argument("--levels", default=",".join(str(x) for x in DEFAULT_LEVELS))
    q.add_argument("--reps", type=int, default=100_000)
    q.add_argument("--grid-size", type=int, default=DEFAULT_GRID)
    q.add_argument("--out", default=None, help="write CSV with a metadata header here")

    sm = sub.add_parser("select-m", help="data-driven trimming lag")
    _common(sm)
    sm.add_argument("--cutoff", type=float, default=None)
    sm.add_argument("--curves", default=None, help="write the difference curves as CSV")
    sm.add_argument("--plot", default=None, help="write the difference curves as SVG")

    cp = sub.add_parser("estimate-cp", help="change location estimate")
    _common(cp)

    es = sub.add_parser("estimate-set", help="estimated set of changing coordinates")
    _common(es)
    es.add_argument("--m", type=int, default=None)
    es.add_argument("--K-set", dest="K_set", type=int, default=None)
    es.add_argument("--kappa", type=float, default=None)
    es.add_argument("--cutoff", type=float, default=None)
    es.add_argument("--out", default=None, help="per-coordinate diagnostics CSV")

    si = sub.add_parser("simulate", help="draw one simulated data set")
    _common(si, data=False)
    si.add_argument("design", nargs="*", help="model name and/or key=value design settings")
    si.add_argument("--out", required=True)

    ex = sub.add_parser("experiment", help="run a simulation plan")
    _common(ex, data=False)
    ex.add_argument("plan", help="flat key = value plan file")
    ex.add_argument("--out", default=None, help="directory for CSV tables and manifest")
    return parser


def cmd_test(args) -> int:
    s = _settings(args)
    if "delta" not in s:
        raise UsageError("--delta is required (there is no default threshold)")
    X = _load(args, s)
    kw = {k: s[k] for k in ("delta", "alpha", "K", "m", "norm", "reps", "seed", "K_set", "kappa", "cutoff")
          if k in s}
    try:
        cfg = TestConfig(**kw)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        res = run_test(X, cfg, threads=args.threads)
    items = res.as_dict()
    root = report_sqrt_scale(res)
    items["delta_sqrt"] = root.delta
    items["delta_alpha_sqrt"] = root.delta_alpha
    items["ci_upper_sqrt_hi"] = root.ci_upper[1]
    items["ci_two_sqrt_lo"], items["ci_two_sqrt_hi"] = root.ci_two_sided
    _emit(items, args.format)
    if res.warning:
        print(f"warning: {res.warning}", file=sys.stderr)
        if args.strict:
            return EXIT_DEGENERATE
    return EXIT_OK


def cmd_quantiles(args) -> int:
    try:
        levels = [float(x) for x in args.levels.split(",") if x.strip()]
        table = quantile_table(args.dist, args.K, levels, args.reps, args.seed or 0,
                               args.threads, args.grid_size)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if args.out:
        table.to_csv(args.out)
    buf = io.StringIO()
    if args.format == "csv":
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["level", "quantile"])
        for lv, qv in zip(table.levels, table.quantiles):
            w.writerow([repr(float(lv)), repr(float(qv))])
    else:
        buf.write(f"dist = {table.dist}\nK = {table.K}\nreps = {table.reps}\nseed = {table.seed}\n")
        for lv, qv in zip(table.levels, table.quantiles):
            buf.write(f"q[{lv:g}] = {float(qv)!r}\n")
    sys.stdout.write(buf.getvalue())
    return EXIT_OK


def cmd_select_m(args) -> int:
    s = _settings(args)
    X = _load(args, s)
    fit = estimate_cp(X)
    try:
        sel = select_m(X, fit.k_hat, s.get("cutoff", 0.01))
    except ValueError as exc:
        raise DataError(str(exc)) from None
    if args.curves or args.plot:
        emit_deltaF(sel, args.curves or Path(args.plot).with_suffix(".csv"), args.plot)
    _emit({"k_hat": fit.k_hat, "m1": sel.m1, "m2": sel.m2, "m_hat": sel.m_hat,
           "cap1": sel.caps[0], "cap2": sel.caps[1], "cutoff": sel.cutoff}, args.format)
    return EXIT_OK


def cmd_estimate_cp(args) -> int:
    s = _settings(args)
    fit = estimate_cp(_load(args, s))
    _emit({"k_hat": fit.k_hat, "theta_hat": fit.theta_hat, "objective": fit.objective}, args.format)
    return EXIT_OK


def cmd_estimate_set(args) -> int:
    s = _settings(args)
    X = _load(args, s)
    fit = estimate_cp(X)
    m = s.get("m")
    if m is None:
        try:
            m = select_m(X, fit.k_hat, s.get("cutoff", 0.01)).m_hat
        except ValueError as exc:
            raise DataError(str(exc)) from None
    try:
        est = estimate_S(X, fit.k_hat, m, s.get("K_set", 20), s.get("kappa", 1.5))
    except ValueError as exc:
        raise DataError(str(exc)) from None
    if args.out:
        est.to_csv(args.out)
    _emit({"k_hat": fit.k_hat, "m": m, "threshold": est.threshold, "S_size": len(est.S_hat),
           "S_hat": " ".join(map(str, est.S_hat))}, args.format)
    return EXIT_OK


def cmd_simulate(args) -> int:
    mapping = {}
    if args.config:
        try:
            mapping.update(parse_flat_config(Path(args.config).read_text(encoding="utf-8")))
        except (FileNotFoundError, ValueError) as exc:
            raise UsageError(str(exc)) from None
    for tok in args.design:
        if "=" in tok:
            k, _, v = tok.partition("=")
            mapping[k.strip()] = v.strip()
        else:
            mapping["model"] = tok
    if args.seed is not None:
        mapping["seed"] = args.seed
    try:
        spec = DGPSpec.from_mapping(mapping)
    except KeyError as exc:
        raise UsageError(exc.args[0]) from None
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    save_csv(simulate(spec), args.out)
    _emit({"out": args.out, "n": spec.n, "p": spec.p, "k0": spec.k0, "model": spec.model,
           "spatial": spec.spatial, "s": spec.s, "signal": spec.signal, "seed": spec.seed}, args.format)
    return EXIT_OK


def cmd_experiment(args) -> int:
    try:
        plan = load_plan(args.plan)
    except FileNotFoundError:
        raise DataError(f"plan file not found: {args.plan}") from None
    except KeyError as exc:
        raise UsageError(f"{args.plan}: {exc.args[0]}") from None
    except ValueError as exc:
        raise UsageError(f"{args.plan}: {exc}") from None
    if args.seed is not None:
        from dataclasses import replace

        plan = replace(plan, seed=args.seed)
    tables = run_plan(plan, args.out, threads=args.threads)
    for kind, table in tables.items():
        if args.format == "text":
            sys.stdout.write(f"# {kind}\n")
        sys.stdout.write(table.to_csv())
    return EXIT_OK


COMMANDS = {
    "test": cmd_test,
    "quantiles": cmd_quantiles,
    "select-m": cmd_select_m,
    "estimate-cp": cmd_estimate_cp,
    "estimate-set": cmd_estimate_set,
    "simulate": cmd_simulate,
    "experiment": cmd_experiment,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # usage errors, --help and --version
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    if args.threads is not None and args.threads < 1:
        print("relcpd: error: --threads must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"relcpd {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        print(f"relcpd {args.command}: error: file not found: {exc.filename or exc}", file=sys.stderr)
        return EXIT_DATA
    except DataError as exc:
        print(f"relcpd {args.command}: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
