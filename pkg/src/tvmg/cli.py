"""Command-line front end: ``tvmg <subcommand> [options]``.

Every subcommand computes all of its results before writing anything, then
writes tidy CSVs into ``--out`` with a ``<file>.meta.json`` sidecar each.
Exit codes: 0 success, 2 usage error, 3 data error, 4 numeric error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np
import pandas as pd

from tvmg import __version__
from tvmg import reporting as rep
from tvmg.aggregate import PRNG_ALGORITHM, mbb_bands, normal_bands, tv_ols_series
from tvmg.bandwidth import loo_cv_bandwidth
from tvmg.dgp import load_spec, simulate_panel, spec_from_dict
from tvmg.errors import DataError, NumericError, ParameterError
from tvmg.kernels import DEFAULT_ALPHA_GRID, KERNELS, KernelSpec, bandwidth_from_alpha
from tvmg.local_wls import fit_panel
from tvmg.macro import PIPELINE_ORDER, extract_pcs, read_quarterly, read_tcodes, transform_and_annualize
from tvmg.mean_group import (
    INTERCEPT, duration_filter, path_from_fit, significance_periods, static_mg_ols,
)
from tvmg.panel import build_panel, read_records
from tvmg.robustness import lofo, shift_test

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4

# Option defaults, applied after merging the config file.
DEFAULTS = {
    "kernel": "gaussian",
    "level": 0.90,
    "B": 999,
    "c": 1.0,
    "block_len": None,
    "bands": "both",
    "min_duration": 1,
    "k": 3,
    "out": ".",
}


class UsageError(Exception):
    pass


# Parser ---------------------------------------------------------------------

def _common(p, panel=True, bandwidth=False, level=False):
    p.add_argument("--config", help="JSON file of option defaults; flags override it")
    p.add_argument("--out", default=None, help="output directory (default: .)")
    if panel:
        p.add_argument("--input", default=None, help="long-format CSV: unit,group,time,...")
        p.add_argument("--outcome", default=None, help="outcome column")
        p.add_argument("--regressors", default=None,
                       help="comma-separated regressor columns")
    if bandwidth:
        p.add_argument("--kernel", default=None, choices=KERNELS)
        g = p.add_mutually_exclusive_group()
        g.add_argument("--alpha", type=float, default=None, help="bandwidth H = T**alpha")
        g.add_argument("--H", type=float, default=None, help="bandwidth H directly")
        g.add_argument("--cv", action="store_const", const=True, default=None,
                       help="choose alpha by leave-one-unit-out cross-validation")
    if level:
        p.add_argument("--level", type=float, default=None, help="band level (default 0.90)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tvmg", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"tvmg {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    p = sub.add_parser("tvmg", help="mean-group coefficient paths and significance report")
    _common(p, bandwidth=True, level=True)
    p.add_argument("--min-duration", type=int, default=None,
                   help="drop significance runs shorter than this many periods")

    p = sub.add_parser("static-ols", help="full-sample mean-group OLS")
    _common(p)

    p = sub.add_parser("cv-bandwidth", help="cross-validated bandwidth scores")
    _common(p)
    p.add_argument("--kernel", default=None, choices=KERNELS)
    p.add_argument("--grid", default=None, help="comma-separated alpha grid")

    p = sub.add_parser("lofo", help="leave-one-group-out diagnostics for one regressor")
    _common(p, bandwidth=True, level=True)
    p.add_argument("--var", default=None, help="regressor to diagnose (default: first)")

    p = sub.add_parser("shift-test", help="before/after coefficient-shift test")
    _common(p, level=True)
    p.add_argument("--break-year", type=int, default=None,
                   help="first period of the post regime")

    p = sub.add_parser("aggregate-tv", help="time-varying regression on one series")
    _common(p, bandwidth=True, level=True)
    p.add_argument("--bands", default=None, choices=("mbb", "normal", "both"))
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("-B", type=int, default=None, dest="B", help="bootstrap replications")
    p.add_argument("-c", type=float, default=None, dest="c",
                   help="block-length scale: block = floor(c * T**(1/3))")
    p.add_argument("--block-len", type=int, default=None, help="explicit block length")

    p = sub.add_parser("pca", help="principal components of an annual wide CSV")
    _common(p, panel=False)
    p.add_argument("--input", default=None, help="wide CSV: time column then one column per series")
    p.add_argument("-k", type=int, default=None, dest="k", help="number of components")

    p = sub.add_parser("transform", help="apply t-codes and average quarters to years")
    _common(p, panel=False)
    p.add_argument("--input", default=None, help="wide quarterly CSV")
    p.add_argument("--tcodes", default=None, help="CSV series,tcode (else a 'transform' row)")
    p.add_argument("--start-year", type=int, default=None)
    p.add_argument("--end-year", type=int, default=None)

    p = sub.add_parser("simulate", help="draw a synthetic panel")
    _common(p, panel=False)
    p.add_argument("--spec", default=None, help="JSON design file")
    p.add_argument("--seed", type=int, default=None)
    return parser


def _merge_config(args, argv_given: set) -> argparse.Namespace:
    opts = vars(args).copy()
    if opts.get("config"):
        try:
            with open(opts["config"], encoding="utf-8") as fh:
                cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {opts['config']}: {exc}") from None
        if not isinstance(cfg, dict):
            raise UsageError("config file must hold a JSON object")
        cfg = {k.replace("-", "_"): v for k, v in cfg.items()}
        if argv_given & {"alpha", "H", "cv"}:
            for key in ("alpha", "H", "cv"):
                cfg.pop(key, None)
        for key, value in cfg.items():
            if key not in opts or key in ("command", "config"):
                raise UsageError(f"config key {key!r} is not an option of {args.command}")
            if opts[key] is None:
                opts[key] = value
    for key, value in DEFAULTS.items():
        if key in opts and opts[key] is None:
            opts[key] = value
    return argparse.Namespace(**opts)


def _given_dests(parser, argv) -> set:
    """Destinations explicitly set on the command line."""
    probe = parser.parse_args(argv)
    sub = parser._subparsers._group_actions[0].choices[probe.command]
    given = set()
    flags = {s: a.dest for a in sub._actions for s in a.option_strings}
    for tok in argv:
        name = tok.split("=", 1)[0]
        if name in flags:
            given.add(flags[name])
    return given


# Helpers --------------------------------------------------------------------

def _require(args, *names):
    for name in names:
        if getattr(args, name, None) in (None, ""):
            raise UsageError(f"--{name.replace('_', '-')} is required for {args.command}")


def _regressors(args) -> list[str]:
    value = args.regressors
    if isinstance(value, (list, tuple)):
        return [str(v) for v in value]
    return [v.strip() for v in str(value).split(",") if v.strip()]


def _load_panel(args):
    _require(args, "input", "outcome", "regressors")
    records = read_records(args.input)
    return build_panel(records, args.outcome, _regressors(args))


def _bandwidth(args, T: int, panel=None):
    """Resolve (spec, alpha, cv_result) from --alpha / --H / --cv."""
    modes = [m for m in ("alpha", "H", "cv") if getattr(args, m, None) not in (None, False)]
    if len(modes) > 1:
        raise UsageError(f"choose one of --alpha, --H, --cv (got {', '.join(modes)})")
    kind = args.kernel
    if modes == ["H"]:
        return KernelSpec(kind, float(args.H)), None, None
    if modes == ["cv"]:
        if panel is None:
            raise UsageError("--cv needs a panel input")
        cv = loo_cv_bandwidth(panel, kind=kind)
        return KernelSpec(kind, cv.best_H), cv.best_alpha, cv
    alpha = 0.5 if not modes else float(args.alpha)
    return KernelSpec(kind, bandwidth_from_alpha(T, alpha)), alpha, None


def _check_level(args):
    if not 0 < float(args.level) < 1:
        raise UsageError(f"--level must lie in (0, 1), got {args.level}")


class Outputs:
    """Collects files in memory; nothing touches disk until ``commit``."""

    def __init__(self, args, inputs=()):
        self.out = Path(args.out)
        self.inputs = [p for p in inputs if p]
        self.base = {"command": args.command}
        self.files: list[tuple[str, str, dict | None]] = []

    def add_csv(self, name, header, rows, **meta):
        self.files.append((name, rep.csv_text(header, rows), meta))

    def add_json(self, name, obj):
        self.files.append((name, rep.json_text(obj), None))

    def commit(self) -> list[Path]:
        self.out.mkdir(parents=True, exist_ok=True)
        common = rep.metadata(__version__, self.inputs, **self.base)
        written = []
        for name, text, meta in self.files:
            path = self.out / name
            rep.atomic_write(path, text)
            sidecar = dict(common)
            sidecar.update(meta or {})
            rep.atomic_write(rep.meta_path(path), rep.json_text(sidecar))
            written.append(path)
        return written


def _kernel_meta(spec: KernelSpec, alpha, level=None):
    meta = {"kernel": spec.kind, "H": spec.H, "alpha": alpha, "seed": None}
    if level is not None:
        meta["level"] = level
    return meta


# Subcommands ------------------------------------------------------------------

def cmd_tvmg(args) -> Outputs:
    _check_level(args)
    panel, report = _load_panel(args)
    spec, alpha, cv = _bandwidth(args, panel.T, panel)
    path = path_from_fit(panel, fit_panel(panel, spec), args.level)
    sig = significance_periods(path)
    min_len = int(args.min_duration)
    if min_len < 1:
        raise UsageError("--min-duration must be >= 1")
    kept = duration_filter(sig, min_len)

    meta = _kernel_meta(spec, alpha, args.level)
    meta.update(n_units=report.n_retained, dropped_units=report.dropped_units,
                cv_selected=cv is not None)
    out = Outputs(args, [args.input])
    out.add_csv("tvmg_path.csv", rep.PATH_HEADER, rep.path_rows(path), **meta)
    out.add_json("tvmg_path.json", rep.path_json(path))
    out.add_csv("significance.csv", rep.SIGNIFICANCE_HEADER, rep.significance_rows(kept),
                min_duration=min_len, **meta)
    return out


def cmd_static_ols(args) -> Outputs:
    panel, report = _load_panel(args)
    res = static_mg_ols(panel)
    rows = [[v, res.coef[k], res.se[k], res.tvalue[k], res.degenerate[k]]
            for k, v in enumerate(res.var_names)]
    out = Outputs(args, [args.input])
    out.add_csv("static_ols.csv", ["var", "coef", "se", "t", "degenerate"], rows,
                n_used=res.n_used, n_excluded=res.n_excluded,
                dropped_units=report.dropped_units, seed=None)
    return out


def cmd_cv_bandwidth(args) -> Outputs:
    panel, _ = _load_panel(args)
    if args.grid is None:
        grid = DEFAULT_ALPHA_GRID
    elif isinstance(args.grid, (list, tuple)):
        grid = tuple(float(a) for a in args.grid)
    else:
        try:
            grid = tuple(float(a) for a in str(args.grid).split(","))
        except ValueError:
            raise UsageError(f"--grid must be comma-separated numbers, got {args.grid!r}") from None
    cv = loo_cv_bandwidth(panel, grid=grid, kind=args.kernel)
    rows = [[a, h, s] for a, h, s in zip(cv.grid, cv.H_values, cv.scores)]
    best_score = float(cv.scores[cv.grid.index(cv.best_alpha)])
    rows.append(["best", cv.best_H, best_score])
    out = Outputs(args, [args.input])
    out.add_csv("cv_bandwidth.csv", ["alpha", "H", "score"], rows, kernel=cv.kind,
                H=cv.best_H, best_alpha=cv.best_alpha, seed=None)
    return out


def cmd_lofo(args) -> Outputs:
    _check_level(args)
    panel, _ = _load_panel(args)
    spec, alpha, _ = _bandwidth(args, panel.T, panel)
    fit = fit_panel(panel, spec)
    path = path_from_fit(panel, fit, args.level)
    res = lofo(panel, path, spec, var=args.var, fit=fit)
    rows = zip(res.time_labels.tolist(), res.mdr, res.sfr)
    out = Outputs(args, [args.input])
    out.add_csv("lofo.csv", ["time", "mdr", "sfr"], rows, var=res.var,
                groups=[str(g) for g in res.groups], **_kernel_meta(spec, alpha, args.level))
    return out


def cmd_shift_test(args) -> Outputs:
    _check_level(args)
    _require(args, "break_year")
    panel, _ = _load_panel(args)
    try:
        results = shift_test(panel, int(args.break_year), level=args.level)
    except ParameterError as exc:
        raise UsageError(str(exc)) from None
    header = ["var", "pre", "post", "delta", "se", "ci_lo", "ci_hi", "p", "n_used"]
    rows = [[r.var, r.pre, r.post, r.delta, r.se, r.ci_lo, r.ci_hi, r.p_value, r.n_used]
            for r in results]
    out = Outputs(args, [args.input])
    out.add_csv("shift_test.csv", header, rows, break_year=int(args.break_year),
                level=args.level, seed=None)
    return out


def _read_series(args):
    _require(args, "input", "outcome")
    try:
        df = pd.read_csv(args.input)
    except (OSError, pd.errors.ParserError) as exc:
        raise DataError(f"cannot read {args.input}: {exc}") from None
    regs = _regressors(args) if args.regressors else []
    cols = ["time", args.outcome] + regs
    absent = [c for c in cols if c not in df.columns]
    if absent:
        raise DataError(f"unknown column(s): {', '.join(absent)}")
    df = df.sort_values("time")
    values = df[cols[1:]].apply(pd.to_numeric, errors="coerce")
    bad = values.isna().any(axis=1)
    if bad.any():
        t = df["time"][bad].iloc[0]
        col = values.columns[values[bad].iloc[0].isna()][0]
        raise DataError(f"missing or non-numeric {col} at time {t}")
    y = values[args.outcome].to_numpy(np.float64)
    X = values[regs].to_numpy(np.float64) if regs else None
    return df["time"].to_numpy(np.int64), y, X, [INTERCEPT] + regs


def cmd_aggregate_tv(args) -> Outputs:
    _check_level(args)
    times, y, X, names = _read_series(args)
    if getattr(args, "cv", None):
        raise UsageError("--cv needs a panel; use --alpha or --H for aggregate-tv")
    spec, alpha, _ = _bandwidth(args, len(y))
    want_mbb = args.bands in ("mbb", "both")
    if want_mbb:
        _require(args, "seed")
    rows = []
    meta = _kernel_meta(spec, alpha, args.level)
    if args.bands in ("normal", "both"):
        nb = normal_bands(y, X, spec, args.level)
        for t, label in enumerate(times):
            for k, name in enumerate(names):
                rows.append([int(label), name, nb.beta_hat[t, k], nb.lo[t, k], nb.hi[t, k],
                             "normal", None, None, None])
    if want_mbb:
        try:
            bb = mbb_bands(y, X, spec, c=float(args.c), B=int(args.B), level=args.level,
                           seed=int(args.seed), block_len=args.block_len)
        except ParameterError as exc:
            raise UsageError(str(exc)) from None
        for t, label in enumerate(times):
            for k, name in enumerate(names):
                rows.append([int(label), name, bb.beta_hat[t, k], bb.lo[t, k], bb.hi[t, k],
                             "mbb", bb.B, bb.block_len, bb.seed])
        meta.update(seed=bb.seed, B=bb.B, block_len=bb.block_len, prng=PRNG_ALGORITHM,
                    n_failed_max=int(bb.n_failed.max()))
    else:
        tv_ols_series(y, X, spec)
    header = ["time", "coef", "beta", "lo", "hi", "method", "B", "block_len", "seed"]
    out = Outputs(args, [args.input])
    out.add_csv("aggregate_tv.csv", header, rows, **meta)
    return out


def cmd_pca(args) -> Outputs:
    _require(args, "input")
    try:
        df = pd.read_csv(args.input)
    except (OSError, pd.errors.ParserError) as exc:
        raise DataError(f"cannot read {args.input}: {exc}") from None
    if df.shape[1] < 2:
        raise DataError("PCA input needs a time column and at least one series")
    time_col = df.columns[0]
    data = df.iloc[:, 1:].apply(pd.to_numeric, errors="coerce")
    incomplete = [c for c in data.columns if data[c].isna().any()]
    data = data.drop(columns=incomplete)
    if data.shape[1] == 0:
        raise DataError("every series has missing values")
    k = int(args.k)
    if not 1 <= k <= data.shape[1]:
        raise UsageError(f"-k must lie in 1..{data.shape[1]}, got {k}")
    fs = extract_pcs(data.to_numpy(np.float64), k, names=list(data.columns))
    pcs = [f"pc{j + 1}" for j in range(k)]
    meta = {"k": k, "dropped_series": incomplete, "pipeline": PIPELINE_ORDER, "seed": None}
    out = Outputs(args, [args.input])
    out.add_csv("pca_scores.csv", ["time"] + pcs,
                ([t] + list(r) for t, r in zip(df[time_col].tolist(), fs.scores)), **meta)
    out.add_csv("pca_loadings.csv", ["series"] + pcs,
                ([n] + list(r) for n, r in zip(fs.names, fs.loadings)), **meta)
    out.add_csv("pca_explained.csv", ["pc", "explained"], zip(pcs, fs.explained), **meta)
    return out


def cmd_transform(args) -> Outputs:
    _require(args, "input")
    quarterly, codes = read_quarterly(args.input)
    if args.tcodes:
        codes = read_tcodes(args.tcodes)
    if not codes:
        raise DataError("no t-codes: pass --tcodes or include a 'transform' row")
    annual = transform_and_annualize(quarterly, codes, args.start_year, args.end_year)
    cols = list(annual.data.columns)
    rows = ([int(yr)] + list(r) for yr, r in zip(annual.years, annual.data.to_numpy()))
    out = Outputs(args, [args.input, args.tcodes])
    out.add_csv("annual.csv", ["time"] + cols, rows, pipeline=annual.order,
                dropped_series=annual.dropped, seed=None)
    return out


def cmd_simulate(args) -> Outputs:
    _require(args, "seed")
    if args.spec:
        spec = load_spec(args.spec)
    else:
        spec = spec_from_dict({"N": 50, "T": 31})
    spec = spec.with_seed(int(args.seed))
    panel, beta0 = simulate_panel(spec)
    records = panel.to_records("y")
    out = Outputs(args, [args.spec])
    out.base["seed"] = spec.seed
    out.add_csv("panel.csv", list(records.columns), records.itertuples(index=False),
                N=spec.N, T=spec.T)
    truth = ([int(t), v, beta0[i, k]] for i, t in enumerate(panel.time_labels)
             for k, v in enumerate(panel.var_names))
    out.add_csv("true_beta.csv", ["time", "var", "beta0"], truth)
    return out


COMMANDS = {
    "tvmg": cmd_tvmg,
    "static-ols": cmd_static_ols,
    "cv-bandwidth": cmd_cv_bandwidth,
    "lofo": cmd_lofo,
    "shift-test": cmd_shift_test,
    "aggregate-tv": cmd_aggregate_tv,
    "pca": cmd_pca,
    "transform": cmd_transform,
    "simulate": cmd_simulate,
}


def _fail(code: int, message: str) -> int:
    print(f"tvmg: error: {message}", file=sys.stderr)
    return code


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    try:
        args = _merge_config(args, _given_dests(parser, argv))
        outputs = COMMANDS[args.command](args)
        outputs.commit()
    except UsageError as exc:
        return _fail(EXIT_USAGE, str(exc))
    except (ParameterError, ValueError) as exc:
        if isinstance(exc, DataError):
            return _fail(EXIT_DATA, str(exc))
        return _fail(EXIT_USAGE, str(exc))
    except DataError as exc:
        return _fail(EXIT_DATA, str(exc))
    except (FileNotFoundError, IsADirectoryError, PermissionError) as exc:
        return _fail(EXIT_DATA, str(exc))
    except NumericError as exc:
        return _fail(EXIT_NUMERIC, str(exc))
    except np.linalg.LinAlgError as exc:
        return _fail(EXIT_NUMERIC, f"linear algebra failure: {exc}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
