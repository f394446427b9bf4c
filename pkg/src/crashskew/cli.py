"""Command-line interface.

Exit codes: 0 success, 1 usage or data error, 2 model non-convergence (the
report is still written).
"""

from __future__ import annotations

import argparse
import datetime as dt
import logging
import re
import sys
from pathlib import Path

import numpy as np

from . import tables
from .garchs import GarchSParams, conditional_skewness
from .inference import (Intercept, Interaction, LaggedDep, RegressionSpec, Var, adf_test, corr_matrix,
                        describe, lag_search, ols)
from .optimizer import fit_garch11, fit_garchs
from .pipeline import PipelineConfig, run_pipeline
from .simulate import SimConfig, prices_from_returns, simulate
from .synthetic import REFERENCE_POINT, write_bundle
from .timeseries import DEFAULT_CUTOFF, dummy, load_csv, log_return, read_table

EXIT_OK, EXIT_ERROR, EXIT_NONCONVERGED = 0, 1, 2

log = logging.getLogger("crashskew")


class UsageError(ValueError):
    pass


def read_config(path) -> dict:
    """Flat ``key = value`` file; ``#`` starts a comment. Keys use dashes or underscores."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = re.match(r"^([A-Za-z_][\w-]*)\s*[=:]\s*(.*)$", line)
        if not m:
            raise UsageError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        out[m.group(1).replace("-", "_").lower()] = m.group(2).strip()
    return out


def _date(text: str) -> dt.date:
    try:
        return dt.date.fromisoformat(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an ISO date: {text!r}") from None


# --------------------------------------------------------------------------
# commands

def cmd_fit(args) -> int:
    prices = load_csv(args.prices, args.date_col, args.value_col)
    r = log_return(prices, "r")
    g11 = fit_garch11(r)
    gs = fit_garchs(r, garch11=g11)
    report = tables.fit_report(gs, g11)
    out = Path(args.out_dir)
    report.write(out)
    conditional_skewness(gs).to_csv(out / "skew.csv", value_column="Skew")
    sys.stdout.write(report.text())
    return EXIT_OK if gs.converged and g11.converged else EXIT_NONCONVERGED


_PIPELINE_FLAGS = ("prices", "cases", "epu", "emu", "emv_id", "skew", "date_col", "value_col",
                   "prices_col", "cases_col", "epu_col", "emu_col", "emv_id_col", "skew_col",
                   "cutoff", "max_p", "max_q", "criterion", "out_dir")


def pipeline_config(args) -> PipelineConfig:
    values = read_config(args.config) if args.config else {}
    unknown = set(values) - set(PipelineConfig.keys())
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
    for key in _PIPELINE_FLAGS:
        v = getattr(args, key)
        if v is not None:
            values[key] = v
    for key in ("max_p", "max_q"):
        if key in values:
            values[key] = int(values[key])
    if isinstance(values.get("cutoff"), str):
        values["cutoff"] = dt.date.fromisoformat(values["cutoff"])
    if "criterion" in values:
        values["criterion"] = str(values["criterion"]).lower()
    return PipelineConfig(**values)


def cmd_pipeline(args) -> int:
    cfg = pipeline_config(args)
    res = run_pipeline(cfg)
    for path in res.written:
        print(path)
    return EXIT_OK if res.converged else EXIT_NONCONVERGED


_TERM = re.compile(r"^(?:(?P<dummy>[\w.]+)\s*\*\s*)?(?P<name>[\w.]+)\s*(?:\(\s*(?:t\s*)?(?P<lag>-?\d+)\s*\))?$")


def parse_term(text: str, dependent: str):
    """``Intercept``, ``name``, ``name(-k)``, ``D*name(-k)``; ``dep(-1)`` is the lagged dependent."""
    text = text.strip()
    if text.lower() in ("intercept", "const", "c"):
        return Intercept()
    m = _TERM.match(text)
    if not m:
        raise UsageError(f"cannot parse regression term {text!r}")
    lag = abs(int(m.group("lag") or 0))
    if m.group("dummy"):
        return Interaction(m.group("dummy"), m.group("name"), lag)
    if m.group("name") == dependent and lag == 1:
        return LaggedDep(1)
    return Var(m.group("name"), lag)


def read_spec(path) -> dict:
    cfg = read_config(path)
    if "dependent" not in cfg:
        raise UsageError(f"{path}: 'dependent' is required")
    dep = cfg["dependent"]
    terms = [parse_term(t, dep) for t in cfg.get("terms", "Intercept").split(",") if t.strip()]
    return {"spec": RegressionSpec(dep, tuple(terms)), "search_p": cfg.get("search_p"),
            "search_q": cfg.get("search_q"), "interact": cfg.get("interact")}


def cmd_regress(args) -> int:
    spec_info = read_spec(args.spec)
    spec = spec_info["spec"]
    data = read_table(args.data, args.date_col)
    needs_dummy = [c for c in spec.required_columns() if c not in data and c == "D_epid"]
    if spec_info["interact"] == "D_epid" or needs_dummy:
        if "D_epid" not in data:
            data = data.with_column("D_epid", dummy(data.dates, args.cutoff).values)
    for col in spec.required_columns() + [c for c in (spec_info["search_p"], spec_info["search_q"]) if c]:
        if col not in data:
            raise UsageError(f"column {col!r} not found in {args.data} (have {', '.join(data.names)})")
    if spec_info["search_p"] or spec_info["search_q"]:
        found = lag_search(spec, data, spec_info["search_p"], spec_info["search_q"],
                           args.max_p, args.max_q, args.criterion, spec_info["interact"])
        result = found.result
        note = f"Lag lengths chosen by {args.criterion.upper()}: p={found.p}, q={found.q}."
    else:
        result = ols(spec, data)
        note = ""
    table = tables.regression_table("regression", "Regression", f"Dependent variable: {spec.dependent}",
                                    [result], note)
    if args.out_dir:
        table.write(args.out_dir)
    sys.stdout.write(table.text())
    return EXIT_OK


def cmd_adf(args) -> int:
    s = load_csv(args.input, args.date_col, args.value_col)
    res = adf_test(s, args.max_lags)
    crit = "  ".join(f"{k} {tables.fmt(v)}" for k, v in res.critical.items())
    print(f"ADF {tables.fmt(res.stat)}{res.stars}  lags {res.lags}  nobs {res.nobs}")
    print(f"critical values: {crit}")
    print("reject unit root at 5%" if res.rejects("5%") else "fail to reject unit root at 5%")
    return EXIT_OK


def cmd_describe(args) -> int:
    s = load_csv(args.input, args.date_col, args.value_col)
    d = describe(s)
    print(tables.simple_lines([("mean", d.mean), ("min", d.min), ("max", d.max), ("std", d.std)])
          + f"  n {d.n}")
    return EXIT_OK


def cmd_corr(args) -> int:
    cols = [c.strip() for c in args.columns.split(",")] if args.columns else None
    data = read_table(args.data, args.date_col, cols)
    names = cols or data.names
    panels = [("Panel A The whole sample", corr_matrix(data, names), len(data))]
    if args.cutoff is not None:
        cut = np.datetime64(args.cutoff, "D")
        pre, post = data.rows(data.dates < cut), data.rows(data.dates >= cut)
        panels += [(f"Panel B Before {args.cutoff}", corr_matrix(pre, names), len(pre)),
                   (f"Panel C From {args.cutoff}", corr_matrix(post, names), len(post))]
    table = tables.correlation_table("correlation", panels)
    if args.out_dir:
        table.write(args.out_dir)
    sys.stdout.write(table.text())
    return EXIT_OK


def cmd_simulate(args) -> int:
    if args.bundle:
        for p in write_bundle(args.out_dir or ".", args.seed):
            print(p)
        return EXIT_OK
    if args.params:
        vals = [float(v) for v in args.params.split(",")]
        if len(vals) != 7:
            raise UsageError("--params needs 7 comma-separated values: mu,alpha0,alpha1,alpha2,beta0,beta1,beta2")
        params = GarchSParams(*vals)
    else:
        params = REFERENCE_POINT
    path = simulate(SimConfig(params, args.n, args.burn_in, args.seed, args.innovation))
    prices = prices_from_returns(path.returns)
    out = args.out or sys.stdout
    lines = ["date,price,r,h,s"]
    price = prices.values.tolist()
    r, h, s = path.returns.values.tolist(), path.h.tolist(), path.s.tolist()
    lines.append(f"{prices.dates[0]},{price[0]!r},,,")
    for i, d in enumerate(path.returns.dates):
        lines.append(f"{d},{price[i + 1]!r},{r[i]!r},{h[i]!r},{s[i]!r}")
    text = "\n".join(lines) + "\n"
    if out is sys.stdout:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")
    return EXIT_OK


# --------------------------------------------------------------------------
# parser

def _add_series_flags(p, input_flag: str = "--input"):
    p.add_argument(input_flag, required=True, help="CSV file with a header row and ISO dates")
    p.add_argument("--date-col", default="date")
    p.add_argument("--value-col", default="value")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="crashskew",
                                     description="GARCH-S conditional skewness and crash-risk regressions")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit GARCH-S and GARCH(1,1) to a price series")
    _add_series_flags(p, "--prices")
    p.add_argument("--out-dir", default=".")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("pipeline", help="produce Tables 2-9 from prices, cases and uncertainty indices")
    p.add_argument("--config", help="flat key = value file; flags override it")
    for name in ("prices", "cases", "epu", "emu", "emv-id", "skew"):
        p.add_argument(f"--{name}", default=None)
    p.add_argument("--date-col", default=None)
    p.add_argument("--value-col", default=None)
    for name in ("prices", "cases", "epu", "emu", "emv-id", "skew"):
        p.add_argument(f"--{name}-col", default=None, help=f"value column of --{name} (default --value-col)")
    p.add_argument("--cutoff", type=_date, default=None, help=f"regime start (default {DEFAULT_CUTOFF})")
    p.add_argument("--max-p", type=int, default=None, help="default 3")
    p.add_argument("--max-q", type=int, default=None, help="default 3")
    p.add_argument("--criterion", choices=("aic", "sc"), default=None,
                   help="lag structure for column (1) of Tables 7-9 (default sc)")
    p.add_argument("--seed", type=int, default=None, help="accepted for uniformity; the pipeline has no randomness")
    p.add_argument("--out-dir", default=None)
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("regress", help="OLS regression from a spec file")
    p.add_argument("--data", required=True, help="wide CSV: a date column plus named columns")
    p.add_argument("--spec", required=True, help="key = value file: dependent, terms, search_p, search_q, interact")
    p.add_argument("--date-col", default="date")
    p.add_argument("--cutoff", type=_date, default=DEFAULT_CUTOFF)
    p.add_argument("--max-p", type=int, default=3)
    p.add_argument("--max-q", type=int, default=3)
    p.add_argument("--criterion", choices=("aic", "sc"), default="aic")
    p.add_argument("--out-dir", default=None)
    p.set_defaults(func=cmd_regress)

    p = sub.add_parser("adf", help="augmented Dickey-Fuller test (constant, AIC lag choice)")
    _add_series_flags(p)
    p.add_argument("--max-lags", type=int, default=None)
    p.set_defaults(func=cmd_adf)

    p = sub.add_parser("describe", help="mean, min, max, standard deviation")
    _add_series_flags(p)
    p.set_defaults(func=cmd_describe)

    p = sub.add_parser("corr", help="Pearson correlation matrix with significance stars")
    p.add_argument("--data", required=True)
    p.add_argument("--columns", default=None, help="comma-separated subset")
    p.add_argument("--date-col", default="date")
    p.add_argument("--cutoff", type=_date, default=None, help="also report pre/post panels")
    p.add_argument("--out-dir", default=None)
    p.set_defaults(func=cmd_corr)

    p = sub.add_parser("simulate", help="generate a GARCH-S path (CSV: date,price,r,h,s)")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--burn-in", type=int, default=500)
    p.add_argument("--innovation", choices=("gram-charlier", "gaussian"), default="gram-charlier")
    p.add_argument("--params", default=None, help="mu,alpha0,alpha1,alpha2,beta0,beta1,beta2")
    p.add_argument("--out", default=None, help="output CSV (default stdout)")
    p.add_argument("--bundle", action="store_true",
                   help="write the synthetic prices/cases/epu/emu/emv_id inputs to --out-dir")
    p.add_argument("--out-dir", default=None)
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (OSError, ValueError, KeyError, RuntimeError, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
