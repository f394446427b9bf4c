"""End-to-end run: GARCH-S skewness, then descriptive, correlation and regression tables."""

from __future__ import annotations

import datetime as dt
import logging
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Optional

import numpy as np

from . import tables
from .garchs import conditional_skewness
from .inference import (ADFResult, RegressionError, adf_test, corr_matrix, describe, eq2_spec,
                        lag_search, ols, split_coefficient)
from .optimizer import fit_garch11, fit_garchs
from .timeseries import (DEFAULT_CUTOFF, AlignedTable, DatedSeries, align, dummy, load_csv,
                         log_change_zero_guard, log_growth, log_return)

logger = logging.getLogger(__name__)

UNCERTAINTY = {"epu": "rEPU", "emu": "rEMU", "emv_id": "rEMV_ID"}


class PipelineError(RuntimeError):
    pass


@dataclass
class PipelineConfig:
    prices: Optional[str] = None
    cases: Optional[str] = None
    epu: Optional[str] = None
    emu: Optional[str] = None
    emv_id: Optional[str] = None
    skew: Optional[str] = None  # precomputed skewness CSV; skips the GARCH-S fit
    date_col: str = "date"
    value_col: str = "value"
    prices_col: Optional[str] = None
    cases_col: Optional[str] = None
    epu_col: Optional[str] = None
    emu_col: Optional[str] = None
    emv_id_col: Optional[str] = None
    skew_col: Optional[str] = None
    cutoff: dt.date = DEFAULT_CUTOFF
    max_p: int = 3
    max_q: int = 3
    criterion: str = "sc"
    out_dir: str = "report"

    def validate(self) -> "PipelineConfig":
        if self.max_p < 1 or self.max_q < 0:
            raise PipelineError("max_p must be >= 1 and max_q >= 0")
        if self.criterion not in ("aic", "sc"):
            raise PipelineError(f"criterion must be aic or sc, got {self.criterion!r}")
        need = ["cases", "epu"] + (["prices"] if self.skew is None else ["skew"])
        for key in need:
            if getattr(self, key) is None:
                raise PipelineError(f"missing input: --{key.replace('_', '-')}")
        for key in ("prices", "cases", "epu", "emu", "emv_id", "skew"):
            path = getattr(self, key)
            if path is not None and not Path(path).is_file():
                raise FileNotFoundError(f"{key}: no such file {path}")
        return self

    def column(self, key: str) -> str:
        return getattr(self, f"{key}_col") or self.value_col

    @classmethod
    def keys(cls) -> list[str]:
        return [f.name for f in fields(cls)]


@dataclass
class PipelineResult:
    table: AlignedTable
    tables: list
    fits: Optional[tuple] = None
    converged: bool = True
    written: list = field(default_factory=list)


def load_inputs(cfg: PipelineConfig):
    """Transformed series (Skew, rCases, uncertainty changes) plus the fits if any."""
    fits = None
    load = lambda key: load_csv(getattr(cfg, key), cfg.date_col, cfg.column(key))
    if cfg.skew is not None:
        skew = load("skew").renamed("Skew")
        r = None
    else:
        r = log_return(load("prices"), "r")
        g11 = fit_garch11(r)
        gs = fit_garchs(r, garch11=g11)
        fits = (gs, g11)
        skew = conditional_skewness(gs, "Skew")
    series = [skew, log_growth(load("cases"), "rCases")]
    for key, name in UNCERTAINTY.items():
        if getattr(cfg, key) is not None:
            series.append(log_change_zero_guard(load(key), name))
    if r is not None:
        series.insert(0, r)
    return series, fits


def _adf(values) -> Optional[ADFResult]:
    if np.ptp(values) == 0 or len(values) < 25:
        return None
    return adf_test(values)


def _regress(spec, data):
    try:
        return ols(spec, data)
    except RegressionError as exc:
        raise PipelineError(f"regression {spec.labels} failed: {exc}") from exc


def run_pipeline(cfg: PipelineConfig, write: bool = True) -> PipelineResult:
    cfg.validate()
    series, fits = load_inputs(cfg)
    data = align(series)
    for s in series:
        if data.dropped.get(s.name):
            logger.info("%s: %d dates outside the common sample", s.name, data.dropped[s.name])
    data = data.with_column("D_epid", dummy(data.dates, cfg.cutoff).values)
    unc = [UNCERTAINTY[k] for k in UNCERTAINTY if getattr(cfg, k) is not None]
    out = []

    # Table 2
    names = (["r"] if "r" in data else []) + ["Skew", "rCases"] + unc
    out.append(tables.descriptive_table(
        "table2_descriptive", [(n, describe(data[n]), _adf(data[n])) for n in names], len(data)))

    # Table 3
    cnames = ["Skew", "rCases"] + unc
    cut = np.datetime64(cfg.cutoff, "D")
    pre = data.rows(data.dates < cut)
    post = data.rows(data.dates >= cut)
    last_pre = (cfg.cutoff - dt.timedelta(days=1)).strftime("%B %d, %Y").replace(" 0", " ")
    first_post = cfg.cutoff.strftime("%B %d, %Y").replace(" 0", " ")
    out.append(tables.correlation_table("table3_correlation", [
        ("Panel A The whole sample", corr_matrix(data, cnames), len(data)),
        (f"Panel B Subsample with ending date {last_pre}", corr_matrix(pre, cnames), len(pre)),
        (f"Panel C Subsample with starting date {first_post}", corr_matrix(post, cnames), len(post)),
    ]))

    # Table 4: rCases lags 1..3
    out.append(tables.regression_table(
        "table4_cases", "Table 4", "The effects of COVID-19 on stock market crash risk",
        [_regress(eq2_spec(p=p), data) for p in (1, 2, 3)]))

    # Table 5: rEPU lags 0..3
    out.append(tables.regression_table(
        "table5_epu", "Table 5", "The effects of EPU on stock market crash risk",
        [_regress(eq2_spec(cases=None, uncertainty="rEPU", q=q), data) for q in (0, 1, 2, 3)]))

    # Table 6: joint lag search
    base = eq2_spec(cases=None)
    found = {}
    for crit in ("aic", "sc"):
        try:
            found[crit] = lag_search(base, data, "rCases", "rEPU", cfg.max_p, cfg.max_q, crit)
        except RegressionError as exc:
            raise PipelineError(f"lag search ({crit}) failed: {exc}") from exc
    out.append(tables.regression_table(
        "table6_cases_epu", "Table 6", "The effects of COVID-19 and EPU on stock market crash risk",
        [found["aic"].result, found["sc"].result],
        "The optimal lag length in column (1) is determined by the AIC criterion, "
        f"while the SC criterion determines the optimal lag length in column (2) "
        f"(AIC: p={found['aic'].p}, q={found['aic'].q}; SC: p={found['sc'].p}, q={found['sc'].q})."))

    # Tables 7-9: regime interaction, main criterion first
    order = [cfg.criterion, "aic" if cfg.criterion == "sc" else "sc"]
    lags = [(found[c].p, found[c].q) for c in order]
    regime_ok = np.ptp(data["D_epid"]) > 0
    regime_note = "" if regime_ok else "N/A: the regime dummy is constant over the sample."

    def eq3(var, p, q):
        if not regime_ok:
            return None
        return _regress(eq2_spec(p=p, uncertainty=var, q=q, dummy="D_epid", interact=True), data)

    t7 = [eq3("rEPU", p, q) for p, q in lags]
    notes7 = f"Lag lengths follow Table 6 ({order[0].upper()} then {order[1].upper()})."
    for i, res in enumerate(t7):
        if res is not None:
            eff = split_coefficient(res, "D_epid", "rEPU", 0)
            notes7 += (f" Column ({i + 1}): rEPU_(t) effect before the cutoff {tables.fmt(eff.pre)}"
                       f" ({tables.fmt(eff.pre_t)}), during the pandemic {tables.fmt(eff.pandemic)}"
                       f" ({tables.fmt(eff.pandemic_t)}).")
    if regime_note:
        notes7 += " " + regime_note
    out.append(tables.regression_table("table7_interaction", "Table 7",
                                       "The different role of EPU during the pandemic", t7, notes7))

    for key, var, title in (("table8_emu", "rEMU", "Robustness results from EMU"),
                            ("table9_emv_id", "rEMV_ID", "Robustness results from EMV_ID")):
        if var not in data:
            logger.warning("%s skipped: no %s input", key, var)
            continue
        cols = [_regress(eq2_spec(p=p, uncertainty=var, q=q), data) for p, q in lags]
        cols += [eq3(var, p, q) for p, q in lags]
        num = key[5]
        out.append(tables.regression_table(key, f"Table {num}", title, cols, regime_note))

    converged = fits is None or fits[0].converged
    result = PipelineResult(data, out, fits, converged)
    if write:
        out_dir = Path(cfg.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        for t in out:
            result.written.extend(t.write(out_dir))
        if fits is not None:
            result.written.extend(tables.fit_report(*fits).write(out_dir))
            skew = conditional_skewness(fits[0])
            skew.to_csv(out_dir / "skew.csv", value_column="Skew")
            result.written.append(out_dir / "skew.csv")
        data.to_csv(out_dir / "aligned.csv")
        result.written.append(out_dir / "aligned.csv")
    return result
