"""Plain-text tables in the usual journal layout, plus long-format CSV sidecars.

Numbers print with 4 decimals; t/z statistics go in brackets after the
estimate and significance stars after the number.
"""

from __future__ import annotations

import csv
import io
import math
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .garchs import PARAM_NAMES, GarchSFit
from .inference import ADFResult, CorrMatrix, Description, RegressionResult, stars

STAR_NOTE = "***, **, * represent statistical significance at 1%, 5%, and 10% levels, respectively."
NA = "N/A"


def fmt(x: float, digits: int = 4) -> str:
    if x is None or not math.isfinite(x):
        return NA
    s = f"{x:.{digits}f}"
    return "0.0000" if s == "-0.0000" else s


def cell(est: float, stat: float, pvalue: float) -> str:
    return f"{fmt(est)}{stars(pvalue)} ({fmt(stat)})"


def _grid(rows: Sequence[Sequence[str]], gap: int = 3) -> str:
    # single-cell rows are section headings and do not set column widths
    body = [r for r in rows if len(r) > 1] or rows
    widths = [max(len(r[j]) if j < len(r) else 0 for r in body) for j in range(max(map(len, rows)))]
    out = []
    for r in rows:
        if len(r) == 1:
            out.append(r[0])
            continue
        parts = [c.ljust(widths[j]) for j, c in enumerate(r)]
        out.append((" " * gap).join(parts).rstrip())
    return "\n".join(out)


class Table:
    """A titled text table with a CSV companion holding full-precision values."""

    def __init__(self, key: str, title: str, subtitle: str, rows: list, notes: str,
                 records: list[dict]):
        self.key = key
        self.title = title
        self.subtitle = subtitle
        self.rows = rows
        self.notes = notes
        self.records = records

    def text(self) -> str:
        parts = [self.title, self.subtitle, "", _grid(self.rows), ""]
        if self.notes:
            parts.append(f"Notes: {self.notes}")
        return "\n".join(parts) + "\n"

    def csv_text(self) -> str:
        buf = io.StringIO()
        fields = []
        for rec in self.records:
            for k in rec:
                if k not in fields:
                    fields.append(k)
        writer = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
        writer.writeheader()
        for rec in self.records:
            writer.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in rec.items()})
        return buf.getvalue()

    def write(self, out_dir) -> tuple[Path, Path]:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        txt = out_dir / f"{self.key}.txt"
        side = out_dir / f"{self.key}.csv"
        txt.write_text(self.text(), encoding="utf-8")
        side.write_text(self.csv_text(), encoding="utf-8")
        return txt, side


def _merge_labels(columns: Sequence[Sequence[str]]) -> list[str]:
    merged: list[str] = []
    for labels in columns:
        prev = None
        for lab in labels:
            if lab not in merged:
                pos = merged.index(prev) + 1 if prev is not None else 0
                merged.insert(pos, lab)
            prev = lab
    return merged


def regression_table(key: str, title: str, subtitle: str,
                     results: Sequence[Optional[RegressionResult]], extra_notes: str = "") -> Table:
    """Side-by-side regression columns; a ``None`` column prints as N/A."""
    present = [r for r in results if r is not None]
    labels = _merge_labels([r.labels for r in present])
    heads = ["Variables"] + [f"({i + 1})" for i in range(len(results))]
    rows = [heads]
    records = []
    for lab in labels:
        row = [lab]
        for ci, res in enumerate(results):
            if res is None or lab not in res.labels:
                row.append("" if res is not None else NA)
                continue
            i = res.labels.index(lab)
            row.append(cell(res.coef[i], res.tstat[i], res.pvalue[i]))
            records.append({"column": ci + 1, "term": lab, "coef": float(res.coef[i]),
                            "stderr": float(res.stderr[i]), "tstat": float(res.tstat[i]),
                            "pvalue": float(res.pvalue[i])})
        rows.append(row)
    stat_rows = [("N", lambda r: str(r.n_obs), "n_obs"), ("R2", lambda r: fmt(r.r2), "r2"),
                 ("Adj-R2", lambda r: fmt(r.adj_r2), "adj_r2"), ("AIC", lambda r: fmt(r.aic), "aic"),
                 ("SC", lambda r: fmt(r.sc), "sc")]
    rows.append([""] * len(heads))
    for name, f, attr in stat_rows:
        rows.append([name] + [f(r) if r is not None else NA for r in results])
    for ci, res in enumerate(results):
        if res is None:
            continue
        for _, _, attr in stat_rows:
            val = getattr(res, attr)
            records.append({"column": ci + 1, "term": attr, "coef": float(val)})
    notes = STAR_NOTE + " The t-statistics are presented in the brackets."
    if extra_notes:
        notes += " " + extra_notes
    return Table(key, title, subtitle, rows, notes, records)


def descriptive_table(key: str, stats_rows: Sequence[tuple[str, Description, Optional[ADFResult]]],
                      n_obs: int) -> Table:
    rows = [["Variables", "Mean", "Min", "Max", "Std. Dev.", "ADF"]]
    records = []
    for name, d, adf in stats_rows:
        adf_txt = f"{fmt(adf.stat)}{adf.stars}" if adf is not None else NA
        rows.append([name, fmt(d.mean), fmt(d.min), fmt(d.max), fmt(d.std), adf_txt])
        records.append({"variable": name, "mean": d.mean, "min": d.min, "max": d.max, "std": d.std,
                        "adf": adf.stat if adf is not None else math.nan,
                        "adf_lags": adf.lags if adf is not None else "",
                        "adf_stars": adf.stars if adf is not None else ""})
    notes = f"{STAR_NOTE} The total observations are {n_obs}."
    return Table(key, "Table 2", "Descriptive statistics", rows, notes, records)


def correlation_table(key: str, panels: Sequence[tuple[str, CorrMatrix, int]]) -> Table:
    rows = []
    records = []
    counts = []
    for pi, (title, cm, n) in enumerate(panels):
        names = cm.names
        rows.append([title])
        rows.append(["Variables"] + names)
        for i, a in enumerate(names):
            row = [a]
            for j in range(i + 1):
                r = cm.r[i, j]
                row.append(NA if not math.isfinite(r) else
                           (fmt(r) if i == j else f"{fmt(r)}{cm.stars(i, j)}"))
                records.append({"panel": pi + 1, "row": a, "col": names[j],
                                "r": float(r), "pvalue": float(cm.pvalue[i, j]), "n": int(cm.n[i, j])})
            rows.append(row)
        counts.append(n)
    letters = "ABCDEFG"
    obs = "; ".join(f"The observations for Panel {letters[i]} are {n}" for i, n in enumerate(counts))
    notes = f"{STAR_NOTE} {obs}."
    return Table(key, "Table 3", "Correlation matrix of the related variables", rows, notes, records)


def fit_report(garchs: GarchSFit, garch11: GarchSFit) -> Table:
    """Two-model comparison: GARCH-S next to GARCH(1,1)."""
    labels = {"mu": "mu", "alpha0": "alpha0", "alpha1": "alpha1", "alpha2": "alpha2",
              "beta0": "beta0", "beta1": "beta1", "beta2": "beta2"}
    rows = [["Parameter", "GARCH-S", "GARCH(1,1)"]]
    records = []
    for i, name in enumerate(PARAM_NAMES):
        cells = []
        for fit in (garchs, garch11):
            est = getattr(fit.params, name)
            if name not in fit.free:
                cells.append(NA)
                continue
            z = fit.zstats[i]
            p = 2.0 * _norm_sf(abs(z)) if math.isfinite(z) else math.nan
            cells.append(cell(est, z, p))
            records.append({"model": fit.model, "param": name, "value": est,
                            "stderr": float(fit.stderr[i]), "z": float(z)})
        rows.append([labels[name], *cells])
    rows.append(["", "", ""])
    for name, attr in (("Log-likelihood", "loglik"), ("AIC", "aic"), ("SIC", "sc"), ("HQ", "hq")):
        digits = 3 if attr == "loglik" else 4
        rows.append([name, fmt(getattr(garchs, attr), digits), fmt(getattr(garch11, attr), digits)])
    rows.append(["Obs", str(garchs.n_obs), str(garch11.n_obs)])
    rows.append(["Converged", str(garchs.converged).lower(), str(garch11.converged).lower()])
    for fit in (garchs, garch11):
        for attr in ("loglik", "aic", "sc", "hq"):
            records.append({"model": fit.model, "param": attr, "value": float(getattr(fit, attr))})
        records.append({"model": fit.model, "param": "n_obs", "value": fit.n_obs})
        records.append({"model": fit.model, "param": "converged", "value": fit.converged})
    notes = (STAR_NOTE + " The z-statistics are presented in the brackets. "
             "GARCH-S starts from the GARCH(1,1) estimates.")
    return Table("fit_report", "GARCH-S and GARCH(1,1) estimates",
                 "Gram-Charlier likelihood truncated at the third moment", rows, notes, records)


def _norm_sf(x: float) -> float:
    return 0.5 * math.erfc(x / math.sqrt(2.0))


def simple_lines(pairs: Sequence[tuple[str, float]]) -> str:
    return "  ".join(f"{k} {fmt(v)}" for k, v in pairs)
