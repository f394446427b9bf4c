"""Synthetic inputs shaped like the 2017-01 to 2020 daily sample.

Prices cover 919 business days, so log returns have 918 observations and
the filtered skewness 917, which is also the size of the aligned table.
Cases and uncertainty indices are 7-day calendars covering the same span.
"""

from __future__ import annotations

from importlib import resources
from pathlib import Path

import numpy as np

from .garchs import GarchSParams
from .simulate import SimConfig, business_days, make_rng, prices_from_returns, simulate
from .timeseries import DatedSeries

# alpha0 targets a 0.0131 daily return volatility
REFERENCE_POINT = GarchSParams(mu=-0.0425, alpha0=3.7e-6, alpha1=0.2065, alpha2=0.7720,
                               beta0=0.0, beta1=0.0361, beta2=0.1544)
N_PRICES = 919
START = "2017-01-03"
OUTBREAK = np.datetime64("2020-01-21")
FILES = ("prices.csv", "cases.csv", "epu.csv", "emu.csv", "emv_id.csv")


def _calendar(first, last) -> np.ndarray:
    return np.arange(first, last + np.timedelta64(1, "D"), dtype="datetime64[D]")


def _index(rng, dates, sd: float, level: float, p_zero: float, boost: np.ndarray) -> np.ndarray:
    x = np.empty(len(dates))
    z = 0.0
    for i in range(len(dates)):
        z = 0.3 * z + sd * rng.standard_normal()
        x[i] = z
    vals = np.round(level * np.exp(x + boost), 2)
    vals[rng.random(len(dates)) < p_zero] = 0.0
    return vals


def make_bundle(seed: int = 2020) -> dict[str, DatedSeries]:
    rets = simulate(SimConfig(REFERENCE_POINT, N_PRICES - 1, seed=seed, start_date=START)).returns
    prices = prices_from_returns(rets, 2250.0, "close")
    days = _calendar(prices.dates[0] - np.timedelta64(2, "D"), prices.dates[-1])
    rng = make_rng(seed + 1)
    t = (days - OUTBREAK).astype(int)
    post = t >= 0
    lam = np.where(post, 30000.0 / (1.0 + np.exp(-(t - 70) / 8.0)), 0.0)
    cases = np.where(post, rng.poisson(lam), 0).astype(float)
    cases[days == OUTBREAK] = 1.0
    pandemic = np.where(post, 0.8, 0.0)
    epu = _index(rng, days, 0.45, 100.0, 0.0, pandemic)
    emu = _index(rng, days, 0.9, 20.0, 0.03, pandemic)
    emv = _index(rng, days, 0.4, 2.0, 0.0, np.where(post, 2.0, 0.0))
    emv[(~post) & (rng.random(len(days)) < 0.6)] = 0.0
    return {
        "prices.csv": prices,
        "cases.csv": DatedSeries(days, cases, "new_cases"),
        "epu.csv": DatedSeries(days, epu, "epu"),
        "emu.csv": DatedSeries(days, emu, "emu"),
        "emv_id.csv": DatedSeries(days, emv, "emv_id"),
    }


def write_bundle(out_dir, seed: int = 2020) -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for fname, series in make_bundle(seed).items():
        path = out_dir / fname
        series.to_csv(path, value_column="value", precision=None if fname == "prices.csv" else 2)
        paths.append(path)
    return paths


def bundled_path(name: str) -> Path:
    """Path of a bundled synthetic CSV (``prices.csv``, ``cases.csv``, ...)."""
    return Path(str(resources.files("crashskew") / "data" / name))
