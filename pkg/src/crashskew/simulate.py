"""Synthetic GARCH-S paths with known parameters.

Innovations are drawn exactly from the Gram-Charlier density by
accept-reject. The proposal is ``N(0, PROPOSAL_SCALE**2)``: a standard
normal proposal cannot dominate ``phi * psi**2`` (the ratio grows like
``x**6``), whereas a wider normal does for every ``s``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .garchs import GarchSParams
from .timeseries import DatedSeries

PROPOSAL_SCALE = 1.5
ENVELOPE_GRID = np.linspace(-12.0, 12.0, 24001)  # 1e-3 spacing
ENVELOPE_INFLATION = 1.01
DEFAULT_BURN_IN = 500
RNG_ALGORITHM = "PCG64"

_HE3_GRID = ENVELOPE_GRID ** 3 - 3.0 * ENVELOPE_GRID
_TAIL_GRID = PROPOSAL_SCALE * np.exp(-0.5 * ENVELOPE_GRID ** 2 * (1.0 - PROPOSAL_SCALE ** -2))


def make_rng(seed: int, algorithm: str = RNG_ALGORITHM) -> np.random.Generator:
    bitgen = getattr(np.random, algorithm, None)
    if bitgen is None or not isinstance(bitgen, type) or not issubclass(bitgen, np.random.BitGenerator):
        raise ValueError(f"unknown bit generator {algorithm!r}")
    return np.random.Generator(bitgen(seed))


def _ratio(x, s: float):
    """Target density over proposal density."""
    psi = 1.0 + (s / 6.0) * (x * x * x - 3.0 * x)
    return (PROPOSAL_SCALE * np.exp(-0.5 * x * x * (1.0 - PROPOSAL_SCALE ** -2))
            * psi * psi / (1.0 + s * s / 6.0))


def envelope(s: float) -> float:
    """Accept-reject constant: grid maximum of target/proposal, inflated by 1%.

    Bounded for every finite ``s``: as ``|s|`` grows the target tends to
    ``phi * He3**2 / 6``.
    """
    if not math.isfinite(s):
        raise ValueError(f"s must be finite, got {s}")
    psi = 1.0 + (s / 6.0) * _HE3_GRID
    m = float(np.max(_TAIL_GRID * psi * psi)) / (1.0 + s * s / 6.0)
    if not (math.isfinite(m) and m > 0):
        raise ArithmeticError(f"envelope computation failed for s={s}")
    return ENVELOPE_INFLATION * m


def sample_eta(s: float, rng: np.random.Generator) -> float:
    """One draw from the Gram-Charlier innovation density with skewness parameter ``s``."""
    m = envelope(s)
    while True:
        x = PROPOSAL_SCALE * rng.standard_normal()
        if rng.random() * m <= _ratio(x, s):
            return float(x)


def sample_eta_many(s: float, size: int, rng: np.random.Generator,
                    return_rate: bool = False):
    """``size`` draws at a fixed ``s`` (vectorized accept-reject)."""
    m = envelope(s)
    out = np.empty(size)
    filled = proposed = accepted = 0
    while filled < size:
        batch = max(int((size - filled) * m * 1.1), 1024)
        x = PROPOSAL_SCALE * rng.standard_normal(batch)
        u = rng.random(batch)
        acc = x[u * m <= _ratio(x, s)]
        proposed += batch
        accepted += len(acc)
        take = min(len(acc), size - filled)
        out[filled:filled + take] = acc[:take]
        filled += take
    if return_rate:
        return out, accepted / proposed
    return out


@dataclass(frozen=True)
class SimConfig:
    params: GarchSParams
    n: int
    burn_in: int = DEFAULT_BURN_IN
    seed: int = 0
    innovation: str = "gram-charlier"  # or "gaussian"
    rng_algorithm: str = RNG_ALGORITHM
    start_date: str = "2017-01-03"

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.burn_in < 0:
            raise ValueError("burn_in must be >= 0")
        if self.innovation not in ("gram-charlier", "gaussian"):
            raise ValueError(f"unknown innovation law {self.innovation!r}")
        self.params.validate()


@dataclass(frozen=True, eq=False)
class SimPath:
    """Generated returns plus the generator's internal paths (same indexing as returns)."""

    returns: DatedSeries
    eps: np.ndarray
    h: np.ndarray
    eta: np.ndarray
    s: np.ndarray


def business_days(start: str, n: int) -> np.ndarray:
    first = np.busday_offset(np.datetime64(start, "D"), 0, roll="forward")
    return np.busday_offset(first, np.arange(n))


def simulate(config: SimConfig) -> SimPath:
    """Run the GARCH-S recursions forward from their unconditional levels."""
    p = config.params
    rng = make_rng(config.seed, config.rng_algorithm)
    gaussian = config.innovation == "gaussian"
    total = config.burn_in + config.n
    r = np.empty(total)
    eps = np.empty(total)
    h = np.empty(total)
    eta = np.empty(total)
    s = np.empty(total)
    c, a0, a1, a2, b0, b1, b2 = (p.mu, p.alpha0, p.alpha1, p.alpha2, p.beta0, p.beta1, p.beta2)
    h_t = a0 / (1.0 - a1 - a2)
    s_t = b0 / (1.0 - b2)
    r_prev = 0.0
    for t in range(total):
        z = rng.standard_normal() if gaussian else sample_eta(s_t, rng)
        r_t = c * r_prev + math.sqrt(h_t) * z
        # shocks are re-derived from the rounded return so a filter over r
        # reproduces these paths exactly
        e_t = r_t - c * r_prev
        n_t = e_t / math.sqrt(h_t)
        r[t], eps[t], h[t], eta[t], s[t] = r_t, e_t, h_t, n_t, s_t
        h_t = a0 + a1 * (e_t * e_t) + a2 * h_t
        s_t = b0 + b1 * (n_t * n_t * n_t) + b2 * s_t
        r_prev = r_t
    keep = slice(config.burn_in, total)
    dates = business_days(config.start_date, config.n)
    return SimPath(DatedSeries(dates, r[keep], "r"), eps[keep], h[keep], eta[keep], s[keep])


def simulate_path(config: SimConfig) -> DatedSeries:
    return simulate(config).returns


def prices_from_returns(returns: DatedSeries, start_price: float = 100.0, name: str = "price") -> DatedSeries:
    """Price path whose log returns are ``returns``; one extra leading business day."""
    first = np.busday_offset(returns.dates[0], -1, roll="backward")
    dates = np.concatenate([[first], returns.dates])
    levels = start_price * np.exp(np.concatenate([[0.0], np.cumsum(returns.values)]))
    return DatedSeries(dates, levels, name)
