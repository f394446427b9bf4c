"""GARCH-S recursions and the third-order Gram-Charlier likelihood.

Model, for returns ``r_t``::

    r_t   = c r_{t-1} + eps_t,        eps_t = sqrt(h_t) eta_t
    h_t   = a0 + a1 eps_{t-1}^2 + a2 h_{t-1}
    s_t   = b0 + b1 eta_{t-1}^3 + b2 s_{t-1}

The standardized shock has density ``phi(x) psi(x)^2 / G`` with
``psi = 1 + s/6 (x^3 - 3x)`` and ``G = 1 + s^2/6``. Squaring the Hermite
polynomial keeps the density positive for every ``s``, and ``G`` is its
exact normalizer, so no truncation region for ``s`` is needed.
"""

from __future__ import annotations

import math
from dataclasses import astuple, dataclass, field, fields
from typing import Optional

import numpy as np
from numba import njit
from scipy import integrate, stats

from .timeseries import DatedSeries

LOG_2PI = math.log(2.0 * math.pi)
PARAM_NAMES = ("mu", "alpha0", "alpha1", "alpha2", "beta0", "beta1", "beta2")
MIN_FILTER_LENGTH = 10


class ParameterError(ValueError):
    pass


class LikelihoodError(ArithmeticError):
    """Non-finite likelihood contribution; ``index`` is the position in the filtered paths."""

    def __init__(self, message: str, index: int):
        super().__init__(message)
        self.index = index


class RankDeficiencyError(np.linalg.LinAlgError):
    pass


@dataclass(frozen=True)
class GarchSParams:
    mu: float
    alpha0: float
    alpha1: float
    alpha2: float
    beta0: float = 0.0
    beta1: float = 0.0
    beta2: float = 0.0

    def __post_init__(self):
        for f in fields(self):
            object.__setattr__(self, f.name, float(getattr(self, f.name)))

    def violations(self) -> list[str]:
        out = []
        if not all(math.isfinite(v) for v in astuple(self)):
            out.append("all parameters must be finite")
        if not self.alpha0 > 0:
            out.append(f"alpha0 must be > 0 (got {self.alpha0})")
        if self.alpha1 < 0 or self.alpha2 < 0:
            out.append(f"alpha1, alpha2 must be >= 0 (got {self.alpha1}, {self.alpha2})")
        if not self.alpha1 + self.alpha2 < 1:
            out.append(f"alpha1 + alpha2 must be < 1 (got {self.alpha1 + self.alpha2})")
        if not abs(self.beta2) < 1:
            out.append(f"|beta2| must be < 1 (got {self.beta2})")
        if not abs(self.mu) < 1:
            out.append(f"|mu| must be < 1 (got {self.mu})")
        return out

    def is_valid(self) -> bool:
        return not self.violations()

    def validate(self) -> "GarchSParams":
        bad = self.violations()
        if bad:
            raise ParameterError("; ".join(bad))
        return self

    def as_array(self) -> np.ndarray:
        return np.array(astuple(self))

    @classmethod
    def from_array(cls, x) -> "GarchSParams":
        return cls(*(float(v) for v in x))

    def with_skew(self, beta0: float, beta1: float, beta2: float) -> "GarchSParams":
        return GarchSParams(self.mu, self.alpha0, self.alpha1, self.alpha2, beta0, beta1, beta2)

    @property
    def persistence(self) -> float:
        return self.alpha1 + self.alpha2

    @property
    def unconditional_variance(self) -> float:
        return self.alpha0 / (1.0 - self.persistence)


@dataclass(frozen=True, eq=False)
class FilterState:
    """Filtered paths for observations 2..n of the return series."""

    eps: np.ndarray
    h: np.ndarray
    eta: np.ndarray
    s: np.ndarray
    dates: Optional[np.ndarray] = None

    def __len__(self) -> int:
        return len(self.eps)


@dataclass(frozen=True, eq=False)
class GarchSFit:
    params: GarchSParams
    state: FilterState
    loglik: float
    stderr: np.ndarray
    zstats: np.ndarray
    criteria: tuple  # (AIC, SC, HQ), per observation
    n_obs: int
    n_params: int
    model: str = "GARCH-S"
    converged: bool = True
    report: object = None
    free: tuple = field(default=PARAM_NAMES)

    @property
    def aic(self) -> float:
        return self.criteria[0]

    @property
    def sc(self) -> float:
        return self.criteria[1]

    @property
    def hq(self) -> float:
        return self.criteria[2]


# --------------------------------------------------------------------------
# recursions

@njit(cache=True)
def _garchs_paths(eps, h1, s1, a0, a1, a2, b0, b1, b2):
    n = eps.shape[0]
    h = np.empty(n)
    s = np.empty(n)
    eta = np.empty(n)
    h[0] = h1
    s[0] = s1
    eta[0] = eps[0] / math.sqrt(h1)
    for t in range(1, n):
        h[t] = a0 + a1 * (eps[t - 1] * eps[t - 1]) + a2 * h[t - 1]
        e = eta[t - 1]
        s[t] = b0 + b1 * (e * e * e) + b2 * s[t - 1]
        eta[t] = eps[t] / math.sqrt(h[t])
    return h, eta, s


@njit(cache=True)
def _gc_terms(h, eta, s):
    n = h.shape[0]
    out = np.empty(n)
    c = -0.5 * math.log(2.0 * math.pi)
    for t in range(n):
        x = eta[t]
        psi = 1.0 + (s[t] / 6.0) * (x * x * x - 3.0 * x)
        gam = 1.0 + s[t] * s[t] / 6.0
        out[t] = c - 0.5 * math.log(h[t]) - 0.5 * x * x + math.log(psi * psi) - math.log(gam)
    return out


@njit(cache=True)
def _garch11_loglik_terms(eps, h1, a0, a1, a2):
    n = eps.shape[0]
    out = np.empty(n)
    c = -0.5 * math.log(2.0 * math.pi)
    h = h1
    for t in range(n):
        if t > 0:
            h = a0 + a1 * eps[t - 1] ** 2 + a2 * h
        out[t] = c - 0.5 * (math.log(h) + eps[t] ** 2 / h)
    return out


def _returns_array(returns) -> tuple[np.ndarray, Optional[np.ndarray]]:
    if isinstance(returns, DatedSeries):
        return np.asarray(returns.values, dtype=float), returns.dates
    return np.asarray(returns, dtype=float), None


def residuals(mu: float, r: np.ndarray) -> np.ndarray:
    """AR(1) residuals ``r_t - mu r_{t-1}`` for t = 2..n."""
    return r[1:] - mu * r[:-1]


def initial_variance(eps: np.ndarray) -> float:
    return float(np.var(eps, ddof=1))


def garchs_filter(params: GarchSParams, returns, h_init: float | None = None,
                  s_init: float | None = None, *, min_length: int = MIN_FILTER_LENGTH,
                  check: bool = True) -> FilterState:
    """Run the mean, variance and skewness recursions over a return series.

    ``h_init`` defaults to the sample variance of the residuals and
    ``s_init`` to zero. The first return is consumed by the AR(1) term, so
    the paths have ``len(returns) - 1`` entries.
    """
    if check:
        params.validate()
    r, dates = _returns_array(returns)
    if len(r) < min_length:
        raise ValueError(f"filter needs at least {min_length} returns, got {len(r)}")
    eps = residuals(params.mu, r)
    h1 = initial_variance(eps) if h_init is None else float(h_init)
    s1 = 0.0 if s_init is None else float(s_init)
    if not h1 > 0:
        raise ParameterError(f"initial variance must be positive (got {h1})")
    h, eta, s = _garchs_paths(eps, h1, s1, params.alpha0, params.alpha1, params.alpha2,
                              params.beta0, params.beta1, params.beta2)
    if check and not np.all(h > 0):
        raise ParameterError("conditional variance underflowed to a nonpositive value")
    return FilterState(eps, h, eta, s, None if dates is None else dates[1:])


def loglik_terms(state: FilterState) -> np.ndarray:
    return _gc_terms(state.h, state.eta, state.s)


def gram_charlier_loglik(params: GarchSParams, returns, **filter_kw) -> tuple[float, np.ndarray]:
    """Total and per-observation Gram-Charlier log-likelihood.

    Raises :class:`LikelihoodError` naming the first non-finite contribution.
    """
    state = garchs_filter(params, returns, **filter_kw)
    terms = loglik_terms(state)
    if not np.all(np.isfinite(terms)):
        t = int(np.argmin(np.isfinite(terms)))
        raise LikelihoodError(f"non-finite log-likelihood contribution at index {t}", t)
    return float(terms.sum()), terms


def gaussian_loglik(params: GarchSParams, returns, h_init: float | None = None) -> tuple[float, np.ndarray]:
    """Gaussian GARCH(1,1) log-likelihood at ``(mu, alpha)``; skewness terms ignored."""
    r, _ = _returns_array(returns)
    eps = residuals(params.mu, r)
    h1 = initial_variance(eps) if h_init is None else float(h_init)
    terms = _garch11_loglik_terms(eps, h1, params.alpha0, params.alpha1, params.alpha2)
    return float(terms.sum()), terms


# --------------------------------------------------------------------------
# innovation density

def gc_density(x, s: float):
    x = np.asarray(x, dtype=float)
    psi = 1.0 + (s / 6.0) * (x ** 3 - 3.0 * x)
    return stats.norm.pdf(x) * psi ** 2 / (1.0 + s * s / 6.0)


def density_integral_check(s: float, lower: float = -12.0, upper: float = 12.0) -> float:
    """Integral of the innovation density over ``[lower, upper]`` by adaptive quadrature."""
    if not abs(s) < 4:
        raise ValueError(f"|s| must be < 4, got {s}")
    value, abserr, info = integrate.quad(gc_density, lower, upper, args=(s,), epsabs=1e-13,
                                         epsrel=1e-12, limit=200, full_output=1)[:3]
    if abserr > 1e-8:
        raise ArithmeticError(f"quadrature did not converge for s={s} (error estimate {abserr:.2e})")
    return float(value)


def density_moment(k: int, s: float) -> float:
    """k-th raw moment of the innovation density, by quadrature."""
    value, _ = integrate.quad(lambda x: x ** k * gc_density(x, s), -14.0, 14.0,
                              epsabs=1e-13, epsrel=1e-12, limit=200)
    return float(value)


# --------------------------------------------------------------------------
# ARCH-LM

@dataclass(frozen=True)
class ArchLMResult:
    fstat: float
    pvalue: float
    lags: int
    nobs: int


def arch_lm_test(resid, lags: int = 5) -> ArchLMResult:
    """Engle's LM test in F form: squared residuals on a constant and their own lags."""
    e2 = np.asarray(getattr(resid, "values", resid), dtype=float) ** 2
    if lags < 1:
        raise ValueError("lags must be >= 1")
    if len(e2) <= lags + 1:
        raise ValueError(f"need more than {lags + 1} residuals, got {len(e2)}")
    y = e2[lags:]
    n = len(y)
    X = np.column_stack([np.ones(n)] + [e2[lags - j:-j] for j in range(1, lags + 1)])
    if np.linalg.matrix_rank(X) < X.shape[1]:
        raise RankDeficiencyError("ARCH-LM regressors are collinear (constant squared residuals?)")
    beta, *_ = np.linalg.lstsq(X, y, rcond=None)
    ssr_u = float(np.sum((y - X @ beta) ** 2))
    ssr_r = float(np.sum((y - y.mean()) ** 2))
    df_den = n - X.shape[1]
    if ssr_u <= 0:
        raise RankDeficiencyError("ARCH-LM regression has an exact fit")
    fstat = ((ssr_r - ssr_u) / lags) / (ssr_u / df_den)
    return ArchLMResult(float(fstat), float(stats.f.sf(fstat, lags, df_den)), lags, n)


def conditional_skewness(fit: GarchSFit, name: str = "Skew") -> DatedSeries:
    """The filtered skewness path as a dated series."""
    st = fit.state
    dates = st.dates
    if dates is None:
        dates = np.arange(len(st.s)).astype("datetime64[D]")
    return DatedSeries(dates, st.s, name)
