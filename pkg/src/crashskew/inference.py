"""OLS with conventional standard errors, lag-order search, ADF, correlations
and descriptive statistics.

Information criteria are per observation (EViews convention)::

    AIC = (-2 ll + 2k) / n
    SC  = (-2 ll + k ln n) / n
    HQ  = (-2 ll + 2k ln ln n) / n
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product
from typing import Optional, Sequence, Union

import numpy as np
from scipy import linalg, stats

from .timeseries import AlignedTable, DatedSeries


class RegressionError(ValueError):
    pass


class CollinearityError(RegressionError):
    def __init__(self, message: str, terms: Sequence[str] = ()):
        super().__init__(message)
        self.terms = tuple(terms)


def information_criteria(loglik: float, k: int, n: int) -> tuple[float, float, float]:
    """Per-observation (AIC, SC, HQ)."""
    aic = (-2.0 * loglik + 2.0 * k) / n
    sc = (-2.0 * loglik + k * math.log(n)) / n
    hq = (-2.0 * loglik + 2.0 * k * math.log(math.log(n))) / n
    return aic, sc, hq


def stars(pvalue: float) -> str:
    if not np.isfinite(pvalue):
        return ""
    if pvalue < 0.01:
        return "***"
    if pvalue < 0.05:
        return "**"
    if pvalue < 0.10:
        return "*"
    return ""


# --------------------------------------------------------------------------
# regression terms

def _lag_label(name: str, lag: int) -> str:
    return f"{name}_(t)" if lag == 0 else f"{name}_(t-{lag})"


@dataclass(frozen=True)
class Intercept:
    lag = 0

    @property
    def label(self) -> str:
        return "Intercept"

    def values(self, table: AlignedTable, dependent: str, rows: np.ndarray) -> np.ndarray:
        return np.ones(len(rows))

    def names(self, dependent: str) -> tuple:
        return ()


@dataclass(frozen=True)
class LaggedDep:
    lag: int = 1

    def __post_init__(self):
        if self.lag != 1:
            raise ValueError("the lagged dependent term uses lag 1 only")

    @property
    def label(self) -> str:
        return "LaggedDep"

    def values(self, table: AlignedTable, dependent: str, rows: np.ndarray) -> np.ndarray:
        return table[dependent][rows - 1]

    def names(self, dependent: str) -> tuple:
        return (dependent,)


@dataclass(frozen=True)
class Var:
    name: str
    lag: int = 0

    def __post_init__(self):
        if self.lag < 0:
            raise ValueError(f"lag must be >= 0 for {self.name}")

    @property
    def label(self) -> str:
        return _lag_label(self.name, self.lag)

    def values(self, table: AlignedTable, dependent: str, rows: np.ndarray) -> np.ndarray:
        return table[self.name][rows - self.lag]

    def names(self, dependent: str) -> tuple:
        return (self.name,)


@dataclass(frozen=True)
class Interaction:
    dummy: str
    var: str
    lag: int = 0

    def __post_init__(self):
        if self.lag < 0:
            raise ValueError(f"lag must be >= 0 for {self.var}")

    @property
    def label(self) -> str:
        return f"{self.dummy}* {_lag_label(self.var, self.lag)}"

    def values(self, table: AlignedTable, dependent: str, rows: np.ndarray) -> np.ndarray:
        # the regime dummy is contemporaneous; only the variable is lagged
        return table[self.dummy][rows] * table[self.var][rows - self.lag]

    def names(self, dependent: str) -> tuple:
        return (self.dummy, self.var)


Term = Union[Intercept, LaggedDep, Var, Interaction]


def term_label(term: Term, dependent: str) -> str:
    if isinstance(term, LaggedDep):
        return _lag_label(dependent, 1)
    if isinstance(term, Var) and term.lag == 0 and term.name.startswith("D_"):
        return term.name
    return term.label


@dataclass(frozen=True)
class RegressionSpec:
    dependent: str
    terms: tuple
    sample: Optional[tuple] = None  # (start, end) dates, either may be None

    def __post_init__(self):
        terms = tuple(self.terms)
        object.__setattr__(self, "terms", terms)
        if sum(isinstance(t, Intercept) for t in terms) > 1:
            raise ValueError("at most one intercept")
        if len(set(terms)) != len(terms):
            raise ValueError("duplicate regression terms")

    @property
    def max_lag(self) -> int:
        return max((t.lag for t in self.terms), default=0)

    @property
    def labels(self) -> list[str]:
        return [term_label(t, self.dependent) for t in self.terms]

    def required_columns(self) -> list[str]:
        cols = [self.dependent]
        for t in self.terms:
            for n in t.names(self.dependent):
                if n not in cols:
                    cols.append(n)
        return cols

    def extended(self, *terms) -> "RegressionSpec":
        return RegressionSpec(self.dependent, self.terms + tuple(terms), self.sample)


def eq2_spec(dependent: str = "Skew", cases: str | None = "rCases", p: int = 1,
             uncertainty: str | None = None, q: int = 0, dummy: str | None = None,
             interact: bool = False) -> RegressionSpec:
    """Skew on a constant, its own lag, rCases lags 1..p and uncertainty lags 0..q.

    With ``dummy`` set, adds the regime dummy; with ``interact`` also the
    dummy-times-uncertainty terms for lags 0..q.
    """
    terms: list = [Intercept()]
    if dummy is not None:
        terms.append(Var(dummy, 0))
    terms.append(LaggedDep(1))
    if cases is not None:
        terms += [Var(cases, i) for i in range(1, p + 1)]
    if uncertainty is not None:
        terms += [Var(uncertainty, j) for j in range(0, q + 1)]
        if interact:
            if dummy is None:
                raise ValueError("interaction terms need a dummy")
            terms += [Interaction(dummy, uncertainty, j) for j in range(0, q + 1)]
    return RegressionSpec(dependent, tuple(terms))


def design(spec: RegressionSpec, table: AlignedTable, first_row: int | None = None):
    """Dependent vector, design matrix and the row indices used.

    Each regression uses every row its lags allow unless ``first_row``
    forces a later start (a common sample across candidate models).
    """
    for col in spec.required_columns():
        if col not in table:
            raise RegressionError(f"column {col!r} not in data (have {table.names})")
    n = len(table)
    start = max(spec.max_lag, 0 if first_row is None else first_row)
    rows = np.arange(start, n)
    if spec.sample is not None:
        lo, hi = spec.sample
        d = table.dates[rows]
        keep = np.ones(len(rows), dtype=bool)
        if lo is not None:
            keep &= d >= np.datetime64(lo, "D")
        if hi is not None:
            keep &= d <= np.datetime64(hi, "D")
        rows = rows[keep]
    cols = [t.values(table, spec.dependent, rows) for t in spec.terms]
    X = np.column_stack(cols) if cols else np.empty((len(rows), 0))
    y = table[spec.dependent][rows]
    return y, X, rows


@dataclass(frozen=True, eq=False)
class RegressionResult:
    spec: RegressionSpec
    labels: list
    coef: np.ndarray
    stderr: np.ndarray
    tstat: np.ndarray
    pvalue: np.ndarray
    cov: np.ndarray
    n_obs: int
    r2: float
    adj_r2: float
    ssr: float
    loglik: float
    aic: float
    sc: float
    hq: float
    resid: np.ndarray
    dates: np.ndarray = field(repr=False, default=None)

    @property
    def k(self) -> int:
        return len(self.coef)

    def index(self, term: Term) -> int:
        try:
            return self.spec.terms.index(term)
        except ValueError:
            raise KeyError(f"term {term!r} not in regression") from None

    def __getitem__(self, term: Term) -> tuple[float, float]:
        i = self.index(term)
        return float(self.coef[i]), float(self.tstat[i])

    def criterion(self, name: str) -> float:
        return {"aic": self.aic, "sc": self.sc, "hq": self.hq}[name.lower()]


def _collinear_terms(X: np.ndarray, labels: Sequence[str]) -> list[str]:
    bad = []
    kept = []
    for j in range(X.shape[1]):
        trial = X[:, kept + [j]]
        if np.linalg.matrix_rank(trial) < len(kept) + 1:
            bad.append(labels[j])
        else:
            kept.append(j)
    return bad


def ols_arrays(y: np.ndarray, X: np.ndarray, labels: Sequence[str] | None = None):
    """Least squares via QR. Returns (coef, cov, resid)."""
    n, k = X.shape
    labels = list(labels) if labels is not None else [f"x{j}" for j in range(k)]
    if n <= k:
        raise RegressionError(f"insufficient observations: n={n} for {k} regressors")
    if np.linalg.matrix_rank(X) < k:
        bad = _collinear_terms(X, labels)
        raise CollinearityError(f"design matrix is rank deficient; collinear terms: {', '.join(bad)}", bad)
    Q, R = np.linalg.qr(X)
    coef = linalg.solve_triangular(R, Q.T @ y)
    resid = y - X @ coef
    Rinv = linalg.solve_triangular(R, np.eye(k))
    s2 = float(resid @ resid) / (n - k)
    cov = s2 * (Rinv @ Rinv.T)
    return coef, cov, resid


def ols(spec: RegressionSpec, data: AlignedTable, first_row: int | None = None) -> RegressionResult:
    """Fit ``spec`` on ``data`` by ordinary least squares."""
    y, X, rows = design(spec, data, first_row)
    labels = spec.labels
    coef, cov, resid = ols_arrays(y, X, labels)
    n, k = X.shape
    ssr = float(resid @ resid)
    sst = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ssr / sst if sst > 0 else float("nan")
    adj_r2 = 1.0 - (1.0 - r2) * (n - 1) / (n - k)
    sigma2 = ssr / n
    ll = -0.5 * n * (1.0 + math.log(2.0 * math.pi) + math.log(sigma2)) if sigma2 > 0 else math.inf
    aic, sc, hq = information_criteria(ll, k, n) if math.isfinite(ll) else (-math.inf,) * 3
    se = np.sqrt(np.diag(cov))
    with np.errstate(divide="ignore", invalid="ignore"):
        t = coef / se
    p = 2.0 * stats.t.sf(np.abs(t), n - k)
    return RegressionResult(spec, labels, coef, se, t, p, cov, n, r2, adj_r2, ssr, ll,
                            aic, sc, hq, resid, data.dates[rows])


# --------------------------------------------------------------------------
# lag-order search

@dataclass(frozen=True, eq=False)
class LagSearchResult:
    p: int
    q: int
    result: RegressionResult
    criterion: str
    scores: dict  # (p, q) -> criterion on the common sample


def lag_search(base_spec: RegressionSpec, data: AlignedTable, p_var: str | None, q_var: str | None,
               max_p: int, max_q: int, criterion: str = "aic",
               interact_dummy: str | None = None) -> LagSearchResult:
    """Choose lag lengths for ``p_var`` (lags 1..p) and ``q_var`` (lags 0..q).

    Every candidate is scored on the common sample that the largest lag
    allows; the winner is refitted on its own maximal sample. Ties go to
    the smaller ``p + q``, then the smaller ``p``.
    """
    criterion = criterion.lower()
    if criterion not in ("aic", "sc", "hq"):
        raise ValueError(f"unknown criterion {criterion!r}")
    if max_p < 0 or max_q < 0:
        raise ValueError("max_p and max_q must be >= 0")
    ps = range(1, max_p + 1) if p_var is not None else [0]
    qs = range(0, max_q + 1) if q_var is not None else [0]
    if p_var is not None and max_p < 1:
        raise ValueError("max_p must be >= 1 when searching over p")

    def build(p, q):
        terms = []
        if p_var is not None:
            terms += [Var(p_var, i) for i in range(1, p + 1)]
        if q_var is not None:
            terms += [Var(q_var, j) for j in range(0, q + 1)]
            if interact_dummy is not None:
                terms += [Interaction(interact_dummy, q_var, j) for j in range(0, q + 1)]
        return base_spec.extended(*terms)

    common = max(base_spec.max_lag, max(ps), max(qs))
    scores = {}
    errors = []
    for p, q in product(ps, qs):
        try:
            scores[(p, q)] = ols(build(p, q), data, first_row=common).criterion(criterion)
        except RegressionError as exc:
            errors.append(f"(p={p}, q={q}): {exc}")
    if not scores:
        raise RegressionError("every lag-search candidate failed: " + "; ".join(errors))
    best = min(scores, key=lambda pq: (round(scores[pq], 12), pq[0] + pq[1], pq[0]))
    return LagSearchResult(best[0], best[1], ols(build(*best), data), criterion, scores)


# --------------------------------------------------------------------------
# ADF

# MacKinnon (2010) response surfaces, constant-only case: tau_inf, tau_1, tau_2
_ADF_CRIT_C = {
    "1%": (-3.43035, -6.5393, -16.786),
    "5%": (-2.86154, -2.8903, -4.234),
    "10%": (-2.56677, -1.5384, -2.809),
}


def adf_critical_values(nobs: int | None = None) -> dict[str, float]:
    """Constant-only ADF critical values; asymptotic when ``nobs`` is None."""
    out = {}
    for level, (b0, b1, b2) in _ADF_CRIT_C.items():
        out[level] = b0 if nobs is None else b0 + b1 / nobs + b2 / nobs ** 2
    return out


@dataclass(frozen=True)
class ADFResult:
    stat: float
    lags: int
    nobs: int
    critical: dict
    stars: str

    def rejects(self, level: str = "5%") -> bool:
        return self.stat < self.critical[level]


def _adf_design(y: np.ndarray, k: int, start: int):
    # rows t index dy; dy[t] = y[t+1] - y[t]
    dy = np.diff(y)
    t = np.arange(start, len(dy))
    cols = [np.ones(len(t)), y[t]]
    cols += [dy[t - i] for i in range(1, k + 1)]
    return dy[t], np.column_stack(cols)


def adf_test(series, max_lags: int | None = None) -> ADFResult:
    """Augmented Dickey-Fuller test with a constant and no trend.

    The augmentation order is chosen by AIC over ``0..max_lags`` on a
    common sample and then refitted on the longest sample it allows.
    """
    y = np.asarray(getattr(series, "values", series), dtype=float)
    n = len(y)
    if n < 25:
        raise ValueError(f"ADF needs at least 25 observations, got {n}")
    if max_lags is None:
        max_lags = int(12 * (n / 100.0) ** 0.25)
    max_lags = min(max_lags, n // 2 - 3)
    best_k, best_aic = 0, math.inf
    for k in range(max_lags + 1):
        dy, X = _adf_design(y, k, max_lags)
        coef, _, resid = ols_arrays(dy, X)
        m = len(dy)
        ll = -0.5 * m * (1.0 + math.log(2 * math.pi) + math.log(resid @ resid / m))
        aic = -2 * ll + 2 * X.shape[1]
        if aic < best_aic - 1e-12:
            best_k, best_aic = k, aic
    dy, X = _adf_design(y, best_k, best_k)
    coef, cov, _ = ols_arrays(dy, X)
    stat = float(coef[1] / math.sqrt(cov[1, 1]))
    crit = adf_critical_values(len(dy))
    mark = "***" if stat < crit["1%"] else "**" if stat < crit["5%"] else "*" if stat < crit["10%"] else ""
    return ADFResult(stat, best_k, len(dy), crit, mark)


# --------------------------------------------------------------------------
# correlation, description, regime split

@dataclass(frozen=True, eq=False)
class CorrMatrix:
    names: list
    r: np.ndarray  # NaN where undefined
    pvalue: np.ndarray
    n: np.ndarray

    def stars(self, i: int, j: int) -> str:
        return stars(self.pvalue[i, j])


def pearson(x: np.ndarray, y: np.ndarray) -> tuple[float, float, int]:
    """(r, two-sided p, n) on pairwise-complete observations; r is NaN if undefined."""
    ok = np.isfinite(x) & np.isfinite(y)
    x, y = x[ok], y[ok]
    n = len(x)
    if n < 3:
        return math.nan, math.nan, n
    dx, dy = x - x.mean(), y - y.mean()
    sxx, syy = float(dx @ dx), float(dy @ dy)
    if sxx == 0 or syy == 0:
        return math.nan, math.nan, n
    r = float(np.clip((dx @ dy) / math.sqrt(sxx * syy), -1.0, 1.0))
    if abs(r) == 1.0:
        return r, 0.0, n
    t = r * math.sqrt((n - 2) / (1 - r * r))
    return r, float(2 * stats.t.sf(abs(t), n - 2)), n


def corr_matrix(table: AlignedTable, names: Sequence[str] | None = None) -> CorrMatrix:
    names = list(names) if names is not None else table.names
    k = len(names)
    r = np.full((k, k), np.nan)
    p = np.full((k, k), np.nan)
    n = np.zeros((k, k), dtype=int)
    for i in range(k):
        for j in range(i, k):
            rij, pij, nij = pearson(table[names[i]], table[names[j]])
            r[i, j] = r[j, i] = rij
            p[i, j] = p[j, i] = pij
            n[i, j] = n[j, i] = nij
    return CorrMatrix(names, r, p, n)


@dataclass(frozen=True)
class Description:
    mean: float
    min: float
    max: float
    std: float
    n: int


def describe(series) -> Description:
    v = np.asarray(getattr(series, "values", series), dtype=float)
    if len(v) < 2:
        raise ValueError("describe needs at least 2 observations")
    return Description(float(v.mean()), float(v.min()), float(v.max()), float(v.std(ddof=1)), len(v))


@dataclass(frozen=True)
class SplitEffect:
    pre: float
    pre_se: float
    pandemic: float
    pandemic_se: float
    df: Optional[int] = None

    @property
    def pre_t(self) -> float:
        return self.pre / self.pre_se if self.pre_se > 0 else math.nan

    @property
    def pandemic_t(self) -> float:
        return self.pandemic / self.pandemic_se if self.pandemic_se > 0 else math.nan


def combine_effects(base: float, shift: float, var_base: float = 0.0, var_shift: float = 0.0,
                    cov: float = 0.0, df: int | None = None) -> SplitEffect:
    """Slope before (``base``) and after (``base + shift``) the regime change."""
    var_sum = var_base + var_shift + 2.0 * cov
    return SplitEffect(base, math.sqrt(max(var_base, 0.0)), base + shift,
                       math.sqrt(max(var_sum, 0.0)), df)


def split_coefficient(result: RegressionResult, dummy_name: str, var_name: str, lag: int = 0) -> SplitEffect:
    i = result.index(Var(var_name, lag))
    j = result.index(Interaction(dummy_name, var_name, lag))
    c = result.cov
    return combine_effects(float(result.coef[i]), float(result.coef[j]), float(c[i, i]),
                           float(c[j, j]), float(c[i, j]), result.n_obs - result.k)
