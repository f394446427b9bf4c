"""Constrained maximum likelihood for GARCH(1,1) and GARCH-S.

Parameters are optimized in an unconstrained space:

=========  =======================================
mu         tanh(u0)
alpha0     exp(u1)
alpha1     sigmoid(u2) * sigmoid(u3)
alpha2     sigmoid(u2) * (1 - sigmoid(u3))
beta0      u4
beta1      u5
beta2      tanh(u6)
=========  =======================================

so ``sigmoid(u2)`` is the variance persistence and ``sigmoid(u3)`` the
ARCH share of it. Every unconstrained vector maps to valid parameters.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import optimize
from scipy.special import expit, logit

from .garchs import (PARAM_NAMES, GarchSFit, GarchSParams, gaussian_loglik, garchs_filter,
                     initial_variance, loglik_terms, residuals)
from .inference import information_criteria
from .timeseries import DatedSeries

logger = logging.getLogger(__name__)

NM_TOL = 1e-8
NM_MAX_ITER = 5000
NM_RESTARTS = 3
GARCH11_PERSISTENCE_STARTS = (0.8, 0.9, 0.99)
SKEW_START = (0.0, 0.05, 0.1)


class OptimizationError(RuntimeError):
    pass


class ParamTransform:
    """Map between :class:`GarchSParams` and an unconstrained vector.

    With ``skew=False`` only ``(mu, alpha0, alpha1, alpha2)`` are free and the
    skewness coefficients are held at zero.
    """

    def __init__(self, skew: bool = True):
        self.skew = skew
        self.size = 7 if skew else 4
        self.names = PARAM_NAMES[: self.size]

    def to_unconstrained(self, params: GarchSParams) -> np.ndarray:
        params.validate()
        p = params.alpha1 + params.alpha2
        if not p > 0:
            raise ValueError("alpha1 + alpha2 = 0 has no unconstrained image")
        u = [math.atanh(params.mu), math.log(params.alpha0), float(logit(p)),
             float(logit(params.alpha1 / p))]
        if self.skew:
            u += [params.beta0, params.beta1, math.atanh(params.beta2)]
        return np.array(u)

    def to_constrained(self, u) -> GarchSParams:
        u = np.asarray(u, dtype=float)
        p = float(expit(u[2]))
        w = float(expit(u[3]))
        betas = (u[4], u[5], math.tanh(u[6])) if self.skew else (0.0, 0.0, 0.0)
        return GarchSParams(math.tanh(u[0]), math.exp(u[1]), p * w, p * (1.0 - w), *betas)

    def jacobian(self, u) -> np.ndarray:
        """d(constrained)/d(unconstrained), shape ``(size, size)``."""
        u = np.asarray(u, dtype=float)
        J = np.zeros((self.size, self.size))
        mu = math.tanh(u[0])
        p = float(expit(u[2]))
        w = float(expit(u[3]))
        dp = p * (1.0 - p)
        dw = w * (1.0 - w)
        J[0, 0] = 1.0 - mu * mu
        J[1, 1] = math.exp(u[1])
        J[2, 2], J[2, 3] = dp * w, p * dw
        J[3, 2], J[3, 3] = dp * (1.0 - w), -p * dw
        if self.skew:
            J[4, 4] = 1.0
            J[5, 5] = 1.0
            J[6, 6] = 1.0 - math.tanh(u[6]) ** 2
        return J


@dataclass(frozen=True)
class OptimReport:
    x: np.ndarray
    fun: float
    iterations: int
    evaluations: int
    converged: bool
    restarts_used: int
    termination_reason: str
    best_params: Optional[GarchSParams] = None

    @property
    def best_loglik(self) -> float:
        return -self.fun


def _safe(objective: Callable) -> Callable:
    def f(x):
        try:
            v = float(objective(x))
        except (ValueError, ArithmeticError, np.linalg.LinAlgError):
            return math.inf
        return v if math.isfinite(v) else math.inf
    return f


def _nelder_mead_run(f, x0, step, tol, max_iter):
    n = len(x0)
    sim = np.empty((n + 1, n))
    sim[0] = x0
    for i in range(n):
        sim[i + 1] = x0
        sim[i + 1, i] += step[i]
    fs = np.array([f(x) for x in sim])
    nfev = n + 1
    if not np.any(np.isfinite(fs)):
        raise OptimizationError("objective is non-finite at every vertex of the initial simplex")

    it = 0
    reason = "max_iter"
    while it < max_iter:
        order = np.argsort(fs, kind="stable")
        sim, fs = sim[order], fs[order]
        if np.isfinite(fs[-1]) and fs[-1] - fs[0] < tol:
            reason = "tolerance"
            break
        it += 1
        centroid = sim[:-1].mean(axis=0)
        xr = centroid + (centroid - sim[-1])
        fr = f(xr)
        nfev += 1
        if fr < fs[0]:
            xe = centroid + 2.0 * (centroid - sim[-1])
            fe = f(xe)
            nfev += 1
            if fe < fr:
                sim[-1], fs[-1] = xe, fe
            else:
                sim[-1], fs[-1] = xr, fr
            continue
        if fr < fs[-2]:
            sim[-1], fs[-1] = xr, fr
            continue
        if fr < fs[-1]:
            xc = centroid + 0.5 * (xr - centroid)
        else:
            xc = centroid + 0.5 * (sim[-1] - centroid)
        fc = f(xc)
        nfev += 1
        if fc < min(fr, fs[-1]):
            sim[-1], fs[-1] = xc, fc
            continue
        # shrink toward the best vertex
        sim[1:] = sim[0] + 0.5 * (sim[1:] - sim[0])
        fs[1:] = [f(x) for x in sim[1:]]
        nfev += n
    best = int(np.argmin(fs))
    return sim[best].copy(), float(fs[best]), it, nfev, reason == "tolerance", reason


def nelder_mead(objective: Callable, x0, tol: float = NM_TOL, max_iter: int = NM_MAX_ITER,
                restarts: int = NM_RESTARTS, step: float | np.ndarray = 0.1) -> OptimReport:
    """Minimize ``objective`` with the Nelder-Mead simplex method.

    Convergence means the spread of function values across the simplex is
    below ``tol``. After a run ends the search restarts from the best point
    with a fresh simplex, up to ``restarts`` times, until a restart no
    longer improves the minimum by ``tol``. Non-finite values and raised
    numerical errors count as ``+inf``.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    f = _safe(objective)
    x = np.asarray(x0, dtype=float).copy()
    steps = np.broadcast_to(np.asarray(step, dtype=float), x.shape).copy()
    x, fx, it, nfev, conv, reason = _nelder_mead_run(f, x, steps, tol, max_iter)
    used = 0
    for _ in range(restarts):
        used += 1
        x2, f2, it2, nfev2, conv2, reason2 = _nelder_mead_run(f, x, steps * 0.5 ** used, tol, max_iter)
        it += it2
        nfev += nfev2
        improved = f2 < fx - tol
        if f2 < fx:
            x, fx = x2, f2
        conv, reason = conv2, reason2
        if conv2 and not improved:
            break
    return OptimReport(x, fx, it, nfev, conv, used, reason)


def _polish(f, report: OptimReport) -> OptimReport:
    """Quasi-Newton refinement with finite-difference gradients; kept only if it helps."""
    try:
        res = optimize.minimize(f, report.x, method="BFGS", options={"gtol": 1e-6, "maxiter": 500})
    except (ValueError, ArithmeticError, np.linalg.LinAlgError):
        return report
    if np.isfinite(res.fun) and res.fun < report.fun:
        return OptimReport(np.asarray(res.x), float(res.fun), report.iterations + int(res.nit),
                           report.evaluations + int(res.nfev), report.converged,
                           report.restarts_used, report.termination_reason)
    return report


# --------------------------------------------------------------------------
# standard errors

@dataclass(frozen=True)
class ZStats:
    estimates: np.ndarray
    stderr: np.ndarray  # NaN where unavailable
    z: np.ndarray
    cov: np.ndarray

    @property
    def available(self) -> np.ndarray:
        return np.isfinite(self.stderr)


def numerical_hessian(f: Callable, x, rel_step: float = 1e-5, min_step: float = 1e-5) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    n = len(x)
    h = np.maximum(min_step, rel_step * np.abs(x))
    f0 = f(x)
    H = np.empty((n, n))
    E = np.diag(h)
    for i in range(n):
        H[i, i] = (f(x + E[i]) - 2.0 * f0 + f(x - E[i])) / h[i] ** 2
        for j in range(i + 1, n):
            H[i, j] = H[j, i] = (f(x + E[i] + E[j]) - f(x + E[i] - E[j])
                                 - f(x - E[i] + E[j]) + f(x - E[i] - E[j])) / (4.0 * h[i] * h[j])
    return H


def zstats(objective: Callable, at, transform: Callable | None = None,
           jacobian: Callable | None = None) -> ZStats:
    """z-statistics from the inverse Hessian of a negative log-likelihood.

    The Hessian is taken with respect to the optimization vector ``at``.
    When ``transform``/``jacobian`` are given, the covariance is mapped to
    the constrained parameters by the delta method. Coordinates in
    directions where the Hessian is not positive definite get NaN standard
    errors instead of failing.
    """
    at = np.asarray(at, dtype=float)
    n = len(at)
    H = numerical_hessian(objective, at)
    H = 0.5 * (H + H.T)
    good = np.ones(n, dtype=bool)
    if not np.all(np.isfinite(H)):
        good[:] = False
    else:
        w, V = np.linalg.eigh(H)
        scale = max(np.max(np.abs(w)), 1e-300)
        bad = w <= 1e-9 * scale
        if np.any(bad):
            good = ~np.any(np.abs(V[:, bad]) > 1e-3, axis=1)
    cov_u = np.full((n, n), np.nan)
    if np.any(good):
        sub = H[np.ix_(good, good)]
        try:
            np.linalg.cholesky(sub)
            cov_u[np.ix_(good, good)] = np.linalg.inv(sub)
        except np.linalg.LinAlgError:
            good[:] = False
    if jacobian is not None:
        J = jacobian(at)
        est = np.asarray(transform(at), dtype=float)
        cov = np.full((J.shape[0], J.shape[0]), np.nan)
        rows_ok = ~np.any(np.abs(J[:, ~good]) > 0, axis=1)
        Jg = J[np.ix_(rows_ok, good)]
        cov[np.ix_(rows_ok, rows_ok)] = Jg @ cov_u[np.ix_(good, good)] @ Jg.T
    else:
        est, cov = at.copy(), cov_u
    var = np.diag(cov)
    se = np.where(np.isfinite(var) & (var > 0), np.sqrt(np.abs(var)), np.nan)
    with np.errstate(divide="ignore", invalid="ignore"):
        z = est / se
    return ZStats(est, se, z, cov)


# --------------------------------------------------------------------------
# model fits

def _values(returns) -> np.ndarray:
    return np.asarray(returns.values if isinstance(returns, DatedSeries) else returns, dtype=float)


def _garch11_objective(r: np.ndarray, tf: ParamTransform):
    def negll(u):
        return -gaussian_loglik(tf.to_constrained(u), r)[0]
    return negll


def _garchs_objective(r: np.ndarray, tf: ParamTransform):
    def negll(u):
        params = tf.to_constrained(u)
        state = garchs_filter(params, r, check=False, min_length=2)
        return -float(loglik_terms(state).sum())
    return negll


def _make_fit(returns, tf: ParamTransform, negll, report: OptimReport, model: str) -> GarchSFit:
    params = tf.to_constrained(report.x).validate()
    st = garchs_filter(params, returns)
    loglik = float(loglik_terms(st).sum()) if tf.skew else gaussian_loglik(params, returns)[0]
    zs = zstats(negll, report.x,
                transform=lambda u: tf.to_constrained(u).as_array()[: tf.size],
                jacobian=tf.jacobian)
    se = np.full(7, np.nan)
    z = np.full(7, np.nan)
    se[: tf.size] = zs.stderr
    z[: tf.size] = zs.z
    n = len(st)
    report = OptimReport(report.x, report.fun, report.iterations, report.evaluations,
                         report.converged, report.restarts_used, report.termination_reason, params)
    return GarchSFit(params, st, loglik, se, z, information_criteria(loglik, tf.size, n), n,
                     tf.size, model, report.converged, report, tf.names)


def _best(reports: list[OptimReport]) -> OptimReport:
    return min(reports, key=lambda rep: rep.fun)


def fit_garch11(returns, polish: bool = True) -> GarchSFit:
    """Gaussian GARCH(1,1) with an AR(1) mean; skewness coefficients fixed at zero.

    Runs one search from each persistence level in
    ``GARCH11_PERSISTENCE_STARTS`` and keeps the best.
    """
    r = _values(returns)
    if len(r) < 50:
        raise ValueError(f"fit_garch11 needs at least 50 returns, got {len(r)}")
    var = initial_variance(residuals(0.0, r))
    if np.ptp(r) == 0 or not var > 0:
        raise OptimizationError("return series has zero variance")
    tf = ParamTransform(skew=False)
    negll = _garch11_objective(r, tf)
    reports = []
    for p in GARCH11_PERSISTENCE_STARTS:
        start = GarchSParams(0.0, var * (1.0 - p), 0.1 * p, 0.9 * p)
        try:
            rep = nelder_mead(negll, tf.to_unconstrained(start))
        except OptimizationError as exc:
            logger.debug("GARCH(1,1) start p=%s failed: %s", p, exc)
            continue
        if polish:
            rep = _polish(_safe(negll), rep)
        reports.append(rep)
    if not reports or not math.isfinite(_best(reports).fun):
        raise OptimizationError("no GARCH(1,1) start produced a finite likelihood")
    return _make_fit(returns, tf, negll, _best(reports), "GARCH(1,1)")


def fit_garchs(returns, start: GarchSParams | None = None, garch11: GarchSFit | None = None,
               polish: bool = True) -> GarchSFit:
    """Gram-Charlier GARCH-S fit.

    By default the search starts from the GARCH(1,1) estimate with skewness
    coefficients ``SKEW_START``. A second search starts from the GARCH(1,1)
    point itself (zero skewness), which guarantees the GARCH-S likelihood is
    never below the GARCH(1,1) one. Non-convergence is reported through
    ``fit.converged``, not raised.
    """
    r = _values(returns)
    if len(r) < 100:
        raise ValueError(f"fit_garchs needs at least 100 returns, got {len(r)}")
    tf = ParamTransform(skew=True)
    negll = _garchs_objective(r, tf)
    starts = []
    if start is not None:
        starts.append(start)
    else:
        garch11 = garch11 or fit_garch11(returns, polish=polish)
        base = garch11.params
        starts += [base.with_skew(*SKEW_START), base.with_skew(0.0, 0.0, 0.0)]
    reports = []
    for st in starts:
        try:
            rep = nelder_mead(negll, tf.to_unconstrained(st))
        except OptimizationError as exc:
            logger.debug("GARCH-S start %s failed: %s", st, exc)
            continue
        if polish:
            rep = _polish(_safe(negll), rep)
        reports.append(rep)
    if not reports or not math.isfinite(_best(reports).fun):
        raise OptimizationError("no GARCH-S start produced a finite likelihood")
    return _make_fit(returns, tf, negll, _best(reports), "GARCH-S")
