"""Estimating a difference of expected Kullback-Leibler risks between two fits.

``D = (AIC_g - AIC_h) / (2n)`` estimates EKL(g) - EKL(h); D > 0 means the
challenger h has the smaller estimated risk.  Two interval constructions are
provided:

* non-nested models: a normal interval ``D -/+ z * sqrt(omega^2 / n)`` where
  omega^2 is the (divisor-n) variance of the pointwise log-likelihood ratios;
* g nested in h: a confidence interval for the limiting difference obtained
  by inverting a test based on the non-central chi-squared approximation to
  -2 log LR (non-centrality 2 n Delta_0), then shifted by (p - q) / (2n) to
  track the finite-sample difference.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, replace
from enum import Enum
from typing import NamedTuple, Sequence

import numpy as np

from .distributions import (
    NoncentralChiSq,
    central_chisq_sf,
    noncentral_chisq_isf,
    noncentral_chisq_pdf,
    noncentral_chisq_quantile,
    std_normal_quantile,
)
from .errors import ComparisonError, DomainError, IntervalSearchError, RelationError
from .regression import FittedModel
from .scale import RiskQualification, qualify

__all__ = [
    "Relation",
    "ComparisonResult",
    "LRTest",
    "NestedIntervals",
    "aic",
    "d_statistic",
    "d_from_logliks",
    "omega_hat_sq",
    "tracking_interval_nonnested",
    "lr_test",
    "lr_test_from_logliks",
    "nested_pvalue",
    "nested_intervals",
    "normalize_per_measurement",
    "compare",
    "compare_summaries",
]

LR_SLACK = 1e-6


class Relation(str, Enum):
    NON_NESTED = "non_nested"
    NESTED = "nested_g_in_h"

    @classmethod
    def parse(cls, value) -> "Relation":
        if isinstance(value, Relation):
            return value
        key = str(value).strip().lower().replace("-", "_")
        if key in ("non_nested", "nonnested"):
            return cls.NON_NESTED
        if key in ("nested", "nested_g_in_h"):
            return cls.NESTED
        raise RelationError(f"unknown relation {value!r}")


class LRTest(NamedTuple):
    stat: float
    dof: int
    pvalue: float


class NestedIntervals(NamedTuple):
    confidence: tuple[float, float]
    tracking: tuple[float, float]


@dataclass(frozen=True)
class ComparisonResult:
    d_stat: float
    omega_hat_sq: float | None
    n_obs: int
    relation: Relation
    alpha: float
    tracking_interval: tuple[float, float]
    qualification: RiskQualification
    confidence_interval: tuple[float, float] | None = None
    lr_stat: float | None = None
    lr_dof: int | None = None
    lr_pvalue: float | None = None
    per_measurement_divisor: int | None = None
    n_params_g: int | None = None
    n_params_h: int | None = None
    aic_g: float | None = None
    aic_h: float | None = None

    @property
    def sign(self) -> int:
        return int(np.sign(self.d_stat))

    @property
    def excludes_zero(self) -> bool:
        a, b = self.tracking_interval
        return a > 0 or b < 0

    def to_dict(self) -> dict:
        out = asdict(self)
        out["relation"] = self.relation.value
        out["qualification"] = {"category": self.qualification.category,
                                "kl_value": self.qualification.kl_value,
                                "sign": self.sign}
        for key in ("tracking_interval", "confidence_interval"):
            if out[key] is not None:
                out[key] = list(out[key])
        return out


def _check_alpha(alpha):
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha!r}")


def aic(loglik: float, n_params: int) -> float:
    return -2.0 * loglik + 2.0 * n_params


def d_from_logliks(loglik_g: float, p: int, loglik_h: float, q: int, n: int) -> float:
    """D = -(L_g - L_h - (p - q)) / n, the same as (AIC_g - AIC_h) / (2n)."""
    if n < 1:
        raise ComparisonError("n must be positive")
    return -(loglik_g - loglik_h - (p - q)) / n


def d_statistic(fit_g: FittedModel, fit_h: FittedModel) -> float:
    if fit_g.n_obs != fit_h.n_obs:
        raise ComparisonError(f"models fitted on {fit_g.n_obs} and {fit_h.n_obs} observations")
    return d_from_logliks(fit_g.loglik_total, fit_g.n_params, fit_h.loglik_total, fit_h.n_params, fit_g.n_obs)


def omega_hat_sq(contribs_g: Sequence[float], contribs_h: Sequence[float]) -> float:
    """Divisor-n variance of the pointwise differences log g(Y_i) - log h(Y_i)."""
    g = np.asarray(contribs_g, dtype=float)
    h = np.asarray(contribs_h, dtype=float)
    if g.shape != h.shape or g.ndim != 1:
        raise ComparisonError(f"contribution vectors have shapes {g.shape} and {h.shape}")
    if g.size < 2:
        raise ComparisonError("need at least two observations")
    return float(np.var(g - h))


def tracking_interval_nonnested(d: float, omega_sq: float, n: int, alpha: float = 0.05) -> tuple[float, float]:
    _check_alpha(alpha)
    if omega_sq < 0:
        raise DomainError("omega_sq must be >= 0")
    if n < 2:
        raise DomainError("n must be >= 2")
    half = std_normal_quantile(1.0 - alpha / 2.0) * math.sqrt(omega_sq / n)
    return d - half, d + half


def lr_test_from_logliks(loglik_g: float, p: int, loglik_h: float, q: int) -> LRTest:
    """Likelihood ratio test of g nested in h: -2LR = 2 (L_h - L_g) against chi2(q - p)."""
    if q <= p:
        raise RelationError(f"nested comparison needs q > p, got p = {p}, q = {q}")
    stat = 2.0 * (loglik_h - loglik_g)
    if stat < 0:
        if stat < -LR_SLACK:
            raise RelationError(
                f"-2LR = {stat:.3g} < 0: the larger model fits worse, so g is not nested in h"
            )
        stat = 0.0
    dof = q - p
    return LRTest(stat, dof, central_chisq_sf(stat, dof))


def lr_test(fit_g: FittedModel, fit_h: FittedModel) -> LRTest:
    if fit_g.n_obs != fit_h.n_obs:
        raise ComparisonError(f"models fitted on {fit_g.n_obs} and {fit_h.n_obs} observations")
    if fit_g.n_params == fit_h.n_params and fit_g.terms == fit_h.terms:
        return LRTest(0.0, 0, 1.0)
    return lr_test_from_logliks(fit_g.loglik_total, fit_g.n_params, fit_h.loglik_total, fit_h.n_params)


def nested_pvalue(lr_stat: float, dof: int, n: int, delta0: float) -> float:
    """p-value of "Delta(g0, h0) = delta0" given -2LR, under chi2'(dof, 2 n delta0).

    For delta0 up to the moment estimate max(0, (-2LR - dof) / (2n)) the
    observed -2LR sits in the upper part of the hypothesised law and the
    upper tail pv = 1 - F(-2LR) is used; it is doubled when the density at
    the pv/2 lower quantile is below the density at -2LR (the rejection
    region then has a sizeable lower part).  At delta0 = 0 this is the
    likelihood ratio test.  Beyond the moment estimate the same rule is
    applied with the tails exchanged, which is what bounds the interval
    from above.  The p-value jumps where the branch switches.
    """
    if lr_stat < 0 or delta0 < 0 or n < 1:
        raise DomainError("lr_stat, delta0 must be >= 0 and n >= 1")
    dist = NoncentralChiSq(dof, 2.0 * n * delta0)
    upper_branch = delta0 <= _moment_estimate(lr_stat, dof, n)
    if lr_stat == 0.0:
        # only delta0 = 0 reaches here on the upper branch; F(0) = 0 otherwise
        return 1.0 if upper_branch else 0.0
    f_obs = noncentral_chisq_pdf(lr_stat, dist)
    if upper_branch:
        pv = dist.sf(lr_stat)
        if pv <= 0.0:
            return 0.0
        other = noncentral_chisq_quantile(0.5 * pv, dist)
    else:
        pv = dist.cdf(lr_stat)
        if pv <= 0.0:
            return 0.0
        other = noncentral_chisq_isf(0.5 * pv, dist)
    if noncentral_chisq_pdf(other, dist) > f_obs:
        return min(1.0, pv)
    return min(1.0, 2.0 * pv)


def _moment_estimate(lr_stat, dof, n):
    return max(0.0, (lr_stat - dof) / (2.0 * n))


def _bisect(fun, accepted, rejected, tol):
    while abs(rejected - accepted) > tol:
        mid = 0.5 * (accepted + rejected)
        if fun(mid):
            accepted = mid
        else:
            rejected = mid
    return 0.5 * (accepted + rejected)


def nested_intervals(lr_stat: float, dof: int, n: int, alpha: float = 0.05,
                     tol: float = 1e-10) -> NestedIntervals:
    """Confidence interval for Delta(g0, h0) by test inversion, and the tracking interval.

    The accepted set is searched around the moment estimate
    max(0, (-2LR - dof) / (2n)); the upper end of the search starts at
    (-2LR + dof + 40 sqrt(2 dof + 4 (-2LR))) / (2n) and doubles while still
    accepted.  Both bounds are located by bisection to ``tol`` on Delta_0.
    The tracking interval is the confidence interval shifted by -dof / (2n).
    """
    _check_alpha(alpha)
    if lr_stat < 0:
        raise DomainError("lr_stat must be >= 0")
    if dof < 1:
        raise DomainError("dof must be >= 1")

    def accepted(d0):
        return nested_pvalue(lr_stat, dof, n, d0) >= alpha

    center = _moment_estimate(lr_stat, dof, n)
    d_max = (lr_stat + dof + 40.0 * math.sqrt(2.0 * dof + 4.0 * lr_stat)) / (2.0 * n)
    if not accepted(center):
        grid = np.linspace(0.0, d_max, 401)
        pvals = [nested_pvalue(lr_stat, dof, n, g) for g in grid]
        best = int(np.argmax(pvals))
        if pvals[best] < alpha:
            raise IntervalSearchError(
                f"no value of Delta_0 in [0, {d_max:.4g}] is accepted at level {alpha}",
                bracket=(0.0, d_max),
            )
        center = float(grid[best])

    lower = 0.0 if accepted(0.0) else _bisect(accepted, center, 0.0, tol)

    hi = max(d_max, 2.0 * center)
    for _ in range(60):
        if not accepted(hi):
            break
        hi *= 2.0
    else:
        raise IntervalSearchError(
            f"upper confidence bound not found below Delta_0 = {hi:.4g}", bracket=(center, hi)
        )
    upper = _bisect(accepted, center, hi, tol)
    shift = -dof / (2.0 * n)
    return NestedIntervals((lower, upper), (lower + shift, upper + shift))


def normalize_per_measurement(result: ComparisonResult, m: int) -> ComparisonResult:
    """Divide D and the interval bounds by the number of measurements per subject."""
    if int(m) != m or m < 1:
        raise DomainError(f"measurement count must be a positive integer, got {m!r}")
    m = int(m)

    def scaled(iv):
        return None if iv is None else (iv[0] / m, iv[1] / m)

    d = result.d_stat / m
    divisor = m * (result.per_measurement_divisor or 1)
    return replace(
        result,
        d_stat=d,
        tracking_interval=scaled(result.tracking_interval),
        confidence_interval=scaled(result.confidence_interval),
        qualification=qualify(abs(d)),
        per_measurement_divisor=divisor,
    )


def _assemble(d, omega, n, relation, alpha, p, q, ll_g, ll_h, per_measurement):
    _check_alpha(alpha)
    extra = {}
    if relation is Relation.NON_NESTED:
        if omega is None:
            raise ComparisonError("the non-nested interval needs omega_hat_sq")
        tracking = tracking_interval_nonnested(d, omega, n, alpha)
    else:
        lr = lr_test_from_logliks(ll_g, p, ll_h, q)
        ivs = nested_intervals(lr.stat, lr.dof, n, alpha)
        tracking = ivs.tracking
        extra = dict(confidence_interval=ivs.confidence, lr_stat=lr.stat,
                     lr_dof=lr.dof, lr_pvalue=lr.pvalue)
    result = ComparisonResult(
        d_stat=d,
        omega_hat_sq=omega,
        n_obs=n,
        relation=relation,
        alpha=alpha,
        tracking_interval=tracking,
        qualification=qualify(abs(d)),
        n_params_g=p,
        n_params_h=q,
        aic_g=aic(ll_g, p),
        aic_h=aic(ll_h, q),
        **extra,
    )
    if per_measurement is not None:
        result = normalize_per_measurement(result, per_measurement)
    return result


def compare(fit_g: FittedModel, fit_h: FittedModel, relation="non_nested",
            alpha: float = 0.05, per_measurement: int | None = None) -> ComparisonResult:
    """Full comparison of two models fitted on the same observations."""
    relation = Relation.parse(relation)
    d = d_statistic(fit_g, fit_h)
    omega = omega_hat_sq(fit_g.loglik_contribs, fit_h.loglik_contribs)
    if relation is Relation.NESTED and fit_g.n_params == fit_h.n_params and fit_g.terms == fit_h.terms:
        raise RelationError("identical models cannot be compared as nested")
    return _assemble(d, omega, fit_g.n_obs, relation, alpha, fit_g.n_params, fit_h.n_params,
                     fit_g.loglik_total, fit_h.loglik_total, per_measurement)


def compare_summaries(loglik_g: float, p: int, loglik_h: float, q: int, n: int,
                      relation="non_nested", alpha: float = 0.05,
                      omega_sq: float | None = None,
                      per_measurement: int | None = None) -> ComparisonResult:
    """Comparison from reported totals (log-likelihoods, parameter counts, n)."""
    relation = Relation.parse(relation)
    d = d_from_logliks(loglik_g, p, loglik_h, q, n)
    return _assemble(d, omega_sq, n, relation, alpha, p, q, loglik_g, loglik_h, per_measurement)
