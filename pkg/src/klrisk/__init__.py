"""Kullback-Leibler risk differences from normalized AIC differences.

D = (AIC_g - AIC_h) / (2n) estimates the difference of expected
Kullback-Leibler risks of two fitted models; this package attaches tracking
intervals to it (normal for non-nested models, non-central chi-squared for
nested ones) and places the result on a reference scale.
"""
__version__ = "0.1.0"

from ._jit import BACKEND
from .comparison import (
    ComparisonResult,
    LRTest,
    NestedIntervals,
    Relation,
    aic,
    compare,
    compare_summaries,
    d_from_logliks,
    d_statistic,
    lr_test,
    lr_test_from_logliks,
    nested_intervals,
    nested_pvalue,
    normalize_per_measurement,
    omega_hat_sq,
    tracking_interval_nonnested,
)
from .distributions import NoncentralChiSq, std_normal_cdf, std_normal_quantile
from .errors import KLRiskError
from .regression import Dataset, FittedModel, Term, fit_logistic, information_matrices, score
from .scale import kl_binary_or, kl_normal_variance, qualify, relative_error, statistical_risk

__all__ = [
    "BACKEND",
    "ComparisonResult",
    "Dataset",
    "FittedModel",
    "KLRiskError",
    "LRTest",
    "NestedIntervals",
    "NoncentralChiSq",
    "Relation",
    "Term",
    "aic",
    "compare",
    "compare_summaries",
    "d_from_logliks",
    "d_statistic",
    "fit_logistic",
    "information_matrices",
    "kl_binary_or",
    "kl_normal_variance",
    "lr_test",
    "lr_test_from_logliks",
    "nested_intervals",
    "nested_pvalue",
    "normalize_per_measurement",
    "omega_hat_sq",
    "qualify",
    "relative_error",
    "score",
    "statistical_risk",
    "std_normal_cdf",
    "std_normal_quantile",
    "tracking_interval_nonnested",
]
