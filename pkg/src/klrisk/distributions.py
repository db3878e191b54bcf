"""Standard normal, central and non-central chi-squared distributions.

Only what the two interval constructions need.  All functions are pure; the
series and root-finding loops live in :mod:`klrisk._kernels`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import DomainError

__all__ = [
    "NoncentralChiSq",
    "std_normal_cdf",
    "std_normal_quantile",
    "central_chisq_cdf",
    "central_chisq_sf",
    "noncentral_chisq_pdf",
    "noncentral_chisq_cdf",
    "noncentral_chisq_sf",
    "noncentral_chisq_quantile",
    "noncentral_chisq_isf",
]

_SQRT2 = math.sqrt(2.0)
_SQRT2PI = math.sqrt(2.0 * math.pi)

# rational approximation of the normal quantile (P. J. Acklam)
_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)
_P_LOW = 0.02425


@dataclass(frozen=True)
class NoncentralChiSq:
    """Non-central chi-squared law with integer ``dof`` and non-centrality ``noncentrality``."""

    dof: int
    noncentrality: float = 0.0

    def __post_init__(self):
        if int(self.dof) != self.dof or self.dof < 1:
            raise DomainError(f"dof must be a positive integer, got {self.dof!r}")
        if not math.isfinite(self.noncentrality) or self.noncentrality < 0:
            raise DomainError(f"noncentrality must be finite and >= 0, got {self.noncentrality!r}")
        object.__setattr__(self, "dof", int(self.dof))
        object.__setattr__(self, "noncentrality", float(self.noncentrality))

    @property
    def mean(self) -> float:
        return self.dof + self.noncentrality

    @property
    def variance(self) -> float:
        return 2.0 * (self.dof + 2.0 * self.noncentrality)

    def pdf(self, x):
        return noncentral_chisq_pdf(x, self)

    def cdf(self, x):
        return noncentral_chisq_cdf(x, self)

    def sf(self, x):
        return noncentral_chisq_sf(x, self)

    def quantile(self, p):
        return noncentral_chisq_quantile(p, self)

    def isf(self, p):
        return noncentral_chisq_isf(p, self)


def _check_prob(p):
    if not 0.0 < p < 1.0:
        raise DomainError(f"probability must lie in (0, 1), got {p!r}")


def _check_x(x):
    if not x >= 0.0:
        raise DomainError(f"argument must be >= 0, got {x!r}")


def std_normal_cdf(x: float) -> float:
    return 0.5 * math.erfc(-x / _SQRT2)


def std_normal_quantile(p: float) -> float:
    """Inverse of the standard normal cdf, accurate to about 1e-15 absolute.

    A rational approximation (relative error ~1e-9) followed by one Newton
    step on the erfc-based cdf.
    """
    _check_prob(p)
    if p < _P_LOW:
        q = math.sqrt(-2.0 * math.log(p))
        x = ((((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5])
             / ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0))
    elif p <= 1.0 - _P_LOW:
        q = p - 0.5
        r = q * q
        x = ((((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q
             / (((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0))
    else:
        q = math.sqrt(-2.0 * math.log1p(-p))
        x = -((((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5])
              / ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0))
    # Newton step; the upper half uses the survival function to keep precision
    if p > 0.5:
        err = (1.0 - p) - 0.5 * math.erfc(x / _SQRT2)
    else:
        err = std_normal_cdf(x) - p
    density = math.exp(-0.5 * x * x) / _SQRT2PI
    return x - err / density


def central_chisq_cdf(x: float, dof: int) -> float:
    """Lower tail of the central chi-squared with ``dof`` degrees of freedom."""
    _check_x(x)
    NoncentralChiSq(dof)  # validates dof
    return _kernels.gammainc_pq(0.5 * dof, 0.5 * float(x))[0]


def central_chisq_sf(x: float, dof: int) -> float:
    _check_x(x)
    NoncentralChiSq(dof)
    return _kernels.gammainc_pq(0.5 * dof, 0.5 * float(x))[1]


def noncentral_chisq_pdf(x: float, dist: NoncentralChiSq) -> float:
    """Density of ``dist`` at x >= 0 (infinite at the origin when dof == 1)."""
    _check_x(x)
    if x == 0.0:
        if dist.dof == 1:
            return math.inf
        if dist.dof == 2:
            return 0.5 * math.exp(-0.5 * dist.noncentrality)
        return 0.0
    return _kernels.ncx2_pdf_slope(float(x), float(dist.dof), dist.noncentrality)[0]


def noncentral_chisq_pdf_slope(x: float, dist: NoncentralChiSq) -> tuple[float, float]:
    """Density and its derivative at x > 0."""
    if not x > 0.0:
        raise DomainError(f"slope requires x > 0, got {x!r}")
    return _kernels.ncx2_pdf_slope(float(x), float(dist.dof), dist.noncentrality)


def noncentral_chisq_cdf(x, dist: NoncentralChiSq):
    """Lower tail probability; ``x`` may be a scalar or an array."""
    if np.ndim(x):
        xs = np.asarray(x, dtype=float)
        if np.any(~(xs >= 0)):
            raise DomainError("argument must be >= 0")
        flat = np.ascontiguousarray(xs.ravel())
        return _kernels.ncx2_cdf_many(flat, float(dist.dof), dist.noncentrality).reshape(xs.shape)
    _check_x(x)
    return _kernels.ncx2_cdf_sf(float(x), float(dist.dof), dist.noncentrality)[0]


def noncentral_chisq_sf(x: float, dist: NoncentralChiSq) -> float:
    """Upper tail probability, computed directly rather than as 1 - cdf."""
    _check_x(x)
    return _kernels.ncx2_cdf_sf(float(x), float(dist.dof), dist.noncentrality)[1]


def noncentral_chisq_quantile(p: float, dist: NoncentralChiSq) -> float:
    _check_prob(p)
    return _kernels.ncx2_ppf(float(p), float(dist.dof), dist.noncentrality, False)


def noncentral_chisq_isf(p: float, dist: NoncentralChiSq) -> float:
    """x such that sf(x) = p; stays accurate for tiny ``p``."""
    _check_prob(p)
    return _kernels.ncx2_ppf(float(p), float(dist.dof), dist.noncentrality, True)
