"""Hot numeric kernels.

Scalar special functions are plain Python that numba compiles as-is; the
array kernels for the logistic likelihood are explicit loops under numba
and vectorised numpy otherwise (see :mod:`klrisk._jit`).
"""
import math

import numpy as np

from ._jit import accelerated, jit

_EPS = 1e-16
_FPMIN = 1e-300
_MAX_ITER = 100000
_LN2 = math.log(2.0)


# ---------------------------------------------------------------------------
# regularized incomplete gamma
# ---------------------------------------------------------------------------

@jit
def gammainc_pq(a, x):
    """Return (P(a, x), Q(a, x)), the regularized lower and upper incomplete gamma."""
    if x <= 0.0:
        return 0.0, 1.0
    log_prefactor = -x + a * math.log(x) - math.lgamma(a)
    if x < a + 1.0:
        # series for P
        ap = a
        term = 1.0 / a
        total = term
        for _ in range(_MAX_ITER):
            ap += 1.0
            term *= x / ap
            total += term
            if abs(term) < abs(total) * _EPS:
                break
        p = total * math.exp(log_prefactor)
        if p > 1.0:
            p = 1.0
        return p, 1.0 - p
    # modified Lentz continued fraction for Q
    b = x + 1.0 - a
    c = 1.0 / _FPMIN
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = b + an / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    q = math.exp(log_prefactor) * h
    if q > 1.0:
        q = 1.0
    return 1.0 - q, q


@jit
def chi2_logpdf(x, dof):
    """Log density of the central chi-squared with ``dof`` (real, > 0) at x > 0."""
    half = 0.5 * dof
    return (half - 1.0) * math.log(x) - 0.5 * x - half * _LN2 - math.lgamma(half)


# ---------------------------------------------------------------------------
# non-central chi-squared as a Poisson mixture of central laws
# ---------------------------------------------------------------------------

@jit
def _log_poisson(j, lam):
    return -lam + j * math.log(lam) - math.lgamma(j + 1.0)


@jit
def ncx2_cdf_sf(x, dof, nc):
    """Lower and upper tail of the non-central chi-squared at x.

    Summation starts at the modal Poisson index and walks outwards; each
    direction stops once a bound on the neglected mass falls below 1e-16
    relative to the accumulated tail.
    """
    if x <= 0.0:
        return 0.0, 1.0
    lam = 0.5 * nc
    half = 0.5 * dof
    if lam == 0.0:
        return gammainc_pq(half, 0.5 * x)
    j0 = int(math.floor(lam))
    cdf = 0.0
    sf = 0.0
    j = j0
    while j < j0 + _MAX_ITER:
        w = math.exp(_log_poisson(j, lam))
        p, q = gammainc_pq(half + j, 0.5 * x)
        cdf += w * p
        sf += w * q
        r = lam / (j + 2.0)
        tail = w * r / (1.0 - r)
        if (tail * p <= _EPS * cdf or tail * p < _FPMIN) and (tail <= _EPS * sf or tail < _FPMIN):
            break
        j += 1
    j = j0 - 1
    while j >= 0:
        w = math.exp(_log_poisson(j, lam))
        p, q = gammainc_pq(half + j, 0.5 * x)
        cdf += w * p
        sf += w * q
        r = j / lam
        tail = w * r / (1.0 - r)
        if (tail <= _EPS * cdf or tail < _FPMIN) and (tail * q <= _EPS * sf or tail * q < _FPMIN):
            break
        j -= 1
    if cdf > 1.0:
        cdf = 1.0
    if sf > 1.0:
        sf = 1.0
    return cdf, sf


@jit
def ncx2_pdf_slope(x, dof, nc):
    """Density of the non-central chi-squared at x > 0 and its derivative in x."""
    lam = 0.5 * nc
    half = 0.5 * dof
    if lam == 0.0:
        f = math.exp(chi2_logpdf(x, dof))
        return f, f * ((half - 1.0) / x - 0.5)
    j0 = int(math.floor(lam))
    pdf = 0.0
    slope = 0.0
    j = j0
    while j < j0 + _MAX_ITER:
        t = math.exp(_log_poisson(j, lam) + chi2_logpdf(x, dof + 2.0 * j))
        g = (half + j - 1.0) / x - 0.5
        pdf += t
        slope += t * g
        ratio = lam / (j + 1.0) * x / (dof + 2.0 * j)
        if ratio < 0.5 and (t * (1.0 + abs(g)) <= _EPS * pdf or t < _FPMIN):
            break
        j += 1
    j = j0 - 1
    while j >= 0:
        t = math.exp(_log_poisson(j, lam) + chi2_logpdf(x, dof + 2.0 * j))
        g = (half + j - 1.0) / x - 0.5
        pdf += t
        slope += t * g
        ratio = j / lam * (dof + 2.0 * j - 2.0) / x
        if ratio < 0.5 and (t * (1.0 + abs(g)) <= _EPS * pdf or t < _FPMIN):
            break
        j -= 1
    return pdf, slope


@jit
def ncx2_ppf(p, dof, nc, upper):
    """Quantile by bisection on the cdf (or on the survival function if ``upper``).

    The bracket is [0, mean + 20 sd + 20], widened if needed.  Iteration stops
    when the x-width is below 1e-10 (relative to max(1, x)) and the tail
    probability across the bracket differs by at most 1e-12.
    """
    lo = 0.0
    hi = dof + nc + 20.0 * math.sqrt(2.0 * dof + 4.0 * nc) + 20.0
    for _ in range(200):
        c, s = ncx2_cdf_sf(hi, dof, nc)
        v = s if upper else c
        if (upper and v < p) or ((not upper) and v > p):
            break
        lo = hi
        hi *= 2.0
    f_lo = 1.0 if upper else 0.0
    if lo > 0.0:
        c, s = ncx2_cdf_sf(lo, dof, nc)
        f_lo = s if upper else c
    c, s = ncx2_cdf_sf(hi, dof, nc)
    f_hi = s if upper else c
    for _ in range(2000):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        c, s = ncx2_cdf_sf(mid, dof, nc)
        v = s if upper else c
        below = v > p if upper else v < p
        if below:
            lo = mid
            f_lo = v
        else:
            hi = mid
            f_hi = v
        if hi - lo <= 1e-10 * max(1.0, hi) and abs(f_hi - f_lo) <= 1e-12:
            break
    return 0.5 * (lo + hi)


@jit
def ncx2_cdf_many(xs, dof, nc):
    out = np.empty(xs.shape[0])
    for i in range(xs.shape[0]):
        out[i] = ncx2_cdf_sf(xs[i], dof, nc)[0]
    return out


# ---------------------------------------------------------------------------
# Bernoulli-logit likelihood
# ---------------------------------------------------------------------------

@jit
def _softplus(eta):
    if eta > 0.0:
        return eta + math.log1p(math.exp(-eta))
    return math.log1p(math.exp(eta))


@jit
def _expit(eta):
    if eta >= 0.0:
        return 1.0 / (1.0 + math.exp(-eta))
    e = math.exp(eta)
    return e / (1.0 + e)


def _contribs_numpy(X, y, beta):
    eta = X @ beta
    return y * eta - np.logaddexp(0.0, eta)


def _derivatives_numpy(X, y, beta):
    eta = X @ beta
    mu = 0.5 * (1.0 + np.tanh(0.5 * eta))
    ll = float(np.sum(y * eta - np.logaddexp(0.0, eta)))
    grad = X.T @ (y - mu)
    info = (X * (mu * (1.0 - mu))[:, None]).T @ X
    return ll, grad, info


def _outer_scores_numpy(X, y, beta):
    eta = X @ beta
    mu = 0.5 * (1.0 + np.tanh(0.5 * eta))
    info = (X * (mu * (1.0 - mu))[:, None]).T @ X
    cross = (X * ((y - mu) ** 2)[:, None]).T @ X
    return info, cross


@accelerated(_contribs_numpy)
def logistic_contribs(X, y, beta):
    """Per-observation log-likelihood y*eta - log(1 + exp(eta))."""
    n, k = X.shape
    out = np.empty(n)
    for i in range(n):
        eta = 0.0
        for j in range(k):
            eta += X[i, j] * beta[j]
        out[i] = y[i] * eta - _softplus(eta)
    return out


@accelerated(_derivatives_numpy)
def logistic_derivatives(X, y, beta):
    """Log-likelihood, score vector and observed information X'WX."""
    n, k = X.shape
    grad = np.zeros(k)
    info = np.zeros((k, k))
    ll = 0.0
    for i in range(n):
        eta = 0.0
        for j in range(k):
            eta += X[i, j] * beta[j]
        mu = _expit(eta)
        ll += y[i] * eta - _softplus(eta)
        r = y[i] - mu
        w = mu * (1.0 - mu)
        for j in range(k):
            xj = X[i, j]
            grad[j] += xj * r
            for l in range(j + 1):
                info[j, l] += xj * X[i, l] * w
    for j in range(k):
        for l in range(j):
            info[l, j] = info[j, l]
    return ll, grad, info


@accelerated(_outer_scores_numpy)
def logistic_outer_scores(X, y, beta):
    """Sums of x x' mu(1-mu) and x x' (y-mu)^2 over observations."""
    n, k = X.shape
    info = np.zeros((k, k))
    cross = np.zeros((k, k))
    for i in range(n):
        eta = 0.0
        for j in range(k):
            eta += X[i, j] * beta[j]
        mu = _expit(eta)
        w = mu * (1.0 - mu)
        r2 = (y[i] - mu) ** 2
        for j in range(k):
            xj = X[i, j]
            for l in range(j + 1):
                xx = xj * X[i, l]
                info[j, l] += xx * w
                cross[j, l] += xx * r2
    for j in range(k):
        for l in range(j):
            info[l, j] = info[j, l]
            cross[l, j] = cross[j, l]
    return info, cross
