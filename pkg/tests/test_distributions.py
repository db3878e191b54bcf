import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, stats

from klrisk.distributions import (
    NoncentralChiSq,
    central_chisq_cdf,
    central_chisq_sf,
    noncentral_chisq_cdf,
    noncentral_chisq_isf,
    noncentral_chisq_pdf,
    noncentral_chisq_pdf_slope,
    noncentral_chisq_quantile,
    noncentral_chisq_sf,
    std_normal_cdf,
    std_normal_quantile,
)
from klrisk.errors import DomainError

GRID = [(dof, nc) for dof in (1, 2, 3, 5, 10) for nc in (0.0, 0.3, 2.0, 10.0, 60.0)]


def test_normal_quantile_reference_values():
    assert std_normal_quantile(0.975) == pytest.approx(1.959963984540054, abs=1e-9)
    assert std_normal_quantile(0.5) == pytest.approx(0.0, abs=1e-15)
    assert std_normal_quantile(1e-10) == pytest.approx(stats.norm.ppf(1e-10), rel=1e-12)
    assert std_normal_quantile(1 - 1e-10) == pytest.approx(stats.norm.isf(1e-10), rel=1e-6)


@given(st.floats(1e-12, 1 - 1e-12))
def test_normal_quantile_inverts_cdf(p):
    x = std_normal_quantile(p)
    assert x == pytest.approx(stats.norm.ppf(p), abs=1e-9)
    assert std_normal_cdf(x) == pytest.approx(p, rel=1e-9, abs=1e-15)


def test_central_chisq_five_percent_point():
    assert central_chisq_sf(3.841458820694124, 1) == pytest.approx(0.05, abs=1e-12)
    assert central_chisq_cdf(5.991464547107979, 2) == pytest.approx(0.95, abs=1e-12)


@pytest.mark.parametrize("dof,nc", GRID)
def test_cdf_sf_pdf_against_scipy(dof, nc):
    dist = NoncentralChiSq(dof, nc)
    ref = stats.ncx2(dof, nc) if nc > 0 else stats.chi2(dof)
    for x in np.linspace(0.05, dof + nc + 6 * math.sqrt(2 * dof + 4 * nc), 9):
        assert dist.cdf(x) == pytest.approx(ref.cdf(x), abs=1e-10)
        assert dist.sf(x) == pytest.approx(ref.sf(x), rel=1e-7, abs=1e-14)
        assert dist.pdf(x) == pytest.approx(ref.pdf(x), rel=1e-7, abs=1e-14)


@pytest.mark.parametrize("dof,nc", GRID)
def test_quantiles_against_scipy(dof, nc):
    dist = NoncentralChiSq(dof, nc)
    ref = stats.ncx2(dof, nc) if nc > 0 else stats.chi2(dof)
    for p in (1e-6, 0.025, 0.5, 0.975):
        assert dist.quantile(p) == pytest.approx(ref.ppf(p), rel=1e-7, abs=1e-9)
    for p in (1e-12, 1e-6, 0.025):
        assert dist.isf(p) == pytest.approx(ref.isf(p), rel=1e-7)


@given(st.integers(1, 8), st.floats(0.0, 80.0), st.floats(1e-6, 1 - 1e-6))
@settings(max_examples=60, deadline=None)
def test_quantile_cdf_round_trip(dof, nc, p):
    dist = NoncentralChiSq(dof, nc)
    assert dist.cdf(dist.quantile(p)) == pytest.approx(p, abs=1e-6)
    assert dist.sf(dist.isf(p)) == pytest.approx(p, abs=1e-6)


@pytest.mark.parametrize("dof,nc", [(1, 0.0), (2, 3.0), (4, 10.0)])
def test_density_integrates_to_one_and_has_the_right_mean(dof, nc):
    dist = NoncentralChiSq(dof, nc)
    upper = dist.isf(1e-14)
    mass, _ = integrate.quad(dist.pdf, 0, upper, limit=200)
    mean, _ = integrate.quad(lambda x: x * dist.pdf(x), 0, upper, limit=200)
    assert mass == pytest.approx(1.0, abs=1e-8)
    assert mean == pytest.approx(dof + nc, rel=1e-7)


def test_cdf_is_a_poisson_mixture_of_central_laws():
    dof, nc, x = 3, 4.0, 7.5
    terms = [stats.poisson.pmf(j, nc / 2) * central_chisq_cdf(x, dof + 2 * j) for j in range(80)]
    assert noncentral_chisq_cdf(x, NoncentralChiSq(dof, nc)) == pytest.approx(sum(terms), abs=1e-13)


def test_monte_carlo_cdf_oracle():
    rng = np.random.default_rng(11)
    for dof, nc in [(1, 2.0), (5, 10.0)]:
        draws = rng.noncentral_chisquare(dof, nc, 200_000)
        for x in np.quantile(draws, [0.1, 0.5, 0.9]):
            assert noncentral_chisq_cdf(float(x), NoncentralChiSq(dof, nc)) == pytest.approx(
                np.mean(draws <= x), abs=4e-3)


def test_slope_matches_finite_difference():
    dist = NoncentralChiSq(3, 5.0)
    for x in (0.5, 3.0, 12.0):
        _, slope = noncentral_chisq_pdf_slope(x, dist)
        h = 1e-5
        fd = (dist.pdf(x + h) - dist.pdf(x - h)) / (2 * h)
        assert slope == pytest.approx(fd, rel=1e-5, abs=1e-12)


def test_density_at_origin():
    assert noncentral_chisq_pdf(0.0, NoncentralChiSq(1, 1.0)) == math.inf
    assert noncentral_chisq_pdf(0.0, NoncentralChiSq(2, 2.0)) == pytest.approx(0.5 * math.exp(-1.0))
    assert noncentral_chisq_pdf(0.0, NoncentralChiSq(3, 2.0)) == 0.0


def test_array_cdf_matches_scalar():
    dist = NoncentralChiSq(2, 3.0)
    xs = np.array([[0.0, 1.0], [4.0, 20.0]])
    out = noncentral_chisq_cdf(xs, dist)
    assert out.shape == (2, 2)
    assert out[1, 0] == noncentral_chisq_cdf(4.0, dist)
    assert out[0, 0] == 0.0


def test_tails_are_monotone_and_complementary():
    dist = NoncentralChiSq(2, 7.0)
    xs = np.linspace(0, 50, 200)
    cdf = noncentral_chisq_cdf(xs, dist)
    assert np.all(np.diff(cdf) >= 0)
    for x in xs[::20]:
        assert noncentral_chisq_cdf(float(x), dist) + noncentral_chisq_sf(float(x), dist) == pytest.approx(1.0, abs=1e-14)


def test_moments():
    dist = NoncentralChiSq(3, 2.5)
    assert dist.mean == 5.5
    assert dist.variance == 2 * (3 + 5.0)


@pytest.mark.parametrize("args", [(0, 1.0), (1.5, 1.0), (2, -1.0), (2, math.nan), (2, math.inf)])
def test_invalid_parameters(args):
    with pytest.raises(DomainError):
        NoncentralChiSq(*args)


def test_invalid_arguments():
    dist = NoncentralChiSq(1, 1.0)
    with pytest.raises(DomainError):
        dist.cdf(-1.0)
    with pytest.raises(DomainError):
        dist.quantile(1.0)
    with pytest.raises(DomainError):
        noncentral_chisq_isf(0.0, dist)
    with pytest.raises(DomainError):
        noncentral_chisq_quantile(math.nan, dist)
    with pytest.raises(DomainError):
        std_normal_quantile(0.0)
