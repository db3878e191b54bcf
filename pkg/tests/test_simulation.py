import math

import numpy as np
import pytest

from klrisk import simulation
from klrisk.errors import DomainError, EncodingError, SeparationError, StudyError
from klrisk.regression import Dataset, fit_logistic
from klrisk.simulation import (
    calibrate_truth,
    generate_nested_sample,
    generate_nonnested_sample,
    histogram,
    ks_distance,
    run_nested_study,
    run_nonnested_study,
    tercile_model_design,
)
from klrisk.distributions import NoncentralChiSq


@pytest.fixture(scope="module")
def calibration():
    return calibrate_truth()


def test_generator_is_deterministic():
    a = generate_nonnested_sample(50, 3)
    b = generate_nonnested_sample(50, np.random.default_rng(3))
    assert np.array_equal(a.covariates, b.covariates) and np.array_equal(a.responses, b.responses)


def test_generator_law_of_large_numbers():
    n = 1_000_000
    data = generate_nonnested_sample(n, np.random.default_rng(8))
    eta = 0.5 + data.column("x1") + 2 * data.column("x2")
    assert np.mean(1 / (1 + np.exp(-eta))) == pytest.approx(data.responses.mean(), abs=2e-3)
    assert abs(np.corrcoef(data.column("x1"), data.column("x2"))[0, 1]) < 3 / math.sqrt(n)


def test_nested_truths():
    with pytest.raises(DomainError):
        generate_nested_sample(10, 0, "f3")
    data = generate_nested_sample(200_000, np.random.default_rng(1), "f2")
    fit = fit_logistic(data, ["x1", "x2"])
    assert fit.coefficients == pytest.approx([0.5, 0.5, 2.0], abs=0.03)


def test_tercile_design_exact_terciles():
    data = Dataset(np.arange(9) % 2, np.column_stack([np.arange(1.0, 10.0), np.zeros(9)]), ("x1", "x2"))
    out = tercile_model_design(data)
    assert out.column_names == ("x1_t1", "x1_t2", "x2")
    assert out.column("x1_t1").tolist() == [1, 1, 1, 0, 0, 0, 0, 0, 0]
    assert out.column("x1_t2").tolist() == [0, 0, 0, 1, 1, 1, 0, 0, 0]


def test_tercile_design_on_draws():
    data = generate_nonnested_sample(1001, np.random.default_rng(2))
    out = tercile_model_design(data)
    t1, t2 = out.column("x1_t1"), out.column("x1_t2")
    assert np.all(t1 * t2 == 0)
    counts = [t1.sum(), t2.sum(), data.n - t1.sum() - t2.sum()]
    assert max(counts) - min(counts) <= 1
    a = fit_logistic(out, ["x1_t1", "x1_t2", "x2"])
    b = fit_logistic(data, ["x1", "x2"], {"x1": "tercile"})
    assert a.loglik_total == pytest.approx(b.loglik_total, abs=1e-10)


def test_tercile_design_needs_three_values():
    data = Dataset([0, 1, 0, 1], np.column_stack([[0.0, 1, 0, 1], [0.0, 1, 2, 3]]), ("x1", "x2"))
    with pytest.raises(EncodingError):
        tercile_model_design(data)


def test_calibration(calibration):
    assert calibration.kl_check > -3 * calibration.kl_se
    assert calibration.trace_check == pytest.approx(4.0, abs=0.05)
    n = 250
    assert calibration.delta_check(n) == pytest.approx(
        3 / (2 * n) - calibration.kl_check - calibration.trace_check / (2 * n))
    assert calibration.delta_check_approx(n) == pytest.approx(-1 / (2 * n) - calibration.kl_check)
    assert calibrate_truth() is calibration
    with pytest.raises(DomainError):
        calibrate_truth(N=1000)


def test_calibration_other_seed_is_consistent(calibration):
    other = calibrate_truth(rng=np.random.default_rng(99))
    assert other.kl_check == pytest.approx(calibration.kl_check, abs=5 * calibration.kl_se)


def test_study_is_reproducible_across_worker_counts(calibration):
    a = run_nonnested_study(250, 24, seed=7, calibration=calibration)
    b = run_nonnested_study(250, 24, seed=7, calibration=calibration, workers=2)
    assert a == b
    assert a != run_nonnested_study(250, 24, seed=8, calibration=calibration)


def test_single_replication_report(calibration):
    rep = run_nonnested_study(100, 1, seed=3, calibration=calibration)
    assert rep.coverage_rate in (0.0, 1.0) and rep.power in (0.0, 1.0)
    assert rep.reps == 1 and sum(rep.histogram_d["counts"]) == 1


def test_coverage_and_mean_d():
    # a larger calibration sample keeps its own Monte Carlo error out of the comparison
    calibration = calibrate_truth(N=1_000_000, rng=17)
    reps, n, alpha = 400, 1000, 0.05
    rep = run_nonnested_study(n, reps, alpha, seed=11, calibration=calibration)
    assert abs(rep.coverage_rate - (1 - alpha)) <= 3 * math.sqrt(alpha * (1 - alpha) / reps)
    assert abs(rep.mean_d - rep.delta_check) < 3 * math.sqrt(calibration.omega_check_sq / n) / math.sqrt(reps)
    assert rep.n_power_prefer_h == 0
    assert 0 <= rep.power <= 1


def test_d_is_roughly_symmetric(calibration):
    rep = run_nonnested_study(250, 1000, seed=5, calibration=calibration)
    assert abs(rep.skewness_d) < 0.25


def test_failed_replications_are_counted(monkeypatch, calibration):
    calls = {"n": 0}
    real = simulation._fit_h

    def flaky(data):
        calls["n"] += 1
        if calls["n"] % 2 == 0:
            raise SeparationError("forced")
        return real(data)

    monkeypatch.setattr(simulation, "_fit_h", flaky)
    with pytest.raises(StudyError):
        run_nonnested_study(100, 20, seed=1, calibration=calibration)


def test_nested_study_bands():
    f1 = run_nested_study("f1", 1000, 300, seed=2)
    f2 = run_nested_study("f2", 1000, 300, seed=2)
    assert 2e-4 <= f1.delta_est <= 5e-3 and f1.qualification == "small"
    assert 5e-3 <= f2.delta_est <= 5e-2 and f2.qualification == "moderate"
    assert f1.noncentrality_est == pytest.approx(f1.mean_stat - 1)
    assert 0 <= f1.ks_distance <= 1


def test_ks_distance_oracle():
    from scipy import stats
    x = np.random.default_rng(0).noncentral_chisquare(1, 5.0, 500)
    assert ks_distance(x, NoncentralChiSq(1, 5.0)) == pytest.approx(
        stats.kstest(x, stats.ncx2(1, 5.0).cdf).statistic, abs=1e-9)


def test_histogram_bins():
    h = histogram([0.0, 0.0024, 0.0026, -0.001], 2.5e-3)
    assert h["edges"][0] == pytest.approx(-2.5e-3) and h["counts"] == [1, 2, 1]
    assert histogram([], 1.0)["counts"] == []


def test_study_argument_checks():
    with pytest.raises(DomainError):
        run_nonnested_study(10, 5)
    with pytest.raises(DomainError):
        run_nested_study("f9")


def test_study_with_weaker_x1_effect():
    # the tercile model's loss depends on x1 only through beta_1 * sd(x1)
    coef = (0.5, 1 / math.sqrt(2), 2.0)
    cal = calibrate_truth(N=400_000, rng=3, coefficients=coef)
    assert cal.kl_check == pytest.approx(7.0e-3, abs=3 * cal.kl_se)
    assert cal.omega_check_sq == pytest.approx(1.38e-2, abs=1e-3)
    rep = run_nonnested_study(1000, 200, seed=1, calibration=cal, coefficients=coef)
    assert rep.kl_check == cal.kl_check
    assert abs(rep.mean_d - rep.delta_check) < 3 * math.sqrt(cal.omega_check_sq / 1000) / math.sqrt(200) + 3 * cal.kl_se
