import json
import subprocess
import sys

import numpy as np
import pytest

from klrisk.cli import load_csv, main, parse_model_spec, resolve_relation
from klrisk.comparison import Relation
from klrisk.errors import DataError, EncodingError, ShapeError
from klrisk.regression import Term, fit_logistic
from klrisk.simulation import generate_nonnested_sample


@pytest.fixture
def sample_csv(tmp_path):
    data = generate_nonnested_sample(400, np.random.default_rng(6))
    path = tmp_path / "sample.csv"
    np.savetxt(path, np.column_stack([data.responses, data.covariates]), delimiter=",",
               header="y,x1,x2", comments="", fmt="%.17g")
    return path, data


def _run(capsys, *argv):
    status = main(list(argv))
    out, err = capsys.readouterr()
    return status, out, err


def test_load_small_file(tmp_path):
    path = tmp_path / "d.csv"
    path.write_text("y,x1,x2\n0,1.5,2\n1,-0.5,3\n1,0,0\n")
    data = load_csv(path)
    assert data.n == 3 and data.column_names == ("x1", "x2")


@pytest.mark.parametrize("body,row,column", [
    ("y,x1\n0,1\n1,NaN\n", 3, "x1"),
    ("y,x1\n0,abc\n", 2, "x1"),
    ("y,x1\n2,1.0\n", 2, "y"),
])
def test_load_errors_name_the_cell(tmp_path, body, row, column):
    path = tmp_path / "bad.csv"
    path.write_text(body)
    with pytest.raises(DataError) as info:
        load_csv(path)
    assert (info.value.row, info.value.column) == (row, column)
    assert f"row {row}" in str(info.value)


def test_load_missing_column_and_file(tmp_path):
    path = tmp_path / "d.csv"
    path.write_text("y,x1\n0,1\n")
    with pytest.raises(DataError, match="x2"):
        load_csv(path, columns=["x2"])
    with pytest.raises(DataError, match="response"):
        load_csv(path, response="z")
    with pytest.raises(DataError):
        load_csv(tmp_path / "nope.csv")


def test_csv_round_trip_refit(sample_csv):
    path, data = sample_csv
    a = fit_logistic(data, ["x1", "x2"], {"x1": "tercile"})
    b = fit_logistic(load_csv(path), ["x1", "x2"], {"x1": "tercile"})
    assert b.aic == pytest.approx(a.aic, abs=1e-9)


def test_model_spec_parsing():
    assert parse_model_spec("x1:tercile, x2") == (Term("x1", "tercile"), Term("x2"))
    assert parse_model_spec("") == ()
    with pytest.raises(EncodingError):
        parse_model_spec("x1:cubic")
    with pytest.raises(ShapeError):
        parse_model_spec("x1,x1:quadratic")


def test_auto_relation():
    g, h = parse_model_spec("x2"), parse_model_spec("x1,x2")
    assert resolve_relation("auto", g, h) == (Relation.NESTED, False)
    assert resolve_relation("auto", h, g) == (Relation.NESTED, True)
    assert resolve_relation("auto", parse_model_spec("x1,x2"), parse_model_spec("x1:tercile,x2"))[0] is Relation.NON_NESTED
    assert resolve_relation("non-nested", g, h)[0] is Relation.NON_NESTED
    with pytest.raises(ShapeError):
        resolve_relation("auto", g, g)


def test_compare_from_summaries(capsys):
    status, out, _ = _run(capsys, "compare", "--loglik-g", "-1346.2", "--params-g", "5", "--loglik-h", "-1342.9",
                          "--params-h", "6", "--n", "3484", "--relation", "nested")
    assert status == 0
    assert "-2LR = 6.6" in out
    assert "tracking interval (-2.155e-05, 0.0028)" in out
    assert "difference of risks is small" in out


def test_text_and_structured_carry_the_same_numbers(capsys):
    args = ["compare", "--loglik-g", "-1346.2", "--params-g", "5", "--loglik-h", "-1342.9", "--params-h", "6",
            "--n", "3484", "--relation", "nested"]
    _, text, _ = _run(capsys, *args)
    _, raw, _ = _run(capsys, *args, "--format", "structured")
    doc = json.loads(raw)["comparison"]
    assert f"D = {doc['d_stat']:.4g}" in text
    assert f"p = {doc['lr_pvalue']:.4g}" in text
    lo, hi = doc["tracking_interval"]
    assert f"({lo:.4g}, {hi:.4g})" in text


def test_compare_fitted_models(capsys, sample_csv):
    path, _ = sample_csv
    status, out, _ = _run(capsys, "compare", "--input", str(path), "--model-g", "x1,x2",
                          "--model-h", "x1:tercile,x2", "--format", "structured")
    doc = json.loads(out)
    assert status == 0
    assert doc["comparison"]["relation"] == "non_nested"
    assert doc["g"]["n_params"] == 3 and doc["h"]["n_params"] == 4


def test_compare_auto_swaps_to_nested(capsys, sample_csv):
    path, _ = sample_csv
    status, out, _ = _run(capsys, "compare", "--input", str(path), "--model-g", "x1,x2", "--model-h", "x2")
    assert status == 0 and "swapped" in out and "nested_g_in_h" in out


def test_fit_command(capsys, sample_csv):
    path, _ = sample_csv
    status, out, _ = _run(capsys, "fit", "--input", str(path), "--model-g", "x1:quadratic,x2")
    assert status == 0 and "x1^2" in out and "AIC" in out


def test_scale_command(capsys):
    status, out, _ = _run(capsys, "scale", "--sigma-sq", "2")
    assert status == 0 and "0.09657" in out and "(large)" in out
    _, out, _ = _run(capsys, "scale", "--kl", "0.1", "--odds-ratio", "1.1", "--params", "10", "--n", "500",
                     "--format", "structured")
    doc = json.loads(out)["scale"]
    assert doc["relative_error"]["relative_error"] == pytest.approx(0.4258, abs=1e-4)
    assert doc["odds_ratio"]["category"] == "small"
    assert doc["statistical_risk"]["risk"] == pytest.approx(0.01)


def test_simulate_is_deterministic(capsys):
    args = ["simulate", "nonnested", "--n", "250", "--reps", "10", "--seed", "7", "--format", "structured"]
    _, first, _ = _run(capsys, *args)
    _, second, _ = _run(capsys, *args)
    assert first == second
    assert json.loads(first)["simulation"]["reps"] == 10


def test_simulate_custom_coefficients(capsys):
    base = ["simulate", "nonnested", "--n", "250", "--reps", "5", "--format", "structured"]
    _, a, _ = _run(capsys, *base)
    _, b, _ = _run(capsys, *base, "--coefficients", "0.5,0.7071,2")
    assert json.loads(a)["simulation"]["kl_check"] > json.loads(b)["simulation"]["kl_check"]
    with pytest.raises(SystemExit):
        main(base + ["--coefficients", "1,2"])


def test_simulate_nested(capsys):
    status, out, _ = _run(capsys, "simulate", "nested", "--truth", "f2", "--n", "500", "--reps", "20")
    assert status == 0 and "KS distance" in out


@pytest.mark.parametrize("argv,code", [
    (["fit", "--input", "/nonexistent.csv"], "data"),
    (["compare", "--loglik-g", "-10", "--params-g", "3"], "shape"),
    (["compare", "--loglik-g", "-10", "--params-g", "3", "--loglik-h", "-12", "--params-h", "4", "--n", "100",
      "--relation", "nested"], "relation"),
    (["scale", "--sigma-sq", "-1"], "domain"),
    (["scale"], "shape"),
])
def test_errors_are_single_coded_lines(capsys, argv, code):
    status, out, err = _run(capsys, *argv)
    assert status != 0 and out == ""
    lines = err.strip().splitlines()
    assert len(lines) == 1 and lines[0].startswith(f"error: {code}: ")


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "klrisk", "scale", "--kl", "0.01"], capture_output=True, text=True)
    assert proc.returncode == 0 and "moderate" in proc.stdout
