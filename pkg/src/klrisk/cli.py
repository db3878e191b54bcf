"""Command-line front end.

    klrisk fit      --input data.csv --response y --model-g "x1:tercile,x2"
    klrisk compare  --input data.csv --response y --model-g x2 --model-h x1,x2
    klrisk compare  --loglik-g -1346.2 --params-g 5 --loglik-h -1342.9 --params-h 6 --n 3484 --relation nested
    klrisk simulate nonnested --n 250 --reps 1000 --seed 7
    klrisk simulate nested --truth f2 --n 1000 --reps 2000
    klrisk scale    --sigma-sq 2 --kl 0.01 --odds-ratio 1.35

Every error ends the process with status 2 after printing one line
``error: <code>: <message>`` on stderr.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .comparison import ComparisonResult, Relation, compare, compare_summaries
from .errors import DataError, DomainError, KLRiskError, ShapeError
from .regression import FEATURE_MAPS, Dataset, FittedModel, Term, fit_logistic
from .scale import kl_binary_or, kl_normal_variance, qualify, relative_error, statistical_risk
from .simulation import NESTED_TRUTHS, NONNESTED_TRUTH, run_nested_study, run_nonnested_study

__all__ = ["RunConfig", "load_csv", "parse_model_spec", "resolve_relation", "run", "main"]


@dataclass
class RunConfig:
    command: str
    input_path: str | None = None
    response_column: str = "y"
    model_g: tuple[Term, ...] = ()
    model_h: tuple[Term, ...] | None = None
    relation: str = "auto"
    alpha: float = 0.05
    per_measurement: int | None = None
    seed: int = 0
    n: int | None = None
    reps: int | None = None
    output_format: str = "text"
    extra: dict = field(default_factory=dict)


def load_csv(path: str, response: str = "y", columns=None) -> Dataset:
    """Read a comma-separated file with a header row.

    Rows are numbered as in the file, so the first data row is row 2.
    ``columns`` restricts which covariates are parsed (default: all others).
    """
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot open {path}: {exc.strerror}") from None
    with fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path} is empty") from None
        if response not in header:
            raise DataError(f"response column {response!r} not found", column=response)
        wanted = [c for c in header if c != response] if columns is None else list(columns)
        for col in wanted:
            if col not in header:
                raise DataError(f"column {col!r} not found", column=col)
        idx_y = header.index(response)
        idx_x = [header.index(c) for c in wanted]
        ys, xs = [], []
        for row_no, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != len(header):
                raise DataError(f"row {row_no}: expected {len(header)} fields, found {len(row)}", row=row_no)
            y = _parse_cell(row[idx_y], row_no, response)
            if y not in (0.0, 1.0):
                raise DataError(f"row {row_no}, column {response}: response must be 0 or 1, got {row[idx_y]!r}",
                                row=row_no, column=response)
            ys.append(y)
            xs.append([_parse_cell(row[i], row_no, c) for i, c in zip(idx_x, wanted)])
    if not ys:
        raise DataError(f"{path} has no data rows")
    X = np.array(xs, dtype=float).reshape(len(ys), len(wanted))
    return Dataset(np.array(ys), X, tuple(wanted))


def _parse_cell(text, row_no, column):
    try:
        value = float(text)
    except ValueError:
        raise DataError(f"row {row_no}, column {column}: cannot parse {text!r} as a number",
                        row=row_no, column=column) from None
    if not math.isfinite(value):
        raise DataError(f"row {row_no}, column {column}: non-finite value {text!r}",
                        row=row_no, column=column)
    return value


def parse_model_spec(spec: str | None) -> tuple[Term, ...]:
    """``"x1:tercile,x2"`` -> terms; an empty spec is the intercept-only model."""
    if spec is None or not spec.strip():
        return ()
    terms = []
    for item in spec.split(","):
        item = item.strip()
        if not item:
            raise ShapeError(f"empty term in model spec {spec!r}")
        column, _, transform = item.partition(":")
        terms.append(Term(column.strip(), transform.strip() or "linear"))
    if len({t.column for t in terms}) != len(terms):
        raise ShapeError(f"column repeated in model spec {spec!r}")
    return tuple(terms)


def _term_map(terms):
    return {t.column: t.transform for t in terms}


def resolve_relation(relation: str, model_g, model_h) -> tuple[Relation, bool]:
    """Decide nested vs non-nested; the flag says whether g and h must be swapped.

    ``auto`` is nested when one model's (column, feature map) pairs are a
    strict subset of the other's.
    """
    if relation != "auto":
        return Relation.parse(relation), False
    g, h = _term_map(model_g), _term_map(model_h)
    if g == h:
        raise ShapeError("the two model specs are identical")
    if g.items() <= h.items():
        return Relation.NESTED, False
    if h.items() <= g.items():
        return Relation.NESTED, True
    return Relation.NON_NESTED, False


def _num(x):
    if x is None:
        return "NA"
    return f"{x:.4g}"


def _interval(iv):
    return "NA" if iv is None else f"({_num(iv[0])}, {_num(iv[1])})"


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def _model_label(terms):
    return " + ".join(["1"] + [t.column if t.transform == "linear" else f"{t.transform}({t.column})" for t in terms])


def _fit_report(fit: FittedModel, label: str) -> dict:
    return {
        "model": label,
        "coefficients": dict(zip(fit.feature_names, fit.coefficients.tolist())),
        "n_params": fit.n_params,
        "n_obs": fit.n_obs,
        "loglik": fit.loglik_total,
        "aic": fit.aic,
        "iterations": fit.iterations,
    }


def _fit_text(rep: dict) -> list[str]:
    lines = [f"model: {rep['model']}  (n = {rep['n_obs']}, {rep['n_params']} parameters)"]
    width = max(len(k) for k in rep["coefficients"])
    for name, value in rep["coefficients"].items():
        lines.append(f"  {name:<{width}}  {_num(value)}")
    lines.append(f"  log-likelihood {_num(rep['loglik'])}   AIC {_num(rep['aic'])}")
    return lines


def _comparison_text(res: ComparisonResult) -> list[str]:
    lines = [f"relation: {res.relation.value}   n = {res.n_obs}   alpha = {_num(res.alpha)}"]
    if res.aic_g is not None:
        lines.append(f"AIC(g) = {_num(res.aic_g)}   AIC(h) = {_num(res.aic_h)}")
    lines.append(f"D = {_num(res.d_stat)}")
    if res.omega_hat_sq is not None:
        lines.append(f"omega_hat_sq = {_num(res.omega_hat_sq)}")
    if res.lr_stat is not None:
        lines.append(f"-2LR = {_num(res.lr_stat)}   dof = {res.lr_dof}   p = {_num(res.lr_pvalue)}")
        lines.append(f"confidence interval {_interval(res.confidence_interval)}")
    lines.append(f"tracking interval {_interval(res.tracking_interval)}")
    if res.per_measurement_divisor:
        lines.append(f"(per measurement, divided by {res.per_measurement_divisor})")
    preferred = {1: "h has the smaller estimated risk", -1: "g has the smaller estimated risk",
                 0: "no difference in estimated risk"}[res.sign]
    verdict = "interval excludes 0" if res.excludes_zero else "interval contains 0"
    lines.append(f"{preferred}; {verdict}; difference of risks is {res.qualification}")
    return lines


def _cmd_fit(cfg: RunConfig):
    data = _load(cfg, cfg.model_g)
    fit = fit_logistic(data, cfg.model_g)
    rep = _fit_report(fit, _model_label(cfg.model_g))
    return rep, _fit_text(rep)


def _load(cfg, *models):
    if cfg.input_path is None:
        raise ShapeError("--input is required")
    columns = []
    for terms in models:
        for t in terms or ():
            if t.column not in columns:
                columns.append(t.column)
    return load_csv(cfg.input_path, cfg.response_column, columns)


def _cmd_compare(cfg: RunConfig):
    summary = cfg.extra.get("summary")
    if summary is not None:
        relation = "non_nested" if cfg.relation == "auto" else cfg.relation
        if cfg.relation == "auto" and summary["params_g"] < summary["params_h"] and summary.get("omega_sq") is None:
            relation = "nested"
        res = compare_summaries(summary["loglik_g"], summary["params_g"], summary["loglik_h"],
                                summary["params_h"], summary["n"], relation, cfg.alpha,
                                summary.get("omega_sq"), cfg.per_measurement)
        rep = {"comparison": res.to_dict()}
        return rep, _comparison_text(res)
    if cfg.model_h is None:
        raise ShapeError("compare needs --model-g and --model-h (or summary values)")
    relation, swap = resolve_relation(cfg.relation, cfg.model_g, cfg.model_h)
    model_g, model_h = (cfg.model_h, cfg.model_g) if swap else (cfg.model_g, cfg.model_h)
    data = _load(cfg, model_g, model_h)
    fit_g = fit_logistic(data, model_g)
    fit_h = fit_logistic(data, model_h)
    res = compare(fit_g, fit_h, relation, cfg.alpha, cfg.per_measurement)
    rep = {
        "g": _fit_report(fit_g, _model_label(model_g)),
        "h": _fit_report(fit_h, _model_label(model_h)),
        "swapped": swap,
        "comparison": res.to_dict(),
    }
    lines = [f"g: {rep['g']['model']}", f"h: {rep['h']['model']}"]
    if swap:
        lines.append("(models swapped so that g is nested in h)")
    return rep, lines + _comparison_text(res)


def _cmd_simulate(cfg: RunConfig):
    design = cfg.extra["design"]
    workers = cfg.extra.get("workers", 1)
    if design == "nonnested":
        rep = run_nonnested_study(cfg.n or 250, cfg.reps or 1000, cfg.alpha, cfg.seed, workers=workers,
                                  coefficients=cfg.extra.get("coefficients") or NONNESTED_TRUTH)
        d = rep.to_dict()
        lines = [
            f"non-nested study: n = {rep.n}, reps = {rep.reps}, seed = {rep.seed}, failed = {rep.n_failed}",
            f"calibrated truth: KL = {_num(rep.kl_check)}, omega^2 = {_num(rep.omega_check_sq)}, "
            f"trace = {_num(rep.trace_check)}, Delta = {_num(rep.delta_check)}",
            f"mean D = {_num(rep.mean_d)}   var D = {_num(rep.var_d)}   skewness = {_num(rep.skewness_d)}",
            f"mean omega_hat_sq = {_num(rep.mean_omega_hat_sq)}",
            f"coverage = {_num(rep.coverage_rate)}   power = {_num(rep.power)}   "
            f"(power-positive with D > 0: {rep.n_power_prefer_h})",
        ]
    else:
        rep = run_nested_study(cfg.extra.get("truth", "f1"), cfg.n or 1000, cfg.reps or 2000, cfg.seed,
                               workers=workers)
        d = rep.to_dict()
        lines = [
            f"nested study {rep.truth}: n = {rep.n}, reps = {rep.reps}, seed = {rep.seed}, failed = {rep.n_failed}",
            f"mean -2LR = {_num(rep.mean_stat)}   var = {_num(rep.var_stat)}",
            f"fitted chi2'({rep.dof}, {_num(rep.noncentrality_est)})   KS distance = {_num(rep.ks_distance)}",
            f"delta/(2n) = {_num(rep.delta_est)}: difference of risks is {rep.qualification.replace('_', ' ')}",
        ]
    return {"simulation": d}, lines


def _cmd_scale(cfg: RunConfig):
    ex = cfg.extra
    out, lines = {}, []
    if ex.get("sigma_sq") is not None:
        kl = kl_normal_variance(ex["sigma_sq"])
        out["normal_variance"] = {"sigma_sq": ex["sigma_sq"], "kl": kl, "category": qualify(kl).category}
        lines.append(f"N(0, {_num(ex['sigma_sq'])}) vs N(0, 1): KL = {_num(kl)} ({qualify(kl)})")
    if ex.get("kl") is not None:
        kl = ex["kl"]
        re = relative_error(kl)
        out["relative_error"] = {"kl": kl, "relative_error": re, "category": qualify(kl).category}
        lines.append(f"KL = {_num(kl)} ({qualify(kl)}): relative error on P(A) = {_num(re)}")
    if ex.get("odds_ratio") is not None:
        orat = ex["odds_ratio"]
        if not orat > 0:
            raise DomainError("odds ratio must be positive")
        kl = kl_binary_or(math.log(orat))
        out["odds_ratio"] = {"odds_ratio": orat, "kl": kl, "category": qualify(kl).category}
        lines.append(f"odds ratio {_num(orat)}: KL = {_num(kl)} ({qualify(kl)})")
    if ex.get("params") is not None:
        if cfg.n is None:
            raise ShapeError("--params needs --n")
        risk = statistical_risk(ex["params"], cfg.n)
        out["statistical_risk"] = {"params": ex["params"], "n": cfg.n, "risk": risk,
                                   "category": qualify(risk).category}
        lines.append(f"{ex['params']} parameters, n = {cfg.n}: statistical risk = {_num(risk)} ({qualify(risk)})")
    if not out:
        raise ShapeError("scale needs at least one of --sigma-sq, --kl, --odds-ratio, --params")
    return {"scale": out}, lines


_COMMANDS = {"fit": _cmd_fit, "compare": _cmd_compare, "simulate": _cmd_simulate, "scale": _cmd_scale}


def run(cfg: RunConfig, stdout=None) -> int:
    """Execute ``cfg``, print the report and return the exit status."""
    stdout = stdout or sys.stdout
    report, lines = _COMMANDS[cfg.command](cfg)
    if cfg.output_format == "structured":
        json.dump(_jsonable({"command": cfg.command, **report}), stdout, indent=2)
        stdout.write("\n")
    else:
        stdout.write("\n".join(lines) + "\n")
    return 0


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _coefficients(text):
    try:
        values = tuple(float(v) for v in text.split(","))
    except ValueError:
        values = ()
    if len(values) != 3 or not all(math.isfinite(v) for v in values):
        raise argparse.ArgumentTypeError(f"expected three comma-separated numbers, got {text!r}")
    return values


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", dest="output_format", choices=("text", "structured"), default="text")
    common.add_argument("--alpha", type=float, default=0.05)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--n", type=_positive_int)
    common.add_argument("--reps", type=_positive_int)

    data = argparse.ArgumentParser(add_help=False)
    data.add_argument("--input", dest="input_path")
    data.add_argument("--response", default="y")
    data.add_argument("--model-g", default="",
                      help=f"comma-separated columns, each optionally ':' + one of {', '.join(FEATURE_MAPS)}")

    parser = argparse.ArgumentParser(prog="klrisk", description="Compare models by estimated Kullback-Leibler risk.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("fit", parents=[common, data], help="fit one logistic model")

    p = sub.add_parser("compare", parents=[common, data], help="compare two models")
    p.add_argument("--model-h")
    p.add_argument("--relation", choices=("auto", "nested", "non-nested"), default="auto")
    p.add_argument("--per-measurement", type=_positive_int)
    p.add_argument("--loglik-g", type=float)
    p.add_argument("--params-g", type=_positive_int)
    p.add_argument("--loglik-h", type=float)
    p.add_argument("--params-h", type=_positive_int)
    p.add_argument("--omega-sq", type=float)

    p = sub.add_parser("simulate", parents=[common], help="run a simulation study")
    p.add_argument("design", choices=("nonnested", "nested"))
    p.add_argument("--truth", choices=sorted(NESTED_TRUTHS), default="f1")
    p.add_argument("--workers", type=_positive_int, default=1)
    p.add_argument("--coefficients", type=_coefficients,
                   help="intercept,x1,x2 of the non-nested generating logit (default 0.5,1,2)")

    p = sub.add_parser("scale", parents=[common], help="reference values on the KL scale")
    p.add_argument("--sigma-sq", type=float)
    p.add_argument("--kl", type=float)
    p.add_argument("--odds-ratio", type=float)
    p.add_argument("--params", type=_positive_int)
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig(command=args.command, alpha=args.alpha, seed=args.seed, n=args.n, reps=args.reps,
                    output_format=args.output_format)
    if args.command in ("fit", "compare"):
        cfg.input_path = args.input_path
        cfg.response_column = args.response
        cfg.model_g = parse_model_spec(args.model_g)
    if args.command == "compare":
        cfg.relation = args.relation
        cfg.per_measurement = args.per_measurement
        summary = [args.loglik_g, args.params_g, args.loglik_h, args.params_h]
        if any(v is not None for v in summary):
            if any(v is None for v in summary) or args.n is None:
                raise ShapeError("summary mode needs --loglik-g, --params-g, --loglik-h, --params-h and --n")
            cfg.extra["summary"] = dict(loglik_g=args.loglik_g, params_g=args.params_g, loglik_h=args.loglik_h,
                                        params_h=args.params_h, n=args.n, omega_sq=args.omega_sq)
        else:
            cfg.model_h = parse_model_spec(args.model_h) if args.model_h is not None else None
    elif args.command == "simulate":
        cfg.extra.update(design=args.design, truth=args.truth, workers=args.workers,
                         coefficients=args.coefficients)
    elif args.command == "scale":
        cfg.extra.update(sigma_sq=args.sigma_sq, kl=args.kl, odds_ratio=args.odds_ratio, params=args.params)
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return run(config_from_args(args))
    except KLRiskError as exc:
        message = " ".join(str(exc).split())
        print(f"error: {exc.code}: {message}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
