"""Bernoulli-logit maximum likelihood.

The fitted model exposes the per-observation conditional log-likelihood
contributions log g(y_i | x_i); the covariate distribution never enters, so
these are the objects every model comparison works with.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy.linalg import lapack

from . import _kernels
from .errors import (
    ConvergenceError,
    DataError,
    EncodingError,
    SeparationError,
    ShapeError,
    SingularDesignError,
)

__all__ = [
    "Dataset",
    "FittedModel",
    "Term",
    "FEATURE_MAPS",
    "tercile_cutpoints",
    "tercile_dummies",
    "design_matrix",
    "fit_logistic",
    "loglik_contributions",
    "information_matrices",
    "score",
]

FEATURE_MAPS = ("linear", "quadratic", "tercile")
SEPARATION_BOUND = 30.0


@dataclass(frozen=True)
class Dataset:
    """Binary responses with a named covariate matrix (no intercept column)."""

    responses: np.ndarray
    covariates: np.ndarray
    column_names: tuple[str, ...]

    def __post_init__(self):
        y = np.array(self.responses, dtype=float).ravel()
        X = np.array(self.covariates, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        if X.ndim != 2:
            raise ShapeError("covariates must be a 2-D matrix")
        names = tuple(str(c) for c in self.column_names)
        if y.size < 1:
            raise ShapeError("dataset needs at least one observation")
        if X.shape[0] != y.size:
            raise ShapeError(f"{y.size} responses but {X.shape[0]} covariate rows")
        if X.shape[1] != len(names):
            raise ShapeError(f"{X.shape[1]} covariate columns but {len(names)} names")
        if len(set(names)) != len(names):
            raise ShapeError("duplicate column names")
        if not (np.all(np.isfinite(y)) and np.all(np.isfinite(X))):
            raise DataError("dataset contains non-finite entries")
        if not np.all((y == 0) | (y == 1)):
            raise DataError("responses must be 0 or 1")
        y.flags.writeable = False
        X.flags.writeable = False
        object.__setattr__(self, "responses", y)
        object.__setattr__(self, "covariates", X)
        object.__setattr__(self, "column_names", names)

    @property
    def n(self) -> int:
        return self.responses.size

    def column(self, name: str) -> np.ndarray:
        try:
            return self.covariates[:, self.column_names.index(name)]
        except ValueError:
            raise ShapeError(f"no covariate named {name!r}") from None

    def with_columns(self, columns: Mapping[str, np.ndarray]) -> "Dataset":
        """Copy with extra (or replaced) covariate columns."""
        names = list(self.column_names)
        cols = [self.covariates[:, i] for i in range(len(names))]
        for name, values in columns.items():
            if name in names:
                cols[names.index(name)] = np.asarray(values, dtype=float)
            else:
                names.append(name)
                cols.append(np.asarray(values, dtype=float))
        return Dataset(self.responses, np.column_stack(cols), tuple(names))


@dataclass(frozen=True)
class Term:
    column: str
    transform: str = "linear"
    cutpoints: tuple[float, float] | None = None

    def __post_init__(self):
        if self.transform not in FEATURE_MAPS:
            raise EncodingError(f"unknown feature map {self.transform!r}; expected one of {FEATURE_MAPS}")

    def feature_names(self) -> list[str]:
        if self.transform == "linear":
            return [self.column]
        if self.transform == "quadratic":
            return [self.column, f"{self.column}^2"]
        return [f"{self.column}[T1]", f"{self.column}[T2]"]


@dataclass(frozen=True)
class FittedModel:
    coefficients: np.ndarray
    n_params: int
    loglik_total: float
    loglik_contribs: np.ndarray
    aic: float
    converged: bool
    n_obs: int
    terms: tuple[Term, ...] = ()
    feature_names: tuple[str, ...] = ()
    iterations: int = 0
    max_abs_score: float = field(default=float("nan"))


def tercile_cutpoints(x: np.ndarray) -> tuple[float, float]:
    """Empirical 1/3 and 2/3 quantiles (linear interpolation, type 7)."""
    x = np.asarray(x, dtype=float)
    if np.unique(x).size < 3:
        raise EncodingError("tercile encoding needs at least 3 distinct values")
    lo, hi = np.quantile(x, [1.0 / 3.0, 2.0 / 3.0])
    return float(lo), float(hi)


def tercile_dummies(x: np.ndarray, cutpoints: tuple[float, float] | None = None) -> np.ndarray:
    """Indicators of the first and second tercile; the third is the reference.

    Values equal to a cut point fall in the lower category.
    """
    x = np.asarray(x, dtype=float)
    lo, hi = tercile_cutpoints(x) if cutpoints is None else cutpoints
    first = x <= lo
    second = (x > lo) & (x <= hi)
    return np.column_stack([first, second]).astype(float)


def _resolve_terms(data: Dataset, columns, transform) -> tuple[Term, ...]:
    transform = dict(transform or {})
    terms = []
    for col in columns:
        if isinstance(col, Term):
            term = col
        else:
            term = Term(col, transform.pop(col, "linear"))
        data.column(term.column)  # raises on unknown columns
        if term.transform == "tercile" and term.cutpoints is None:
            term = Term(term.column, "tercile", tercile_cutpoints(data.column(term.column)))
        terms.append(term)
    if transform:
        raise ShapeError(f"feature maps given for unselected columns: {sorted(transform)}")
    return tuple(terms)


def design_matrix(data: Dataset, terms: Sequence[Term]) -> np.ndarray:
    """Intercept followed by the expanded features of each term."""
    blocks = [np.ones((data.n, 1))]
    for term in terms:
        x = data.column(term.column)
        if term.transform == "linear":
            blocks.append(x[:, None])
        elif term.transform == "quadratic":
            blocks.append(np.column_stack([x, x * x]))
        else:
            blocks.append(tercile_dummies(x, term.cutpoints))
    return np.ascontiguousarray(np.hstack(blocks))


def _check_rank(X: np.ndarray) -> None:
    gram = X.T @ X
    tol = 1e-10 * float(np.max(np.diag(gram)))
    _, _, rank, info = lapack.dpstrf(gram, tol=tol)
    if info < 0:  # pragma: no cover - argument error in LAPACK call
        raise SingularDesignError("pivoted Cholesky failed")
    if rank < X.shape[1]:
        raise SingularDesignError(f"design matrix has rank {rank} < {X.shape[1]} columns")


def _newton(X, y, max_iter, gtol):
    k = X.shape[1]
    beta = np.zeros(k)
    ll, grad, info = _kernels.logistic_derivatives(X, y, beta)
    for it in range(1, max_iter + 1):
        try:
            step = np.linalg.solve(info, grad)
        except np.linalg.LinAlgError:
            if np.max(np.abs(beta)) > 0.5 * SEPARATION_BOUND:
                raise SeparationError("information matrix became singular with diverging coefficients") from None
            raise ConvergenceError("singular information matrix", beta) from None
        gmax = float(np.max(np.abs(grad)))
        if gmax <= gtol and float(np.max(np.abs(step))) <= 1e-7 * (1.0 + float(np.max(np.abs(beta)))):
            return beta, ll, grad, it - 1
        if np.max(np.abs(beta)) > SEPARATION_BOUND:
            raise SeparationError(
                f"coefficient magnitude exceeded {SEPARATION_BOUND:g} with score {gmax:.3g}; "
                "the data are (quasi-)completely separated"
            )
        t = 1.0
        for _ in range(31):
            cand = beta + t * step
            ll_c, grad_c, info_c = _kernels.logistic_derivatives(X, y, cand)
            if ll_c >= ll - 1e-12 * (1.0 + abs(ll)):
                break
            t *= 0.5
        else:
            if gmax <= gtol:
                return beta, ll, grad, it - 1
            raise ConvergenceError("step halving failed to increase the log-likelihood", beta)
        beta, ll, grad, info = cand, ll_c, grad_c, info_c
    if float(np.max(np.abs(grad))) <= gtol:
        return beta, ll, grad, max_iter
    raise ConvergenceError(f"no convergence after {max_iter} Newton iterations", beta)


def fit_logistic(
    data: Dataset,
    columns: Sequence[str | Term] = (),
    transform: Mapping[str, str] | None = None,
    *,
    max_iter: int = 100,
    gtol: float = 1e-9,
) -> FittedModel:
    """Maximum likelihood logistic regression by Newton-Raphson with step halving.

    ``columns`` picks covariates (an intercept is always included) and
    ``transform`` maps a column name to ``"linear"``, ``"quadratic"`` or
    ``"tercile"``.  Raises :class:`SingularDesignError` for a rank-deficient
    design, :class:`SeparationError` when coefficients diverge and
    :class:`ConvergenceError` when iterations run out.
    """
    terms = _resolve_terms(data, columns, transform)
    X = design_matrix(data, terms)
    k = X.shape[1]
    if data.n <= k:
        raise SingularDesignError(f"n = {data.n} observations for {k} parameters")
    _check_rank(X)
    y = np.ascontiguousarray(data.responses)
    beta, _, grad, iterations = _newton(X, y, max_iter, gtol)
    contribs = _kernels.logistic_contribs(X, y, beta)
    total = float(np.sum(contribs))
    names = ("(Intercept)",) + tuple(n for t in terms for n in t.feature_names())
    return FittedModel(
        coefficients=beta,
        n_params=k,
        loglik_total=total,
        loglik_contribs=contribs,
        aic=-2.0 * total + 2.0 * k,
        converged=True,
        n_obs=data.n,
        terms=terms,
        feature_names=names,
        iterations=iterations,
        max_abs_score=float(np.max(np.abs(grad))),
    )


def _model_design(model: FittedModel, data: Dataset) -> np.ndarray:
    if data.n != model.n_obs:
        raise ShapeError(f"model fitted on {model.n_obs} observations, dataset has {data.n}")
    X = design_matrix(data, model.terms)
    if X.shape[1] != model.n_params:
        raise ShapeError("design layout does not match the fitted model")
    return X


def loglik_contributions(model: FittedModel, data: Dataset) -> np.ndarray:
    """log g(y_i | x_i) at the fitted coefficients, recomputed from ``data``."""
    X = _model_design(model, data)
    return _kernels.logistic_contribs(X, np.ascontiguousarray(data.responses), model.coefficients)


def score(model: FittedModel, data: Dataset, coefficients: np.ndarray | None = None) -> np.ndarray:
    """Score vector sum_i x_i (y_i - mu_i), at the MLE unless ``coefficients`` is given."""
    X = _model_design(model, data)
    beta = model.coefficients if coefficients is None else np.asarray(coefficients, dtype=float)
    return _kernels.logistic_derivatives(X, np.ascontiguousarray(data.responses), beta)[1]


def information_matrices(model: FittedModel, data: Dataset) -> tuple[np.ndarray, np.ndarray]:
    """Sample versions of the Hessian-based (I) and score-outer-product (J) information.

    I = n^-1 sum x x' mu(1 - mu),  J = n^-1 sum x x' (y - mu)^2.
    """
    X = _model_design(model, data)
    info, cross = _kernels.logistic_outer_scores(X, np.ascontiguousarray(data.responses), model.coefficients)
    return info / data.n, cross / data.n
