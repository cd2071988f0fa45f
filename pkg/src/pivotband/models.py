"""Datasets and working (possibly misspecified) likelihood models.

Three built-in working models are provided, each with closed-form maximum
likelihood estimates and closed-form per-observation scores and Hessians:

* ``poisson_mean``       -- iid Poisson with unknown mean, theta > 0
* ``origin_regression``  -- Gaussian regression through the origin, one covariate
* ``linear_regression``  -- Gaussian linear regression with design matrix X

The Gaussian models carry a nuisance scale sigma2.  Scores are proportional
to 1/sigma2, so sigma2 cancels from every sandwich and pivot quantity; it is
kept only so that the classical information-based covariance can use the
fitted residual variance.  When a parameter point carries no sigma2 the
models evaluate at sigma2 = 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .exceptions import (
    ConfigError,
    DegenerateCovariateError,
    InvalidDataError,
    NumericDomainError,
    SingularDesignError,
)

__all__ = [
    "Dataset",
    "ParamPoint",
    "WorkingModel",
    "PoissonMean",
    "OriginRegression",
    "LinearRegression",
    "get_model",
    "as_param",
    "mle_fit",
    "score_sum",
]


def _readonly(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, dtype=float)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class Dataset:
    """Immutable container for responses and an optional design matrix.

    The design matrix, when present, must have as many rows as ``y`` and
    full column rank; rank is checked at construction so downstream code
    can assume a well-posed least-squares problem.
    """

    y: np.ndarray
    X: np.ndarray | None = None
    labels: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        y = _readonly(np.atleast_1d(np.asarray(self.y, dtype=float)))
        if y.ndim != 1 or y.size < 1:
            raise InvalidDataError("y must be a one-dimensional array with n >= 1")
        if not np.all(np.isfinite(y)):
            raise InvalidDataError("y contains non-finite values")
        object.__setattr__(self, "y", y)

        if self.X is not None:
            X = np.asarray(self.X, dtype=float)
            if X.ndim == 1:
                X = X[:, None]
            if X.shape[0] != y.size:
                raise InvalidDataError(
                    f"X has {X.shape[0]} rows but y has {y.size} observations"
                )
            if not np.all(np.isfinite(X)):
                raise InvalidDataError("X contains non-finite values")
            p = X.shape[1]
            if p > X.shape[0]:
                raise SingularDesignError(
                    f"more columns ({p}) than observations ({X.shape[0]})"
                )
            if np.linalg.matrix_rank(X) < p:
                raise SingularDesignError("design matrix is rank deficient")
            object.__setattr__(self, "X", _readonly(X))
        if self.labels is not None:
            object.__setattr__(self, "labels", tuple(str(c) for c in self.labels))

    @property
    def n(self) -> int:
        return int(self.y.size)

    @property
    def p(self) -> int | None:
        return None if self.X is None else int(self.X.shape[1])


@dataclass(frozen=True)
class ParamPoint:
    """A parameter vector plus an optional nonnegative nuisance scale.

    ``sigma2 = 0`` is allowed as a *stored* value (exact-fit datasets produce
    it) but evaluation of scores or Hessians requires sigma2 > 0.
    """

    theta: np.ndarray
    sigma2: float | None = None

    def __post_init__(self) -> None:
        theta = _readonly(np.atleast_1d(np.asarray(self.theta, dtype=float)))
        if theta.ndim != 1 or theta.size < 1:
            raise NumericDomainError("theta must be a one-dimensional vector")
        if not np.all(np.isfinite(theta)):
            raise NumericDomainError("theta contains non-finite values")
        object.__setattr__(self, "theta", theta)
        if self.sigma2 is not None:
            s2 = float(self.sigma2)
            if not np.isfinite(s2) or s2 < 0:
                raise NumericDomainError("sigma2 must be finite and nonnegative")
            object.__setattr__(self, "sigma2", s2)

    @property
    def p(self) -> int:
        return int(self.theta.size)


def as_param(theta, sigma2: float | None = None) -> ParamPoint:
    """Coerce an array-like or ParamPoint into a ParamPoint."""
    if isinstance(theta, ParamPoint):
        return theta
    return ParamPoint(np.atleast_1d(np.asarray(theta, dtype=float)), sigma2)


def _eval_sigma2(point: ParamPoint) -> float:
    if point.sigma2 is None:
        return 1.0
    if point.sigma2 <= 0:
        raise NumericDomainError("sigma2 must be positive for evaluation")
    return point.sigma2


class WorkingModel:
    """Interface shared by the built-in working models.

    ``scores`` returns the (n, p) matrix of per-observation log-density
    gradients and ``hessians`` the (n, p, p) stack of per-observation
    second derivatives, both evaluated at a parameter point.  All methods
    are pure functions of immutable inputs.
    """

    kind: str = ""
    requires_design: bool = False
    #: open lower bound of the theta domain for scalar models, if any
    theta_floor: float | None = None

    def param_dim(self, data: Dataset) -> int:
        raise NotImplementedError

    def check_data(self, data: Dataset) -> None:
        raise NotImplementedError

    def check_theta(self, data: Dataset, point: ParamPoint) -> None:
        if point.p != self.param_dim(data):
            raise NumericDomainError(
                f"theta has length {point.p}, model expects {self.param_dim(data)}"
            )

    def log_density(self, data: Dataset, point: ParamPoint) -> np.ndarray:
        raise NotImplementedError

    def scores(self, data: Dataset, point: ParamPoint) -> np.ndarray:
        raise NotImplementedError

    def hessians(self, data: Dataset, point: ParamPoint) -> np.ndarray:
        raise NotImplementedError

    def fit(self, data: Dataset) -> ParamPoint:
        raise NotImplementedError

    def __repr__(self) -> str:  # pragma: no cover - convenience only
        return f"{type(self).__name__}()"


class PoissonMean(WorkingModel):
    """iid Poisson working model for the mean of count-like data.

    score_i  = y_i / theta - 1
    hess_i   = -y_i / theta^2
    MLE      = sample mean
    """

    kind = "poisson_mean"
    theta_floor = 0.0

    def param_dim(self, data: Dataset) -> int:
        return 1

    def check_data(self, data: Dataset) -> None:
        if np.any(data.y < 0):
            raise InvalidDataError("Poisson working model requires y_i >= 0")

    def check_theta(self, data: Dataset, point: ParamPoint) -> None:
        super().check_theta(data, point)
        if point.theta[0] <= 0:
            raise NumericDomainError("Poisson mean must satisfy theta > 0")

    def log_density(self, data: Dataset, point: ParamPoint) -> np.ndarray:
        self.check_data(data)
        self.check_theta(data, point)
        th = point.theta[0]
        return data.y * np.log(th) - th - gammaln(data.y + 1.0)

    def scores(self, data: Dataset, point: ParamPoint) -> np.ndarray:
        self.check_data(data)
        self.check_theta(data, point)
        return (data.y / point.theta[0] - 1.0)[:, None]

    def hessians(self, data: Dataset, point: ParamPoint) -> np.ndarray:
        self.check_data(data)
        self.check_theta(data, point)
        return (-data.y / point.theta[0] ** 2).reshape(-1, 1, 1)

    def fit(self, data: Dataset) -> ParamPoint:
        self.check_data(data)
        mean = float(data.y.mean())
        if mean <= 0:
            raise NumericDomainError("sample mean is zero; Poisson MLE is on the domain boundary")
        return ParamPoint(np.array([mean]))


class _GaussianModel(WorkingModel):
    """Shared machinery for the Gaussian regression models."""

    requires_design = True

    def _design(self, data: Dataset) -> np.ndarray:
        if data.X is None:
            raise InvalidDataError(f"{self.kind} requires a design matrix")
        return data.X

    def param_dim(self, data: Dataset) -> int:
        return int(self._design(data).shape[1])

    def check_data(self, data: Dataset) -> None:
        self._design(data)

    def _residuals(self, data: Dataset, point: ParamPoint) -> np.ndarray:
        return data.y - self._design(data) @ point.theta

    def log_density(self, data: Dataset, point: ParamPoint) -> np.ndarray:
        self.check_theta(data, point)
        s2 = _eval_sigma2(point)
        r = self._residuals(data, point)
        return -0.5 * np.log(2.0 * np.pi * s2) - r**2 / (2.0 * s2)

    def scores(self, data: Dataset, point: ParamPoint) -> np.ndarray:
        self.check_theta(data, point)
        s2 = _eval_sigma2(point)
        r = self._residuals(data, point)
        return self._design(data) * (r / s2)[:, None]

    def hessians(self, data: Dataset, point: ParamPoint) -> np.ndarray:
        self.check_theta(data, point)
        s2 = _eval_sigma2(point)
        X = self._design(data)
        # constant in theta: -x_i x_i^T / sigma2
        return -np.einsum("ni,nj->nij", X, X) / s2


class OriginRegression(_GaussianModel):
    """Gaussian regression through the origin with a single covariate.

    score_i = x_i (y_i - theta x_i) / sigma2
    MLE     = sum(x y) / sum(x^2), sigma2_hat = RSS / n
    """

    kind = "origin_regression"

    def check_data(self, data: Dataset) -> None:
        X = self._design(data)
        if X.shape[1] != 1:
            raise InvalidDataError("origin regression uses exactly one covariate")

    def fit(self, data: Dataset) -> ParamPoint:
        self.check_data(data)
        x = self._design(data)[:, 0]
        sxx = float(x @ x)
        if sxx <= 0:
            raise DegenerateCovariateError("sum of squared covariates is zero")
        theta = float(x @ data.y) / sxx
        rss = float(np.sum((data.y - theta * x) ** 2))
        return ParamPoint(np.array([theta]), sigma2=rss / data.n)


class LinearRegression(_GaussianModel):
    """Gaussian linear regression on an arbitrary full-rank design.

    The normal equations are solved through a Cholesky factorization of
    X^T X; rank deficiency is an error, never a pseudo-inverse.
    """

    kind = "linear_regression"

    def fit(self, data: Dataset) -> ParamPoint:
        self.check_data(data)
        X = self._design(data)
        xtx = X.T @ X
        try:
            c = np.linalg.cholesky(xtx)
        except np.linalg.LinAlgError as exc:
            raise SingularDesignError("normal equations are singular") from exc
        theta = _chol_solve(c, X.T @ data.y)
        rss = float(np.sum((data.y - X @ theta) ** 2))
        return ParamPoint(theta, sigma2=rss / data.n)


def _chol_solve(chol_lower: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    z = np.linalg.solve(chol_lower, rhs)
    return np.linalg.solve(chol_lower.T, z)


_MODELS: dict[str, WorkingModel] = {
    "poisson_mean": PoissonMean(),
    "origin_regression": OriginRegression(),
    "linear_regression": LinearRegression(),
}
_ALIASES = {"poisson": "poisson_mean", "origin": "origin_regression", "linear": "linear_regression"}


def get_model(kind: str) -> WorkingModel:
    """Look up a built-in working model by name (aliases: poisson, origin, linear)."""
    key = _ALIASES.get(kind, kind)
    try:
        return _MODELS[key]
    except KeyError:
        raise ConfigError(f"unknown model kind: {kind!r}") from None


def mle_fit(model: WorkingModel, data: Dataset) -> ParamPoint:
    """Closed-form maximum (possibly misspecified) likelihood estimate."""
    return model.fit(data)


def score_sum(model: WorkingModel, data: Dataset, theta) -> np.ndarray:
    """Sum of per-observation scores at ``theta``; zero at the MLE."""
    point = as_param(theta)
    return model.scores(data, point).sum(axis=0)
