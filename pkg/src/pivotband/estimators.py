"""Bread/meat moment matrices, leverage, and the sandwich correction catalog.

Conventions
-----------
* ``A`` ("bread") is stored as the *negated* average per-observation Hessian,
  so it is positive definite for the built-in models on sensible data.
* ``B`` ("meat") is the average outer product of per-observation scores,
  evaluated at whatever parameter point is supplied -- it is *not* forced to
  the MLE, which is exactly the distinction the pivot method exploits.
* ``sandwich_cov`` returns the asymptotic covariance A^-1 B A^-1 of
  sqrt(n) (theta_hat - theta*); ``corrected_cov`` returns per-estimator
  covariances with the 1/n already folded in.

Small-sample corrections follow the hc1..hc5 naming used here throughout:
hc1 and hc3 reweight the meat by 1/(1-h) and 1/(1-h)^2, hc2 rescales the
whole sandwich by n/(n-p), hc4 keeps the plain sandwich but widens the
normal quantile, and hc5 pairs a leverage-capped reweighting with Student-t
quantiles.  hc4/hc5 are scalar-target-only and enter interval construction
through the :class:`QuantilePolicy` they return.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import (
    BreadSingularError,
    ConfigError,
    DegenerateLeverageError,
    NumericDomainError,
    UnsupportedCorrectionError,
)
from .models import Dataset, ParamPoint, WorkingModel, as_param

__all__ = [
    "CORRECTION_KINDS",
    "MomentMatrices",
    "QuantilePolicy",
    "moment_matrices",
    "sandwich_cov",
    "leverage",
    "hat_diagonals",
    "meat_weights",
    "corrected_cov",
    "correction_bundle",
    "normalize_kind",
]

#: Wald-type covariance catalog; "sandwich" is the unadjusted estimator.
CORRECTION_KINDS = ("sandwich", "hc1", "hc2", "hc3", "hc4", "hc5", "mle_info")

#: Leverage cap used by the hc5 meat reweighting.
HC5_LEVERAGE_CAP = 0.75

_SCALAR_ONLY = frozenset({"hc4", "hc5"})


def normalize_kind(kind: str) -> str:
    """Map user-facing names onto the catalog ("none" means unadjusted)."""
    key = str(kind).lower()
    if key == "none":
        key = "sandwich"
    if key not in CORRECTION_KINDS:
        raise ConfigError(f"unknown correction kind: {kind!r}")
    return key


@dataclass(frozen=True)
class MomentMatrices:
    """Bread A, meat B, and the parameter point they were evaluated at."""

    A: np.ndarray
    B: np.ndarray
    at: ParamPoint
    n: int


@dataclass(frozen=True)
class QuantilePolicy:
    """How a Wald-type method turns alpha into a critical value.

    family:
        "normal"           two-sided standard normal quantile
        "adjusted_normal"  normal quantile at an inflated confidence level;
                           the effective alpha is ``alpha * alpha_scale``
        "student_t"        Student-t quantile with ``df`` degrees of freedom
    """

    family: str = "normal"
    df: float | None = None
    alpha_scale: float = 1.0


def moment_matrices(model: WorkingModel, data: Dataset, theta) -> MomentMatrices:
    """Compute A = -(1/n) sum hess_i and B = (1/n) sum score_i score_i^T."""
    point = as_param(theta)
    scores = model.scores(data, point)
    hess = model.hessians(data, point)
    if not (np.all(np.isfinite(scores)) and np.all(np.isfinite(hess))):
        raise NumericDomainError("non-finite score or Hessian encountered")
    n = data.n
    A = -hess.mean(axis=0)
    B = scores.T @ scores / n
    A = (A + A.T) / 2.0
    B = (B + B.T) / 2.0
    return MomentMatrices(A=A, B=B, at=point, n=n)


def _cholesky(mat: np.ndarray, err: type[Exception], what: str) -> np.ndarray:
    try:
        return np.linalg.cholesky(mat)
    except np.linalg.LinAlgError as exc:
        raise err(f"{what} matrix is not positive definite") from exc


def _chol_inverse(mat: np.ndarray, err: type[Exception], what: str) -> np.ndarray:
    c = _cholesky(mat, err, what)
    eye = np.eye(mat.shape[0])
    z = np.linalg.solve(c, eye)
    inv = np.linalg.solve(c.T, z)
    return (inv + inv.T) / 2.0


def sandwich_cov(model: WorkingModel, data: Dataset, fit: ParamPoint | None = None) -> np.ndarray:
    """Plug-in sandwich A^-1 B A^-1 at the MLE (asymptotic, sqrt(n) scale).

    sigma2 cancels, so evaluation uses the canonical sigma2 = 1.
    """
    if fit is None:
        fit = model.fit(data)
    mm = moment_matrices(model, data, ParamPoint(fit.theta))
    a_inv = _chol_inverse(mm.A, BreadSingularError, "bread")
    cov = a_inv @ mm.B @ a_inv
    return (cov + cov.T) / 2.0


def hat_diagonals(X: np.ndarray) -> np.ndarray:
    """Diagonal of the projection matrix X (X^T X)^-1 X^T."""
    xtx = X.T @ X
    c = _cholesky(xtx, BreadSingularError, "X^T X")
    w = np.linalg.solve(c, X.T)
    return np.einsum("in,in->n", w, w)


def leverage(model: WorkingModel, data: Dataset) -> np.ndarray:
    """Per-observation leverage values h_ii.

    For the iid Poisson-mean model the design is taken to be an intercept
    column, giving h_ii = 1/n.
    """
    if model.requires_design:
        return hat_diagonals(data.X)
    return np.full(data.n, 1.0 / data.n)


def meat_weights(kind: str, h: np.ndarray) -> np.ndarray | None:
    """Per-observation meat weights for a correction kind, or None."""
    kind = normalize_kind(kind)
    if kind in ("hc1", "hc3"):
        if np.any(h >= 1.0 - 1e-12):
            raise DegenerateLeverageError(
                f"leverage reaches one; {kind} weights are undefined"
            )
        w = 1.0 / (1.0 - h)
        return w if kind == "hc1" else w**2
    if kind == "hc5":
        return 1.0 / (1.0 - np.minimum(HC5_LEVERAGE_CAP, h))
    return None


def corrected_cov(
    model: WorkingModel,
    data: Dataset,
    kind: str,
    fit: ParamPoint | None = None,
) -> tuple[np.ndarray, QuantilePolicy]:
    """Per-estimator covariance (1/n folded in) plus its quantile policy."""
    kind = normalize_kind(kind)
    bundle = correction_bundle(model, data, (kind,), fit=fit)
    return bundle[kind]


def correction_bundle(
    model: WorkingModel,
    data: Dataset,
    kinds,
    fit: ParamPoint | None = None,
) -> dict[str, tuple[np.ndarray, QuantilePolicy]]:
    """Compute several corrected covariances sharing one set of moments.

    Equivalent to calling :func:`corrected_cov` per kind but evaluates the
    scores, Hessians and leverage values once.
    """
    kinds = tuple(normalize_kind(k) for k in kinds)
    if fit is None:
        fit = model.fit(data)
    n = data.n
    p = fit.p
    for kind in kinds:
        if kind in _SCALAR_ONLY and p != 1:
            raise UnsupportedCorrectionError(f"{kind} is defined for scalar targets only")

    point1 = ParamPoint(fit.theta)  # canonical sigma2 = 1; it cancels
    scores = model.scores(data, point1)
    mm = moment_matrices(model, data, point1)
    a_inv = _chol_inverse(mm.A, BreadSingularError, "bread")

    need_leverage = any(k in ("hc1", "hc3", "hc5") for k in kinds)
    h = leverage(model, data) if need_leverage else None

    out: dict[str, tuple[np.ndarray, QuantilePolicy]] = {}
    for kind in kinds:
        if kind == "mle_info":
            # Gaussian Hessians scale as 1/sigma2, so the fitted residual
            # variance enters as a plain multiplier on the sigma2=1 bread.
            mult = fit.sigma2 if fit.sigma2 is not None else 1.0
            cov = mult * a_inv / n
            policy = QuantilePolicy()
        else:
            w = meat_weights(kind, h) if kind in ("hc1", "hc3", "hc5") else None
            meat = mm.B if w is None else (scores * w[:, None]).T @ scores / n
            meat = (meat + meat.T) / 2.0
            cov = a_inv @ meat @ a_inv / n
            if kind == "hc2":
                if n <= p:
                    raise DegenerateLeverageError("n/(n-p) scaling requires n > p")
                cov = cov * (n / (n - p))
            if kind == "hc4":
                policy = QuantilePolicy(family="adjusted_normal", alpha_scale=(n - p) / n)
            elif kind == "hc5":
                policy = QuantilePolicy(family="student_t", df=float(max(n - p, 1)))
            else:
                policy = QuantilePolicy()
        out[kind] = ((cov + cov.T) / 2.0, policy)
    return out
