"""Confidence intervals and regions: score pivot, sandwich, and corrections.

The pivot statistic standardizes the summed score by the *candidate-point*
meat matrix rather than plugging in the MLE:

    t(theta) = { (1/n) sum l_theta^2 }^(-1/2) * (1/sqrt(n)) sum l_theta      (p = 1)
    Q(theta) = u(theta)^T B_n(theta)^-1 u(theta),  u = (1/sqrt(n)) sum l_theta  (p >= 2)

Intervals invert |t(theta)| <= z_{1-alpha/2} by outward bracket expansion
followed by bisection; regions compare Q (or the Wald quadratic form with a
corrected covariance) against the chi-squared quantile with p degrees of
freedom, with boundaries solved radially per direction.

Intervals can be genuinely unbounded: for the Poisson-mean model |t| is
bounded by sqrt(n), so whenever the normal quantile exceeds sqrt(n) an
endpoint is reported as an unbounded marker rather than an error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats as _sps

from .estimators import (
    QuantilePolicy,
    corrected_cov,
    moment_matrices,
    normalize_kind,
)
from .exceptions import (
    BreadSingularError,
    ConfigError,
    DegenerateMeatError,
    NumericDomainError,
    UnsupportedCorrectionError,
)
from .models import Dataset, ParamPoint, WorkingModel, as_param

__all__ = [
    "METHODS",
    "PivotStat",
    "IntervalResult",
    "RegionResult",
    "RootSearchStats",
    "quantile",
    "critical_value",
    "pivot_stat",
    "covers",
    "pivot_interval",
    "wald_interval",
    "confidence_interval",
    "region_boundary",
    "boundary_gap",
    "valid_methods",
]

#: All interval/region construction methods.
METHODS = ("pivot", "sandwich", "hc1", "hc2", "hc3", "hc4", "hc5", "mle_info")

_MAX_EXPANSIONS = 60
_BISECT_REL_TOL = 1e-12
_MAX_BISECTIONS = 300


def valid_methods(p: int) -> tuple[str, ...]:
    """Methods applicable to a p-dimensional target (hc4/hc5 are scalar-only)."""
    if p == 1:
        return METHODS
    return tuple(m for m in METHODS if m not in ("hc4", "hc5"))


def quantile(kind: str, prob: float, df: float | None = None) -> float:
    """Inverse CDF for the standard normal, chi-squared, or Student-t laws."""
    if not 0.0 < prob < 1.0:
        raise NumericDomainError(f"probability must lie in (0, 1), got {prob}")
    if kind == "std_normal":
        return float(_sps.norm.ppf(prob))
    if kind == "chi2":
        if df is None or df < 1:
            raise NumericDomainError("chi2 quantile requires df >= 1")
        return float(_sps.chi2.ppf(prob, df))
    if kind == "student_t":
        if df is None or df < 1:
            raise NumericDomainError("student_t quantile requires df >= 1")
        return float(_sps.t.ppf(prob, df))
    raise ConfigError(f"unknown quantile kind: {kind!r}")


def critical_value(policy: QuantilePolicy, alpha: float) -> float:
    """Two-sided critical value for a Wald interval under a quantile policy."""
    if not 0.0 < alpha < 1.0:
        raise NumericDomainError(f"alpha must lie in (0, 1), got {alpha}")
    if policy.family == "normal":
        return quantile("std_normal", 1.0 - alpha / 2.0)
    if policy.family == "adjusted_normal":
        eff = alpha * policy.alpha_scale
        return quantile("std_normal", 1.0 - eff / 2.0)
    if policy.family == "student_t":
        return quantile("student_t", 1.0 - alpha / 2.0, df=policy.df)
    raise ConfigError(f"unknown quantile policy family: {policy.family!r}")


@dataclass(frozen=True)
class PivotStat:
    """Value of the score pivot at one parameter point.

    ``value`` holds the signed scalar statistic when p = 1; ``qform`` holds
    the nonnegative quadratic form when p >= 2.
    """

    at: ParamPoint
    n: int
    value: float | None = None
    qform: float | None = None


def pivot_stat(model: WorkingModel, data: Dataset, theta) -> PivotStat:
    """Evaluate the meat-standardized score at ``theta``."""
    point = as_param(theta)
    mm = moment_matrices(model, data, point)
    u = math.sqrt(data.n) * (model.scores(data, point).mean(axis=0))
    if point.p == 1:
        b = float(mm.B[0, 0])
        if b <= 0 or not np.isfinite(b):
            raise DegenerateMeatError("meat is zero at the evaluation point")
        return PivotStat(at=point, n=data.n, value=float(u[0]) / math.sqrt(b))
    try:
        c = np.linalg.cholesky(mm.B)
    except np.linalg.LinAlgError as exc:
        raise DegenerateMeatError("meat matrix is singular at the evaluation point") from exc
    w = np.linalg.solve(c, u)
    return PivotStat(at=point, n=data.n, qform=float(max(w @ w, 0.0)))


def _wald_qform(diff: np.ndarray, cov: np.ndarray) -> float:
    try:
        c = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError as exc:
        raise DegenerateMeatError("method covariance is singular") from exc
    w = np.linalg.solve(c, diff)
    return float(max(w @ w, 0.0))


def covers(
    model: WorkingModel,
    data: Dataset,
    theta_star,
    method: str,
    alpha: float,
    fit: ParamPoint | None = None,
) -> bool:
    """Whether the method's 1-alpha interval/region contains ``theta_star``.

    Membership never requires root finding: the pivot compares |t| or Q with
    the normal/chi-squared quantile directly, and Wald methods compare the
    standardized discrepancy from the MLE with the policy critical value.
    """
    point = as_param(theta_star)
    p = point.p
    if method == "pivot":
        stat = pivot_stat(model, data, point)
        if p == 1:
            return abs(stat.value) <= quantile("std_normal", 1.0 - alpha / 2.0)
        return stat.qform <= quantile("chi2", 1.0 - alpha, df=p)

    kind = normalize_kind(method)
    if fit is None:
        fit = model.fit(data)
    cov, policy = corrected_cov(model, data, kind, fit=fit)
    return _wald_covers(fit, point, cov, policy, alpha)


def _wald_covers(
    fit: ParamPoint,
    point: ParamPoint,
    cov: np.ndarray,
    policy: QuantilePolicy,
    alpha: float,
) -> bool:
    if point.p != fit.p:
        raise NumericDomainError(
            f"theta_star has length {point.p} but the fit has {fit.p} parameters"
        )
    diff = fit.theta - point.theta
    p = point.p
    if p == 1:
        se = math.sqrt(max(float(cov[0, 0]), 0.0))
        if se == 0.0:
            if diff[0] == 0.0:
                return True
            raise DegenerateMeatError("zero variance with nonzero discrepancy")
        return abs(float(diff[0])) <= critical_value(policy, alpha) * se
    if policy.family != "normal":
        raise UnsupportedCorrectionError("joint regions support normal-policy methods only")
    if not np.any(diff):
        return True
    return _wald_qform(diff, cov) <= quantile("chi2", 1.0 - alpha, df=p)


@dataclass(frozen=True)
class RootSearchStats:
    expansions: int
    bisections: int


@dataclass(frozen=True)
class IntervalResult:
    """A two-sided confidence interval; endpoints may be unbounded markers."""

    method: str
    lower: float
    upper: float
    alpha: float
    quantile_used: float
    iterations: tuple[RootSearchStats, ...] = ()
    flags: tuple[str, ...] = ()

    @property
    def width(self) -> float:
        return self.upper - self.lower

    @property
    def unbounded(self) -> bool:
        return not (math.isfinite(self.lower) and math.isfinite(self.upper))


def _expand_and_bisect(
    f,
    start: float,
    step: float,
    direction: int,
    floor: float | None = None,
) -> tuple[float | None, RootSearchStats]:
    """Find the crossing of ``f`` nearest ``start`` in one direction.

    ``f(start)`` must be evaluable with a definite sign.  Candidates move
    outward with doubling steps (clamped geometrically toward ``floor`` for
    bounded domains); points where ``f`` is degenerate are skipped.  Returns
    ``(None, stats)`` when no sign change is found within the budget.
    """
    f0 = f(start)
    if f0 == 0.0:
        return start, RootSearchStats(0, 0)
    sign0 = math.copysign(1.0, f0)

    near = start  # last point with the same sign as f(start)
    bracket = None
    expansions = 0
    clamp_gap = None
    for k in range(_MAX_EXPANSIONS):
        if clamp_gap is None:
            cand = start + direction * step * (2.0**k)
            if floor is not None and direction < 0 and cand <= floor:
                clamp_gap = near - floor
        if clamp_gap is not None:
            clamp_gap /= 2.0
            if clamp_gap <= 1e-14 * max(1.0, abs(start)):
                break
            cand = floor + clamp_gap
        expansions += 1
        try:
            fc = f(cand)
        except DegenerateMeatError:
            continue
        if fc == 0.0:
            return cand, RootSearchStats(expansions, 0)
        if math.copysign(1.0, fc) != sign0:
            bracket = (near, cand)
            break
        near = cand
        if clamp_gap is not None:
            clamp_gap = near - floor
    if bracket is None:
        return None, RootSearchStats(expansions, 0)

    a, b = bracket
    bisections = 0
    while abs(b - a) > _BISECT_REL_TOL * max(1.0, abs(a), abs(b)) and bisections < _MAX_BISECTIONS:
        mid = 0.5 * (a + b)
        try:
            fm = f(mid)
        except DegenerateMeatError:
            mid = mid + (b - a) * 1e-3
            fm = f(mid)
        bisections += 1
        if fm == 0.0:
            return mid, RootSearchStats(expansions, bisections)
        if math.copysign(1.0, fm) == sign0:
            a = mid
        else:
            b = mid
    return 0.5 * (a + b), RootSearchStats(expansions, bisections)


def pivot_interval(model: WorkingModel, data: Dataset, alpha: float) -> IntervalResult:
    """Invert the scalar pivot: the connected component of {|t| <= z} at the MLE.

    The initial bracketing step is the sandwich standard error (with a
    fallback when it is zero); endpoints without a crossing inside the
    expansion budget or the parameter domain are unbounded markers.
    """
    fit = model.fit(data)
    if fit.p != 1:
        raise UnsupportedCorrectionError("pivot intervals require a scalar parameter")
    z = quantile("std_normal", 1.0 - alpha / 2.0)
    theta_hat = float(fit.theta[0])

    cov, _ = corrected_cov(model, data, "sandwich", fit=fit)
    se = math.sqrt(max(float(cov[0, 0]), 0.0))
    step = se if se > 0 else 0.1 * max(abs(theta_hat), 1.0)

    def t_of(theta: float) -> float:
        if theta == theta_hat:
            # zero by stationarity; avoids the 0/0 ambiguity when the meat
            # vanishes exactly at the MLE (all-equal data)
            return 0.0
        return pivot_stat(model, data, ParamPoint(np.array([theta]))).value

    def g_lower(theta: float) -> float:
        return t_of(theta) - z

    def g_upper(theta: float) -> float:
        return t_of(theta) + z

    floor = model.theta_floor
    lo, it_lo = _expand_and_bisect(g_lower, theta_hat, step, direction=-1, floor=floor)
    hi, it_hi = _expand_and_bisect(g_upper, theta_hat, step, direction=+1)

    flags = []
    if lo is None:
        flags.append("lower_unbounded")
        lo = -math.inf
    if hi is None:
        flags.append("upper_unbounded")
        hi = math.inf
    return IntervalResult(
        method="pivot",
        lower=lo,
        upper=hi,
        alpha=alpha,
        quantile_used=z,
        iterations=(it_lo, it_hi),
        flags=tuple(flags),
    )


def wald_interval(model: WorkingModel, data: Dataset, kind: str, alpha: float) -> IntervalResult:
    """theta_hat +/- q * se with the corrected covariance and its policy."""
    kind = normalize_kind(kind)
    fit = model.fit(data)
    if fit.p != 1:
        raise UnsupportedCorrectionError("Wald intervals require a scalar parameter")
    cov, policy = corrected_cov(model, data, kind, fit=fit)
    se = math.sqrt(max(float(cov[0, 0]), 0.0))
    q = critical_value(policy, alpha)
    theta_hat = float(fit.theta[0])
    return IntervalResult(
        method=kind,
        lower=theta_hat - q * se,
        upper=theta_hat + q * se,
        alpha=alpha,
        quantile_used=q,
    )


def confidence_interval(model: WorkingModel, data: Dataset, method: str, alpha: float) -> IntervalResult:
    """Dispatch to the pivot or a Wald-type interval by method name."""
    if method == "pivot":
        return pivot_interval(model, data, alpha)
    return wald_interval(model, data, method, alpha)


@dataclass(frozen=True)
class RegionResult:
    """Radial description of a joint confidence region around the MLE."""

    method: str
    alpha: float
    chi2_threshold: float
    center: np.ndarray
    boundary: tuple[tuple[np.ndarray, float], ...] = ()
    contains_query: bool | None = None
    flags: tuple[str, ...] = ()


def _unit(u) -> np.ndarray:
    v = np.asarray(u, dtype=float).ravel()
    norm = float(np.linalg.norm(v))
    if norm <= 0 or not np.isfinite(norm):
        raise ConfigError("directions must be nonzero vectors")
    return v / norm


def region_boundary(
    model: WorkingModel,
    data: Dataset,
    method: str,
    alpha: float,
    directions,
) -> RegionResult:
    """Boundary radii of the joint region along the given unit directions.

    Solves stat(theta_hat - r u) = chi2_{p,1-alpha} for each direction u by
    bracket expansion from r = 0 and bisection.  Directions along which no
    crossing is found inside the budget get an infinite-radius marker.
    """
    fit = model.fit(data)
    p = fit.p
    if p < 2:
        raise ConfigError("region boundaries require p >= 2; use intervals for scalars")
    if method not in valid_methods(p):
        raise UnsupportedCorrectionError(f"{method} does not support joint regions")
    thr = quantile("chi2", 1.0 - alpha, df=p)

    if method == "pivot":
        def stat(theta: np.ndarray) -> float:
            return pivot_stat(model, data, ParamPoint(theta)).qform
    else:
        cov, _ = corrected_cov(model, data, method, fit=fit)

        def stat(theta: np.ndarray) -> float:
            return _wald_qform(fit.theta - theta, cov)

    # Radial scale from the sandwich covariance, so expansion starts near
    # the right order of magnitude in every direction.
    try:
        cov_sw, _ = corrected_cov(model, data, "sandwich", fit=fit)
        chol_sw = np.linalg.cholesky(cov_sw)
    except (BreadSingularError, DegenerateMeatError, np.linalg.LinAlgError):
        chol_sw = None

    entries = []
    flags = []
    for u in directions:
        uvec = _unit(u)
        if uvec.size != p:
            raise ConfigError(f"direction has length {uvec.size}, expected {p}")
        if chol_sw is not None:
            w = np.linalg.solve(chol_sw, uvec)
            step = math.sqrt(thr / float(w @ w))
        else:
            step = 0.1 * max(float(np.linalg.norm(fit.theta)), 1.0)

        def g(r: float, _u=uvec) -> float:
            return stat(fit.theta - r * _u) - thr

        root, _ = _expand_and_bisect(g, 0.0, step, direction=+1)
        if root is None:
            flags.append("unbounded_direction")
            entries.append((uvec, math.inf))
        else:
            entries.append((uvec, float(root)))
    return RegionResult(
        method=method,
        alpha=alpha,
        chi2_threshold=thr,
        center=fit.theta,
        boundary=tuple(entries),
        flags=tuple(sorted(set(flags))),
    )


def boundary_gap(
    model: WorkingModel,
    datasets,
    direction,
    alpha: float,
    method_a: str = "pivot",
    method_b: str = "sandwich",
) -> list[tuple[int, float]]:
    """sqrt(n)-scaled radius gap between two methods along one direction.

    For a sequence of (typically nested, growing) datasets, returns
    ``(n, sqrt(n) * |r_a - r_b|)`` per dataset; the gap shrinks with n when
    the two region constructions are asymptotically equivalent.
    """
    u = _unit(direction)
    out = []
    for data in datasets:
        r_a = region_boundary(model, data, method_a, alpha, [u]).boundary[0][1]
        r_b = region_boundary(model, data, method_b, alpha, [u]).boundary[0][1]
        out.append((data.n, math.sqrt(data.n) * abs(r_a - r_b)))
    return out
