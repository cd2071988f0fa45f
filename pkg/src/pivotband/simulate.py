"""Deterministic data generators and the Monte Carlo coverage engine.

Scenarios
---------
poisson_nb     Poisson-mean working model; truth is negative binomial with
               mean 3 and variance 3.9, drawn as a Gamma-Poisson mixture
               (shape r = 10, since 3.9 = 3 + 9/r).  Pseudo-true mean: 3.
origin_hetero  Regression through the origin; x ~ N(0,1) redrawn per
               replicate, errors N(0, 1+|x|) (variance parameterization),
               true slope 1.
slr_hetero     Simple linear regression working model under the same
               heteroscedastic errors; true coefficients (1, 1); joint
               coverage of the coefficient vector.
slr_homo       Correctly specified homoscedastic N(0,1) counterpart of
               slr_hetero, used for calibration and asymptotic-gap checks.

Every replicate has its own RNG stream keyed by (seed, scenario, n,
replicate), so results are bit-identical across runs and independent of how
replicates are distributed over workers.  Replicates on which a method's
statistic is undefined (zero meat, singular subsample, boundary MLE) are
excluded from that method's denominator and reported as degenerate counts.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import partial

import numpy as np

from .estimators import corrected_cov
from .exceptions import (
    DEGENERATE_ERRORS,
    ConfigError,
    DegenerateMeatError,
    UnsupportedCorrectionError,
)
from .inference import covers, pivot_stat, quantile, valid_methods
from .models import Dataset, ParamPoint, WorkingModel, get_model

__all__ = [
    "SCENARIO_KINDS",
    "Scenario",
    "SimConfig",
    "CoverageRecord",
    "get_scenario",
    "gen_dataset",
    "run_coverage",
    "population_study",
    "resolve_workers",
]

THREADS_ENV_VAR = "PIVOTBAND_THREADS"


@dataclass(frozen=True)
class Scenario:
    kind: str
    model_kind: str
    truth: ParamPoint
    description: str

    @property
    def model(self) -> WorkingModel:
        return get_model(self.model_kind)

    @property
    def p(self) -> int:
        return self.truth.p


_NB_SHAPE = 10.0  # matches variance 3.9 = 3 + 3^2/shape
_NB_MEAN = 3.0

SCENARIOS: dict[str, Scenario] = {
    "poisson_nb": Scenario(
        kind="poisson_nb",
        model_kind="poisson_mean",
        truth=ParamPoint(np.array([3.0])),
        description="Poisson working model, negative binomial truth (mean 3, var 3.9)",
    ),
    "origin_hetero": Scenario(
        kind="origin_hetero",
        model_kind="origin_regression",
        truth=ParamPoint(np.array([1.0])),
        description="origin regression, errors N(0, 1+|x|)",
    ),
    "slr_hetero": Scenario(
        kind="slr_hetero",
        model_kind="linear_regression",
        truth=ParamPoint(np.array([1.0, 1.0])),
        description="simple linear regression, errors N(0, 1+|x|), joint region",
    ),
    "slr_homo": Scenario(
        kind="slr_homo",
        model_kind="linear_regression",
        truth=ParamPoint(np.array([1.0, 1.0])),
        description="correctly specified simple linear regression, N(0,1) errors",
    ),
}
SCENARIO_KINDS = tuple(SCENARIOS)
_SCENARIO_CODE = {kind: i for i, kind in enumerate(SCENARIO_KINDS)}


def get_scenario(kind: str) -> Scenario:
    try:
        return SCENARIOS[kind]
    except KeyError:
        raise ConfigError(f"unknown scenario: {kind!r}") from None


def replicate_rng(seed: int, scenario: str, n: int, replicate: int) -> np.random.Generator:
    """Independent, reproducible stream for one replicate."""
    code = _SCENARIO_CODE.get(scenario)
    if code is None:
        # population pipeline and ad hoc streams hash the label instead
        code = abs(hash(scenario)) % (2**31)
    ss = np.random.SeedSequence([int(seed), int(code), int(n), int(replicate)])
    return np.random.default_rng(ss)


def gen_dataset(
    scenario: str | Scenario,
    n: int,
    seed: int,
    replicate: int = 0,
    truth: ParamPoint | None = None,
) -> Dataset:
    """Draw one dataset for a scenario; deterministic in (seed, n, replicate).

    ``truth`` overrides the scenario's true parameter (used by the
    translation-invariance checks); the noise stream is unchanged.
    """
    scen = get_scenario(scenario) if isinstance(scenario, str) else scenario
    if n < 2:
        raise ConfigError("scenario datasets require n >= 2")
    rng = replicate_rng(seed, scen.kind, n, replicate)
    th = (truth or scen.truth).theta

    if scen.kind == "poisson_nb":
        lam = rng.gamma(_NB_SHAPE, _NB_MEAN / _NB_SHAPE, size=n)
        y = rng.poisson(lam).astype(float)
        return Dataset(y=y)

    x = rng.standard_normal(n)
    if scen.kind == "origin_hetero":
        sd = np.sqrt(1.0 + np.abs(x))
        y = th[0] * x + rng.standard_normal(n) * sd
        return Dataset(y=y, X=x[:, None], labels=("x",))
    if scen.kind in ("slr_hetero", "slr_homo"):
        sd = np.sqrt(1.0 + np.abs(x)) if scen.kind == "slr_hetero" else 1.0
        y = th[0] + th[1] * x + rng.standard_normal(n) * sd
        X = np.column_stack([np.ones(n), x])
        return Dataset(y=y, X=X, labels=("intercept", "x"))
    raise ConfigError(f"no generator for scenario {scen.kind!r}")


@dataclass(frozen=True)
class SimConfig:
    """Monte Carlo run description; validated on construction."""

    scenario: str
    n_grid: tuple[int, ...]
    reps: int
    alpha: float
    methods: tuple[str, ...]
    seed: int

    def __post_init__(self) -> None:
        scen = get_scenario(self.scenario)
        grid = tuple(int(n) for n in self.n_grid)
        if not grid or any(b <= a for a, b in zip(grid, grid[1:])):
            raise ConfigError("n_grid must be a nonempty strictly increasing sequence")
        if min(grid) < 2:
            raise ConfigError("sample sizes must be >= 2")
        object.__setattr__(self, "n_grid", grid)
        if self.reps < 1:
            raise ConfigError("reps must be >= 1")
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError("alpha must lie in (0, 1)")
        methods = tuple(self.methods)
        allowed = valid_methods(scen.p)
        for m in methods:
            if m not in allowed:
                raise ConfigError(
                    f"method {m!r} is not valid for scenario {self.scenario!r} (p={scen.p})"
                )
        object.__setattr__(self, "methods", methods)


@dataclass(frozen=True)
class CoverageRecord:
    """One (scenario, method, n) coverage summary."""

    scenario: str
    method: str
    n: int
    reps: int
    covered: int
    degenerate: int
    seed: int

    @property
    def effective_reps(self) -> int:
        return self.reps - self.degenerate

    @property
    def coverage(self) -> float:
        eff = self.effective_reps
        return self.covered / eff if eff > 0 else float("nan")

    @property
    def mc_stderr(self) -> float:
        eff = self.effective_reps
        if eff <= 0:
            return float("nan")
        c = self.coverage
        return float(np.sqrt(c * (1.0 - c) / eff))


def _replicate_outcomes(
    model: WorkingModel,
    data: Dataset,
    truth: ParamPoint,
    methods: tuple[str, ...],
    alpha: float,
) -> dict[str, bool | None]:
    """Per-method covered flag for one dataset; None marks degenerate."""
    out: dict[str, bool | None] = {}
    try:
        fit = model.fit(data)
    except DEGENERATE_ERRORS:
        return {m: None for m in methods}
    for m in methods:
        try:
            out[m] = covers(model, data, truth, m, alpha, fit=fit)
        except DEGENERATE_ERRORS:
            out[m] = None
    return out


def _count_chunk(config: SimConfig, n: int, rep_range: range) -> dict[str, list[int]]:
    scen = get_scenario(config.scenario)
    model = scen.model
    counts = {m: [0, 0] for m in config.methods}  # [covered, degenerate]
    for rep in rep_range:
        data = gen_dataset(scen, n, config.seed, rep)
        outcomes = _replicate_outcomes(model, data, scen.truth, config.methods, config.alpha)
        for m, ok in outcomes.items():
            if ok is None:
                counts[m][1] += 1
            elif ok:
                counts[m][0] += 1
    return counts


def resolve_workers(requested: int | None) -> int:
    """Worker count: requested (default 1), capped by PIVOTBAND_THREADS."""
    workers = 1 if requested is None else max(1, int(requested))
    cap = os.environ.get(THREADS_ENV_VAR)
    if cap:
        try:
            workers = min(workers, max(1, int(cap)))
        except ValueError:
            raise ConfigError(f"{THREADS_ENV_VAR} must be an integer, got {cap!r}") from None
    return workers


def run_coverage(config: SimConfig, workers: int | None = None) -> list[CoverageRecord]:
    """Coverage records for every (n, method) cell of the configuration.

    Replicates are independent and may be distributed over processes; the
    per-replicate RNG keying makes results identical for any worker count.
    """
    workers = resolve_workers(workers)
    records: list[CoverageRecord] = []
    for n in config.n_grid:
        if workers == 1 or config.reps < 64:
            counts = _count_chunk(config, n, range(config.reps))
        else:
            bounds = np.linspace(0, config.reps, workers + 1, dtype=int)
            chunks = [range(a, b) for a, b in zip(bounds, bounds[1:]) if b > a]
            counts = {m: [0, 0] for m in config.methods}
            with ProcessPoolExecutor(max_workers=workers) as pool:
                for part in pool.map(partial(_count_chunk, config, n), chunks):
                    for m, (cov, deg) in part.items():
                        counts[m][0] += cov
                        counts[m][1] += deg
        for m in config.methods:
            covered, degenerate = counts[m]
            records.append(
                CoverageRecord(
                    scenario=config.scenario,
                    method=m,
                    n=n,
                    reps=config.reps,
                    covered=covered,
                    degenerate=degenerate,
                    seed=config.seed,
                )
            )
    return records


def _subvector_covered(
    model: WorkingModel,
    data: Dataset,
    fit: ParamPoint,
    truth: np.ndarray,
    method: str,
    alpha: float,
    drop_index: int,
) -> bool:
    """Joint coverage of the coefficient vector excluding one coordinate.

    Wald methods use the covariance subblock with a chi-squared threshold at
    p-1 degrees of freedom.  The pivot has no exact subvector analogue, so
    the excluded coordinate is plugged in at its replicate MLE and the full
    quadratic form is compared against the p-1 threshold.
    """
    p = fit.p
    keep = [i for i in range(p) if i != drop_index]
    thr = quantile("chi2", 1.0 - alpha, df=p - 1)
    if method == "pivot":
        theta = fit.theta.copy()
        theta[keep] = truth[keep]
        return pivot_stat(model, data, ParamPoint(theta)).qform <= thr
    cov, policy = corrected_cov(model, data, method, fit=fit)
    if policy.family != "normal":
        raise UnsupportedCorrectionError("joint regions support normal-policy methods only")
    diff = (fit.theta - truth)[keep]
    sub = cov[np.ix_(keep, keep)]
    try:
        c = np.linalg.cholesky(sub)
    except np.linalg.LinAlgError:
        raise DegenerateMeatError("subvector covariance is singular") from None
    w = np.linalg.solve(c, diff)
    return float(w @ w) <= thr


def population_study(
    data: Dataset,
    sizes,
    reps: int,
    methods,
    seed: int,
    alpha: float = 0.05,
    include_intercept: bool = True,
    intercept_index: int = 0,
    with_replacement: bool = False,
) -> list[CoverageRecord]:
    """Subsampling study against a fixed population pseudo-truth.

    The pseudo-true coefficient vector is the least-squares fit on the full
    population.  Each replicate draws a simple random sample (without
    replacement by default), refits, and checks joint region coverage of the
    coefficient vector; with ``include_intercept=False`` the coordinate at
    ``intercept_index`` is excluded from the target.
    """
    model = get_model("linear_regression")
    truth_fit = model.fit(data)
    truth = truth_fit.theta
    p = truth_fit.p
    if reps < 1:
        raise ConfigError("reps must be >= 1")
    if not 0.0 < alpha < 1.0:
        raise ConfigError("alpha must lie in (0, 1)")
    sizes = tuple(int(s) for s in sizes)
    if not sizes or any(s < 2 for s in sizes):
        raise ConfigError("sizes must be >= 2")
    if not with_replacement and max(sizes) > data.n:
        raise ConfigError(
            f"requested size {max(sizes)} exceeds population of {data.n} rows"
        )
    methods = tuple(methods)
    target_p = p if include_intercept else p - 1
    if target_p < 1:
        raise ConfigError("excluding the intercept leaves no target coefficients")
    if not include_intercept and not 0 <= intercept_index < p:
        raise ConfigError(f"intercept_index {intercept_index} outside 0..{p - 1}")
    allowed = valid_methods(target_p)
    if not include_intercept:
        # the subvector check always runs through the chi-squared machinery
        allowed = tuple(m for m in allowed if m not in ("hc4", "hc5"))
    for m in methods:
        if m not in allowed:
            raise ConfigError(f"method {m!r} is not valid for a {target_p}-dimensional target")

    records = []
    for size in sizes:
        counts = {m: [0, 0] for m in methods}
        for rep in range(reps):
            rng = replicate_rng(seed, "population", size, rep)
            idx = rng.choice(data.n, size=size, replace=with_replacement)
            try:
                sub = Dataset(
                    y=data.y[idx],
                    X=None if data.X is None else data.X[idx],
                    labels=data.labels,
                )
                fit = model.fit(sub)
            except DEGENERATE_ERRORS:
                for m in methods:
                    counts[m][1] += 1
                continue
            for m in methods:
                try:
                    if include_intercept:
                        ok = covers(model, sub, ParamPoint(truth), m, alpha, fit=fit)
                    else:
                        ok = _subvector_covered(
                            model, sub, fit, truth, m, alpha, intercept_index
                        )
                except DEGENERATE_ERRORS:
                    counts[m][1] += 1
                    continue
                if ok:
                    counts[m][0] += 1
        for m in methods:
            covered, degenerate = counts[m]
            records.append(
                CoverageRecord(
                    scenario="population",
                    method=m,
                    n=size,
                    reps=reps,
                    covered=covered,
                    degenerate=degenerate,
                    seed=seed,
                )
            )
    return records
