"""Command-line interface.

Subcommands
-----------
simulate    run a Monte Carlo coverage scenario, write a coverage CSV
ci          confidence intervals for a scalar model on one dataset
region      joint-region boundary polyline (p = 2) or membership verdict
population  subsampling coverage study against a population pseudo-truth
report      render a figure from an existing coverage CSV

Each file-producing command writes a ``<output>.manifest.json`` sidecar and,
with ``--plot``, a PNG figure next to the delimited output.  Errors exit
nonzero after printing a one-line JSON object with a machine-readable
``error`` category on stderr.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import __version__
from .dataio import (
    RunManifest,
    atomic_write_text,
    load_csv,
    parse_grid,
    read_coverage_csv,
    write_coverage_csv,
    write_manifest,
)
from .exceptions import ConfigError, DataFileError, PivotbandError
from .inference import METHODS, confidence_interval, covers, region_boundary, valid_methods
from .models import get_model
from .simulate import (
    SCENARIO_KINDS,
    SimConfig,
    get_scenario,
    population_study,
    run_coverage,
)

_EXIT_CODES = {
    "invalid-config": 2,
    "data-file": 3,
    "parse-error": 3,
    "empty-data": 3,
    "invalid-data": 3,
    "singular-design": 4,
    "degenerate-covariate": 4,
    "numeric-domain": 4,
    "bread-singular": 4,
    "degenerate-meat": 4,
    "degenerate-leverage": 4,
    "unsupported-correction": 4,
}

_COVARIATE_LAW = "x_i iid standard normal, redrawn per replicate"


def _split_methods(raw: str, p: int) -> tuple[str, ...]:
    if raw.strip().lower() == "all":
        return valid_methods(p)
    methods = tuple(m.strip() for m in raw.split(",") if m.strip())
    if not methods:
        raise ConfigError("no methods given")
    for m in methods:
        if m not in METHODS:
            raise ConfigError(f"unknown method {m!r}; choose from {', '.join(METHODS)}")
    return methods


def _load_dataset(args) -> tuple:
    covariates = [c.strip() for c in args.covariates.split(",") if c.strip()] if args.covariates else []
    return load_csv(
        args.data,
        response=args.response,
        covariates=covariates,
        add_intercept=args.add_intercept,
    )


def _echo(msg: str) -> None:
    print(msg)


def cmd_simulate(args) -> int:
    scen = get_scenario(args.scenario)
    methods = _split_methods(args.methods, scen.p)
    config = SimConfig(
        scenario=args.scenario,
        n_grid=parse_grid(args.n),
        reps=args.reps,
        alpha=args.alpha,
        methods=methods,
        seed=args.seed,
    )
    records = run_coverage(config, workers=args.workers)
    write_coverage_csv(records, args.out)
    manifest = RunManifest(
        command="simulate",
        config={
            "scenario": config.scenario,
            "n_grid": list(config.n_grid),
            "reps": config.reps,
            "alpha": config.alpha,
            "methods": list(config.methods),
        },
        seed=config.seed,
        version=__version__,
        assumptions={
            "covariate_law": _COVARIATE_LAW,
            "true_parameters": [float(v) for v in scen.truth.theta],
        },
    )
    write_manifest(manifest, args.out)
    _echo(f"wrote {len(records)} coverage rows to {args.out}")
    if args.plot:
        from .plots import save_coverage_figure

        rows = read_coverage_csv(args.out)
        fig = save_coverage_figure(rows, _figure_path(args.out), alpha=config.alpha)
        _echo(f"wrote figure {fig}")
    return 0


def _figure_path(csv_path: str) -> str:
    root, _ = os.path.splitext(csv_path)
    return root + ".png"


def cmd_ci(args) -> int:
    model = get_model(args.model)
    data, dropped = _load_dataset(args)
    if dropped:
        _echo(f"dropped {dropped} incomplete rows")
    p = 1 if data.X is None else data.X.shape[1]
    methods = _split_methods(args.methods, p)
    lines = ["method,lower,upper,width,quantile,flags"]
    table = []
    for m in methods:
        res = confidence_interval(model, data, m, args.alpha)
        table.append(res)
        lines.append(
            f"{res.method},{res.lower!r},{res.upper!r},{res.width!r},"
            f"{res.quantile_used!r},{';'.join(res.flags)}"
        )
    _echo(f"{'method':>9}  {'lower':>14}  {'upper':>14}  {'width':>14}")
    for res in table:
        _echo(
            f"{res.method:>9}  {res.lower:>14.8g}  {res.upper:>14.8g}  {res.width:>14.8g}"
            + ("  [" + ",".join(res.flags) + "]" if res.flags else "")
        )
    if args.out:
        atomic_write_text(args.out, "\n".join(lines) + "\n")
        manifest = RunManifest(
            command="ci",
            config={
                "model": model.kind,
                "data": args.data,
                "response": args.response,
                "covariates": args.covariates or "",
                "alpha": args.alpha,
                "methods": list(methods),
            },
            seed=None,
            version=__version__,
        )
        write_manifest(manifest, args.out)
        _echo(f"wrote {args.out}")
    return 0


def cmd_region(args) -> int:
    model = get_model(args.model)
    data, dropped = _load_dataset(args)
    if dropped:
        _echo(f"dropped {dropped} incomplete rows")
    p = 0 if data.X is None else data.X.shape[1]
    if p < 2:
        raise ConfigError("region requires a design with at least two columns")
    methods = _split_methods(args.methods, p)

    if args.query:
        point = np.asarray([float(v) for v in args.query.split(",")], dtype=float)
        if point.size != p:
            raise ConfigError(f"query has {point.size} coordinates, design has {p}")
        for m in methods:
            inside = covers(model, data, point, m, args.alpha)
            _echo(f"{m}: {'inside' if inside else 'outside'}")
        return 0

    if p != 2:
        raise ConfigError("boundary polylines are only available for p = 2")
    angles = np.linspace(0.0, 2.0 * np.pi, args.directions, endpoint=False)
    directions = np.column_stack([np.cos(angles), np.sin(angles)])
    lines = ["method,index,u1,u2,radius,theta1,theta2"]
    boundaries = {}
    center = None
    for m in methods:
        res = region_boundary(model, data, m, args.alpha, directions)
        center = res.center
        boundaries[m] = res.boundary
        for i, (u, r) in enumerate(res.boundary):
            if math.isfinite(r):
                pt = res.center - r * u
                t1, t2 = repr(float(pt[0])), repr(float(pt[1]))
            else:
                t1 = t2 = ""
            lines.append(
                f"{m},{i},{float(u[0])!r},{float(u[1])!r},{float(r)!r},{t1},{t2}"
            )
    atomic_write_text(args.out, "\n".join(lines) + "\n")
    manifest = RunManifest(
        command="region",
        config={
            "model": model.kind,
            "data": args.data,
            "response": args.response,
            "covariates": args.covariates or "",
            "alpha": args.alpha,
            "methods": list(methods),
            "directions": args.directions,
        },
        seed=None,
        version=__version__,
    )
    write_manifest(manifest, args.out)
    _echo(f"wrote {args.out}")
    if args.plot:
        from .plots import save_region_figure

        fig = save_region_figure(boundaries, center, _figure_path(args.out))
        _echo(f"wrote figure {fig}")
    return 0


def cmd_population(args) -> int:
    data, dropped = _load_dataset(args)
    _echo(f"population: {data.n} complete rows ({dropped} dropped)")
    methods = _split_methods(args.methods, 2 if data.X.shape[1] > 1 else 1)
    records = population_study(
        data,
        sizes=parse_grid(args.sizes),
        reps=args.reps,
        methods=methods,
        seed=args.seed,
        alpha=args.alpha,
        include_intercept=not args.exclude_intercept,
        with_replacement=args.with_replacement,
    )
    write_coverage_csv(records, args.out)
    manifest = RunManifest(
        command="population",
        config={
            "data": args.data,
            "response": args.response,
            "covariates": args.covariates or "",
            "add_intercept": args.add_intercept,
            "sizes": list(parse_grid(args.sizes)),
            "reps": args.reps,
            "alpha": args.alpha,
            "methods": list(methods),
        },
        seed=args.seed,
        version=__version__,
        assumptions={
            "subsample_policy": "with replacement" if args.with_replacement else "without replacement",
            "joint_target_includes_intercept": not args.exclude_intercept,
        },
    )
    write_manifest(manifest, args.out)
    _echo(f"wrote {len(records)} coverage rows to {args.out}")
    if args.plot:
        from .plots import save_coverage_figure

        rows = read_coverage_csv(args.out)
        fig = save_coverage_figure(rows, _figure_path(args.out), alpha=args.alpha)
        _echo(f"wrote figure {fig}")
    return 0


def cmd_report(args) -> int:
    from .plots import save_coverage_figure

    rows = read_coverage_csv(args.input)
    out = args.out or _figure_path(args.input)
    save_coverage_figure(rows, out, alpha=args.alpha)
    _echo(f"wrote figure {out}")
    return 0


def _add_data_arguments(sub, with_covariates: bool = True) -> None:
    sub.add_argument("--data", required=True, help="input CSV file")
    sub.add_argument("--response", required=True, help="response column name")
    if with_covariates:
        sub.add_argument("--covariates", default="", help="comma-separated covariate columns")
        sub.add_argument(
            "--add-intercept", action="store_true", help="prepend an intercept column"
        )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pivotband",
        description="Pivot-based and sandwich-based confidence intervals/regions "
        "under model misspecification.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="Monte Carlo coverage scenario")
    sim.add_argument("--scenario", required=True, choices=SCENARIO_KINDS)
    sim.add_argument("--n", default="10:100:10", help="sample-size grid start:stop:step")
    sim.add_argument("--reps", type=int, default=2000)
    sim.add_argument("--alpha", type=float, default=0.05)
    sim.add_argument("--methods", default="all", help="comma list or 'all'")
    sim.add_argument("--seed", type=int, required=True)
    sim.add_argument("--workers", type=int, default=None)
    sim.add_argument("--out", required=True, help="output coverage CSV")
    sim.add_argument("--plot", action="store_true", help="also render a PNG figure")
    sim.set_defaults(func=cmd_simulate)

    ci = sub.add_parser("ci", help="confidence intervals on one dataset")
    ci.add_argument("--model", required=True, help="poisson | origin | linear")
    _add_data_arguments(ci)
    ci.add_argument("--methods", default="all")
    ci.add_argument("--alpha", type=float, default=0.05)
    ci.add_argument("--out", default=None, help="optional output CSV")
    ci.set_defaults(func=cmd_ci)

    reg = sub.add_parser("region", help="joint region boundary or membership")
    reg.add_argument("--model", default="linear")
    _add_data_arguments(reg)
    reg.add_argument("--methods", default="all")
    reg.add_argument("--alpha", type=float, default=0.05)
    reg.add_argument("--directions", type=int, default=64)
    reg.add_argument("--query", default=None, help="comma-separated point for a membership verdict")
    reg.add_argument("--out", default="region.csv")
    reg.add_argument("--plot", action="store_true")
    reg.set_defaults(func=cmd_region)

    pop = sub.add_parser("population", help="population subsampling study")
    _add_data_arguments(pop)
    pop.add_argument("--sizes", required=True, help="subsample-size grid start:stop:step")
    pop.add_argument("--reps", type=int, default=2000)
    pop.add_argument("--alpha", type=float, default=0.05)
    pop.add_argument("--methods", default="pivot,sandwich,hc1,hc2,hc3,mle_info")
    pop.add_argument("--seed", type=int, required=True)
    pop.add_argument("--exclude-intercept", action="store_true")
    pop.add_argument("--with-replacement", action="store_true")
    pop.add_argument("--out", required=True)
    pop.add_argument("--plot", action="store_true")
    pop.set_defaults(func=cmd_population)

    rep = sub.add_parser("report", help="render a figure from a coverage CSV")
    rep.add_argument("--input", required=True)
    rep.add_argument("--out", default=None)
    rep.add_argument("--alpha", type=float, default=0.05)
    rep.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except PivotbandError as exc:
        payload = {"error": exc.category, "message": str(exc)}
        print(json.dumps(payload), file=sys.stderr)
        if isinstance(exc, DataFileError):
            return _EXIT_CODES.get(exc.category, 3)
        return _EXIT_CODES.get(exc.category, 1)


if __name__ == "__main__":
    sys.exit(main())
