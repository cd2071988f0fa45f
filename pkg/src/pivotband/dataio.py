"""CSV ingestion, coverage-table serialization, and run manifests.

All files are UTF-8 CSV with a header row, '.' decimal, comma separator.
Floats are written with Python's shortest round-trip repr, so reloading a
file reproduces the values bit-for-bit.  Writes go to a temporary file in
the target directory followed by an atomic rename.
"""

from __future__ import annotations

import csv
import json
import os
import tempfile
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone

import numpy as np

from .exceptions import ConfigError, EmptyDataError, ParseError
from .models import Dataset
from .simulate import CoverageRecord

__all__ = [
    "COVERAGE_COLUMNS",
    "COVERAGE_SCHEMA_VERSION",
    "RunManifest",
    "load_csv",
    "save_dataset_csv",
    "write_coverage_csv",
    "read_coverage_csv",
    "write_manifest",
    "manifest_path_for",
    "parse_grid",
    "atomic_write_text",
]

#: Fixed, versioned column order of coverage tables.
COVERAGE_COLUMNS = (
    "scenario",
    "method",
    "n",
    "reps",
    "covered",
    "degenerate",
    "coverage",
    "mc_stderr",
    "seed",
)
COVERAGE_SCHEMA_VERSION = 1

#: Cell contents treated as missing values (case-insensitive).
_NA_TOKENS = {"", "na", "n/a", "nan", "null", "none", "."}


def atomic_write_text(path: str, text: str) -> None:
    """Write-then-rename so readers never observe a partial file."""
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=".part")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.chmod(tmp, 0o644)  # mkstemp defaults to 0600
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _parse_cell(raw: str, row: int, column: str) -> float | None:
    token = raw.strip()
    if token.lower() in _NA_TOKENS:
        return None
    try:
        return float(token)
    except ValueError:
        raise ParseError(
            f"non-numeric value {raw!r} at row {row}, column {column!r}"
        ) from None


def load_csv(
    path: str,
    response: str,
    covariates=(),
    add_intercept: bool = False,
) -> tuple[Dataset, int]:
    """Read named columns from a CSV file with listwise deletion.

    Rows with a missing value in any selected column are dropped; the count
    of dropped rows is returned alongside the dataset.  A non-numeric,
    non-missing cell is a parse error naming its row and column.
    """
    covariates = list(covariates)
    try:
        fh = open(path, "r", encoding="utf-8-sig", newline="")
    except OSError as exc:
        raise EmptyDataError(f"cannot open {path!r}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise EmptyDataError(f"{path!r} is empty") from None
        header = [h.strip() for h in header]
        index = {}
        for name in [response, *covariates]:
            if name not in header:
                raise ConfigError(f"column {name!r} not found in {path!r} (has {header})")
            index[name] = header.index(name)

        ys: list[float] = []
        xrows: list[list[float]] = []
        dropped = 0
        for rownum, row in enumerate(reader, start=2):  # header is row 1
            if not row or all(not c.strip() for c in row):
                continue
            values = []
            missing = False
            for name in [response, *covariates]:
                i = index[name]
                cell = row[i] if i < len(row) else ""
                val = _parse_cell(cell, rownum, name)
                if val is None:
                    missing = True
                    break
                values.append(val)
            if missing:
                dropped += 1
                continue
            ys.append(values[0])
            if covariates:
                xrows.append(values[1:])

    if not ys:
        raise EmptyDataError(f"no complete rows in {path!r} for the selected columns")

    labels: tuple[str, ...] | None = None
    X = None
    if covariates or add_intercept:
        X = np.asarray(xrows, dtype=float) if covariates else np.empty((len(ys), 0))
        names = list(covariates)
        if add_intercept:
            X = np.column_stack([np.ones(len(ys)), X])
            names = ["intercept", *names]
        labels = tuple(names)
    return Dataset(y=np.asarray(ys, dtype=float), X=X, labels=labels), dropped


def save_dataset_csv(data: Dataset, path: str, response: str = "y") -> None:
    """Write a dataset back out; numbers round-trip exactly."""
    names = [response]
    if data.X is not None:
        names += list(data.labels or (f"x{i + 1}" for i in range(data.X.shape[1])))
    lines = [",".join(names)]
    for i in range(data.n):
        cells = [repr(float(data.y[i]))]
        if data.X is not None:
            cells += [repr(float(v)) for v in data.X[i]]
        lines.append(",".join(cells))
    atomic_write_text(path, "\n".join(lines) + "\n")


def _record_row(rec: CoverageRecord) -> list[str]:
    return [
        rec.scenario,
        rec.method,
        str(rec.n),
        str(rec.reps),
        str(rec.covered),
        str(rec.degenerate),
        repr(float(rec.coverage)),
        repr(float(rec.mc_stderr)),
        str(rec.seed),
    ]


def write_coverage_csv(records, path: str) -> None:
    lines = [",".join(COVERAGE_COLUMNS)]
    lines += [",".join(_record_row(r)) for r in records]
    atomic_write_text(path, "\n".join(lines) + "\n")


def read_coverage_csv(path: str) -> list[dict]:
    """Parse a coverage table back into typed row dicts."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or tuple(reader.fieldnames) != COVERAGE_COLUMNS:
            raise ParseError(
                f"unexpected coverage columns in {path!r}: {reader.fieldnames}"
            )
        rows = []
        for row in reader:
            rows.append(
                {
                    "scenario": row["scenario"],
                    "method": row["method"],
                    "n": int(row["n"]),
                    "reps": int(row["reps"]),
                    "covered": int(row["covered"]),
                    "degenerate": int(row["degenerate"]),
                    "coverage": float(row["coverage"]),
                    "mc_stderr": float(row["mc_stderr"]),
                    "seed": int(row["seed"]),
                }
            )
    return rows


@dataclass(frozen=True)
class RunManifest:
    """Sidecar metadata making an output file reproducible."""

    command: str
    config: dict
    seed: int | None
    version: str
    created_utc: str = field(default_factory=lambda: datetime.now(timezone.utc).isoformat())
    assumptions: dict = field(default_factory=dict)
    schema_version: int = COVERAGE_SCHEMA_VERSION


def manifest_path_for(output_path: str) -> str:
    return f"{output_path}.manifest.json"


def write_manifest(manifest: RunManifest, output_path: str) -> str:
    path = manifest_path_for(output_path)
    atomic_write_text(path, json.dumps(asdict(manifest), indent=2, sort_keys=True) + "\n")
    return path


def parse_grid(spec: str) -> tuple[int, ...]:
    """Parse ``start:stop:step`` (stop inclusive when aligned) or a bare integer."""
    text = str(spec).strip()
    try:
        if ":" in text:
            parts = text.split(":")
            if len(parts) != 3:
                raise ValueError
            start, stop, step = (int(p) for p in parts)
            if step <= 0 or stop < start:
                raise ValueError
            return tuple(range(start, stop + 1, step))
        return (int(text),)
    except ValueError:
        raise ConfigError(
            f"invalid grid {spec!r}; expected an integer or start:stop:step"
        ) from None
