"""Exception hierarchy.

Every exception carries a short machine-readable ``category`` string; the CLI
maps categories to exit codes and emits them on stderr.
"""

from __future__ import annotations


class PivotbandError(Exception):
    """Base class for all package errors."""

    category = "error"


class InvalidDataError(PivotbandError):
    """Data violates a model precondition (e.g. negative counts)."""

    category = "invalid-data"


class SingularDesignError(PivotbandError):
    """Design matrix is rank deficient."""

    category = "singular-design"


class DegenerateCovariateError(PivotbandError):
    """Covariate carries no information (e.g. sum of squares is zero)."""

    category = "degenerate-covariate"


class NumericDomainError(PivotbandError):
    """Evaluation outside the numeric domain (theta, sigma2, probabilities)."""

    category = "numeric-domain"


class BreadSingularError(PivotbandError):
    """Averaged-curvature ("bread") matrix is singular."""

    category = "bread-singular"


class DegenerateMeatError(PivotbandError):
    """Score outer-product ("meat") matrix is singular or zero."""

    category = "degenerate-meat"


class DegenerateLeverageError(PivotbandError):
    """A leverage value equals one, so a leverage weight is undefined."""

    category = "degenerate-leverage"


class UnsupportedCorrectionError(PivotbandError):
    """Correction not defined for the requested parameter dimension."""

    category = "unsupported-correction"


class ConfigError(PivotbandError):
    """Invalid run configuration (grids, methods, sizes, columns)."""

    category = "invalid-config"


class DataFileError(PivotbandError):
    """Problem reading a data file."""

    category = "data-file"


class ParseError(DataFileError):
    """Non-numeric cell in a column that must be numeric."""

    category = "parse-error"


class EmptyDataError(DataFileError):
    """No usable rows after filtering."""

    category = "empty-data"


#: Errors that a Monte Carlo replicate may raise; the engine counts the
#: replicate as degenerate for the affected method instead of aborting.
DEGENERATE_ERRORS = (
    DegenerateMeatError,
    BreadSingularError,
    DegenerateLeverageError,
    DegenerateCovariateError,
    SingularDesignError,
    NumericDomainError,
)
