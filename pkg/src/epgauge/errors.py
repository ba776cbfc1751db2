"""Exception hierarchy shared across epgauge.

The split between InputError and DomainError mirrors the CLI exit codes:
bad files or configuration exit 2, legitimate-but-unusable data (empty
cohort, degenerate fit) exit 3.
"""


class EpgaugeError(Exception):
    """Base class for all epgauge errors."""


class InputError(EpgaugeError):
    """Malformed input data or configuration."""


class SchemaError(InputError):
    """Input file does not match the documented column schema."""


class DuplicateIdError(InputError):
    """Two records in one corpus share an id."""


class ConfigError(InputError):
    """Invalid run configuration (unknown keys, bad values)."""


class DomainError(EpgaugeError):
    """Data is well-formed but the requested computation is undefined on it."""


class EmptyCohortError(DomainError):
    """A selection or stratum produced no records."""


class DegenerateFitError(DomainError):
    """Too few or too uniform data points to fit a model."""


class InfeasibleSpecError(DomainError):
    """A synthetic-cohort request cannot be realized at the given sizes."""


class ReportConsistencyError(EpgaugeError):
    """A stored report value no longer matches recomputation from its parameters."""
