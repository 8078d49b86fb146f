"""Exception hierarchy shared across the toolkit.

The CLI maps these onto exit codes: UsageError -> 1, DataError (and
subclasses) -> 2, everything else derived from GecvalError -> 3.
"""


class GecvalError(Exception):
    """Base class for all toolkit errors."""


class UsageError(GecvalError):
    """Bad command line arguments or an invalid run configuration."""


class DataError(GecvalError):
    """Input data violates a documented format or schema."""


class ParseError(DataError):
    """Malformed input file; carries the offending line number when known."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class SchemaError(DataError):
    """Structurally valid file whose contents violate cross-references."""


class EditError(DataError):
    """Edit set violates span bounds, ordering, or overlap constraints."""


class ModelError(GecvalError):
    """Checkpoint is missing a required head or shapes do not match."""


class TrainingError(GecvalError):
    """Training aborted, e.g. on a non-finite loss."""


class MetaevalError(GecvalError):
    """Statistic undefined for the given inputs (constant vector, |r|=1, ...)."""
