"""Exception hierarchy shared across the toolkit.

The CLI maps each class to a distinct exit code, so new failure modes
should subclass one of these rather than raising bare ValueError.
"""


class CostModelError(Exception):
    """Base class for all toolkit errors."""


class SchemaError(CostModelError):
    """A structured-text document (network, board registry, mapping) is invalid."""


class NetworkValidationError(SchemaError):
    """A network document parsed but violates a structural invariant."""


class UnknownBoardError(CostModelError):
    """A board id is not present in the active registry."""


class ModelFormatError(CostModelError):
    """A model file is truncated, corrupted, or has an unsupported version."""


class DataError(CostModelError):
    """A dataset file or column mapping cannot be ingested."""


class TrainingDivergedError(CostModelError):
    """Training produced a non-finite loss."""
