"""Exception hierarchy.

Every error raised on purpose by the library derives from
:class:`FlowSentryError`; the CLI maps each subclass to its own exit code.
"""


class FlowSentryError(Exception):
    """Base class for library errors."""

    exit_code = 1


class FormatError(FlowSentryError):
    """Malformed input structure (non-square adjacency, bad CSV header...)."""

    exit_code = 5


class DataError(FlowSentryError):
    """Input values that violate a data invariant."""

    exit_code = 5


class SchemaError(DataError):
    """Feature schema differs between graphs of one dataset."""


class CycleError(DataError):
    """Raw edge list of a workflow is not acyclic."""


class ConfigError(FlowSentryError):
    """Invalid configuration value."""

    exit_code = 4


class ShapeError(FlowSentryError, ValueError):
    """Operand shapes do not agree."""

    exit_code = 7


class NumericError(FlowSentryError, ArithmeticError):
    """A kernel op produced or received a non-finite value."""

    exit_code = 7

    def __init__(self, op, detail=""):
        self.op = op
        msg = f"non-finite value in op '{op}'"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)


class TrainingError(FlowSentryError):
    """Training diverged."""

    exit_code = 7


class MetricError(FlowSentryError):
    """Metric undefined for the given labels or k."""

    exit_code = 6


class EvaluationError(FlowSentryError):
    """Evaluation requested on graphs without labels."""

    exit_code = 6


class LabelAccessError(FlowSentryError):
    """Ground-truth labels were read where they are forbidden."""

    exit_code = 8


class InputFileError(FlowSentryError):
    """Input file missing or unreadable."""

    exit_code = 3
