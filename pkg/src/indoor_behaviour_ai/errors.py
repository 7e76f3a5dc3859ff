"""Exception hierarchy shared by the pipeline steps.

Each exception carries the process exit code the CLI reports for it:
0 success, 2 input validation, 3 training divergence, 4 model/data
mismatch, 5 analysis alignment.
"""


class PipelineError(Exception):
    """Base class for failures that end a command with a known exit code."""

    exit_code = 1


class InputValidationError(PipelineError, ValueError):
    exit_code = 2


class ConfigError(InputValidationError):
    pass


class LayoutError(InputValidationError):
    pass


class TraceChannelError(InputValidationError):
    """Trace gateways or room labels differ from the ones the reader was given."""


class TrainingDivergedError(PipelineError, ArithmeticError):
    exit_code = 3


class ModelDataMismatchError(PipelineError, ValueError):
    exit_code = 4


class AlignmentError(PipelineError, ValueError):
    exit_code = 5
