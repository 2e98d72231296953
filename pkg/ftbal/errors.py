"""
Error hierarchy for ftbal

Every error carries the exit code the command-line harness reports for it.
"""

from typing import Any, Dict, Optional


class FtbalError(Exception):
    """Base class for all ftbal errors"""

    exit_code: int = 1


class ConfigError(FtbalError):
    """Invalid configuration value, unknown key or violated precondition"""

    exit_code = 2


class DimensionError(FtbalError, ValueError):
    """Operand shapes do not conform"""

    exit_code = 4

    def __init__(self, operation: str, *shapes: Any):
        self.operation = operation
        self.shapes = shapes
        rendered = " vs ".join(str(tuple(s)) for s in shapes)
        super().__init__(f"{operation}: shape mismatch {rendered}")


class NumericError(FtbalError):
    """A loss, gradient or parameter became non-finite"""

    exit_code = 4


class TrainingDivergedError(NumericError):
    """Training produced a non-finite loss; carries the last good parameters"""

    def __init__(self, message: str, best_state: Optional[Dict[str, Any]] = None, history: Any = None):
        super().__init__(message)
        self.best_state = best_state
        self.history = history


class LrFindError(NumericError):
    """Every point of a learning-rate sweep diverged"""


class SchemaError(FtbalError):
    """A trace file is missing a required column"""

    exit_code = 2

    def __init__(self, column: str, path: Any = None):
        self.column = column
        where = f" in {path}" if path is not None else ""
        super().__init__(f"missing required column '{column}'{where}")


class TraceParseError(FtbalError):
    """A trace cell could not be parsed as a number"""

    exit_code = 2

    def __init__(self, row: int, column: str, value: Any):
        self.row = row
        self.column = column
        self.value = value
        super().__init__(f"row {row}, column '{column}': cannot parse {value!r}")


class CleaningError(FtbalError):
    """A series cannot be cleaned (all values missing or series too short)"""

    exit_code = 2


class DataError(FtbalError):
    """Empty traces, empty splits or empty window sets"""

    exit_code = 2


class CheckpointError(FtbalError):
    """A checkpoint file is malformed or does not match the model"""

    exit_code = 3


class MissingPrerequisiteError(FtbalError):
    """An artifact another command produces is not on disk"""

    exit_code = 3

    def __init__(self, artifact: Any, command: str):
        self.artifact = artifact
        self.command = command
        super().__init__(f"missing {artifact}; run `ftbal {command}` first")


class EnvironmentStateError(FtbalError):
    """Invalid use of the load-balancing environment"""

    exit_code = 2
