"""Exception hierarchy for akvsr components.

Every error carries the structured context it names and the process exit
code the CLI maps it to.
"""

from collections.abc import Sequence
from pathlib import Path
from typing import Any


class AkvsrError(Exception):
    """Base exception for all akvsr errors."""

    exit_code: int = 1


class ConfigError(AkvsrError):
    """Raised when a configuration violates a module invariant."""

    exit_code = 2

    def __init__(self, message: str, fields: Sequence[str] = ()):
        """Initialize config error with the offending field paths."""
        self.fields = list(fields)
        super().__init__(message)

    @classmethod
    def from_validation_errors(cls, errors: Sequence[dict[str, Any]]) -> "ConfigError":
        """Build a field-level error from pydantic ``ValidationError.errors()``."""
        fields = []
        lines = []
        for err in errors:
            loc = ".".join(str(part) for part in err.get("loc", ())) or "<root>"
            fields.append(loc)
            lines.append(f"{loc}: {err.get('msg', 'invalid value')}")
        return cls("Invalid configuration:\n  " + "\n  ".join(lines), fields)


class DimensionError(AkvsrError):
    """Raised when tensor shapes are incompatible."""

    def __init__(self, op: str, *shapes: Sequence[int]):
        """Initialize dimension error naming every involved shape."""
        self.op = op
        self.shapes = [tuple(s) for s in shapes]
        rendered = " vs ".join(str(s) for s in self.shapes)
        super().__init__(f"{op}: incompatible shapes {rendered}")


class ParameterError(AkvsrError):
    """Raised when a scalar parameter is outside its valid range."""


class ContractError(AkvsrError):
    """Raised when a caller violates an operation's precondition."""


class DataError(AkvsrError):
    """Raised when input data is empty or too small for the operation."""


class SlotIndexError(AkvsrError):
    """Raised when a cluster label does not address a memory slot."""

    def __init__(self, frame: int, label: int, num_slots: int):
        """Initialize slot index error with frame and label."""
        self.frame = frame
        self.label = label
        self.num_slots = num_slots
        super().__init__(
            f"Label {label} at frame {frame} is out of range for {num_slots} slots"
        )


class InstanceTooLargeError(AkvsrError):
    """Raised when brute-force enumeration would exceed its budget."""


class InfeasibleCtcError(AkvsrError):
    """Typed skip signal: the CTC target cannot be aligned to the input."""

    def __init__(self, frames: int, target_length: int, repeats: int):
        """Initialize with the lengths that violate the feasibility bound."""
        self.frames = frames
        self.target_length = target_length
        self.repeats = repeats
        super().__init__(
            f"CTC infeasible: {frames} frames < {target_length} labels + {repeats} repeats"
        )


class NonFiniteGradientError(AkvsrError):
    """Raised when an optimizer receives a NaN or infinite gradient."""

    def __init__(self, parameter: str):
        """Initialize with the parameter name holding the bad gradient."""
        self.parameter = parameter
        super().__init__(f"Non-finite gradient for parameter '{parameter}'")


class FrozenParameterError(ContractError):
    """Raised when an optimizer is asked to update a frozen tensor."""

    def __init__(self, parameter: str):
        """Initialize with the frozen parameter name."""
        self.parameter = parameter
        super().__init__(f"Parameter '{parameter}' is frozen and cannot be updated")


class CheckpointIntegrityError(AkvsrError):
    """Raised when a checkpoint is truncated or its digest does not verify."""

    exit_code = 3

    def __init__(self, path: Path | str, reason: str):
        """Initialize with the checkpoint path and the failed check."""
        self.path = str(path)
        self.reason = reason
        super().__init__(f"Checkpoint {self.path} failed integrity check: {reason}")


class CheckpointVersionError(CheckpointIntegrityError):
    """Raised when a checkpoint was written by an unsupported format version."""

    def __init__(self, path: Path | str, found: str, expected: str):
        """Initialize with the found and expected version strings."""
        self.found = found
        self.expected = expected
        super().__init__(path, f"version '{found}' (expected '{expected}')")


class CorpusFileError(AkvsrError):
    """Raised when a corpus split cannot be read or written."""

    def __init__(self, path: Path | str, reason: str):
        """Initialize with the offending path."""
        self.path = str(path)
        super().__init__(f"Corpus file {self.path}: {reason}")


class StageError(AkvsrError):
    """Raised when a pipeline stage fails; wraps the underlying error."""

    exit_code = 1

    def __init__(self, stage: str, cause: BaseException):
        """Initialize with the failing stage name."""
        self.stage = stage
        self.cause = cause
        super().__init__(f"Stage '{stage}' failed: {cause}")
