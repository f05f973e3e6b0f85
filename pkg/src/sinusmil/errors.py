"""Exception hierarchy for pipeline stages.

Integrity problems in manifests and configs are reported as Diagnostic
lists instead (see sinusmil.core.validation).
"""

from __future__ import annotations

from pathlib import Path
from typing import TYPE_CHECKING, Any

if TYPE_CHECKING:
    from sinusmil.core.registration import RegistrationResult


class SinusMilError(Exception):
    """Base class for all sinusmil errors."""


class VolumeFormatError(SinusMilError):
    """A volume file exists but its header cannot be parsed."""

    def __init__(self, message: str, file_path: Path | str | None = None) -> None:
        self.message = message
        self.file_path = file_path
        super().__init__(f"{file_path}: {message}" if file_path else message)


class VolumeShapeError(SinusMilError):
    """A volume payload is not a 3D scalar grid."""

    def __init__(self, shape: tuple[int, ...], file_path: Path | str | None = None) -> None:
        self.shape = shape
        self.file_path = file_path
        message = f"expected a 3D scalar volume, got shape {shape}"
        super().__init__(f"{file_path}: {message}" if file_path else message)


class ParseError(SinusMilError):
    """A YAML or TSV file is malformed, with location information."""

    def __init__(
        self,
        message: str,
        file_path: Path | str | None = None,
        line: int | None = None,
        column: int | None = None,
    ) -> None:
        """Initialize a ParseError with optional location information.

        Args:
            message: Description of the parsing error.
            file_path: Path to the file being parsed.
            line: Line number where the error occurred (1-indexed).
            column: Column number where the error occurred (1-indexed).
        """
        self.message = message
        self.file_path = file_path
        self.line = line
        self.column = column
        super().__init__(self._format_message())

    def _format_message(self) -> str:
        location = str(self.file_path) if self.file_path else ""
        if self.line is not None:
            position = f"line {self.line}"
            if self.column is not None:
                position += f", column {self.column}"
            location = f"{location} at {position}" if location else position
        if location:
            return f"{location}: {self.message}"
        return self.message


class RegistrationError(SinusMilError):
    """Registration did not converge within its iteration budget."""

    def __init__(self, message: str, result: RegistrationResult) -> None:
        self.result = result
        super().__init__(message)


class CentroidModelError(SinusMilError):
    """Not enough annotations to fit a centroid model."""


class ExtractionError(SinusMilError):
    """A sub-volume cannot be extracted with the requested geometry."""


class SplitError(SinusMilError):
    """A cohort cannot be split with the requested ratios."""


class TrainingError(SinusMilError):
    """Training aborted, e.g. on a non-finite loss."""

    def __init__(self, message: str, **diagnostics: Any) -> None:
        self.diagnostics = diagnostics
        detail = ", ".join(f"{key}={value}" for key, value in diagnostics.items())
        super().__init__(f"{message} ({detail})" if detail else message)


class EnsembleError(SinusMilError):
    """Instances passed to an ensemble do not share one (subject, side)."""


class MetricsError(SinusMilError):
    """A metric is undefined for the given labels."""


class PrerequisiteError(SinusMilError):
    """A stage was invoked before the stage it depends on produced output."""

    def __init__(self, stage: str, missing: Path) -> None:
        self.stage = stage
        self.missing = missing
        super().__init__(f"Missing {missing}. Run 'sinusmil {stage}' first")


class StageLockedError(SinusMilError):
    """Another invocation holds the output directory lock."""

    def __init__(self, lock_path: Path) -> None:
        self.lock_path = lock_path
        super().__init__(
            f"Output directory is locked by another run ({lock_path}). "
            "Remove the lock file if no other run is active"
        )


class CheckpointError(SinusMilError):
    """A checkpoint does not match the configuration it is loaded with."""

    def __init__(self, message: str, file_path: Path | str | None = None) -> None:
        self.file_path = file_path
        super().__init__(f"{file_path}: {message}" if file_path else message)
