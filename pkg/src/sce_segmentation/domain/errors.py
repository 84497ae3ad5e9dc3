from __future__ import annotations

from typing import Any


class SceError(Exception):
    """Base class for all segmentation pipeline errors."""


class ArtifactNotFoundError(SceError, FileNotFoundError):
    """An input file or run-directory artifact does not exist."""


class RasterFormatError(SceError, ValueError):
    """A binary artifact does not conform to its declared format."""


class BadMagicError(RasterFormatError):
    """The leading magic bytes do not match the expected format."""


class UnsupportedVersionError(RasterFormatError):
    """The header declares a format version this reader does not know."""


class TruncatedPayloadError(RasterFormatError):
    """The payload is shorter (or longer) than the header declares."""


class NonFiniteValueError(RasterFormatError):
    """A NaN or infinite value was found where only finite values are allowed."""


class DegenerateChannelError(SceError, ValueError):
    """A channel has zero spread and cannot be normalized."""

    def __init__(self, channel: str) -> None:
        self.channel = channel
        super().__init__(f"channel {channel!r} is constant (population std = 0)")

    def __reduce__(self) -> tuple[Any, ...]:
        return (self.__class__, (self.channel,))


class DimensionMismatchError(SceError, ValueError):
    """Two operands disagree in width, height or feature length."""


class EmptyDataError(SceError, ValueError):
    """An operation received no data vectors."""


class ContractViolationError(SceError, ValueError):
    """A caller broke an operation's precondition (e.g. comparing masks of the same run)."""


class EmptyMaskError(SceError, ValueError):
    """Thresholding produced a mask without any true pixel."""

    def __init__(self, tau: float, message: str | None = None) -> None:
        self.tau = tau
        super().__init__(message or f"threshold tau={tau:g} leaves no pixel in the mask")

    def __reduce__(self) -> tuple[Any, ...]:
        return (self.__class__, (self.tau, str(self)))


class InsufficientRunsError(SceError, ValueError):
    """Stacking needs at least two independent runs."""


class PlacementError(SceError, ValueError):
    """A synthetic shape could not be placed inside the raster."""


class StageError(SceError):
    """A pipeline stage failed; carries the stage name and, when known, the run index."""

    def __init__(self, message: str, *, stage: str, run_index: int | None = None) -> None:
        self.stage = stage
        self.run_index = run_index
        super().__init__(message)

    def __reduce__(self) -> tuple[Any, ...]:
        # Keyword-only arguments do not survive the default exception pickling.
        return (_rebuild_stage_error, (self.__class__, str(self), self.stage, self.run_index))


def _rebuild_stage_error(
    cls: type[StageError], message: str, stage: str, run_index: int | None
) -> StageError:
    return cls(message, stage=stage, run_index=run_index)


def wrap_stage_error(
    exc: BaseException, *, stage: str, run_index: int | None = None
) -> StageError:
    """
    Wrap an arbitrary exception in a StageError naming the stage (and run).

    A StageError is returned as-is. The original exception is attached as the cause.
    """
    if isinstance(exc, StageError):
        return exc

    where = stage if run_index is None else f"{stage} (run {run_index})"
    detail = f"{exc.__class__.__name__}: {exc}".strip()
    wrapped = StageError(f"stage {where} failed: {detail}", stage=stage, run_index=run_index)
    wrapped.__cause__ = exc
    return wrapped
