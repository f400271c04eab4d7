"""Typed errors shared across the measurement pipeline."""

from __future__ import annotations


class LvammError(Exception):
    """Base class for all domain errors raised by this package."""


class DegenerateGeometryError(LvammError):
    """Geometric input admits no unique answer (coincident points, zero direction)."""


class PlacementError(LvammError):
    """A scanline or sweep band cannot be placed inside the image."""


class DetectionError(LvammError):
    """A landmark detector could not produce a usable, ordered result."""


class MeasurementError(LvammError):
    """Landmark rows do not form positive-length structures."""


class BundleError(LvammError):
    """A study bundle on disk is missing files or violates its manifest."""


class PipelineStageError(LvammError):
    """Failure of one pipeline stage, tagged with the stage name.

    Attributes:
        stage: Identifier of the stage that failed ("anchor", "contour",
            "long_axis", "scanline", "amm", "detect", "measure").
        reason: Human-readable description of the underlying problem.
    """

    def __init__(self, stage: str, reason: str) -> None:
        super().__init__(f"[{stage}] {reason}")
        self.stage = stage
        self.reason = reason
