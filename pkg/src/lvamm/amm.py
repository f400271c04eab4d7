"""Virtual anatomical M-mode reconstruction.

A scanline is sampled at P evenly spaced positions (endpoints inclusive)
and the B-mode video is interpolated at those positions for every frame,
giving a (P, T) image: rows run along the scanline, columns over time.
Row s maps back to the B-mode point p1 + (s / (P - 1)) * (p2 - p1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import Point2D, ScanLine

__all__ = [
    "EchoStudy",
    "AMMImage",
    "sample_positions",
    "bilinear_sample",
    "extract_amm",
    "amm_row_to_bmode",
]


@dataclass(frozen=True, eq=False)
class EchoStudy:
    """Single-cycle grayscale echo video with pixel spacing and anchor frames.

    frames is a (T, H, W) float array with intensities in [0, 1];
    pixel_spacing is isotropic, in cm per pixel. Anchor indices mark the
    end-diastolic and end-systolic frames; either may be None when that
    phase was not annotated.
    """

    frames: np.ndarray
    pixel_spacing: float
    anchor_ed: int | None
    anchor_es: int | None
    study_id: str = "study"

    def __post_init__(self) -> None:
        frames = np.asarray(self.frames, dtype=float)
        if frames.ndim != 3 or frames.shape[0] < 1:
            raise ValueError(f"frames must be a (T, H, W) stack, got shape {frames.shape}")
        if not np.isfinite(frames).all():
            raise ValueError("frame intensities must be finite")
        if frames.min() < 0.0 or frames.max() > 1.0:
            raise ValueError("frame intensities must lie in [0, 1]")
        if self.pixel_spacing <= 0:
            raise ValueError("pixel_spacing must be positive")
        for name in ("anchor_ed", "anchor_es"):
            idx = getattr(self, name)
            if idx is not None and not 0 <= idx < frames.shape[0]:
                raise ValueError(f"{name}={idx} outside [0, {frames.shape[0]})")
        frames.setflags(write=False)
        object.__setattr__(self, "frames", frames)

    @property
    def n_frames(self) -> int:
        return self.frames.shape[0]

    @property
    def image_bounds(self) -> tuple[int, int]:
        return self.frames.shape[1], self.frames.shape[2]

    def anchor_for(self, phase: str) -> int | None:
        key = phase.upper()
        if key == "ED":
            return self.anchor_ed
        if key == "ES":
            return self.anchor_es
        raise ValueError(f"unknown phase {phase!r}; expected 'ED' or 'ES'")


@dataclass(frozen=True, eq=False)
class AMMImage:
    """Reconstructed M-mode image along a scanline.

    values has shape (P, T); sample_spacing is the distance in B-mode
    pixels between consecutive rows, i.e. scanline length / (P - 1).
    """

    values: np.ndarray
    scanline: ScanLine
    sample_spacing: float

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2 or values.shape[0] < 2:
            raise ValueError(f"values must be (P>=2, T), got shape {values.shape}")
        expected = self.scanline.length / (values.shape[0] - 1)
        if not math.isclose(self.sample_spacing, expected, rel_tol=1e-9, abs_tol=1e-12):
            raise ValueError(
                f"sample_spacing {self.sample_spacing!r} inconsistent with "
                f"scanline length / (P - 1) = {expected!r}"
            )
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def cols(self) -> int:
        return self.values.shape[1]


def _point_at(scanline: ScanLine, t: float) -> Point2D:
    # Shared by sample_positions and amm_row_to_bmode so that integer rows
    # round-trip bit-exactly.
    return Point2D(
        scanline.p1.x + t * (scanline.p2.x - scanline.p1.x),
        scanline.p1.y + t * (scanline.p2.y - scanline.p1.y),
    )


def sample_positions(scanline: ScanLine, count: int) -> list[Point2D]:
    """`count` points evenly spaced from p1 to p2, endpoints inclusive."""
    if count < 2:
        raise ValueError("need at least 2 sample positions")
    return [_point_at(scanline, i / (count - 1)) for i in range(count)]


def bilinear_sample(frame: np.ndarray, point: Point2D) -> float:
    """Bilinear interpolation of one frame at a continuous coordinate.

    Pixel (k, l) is centered at (x=l, y=k). Coordinates outside
    [0, W-1] x [0, H-1] return 0 (the dark exterior of the scan sector).
    """
    height, width = frame.shape
    x, y = point.x, point.y
    if x < 0.0 or x > width - 1 or y < 0.0 or y > height - 1:
        return 0.0
    x0 = math.floor(x)
    y0 = math.floor(y)
    x1 = min(x0 + 1, width - 1)
    y1 = min(y0 + 1, height - 1)
    fx = x - x0
    fy = y - y0
    top = (1.0 - fx) * frame[y0, x0] + fx * frame[y0, x1]
    bottom = (1.0 - fx) * frame[y1, x0] + fx * frame[y1, x1]
    return float((1.0 - fy) * top + fy * bottom)


def extract_amm(study: EchoStudy, scanline: ScanLine, count: int) -> AMMImage:
    """Reconstruct the (count, T) M-mode image along `scanline`.

    Entry [i, t] is the bilinear sample of frame t at sample position i;
    out-of-image positions contribute 0. Deterministic in its inputs.
    """
    positions = sample_positions(scanline, count)
    height, width = study.image_bounds
    xs = np.array([p.x for p in positions])
    ys = np.array([p.y for p in positions])
    inside = (xs >= 0.0) & (xs <= width - 1) & (ys >= 0.0) & (ys <= height - 1)

    x0 = np.clip(np.floor(xs).astype(int), 0, width - 1)
    y0 = np.clip(np.floor(ys).astype(int), 0, height - 1)
    x1 = np.minimum(x0 + 1, width - 1)
    y1 = np.minimum(y0 + 1, height - 1)
    fx = np.where(inside, xs - x0, 0.0)
    fy = np.where(inside, ys - y0, 0.0)

    frames = study.frames
    top = (1.0 - fx) * frames[:, y0, x0] + fx * frames[:, y0, x1]
    bottom = (1.0 - fx) * frames[:, y1, x0] + fx * frames[:, y1, x1]
    values = ((1.0 - fy) * top + fy * bottom).T
    values[~inside, :] = 0.0
    return AMMImage(values, scanline, scanline.length / (count - 1))


def amm_row_to_bmode(amm: AMMImage, row: float) -> Point2D:
    """Map a continuous M-mode row coordinate back to the B-mode plane.

    Inverse of the sampling grid: integer rows land exactly on
    sample_positions(scanline, P)[row].

    Raises:
        ValueError: `row` outside [0, P - 1].
    """
    last = amm.rows - 1
    if not 0.0 <= row <= last:
        raise ValueError(f"row {row!r} outside [0, {last}]")
    return _point_at(amm.scanline, row / last)
