"""Heatmap math for landmark localization.

Heatmaps are plain (H, W) float arrays over the pixel grid, nonnegative and
summing to 1 after normalization. The grid coordinate of cell (row k,
column l) is (x=l, y=k), so expected coordinates and radial errors come out
in pixel units.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .geometry import Point2D

__all__ = [
    "LossConfig",
    "NORMALIZATION_TOL",
    "gaussian_target",
    "softmax_normalize",
    "expected_coordinate",
    "ere",
    "heatmap_loss",
    "coord_loss",
    "combined_loss",
    "ere_weights",
]

# A heatmap whose sum strays further than this from 1 is rejected.
NORMALIZATION_TOL = 1e-6


@dataclass(frozen=True)
class LossConfig:
    """Weights for the combined landmark loss.

    coord_weight scales the coordinate-error term added to the heatmap
    term; ere_epsilon (pixels) stabilizes inverse-ERE loss weights.
    """

    coord_weight: float = 1.0
    ere_epsilon: float = 1.0

    def __post_init__(self) -> None:
        if self.coord_weight < 0:
            raise ValueError("coord_weight must be nonnegative")
        if self.ere_epsilon <= 0:
            raise ValueError("ere_epsilon must be positive")


def _require_heatmap(values: np.ndarray) -> np.ndarray:
    h = np.asarray(values, dtype=float)
    if h.ndim != 2:
        raise ValueError(f"heatmap must be 2D, got shape {h.shape}")
    if not np.isfinite(h).all():
        raise ValueError("heatmap entries must be finite")
    if (h < 0).any():
        raise ValueError("heatmap entries must be nonnegative")
    total = float(h.sum())
    if abs(total - 1.0) > NORMALIZATION_TOL:
        raise ValueError(f"heatmap is not normalized (sum = {total!r})")
    return h


def gaussian_target(center: Point2D, sigma: float, height: int, width: int) -> np.ndarray:
    """Normalized isotropic Gaussian target heatmap centered at `center`.

    Values are exp(-||(l, k) - center||^2 / (2 sigma^2)) over the pixel
    grid, rescaled to sum to 1.
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    xs = np.arange(width, dtype=float)
    ys = np.arange(height, dtype=float)
    xv, yv = np.meshgrid(xs, ys)
    sq = (xv - center.x) ** 2 + (yv - center.y) ** 2
    raw = np.exp(-sq / (2.0 * sigma * sigma))
    return raw / raw.sum()


def softmax_normalize(raw: np.ndarray) -> np.ndarray:
    """Softmax over all cells of a raw score grid; output sums to 1.

    The max is subtracted before exponentiation for numerical stability,
    which leaves the result unchanged (softmax is shift invariant).
    """
    values = np.asarray(raw, dtype=float)
    if values.ndim != 2:
        raise ValueError(f"expected a 2D grid, got shape {values.shape}")
    if not np.isfinite(values).all():
        raise ValueError("raw grid entries must be finite")
    shifted = np.exp(values - values.max())
    return shifted / shifted.sum()


def expected_coordinate(heatmap: np.ndarray) -> Point2D:
    """Expected pixel coordinate under a normalized heatmap (soft-argmax).

    Returns sum_{k,l} h[k, l] * (l, k); always lies inside the grid's
    bounding box because it is a convex combination of grid points.

    Raises:
        ValueError: The heatmap is not normalized within NORMALIZATION_TOL.
    """
    h = _require_heatmap(heatmap)
    height, width = h.shape
    x = float(h.sum(axis=0) @ np.arange(width, dtype=float))
    y = float(h.sum(axis=1) @ np.arange(height, dtype=float))
    return Point2D(x, y)


def ere(heatmap: np.ndarray, coord: Point2D) -> float:
    """Expected radial error: heatmap-weighted mean distance to `coord`.

    With coord = expected_coordinate(heatmap) this is the spread of the heatmap around its
    own expected coordinate, used as a per-landmark uncertainty in pixels.
    """
    h = _require_heatmap(heatmap)
    height, width = h.shape
    xv, yv = np.meshgrid(np.arange(width, dtype=float), np.arange(height, dtype=float))
    distances = np.hypot(xv - coord.x, yv - coord.y)
    return float((h * distances).sum())


def _stack(heatmaps: Sequence[np.ndarray] | np.ndarray) -> np.ndarray:
    arr = np.asarray(heatmaps, dtype=float)
    if arr.ndim == 2:
        arr = arr[np.newaxis]
    if arr.ndim != 3:
        raise ValueError(f"expected N heatmaps of equal shape, got shape {arr.shape}")
    return arr


def heatmap_loss(
    pred: Sequence[np.ndarray] | np.ndarray, gt: Sequence[np.ndarray] | np.ndarray
) -> float:
    """Mean over landmarks of the summed squared elementwise difference."""
    p = _stack(pred)
    g = _stack(gt)
    if p.shape != g.shape:
        raise ValueError(f"shape mismatch: {p.shape} vs {g.shape}")
    return float(((p - g) ** 2).sum(axis=(1, 2)).mean())


def coord_loss(pred: Sequence[Point2D], gt: Sequence[Point2D]) -> float:
    """Mean Euclidean distance between paired predicted and true coordinates."""
    if len(pred) != len(gt) or len(pred) == 0:
        raise ValueError("pred and gt must be equal-length, nonempty sequences")
    return float(np.mean([p.distance_to(g) for p, g in zip(pred, gt)]))


def combined_loss(
    pred_heatmaps: Sequence[np.ndarray] | np.ndarray,
    gt_heatmaps: Sequence[np.ndarray] | np.ndarray,
    pred_coords: Sequence[Point2D],
    gt_coords: Sequence[Point2D],
    cfg: LossConfig = LossConfig(),
) -> float:
    """Heatmap loss plus coord_weight times the coordinate loss."""
    return heatmap_loss(pred_heatmaps, gt_heatmaps) + cfg.coord_weight * coord_loss(
        pred_coords, gt_coords
    )


def ere_weights(
    eres: Sequence[float] | np.ndarray, cfg: LossConfig = LossConfig()
) -> np.ndarray:
    """Loss weights w_i = 1 / (ERE_i + epsilon), rescaled to mean 1.

    Larger uncertainty always maps to a smaller weight, and the mean-1
    rescaling keeps the overall loss scale unchanged.
    """
    values = np.asarray(eres, dtype=float)
    if values.size == 0:
        raise ValueError("need at least one ERE value")
    if np.isnan(values).any() or (values < 0).any():
        raise ValueError("ERE values must be nonnegative")
    raw = 1.0 / (values + cfg.ere_epsilon)
    return raw / raw.mean()
