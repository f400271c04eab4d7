"""Points, lines and scanlines in image coordinates.

Coordinates follow the image convention: x runs along columns, y along rows,
pixel (row k, column l) is centered at (x=l, y=k). Angles are measured in
degrees against the image x-axis and treated as undirected (folded into
[0, 180) for lines, [0, 90] for line-to-line comparisons).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DegenerateGeometryError, PlacementError

__all__ = [
    "Point2D",
    "Line2D",
    "ScanLine",
    "ContourEstimate",
    "LongAxisFitConfig",
    "perpendicular",
    "ray_exit_distance",
    "farthest_direction",
    "clipped_segment",
    "lvid_midpoints",
    "fit_long_axis",
    "place_scanline",
    "scanline_distance_angle",
]


@dataclass(frozen=True)
class Point2D:
    """Continuous pixel coordinate (also used as a 2D vector)."""

    x: float
    y: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"coordinates must be finite, got ({self.x}, {self.y})")

    def __add__(self, other: Point2D) -> Point2D:
        return Point2D(self.x + other.x, self.y + other.y)

    def __sub__(self, other: Point2D) -> Point2D:
        return Point2D(self.x - other.x, self.y - other.y)

    def __neg__(self) -> Point2D:
        return Point2D(-self.x, -self.y)

    def scaled(self, k: float) -> Point2D:
        return Point2D(self.x * k, self.y * k)

    def dot(self, other: Point2D) -> float:
        return self.x * other.x + self.y * other.y

    def norm(self) -> float:
        return math.hypot(self.x, self.y)

    def distance_to(self, other: Point2D) -> float:
        return math.hypot(self.x - other.x, self.y - other.y)


def perpendicular(direction: Point2D) -> Point2D:
    """Unit vector perpendicular to `direction`, oriented toward +y.

    The +y (image-down) orientation is the display convention: along the
    returned vector the first structure crossed is the near-probe wall.
    Ties (horizontal result) resolve toward +x.
    """
    px, py = -direction.y, direction.x
    if py < 0 or (py == 0 and px < 0):
        px, py = -px, -py
    n = math.hypot(px, py)
    if n < 1e-12:
        raise DegenerateGeometryError("cannot take perpendicular of a zero vector")
    return Point2D(px / n, py / n)


@dataclass(frozen=True)
class Line2D:
    """Infinite undirected line given by an anchor point and a unit direction."""

    point: Point2D
    direction: Point2D

    def __post_init__(self) -> None:
        n = self.direction.norm()
        if n < 1e-12:
            raise DegenerateGeometryError("line direction must be nonzero")
        if abs(n - 1.0) > 1e-12:
            object.__setattr__(
                self, "direction", Point2D(self.direction.x / n, self.direction.y / n)
            )

    @property
    def angle_deg(self) -> float:
        """Undirected angle versus the image x-axis, in [0, 180)."""
        return math.degrees(math.atan2(self.direction.y, self.direction.x)) % 180.0


@dataclass(frozen=True)
class ScanLine:
    """Directed segment along which a virtual M-mode image is sampled."""

    p1: Point2D
    p2: Point2D

    def __post_init__(self) -> None:
        if self.length <= 0.0:
            raise ValueError("scanline endpoints must be distinct")

    @property
    def midpoint(self) -> Point2D:
        return Point2D((self.p1.x + self.p2.x) / 2.0, (self.p1.y + self.p2.y) / 2.0)

    @property
    def length(self) -> float:
        return self.p1.distance_to(self.p2)

    @property
    def direction(self) -> Point2D:
        d = self.p2 - self.p1
        n = d.norm()
        return Point2D(d.x / n, d.y / n)

    @property
    def angle_deg(self) -> float:
        """Undirected angle versus the image x-axis, in [0, 180)."""
        d = self.p2 - self.p1
        return math.degrees(math.atan2(d.y, d.x)) % 180.0


@dataclass(frozen=True, eq=False)
class ContourEstimate:
    """Cavity contour as ordered (septal, posterior) landmark pairs.

    `lvid_pairs` run from the basal level toward the apex; `basal_pairs` are
    the two pairs at the mitral-leaflet level. `ere` holds one expected
    radial error per point, shaped (n_lv + 2, 2) with rows aligned to
    lvid_pairs followed by basal_pairs and columns (septal, posterior).
    An infinite entry marks a point that failed detection and must be
    excluded from geometric fits.
    """

    lvid_pairs: tuple[tuple[Point2D, Point2D], ...]
    basal_pairs: tuple[tuple[Point2D, Point2D], ...]
    ere: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "lvid_pairs", tuple(tuple(p) for p in self.lvid_pairs))
        object.__setattr__(self, "basal_pairs", tuple(tuple(p) for p in self.basal_pairs))
        if len(self.basal_pairs) != 2:
            raise ValueError(f"expected exactly 2 basal pairs, got {len(self.basal_pairs)}")
        ere = np.asarray(self.ere, dtype=float)
        expected = (len(self.lvid_pairs) + 2, 2)
        if ere.shape != expected:
            raise ValueError(f"ere must have shape {expected}, got {ere.shape}")
        if np.isnan(ere).any() or (ere < 0).any():
            raise ValueError("ere entries must be nonnegative")
        ere.setflags(write=False)
        object.__setattr__(self, "ere", ere)

    @property
    def n_lv(self) -> int:
        return len(self.lvid_pairs)

    @property
    def all_pairs(self) -> tuple[tuple[Point2D, Point2D], ...]:
        return self.lvid_pairs + self.basal_pairs

    def valid_lvid_mask(self) -> np.ndarray:
        """Boolean mask over lvid_pairs: True where both point EREs are finite."""
        return np.isfinite(self.ere[: self.n_lv]).all(axis=1)


@dataclass(frozen=True)
class LongAxisFitConfig:
    """Configuration for the ridge line fit. `alpha` shrinks the slope."""

    alpha: float = 1.0

    def __post_init__(self) -> None:
        if self.alpha < 0:
            raise ValueError("alpha must be nonnegative")


def lvid_midpoints(contour: ContourEstimate) -> list[Point2D]:
    """Midpoints of the cavity landmark pairs, basal pairs excluded."""
    return [
        Point2D((s.x + p.x) / 2.0, (s.y + p.y) / 2.0) for s, p in contour.lvid_pairs
    ]


def fit_long_axis(
    midpoints: Sequence[Point2D], cfg: LongAxisFitConfig = LongAxisFitConfig()
) -> Line2D:
    """Fit the cavity long axis through midpoints by ridge regression.

    Points are centered at their centroid and the coordinate with larger
    variance is taken as the independent variable, so steep axes never blow
    up the slope. On the centered data the slope is S_xy / (S_xx + alpha);
    the returned line passes through the centroid.

    Raises:
        DegenerateGeometryError: Fewer than 2 points, or all points coincide.
    """
    if len(midpoints) < 2:
        raise DegenerateGeometryError("long-axis fit needs at least 2 midpoints")
    pts = np.array([[p.x, p.y] for p in midpoints], dtype=float)
    centroid = pts.mean(axis=0)
    centered = pts - centroid
    sxx = float(np.sum(centered[:, 0] ** 2))
    syy = float(np.sum(centered[:, 1] ** 2))
    sxy = float(np.sum(centered[:, 0] * centered[:, 1]))
    if sxx == 0.0 and syy == 0.0:
        raise DegenerateGeometryError("all midpoints coincide; no axis direction")
    if sxx >= syy:
        slope = sxy / (sxx + cfg.alpha)
        direction = Point2D(1.0, slope)
    else:
        slope = sxy / (syy + cfg.alpha)
        direction = Point2D(slope, 1.0)
    return Line2D(Point2D(float(centroid[0]), float(centroid[1])), direction)


def ray_exit_distance(
    origin: Point2D, direction: Point2D, image_bounds: tuple[int, int]
) -> float:
    """Distance from `origin` along `direction` to the image boundary.

    The image is the rectangle [0, W-1] x [0, H-1] given bounds (H, W).
    `origin` must lie inside the rectangle; `direction` need not be unit
    length (the result scales accordingly).
    """
    height, width = image_bounds
    t = math.inf
    if direction.x > 0:
        t = min(t, (width - 1 - origin.x) / direction.x)
    elif direction.x < 0:
        t = min(t, -origin.x / direction.x)
    if direction.y > 0:
        t = min(t, (height - 1 - origin.y) / direction.y)
    elif direction.y < 0:
        t = min(t, -origin.y / direction.y)
    return t


def farthest_direction(
    origin: Point2D, direction: Point2D, image_bounds: tuple[int, int]
) -> Point2D:
    """`direction` or its negation, whichever runs farther inside the image.

    Used to pick the apex side of a long axis: from the basal level the
    cavity extends toward the side with more in-image room.
    """
    t_plus = ray_exit_distance(origin, direction, image_bounds)
    t_minus = ray_exit_distance(origin, -direction, image_bounds)
    return direction if t_plus >= t_minus else -direction


def clipped_segment(
    center: Point2D,
    direction: Point2D,
    half_length: float,
    image_bounds: tuple[int, int],
) -> ScanLine:
    """Segment center +- half_length*direction, clipped symmetrically.

    Clipping shortens both sides equally so the segment midpoint stays at
    `center` exactly.
    """
    t_plus = ray_exit_distance(center, direction, image_bounds)
    t_minus = ray_exit_distance(center, -direction, image_bounds)
    half = min(half_length, t_plus, t_minus)
    if half <= 0.0:
        raise PlacementError("scanline collapses to a point at the image boundary")
    return ScanLine(
        Point2D(center.x - half * direction.x, center.y - half * direction.y),
        Point2D(center.x + half * direction.x, center.y + half * direction.y),
    )


def place_scanline(
    contour: ContourEstimate,
    axis: Line2D,
    half_length: float,
    image_bounds: tuple[int, int],
) -> ScanLine:
    """Place the measurement scanline at the basal level.

    The scanline midpoint is the centroid of the four basal landmarks and
    its direction is perpendicular to `axis`, oriented toward +y so row
    order matches the display convention (near-probe wall first). Endpoints
    extend half_length to each side, clipped symmetrically to the image so
    the midpoint is preserved.

    Raises:
        PlacementError: Basal centroid outside the image, or the clipped
            segment collapses.
    """
    if half_length <= 0.0:
        raise ValueError("half_length must be positive")
    points = [p for pair in contour.basal_pairs for p in pair]
    cx = sum(p.x for p in points) / len(points)
    cy = sum(p.y for p in points) / len(points)
    height, width = image_bounds
    if not (0.0 <= cx <= width - 1 and 0.0 <= cy <= height - 1):
        raise PlacementError(
            f"basal centroid ({cx:.2f}, {cy:.2f}) outside image {width}x{height}"
        )
    direction = perpendicular(axis.direction)
    return clipped_segment(Point2D(cx, cy), direction, half_length, image_bounds)


def scanline_distance_angle(
    pred: ScanLine, gt: ScanLine, pixel_spacing: float
) -> tuple[float, float]:
    """Midpoint distance (cm) and undirected angle difference (degrees).

    The angle is folded into [0, 90] since a scanline has no intrinsic
    orientation. Symmetric in its two scanline arguments.
    """
    distance = pred.midpoint.distance_to(gt.midpoint) * pixel_spacing
    diff = abs(pred.angle_deg - gt.angle_deg)
    angle = min(diff, 180.0 - diff)
    return distance, angle
