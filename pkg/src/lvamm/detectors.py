"""Landmark detectors for M-mode images, plus weak contour-label generation.

Detectors locate the four wall landmarks (IVS top, IVS/LVID boundary,
LVID/LVPW boundary, LVPW bottom) as continuous row coordinates along a
scanline's M-mode image. Three interchangeable implementations are
provided: an oracle that projects known ground truth (optionally with
noise), a classical intensity-profile detector, and a reader for
externally produced heatmap tensors. Sweeping a stack of parallel
scanlines and detecting the cavity boundaries on each yields weak contour
labels without dense annotations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Sequence

import numpy as np

from .amm import AMMImage, EchoStudy, amm_row_to_bmode, extract_amm
from .errors import DetectionError, PlacementError
from .geometry import (
    ContourEstimate,
    Line2D,
    Point2D,
    ScanLine,
    farthest_direction,
    place_scanline,
    ray_exit_distance,
)
from .heatmaps import expected_coordinate, ere, softmax_normalize

if TYPE_CHECKING:
    from .phantom import PhantomTruth

__all__ = [
    "AMMDetection",
    "WeakContourLabel",
    "SweepConfig",
    "detect_oracle",
    "detect_profile",
    "detect_from_heatmaps",
    "sweep_scanlines",
    "generate_weak_labels",
    "OracleAMMDetector",
    "ProfileAMMDetector",
    "HeatmapFileAMMDetector",
    "WeakLabelContourSource",
]


@dataclass(frozen=True, eq=False)
class AMMDetection:
    """Four ordered landmark rows along a scanline's M-mode image.

    confidence optionally carries one expected radial error (pixels) per
    landmark; heatmaps optionally keeps the normalized grids the positions
    came from.
    """

    positions: tuple[float, float, float, float]
    confidence: tuple[float, float, float, float] | None = None
    heatmaps: tuple[np.ndarray, ...] | None = None

    def __post_init__(self) -> None:
        if len(self.positions) != 4:
            raise ValueError(f"expected 4 landmark rows, got {len(self.positions)}")
        rows = tuple(float(p) for p in self.positions)
        if not all(math.isfinite(r) for r in rows):
            raise DetectionError(f"landmark rows must be finite, got {rows}")
        if any(b <= a for a, b in zip(rows, rows[1:])):
            raise DetectionError(f"landmark rows must strictly increase, got {rows}")
        object.__setattr__(self, "positions", rows)
        if self.confidence is not None:
            conf = tuple(float(c) for c in self.confidence)
            if len(conf) != 4 or any(c < 0 or math.isnan(c) for c in conf):
                raise ValueError("confidence must be 4 nonnegative values")
            object.__setattr__(self, "confidence", conf)
        if self.heatmaps is not None:
            object.__setattr__(self, "heatmaps", tuple(self.heatmaps))


@dataclass(frozen=True, eq=False)
class WeakContourLabel:
    """Contour estimate produced by a scanline sweep, with its provenance."""

    contour: ContourEstimate
    sweep_metadata: tuple[ScanLine, ...]
    source: str

    def __post_init__(self) -> None:
        if len(self.sweep_metadata) != self.contour.n_lv:
            raise ValueError("one swept scanline per cavity pair required")
        object.__setattr__(self, "sweep_metadata", tuple(self.sweep_metadata))


@dataclass(frozen=True)
class SweepConfig:
    """Geometry of the weak-label sweep.

    n_lv scanlines are spread over band_fraction of the in-image extent
    from the basal level toward the apex; each is sampled with `samples`
    rows. half_length_scale sizes the basal scanline from the annotated
    pair separation, as in the measurement pipeline.
    """

    n_lv: int = 20
    band_fraction: float = 0.6
    samples: int = 64
    half_length_scale: float = 1.2

    def __post_init__(self) -> None:
        if self.n_lv < 1:
            raise ValueError("n_lv must be at least 1")
        if not 0.0 < self.band_fraction <= 1.0:
            raise ValueError("band_fraction must lie in (0, 1]")
        if self.samples < 2:
            raise ValueError("samples must be at least 2")
        if self.half_length_scale <= 0:
            raise ValueError("half_length_scale must be positive")


def detect_oracle(
    truth: "PhantomTruth",
    phase: str,
    amm: AMMImage,
    noise_sigma: float = 0.0,
    seed: int = 0,
) -> AMMDetection:
    """Project the phantom's true landmarks onto an M-mode image.

    Positions are the orthogonal projections of the true landmark points
    onto the image's scanline, expressed as rows, plus i.i.d. Gaussian
    noise of noise_sigma (in B-mode pixels along the line), re-sorted.
    With zero noise the rows are exact.

    Raises:
        DetectionError: A (possibly noise-shifted) landmark falls outside
            the scanline, i.e. the line does not cover the anatomy.
    """
    if noise_sigma < 0:
        raise ValueError("noise_sigma must be nonnegative")
    scanline = amm.scanline
    direction = scanline.direction
    along = np.array(
        [(p - scanline.p1).dot(direction) for p in truth.landmarks(phase)]
    )
    if noise_sigma > 0:
        rng = np.random.default_rng(seed)
        along = along + rng.normal(0.0, noise_sigma, along.shape)
    rows = np.sort(along / amm.sample_spacing)
    if rows[0] < 0.0 or rows[-1] > amm.rows - 1:
        raise DetectionError(
            f"true landmarks project to rows {np.round(rows, 2).tolist()} "
            f"outside [0, {amm.rows - 1}]; scanline does not cover the walls"
        )
    return AMMDetection(tuple(float(r) for r in rows))


def _moving_average(values: np.ndarray, window: int) -> np.ndarray:
    if window == 1:
        return values.astype(float)
    pad = window // 2
    padded = np.pad(values.astype(float), pad, mode="edge")
    kernel = np.full(window, 1.0 / window)
    return np.convolve(padded, kernel, mode="valid")


def detect_profile(
    amm: AMMImage,
    anchor_column: int,
    window: int = 3,
    threshold_fraction: float = 0.5,
) -> AMMDetection:
    """Classical bright-dark-bright detector on one M-mode column.

    The anchor-frame column is smoothed with a moving average, a threshold
    at threshold_fraction of its dynamic range is computed, and the four
    threshold crossings delimiting the wall-cavity-wall structure are
    located, each refined by linear interpolation between the straddling
    samples. The profile is padded with its minimum at both virtual ends
    so a bright region touching the scanline end still yields a crossing.
    Invariant to affine intensity rescaling with positive gain.

    Raises:
        DetectionError: Flat profile, or a crossing count other than 4
            (ambiguous anatomy / badly placed scanline).
    """
    if window < 1 or window % 2 == 0:
        raise ValueError("window must be a positive odd integer")
    if not 0.0 < threshold_fraction < 1.0:
        raise ValueError("threshold_fraction must lie in (0, 1)")
    if not 0 <= anchor_column < amm.cols:
        raise ValueError(f"anchor column {anchor_column} outside [0, {amm.cols})")

    smoothed = _moving_average(amm.values[:, anchor_column], window)
    low = float(smoothed.min())
    high = float(smoothed.max())
    if high - low <= 0.0:
        raise DetectionError("constant intensity profile; nothing to detect")
    threshold = threshold_fraction * (high - low) + low

    # Virtual rows -1 and P hold the minimum so edge-truncated bright bands
    # still produce boundary crossings.
    padded = np.concatenate(([low], smoothed, [low]))
    above = padded >= threshold
    crossings: list[float] = []
    for j in range(len(padded) - 1):
        if above[j] != above[j + 1]:
            t = (threshold - padded[j]) / (padded[j + 1] - padded[j])
            crossings.append((j - 1) + t)
    if len(crossings) != 4:
        raise DetectionError(
            f"expected 4 threshold crossings, found {len(crossings)}"
        )
    last = amm.rows - 1
    clipped = [min(max(c, 0.0), float(last)) for c in crossings]
    return AMMDetection(tuple(clipped))


def detect_from_heatmaps(files: Sequence[str]) -> AMMDetection:
    """Landmark rows from four heatmap tensor files.

    Each file holds one grid over the M-mode image (any width, including a
    single column). Grids not flagged as normalized in their sidecar are
    softmax-normalized first; the expected coordinate's row becomes the
    position and the expected radial error the confidence.

    Raises:
        DetectionError: Wrong file count, non-2D or mismatched shapes,
            grids flagged normalized that are not, or non-monotone
            resulting positions (degenerate heatmaps).
    """
    from .studyio import read_tensor

    if len(files) != 4:
        raise DetectionError(f"expected 4 heatmap tensor files, got {len(files)}")
    positions: list[float] = []
    confidence: list[float] = []
    grids: list[np.ndarray] = []
    shape: tuple[int, ...] | None = None
    for path in files:
        array, meta = read_tensor(path)
        if array.ndim != 2:
            raise DetectionError(f"{path}: heatmap tensor must be 2D, got {array.shape}")
        if shape is None:
            shape = array.shape
        elif array.shape != shape:
            raise DetectionError(
                f"{path}: shape {array.shape} differs from first tensor {shape}"
            )
        grid = np.asarray(array, dtype=float)
        if not meta.get("normalized", False):
            grid = softmax_normalize(grid)
        try:
            center = expected_coordinate(grid)
        except ValueError as exc:
            raise DetectionError(f"{path}: {exc}") from exc
        positions.append(center.y)
        confidence.append(ere(grid, center))
        grids.append(grid)
    return AMMDetection(tuple(positions), tuple(confidence), tuple(grids))


def sweep_scanlines(
    axis: Line2D,
    basal_sl: ScanLine,
    n_lv: int,
    band_fraction: float,
    image_bounds: tuple[int, int],
    toward: Point2D | None = None,
) -> list[ScanLine]:
    """n_lv scanlines parallel to the basal one, marching toward the apex.

    Lines sit at the midpoints of n_lv equal sub-intervals of
    [0, band_fraction * extent], where extent is the in-image distance
    from the basal midpoint along the axis. The apex side is `toward`
    when given, otherwise the side with the larger in-image extent.

    Raises:
        PlacementError: Basal midpoint outside the image or no room along
            the axis (the band leaves the image).
    """
    if n_lv < 1:
        raise ValueError("n_lv must be at least 1")
    if not 0.0 < band_fraction <= 1.0:
        raise ValueError("band_fraction must lie in (0, 1]")
    height, width = image_bounds
    mid = basal_sl.midpoint
    if not (0.0 <= mid.x <= width - 1 and 0.0 <= mid.y <= height - 1):
        raise PlacementError("basal scanline midpoint outside the image")
    apex = toward if toward is not None else farthest_direction(mid, axis.direction, image_bounds)
    extent = ray_exit_distance(mid, apex, image_bounds)
    if extent <= 0.0:
        raise PlacementError("sweep band leaves the image")
    step = band_fraction * extent / n_lv
    lines = []
    for i in range(n_lv):
        along = (i + 0.5) * step
        shift = Point2D(along * apex.x, along * apex.y)
        lines.append(ScanLine(basal_sl.p1 + shift, basal_sl.p2 + shift))
    return lines


def generate_weak_labels(
    study: EchoStudy,
    anchor: int,
    per_sl_detector: "OracleAMMDetector | ProfileAMMDetector | HeatmapFileAMMDetector",
    basal_pairs: Sequence[tuple[Point2D, Point2D]],
    sweep: SweepConfig = SweepConfig(),
) -> WeakContourLabel:
    """Build a weak cavity-contour label by sweeping scanlines.

    The two annotated basal pairs fix the local axis orientation (through
    their midpoints) and the basal scanline. Each swept line's M-mode
    image is run through the detector; its two cavity-boundary rows are
    projected back to the B-mode plane and kept with the detector's
    uncertainty. A line whose detection fails contributes a placeholder
    pair flagged with infinite uncertainty instead of aborting the sweep.
    The basal pairs are appended with zero uncertainty.
    """
    pairs = [(septal, posterior) for septal, posterior in basal_pairs]
    if len(pairs) != 2:
        raise ValueError(f"expected 2 annotated basal pairs, got {len(pairs)}")
    mids = [
        Point2D((s.x + p.x) / 2.0, (s.y + p.y) / 2.0) for s, p in pairs
    ]
    center = Point2D((mids[0].x + mids[1].x) / 2.0, (mids[0].y + mids[1].y) / 2.0)
    axis = Line2D(center, mids[1] - mids[0])

    separation = sum(s.distance_to(p) for s, p in pairs) / 2.0
    stub = ContourEstimate((), tuple(pairs), np.zeros((2, 2)))
    basal_sl = place_scanline(
        stub, axis, sweep.half_length_scale * separation, study.image_bounds
    )
    swept = sweep_scanlines(
        axis, basal_sl, sweep.n_lv, sweep.band_fraction, study.image_bounds
    )

    lvid_pairs: list[tuple[Point2D, Point2D]] = []
    ere_rows: list[tuple[float, float]] = []
    for line in swept:
        amm = extract_amm(study, line, sweep.samples)
        try:
            detection = per_sl_detector.detect(amm, anchor_column=anchor)
        except DetectionError:
            lvid_pairs.append((line.midpoint, line.midpoint))
            ere_rows.append((math.inf, math.inf))
            continue
        septal = amm_row_to_bmode(amm, detection.positions[1])
        posterior = amm_row_to_bmode(amm, detection.positions[2])
        if detection.confidence is not None:
            ere_rows.append((detection.confidence[1], detection.confidence[2]))
        else:
            ere_rows.append((0.0, 0.0))
        lvid_pairs.append((septal, posterior))

    contour = ContourEstimate(
        tuple(lvid_pairs),
        tuple(pairs),
        np.array(ere_rows + [(0.0, 0.0), (0.0, 0.0)]),
    )
    name = getattr(per_sl_detector, "name", type(per_sl_detector).__name__)
    return WeakContourLabel(contour, tuple(swept), source=name)


@dataclass(frozen=True)
class OracleAMMDetector:
    """Detector backed by phantom ground truth, optionally noise-corrupted."""

    truth: "PhantomTruth"
    phase: str
    noise_sigma: float = 0.0
    seed: int = 0
    name: str = "oracle"

    def detect(self, amm: AMMImage, anchor_column: int) -> AMMDetection:
        return detect_oracle(self.truth, self.phase, amm, self.noise_sigma, self.seed)


@dataclass(frozen=True)
class ProfileAMMDetector:
    """Classical intensity-profile detector (see detect_profile)."""

    window: int = 3
    threshold_fraction: float = 0.5
    name: str = "profile"

    def detect(self, amm: AMMImage, anchor_column: int) -> AMMDetection:
        return detect_profile(amm, anchor_column, self.window, self.threshold_fraction)


@dataclass(frozen=True)
class HeatmapFileAMMDetector:
    """Detector reading externally produced heatmap tensors from disk."""

    files: tuple[str, str, str, str]
    name: str = "heatmap-files"

    def detect(self, amm: AMMImage, anchor_column: int) -> AMMDetection:
        detection = detect_from_heatmaps(self.files)
        if detection.heatmaps and detection.heatmaps[0].shape[0] != amm.rows:
            raise DetectionError(
                f"heatmap height {detection.heatmaps[0].shape[0]} does not match "
                f"M-mode rows {amm.rows}"
            )
        return detection


@dataclass(frozen=True)
class WeakLabelContourSource:
    """Contour source running the weak-label sweep on demand.

    Usable wherever the pipeline expects a contour source; the basal
    annotation comes from the study's stored landmark annotation.
    """

    per_sl_detector: "OracleAMMDetector | ProfileAMMDetector | HeatmapFileAMMDetector"
    basal_pairs: tuple[tuple[Point2D, Point2D], tuple[Point2D, Point2D]]
    sweep: SweepConfig = SweepConfig()
    name: str = "weak-labels"

    def __call__(self, study: EchoStudy, phase: str) -> ContourEstimate:
        anchor = study.anchor_for(phase)
        if anchor is None:
            raise ValueError(f"study has no {phase} anchor frame")
        label = generate_weak_labels(
            study, anchor, self.per_sl_detector, self.basal_pairs, self.sweep
        )
        return label.contour
