"""Synthetic long-axis echo phantom with analytic ground truth.

The phantom is two bright wall bands (septum above, posterior wall below)
separated by a dark cavity, all parallel to a configurable long axis. Band
boundaries breathe sinusoidally between the end-diastolic extreme at frame
0 and the end-systolic extreme at frame T/2, so both anchor frames carry
exactly the configured dimensions. Band edges get a 1-pixel linear ramp so
subpixel boundary detection is meaningful. With zero noise every
downstream error is attributable to the algorithm, not the data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .amm import EchoStudy
from .geometry import (
    ContourEstimate,
    Point2D,
    ScanLine,
    clipped_segment,
    farthest_direction,
    perpendicular,
    ray_exit_distance,
)
from .pipeline import MeasurementSet

__all__ = [
    "PhantomConfig",
    "PhantomTruth",
    "phase_fraction",
    "generate_phantom",
    "truth_contour",
    "random_config",
]

# Walls and landmarks stay at least this far from the image border (px).
_BORDER_MARGIN = 1.0


@dataclass(frozen=True)
class PhantomConfig:
    """Geometry, dynamics and rendering parameters of one phantom video.

    Thicknesses are in cm; *_ed values apply at end-diastole (frame 0),
    *_es at end-systole (frame T/2). axis_angle_deg orients the long axis
    against the image x-axis; basal_anchor is the cavity-center point the
    measurement scanline passes through. amm_samples fixes the row count
    used for the ground-truth landmark rows.
    """

    height: int = 192
    width: int = 192
    pixel_spacing: float = 0.05
    frames_per_cycle: int = 16
    axis_angle_deg: float = 20.0
    basal_anchor: Point2D = field(default_factory=lambda: Point2D(96.0, 96.0))
    ivs_ed: float = 1.0
    lvid_ed: float = 4.6
    lvpw_ed: float = 0.95
    ivs_es: float = 1.3
    lvid_es: float = 3.2
    lvpw_es: float = 1.25
    wall_intensity: float = 0.9
    cavity_intensity: float = 0.05
    noise_sigma: float = 0.0
    seed: int = 0
    amm_samples: int = 64
    basal_pair_gap_px: float = 4.0

    def __post_init__(self) -> None:
        if self.height < 8 or self.width < 8:
            raise ValueError("image must be at least 8x8")
        if self.pixel_spacing <= 0:
            raise ValueError("pixel_spacing must be positive")
        if self.frames_per_cycle < 2 or self.frames_per_cycle % 2 != 0:
            raise ValueError(
                "frames_per_cycle must be an even count >= 2 so frame T/2 "
                "hits the systolic extreme exactly"
            )
        for name in ("ivs_ed", "lvid_ed", "lvpw_ed", "ivs_es", "lvid_es", "lvpw_es"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.lvid_es >= self.lvid_ed:
            raise ValueError("systolic LVID must be smaller than diastolic LVID")
        for name in ("wall_intensity", "cavity_intensity"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be nonnegative")
        if self.amm_samples < 2:
            raise ValueError("amm_samples must be at least 2")
        if self.basal_pair_gap_px <= 0:
            raise ValueError("basal_pair_gap_px must be positive")
        _validate_geometry(self)


@dataclass(frozen=True, eq=False)
class PhantomTruth:
    """Analytic ground truth paired with a generated phantom video.

    Landmarks are ordered along the scanline: IVS top, IVS/LVID boundary,
    LVID/LVPW boundary, LVPW bottom. true_contour is the end-diastolic
    contour with all expected radial errors zero.
    """

    true_scanline: ScanLine
    landmarks_ed: tuple[Point2D, Point2D, Point2D, Point2D]
    landmarks_es: tuple[Point2D, Point2D, Point2D, Point2D]
    true_contour: ContourEstimate
    measurements_ed: MeasurementSet
    measurements_es: MeasurementSet

    def landmarks(self, phase: str) -> tuple[Point2D, Point2D, Point2D, Point2D]:
        return self.landmarks_ed if phase.upper() == "ED" else self.landmarks_es

    def measurements(self, phase: str) -> MeasurementSet:
        return self.measurements_ed if phase.upper() == "ED" else self.measurements_es


def _axis_unit(cfg: PhantomConfig) -> Point2D:
    theta = math.radians(cfg.axis_angle_deg)
    return Point2D(math.cos(theta), math.sin(theta))


def _wall_normal(cfg: PhantomConfig) -> Point2D:
    # Oriented toward +y: the septum sits on the negative side (above).
    return perpendicular(_axis_unit(cfg))


def phase_fraction(frame_index: float, frames_per_cycle: int) -> float:
    """Sinusoidal systole fraction: 0 at frame 0 (ED), 1 at T/2 (ES)."""
    return (1.0 - math.cos(2.0 * math.pi * frame_index / frames_per_cycle)) / 2.0


def _dims_cm(cfg: PhantomConfig, fraction: float) -> tuple[float, float, float]:
    ivs = cfg.ivs_ed + (cfg.ivs_es - cfg.ivs_ed) * fraction
    lvid = cfg.lvid_ed + (cfg.lvid_es - cfg.lvid_ed) * fraction
    lvpw = cfg.lvpw_ed + (cfg.lvpw_es - cfg.lvpw_ed) * fraction
    return ivs, lvid, lvpw


def _edge_offsets_px(cfg: PhantomConfig, fraction: float) -> tuple[float, ...]:
    """Signed band-edge offsets along the wall normal, in pixels."""
    ivs, lvid, lvpw = _dims_cm(cfg, fraction)
    s = cfg.pixel_spacing
    half = lvid / 2.0 / s
    return (-half - ivs / s, -half, half, half + lvpw / s)


def _landmark_points(
    cfg: PhantomConfig, fraction: float
) -> tuple[Point2D, Point2D, Point2D, Point2D]:
    anchor = cfg.basal_anchor
    normal = _wall_normal(cfg)
    return tuple(  # type: ignore[return-value]
        Point2D(anchor.x + e * normal.x, anchor.y + e * normal.y)
        for e in _edge_offsets_px(cfg, fraction)
    )


def _truth_scanline(cfg: PhantomConfig) -> ScanLine:
    half = 1.2 * cfg.lvid_ed / cfg.pixel_spacing
    return clipped_segment(
        cfg.basal_anchor, _wall_normal(cfg), half, (cfg.height, cfg.width)
    )


def _validate_geometry(cfg: PhantomConfig) -> None:
    bounds = (cfg.height, cfg.width)
    for fraction in (0.0, 1.0):
        for point in _landmark_points(cfg, fraction):
            if not (
                _BORDER_MARGIN <= point.x <= cfg.width - 1 - _BORDER_MARGIN
                and _BORDER_MARGIN <= point.y <= cfg.height - 1 - _BORDER_MARGIN
            ):
                raise ValueError(
                    f"wall structures exceed image bounds: landmark at "
                    f"({point.x:.1f}, {point.y:.1f}) in a {cfg.width}x{cfg.height} image"
                )
        edges = _edge_offsets_px(cfg, fraction)
        if any(b - a <= 1.0 for a, b in zip(edges, edges[1:])):
            raise ValueError(
                "every band must be thicker than the 1 px edge ramp; "
                "increase dimensions or shrink pixel_spacing"
            )
    scanline = _truth_scanline(cfg)
    reach = scanline.length / 2.0
    for fraction in (0.0, 1.0):
        if max(abs(e) for e in _edge_offsets_px(cfg, fraction)) > reach:
            raise ValueError("wall structures exceed the measurement scanline extent")
    anchor = cfg.basal_anchor
    if not (0 <= anchor.x <= cfg.width - 1 and 0 <= anchor.y <= cfg.height - 1):
        raise ValueError("basal_anchor outside the image")
    # The sweep band toward the apex must have room for at least one line.
    axis = farthest_direction(anchor, _axis_unit(cfg), bounds)
    if ray_exit_distance(anchor, axis, bounds) <= 1.0:
        raise ValueError("no in-image extent along the long axis for the sweep band")


def _landmark_rows(cfg: PhantomConfig, scanline: ScanLine, fraction: float) -> tuple:
    direction = scanline.direction
    spacing = scanline.length / (cfg.amm_samples - 1)
    rows = []
    for point in _landmark_points(cfg, fraction):
        along = (point - scanline.p1).dot(direction)
        rows.append(along / spacing)
    return tuple(rows)


def _truth_measurements(cfg: PhantomConfig, scanline: ScanLine, phase: str) -> MeasurementSet:
    fraction = 0.0 if phase == "ED" else 1.0
    ivs, lvid, lvpw = _dims_cm(cfg, fraction)
    return MeasurementSet(
        ivs=ivs,
        lvid=lvid,
        lvpw=lvpw,
        phase=phase,
        landmark_rows=_landmark_rows(cfg, scanline, fraction),
        scanline=scanline,
    )


def truth_contour(
    cfg: PhantomConfig, phase: str, n_lv: int = 20, band_fraction: float = 0.6
) -> ContourEstimate:
    """Exact cavity contour at a phase, with all expected radial errors zero.

    Cavity pairs sit at n_lv stations spread over `band_fraction` of the
    in-image extent from the basal anchor toward the apex (midpoints of
    equal sub-intervals, matching the weak-label sweep); the two basal
    pairs straddle the anchor symmetrically so their centroid is the true
    scanline midpoint.
    """
    if n_lv < 1:
        raise ValueError("n_lv must be at least 1")
    if not 0.0 < band_fraction <= 1.0:
        raise ValueError("band_fraction must lie in (0, 1]")
    fraction = 0.0 if phase.upper() == "ED" else 1.0
    anchor = cfg.basal_anchor
    normal = _wall_normal(cfg)
    bounds = (cfg.height, cfg.width)
    apex = farthest_direction(anchor, _axis_unit(cfg), bounds)
    extent = ray_exit_distance(anchor, apex, bounds)
    half_lvid = _dims_cm(cfg, fraction)[1] / 2.0 / cfg.pixel_spacing

    def pair_at(along: float) -> tuple[Point2D, Point2D]:
        cx = anchor.x + along * apex.x
        cy = anchor.y + along * apex.y
        return (
            Point2D(cx - half_lvid * normal.x, cy - half_lvid * normal.y),
            Point2D(cx + half_lvid * normal.x, cy + half_lvid * normal.y),
        )

    step = band_fraction * extent / n_lv
    lvid_pairs = tuple(pair_at((i + 0.5) * step) for i in range(n_lv))
    gap = cfg.basal_pair_gap_px / 2.0
    basal_pairs = (pair_at(-gap), pair_at(gap))
    return ContourEstimate(lvid_pairs, basal_pairs, np.zeros((n_lv + 2, 2)))


def random_config(rng: np.random.Generator, **overrides) -> PhantomConfig:
    """Draw a random, always-valid phantom configuration.

    Dimensions, orientation, pixel spacing and anchor jitter are sampled
    from ranges that keep structures inside the image by construction.
    Keyword overrides replace the sampled values.
    """
    size = int(rng.integers(192, 257))
    ivs_ed = float(rng.uniform(0.8, 1.2))
    lvid_ed = float(rng.uniform(3.8, 5.2))
    lvpw_ed = float(rng.uniform(0.8, 1.2))
    params: dict = {
        "height": size,
        "width": size,
        "pixel_spacing": float(rng.uniform(0.05, 0.07)),
        "frames_per_cycle": int(rng.choice([12, 16, 20])),
        "axis_angle_deg": float(rng.uniform(0.0, 180.0)),
        "basal_anchor": Point2D(
            size / 2.0 + float(rng.uniform(-6.0, 6.0)),
            size / 2.0 + float(rng.uniform(-6.0, 6.0)),
        ),
        "ivs_ed": ivs_ed,
        "lvid_ed": lvid_ed,
        "lvpw_ed": lvpw_ed,
        "ivs_es": ivs_ed * float(rng.uniform(1.15, 1.35)),
        "lvid_es": lvid_ed * float(rng.uniform(0.62, 0.75)),
        "lvpw_es": lvpw_ed * float(rng.uniform(1.15, 1.35)),
        "noise_sigma": 0.0,
        "seed": int(rng.integers(0, 2**31 - 1)),
    }
    params.update(overrides)
    return PhantomConfig(**params)


def generate_phantom(cfg: PhantomConfig) -> tuple[EchoStudy, PhantomTruth]:
    """Render the phantom video and its analytic ground truth.

    Deterministic given the config (the seed drives the additive clipped
    Gaussian noise). Frame 0 is the ED anchor, frame T/2 the ES anchor.
    """
    axis = _axis_unit(cfg)
    normal = perpendicular(axis)
    anchor = cfg.basal_anchor
    xv, yv = np.meshgrid(
        np.arange(cfg.width, dtype=float), np.arange(cfg.height, dtype=float)
    )
    signed = (xv - anchor.x) * normal.x + (yv - anchor.y) * normal.y

    frames = np.empty((cfg.frames_per_cycle, cfg.height, cfg.width))
    wall, cavity = cfg.wall_intensity, cfg.cavity_intensity
    levels = np.array([0.0, wall, wall, cavity, cavity, wall, wall, 0.0])
    for t in range(cfg.frames_per_cycle):
        edges = _edge_offsets_px(cfg, phase_fraction(t, cfg.frames_per_cycle))
        knots = np.array(
            [offset + side for offset in edges for side in (-0.5, 0.5)]
        )
        frames[t] = np.interp(signed, knots, levels)

    if cfg.noise_sigma > 0:
        rng = np.random.default_rng(cfg.seed)
        frames = np.clip(
            frames + rng.normal(0.0, cfg.noise_sigma, frames.shape), 0.0, 1.0
        )

    study = EchoStudy(
        frames=frames,
        pixel_spacing=cfg.pixel_spacing,
        anchor_ed=0,
        anchor_es=cfg.frames_per_cycle // 2,
        study_id=f"phantom-{cfg.seed:04d}",
    )
    scanline = _truth_scanline(cfg)
    truth = PhantomTruth(
        true_scanline=scanline,
        landmarks_ed=_landmark_points(cfg, 0.0),
        landmarks_es=_landmark_points(cfg, 1.0),
        true_contour=truth_contour(cfg, "ED"),
        measurements_ed=_truth_measurements(cfg, scanline, "ED"),
        measurements_es=_truth_measurements(cfg, scanline, "ES"),
    )
    return study, truth
