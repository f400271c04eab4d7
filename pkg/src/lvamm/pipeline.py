"""End-to-end orchestration: contour -> long axis -> scanline -> M-mode ->
landmarks -> physical measurements, plus the manual-scanline entry point."""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Callable, Protocol

from .amm import AMMImage, EchoStudy, extract_amm
from .errors import (
    DegenerateGeometryError,
    LvammError,
    MeasurementError,
    PipelineStageError,
)
from .geometry import (
    ContourEstimate,
    Line2D,
    LongAxisFitConfig,
    ScanLine,
    fit_long_axis,
    lvid_midpoints,
    place_scanline,
)

if TYPE_CHECKING:
    from .detectors import AMMDetection

__all__ = [
    "PHASES",
    "PipelineConfig",
    "MeasurementSet",
    "PipelineResult",
    "AMMDetector",
    "ContourSource",
    "StaticContourSource",
    "measurements_from_detection",
    "run_auto",
    "run_with_scanline",
]

PHASES = ("ED", "ES")


class AMMDetector(Protocol):
    """Anything that can locate the 4 wall landmarks on an M-mode image."""

    name: str

    def detect(self, amm: AMMImage, anchor_column: int) -> "AMMDetection": ...


ContourSource = Callable[[EchoStudy, str], ContourEstimate]


@dataclass(frozen=True)
class PipelineConfig:
    """Knobs of the automatic run.

    samples: rows of the reconstructed M-mode image (P).
    alpha: ridge regularization of the long-axis fit.
    half_length_scale: scanline half-length as a multiple of the mean
        basal pair separation, so both walls are covered with margin.
    """

    samples: int = 64
    alpha: float = 1.0
    half_length_scale: float = 1.2

    def __post_init__(self) -> None:
        if self.samples < 2:
            raise ValueError("samples must be at least 2")
        if self.alpha < 0:
            raise ValueError("alpha must be nonnegative")
        if self.half_length_scale <= 0:
            raise ValueError("half_length_scale must be positive")


@dataclass(frozen=True, eq=False)
class MeasurementSet:
    """IVS/LVID/LVPW lengths in cm at one phase.

    landmark_rows are the four M-mode row coordinates the lengths were
    derived from, ordered along the scanline; consecutive row gaps times
    sample spacing times pixel spacing give the three lengths.
    """

    ivs: float
    lvid: float
    lvpw: float
    phase: str
    landmark_rows: tuple[float, float, float, float]
    scanline: ScanLine

    def __post_init__(self) -> None:
        if self.phase not in PHASES:
            raise ValueError(f"phase must be one of {PHASES}, got {self.phase!r}")
        if len(self.landmark_rows) != 4:
            raise ValueError("exactly 4 landmark rows required")
        rows = tuple(float(r) for r in self.landmark_rows)
        if any(b <= a for a, b in zip(rows, rows[1:])):
            raise MeasurementError(f"landmark rows must strictly increase, got {rows}")
        for name in ("ivs", "lvid", "lvpw"):
            if getattr(self, name) <= 0:
                raise MeasurementError(f"{name} must be positive")
        object.__setattr__(self, "landmark_rows", rows)


@dataclass(frozen=True, eq=False)
class PipelineResult:
    """Everything one automatic or manual run produced.

    contour and long_axis are None for manual-scanline runs. provenance
    records the configuration, component identifiers and the
    manual-override flag.
    """

    contour: ContourEstimate | None
    long_axis: Line2D | None
    scanline: ScanLine
    amm: AMMImage
    measurements: MeasurementSet
    provenance: dict


def measurements_from_detection(
    detection: "AMMDetection", amm: AMMImage, pixel_spacing: float, phase: str
) -> MeasurementSet:
    """Convert detected landmark rows into physical lengths.

    Raises:
        MeasurementError: Rows out of the M-mode grid, or any structure
            has nonpositive length.
    """
    rows = detection.positions
    last = amm.rows - 1
    if rows[0] < 0.0 or rows[-1] > last:
        raise MeasurementError(f"landmark rows {rows} outside M-mode grid [0, {last}]")
    scale = amm.sample_spacing * pixel_spacing
    return MeasurementSet(
        ivs=(rows[1] - rows[0]) * scale,
        lvid=(rows[2] - rows[1]) * scale,
        lvpw=(rows[3] - rows[2]) * scale,
        phase=phase,
        landmark_rows=rows,
        scanline=amm.scanline,
    )


def _provenance(
    study: EchoStudy,
    phase: str,
    cfg: PipelineConfig,
    detector: AMMDetector,
    contour_source: ContourSource | None,
    manual_override: bool,
) -> dict:
    return {
        "study_id": study.study_id,
        "phase": phase,
        "detector": getattr(detector, "name", type(detector).__name__),
        "contour_source": (
            None
            if contour_source is None
            else getattr(contour_source, "name", type(contour_source).__name__)
        ),
        "manual_override": manual_override,
        "config": {
            "samples": cfg.samples,
            "alpha": cfg.alpha,
            "half_length_scale": cfg.half_length_scale,
        },
    }


def _run_stage(stage: str, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except (LvammError, ValueError) as exc:
        if isinstance(exc, PipelineStageError):
            raise
        raise PipelineStageError(stage, str(exc)) from exc


def _require_anchor(study: EchoStudy, phase: str) -> int:
    try:
        anchor = study.anchor_for(phase)
    except ValueError as exc:
        raise PipelineStageError("anchor", str(exc)) from exc
    if anchor is None:
        raise PipelineStageError("anchor", f"study has no {phase} anchor frame")
    return anchor


def _finish(
    study: EchoStudy,
    phase: str,
    anchor: int,
    scanline: ScanLine,
    detector: AMMDetector,
    cfg: PipelineConfig,
) -> tuple[AMMImage, MeasurementSet]:
    amm = _run_stage("amm", extract_amm, study, scanline, cfg.samples)
    detection = _run_stage("detect", detector.detect, amm, anchor_column=anchor)
    measurements = _run_stage(
        "measure", measurements_from_detection, detection, amm, study.pixel_spacing, phase
    )
    return amm, measurements


def run_auto(
    study: EchoStudy,
    phase: str,
    contour_source: ContourSource,
    amm_detector: AMMDetector,
    cfg: PipelineConfig = PipelineConfig(),
) -> PipelineResult:
    """Fully automatic measurement run for one phase.

    Estimates the cavity contour, fits the long axis through the valid
    cavity-pair midpoints, places the scanline at the basal level
    perpendicular to the axis, reconstructs the M-mode image and measures.
    Any stage failure raises PipelineStageError carrying the stage name;
    nothing partial is returned.
    """
    phase = phase.upper()
    anchor = _require_anchor(study, phase)
    contour = _run_stage("contour", contour_source, study, phase)

    def _fit_axis() -> Line2D:
        mask = contour.valid_lvid_mask()
        midpoints = [m for m, ok in zip(lvid_midpoints(contour), mask) if ok]
        if len(midpoints) < 2:
            raise DegenerateGeometryError(
                f"only {len(midpoints)} valid cavity midpoints; need at least 2"
            )
        return fit_long_axis(midpoints, LongAxisFitConfig(cfg.alpha))

    axis = _run_stage("long_axis", _fit_axis)

    def _place() -> ScanLine:
        separation = sum(s.distance_to(p) for s, p in contour.basal_pairs) / 2.0
        return place_scanline(
            contour, axis, cfg.half_length_scale * separation, study.image_bounds
        )

    scanline = _run_stage("scanline", _place)
    amm, measurements = _finish(study, phase, anchor, scanline, amm_detector, cfg)
    return PipelineResult(
        contour=contour,
        long_axis=axis,
        scanline=scanline,
        amm=amm,
        measurements=measurements,
        provenance=_provenance(study, phase, cfg, amm_detector, contour_source, False),
    )


def run_with_scanline(
    study: EchoStudy,
    phase: str,
    scanline: ScanLine,
    amm_detector: AMMDetector,
    cfg: PipelineConfig = PipelineConfig(),
) -> PipelineResult:
    """Measurement run along a caller-supplied (reviewed) scanline.

    Identical to run_auto downstream of scanline placement; the
    perpendicularity guarantee is waived and the result is flagged as a
    manual override. Rows are ordered from scanline.p1, so the caller is
    responsible for anatomical orientation.
    """
    phase = phase.upper()
    anchor = _require_anchor(study, phase)
    amm, measurements = _finish(study, phase, anchor, scanline, amm_detector, cfg)
    return PipelineResult(
        contour=None,
        long_axis=None,
        scanline=scanline,
        amm=amm,
        measurements=measurements,
        provenance=_provenance(study, phase, cfg, amm_detector, None, True),
    )


@dataclass(frozen=True)
class StaticContourSource:
    """Contour source returning a fixed estimate (truth or file annotation)."""

    contour: ContourEstimate
    name: str = "static"

    def __call__(self, study: EchoStudy, phase: str) -> ContourEstimate:
        return self.contour
