"""HTTP review service: browse studies, run the pipeline, adjust scanlines.

The service is the backend of the review workflow: it exposes study
bundles, triggers automatic runs, accepts replacement scanlines (which
re-run the measurement downstream of placement), serves frame and M-mode
images as PNG, and persists accepted results into the bundle. All
measurement numbers come from the pipeline module; the service performs
no measurement math of its own.

Geometry in request and response bodies is in pixels (keys suffixed
_px), measurements in centimeters (keys suffixed _cm).
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException
from fastapi.responses import Response
from pydantic import BaseModel

from .amm import amm_row_to_bmode, extract_amm
from .detectors import (
    OracleAMMDetector,
    ProfileAMMDetector,
    SweepConfig,
    WeakLabelContourSource,
)
from .errors import LvammError, PipelineStageError
from .geometry import Point2D, ScanLine
from .pipeline import (
    PHASES,
    PipelineConfig,
    PipelineResult,
    StaticContourSource,
    run_auto,
    run_with_scanline,
)
from .studyio import (
    StudyBundle,
    contour_to_json,
    discover_bundles,
    dump_json,
    encode_png,
    line_to_json,
    load_study_bundle,
    point_to_json,
    scanline_from_json,
    scanline_to_json,
    write_tensor,
)

__all__ = ["ServiceOptions", "create_app"]


@dataclass(frozen=True)
class ServiceOptions:
    """Pipeline wiring used for every run triggered through the API."""

    detector: str = "profile"
    contour: str = "weak"
    samples: int = 64
    alpha: float = 1.0
    n_lv: int = 20
    sweep_fraction: float = 0.6
    half_length_scale: float = 1.2
    profile_window: int = 3
    profile_threshold: float = 0.5
    oracle_noise: float = 0.0
    seed: int = 0
    ui_dir: Path | None = None


class PointPayload(BaseModel):
    x_px: float
    y_px: float


class ScanlinePayload(BaseModel):
    p1: PointPayload
    p2: PointPayload


@dataclass
class SessionState:
    """Latest reviewed state for one (study, phase)."""

    study_id: str
    phase: str
    scanline: ScanLine
    view: dict
    accepted: bool


def _session_file(bundle: StudyBundle, phase: str) -> Path:
    return bundle.results_dir / f"session_{phase.lower()}.json"


class ServiceStore:
    """Bundles, sessions and per-(study, phase) mutation locks."""

    def __init__(self, root: Path, options: ServiceOptions) -> None:
        self.options = options
        self.bundles: dict[str, StudyBundle] = {}
        for directory in discover_bundles(root):
            bundle = load_study_bundle(directory)
            self.bundles[bundle.study_id] = bundle
        self.sessions: dict[tuple[str, str], SessionState] = {}
        self._locks: dict[tuple[str, str], threading.Lock] = {}
        self._master = threading.Lock()
        self._load_persisted()

    def _load_persisted(self) -> None:
        for bundle in self.bundles.values():
            for phase in PHASES:
                path = _session_file(bundle, phase)
                if not path.exists():
                    continue
                view = json.loads(path.read_text())
                self.sessions[(bundle.study_id, phase)] = SessionState(
                    study_id=bundle.study_id,
                    phase=phase,
                    scanline=scanline_from_json(view["scanline"]),
                    view=view,
                    accepted=bool(view.get("accepted", False)),
                )

    def lock(self, study_id: str, phase: str) -> threading.Lock:
        with self._master:
            return self._locks.setdefault((study_id, phase), threading.Lock())

    def bundle(self, study_id: str) -> StudyBundle:
        if study_id not in self.bundles:
            raise HTTPException(status_code=404, detail=f"unknown study {study_id!r}")
        return self.bundles[study_id]

    def pipeline_config(self) -> PipelineConfig:
        return PipelineConfig(
            samples=self.options.samples,
            alpha=self.options.alpha,
            half_length_scale=self.options.half_length_scale,
        )

    def detector(self, bundle: StudyBundle, phase: str):
        if self.options.detector == "oracle":
            if bundle.truth is None:
                raise PipelineStageError(
                    "detect", "oracle detector requires a ground-truth annotation"
                )
            return OracleAMMDetector(
                bundle.truth, phase, self.options.oracle_noise, self.options.seed
            )
        return ProfileAMMDetector(
            self.options.profile_window, self.options.profile_threshold
        )

    def contour_source(self, bundle: StudyBundle, detector):
        if self.options.contour == "truth":
            if bundle.truth is None:
                raise PipelineStageError(
                    "contour", "truth contour requires a ground-truth annotation"
                )
            return StaticContourSource(bundle.truth.true_contour, name="truth")
        if bundle.truth is None:
            raise PipelineStageError(
                "contour", "weak-label contour needs basal pairs from the truth annotation"
            )
        return WeakLabelContourSource(
            per_sl_detector=detector,
            basal_pairs=bundle.truth.true_contour.basal_pairs,
            sweep=SweepConfig(
                n_lv=self.options.n_lv,
                band_fraction=self.options.sweep_fraction,
                samples=self.options.samples,
                half_length_scale=self.options.half_length_scale,
            ),
        )


def _view_from_result(result: PipelineResult, accepted: bool) -> dict:
    rows = result.measurements.landmark_rows
    landmarks = [amm_row_to_bmode(result.amm, r) for r in rows]
    m = result.measurements
    return {
        "study_id": result.provenance["study_id"],
        "phase": result.provenance["phase"],
        "scanline": scanline_to_json(result.scanline),
        "manual_override": result.provenance["manual_override"],
        "measurements": {"ivs_cm": m.ivs, "lvid_cm": m.lvid, "lvpw_cm": m.lvpw},
        "landmark_rows": list(rows),
        "landmarks_px": [point_to_json(p) for p in landmarks],
        "contour": None if result.contour is None else contour_to_json(result.contour),
        "long_axis": None if result.long_axis is None else line_to_json(result.long_axis),
        "amm": {
            "rows": result.amm.rows,
            "cols": result.amm.cols,
            "sample_spacing_px": result.amm.sample_spacing,
        },
        "accepted": accepted,
    }


def _domain_error(exc: LvammError) -> HTTPException:
    if isinstance(exc, PipelineStageError):
        return HTTPException(
            status_code=409, detail={"stage": exc.stage, "reason": exc.reason}
        )
    return HTTPException(status_code=422, detail=str(exc))


def _phase_or_404(phase: str) -> str:
    key = phase.upper()
    if key not in PHASES:
        raise HTTPException(status_code=404, detail=f"unknown phase {phase!r}")
    return key


def create_app(root: Path, options: ServiceOptions = ServiceOptions()) -> FastAPI:
    """Build the FastAPI application serving the bundles under `root`."""
    app = FastAPI(title="lvamm review service")
    store = ServiceStore(Path(root), options)
    app.state.store = store

    def _study_summary(bundle: StudyBundle) -> dict:
        reviewed = {
            phase: (
                (bundle.study_id, phase) in store.sessions
                and store.sessions[(bundle.study_id, phase)].accepted
            )
            for phase in PHASES
        }
        return {
            "study_id": bundle.study_id,
            "n_frames": bundle.study.n_frames,
            "height": bundle.study.frames.shape[1],
            "width": bundle.study.frames.shape[2],
            "pixel_spacing_cm_per_px": bundle.study.pixel_spacing,
            "anchor_ed": bundle.study.anchor_ed,
            "anchor_es": bundle.study.anchor_es,
            "has_truth": bundle.truth is not None,
            "reviewed": reviewed,
        }

    @app.get("/api/studies")
    def list_studies() -> dict:
        return {
            "studies": [
                _study_summary(store.bundles[sid]) for sid in sorted(store.bundles)
            ]
        }

    @app.get("/api/studies/{study_id}")
    def get_study(study_id: str) -> dict:
        return _study_summary(store.bundle(study_id))

    @app.get("/api/studies/{study_id}/frames/{index}")
    def get_frame(study_id: str, index: int) -> Response:
        bundle = store.bundle(study_id)
        if not 0 <= index < bundle.study.n_frames:
            raise HTTPException(status_code=404, detail=f"no frame {index}")
        return Response(
            content=encode_png(bundle.study.frames[index]), media_type="image/png"
        )

    def _session_or_404(study_id: str, phase: str) -> SessionState:
        store.bundle(study_id)
        key = (study_id, _phase_or_404(phase))
        if key not in store.sessions:
            raise HTTPException(
                status_code=404, detail=f"no session for {study_id}/{key[1]}; run auto first"
            )
        return store.sessions[key]

    @app.post("/api/studies/{study_id}/phases/{phase}/auto")
    def run_auto_endpoint(study_id: str, phase: str) -> dict:
        bundle = store.bundle(study_id)
        key = _phase_or_404(phase)
        with store.lock(study_id, key):
            try:
                detector = store.detector(bundle, key)
                source = store.contour_source(bundle, detector)
                result = run_auto(
                    bundle.study, key, source, detector, store.pipeline_config()
                )
            except LvammError as exc:
                raise _domain_error(exc) from exc
            view = _view_from_result(result, accepted=False)
            store.sessions[(study_id, key)] = SessionState(
                study_id, key, result.scanline, view, accepted=False
            )
            return view

    @app.get("/api/studies/{study_id}/phases/{phase}/session")
    def get_session(study_id: str, phase: str) -> dict:
        return _session_or_404(study_id, phase).view

    @app.get("/api/studies/{study_id}/phases/{phase}/scanline")
    def get_scanline(study_id: str, phase: str) -> dict:
        session = _session_or_404(study_id, phase)
        return {
            "scanline": session.view["scanline"],
            "manual_override": session.view["manual_override"],
        }

    @app.put("/api/studies/{study_id}/phases/{phase}/scanline")
    def put_scanline(study_id: str, phase: str, payload: ScanlinePayload) -> dict:
        bundle = store.bundle(study_id)
        key = _phase_or_404(phase)
        try:
            scanline = ScanLine(
                Point2D(payload.p1.x_px, payload.p1.y_px),
                Point2D(payload.p2.x_px, payload.p2.y_px),
            )
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        with store.lock(study_id, key):
            try:
                detector = store.detector(bundle, key)
                result = run_with_scanline(
                    bundle.study, key, scanline, detector, store.pipeline_config()
                )
            except LvammError as exc:
                raise _domain_error(exc) from exc
            view = _view_from_result(result, accepted=False)
            store.sessions[(study_id, key)] = SessionState(
                study_id, key, scanline, view, accepted=False
            )
            return view

    @app.get("/api/studies/{study_id}/phases/{phase}/amm.png")
    def get_amm_png(study_id: str, phase: str) -> Response:
        session = _session_or_404(study_id, phase)
        bundle = store.bundle(study_id)
        amm = extract_amm(bundle.study, session.scanline, store.options.samples)
        return Response(
            content=encode_png(np.clip(amm.values, 0.0, 1.0)), media_type="image/png"
        )

    @app.post("/api/studies/{study_id}/phases/{phase}/accept")
    def accept(study_id: str, phase: str) -> dict:
        bundle = store.bundle(study_id)
        key = _phase_or_404(phase)
        with store.lock(study_id, key):
            session = _session_or_404(study_id, key)
            view = dict(session.view)
            view["accepted"] = True
            store.sessions[(study_id, key)] = SessionState(
                study_id, key, session.scanline, view, accepted=True
            )
            dump_json(view, _session_file(bundle, key))
            amm = extract_amm(bundle.study, session.scanline, store.options.samples)
            stem = bundle.results_dir / f"amm_{key.lower()}"
            write_tensor(stem.with_suffix(".f32"), amm.values)
            (stem.with_suffix(".png")).write_bytes(
                encode_png(np.clip(amm.values, 0.0, 1.0))
            )
            return view

    if options.ui_dir is not None and Path(options.ui_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=str(options.ui_dir), html=True), name="ui")

    return app
