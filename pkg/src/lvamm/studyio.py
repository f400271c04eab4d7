"""Study bundles on disk, plus the grayscale-PNG and raw-tensor formats.

A bundle is a directory with a JSON manifest, one 8-bit grayscale PNG per
frame, optional annotation documents (ground truth, weak labels) and a
results/ subdirectory for saved runs. Tensors (heatmaps, raw M-mode
images) are little-endian float32 binaries with a JSON sidecar carrying
the shape, so everything stays inspectable with standard tools.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np
from PIL import Image

from .amm import AMMImage, EchoStudy
from .detectors import WeakContourLabel
from .errors import BundleError
from .geometry import ContourEstimate, Line2D, Point2D, ScanLine
from .phantom import PhantomTruth
from .pipeline import MeasurementSet, PipelineResult

__all__ = [
    "StudyBundle",
    "MANIFEST_NAME",
    "encode_png",
    "write_png",
    "read_png",
    "write_tensor",
    "read_tensor",
    "save_study_bundle",
    "load_study_bundle",
    "discover_bundles",
    "save_amm_artifacts",
    "dump_json",
    "point_to_json",
    "point_from_json",
    "scanline_to_json",
    "scanline_from_json",
    "contour_to_json",
    "contour_from_json",
    "measurements_to_json",
    "measurements_from_json",
    "truth_to_json",
    "truth_from_json",
    "weak_label_to_json",
    "weak_label_from_json",
    "pipeline_result_to_json",
]

MANIFEST_NAME = "manifest.json"
_MANIFEST_SCHEMA = "lvamm-study-v1"
_TENSOR_SCHEMA = "lvamm-tensor-v1"
_TRUTH_SCHEMA = "lvamm-truth-v1"
_WEAK_SCHEMA = "lvamm-weak-labels-v1"
_RESULT_SCHEMA = "lvamm-result-v1"


def dump_json(obj: Any, path: Path) -> None:
    """Write JSON with sorted keys and a trailing newline (deterministic)."""
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# Images and tensors


def encode_png(image: np.ndarray) -> bytes:
    """Encode a [0, 1] float image as 8-bit grayscale PNG bytes, row 0 on top."""
    arr = np.asarray(image, dtype=float)
    if arr.ndim != 2:
        raise ValueError(f"expected a 2D image, got shape {arr.shape}")
    if arr.min() < 0.0 or arr.max() > 1.0:
        raise ValueError("image intensities must lie in [0, 1]")
    buffer = io.BytesIO()
    Image.fromarray(np.round(arr * 255.0).astype(np.uint8), mode="L").save(
        buffer, format="PNG"
    )
    return buffer.getvalue()


def write_png(path: Path, image: np.ndarray) -> None:
    """Save a [0, 1] float image as 8-bit grayscale PNG, row 0 at the top."""
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_png(image))


def read_png(path: Path) -> np.ndarray:
    """Load an 8-bit grayscale PNG as a [0, 1] float image."""
    with Image.open(path) as img:
        return np.asarray(img.convert("L"), dtype=float) / 255.0


def _tensor_sidecar(path: Path) -> Path:
    return path.with_name(path.name + ".json")


def write_tensor(path: Path, array: np.ndarray, normalized: bool | None = None) -> None:
    """Write a float tensor as little-endian float32 plus a JSON sidecar.

    `normalized` marks heatmap tensors that already sum to 1 (so readers
    skip softmax normalization); omit it for plain data tensors.
    """
    arr = np.ascontiguousarray(np.asarray(array, dtype="<f4"))
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(arr.tobytes())
    meta: dict[str, Any] = {
        "schema": _TENSOR_SCHEMA,
        "shape": list(arr.shape),
        "dtype": "float32",
        "byteorder": "little",
        "order": "C",
    }
    if normalized is not None:
        meta["normalized"] = normalized
    dump_json(meta, _tensor_sidecar(path))


def read_tensor(path: str | Path) -> tuple[np.ndarray, dict]:
    """Read a tensor written by write_tensor; returns (float64 array, meta)."""
    path = Path(path)
    sidecar = _tensor_sidecar(path)
    if not path.exists() or not sidecar.exists():
        raise BundleError(f"tensor file or sidecar missing for {path}")
    meta = json.loads(sidecar.read_text())
    if meta.get("schema") != _TENSOR_SCHEMA:
        raise BundleError(f"{sidecar}: unknown tensor schema {meta.get('schema')!r}")
    shape = tuple(int(n) for n in meta["shape"])
    raw = np.frombuffer(path.read_bytes(), dtype="<f4")
    if raw.size != int(np.prod(shape)):
        raise BundleError(
            f"{path}: {raw.size} values do not fill declared shape {shape}"
        )
    return raw.reshape(shape).astype(float), meta


# ---------------------------------------------------------------------------
# JSON codecs for domain objects


def point_to_json(p: Point2D) -> dict:
    return {"x_px": p.x, "y_px": p.y}


def point_from_json(obj: dict) -> Point2D:
    return Point2D(float(obj["x_px"]), float(obj["y_px"]))


def scanline_to_json(sl: ScanLine) -> dict:
    return {"p1": point_to_json(sl.p1), "p2": point_to_json(sl.p2)}


def scanline_from_json(obj: dict) -> ScanLine:
    return ScanLine(point_from_json(obj["p1"]), point_from_json(obj["p2"]))


def line_to_json(line: Line2D) -> dict:
    return {"point": point_to_json(line.point), "direction": point_to_json(line.direction)}


def _pair_to_json(pair: tuple[Point2D, Point2D]) -> list:
    return [point_to_json(pair[0]), point_to_json(pair[1])]


def _pair_from_json(obj: list) -> tuple[Point2D, Point2D]:
    return point_from_json(obj[0]), point_from_json(obj[1])


def contour_to_json(contour: ContourEstimate) -> dict:
    # Infinite EREs (failed sweep entries) serialize as null.
    ere = [
        [None if not math.isfinite(v) else float(v) for v in row]
        for row in contour.ere
    ]
    return {
        "lvid_pairs": [_pair_to_json(p) for p in contour.lvid_pairs],
        "basal_pairs": [_pair_to_json(p) for p in contour.basal_pairs],
        "ere_px": ere,
    }


def contour_from_json(obj: dict) -> ContourEstimate:
    ere = np.array(
        [[math.inf if v is None else float(v) for v in row] for row in obj["ere_px"]]
    )
    return ContourEstimate(
        tuple(_pair_from_json(p) for p in obj["lvid_pairs"]),
        tuple(_pair_from_json(p) for p in obj["basal_pairs"]),
        ere,
    )


def measurements_to_json(m: MeasurementSet) -> dict:
    return {
        "ivs_cm": m.ivs,
        "lvid_cm": m.lvid,
        "lvpw_cm": m.lvpw,
        "phase": m.phase,
        "landmark_rows": list(m.landmark_rows),
        "scanline": scanline_to_json(m.scanline),
    }


def measurements_from_json(obj: dict) -> MeasurementSet:
    return MeasurementSet(
        ivs=float(obj["ivs_cm"]),
        lvid=float(obj["lvid_cm"]),
        lvpw=float(obj["lvpw_cm"]),
        phase=obj["phase"],
        landmark_rows=tuple(float(r) for r in obj["landmark_rows"]),
        scanline=scanline_from_json(obj["scanline"]),
    )


def truth_to_json(truth: PhantomTruth) -> dict:
    return {
        "schema": _TRUTH_SCHEMA,
        "true_scanline": scanline_to_json(truth.true_scanline),
        "landmarks_ed": [point_to_json(p) for p in truth.landmarks_ed],
        "landmarks_es": [point_to_json(p) for p in truth.landmarks_es],
        "contour": contour_to_json(truth.true_contour),
        "measurements_ed": measurements_to_json(truth.measurements_ed),
        "measurements_es": measurements_to_json(truth.measurements_es),
    }


def truth_from_json(obj: dict) -> PhantomTruth:
    if obj.get("schema") != _TRUTH_SCHEMA:
        raise BundleError(f"unknown truth schema {obj.get('schema')!r}")
    return PhantomTruth(
        true_scanline=scanline_from_json(obj["true_scanline"]),
        landmarks_ed=tuple(point_from_json(p) for p in obj["landmarks_ed"]),
        landmarks_es=tuple(point_from_json(p) for p in obj["landmarks_es"]),
        true_contour=contour_from_json(obj["contour"]),
        measurements_ed=measurements_from_json(obj["measurements_ed"]),
        measurements_es=measurements_from_json(obj["measurements_es"]),
    )


def weak_label_to_json(label: WeakContourLabel) -> dict:
    return {
        "schema": _WEAK_SCHEMA,
        "source": label.source,
        "contour": contour_to_json(label.contour),
        "sweep": [scanline_to_json(sl) for sl in label.sweep_metadata],
    }


def weak_label_from_json(obj: dict) -> WeakContourLabel:
    if obj.get("schema") != _WEAK_SCHEMA:
        raise BundleError(f"unknown weak-label schema {obj.get('schema')!r}")
    return WeakContourLabel(
        contour=contour_from_json(obj["contour"]),
        sweep_metadata=tuple(scanline_from_json(s) for s in obj["sweep"]),
        source=obj["source"],
    )


def pipeline_result_to_json(result: PipelineResult) -> dict:
    """Serializable summary of a run (the raw M-mode tensor is saved separately)."""
    return {
        "schema": _RESULT_SCHEMA,
        "provenance": result.provenance,
        "scanline": scanline_to_json(result.scanline),
        "long_axis": None if result.long_axis is None else line_to_json(result.long_axis),
        "contour": None if result.contour is None else contour_to_json(result.contour),
        "measurements": measurements_to_json(result.measurements),
        "amm": {
            "rows": result.amm.rows,
            "cols": result.amm.cols,
            "sample_spacing_px": result.amm.sample_spacing,
        },
    }


# ---------------------------------------------------------------------------
# Bundles


@dataclass(frozen=True, eq=False)
class StudyBundle:
    """A study loaded from disk together with its annotations."""

    directory: Path
    manifest: dict
    study: EchoStudy
    truth: PhantomTruth | None
    weak_labels: WeakContourLabel | None

    @property
    def study_id(self) -> str:
        return self.study.study_id

    @property
    def results_dir(self) -> Path:
        return self.directory / "results"


def save_study_bundle(
    study: EchoStudy,
    directory: Path,
    truth: PhantomTruth | None = None,
    weak_labels: WeakContourLabel | None = None,
) -> Path:
    """Materialize a study as a bundle directory; returns the manifest path."""
    directory = Path(directory)
    frame_names = []
    for t in range(study.n_frames):
        name = f"frames/frame_{t:04d}.png"
        write_png(directory / name, study.frames[t])
        frame_names.append(name)
    annotations: dict[str, str] = {}
    if truth is not None:
        annotations["truth"] = "annotations/truth.json"
        dump_json(truth_to_json(truth), directory / annotations["truth"])
    if weak_labels is not None:
        annotations["weak_labels"] = "annotations/weak_labels.json"
        dump_json(weak_label_to_json(weak_labels), directory / annotations["weak_labels"])
    manifest = {
        "schema": _MANIFEST_SCHEMA,
        "study_id": study.study_id,
        "pixel_spacing_cm_per_px": study.pixel_spacing,
        "anchor_ed": study.anchor_ed,
        "anchor_es": study.anchor_es,
        "frames": frame_names,
        "annotations": annotations,
    }
    manifest_path = directory / MANIFEST_NAME
    dump_json(manifest, manifest_path)
    return manifest_path


def load_study_bundle(directory: Path) -> StudyBundle:
    """Load and validate a bundle directory.

    Raises:
        BundleError: Missing manifest or frames, a frame-count mismatch
            between the manifest and the files present, or invalid
            manifest values.
    """
    directory = Path(directory)
    manifest_path = directory / MANIFEST_NAME
    if not manifest_path.exists():
        raise BundleError(f"no {MANIFEST_NAME} in {directory}")
    manifest = json.loads(manifest_path.read_text())
    if manifest.get("schema") != _MANIFEST_SCHEMA:
        raise BundleError(f"unknown manifest schema {manifest.get('schema')!r}")
    frame_names = manifest.get("frames", [])
    if not frame_names:
        raise BundleError(f"{directory}: manifest lists no frames")
    spacing = manifest.get("pixel_spacing_cm_per_px", 0.0)
    if not isinstance(spacing, (int, float)) or spacing <= 0:
        raise BundleError(f"{directory}: pixel_spacing_cm_per_px must be positive")

    frames = []
    for name in frame_names:
        path = directory / name
        if not path.exists():
            raise BundleError(f"{directory}: frame file {name} missing")
        frames.append(read_png(path))
    frames_dir = directory / Path(frame_names[0]).parent
    present = len(list(frames_dir.glob("*.png")))
    if present != len(frame_names):
        raise BundleError(
            f"{directory}: manifest lists {len(frame_names)} frames but "
            f"{present} image files are present"
        )

    try:
        study = EchoStudy(
            frames=np.stack(frames),
            pixel_spacing=float(spacing),
            anchor_ed=manifest.get("anchor_ed"),
            anchor_es=manifest.get("anchor_es"),
            study_id=manifest.get("study_id", directory.name),
        )
    except ValueError as exc:
        raise BundleError(f"{directory}: {exc}") from exc

    annotations = manifest.get("annotations", {})
    truth = None
    if "truth" in annotations:
        truth = truth_from_json(json.loads((directory / annotations["truth"]).read_text()))
    weak = None
    if "weak_labels" in annotations:
        weak = weak_label_from_json(
            json.loads((directory / annotations["weak_labels"]).read_text())
        )
    return StudyBundle(
        directory=directory, manifest=manifest, study=study, truth=truth, weak_labels=weak
    )


def discover_bundles(root: Path) -> list[Path]:
    """Bundle directories under `root` (or `root` itself), sorted by name."""
    root = Path(root)
    if (root / MANIFEST_NAME).exists():
        return [root]
    found = sorted(
        child for child in root.iterdir() if (child / MANIFEST_NAME).exists()
    )
    return found


def save_amm_artifacts(amm: AMMImage, stem: Path) -> None:
    """Write an M-mode image as both PNG and raw tensor next to `stem`."""
    write_png(stem.with_suffix(".png"), np.clip(amm.values, 0.0, 1.0))
    write_tensor(stem.with_suffix(".f32"), amm.values)
