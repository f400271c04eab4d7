from __future__ import annotations

import json
import math

import numpy as np
import pytest

from lvamm.detectors import OracleAMMDetector, ProfileAMMDetector, generate_weak_labels
from lvamm.errors import BundleError
from lvamm.phantom import PhantomConfig, generate_phantom
from lvamm.pipeline import StaticContourSource, run_auto
from lvamm.studyio import (
    contour_from_json,
    contour_to_json,
    discover_bundles,
    load_study_bundle,
    measurements_from_json,
    measurements_to_json,
    pipeline_result_to_json,
    read_png,
    read_tensor,
    save_study_bundle,
    truth_from_json,
    truth_to_json,
    weak_label_from_json,
    weak_label_to_json,
    write_png,
    write_tensor,
)


def test_png_round_trip_exact_for_quantized_values(tmp_path):
    rng = np.random.default_rng(0)
    image = rng.integers(0, 256, size=(12, 17)).astype(float) / 255.0
    path = tmp_path / "img.png"
    write_png(path, image)
    assert np.array_equal(read_png(path), image)


def test_png_quantization_error_bound(tmp_path):
    rng = np.random.default_rng(1)
    image = rng.uniform(size=(20, 20))
    path = tmp_path / "img.png"
    write_png(path, image)
    assert np.max(np.abs(read_png(path) - image)) <= 0.5 / 255.0 + 1e-12


def test_png_rejects_out_of_range(tmp_path):
    with pytest.raises(ValueError):
        write_png(tmp_path / "bad.png", np.full((4, 4), 1.5))


def test_tensor_round_trip(tmp_path):
    rng = np.random.default_rng(2)
    arr = rng.normal(size=(7, 5)).astype(np.float32)
    path = tmp_path / "t.f32"
    write_tensor(path, arr, normalized=False)
    loaded, meta = read_tensor(path)
    assert np.array_equal(loaded, arr.astype(float))
    assert meta["shape"] == [7, 5]
    assert meta["normalized"] is False


def test_tensor_errors(tmp_path):
    path = tmp_path / "t.f32"
    with pytest.raises(BundleError):
        read_tensor(path)  # nothing written
    write_tensor(path, np.zeros((3, 3)))
    sidecar = tmp_path / "t.f32.json"
    meta = json.loads(sidecar.read_text())
    meta["shape"] = [4, 4]
    sidecar.write_text(json.dumps(meta))
    with pytest.raises(BundleError):
        read_tensor(path)
    meta["schema"] = "something-else"
    sidecar.write_text(json.dumps(meta))
    with pytest.raises(BundleError):
        read_tensor(path)


def test_bundle_round_trip(tmp_path):
    cfg = PhantomConfig(noise_sigma=0.02, seed=5)
    study, truth = generate_phantom(cfg)
    save_study_bundle(study, tmp_path / "b", truth=truth)
    bundle = load_study_bundle(tmp_path / "b")
    assert bundle.study_id == study.study_id
    assert bundle.study.pixel_spacing == study.pixel_spacing
    assert bundle.study.anchor_ed == study.anchor_ed
    assert bundle.study.anchor_es == study.anchor_es
    assert bundle.study.frames.shape == study.frames.shape
    assert np.max(np.abs(bundle.study.frames - study.frames)) <= 0.5 / 255.0 + 1e-12
    # JSON floats round-trip exactly.
    assert bundle.truth.true_scanline == truth.true_scanline
    assert bundle.truth.landmarks_ed == truth.landmarks_ed
    assert bundle.truth.measurements_es.lvid == truth.measurements_es.lvid


def test_bundle_frame_count_mismatch(tmp_path):
    cfg = PhantomConfig()
    study, _ = generate_phantom(cfg)
    save_study_bundle(study, tmp_path / "b")
    extra = tmp_path / "b" / "frames" / "frame_9999.png"
    write_png(extra, np.zeros((4, 4)))
    with pytest.raises(BundleError):
        load_study_bundle(tmp_path / "b")
    extra.unlink()
    (tmp_path / "b" / "frames" / "frame_0000.png").unlink()
    with pytest.raises(BundleError):
        load_study_bundle(tmp_path / "b")


def test_bundle_manifest_validation(tmp_path):
    cfg = PhantomConfig()
    study, _ = generate_phantom(cfg)
    save_study_bundle(study, tmp_path / "b")
    manifest_path = tmp_path / "b" / "manifest.json"
    manifest = json.loads(manifest_path.read_text())
    manifest["pixel_spacing_cm_per_px"] = 0.0
    manifest_path.write_text(json.dumps(manifest))
    with pytest.raises(BundleError):
        load_study_bundle(tmp_path / "b")
    with pytest.raises(BundleError):
        load_study_bundle(tmp_path / "nowhere")


def test_contour_json_round_trip_with_infinite_ere():
    cfg = PhantomConfig()
    study, truth = generate_phantom(cfg)
    contour = truth.true_contour
    ere = np.array(contour.ere, copy=True)
    ere[3] = math.inf
    from lvamm.geometry import ContourEstimate

    tagged = ContourEstimate(contour.lvid_pairs, contour.basal_pairs, ere)
    payload = contour_to_json(tagged)
    assert payload["ere_px"][3] == [None, None]
    restored = contour_from_json(payload)
    assert math.isinf(restored.ere[3][0])
    assert restored.lvid_pairs == tagged.lvid_pairs


def test_weak_label_round_trip():
    cfg = PhantomConfig()
    study, truth = generate_phantom(cfg)
    label = generate_weak_labels(
        study,
        anchor=study.anchor_ed,
        per_sl_detector=OracleAMMDetector(truth, "ED"),
        basal_pairs=truth.true_contour.basal_pairs,
    )
    restored = weak_label_from_json(weak_label_to_json(label))
    assert restored.source == label.source
    assert restored.sweep_metadata == label.sweep_metadata
    assert restored.contour.lvid_pairs == label.contour.lvid_pairs


def test_measurements_json_round_trip():
    cfg = PhantomConfig()
    _, truth = generate_phantom(cfg)
    m = truth.measurements_ed
    restored = measurements_from_json(measurements_to_json(m))
    assert restored.ivs == m.ivs
    assert restored.landmark_rows == m.landmark_rows
    assert restored.scanline == m.scanline


def test_truth_json_round_trip_and_schema_check():
    cfg = PhantomConfig()
    _, truth = generate_phantom(cfg)
    payload = truth_to_json(truth)
    restored = truth_from_json(payload)
    assert restored.true_scanline == truth.true_scanline
    assert restored.measurements_ed.landmark_rows == truth.measurements_ed.landmark_rows
    bad = dict(payload)
    bad["schema"] = "v0"
    with pytest.raises(BundleError):
        truth_from_json(bad)


def test_discover_bundles(tmp_path):
    cfg = PhantomConfig()
    study, _ = generate_phantom(cfg)
    save_study_bundle(study, tmp_path / "root" / "b1")
    save_study_bundle(study, tmp_path / "root" / "b2")
    (tmp_path / "root" / "not_a_bundle").mkdir()
    found = discover_bundles(tmp_path / "root")
    assert [p.name for p in found] == ["b1", "b2"]
    assert discover_bundles(tmp_path / "root" / "b1") == [tmp_path / "root" / "b1"]
    empty = tmp_path / "empty"
    empty.mkdir()
    assert discover_bundles(empty) == []


def test_pipeline_result_serialization():
    cfg = PhantomConfig()
    study, truth = generate_phantom(cfg)
    result = run_auto(
        study,
        "ED",
        StaticContourSource(truth.true_contour, "truth"),
        ProfileAMMDetector(),
    )
    payload = pipeline_result_to_json(result)
    assert payload["schema"] == "lvamm-result-v1"
    assert payload["provenance"]["detector"] == "profile"
    assert payload["measurements"]["phase"] == "ED"
    assert payload["amm"]["rows"] == 64
    assert payload["long_axis"] is not None
    json.dumps(payload)  # fully JSON-serializable
