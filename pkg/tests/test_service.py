from __future__ import annotations

import io
import json

import numpy as np
import pytest
from fastapi.testclient import TestClient
from PIL import Image

from lvamm.amm import EchoStudy, extract_amm
from lvamm.phantom import PhantomConfig, generate_phantom
from lvamm.service import ServiceOptions, create_app
from lvamm.studyio import save_study_bundle, scanline_from_json


@pytest.fixture()
def root(tmp_path):
    study, truth = generate_phantom(PhantomConfig(seed=1))
    save_study_bundle(study, tmp_path / study.study_id, truth=truth)
    black = EchoStudy(
        np.zeros_like(study.frames),
        study.pixel_spacing,
        study.anchor_ed,
        study.anchor_es,
        study_id="blank-0000",
    )
    save_study_bundle(black, tmp_path / black.study_id, truth=truth)
    return tmp_path


@pytest.fixture()
def client(root):
    return TestClient(create_app(root))


STUDY = "phantom-0001"


def _decode_png(content: bytes) -> np.ndarray:
    with Image.open(io.BytesIO(content)) as img:
        return np.asarray(img.convert("L"), dtype=float) / 255.0


def test_list_studies(client):
    payload = client.get("/api/studies").json()
    ids = [s["study_id"] for s in payload["studies"]]
    assert ids == ["blank-0000", STUDY]
    entry = payload["studies"][1]
    assert entry["n_frames"] == 16
    assert entry["pixel_spacing_cm_per_px"] == 0.05
    assert entry["reviewed"] == {"ED": False, "ES": False}


def test_unknown_study_and_phase_are_not_found(client):
    assert client.get("/api/studies/nope").status_code == 404
    assert client.post(f"/api/studies/{STUDY}/phases/mid/auto").status_code == 404
    assert client.get(f"/api/studies/{STUDY}/phases/ed/session").status_code == 404


def test_frame_endpoint_returns_png(client, root):
    response = client.get(f"/api/studies/{STUDY}/frames/0")
    assert response.status_code == 200
    assert response.headers["content-type"] == "image/png"
    decoded = _decode_png(response.content)
    study, _ = generate_phantom(PhantomConfig(seed=1))
    stored = np.round(study.frames[0] * 255.0) / 255.0
    assert np.max(np.abs(decoded - stored)) <= 1e-12
    assert client.get(f"/api/studies/{STUDY}/frames/99").status_code == 404


def test_auto_run_produces_view(client):
    view = client.post(f"/api/studies/{STUDY}/phases/ed/auto").json()
    assert view["study_id"] == STUDY
    assert view["phase"] == "ED"
    assert view["manual_override"] is False
    assert view["accepted"] is False
    assert set(view["measurements"]) == {"ivs_cm", "lvid_cm", "lvpw_cm"}
    assert len(view["landmark_rows"]) == 4
    assert len(view["landmarks_px"]) == 4
    assert view["contour"] is not None
    assert view["long_axis"] is not None
    session = client.get(f"/api/studies/{STUDY}/phases/ed/session").json()
    assert session == view


def test_put_same_scanline_reproduces_auto_measurements(client):
    auto = client.post(f"/api/studies/{STUDY}/phases/ed/auto").json()
    response = client.put(
        f"/api/studies/{STUDY}/phases/ed/scanline", json={"p1": auto["scanline"]["p1"], "p2": auto["scanline"]["p2"]}
    )
    assert response.status_code == 200
    manual = response.json()
    assert manual["measurements"] == auto["measurements"]
    assert manual["landmark_rows"] == auto["landmark_rows"]
    assert manual["manual_override"] is True
    assert manual["contour"] is None


def test_put_zero_length_scanline_is_validation_error(client):
    response = client.put(
        f"/api/studies/{STUDY}/phases/ed/scanline",
        json={"p1": {"x_px": 10.0, "y_px": 10.0}, "p2": {"x_px": 10.0, "y_px": 10.0}},
    )
    assert response.status_code == 422
    assert "distinct" in response.json()["detail"]


def test_put_malformed_body_rejected(client):
    response = client.put(
        f"/api/studies/{STUDY}/phases/ed/scanline", json={"p1": {"x_px": 1.0}}
    )
    assert response.status_code == 422


def test_detection_failure_is_conflict_with_stage(client):
    response = client.post("/api/studies/blank-0000/phases/ed/auto")
    assert response.status_code == 409
    assert response.json()["detail"]["stage"] == "long_axis"
    put = client.put(
        "/api/studies/blank-0000/phases/ed/scanline",
        json={"p1": {"x_px": 90.0, "y_px": 20.0}, "p2": {"x_px": 90.0, "y_px": 170.0}},
    )
    assert put.status_code == 409
    assert put.json()["detail"]["stage"] == "detect"


def test_amm_png_matches_extraction_within_quantization(client, root):
    view = client.post(f"/api/studies/{STUDY}/phases/ed/auto").json()
    response = client.get(f"/api/studies/{STUDY}/phases/ed/amm.png")
    assert response.status_code == 200
    decoded = _decode_png(response.content)
    bundle_study = __import__("lvamm.studyio", fromlist=["load_study_bundle"]).load_study_bundle(
        root / STUDY
    ).study
    scanline = scanline_from_json(view["scanline"])
    amm = extract_amm(bundle_study, scanline, 64)
    assert decoded.shape == amm.values.shape
    assert np.max(np.abs(decoded - amm.values)) <= 0.5 / 255.0 + 1e-9


def test_accept_persists_and_survives_reload(client, root):
    client.post(f"/api/studies/{STUDY}/phases/ed/auto")
    accepted = client.post(f"/api/studies/{STUDY}/phases/ed/accept").json()
    assert accepted["accepted"] is True
    session_file = root / STUDY / "results" / "session_ed.json"
    assert session_file.exists()
    assert (root / STUDY / "results" / "amm_ed.png").exists()
    listed = client.get("/api/studies").json()["studies"]
    assert [s for s in listed if s["study_id"] == STUDY][0]["reviewed"]["ED"] is True

    reloaded = TestClient(create_app(root))
    again = reloaded.get(f"/api/studies/{STUDY}/phases/ed/session")
    assert again.status_code == 200
    assert again.json() == accepted
    listed = reloaded.get("/api/studies").json()["studies"]
    assert [s for s in listed if s["study_id"] == STUDY][0]["reviewed"]["ED"] is True


def test_accept_without_session_is_not_found(client):
    assert client.post(f"/api/studies/{STUDY}/phases/es/accept").status_code == 404


def test_adjusted_scanline_updates_measurements_and_amm(client, root):
    auto = client.post(f"/api/studies/{STUDY}/phases/ed/auto").json()
    p1 = dict(auto["scanline"]["p1"])
    p2 = dict(auto["scanline"]["p2"])
    p1["x_px"] += 3.0
    p2["x_px"] += 3.0
    moved = client.put(
        f"/api/studies/{STUDY}/phases/ed/scanline", json={"p1": p1, "p2": p2}
    ).json()
    assert moved["manual_override"] is True
    assert moved["scanline"]["p1"]["x_px"] == p1["x_px"]
    # Still a valid measurement on the translated line.
    assert moved["measurements"]["lvid_cm"] > 0
    # The M-mode image now tracks the adjusted scanline.
    from lvamm.studyio import load_study_bundle

    decoded = _decode_png(client.get(f"/api/studies/{STUDY}/phases/ed/amm.png").content)
    study = load_study_bundle(root / STUDY).study
    amm = extract_amm(study, scanline_from_json(moved["scanline"]), 64)
    assert np.max(np.abs(decoded - amm.values)) <= 0.5 / 255.0 + 1e-9


def test_api_measurements_agree_with_cli_output(root, tmp_path):
    from lvamm.cli import main

    out = tmp_path / "cli-out"
    code = main(
        [
            "run",
            "--input",
            str(root / STUDY),
            "--out",
            str(out),
            "--phase",
            "ed",
            "--detector",
            "profile",
            "--contour",
            "weak",
        ]
    )
    assert code == 0
    cli_result = json.loads((out / "results" / f"{STUDY}_ed.json").read_text())
    client = TestClient(create_app(root))
    api_view = client.post(f"/api/studies/{STUDY}/phases/ed/auto").json()
    assert api_view["measurements"]["ivs_cm"] == cli_result["measurements"]["ivs_cm"]
    assert api_view["measurements"]["lvid_cm"] == cli_result["measurements"]["lvid_cm"]
    assert api_view["measurements"]["lvpw_cm"] == cli_result["measurements"]["lvpw_cm"]
    assert api_view["scanline"] == cli_result["scanline"]


def test_service_options_truth_contour(root):
    client = TestClient(create_app(root, ServiceOptions(contour="truth")))
    view = client.post(f"/api/studies/{STUDY}/phases/ed/auto").json()
    assert view["measurements"]["lvid_cm"] == pytest.approx(4.6, abs=0.1)
