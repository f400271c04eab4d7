"""Command-line interface: phantom generation, batch measurement runs, service.

All outputs (result documents, reports, images, tensors) are written
deterministically: rerunning with identical flags and seeds reproduces the
files byte for byte.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

import numpy as np

from .amm import amm_row_to_bmode
from .detectors import (
    OracleAMMDetector,
    ProfileAMMDetector,
    SweepConfig,
    WeakLabelContourSource,
    generate_weak_labels,
)
from .errors import LvammError
from .geometry import Point2D
from .metrics import EvalRecord, build_report
from .phantom import PhantomConfig, generate_phantom, random_config
from .pipeline import PipelineConfig, StaticContourSource, run_auto
from .studyio import (
    StudyBundle,
    contour_from_json,
    discover_bundles,
    dump_json,
    load_study_bundle,
    pipeline_result_to_json,
    save_amm_artifacts,
    save_study_bundle,
    weak_label_to_json,
)

__all__ = ["main", "cli_phantom", "cli_run"]


class _StudySkip(LvammError):
    """Raised when a study cannot be processed with the requested options."""


def _add_phantom_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--count", type=int, default=1, help="number of phantoms")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument(
        "--randomize",
        action="store_true",
        help="draw geometry per phantom from the seed instead of fixed defaults",
    )
    parser.add_argument("--height", type=int, default=192)
    parser.add_argument("--width", type=int, default=192)
    parser.add_argument("--pixel-spacing", type=float, default=0.05, metavar="CM_PER_PX")
    parser.add_argument("--frames", type=int, default=16, help="frames per cycle (even)")
    parser.add_argument("--axis-angle", type=float, default=20.0, metavar="DEG")
    parser.add_argument("--anchor-x", type=float, default=None, metavar="PX")
    parser.add_argument("--anchor-y", type=float, default=None, metavar="PX")
    for name, default in (
        ("ivs-ed", 1.0),
        ("lvid-ed", 4.6),
        ("lvpw-ed", 0.95),
        ("ivs-es", 1.3),
        ("lvid-es", 3.2),
        ("lvpw-es", 1.25),
    ):
        parser.add_argument(f"--{name}", type=float, default=default, metavar="CM")
    parser.add_argument("--wall-intensity", type=float, default=0.9)
    parser.add_argument("--cavity-intensity", type=float, default=0.05)
    parser.add_argument("--noise-sigma", type=float, default=0.0)


def _phantom_config(args: argparse.Namespace, seed: int) -> PhantomConfig:
    anchor_x = args.width / 2.0 if args.anchor_x is None else args.anchor_x
    anchor_y = args.height / 2.0 if args.anchor_y is None else args.anchor_y
    return PhantomConfig(
        height=args.height,
        width=args.width,
        pixel_spacing=args.pixel_spacing,
        frames_per_cycle=args.frames,
        axis_angle_deg=args.axis_angle,
        basal_anchor=Point2D(anchor_x, anchor_y),
        ivs_ed=args.ivs_ed,
        lvid_ed=args.lvid_ed,
        lvpw_ed=args.lvpw_ed,
        ivs_es=args.ivs_es,
        lvid_es=args.lvid_es,
        lvpw_es=args.lvpw_es,
        wall_intensity=args.wall_intensity,
        cavity_intensity=args.cavity_intensity,
        noise_sigma=args.noise_sigma,
        seed=seed,
    )


def cli_phantom(args: argparse.Namespace) -> int:
    """Materialize one or more phantom studies as bundles on disk."""
    out = Path(args.out)
    rng = np.random.default_rng(args.seed)
    for i in range(args.count):
        if args.randomize:
            cfg = random_config(rng, noise_sigma=args.noise_sigma)
        else:
            cfg = _phantom_config(args, args.seed + i)
        study, truth = generate_phantom(cfg)
        directory = out if args.count == 1 else out / study.study_id
        save_study_bundle(study, directory, truth=truth)
        print(f"wrote {study.study_id} -> {directory}")
    return 0


def _add_run_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--input",
        action="append",
        required=True,
        help="study bundle directory or a directory of bundles (repeatable)",
    )
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--phase", choices=("ed", "es", "both"), default="both")
    parser.add_argument("--detector", choices=("profile", "oracle"), default="profile")
    parser.add_argument(
        "--contour", choices=("weak", "truth", "file"), default="weak"
    )
    parser.add_argument(
        "--contour-file",
        default="annotations/weak_labels.json",
        help="bundle-relative contour annotation for --contour file",
    )
    parser.add_argument(
        "--save-weak-labels",
        action="store_true",
        help="store the computed weak contour labels back into each bundle",
    )
    parser.add_argument("--n-lv", type=int, default=20, help="swept scanlines")
    parser.add_argument("--samples", type=int, default=64, help="M-mode rows (P)")
    parser.add_argument("--alpha", type=float, default=1.0, help="ridge regularization")
    parser.add_argument(
        "--loss-lambda", type=float, default=1.0, help="coordinate-loss weight (recorded)"
    )
    parser.add_argument(
        "--ere-epsilon", type=float, default=1.0, help="inverse-ERE stabilizer (recorded)"
    )
    parser.add_argument("--sweep-fraction", type=float, default=0.6)
    parser.add_argument("--half-length-scale", type=float, default=1.2)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--oracle-noise", type=float, default=0.0, metavar="PX")
    parser.add_argument("--profile-window", type=int, default=3)
    parser.add_argument("--profile-threshold", type=float, default=0.5)
    parser.add_argument("--sdr-max-cm", type=float, default=0.2)
    parser.add_argument("--sdr-steps", type=int, default=21)


def _detector_for(args: argparse.Namespace, bundle: StudyBundle, phase: str):
    if args.detector == "oracle":
        if bundle.truth is None:
            raise _StudySkip("oracle detector requires a ground-truth annotation")
        return OracleAMMDetector(bundle.truth, phase, args.oracle_noise, args.seed)
    return ProfileAMMDetector(args.profile_window, args.profile_threshold)


def _saved_weak_label_source(
    args: argparse.Namespace, bundle: StudyBundle, detector, phase: str
) -> StaticContourSource:
    """Compute weak labels once, persist them as an annotation, and reuse them."""
    if bundle.truth is None:
        raise _StudySkip("weak-label contour needs basal pairs from the truth annotation")
    anchor = bundle.study.anchor_for(phase)
    if anchor is None:
        raise _StudySkip(f"study has no {phase} anchor frame")
    label = generate_weak_labels(
        bundle.study,
        anchor,
        detector,
        bundle.truth.true_contour.basal_pairs,
        SweepConfig(
            n_lv=args.n_lv,
            band_fraction=args.sweep_fraction,
            samples=args.samples,
            half_length_scale=args.half_length_scale,
        ),
    )
    key = f"weak_labels_{phase.lower()}"
    relative = f"annotations/{key}.json"
    dump_json(weak_label_to_json(label), bundle.directory / relative)
    manifest_path = bundle.directory / "manifest.json"
    manifest = json.loads(manifest_path.read_text())
    manifest.setdefault("annotations", {})[key] = relative
    dump_json(manifest, manifest_path)
    return StaticContourSource(label.contour, name="weak-labels")


def _contour_source_for(args: argparse.Namespace, bundle: StudyBundle, detector):
    if args.contour == "truth":
        if bundle.truth is None:
            raise _StudySkip("truth contour requires a ground-truth annotation")
        return StaticContourSource(bundle.truth.true_contour, name="truth")
    if args.contour == "file":
        path = bundle.directory / args.contour_file
        if not path.exists():
            raise _StudySkip(f"contour annotation {args.contour_file} not found")
        payload = json.loads(path.read_text())
        contour = contour_from_json(
            payload["contour"] if "contour" in payload else payload
        )
        return StaticContourSource(contour, name="file")
    if bundle.truth is None:
        raise _StudySkip("weak-label contour needs basal pairs from the truth annotation")
    return WeakLabelContourSource(
        per_sl_detector=detector,
        basal_pairs=bundle.truth.true_contour.basal_pairs,
        sweep=SweepConfig(
            n_lv=args.n_lv,
            band_fraction=args.sweep_fraction,
            samples=args.samples,
            half_length_scale=args.half_length_scale,
        ),
    )


def cli_run(args: argparse.Namespace) -> int:
    """Run the automatic pipeline over all studies and write artifacts."""
    bundles: list[Path] = []
    for root in args.input:
        root_path = Path(root)
        if not root_path.exists():
            print(f"error: input {root} does not exist", file=sys.stderr)
            return 2
        bundles.extend(discover_bundles(root_path))
    if not bundles:
        print("error: no study bundles found under the given inputs", file=sys.stderr)
        return 2

    phases = {"ed": ("ED",), "es": ("ES",), "both": ("ED", "ES")}[args.phase]
    cfg = PipelineConfig(
        samples=args.samples,
        alpha=args.alpha,
        half_length_scale=args.half_length_scale,
    )
    out = Path(args.out)
    results_dir = out / "results"
    records = []
    summary = []
    failed = 0

    for directory in bundles:
        bundle = load_study_bundle(directory)
        for phase in phases:
            entry = {"study_id": bundle.study_id, "phase": phase, "status": "ok", "error": None}
            try:
                detector = _detector_for(args, bundle, phase)
                if args.contour == "weak" and args.save_weak_labels:
                    source = _saved_weak_label_source(args, bundle, detector, phase)
                else:
                    source = _contour_source_for(args, bundle, detector)
                result = run_auto(bundle.study, phase, source, detector, cfg)
            except LvammError as exc:
                entry["status"] = "failed"
                entry["error"] = str(exc)
                failed += 1
                summary.append(entry)
                print(f"{bundle.study_id} {phase}: FAILED ({exc})", file=sys.stderr)
                continue

            stem = results_dir / f"{bundle.study_id}_{phase.lower()}"
            dump_json(pipeline_result_to_json(result), stem.with_suffix(".json"))
            save_amm_artifacts(result.amm, Path(str(stem) + "_amm"))
            m = result.measurements
            print(
                f"{bundle.study_id} {phase}: ivs={m.ivs:.3f} lvid={m.lvid:.3f} "
                f"lvpw={m.lvpw:.3f} cm"
            )
            summary.append(entry)

            if bundle.truth is not None:
                rows = result.measurements.landmark_rows
                records.append(
                    EvalRecord(
                        study_id=bundle.study_id,
                        phase=phase,
                        pred_landmarks=tuple(
                            amm_row_to_bmode(result.amm, r) for r in rows
                        ),
                        true_landmarks=bundle.truth.landmarks(phase),
                        pred_measurements=result.measurements,
                        true_measurements=bundle.truth.measurements(phase),
                        pred_scanline=result.scanline,
                        true_scanline=bundle.truth.true_scanline,
                        pixel_spacing=bundle.study.pixel_spacing,
                    )
                )

    dump_json(
        {
            "studies": summary,
            "config": {
                "phase": args.phase,
                "detector": args.detector,
                "contour": args.contour,
                "n_lv": args.n_lv,
                "samples": args.samples,
                "alpha": args.alpha,
                "loss_lambda": args.loss_lambda,
                "ere_epsilon": args.ere_epsilon,
                "sweep_fraction": args.sweep_fraction,
                "half_length_scale": args.half_length_scale,
                "seed": args.seed,
            },
        },
        out / "summary.json",
    )

    if records:
        thresholds = [
            args.sdr_max_cm * i / (args.sdr_steps - 1) if args.sdr_steps > 1 else 0.0
            for i in range(args.sdr_steps)
        ]
        report = build_report(records, thresholds)
        dump_json(report.to_dict(), out / "report.json")
        with (out / "report.csv").open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerows(report.to_csv_rows())
        print(f"report: {out / 'report.json'}")
    else:
        print("no ground-truth annotations found; skipping evaluation report")

    return 1 if failed else 0


def _add_serve_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--root", required=True, help="directory of study bundles")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument(
        "--port",
        type=int,
        default=int(os.environ.get("LVAMM_PORT", "8000")),
        help="port (defaults to LVAMM_PORT or 8000)",
    )
    parser.add_argument("--detector", choices=("profile", "oracle"), default="profile")
    parser.add_argument("--contour", choices=("weak", "truth"), default="weak")
    parser.add_argument("--samples", type=int, default=64)
    parser.add_argument("--alpha", type=float, default=1.0)
    parser.add_argument("--n-lv", type=int, default=20)
    parser.add_argument("--sweep-fraction", type=float, default=0.6)
    parser.add_argument("--half-length-scale", type=float, default=1.2)
    parser.add_argument("--profile-window", type=int, default=3)
    parser.add_argument("--profile-threshold", type=float, default=0.5)
    parser.add_argument("--ui-dir", default=None, help="static UI directory to mount at /ui")


def cli_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import ServiceOptions, create_app

    app = create_app(
        Path(args.root),
        ServiceOptions(
            detector=args.detector,
            contour=args.contour,
            samples=args.samples,
            alpha=args.alpha,
            n_lv=args.n_lv,
            sweep_fraction=args.sweep_fraction,
            half_length_scale=args.half_length_scale,
            profile_window=args.profile_window,
            profile_threshold=args.profile_threshold,
            ui_dir=None if args.ui_dir is None else Path(args.ui_dir),
        ),
    )
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="lvamm",
        description="Left-ventricle linear measurements along virtual M-mode scanlines",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    phantom_parser = sub.add_parser("phantom", help="generate synthetic study bundles")
    _add_phantom_args(phantom_parser)
    phantom_parser.set_defaults(func=cli_phantom)
    run_parser = sub.add_parser("run", help="batch-measure studies and write reports")
    _add_run_args(run_parser)
    run_parser.set_defaults(func=cli_run)
    serve_parser = sub.add_parser("serve", help="start the review HTTP service")
    _add_serve_args(serve_parser)
    serve_parser.set_defaults(func=cli_serve)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
