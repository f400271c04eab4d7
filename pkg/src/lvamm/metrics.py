"""Evaluation metrics for measurement runs against ground truth.

Length metrics (MAE, MAPE) compare the three structure lengths; the
coordinate error (CE) compares landmark positions in cm; the success
detection rate (SDR) counts records whose cavity-length error stays under
a threshold; scanline quality is midpoint distance and angle difference
against the reference line. `build_report` aggregates everything as
mean +- std across a caller-supplied grouping (e.g. cross-validation
folds), defaulting to one group.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .geometry import Point2D, ScanLine, scanline_distance_angle
from .pipeline import MeasurementSet

__all__ = [
    "STRUCTURES",
    "EvalRecord",
    "MetricSummary",
    "EvalReport",
    "mae",
    "mape",
    "ce",
    "sdr",
    "pearson",
    "build_report",
]

STRUCTURES = ("ivs", "lvid", "lvpw")

# Landmark indices bounding each structure along the scanline; the overall
# coordinate error scores all four landmarks.
_CE_LANDMARKS = {
    "ivs": (0, 1),
    "lvid": (1, 2),
    "lvpw": (2, 3),
    "overall": (0, 1, 2, 3),
}


@dataclass(frozen=True, eq=False)
class EvalRecord:
    """Prediction/ground-truth pair for one study and phase.

    Landmarks are the four scanline points in B-mode pixel coordinates;
    pixel_spacing converts coordinate distances to cm.
    """

    study_id: str
    phase: str
    pred_landmarks: tuple[Point2D, Point2D, Point2D, Point2D]
    true_landmarks: tuple[Point2D, Point2D, Point2D, Point2D]
    pred_measurements: MeasurementSet
    true_measurements: MeasurementSet
    pred_scanline: ScanLine
    true_scanline: ScanLine
    pixel_spacing: float

    def __post_init__(self) -> None:
        if len(self.pred_landmarks) != 4 or len(self.true_landmarks) != 4:
            raise ValueError("exactly 4 predicted and 4 true landmarks required")
        if self.pixel_spacing <= 0:
            raise ValueError("pixel_spacing must be positive")


def _require_records(records: Sequence[EvalRecord]) -> None:
    if len(records) == 0:
        raise ValueError("need at least one record")


def _require_structure(structure: str, allowed: tuple[str, ...]) -> None:
    if structure not in allowed:
        raise ValueError(f"structure must be one of {allowed}, got {structure!r}")


def _length(measurements: MeasurementSet, structure: str) -> float:
    return getattr(measurements, structure)


def mae(records: Sequence[EvalRecord], structure: str = "overall") -> float:
    """Mean absolute length error in cm.

    For a single structure this is the mean over records of
    |predicted - true| length; "overall" averages the three structure
    errors per record before taking the mean.
    """
    _require_records(records)
    _require_structure(structure, STRUCTURES + ("overall",))
    names = STRUCTURES if structure == "overall" else (structure,)
    per_record = [
        np.mean(
            [
                abs(_length(r.pred_measurements, s) - _length(r.true_measurements, s))
                for s in names
            ]
        )
        for r in records
    ]
    return float(np.mean(per_record))


def mape(records: Sequence[EvalRecord], structure: str = "overall") -> float:
    """Mean absolute length error as a fraction of ground truth.

    Raises:
        ValueError: Any ground-truth length is zero.
    """
    _require_records(records)
    _require_structure(structure, STRUCTURES + ("overall",))
    names = STRUCTURES if structure == "overall" else (structure,)
    per_record = []
    for r in records:
        ratios = []
        for s in names:
            true_len = _length(r.true_measurements, s)
            if true_len == 0:
                raise ValueError(f"true {s} length is zero for study {r.study_id}")
            ratios.append(
                abs(_length(r.pred_measurements, s) - true_len) / true_len
            )
        per_record.append(np.mean(ratios))
    return float(np.mean(per_record))


def ce(records: Sequence[EvalRecord], structure: str = "overall") -> float:
    """Mean landmark coordinate error in cm.

    Each structure scores its two bounding landmarks; "overall" scores all
    four. Pixel distances are converted with each record's pixel spacing.
    """
    _require_records(records)
    _require_structure(structure, STRUCTURES + ("overall",))
    indices = _CE_LANDMARKS[structure]
    per_record = [
        np.mean(
            [
                r.pred_landmarks[i].distance_to(r.true_landmarks[i]) * r.pixel_spacing
                for i in indices
            ]
        )
        for r in records
    ]
    return float(np.mean(per_record))


def _lvid_error(record: EvalRecord) -> float:
    return abs(record.pred_measurements.lvid - record.true_measurements.lvid)


def sdr(records: Sequence[EvalRecord], threshold: float) -> float:
    """Fraction of records whose cavity-length error is within `threshold` cm."""
    _require_records(records)
    if threshold < 0:
        raise ValueError("threshold must be nonnegative")
    hits = sum(1 for r in records if _lvid_error(r) <= threshold)
    return hits / len(records)


def pearson(records: Sequence[EvalRecord], structure: str) -> float:
    """Sample Pearson correlation of predicted versus true lengths.

    "overall" pools the three structures.

    Raises:
        ValueError: Fewer than 2 records, or zero variance on either side.
    """
    _require_structure(structure, STRUCTURES + ("overall",))
    if len(records) < 2:
        raise ValueError("Pearson correlation needs at least 2 records")
    names = STRUCTURES if structure == "overall" else (structure,)
    preds = np.array(
        [_length(r.pred_measurements, s) for r in records for s in names]
    )
    trues = np.array(
        [_length(r.true_measurements, s) for r in records for s in names]
    )
    dp = preds - preds.mean()
    dt = trues - trues.mean()
    sp = float((dp**2).sum())
    st = float((dt**2).sum())
    if sp <= 0.0 or st <= 0.0:
        raise ValueError("zero variance; correlation undefined")
    return float((dp * dt).sum() / np.sqrt(sp * st))


@dataclass(frozen=True)
class MetricSummary:
    """Mean and population standard deviation across groups."""

    mean: float
    std: float


@dataclass(frozen=True, eq=False)
class EvalReport:
    """All metrics summarized across groups.

    Pearson entries are None when no group had enough varied records to
    define a correlation. sdr_curve pairs each threshold (cm) with its
    summary; values are nondecreasing in the threshold.
    """

    mae: dict[str, MetricSummary]
    mape: dict[str, MetricSummary]
    ce: dict[str, MetricSummary]
    sdr_curve: tuple[tuple[float, MetricSummary], ...]
    sl_distance: MetricSummary
    sl_angle: MetricSummary
    pearson: dict[str, MetricSummary | None]
    group_labels: tuple[str, ...]

    def to_dict(self) -> dict:
        def summary(s: MetricSummary | None) -> dict | None:
            return None if s is None else {"mean": s.mean, "std": s.std}

        return {
            "groups": list(self.group_labels),
            "mae_cm": {k: summary(v) for k, v in self.mae.items()},
            "mape": {k: summary(v) for k, v in self.mape.items()},
            "ce_cm": {k: summary(v) for k, v in self.ce.items()},
            "sl_distance_cm": summary(self.sl_distance),
            "sl_angle_deg": summary(self.sl_angle),
            "pearson": {k: summary(v) for k, v in self.pearson.items()},
            "sdr": [
                {"threshold_cm": t, "mean": s.mean, "std": s.std}
                for t, s in self.sdr_curve
            ],
        }

    def to_csv_rows(self) -> list[list[str]]:
        rows = [["metric", "structure", "threshold_cm", "mean", "std"]]

        def add(metric: str, structure: str, s: MetricSummary | None, thr: str = ""):
            if s is None:
                rows.append([metric, structure, thr, "", ""])
            else:
                rows.append([metric, structure, thr, repr(s.mean), repr(s.std)])

        for structure in STRUCTURES + ("overall",):
            add("mae_cm", structure, self.mae[structure])
        for structure in STRUCTURES + ("overall",):
            add("mape", structure, self.mape[structure])
        for structure in STRUCTURES + ("overall",):
            add("ce_cm", structure, self.ce[structure])
        add("sl_distance_cm", "", self.sl_distance)
        add("sl_angle_deg", "", self.sl_angle)
        for structure in STRUCTURES + ("overall",):
            add("pearson", structure, self.pearson[structure])
        for threshold, s in self.sdr_curve:
            add("sdr", "lvid", s, repr(threshold))
        return rows


def _summarize(values: Sequence[float]) -> MetricSummary:
    arr = np.asarray(values, dtype=float)
    return MetricSummary(float(arr.mean()), float(arr.std()))


def build_report(
    records: Sequence[EvalRecord],
    thresholds: Sequence[float],
    group_of: Callable[[EvalRecord], str] | None = None,
) -> EvalReport:
    """Aggregate every metric as mean +- std across groups.

    `group_of` maps a record to its group label (e.g. the fold); with the
    default, all records form a single group and every std is 0.
    Deterministic: groups are processed in sorted label order.
    """
    _require_records(records)
    if len(thresholds) == 0:
        raise ValueError("need at least one SDR threshold")
    groups: dict[str, list[EvalRecord]] = {}
    for record in records:
        label = "all" if group_of is None else group_of(record)
        groups.setdefault(label, []).append(record)
    labels = tuple(sorted(groups))
    grouped = [groups[label] for label in labels]

    def across(metric: Callable[[Sequence[EvalRecord]], float]) -> MetricSummary:
        return _summarize([metric(g) for g in grouped])

    mae_summary = {
        s: across(lambda g, s=s: mae(g, s)) for s in STRUCTURES + ("overall",)
    }
    mape_summary = {
        s: across(lambda g, s=s: mape(g, s)) for s in STRUCTURES + ("overall",)
    }
    ce_summary = {
        s: across(lambda g, s=s: ce(g, s)) for s in STRUCTURES + ("overall",)
    }
    sdr_curve = tuple(
        (float(t), across(lambda g, t=t: sdr(g, t))) for t in thresholds
    )

    def sl_mean(component: int) -> Callable[[Sequence[EvalRecord]], float]:
        def value(group: Sequence[EvalRecord]) -> float:
            return float(
                np.mean(
                    [
                        scanline_distance_angle(
                            r.pred_scanline, r.true_scanline, r.pixel_spacing
                        )[component]
                        for r in group
                    ]
                )
            )

        return value

    pearson_summary: dict[str, MetricSummary | None] = {}
    for structure in STRUCTURES + ("overall",):
        values = []
        for group in grouped:
            try:
                values.append(pearson(group, structure))
            except ValueError:
                continue
        pearson_summary[structure] = _summarize(values) if values else None

    return EvalReport(
        mae=mae_summary,
        mape=mape_summary,
        ce=ce_summary,
        sdr_curve=sdr_curve,
        sl_distance=across(sl_mean(0)),
        sl_angle=across(sl_mean(1)),
        pearson=pearson_summary,
        group_labels=labels,
    )
