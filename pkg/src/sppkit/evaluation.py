"""Detector evaluation: exact ROC curves, AUC, and detection probability at
a fixed false-alarm rate, pooled over every time-frequency bin supplied.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ShapeMismatchError, SingleClassError
from .targets import LabelMatrix, SppMatrix


@dataclass
class RocCurve:
    p_fa: np.ndarray  # ascending, starts at 0, ends at 1
    p_d: np.ndarray
    thresholds: np.ndarray  # +inf for the (0, 0) point


@dataclass
class MetricsReport:
    estimator: str
    dataset: str
    config_fingerprint: str
    auc: float
    pd_at_pfa05: float
    params: int
    macs_per_frame: int
    curve: RocCurve
    num_scores: int


def roc_curve(scores, labels) -> RocCurve:
    """Exact ROC by descending-score sweep; tied scores share one point."""
    scores = np.asarray(scores, dtype=np.float64).ravel()
    labels = np.asarray(labels).ravel()
    if scores.shape != labels.shape:
        raise ShapeMismatchError(f"{scores.shape} scores vs {labels.shape} labels")
    positives = int(np.sum(labels == 1))
    negatives = int(np.sum(labels == 0))
    if positives == 0 or negatives == 0:
        raise SingleClassError(
            f"need both classes, got {positives} positives / {negatives} negatives"
        )
    order = np.argsort(-scores, kind="stable")
    sorted_scores = scores[order]
    sorted_labels = labels[order] == 1
    # last index of each run of tied scores
    boundary = np.nonzero(np.diff(sorted_scores))[0]
    idx = np.concatenate([boundary, [len(sorted_scores) - 1]])
    true_pos = np.cumsum(sorted_labels)[idx]
    false_pos = (idx + 1) - true_pos
    p_fa = np.concatenate([[0.0], false_pos / negatives])
    p_d = np.concatenate([[0.0], true_pos / positives])
    thresholds = np.concatenate([[np.inf], sorted_scores[idx]])
    return RocCurve(p_fa=p_fa, p_d=p_d, thresholds=thresholds)


def auc(curve: RocCurve) -> float:
    """Trapezoidal integral of p_d over p_fa."""
    return float(np.trapezoid(curve.p_d, curve.p_fa))


def pd_at_pfa(curve: RocCurve, pfa: float = 0.05) -> float:
    """Detection probability at the requested false-alarm rate.

    An exact hit on a curve point returns that point's p_d (the first one
    when several share the same p_fa); otherwise p_d is interpolated
    linearly between the bracketing points.
    """
    if not 0.0 <= pfa <= 1.0:
        raise ValueError(f"pfa must be in [0, 1], got {pfa}")
    x = curve.p_fa
    y = curve.p_d
    exact = np.nonzero(x == pfa)[0]
    if exact.size:
        return float(y[exact[0]])
    left = int(np.searchsorted(x, pfa)) - 1  # largest index with x < pfa
    right = left + 1
    t = (pfa - x[left]) / (x[right] - x[left])
    return float(y[left] + t * (y[right] - y[left]))


def evaluate(
    pairs: list[tuple[SppMatrix, LabelMatrix]],
    *,
    estimator: str,
    dataset: str,
    config_fingerprint: str = "",
    params: int = 0,
    macs_per_frame: int = 0,
    pfa: float = 0.05,
) -> MetricsReport:
    """Pool every T-F bin of every utterance into one score/label sequence."""
    if not pairs:
        raise ValueError("need at least one (scores, labels) pair")
    for spp, labels in pairs:
        if spp.values.shape != labels.values.shape:
            raise ShapeMismatchError(
                f"scores {spp.values.shape} vs labels {labels.values.shape}"
            )
    scores = np.concatenate([spp.values.ravel() for spp, _ in pairs])
    labels = np.concatenate([lab.values.ravel() for _, lab in pairs])
    curve = roc_curve(scores, labels)
    return MetricsReport(
        estimator=estimator,
        dataset=dataset,
        config_fingerprint=config_fingerprint,
        auc=auc(curve),
        pd_at_pfa05=pd_at_pfa(curve, pfa),
        params=params,
        macs_per_frame=macs_per_frame,
        curve=curve,
        num_scores=int(scores.size),
    )


def write_roc_csv(curve: RocCurve, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["threshold", "p_fa", "p_d"])
        for t, fa, d in zip(curve.thresholds, curve.p_fa, curve.p_d):
            writer.writerow([repr(float(t)), repr(float(fa)), repr(float(d))])


def read_roc_csv(path) -> RocCurve:
    with Path(path).open("r", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != ["threshold", "p_fa", "p_d"]:
            raise ValueError(f"{path}: unexpected ROC header {header}")
        rows = [(float(t), float(fa), float(d)) for t, fa, d in reader]
    thresholds, p_fa, p_d = (np.asarray(col) for col in zip(*rows))
    return RocCurve(p_fa=p_fa, p_d=p_d, thresholds=thresholds)


def save_report(report: MetricsReport, json_path, roc_csv_path) -> None:
    """Write the metrics JSON and the ROC points CSV side by side."""
    json_path = Path(json_path)
    roc_csv_path = Path(roc_csv_path)
    write_roc_csv(report.curve, roc_csv_path)
    doc = {
        "estimator": report.estimator,
        "dataset": report.dataset,
        "config_fingerprint": report.config_fingerprint,
        "auc": report.auc,
        "pd_at_pfa05": report.pd_at_pfa05,
        "params": report.params,
        "macs_per_frame": report.macs_per_frame,
        "num_scores": report.num_scores,
        "roc_csv": roc_csv_path.name,
    }
    json_path.parent.mkdir(parents=True, exist_ok=True)
    json_path.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def load_report(json_path) -> MetricsReport:
    json_path = Path(json_path)
    doc = json.loads(json_path.read_text(encoding="utf-8"))
    required = {
        "estimator", "dataset", "config_fingerprint", "auc", "pd_at_pfa05",
        "params", "macs_per_frame", "num_scores", "roc_csv",
    }
    missing = required - set(doc)
    if missing:
        raise ValueError(f"{json_path}: report is missing fields {sorted(missing)}")
    curve = read_roc_csv(json_path.parent / doc["roc_csv"])
    return MetricsReport(
        estimator=str(doc["estimator"]),
        dataset=str(doc["dataset"]),
        config_fingerprint=str(doc["config_fingerprint"]),
        auc=float(doc["auc"]),
        pd_at_pfa05=float(doc["pd_at_pfa05"]),
        params=int(doc["params"]),
        macs_per_frame=int(doc["macs_per_frame"]),
        curve=curve,
        num_scores=int(doc["num_scores"]),
    )
