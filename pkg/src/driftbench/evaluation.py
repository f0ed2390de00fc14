"""Weighted-AUPRC evaluation of source-trained predictors on target data.

The precision-recall machinery processes tied scores as one group (curve
points appear only at group boundaries) and integrates with step
interpolation, so average precision is exactly reproducible against a
brute-force prefix enumeration and invariant to any strictly increasing
transform of the scores.

A deliberately simple baseline predictor is included so the harness runs
end to end without an external model: logistic regression on per-channel
summary features (standardized with source statistics only), full-batch
gradient descent, zero init.  External model scores are ingested from a
record_id,score CSV instead.
"""

import csv
import math
import os
from dataclasses import dataclass, field

import numpy as np

from driftbench.datamodel import regularize, summarize_features
from driftbench.errors import (
    DegenerateDataError,
    PredictionCoverageError,
    SchemaError,
)
from driftbench.scenarios import SourceTargetPair, TaskSide

DEFAULT_STEP = 24.0
DEFAULT_HORIZON = 96.0
DEFAULT_EPOCHS = 500
DEFAULT_LEARNING_RATE = 0.1


def precision_recall_curve(scores, labels):
    """(recall, precision) points at descending-score tie-group boundaries."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if scores.shape != labels.shape:
        raise ValueError("scores and labels must have equal length")
    n_pos = int(labels.sum())
    if n_pos == 0:
        raise ValueError("need at least one positive label")

    order = np.argsort(-scores, kind="stable")
    s = scores[order]
    y = labels[order].astype(np.int64)
    # last index of each tie group
    boundary = np.flatnonzero(np.diff(s) != 0)
    ends = np.concatenate([boundary, [len(s) - 1]])
    tp = np.cumsum(y)[ends]
    pp = ends + 1
    recall = tp / n_pos
    precision = tp / pp
    return list(zip(recall.tolist(), precision.tolist()))


def average_precision(scores, labels) -> float:
    """Step-interpolated area under the PR curve:
    AP = sum_g (R_g - R_{g-1}) * P_g over tie groups."""
    curve = precision_recall_curve(scores, labels)
    ap = 0.0
    prev_r = 0.0
    for r, p in curve:
        ap += (r - prev_r) * p
        prev_r = r
    return float(ap)


def weighted_auprc(per_task) -> float:
    """Positive-support-weighted mean of per-task average precisions.
    A single task reduces to its own AP exactly (no rounding through the
    weighted mean)."""
    per_task = list(per_task)
    if not per_task:
        raise ValueError("need at least one task")
    total = sum(s for _, s in per_task)
    if total <= 0:
        raise ValueError("task supports must be positive")
    if len(per_task) == 1:
        return float(per_task[0][0])
    return float(sum(ap * s for ap, s in per_task) / total)


@dataclass(frozen=True)
class PredictionSet:
    scores: dict               # record id -> score (higher = more positive)
    origin: str = "imported"   # "baseline" or "imported"

    def __post_init__(self):
        for rid, v in self.scores.items():
            if not math.isfinite(v):
                raise SchemaError(f"record {rid}: non-finite score")


@dataclass
class BaselineModel:
    """Logistic regression over 6-per-channel summary features; weights[-1]
    is the bias.  Standardization statistics come from the source side only."""

    weights: np.ndarray
    feat_mean: np.ndarray
    feat_std: np.ndarray
    n_channels: int
    step: float
    horizon: float
    metadata: dict = field(default_factory=dict)


def featurize(dataset, step: float, horizon: float) -> np.ndarray:
    rows = [
        summarize_features(regularize(rec, step, horizon, dataset.n_channels))
        for rec in dataset.records
    ]
    return np.asarray(rows, dtype=np.float64)


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def train_baseline(side: TaskSide, epochs: int = DEFAULT_EPOCHS,
                   learning_rate: float = DEFAULT_LEARNING_RATE,
                   seed: int = 0) -> BaselineModel:
    """Full-batch gradient descent from a zero init; deterministic, order-free
    (gradients sum over all records), loss recorded per epoch."""
    step = side.step if side.step is not None else DEFAULT_STEP
    horizon = side.horizon if side.horizon is not None else DEFAULT_HORIZON
    y = np.asarray(side.labels, dtype=np.float64)
    if y.size == 0 or y.min() == y.max():
        raise DegenerateDataError("baseline training needs both classes present")
    x = featurize(side.dataset, step, horizon)
    if not np.all(np.isfinite(x)):
        raise DegenerateDataError("non-finite features in training data")

    mean = x.mean(axis=0)
    std = x.std(axis=0)
    std = np.where(std == 0, 1.0, std)
    xs = np.column_stack([(x - mean) / std, np.ones(len(x))])

    w = np.zeros(xs.shape[1])
    losses = []
    for _ in range(epochs):
        logits = xs @ w
        grad = xs.T @ (_sigmoid(logits) - y) / len(y)
        w = w - learning_rate * grad
        margin = np.where(y > 0.5, -(xs @ w), xs @ w)
        losses.append(float(np.mean(np.logaddexp(0.0, margin))))

    return BaselineModel(
        weights=w,
        feat_mean=mean,
        feat_std=std,
        n_channels=side.dataset.n_channels,
        step=step,
        horizon=horizon,
        metadata={
            "epochs": int(epochs),
            "learning_rate": float(learning_rate),
            "seed": int(seed),
            "loss_trace": losses,
        },
    )


def predict(model: BaselineModel, side: TaskSide) -> PredictionSet:
    """Linear logits (monotone in probability) under the trained model; the
    side's own sampling step is honored so rate shifts show through."""
    if side.dataset.n_channels != model.n_channels:
        raise ValueError(
            f"channel arity mismatch: model {model.n_channels}, data {side.dataset.n_channels}"
        )
    step = side.step if side.step is not None else model.step
    horizon = side.horizon if side.horizon is not None else model.horizon
    x = featurize(side.dataset, step, horizon)
    xs = np.column_stack([(x - model.feat_mean) / model.feat_std, np.ones(len(x))])
    logits = xs @ model.weights
    ids = side.dataset.record_ids()
    return PredictionSet(scores=dict(zip(ids, logits.tolist())), origin="baseline")


def export_predictions(predictions: PredictionSet, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("record_id,score\n")
        for rid in sorted(predictions.scores):
            fh.write(f"{rid},{predictions.scores[rid]!r}\n")


def import_predictions(path) -> PredictionSet:
    """Read a record_id,score CSV (header required)."""
    scores = {}
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["record_id", "score"]:
            raise SchemaError("predictions CSV header must be 'record_id,score'")
        for row in reader:
            if not row:
                continue
            if len(row) != 2:
                raise SchemaError(f"predictions row has {len(row)} fields, expected 2")
            rid, raw = row
            if rid in scores:
                raise SchemaError(f"record {rid}: duplicate id in predictions")
            try:
                val = float(raw)
            except ValueError as exc:
                raise SchemaError(f"record {rid}: bad score {raw!r}") from exc
            if not math.isfinite(val):
                raise SchemaError(f"record {rid}: non-finite score")
            scores[rid] = val
    return PredictionSet(scores=scores, origin="imported")


@dataclass
class EvalReport:
    per_task: list      # (task name, AP, positive support, prevalence)
    weighted: float
    n_source: int
    n_target: int
    origin: str
    config_echo: dict

    def to_dict(self) -> dict:
        return {
            "format": "driftbench-eval-report-v1",
            "per_task": [
                {"task": t, "ap": float(ap), "support": int(s), "prevalence": float(pr)}
                for t, ap, s, pr in self.per_task
            ],
            "weighted_auprc": float(self.weighted),
            "counts": {"n_source": self.n_source, "n_target": self.n_target},
            "origin": self.origin,
            "config_echo": self.config_echo,
        }

    def csv_row(self) -> dict:
        """Flat summary row for cross-scenario aggregation."""
        spec = self.config_echo.get("spec", {})
        transforms = self.config_echo.get("transforms", [])
        return {
            "scenario_kind": spec.get("kind", ""),
            "seed": spec.get("seed", ""),
            "origin": self.origin,
            "weighted_auprc": repr(float(self.weighted)),
            "target_prevalence": repr(float(self.per_task[0][3])),
            "target_support": self.per_task[0][2],
            "n_source": self.n_source,
            "n_target": self.n_target,
            "transforms": ";".join(t.get("kind", "") for t in transforms),
        }


def evaluate(pair: SourceTargetPair, predictions: PredictionSet) -> EvalReport:
    """Score the target side of a pair with the given predictions."""
    ids = pair.target.dataset.record_ids()
    missing = [rid for rid in ids if rid not in predictions.scores]
    if missing:
        raise PredictionCoverageError(missing)
    unknown = sorted(set(predictions.scores) - set(ids))
    if unknown:
        raise SchemaError(f"predictions carry ids not in the target: {unknown[:10]}")
    labels = np.asarray(pair.target.labels)
    if labels.sum() == 0:
        raise DegenerateDataError("no positive labels in target")
    scores = np.asarray([predictions.scores[rid] for rid in ids])
    ap = average_precision(scores, labels)
    support = int(labels.sum())
    prevalence = float(labels.mean())
    per_task = [("target", ap, support, prevalence)]
    return EvalReport(
        per_task=per_task,
        weighted=weighted_auprc([(ap, support)]),
        n_source=pair.source.n,
        n_target=pair.target.n,
        origin=predictions.origin,
        config_echo=pair.provenance,
    )


RUNS_CSV_FIELDS = (
    "scenario_kind", "seed", "origin", "weighted_auprc", "target_prevalence",
    "target_support", "n_source", "n_target", "transforms",
)


def append_runs_csv(report: EvalReport, path) -> None:
    """Append the report's summary row to an aggregation CSV; an identical
    existing row is not duplicated, so re-runs leave the file unchanged."""
    row = report.csv_row()
    line = ",".join(str(row[k]) for k in RUNS_CSV_FIELDS)
    header = ",".join(RUNS_CSV_FIELDS)
    existing = []
    if os.path.exists(path):
        with open(path, "r", encoding="utf-8") as fh:
            existing = [ln.rstrip("\n") for ln in fh]
    if not existing:
        existing = [header]
    if line in existing[1:]:
        return
    existing.append(line)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(existing) + "\n")
