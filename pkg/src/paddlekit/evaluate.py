"""Cross-validated evaluation, metric tables, and permutation importance.

Supervised kinds run stratified k-fold with all out-of-fold predictions
pooled into one confusion matrix.  One-class kinds train once on the
optimal-labeled vectors and score the whole dataset (flagged = predicted
suboptimal): the evaluated-optimal counts behind the published anomaly
tables exceed any held-out partition of the per-phase dataset, so training
strokes were scored there too.

Every ratio with a zero denominator is reported as absent, never as 0, and
each metric's standard error is the binomial sqrt(m(1-m)/n) with n the
total number of evaluated samples.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .channels import IMPORTANCE_GROUPS, Device
from .errors import FoldClassCollapse, RegistryMismatch, TooFewSamples
from .features import (
    FeatureRegistry,
    FeatureVector,
    dataset_to_table,
    restrict_dataset,
)
from .ingest import TrialLabel
from .models import (
    ANOMALY_KINDS,
    SUPERVISED_KINDS,
    HyperParams,
    ModelKind,
    TrainedModel,
    anomaly_score_batch,
    predict_batch,
    train,
)
from .models.base import dataset_matrix, labels_to_binary
from .segment import PHASES, Phase

DEFAULT_KFOLD = 5


@dataclass(frozen=True)
class ConfusionMatrix:
    """Counts with Optimal as the positive class."""

    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0

    @property
    def n(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    def merged(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        return ConfusionMatrix(
            self.tp + other.tp, self.fp + other.fp, self.fn + other.fn, self.tn + other.tn
        )

    def as_dict(self) -> dict[str, int]:
        return {"tp": self.tp, "fp": self.fp, "fn": self.fn, "tn": self.tn}


@dataclass(frozen=True)
class MetricValue:
    mean: float
    se: float


@dataclass(frozen=True)
class MetricSet:
    accuracy: MetricValue | None
    sensitivity: MetricValue | None
    specificity: MetricValue | None
    ppv: MetricValue | None
    npv: MetricValue | None
    f_score: MetricValue | None
    n_evaluated: int

    METRIC_NAMES = ("accuracy", "sensitivity", "specificity", "ppv", "npv", "f_score")

    def as_dict(self) -> dict:
        out: dict = {"n_evaluated": self.n_evaluated}
        for name in self.METRIC_NAMES:
            value: MetricValue | None = getattr(self, name)
            out[name] = None if value is None else {"mean": value.mean, "se": value.se}
        return out


def _metric(numerator: float, denominator: float, n: int) -> MetricValue | None:
    if denominator == 0:
        return None
    m = numerator / denominator
    return MetricValue(m, math.sqrt(m * (1.0 - m) / n))


def compute_metrics(cm: ConfusionMatrix) -> MetricSet:
    """Six metrics with binomial standard errors over n evaluated samples."""
    n = cm.n
    if n < 1:
        raise ValueError("confusion matrix is empty")
    sens = _metric(cm.tp, cm.tp + cm.fn, n)
    ppv = _metric(cm.tp, cm.tp + cm.fp, n)
    f_score = None
    if sens is not None and ppv is not None and (sens.mean + ppv.mean) > 0:
        f = 2.0 * ppv.mean * sens.mean / (ppv.mean + sens.mean)
        f_score = MetricValue(f, math.sqrt(f * (1.0 - f) / n))
    return MetricSet(
        accuracy=_metric(cm.tp + cm.tn, n, n),
        sensitivity=sens,
        specificity=_metric(cm.tn, cm.tn + cm.fp, n),
        ppv=ppv,
        npv=_metric(cm.tn, cm.tn + cm.fn, n),
        f_score=f_score,
        n_evaluated=n,
    )


def stratified_folds(y01: np.ndarray, k: int, seed: int) -> np.ndarray:
    """Fold index per sample; per-fold class counts stay within one sample
    of an even split for each class."""
    n = y01.size
    if n < k:
        raise TooFewSamples(f"{n} samples cannot fill {k} folds")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    fold = np.empty(n, dtype=np.intp)
    offset = 0  # continue the cycle across classes so every fold is used
    for cls in (1, 0):
        members = perm[y01[perm] == cls]
        fold[members] = (offset + np.arange(members.size)) % k
        offset += members.size
    return fold


def _pool_supervised(
    kind: ModelKind,
    dataset: list[FeatureVector],
    registry: FeatureRegistry,
    hp: HyperParams,
    fold: np.ndarray,
    k: int,
) -> ConfusionMatrix:
    X = dataset_matrix(dataset)
    y = labels_to_binary(dataset)
    for f in range(k):
        train_y = y[fold != f]
        if not (np.any(train_y == 1) and np.any(train_y == 0)):
            raise FoldClassCollapse(f"training fold {f} lost a class")

    cm = ConfusionMatrix()
    for f in range(k):
        train_set = [v for v, fi in zip(dataset, fold) if fi != f]
        test_idx = np.flatnonzero(fold == f)
        if test_idx.size == 0:
            continue
        model = train(kind, train_set, registry, hp)
        labels, _ = predict_batch(model, X[test_idx], registry)
        predicted = np.array([lab is TrialLabel.OPTIMAL for lab in labels], dtype=bool)
        actual = y[test_idx] == 1
        cm = cm.merged(
            ConfusionMatrix(
                tp=int(np.sum(predicted & actual)),
                fp=int(np.sum(predicted & ~actual)),
                fn=int(np.sum(~predicted & actual)),
                tn=int(np.sum(~predicted & ~actual)),
            )
        )
    return cm


def _pool_anomaly(
    kind: ModelKind,
    dataset: list[FeatureVector],
    registry: FeatureRegistry,
    hp: HyperParams,
) -> ConfusionMatrix:
    X = dataset_matrix(dataset)
    y = labels_to_binary(dataset)
    model = train(kind, dataset, registry, hp)  # keeps optimal vectors only
    _, flags = anomaly_score_batch(model, X, registry)
    predicted = ~flags  # flagged anomalies count as predicted-suboptimal
    actual = y == 1
    return ConfusionMatrix(
        tp=int(np.sum(predicted & actual)),
        fp=int(np.sum(predicted & ~actual)),
        fn=int(np.sum(~predicted & actual)),
        tn=int(np.sum(~predicted & ~actual)),
    )


def kfold_pooled_eval(
    kind: ModelKind,
    dataset: list[FeatureVector],
    registry: FeatureRegistry,
    hp: HyperParams | None = None,
    k: int = DEFAULT_KFOLD,
    seed: int = 0,
) -> ConfusionMatrix:
    """Pooled out-of-fold confusion matrix (n_evaluated = len(dataset))."""
    hp = hp or HyperParams()
    if len(dataset) < k:
        raise TooFewSamples(f"{len(dataset)} samples cannot fill {k} folds")
    if kind in ANOMALY_KINDS:
        return _pool_anomaly(kind, dataset, registry, hp)
    y = labels_to_binary(dataset)
    fold = stratified_folds(y, k, seed)
    return _pool_supervised(kind, dataset, registry, hp, fold, k)


@dataclass
class EvalReport:
    seed: int
    k: int
    dataset_digest: str
    cells: dict[tuple[str, str], dict] = field(default_factory=dict)
    device_reports: dict[str, "EvalReport"] = field(default_factory=dict)
    importance: "ImportanceResult | None" = None

    def cell(self, phase: Phase, kind_or_name: ModelKind | str) -> dict:
        name = kind_or_name.value if isinstance(kind_or_name, ModelKind) else kind_or_name
        return self.cells[(phase.value, name)]

    def metrics(self, phase: Phase, kind_or_name: ModelKind | str) -> MetricSet:
        return self.cell(phase, kind_or_name)["metrics"]

    def as_dict(self) -> dict:
        doc: dict = {
            "v": 1,
            "seed": self.seed,
            "k": self.k,
            "dataset_digest": self.dataset_digest,
            "cells": {
                f"{phase}/{row}": {
                    "confusion": cell["cm"].as_dict(),
                    "metrics": cell["metrics"].as_dict(),
                }
                for (phase, row), cell in sorted(self.cells.items())
            },
        }
        if self.device_reports:
            doc["devices"] = {
                name: report.as_dict() for name, report in sorted(self.device_reports.items())
            }
        if self.importance is not None:
            doc["importance"] = self.importance.as_dict()
        return doc

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), sort_keys=True, indent=2)

    def digest(self) -> str:
        payload = json.dumps(self.as_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def dataset_digest(
    datasets: dict[Phase, list[FeatureVector]], registry: FeatureRegistry
) -> str:
    table = dataset_to_table(datasets, registry)
    return hashlib.sha256(table.encode("utf-8")).hexdigest()


def evaluate_suite(
    datasets: dict[Phase, list[FeatureVector]],
    registry: FeatureRegistry,
    kinds: tuple[ModelKind, ...] = SUPERVISED_KINDS + ANOMALY_KINDS,
    hp: HyperParams | None = None,
    k: int = DEFAULT_KFOLD,
    seed: int = 0,
    jobs: int = 1,
) -> EvalReport:
    """One MetricSet per (phase, kind); every supervised cell of a phase
    shares the same fold assignment.

    ``jobs`` caps worker threads: (phase, kind) cells evaluate independently
    and the report assembles identically regardless of completion order.
    """
    hp = hp or HyperParams()
    report = EvalReport(seed=seed, k=k, dataset_digest=dataset_digest(datasets, registry))

    folds = {}
    for phase in PHASES:
        dataset = datasets[phase]
        if len(dataset) < k:
            raise TooFewSamples(f"{phase.value}: {len(dataset)} samples for k={k}")
        folds[phase] = stratified_folds(labels_to_binary(dataset), k, seed)

    def cell(phase: Phase, kind: ModelKind) -> ConfusionMatrix:
        if kind in ANOMALY_KINDS:
            return _pool_anomaly(kind, datasets[phase], registry, hp)
        return _pool_supervised(kind, datasets[phase], registry, hp, folds[phase], k)

    tasks = [(phase, kind) for phase in PHASES for kind in kinds]
    if jobs > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=jobs) as pool:
            matrices = list(pool.map(lambda t: cell(*t), tasks))
    else:
        matrices = [cell(*t) for t in tasks]

    for (phase, kind), cm in zip(tasks, matrices):
        report.cells[(phase.value, kind.value)] = {
            "cm": cm,
            "metrics": compute_metrics(cm),
        }
    return report


DEVICE_LOCATIONS = {
    "left_wrist": Device.LEFT_WATCH,
    "right_wrist": Device.RIGHT_WATCH,
    "right_bicep": Device.PHONE,
}


def evaluate_by_device(
    datasets: dict[Phase, list[FeatureVector]],
    registry: FeatureRegistry,
    device: Device,
    kind: ModelKind = ModelKind.EXTRA_TREES,
    hp: HyperParams | None = None,
    k: int = DEFAULT_KFOLD,
    seed: int = 0,
) -> EvalReport:
    """Re-evaluate with features restricted to one device's channels."""
    sub_registry = registry.restricted_to_device(device)
    sub_datasets = {
        phase: restrict_dataset(vectors, registry, sub_registry)
        for phase, vectors in datasets.items()
    }
    return evaluate_suite(sub_datasets, sub_registry, (kind,), hp, k, seed)


def evaluate_all_devices(
    datasets: dict[Phase, list[FeatureVector]],
    registry: FeatureRegistry,
    kind: ModelKind = ModelKind.EXTRA_TREES,
    hp: HyperParams | None = None,
    k: int = DEFAULT_KFOLD,
    seed: int = 0,
) -> dict[str, EvalReport]:
    return {
        name: evaluate_by_device(datasets, registry, device, kind, hp, k, seed)
        for name, device in DEVICE_LOCATIONS.items()
    }


@dataclass
class ImportanceResult:
    """Per-feature accuracy drops plus the seven-group aggregation."""

    features: list[tuple[str, float]]  # (feature name, mean accuracy drop), sorted desc
    groups: list[tuple[str, float]]
    baseline_accuracy: float
    repeats: int

    def as_dict(self) -> dict:
        return {
            "baseline_accuracy": self.baseline_accuracy,
            "repeats": self.repeats,
            "features": [{"feature": f, "importance": v} for f, v in self.features],
            "groups": [{"group": g, "importance": v} for g, v in self.groups],
        }

    def to_table(self) -> str:
        lines = ["feature,importance"]
        lines += [f"{name},{value!r}" for name, value in self.features]
        lines.append("")
        lines.append("group,importance")
        lines += [f"{name},{value!r}" for name, value in self.groups]
        return "\n".join(lines) + "\n"


def permutation_importance(
    model: TrainedModel,
    dataset: list[FeatureVector],
    registry: FeatureRegistry,
    repeats: int = 10,
    seed: int = 0,
) -> ImportanceResult:
    """Mean accuracy drop when one feature column is shuffled, averaged over
    ``repeats`` independent shuffles per column."""
    if repeats < 1:
        raise ValueError("repeats must be positive")
    if registry.digest != model.registry_digest:
        raise RegistryMismatch("dataset registry does not match the model")

    X = dataset_matrix(dataset)
    y = labels_to_binary(dataset)

    def accuracy(matrix: np.ndarray) -> float:
        labels, _ = predict_batch(model, matrix, registry)
        predicted = np.array([lab is TrialLabel.OPTIMAL for lab in labels])
        return float(np.mean(predicted == (y == 1)))

    baseline = accuracy(X)
    drops = np.empty(len(registry))
    work = X.copy()
    for col in range(len(registry)):
        original = work[:, col].copy()
        total = 0.0
        for r in range(repeats):
            rng = np.random.default_rng([seed, col, r])
            work[:, col] = original[rng.permutation(original.size)]
            total += baseline - accuracy(work)
        work[:, col] = original
        drops[col] = total / repeats

    order = sorted(range(len(registry)), key=lambda i: (-drops[i], i))
    features = [(registry.names[i], float(drops[i])) for i in order]

    groups = []
    for name, (device, sensor) in IMPORTANCE_GROUPS.items():
        member = [
            i
            for i, (ch, _) in enumerate(registry.entries)
            if ch.device is device and ch.sensor is sensor
        ]
        if member:
            groups.append((name, float(np.mean(drops[member]))))
    groups.sort(key=lambda pair: -pair[1])

    return ImportanceResult(features, groups, baseline, repeats)
