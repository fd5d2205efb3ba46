"""Model kinds, hyperparameters, and the portable trained-model container."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from enum import Enum

import numpy as np

from ..errors import SingleClassData, TooFewSamples
from ..features import FeatureVector
from ..ingest import TrialLabel


class ModelKind(Enum):
    KERNEL_SVC = "kernel_svc"
    RANDOM_FOREST = "random_forest"
    GRADIENT_BOOST = "gradient_boost"
    EXTRA_TREES = "extra_trees"
    ISOLATION_FOREST = "isolation_forest"
    ONE_CLASS_SVM = "one_class_svm"


SUPERVISED_KINDS = (
    ModelKind.KERNEL_SVC,
    ModelKind.RANDOM_FOREST,
    ModelKind.GRADIENT_BOOST,
    ModelKind.EXTRA_TREES,
)
ANOMALY_KINDS = (ModelKind.ISOLATION_FOREST, ModelKind.ONE_CLASS_SVM)


@dataclass(frozen=True)
class HyperParams:
    """Defaults follow the common conventions of mainstream toolkits.

    ``gamma`` for the kernel methods is always 1/d where d is the feature
    count ("automatic" setting), computed at training time.
    """

    svc_c: float = 1.0
    svc_tol: float = 1e-3
    rf_trees: int = 100
    rf_max_depth: int = 2
    gb_estimators: int = 100
    gb_learning_rate: float = 0.1
    et_estimators: int = 100
    et_max_depth: int = 1
    iso_trees: int = 100
    iso_max_subsample: int = 256
    ocsvm_nu: float = 0.5
    rng_seed: int = 0

    def __post_init__(self) -> None:
        counts = (
            self.rf_trees,
            self.rf_max_depth,
            self.gb_estimators,
            self.et_estimators,
            self.et_max_depth,
            self.iso_trees,
            self.iso_max_subsample,
        )
        if any(c < 1 for c in counts):
            raise ValueError("tree counts and depths must be positive")
        if self.svc_c <= 0 or self.gb_learning_rate <= 0:
            raise ValueError("svc_c and gb_learning_rate must be positive")
        if not (0 < self.ocsvm_nu <= 1):
            raise ValueError("ocsvm_nu must lie in (0, 1]")


@dataclass
class TrainedModel:
    """Self-contained learner parameters plus provenance.

    ``params`` holds only JSON-portable structures (nested lists, floats,
    ints), so serialization cannot drift from the in-memory model.
    """

    kind: ModelKind
    hyperparams: dict
    registry_digest: str
    phase: str
    params: dict
    format_version: int = 1


def hyperparams_dict(hp: HyperParams) -> dict:
    return asdict(hp)


def labels_to_binary(dataset: list[FeatureVector]) -> np.ndarray:
    """Optimal -> 1, Suboptimal -> 0; unlabeled vectors are not trainable."""
    y = np.empty(len(dataset), dtype=np.int64)
    for i, vec in enumerate(dataset):
        if vec.label is TrialLabel.OPTIMAL:
            y[i] = 1
        elif vec.label is TrialLabel.SUBOPTIMAL:
            y[i] = 0
        else:
            raise SingleClassData("unlabeled vector in supervised training data")
    return y


def dataset_matrix(dataset: list[FeatureVector]) -> np.ndarray:
    if not dataset:
        raise TooFewSamples("empty dataset")
    return np.stack([vec.values for vec in dataset])


def require_both_classes(y: np.ndarray) -> None:
    if not (np.any(y == 1) and np.any(y == 0)):
        raise SingleClassData("supervised training needs at least one example per class")


def label_from_score(positive: bool) -> TrialLabel:
    return TrialLabel.OPTIMAL if positive else TrialLabel.SUBOPTIMAL
