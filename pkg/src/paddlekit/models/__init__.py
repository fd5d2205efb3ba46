"""Training, scoring and serialization for the six learner kinds."""

from __future__ import annotations

import numpy as np

from ..errors import RegistryMismatch, SingleClassData
from ..features import FeatureRegistry, FeatureVector
from ..ingest import TrialLabel
from .base import (
    ANOMALY_KINDS,
    SUPERVISED_KINDS,
    HyperParams,
    ModelKind,
    TrainedModel,
    dataset_matrix,
    hyperparams_dict,
    label_from_score,
    labels_to_binary,
    require_both_classes,
)
from .io import load_model, save_model
from .isolation import fit_isolation_forest, isolation_scores
from .svm import fit_one_class_svm, fit_svc, one_class_decision, svc_decision
from .trees import (
    _depth1_arrays,
    _stump_arrays,
    fit_extra_trees,
    fit_gradient_boost,
    fit_random_forest,
    forest_vote_fraction,
    gradient_boost_margin,
)

__all__ = [
    "ANOMALY_KINDS",
    "SUPERVISED_KINDS",
    "HyperParams",
    "ModelKind",
    "TrainedModel",
    "anomaly_score",
    "anomaly_score_batch",
    "load_model",
    "predict",
    "predict_batch",
    "save_model",
    "train",
]


def _normal_class_matrix(dataset: list[FeatureVector]) -> np.ndarray:
    """One-class detectors learn the normal (optimal) class only."""
    labeled = [v for v in dataset if v.label is not TrialLabel.UNLABELED]
    if labeled:
        normal = [v for v in labeled if v.label is TrialLabel.OPTIMAL]
        if not normal:
            raise SingleClassData("one-class training needs optimal-labeled strokes")
        return dataset_matrix(normal)
    return dataset_matrix(dataset)


def train(
    kind: ModelKind,
    dataset: list[FeatureVector],
    registry: FeatureRegistry,
    hp: HyperParams | None = None,
    phase: str = "",
) -> TrainedModel:
    hp = hp or HyperParams()
    X = dataset_matrix(dataset)
    if X.shape[1] != len(registry):
        raise RegistryMismatch(
            f"vectors have {X.shape[1]} columns, registry defines {len(registry)}"
        )

    if kind in SUPERVISED_KINDS:
        y = labels_to_binary(dataset)
        require_both_classes(y)
        if kind is ModelKind.KERNEL_SVC:
            params = fit_svc(X, y, hp.svc_c, hp.svc_tol)
        elif kind is ModelKind.RANDOM_FOREST:
            params = {
                "trees": fit_random_forest(X, y, hp.rf_trees, hp.rf_max_depth, hp.rng_seed)
            }
        elif kind is ModelKind.GRADIENT_BOOST:
            params = fit_gradient_boost(X, y, hp.gb_estimators, hp.gb_learning_rate)
        else:
            params = {
                "trees": fit_extra_trees(X, y, hp.et_estimators, hp.et_max_depth, hp.rng_seed)
            }
    elif kind is ModelKind.ISOLATION_FOREST:
        params = fit_isolation_forest(
            _normal_class_matrix(dataset), hp.iso_trees, hp.iso_max_subsample, hp.rng_seed
        )
    else:
        params = fit_one_class_svm(_normal_class_matrix(dataset), hp.ocsvm_nu)

    return TrainedModel(
        kind=kind,
        hyperparams=hyperparams_dict(hp),
        registry_digest=registry.digest,
        phase=phase,
        params=params,
    )


def _check_registry(model: TrainedModel, registry: FeatureRegistry) -> None:
    if registry.digest != model.registry_digest:
        raise RegistryMismatch("feature registry digest does not match the model")


def predict_batch(
    model: TrainedModel, X: np.ndarray, registry: FeatureRegistry
) -> tuple[list[TrialLabel], np.ndarray]:
    """Labels plus scores: decision values for kernel machines, positive-class
    probability or vote fraction for the ensembles."""
    _check_registry(model, registry)
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if model.kind is ModelKind.KERNEL_SVC:
        scores = svc_decision(model.params, X)
        positive = scores > 0.0
    elif model.kind is ModelKind.GRADIENT_BOOST:
        if "_score_cache" not in model.__dict__:
            model.__dict__["_score_cache"] = _stump_arrays(model.params["stumps"])
        scores = 1.0 / (
            1.0 + np.exp(-gradient_boost_margin(model.params, X, model.__dict__["_score_cache"]))
        )
        positive = scores > 0.5
    elif model.kind in (ModelKind.RANDOM_FOREST, ModelKind.EXTRA_TREES):
        if "_score_cache" not in model.__dict__:
            model.__dict__["_score_cache"] = _depth1_arrays(model.params["trees"])
        scores = forest_vote_fraction(
            model.params["trees"], X, model.__dict__["_score_cache"]
        )
        positive = scores > 0.5
    else:
        raise ValueError(f"predict is for supervised kinds, not {model.kind.value}")
    return [label_from_score(bool(p)) for p in positive], scores


def predict(
    model: TrainedModel, values: np.ndarray | FeatureVector, registry: FeatureRegistry
) -> tuple[TrialLabel, float]:
    vec = values.values if isinstance(values, FeatureVector) else values
    labels, scores = predict_batch(model, np.asarray(vec)[None, :], registry)
    return labels[0], float(scores[0])


def anomaly_score_batch(
    model: TrainedModel, X: np.ndarray, registry: FeatureRegistry
) -> tuple[np.ndarray, np.ndarray]:
    """(scores, flags); higher score = more anomalous, flag = anomalous."""
    _check_registry(model, registry)
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if model.kind is ModelKind.ISOLATION_FOREST:
        scores = isolation_scores(model.params, X)
        flags = scores > 0.5
    elif model.kind is ModelKind.ONE_CLASS_SVM:
        decision = one_class_decision(model.params, X)
        scores = -decision
        flags = decision < 0.0
    else:
        raise ValueError(f"anomaly_score is for one-class kinds, not {model.kind.value}")
    return scores, flags


def anomaly_score(
    model: TrainedModel, values: np.ndarray | FeatureVector, registry: FeatureRegistry
) -> tuple[float, bool]:
    vec = values.values if isinstance(values, FeatureVector) else values
    scores, flags = anomaly_score_batch(model, np.asarray(vec)[None, :], registry)
    return float(scores[0]), bool(flags[0])
