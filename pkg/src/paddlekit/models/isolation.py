"""Isolation forest with the standard harmonic-number path normalizer."""

from __future__ import annotations

import math

import numpy as np


def average_path_normalizer(n: int) -> float:
    """c(n): expected path length of an unsuccessful BST search over n points.

    c(n) = 2*H(n-1) - 2(n-1)/n with exact harmonic numbers; 1 for n == 2,
    0 for n <= 1.
    """
    if n <= 1:
        return 0.0
    if n == 2:
        return 1.0
    harmonic = sum(1.0 / k for k in range(1, n))
    return 2.0 * harmonic - 2.0 * (n - 1) / n


def _build(
    X: np.ndarray,
    indices: np.ndarray,
    depth: int,
    depth_limit: int,
    rng: np.random.Generator,
    nodes: list[dict],
) -> int:
    if indices.size <= 1 or depth >= depth_limit:
        nodes.append({"size": int(indices.size)})
        return len(nodes) - 1

    sub = X[indices]
    lo = sub.min(axis=0)
    hi = sub.max(axis=0)
    usable = np.flatnonzero(hi > lo)
    if usable.size == 0:
        nodes.append({"size": int(indices.size)})
        return len(nodes) - 1

    feature = int(usable[rng.integers(0, usable.size)])
    threshold = float(rng.uniform(lo[feature], hi[feature]))
    node_id = len(nodes)
    nodes.append({"feature": feature, "threshold": threshold, "left": -1, "right": -1})
    mask = sub[:, feature] < threshold
    nodes[node_id]["left"] = _build(X, indices[mask], depth + 1, depth_limit, rng, nodes)
    nodes[node_id]["right"] = _build(X, indices[~mask], depth + 1, depth_limit, rng, nodes)
    return node_id


def fit_isolation_forest(
    X: np.ndarray, n_trees: int, max_subsample: int, seed: int
) -> dict:
    n = X.shape[0]
    psi = min(max_subsample, n)
    depth_limit = math.ceil(math.log2(psi)) if psi > 1 else 0
    trees = []
    for t in range(n_trees):
        rng = np.random.default_rng([seed, t])
        subsample = rng.choice(n, size=psi, replace=False)
        nodes: list[dict] = []
        _build(X, subsample, 0, depth_limit, rng, nodes)
        trees.append(nodes)
    return {"trees": trees, "subsample": int(psi)}


def _tree_paths(nodes: list[dict], X: np.ndarray) -> np.ndarray:
    pos = np.zeros(X.shape[0], dtype=np.intp)
    depth = np.zeros(X.shape[0], dtype=np.float64)
    out = np.empty(X.shape[0], dtype=np.float64)
    pending = np.arange(X.shape[0])
    while pending.size:
        still = []
        for node_id in np.unique(pos[pending]):
            rows = pending[pos[pending] == node_id]
            node = nodes[node_id]
            if "feature" in node:
                left = X[rows, node["feature"]] < node["threshold"]
                pos[rows[left]] = node["left"]
                pos[rows[~left]] = node["right"]
                depth[rows] += 1.0
                still.append(rows)
            else:
                out[rows] = depth[rows] + average_path_normalizer(node["size"])
        pending = np.concatenate(still) if still else np.empty(0, dtype=np.intp)
    return out


def isolation_scores(params: dict, X: np.ndarray) -> np.ndarray:
    """Anomaly score 2^(-E[path]/c(psi)); c floored at 1 so the degenerate
    single-point forest still yields a defined score."""
    X = np.atleast_2d(X)
    paths = np.zeros(X.shape[0], dtype=np.float64)
    for nodes in params["trees"]:
        paths += _tree_paths(nodes, X)
    mean_path = paths / len(params["trees"])
    norm = average_path_normalizer(int(params["subsample"]))
    if norm <= 0.0:
        norm = 1.0
    return np.power(2.0, -mean_path / norm)
