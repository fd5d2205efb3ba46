"""Decision trees and the three tree ensembles, built from first principles.

All trees are stored as flat node lists (index 0 = root); internal nodes
carry ``feature``/``threshold``/``left``/``right``, leaves carry the
positive-class fraction ``p1``.  Split search scans features in ascending
index order and keeps strictly better candidates only, so results are
reproducible and match an exhaustive oracle on small inputs.
"""

from __future__ import annotations

import math

import numpy as np


def best_gini_split(x: np.ndarray, y01: np.ndarray) -> tuple[float, float] | None:
    """Exhaustive best threshold for one feature under weighted Gini.

    Candidate thresholds are midpoints between consecutive distinct sorted
    values.  Returns (impurity, threshold) or None when the column is
    constant.  Ties in impurity keep the lowest threshold.
    """
    n = x.size
    order = np.argsort(x, kind="stable")
    xs = x[order]
    ys = y01[order]
    valid = xs[1:] > xs[:-1]
    if not np.any(valid):
        return None

    ones_left = np.cumsum(ys)[:-1].astype(np.float64)
    n_left = np.arange(1, n, dtype=np.float64)
    zeros_left = n_left - ones_left
    total_ones = float(ys.sum())
    n_right = n - n_left
    ones_right = total_ones - ones_left
    zeros_right = n_right - ones_right

    gini_left = 1.0 - (zeros_left * zeros_left + ones_left * ones_left) / (n_left * n_left)
    gini_right = 1.0 - (zeros_right * zeros_right + ones_right * ones_right) / (
        n_right * n_right
    )
    impurity = (n_left * gini_left + n_right * gini_right) / n

    impurity = np.where(valid, impurity, np.inf)
    cut = int(np.argmin(impurity))
    return float(impurity[cut]), float((xs[cut] + xs[cut + 1]) / 2.0)


def gini_of_split(x: np.ndarray, y01: np.ndarray, threshold: float) -> float | None:
    """Weighted Gini of the partition x < threshold; None if one side is empty."""
    left = x < threshold
    n_left = int(left.sum())
    n = x.size
    if n_left == 0 or n_left == n:
        return None
    ones_left = float(y01[left].sum())
    zeros_left = n_left - ones_left
    n_right = n - n_left
    ones_right = float(y01.sum()) - ones_left
    zeros_right = n_right - ones_right
    gini_left = 1.0 - (zeros_left * zeros_left + ones_left * ones_left) / (n_left * n_left)
    gini_right = 1.0 - (zeros_right * zeros_right + ones_right * ones_right) / (
        n_right * n_right
    )
    return (n_left * gini_left + n_right * gini_right) / n


def _leaf(nodes: list[dict], y01: np.ndarray) -> int:
    nodes.append({"p1": float(y01.mean()), "n": int(y01.size)})
    return len(nodes) - 1


def fit_tree(
    X: np.ndarray,
    y01: np.ndarray,
    max_depth: int,
    rng: np.random.Generator | None = None,
    n_candidates: int | None = None,
    random_thresholds: bool = False,
) -> list[dict]:
    """Grow one classification tree (exhaustive or random-threshold splits).

    With ``rng`` set, each split draws ``n_candidates`` candidate features;
    ``random_thresholds`` switches to the extremely-randomized scheme (one
    uniform threshold per candidate instead of an exhaustive scan).
    """
    n, d = X.shape
    nodes: list[dict] = []

    def build(indices: np.ndarray, depth: int) -> int:
        ys = y01[indices]
        if depth >= max_depth or indices.size < 2 or ys.min() == ys.max():
            return _leaf(nodes, ys)

        if rng is not None and n_candidates is not None and n_candidates < d:
            feats = np.sort(rng.choice(d, size=n_candidates, replace=False))
        else:
            feats = np.arange(d)

        Xs = X[indices]
        best: tuple[float, int, float] | None = None
        for f in feats:
            col = Xs[:, f]
            if random_thresholds:
                lo, hi = float(col.min()), float(col.max())
                if lo == hi:
                    continue
                thr = float(rng.uniform(lo, hi))
                impurity = gini_of_split(col, ys, thr)
                if impurity is None:
                    continue
                candidate = (impurity, int(f), thr)
            else:
                found = best_gini_split(col, ys)
                if found is None:
                    continue
                candidate = (found[0], int(f), found[1])
            if best is None or candidate[0] < best[0]:
                best = candidate

        if best is None:
            return _leaf(nodes, ys)

        _, feature, threshold = best
        node_id = len(nodes)
        nodes.append({"feature": feature, "threshold": threshold, "left": -1, "right": -1})
        mask = X[indices, feature] < threshold
        nodes[node_id]["left"] = build(indices[mask], depth + 1)
        nodes[node_id]["right"] = build(indices[~mask], depth + 1)
        return node_id

    build(np.arange(n), 0)
    return nodes


def apply_tree(nodes: list[dict], X: np.ndarray) -> np.ndarray:
    """Leaf p1 for every row, via vectorized frontier routing."""
    pos = np.zeros(X.shape[0], dtype=np.intp)
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
                still.append(rows)
            else:
                out[rows] = node["p1"]
        pending = np.concatenate(still) if still else np.empty(0, dtype=np.intp)
    return out


# --- ensembles -------------------------------------------------------------


def fit_random_forest(
    X: np.ndarray, y01: np.ndarray, n_trees: int, max_depth: int, seed: int
) -> list[list[dict]]:
    n, d = X.shape
    k = math.ceil(math.sqrt(d))
    forest = []
    for t in range(n_trees):
        rng = np.random.default_rng([seed, t])
        boot = rng.integers(0, n, size=n)
        forest.append(
            fit_tree(X[boot], y01[boot], max_depth, rng=rng, n_candidates=k)
        )
    return forest


def fit_extra_trees(
    X: np.ndarray, y01: np.ndarray, n_trees: int, max_depth: int, seed: int
) -> list[list[dict]]:
    d = X.shape[1]
    k = math.ceil(math.sqrt(d))
    return [
        fit_tree(
            X,
            y01,
            max_depth,
            rng=np.random.default_rng([seed, t]),
            n_candidates=k,
            random_thresholds=True,
        )
        for t in range(n_trees)
    ]


def _depth1_arrays(forest: list[list[dict]]) -> tuple[np.ndarray, ...] | None:
    """Vectorized view of a depth-1 forest, or None if any tree is deeper."""
    if not all(len(nodes) in (1, 3) for nodes in forest):
        return None
    feats = np.zeros(len(forest), dtype=np.intp)
    thr = np.full(len(forest), np.inf)
    left_vote = np.empty(len(forest))
    right_vote = np.empty(len(forest))
    for t, nodes in enumerate(forest):
        if len(nodes) == 3:
            feats[t] = nodes[0]["feature"]
            thr[t] = nodes[0]["threshold"]
            left_vote[t] = 1.0 if nodes[nodes[0]["left"]]["p1"] > 0.5 else 0.0
            right_vote[t] = 1.0 if nodes[nodes[0]["right"]]["p1"] > 0.5 else 0.0
        else:
            left_vote[t] = right_vote[t] = 1.0 if nodes[0]["p1"] > 0.5 else 0.0
    return feats, thr, left_vote, right_vote


def forest_vote_fraction(
    forest: list[list[dict]],
    X: np.ndarray,
    cache: tuple[np.ndarray, ...] | None = None,
) -> np.ndarray:
    """Fraction of trees voting for the positive class (leaf p1 > 0.5)."""
    arrays = cache if cache is not None else _depth1_arrays(forest)
    if arrays is not None:
        feats, thr, left_vote, right_vote = arrays
        votes = np.where(X[:, feats] < thr, left_vote, right_vote)
        return votes.mean(axis=1)

    votes = np.zeros(X.shape[0], dtype=np.float64)
    for nodes in forest:
        if len(nodes) == 1:  # single leaf
            votes += 1.0 if nodes[0]["p1"] > 0.5 else 0.0
        else:
            votes += (apply_tree(nodes, X) > 0.5).astype(np.float64)
    return votes / len(forest)


# --- gradient boosting (depth-1, logistic loss) -----------------------------

_EPS = 1e-12


def fit_gradient_boost(
    X: np.ndarray, y01: np.ndarray, n_estimators: int, learning_rate: float
) -> dict:
    """Boosted regression stumps on the logistic-loss gradient.

    Each round fits the residual y - p with a squared-error stump and takes
    the Newton leaf step sum(r)/sum(p(1-p)); the learning rate is folded
    into the stored leaf values.
    """
    n, d = X.shape
    y = y01.astype(np.float64)
    p0 = min(max(float(y.mean()), _EPS), 1.0 - _EPS)
    f0 = math.log(p0 / (1.0 - p0))

    order = np.argsort(X, axis=0, kind="stable")
    x_sorted = np.take_along_axis(X, order, axis=0)
    valid = x_sorted[1:] > x_sorted[:-1]  # [n-1, d]
    thresholds = (x_sorted[1:] + x_sorted[:-1]) / 2.0

    stumps: list[dict] = []
    score = np.full(n, f0)
    if not np.any(valid):
        return {"f0": f0, "stumps": stumps}

    for _ in range(n_estimators):
        p = 1.0 / (1.0 + np.exp(-score))
        r = y - p
        h = p * (1.0 - p)

        r_sorted = r[order]
        h_sorted = h[order]
        r_left = np.cumsum(r_sorted, axis=0)[:-1]
        h_left = np.cumsum(h_sorted, axis=0)[:-1]
        r_total = r_left[-1] + r_sorted[-1]
        h_total = h_left[-1] + h_sorted[-1]
        r_right = r_total - r_left
        h_right = h_total - h_left

        gain = r_left * r_left / (h_left + _EPS) + r_right * r_right / (h_right + _EPS)
        gain = np.where(valid, gain, -np.inf)
        flat = int(np.argmax(gain.T))  # feature-major: lowest feature, then cut
        feature, cut = divmod(flat, n - 1)

        threshold = float(thresholds[cut, feature])
        left_value = learning_rate * float(
            r_left[cut, feature] / (h_left[cut, feature] + _EPS)
        )
        right_value = learning_rate * float(
            r_right[cut, feature] / (h_right[cut, feature] + _EPS)
        )
        stumps.append(
            {
                "feature": int(feature),
                "threshold": threshold,
                "left_value": left_value,
                "right_value": right_value,
            }
        )
        go_left = X[:, feature] < threshold
        score += np.where(go_left, left_value, right_value)

    return {"f0": f0, "stumps": stumps}


def _stump_arrays(stumps: list[dict]) -> tuple[np.ndarray, ...]:
    feats = np.array([s["feature"] for s in stumps], dtype=np.intp)
    thr = np.array([s["threshold"] for s in stumps])
    left = np.array([s["left_value"] for s in stumps])
    right = np.array([s["right_value"] for s in stumps])
    return feats, thr, left, right


def gradient_boost_margin(
    params: dict, X: np.ndarray, cache: tuple[np.ndarray, ...] | None = None
) -> np.ndarray:
    if not params["stumps"]:
        return np.full(X.shape[0], float(params["f0"]))
    feats, thr, left, right = cache if cache is not None else _stump_arrays(params["stumps"])
    contrib = np.where(X[:, feats] < thr, left, right)
    return float(params["f0"]) + contrib.sum(axis=1)
