"""RBF kernel machines: soft-margin binary SVC and one-class SVM.

Both solve their duals with a most-violating-pair working-set method and
operate on internally standardized features (per-feature mean/variance from
the training data, variance floored at 1e-12).
"""

from __future__ import annotations

import logging

import numpy as np

logger = logging.getLogger(__name__)

_VAR_FLOOR = 1e-12
_ALPHA_EPS = 1e-12
_MAX_PASSES = 200_000


def standardizer(X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    mean = X.mean(axis=0)
    var = X.var(axis=0)
    scale = np.sqrt(np.maximum(var, _VAR_FLOOR))
    return mean, scale


def rbf_kernel(A: np.ndarray, B: np.ndarray, gamma: float) -> np.ndarray:
    sq = (
        np.sum(A * A, axis=1)[:, None]
        + np.sum(B * B, axis=1)[None, :]
        - 2.0 * (A @ B.T)
    )
    return np.exp(-gamma * np.maximum(sq, 0.0))


def solve_svc_dual(
    K: np.ndarray, y_pm: np.ndarray, c: float, tol: float
) -> tuple[np.ndarray, float]:
    """Soft-margin dual via maximal-violating-pair selection.

    Returns (alpha, bias).  At convergence max F over the up-set and min F
    over the down-set differ by at most ``tol``, where F_i = y_i - w(x_i).
    """
    n = y_pm.size
    alpha = np.zeros(n)
    # F_i = y_i - sum_j alpha_j y_j K_ij; with alpha = 0 this is just y.
    f = y_pm.astype(np.float64).copy()
    i = j = 0

    for it in range(_MAX_PASSES):
        up = ((y_pm > 0) & (alpha < c - _ALPHA_EPS)) | ((y_pm < 0) & (alpha > _ALPHA_EPS))
        down = ((y_pm < 0) & (alpha < c - _ALPHA_EPS)) | ((y_pm > 0) & (alpha > _ALPHA_EPS))
        if not up.any() or not down.any():
            break
        i = int(np.flatnonzero(up)[np.argmax(f[up])])
        j = int(np.flatnonzero(down)[np.argmin(f[down])])
        gap = f[i] - f[j]
        if gap <= tol:
            break

        eta = K[i, i] + K[j, j] - 2.0 * K[i, j]
        bound_i = (c - alpha[i]) if y_pm[i] > 0 else alpha[i]
        bound_j = (c - alpha[j]) if y_pm[j] < 0 else alpha[j]
        step = min(bound_i, bound_j)
        if eta > _VAR_FLOOR:
            step = min(step, gap / eta)
        if step <= 0:
            break
        alpha[i] += y_pm[i] * step
        alpha[j] -= y_pm[j] * step
        f -= step * (K[:, i] - K[:, j])
    else:
        logger.warning("svc dual hit the iteration cap before tolerance")

    free = (alpha > _ALPHA_EPS) & (alpha < c - _ALPHA_EPS)
    bias = float(f[free].mean()) if free.any() else float((f[i] + f[j]) / 2.0)
    return alpha, bias


def fit_svc(X: np.ndarray, y01: np.ndarray, c: float, tol: float) -> dict:
    mean, scale = standardizer(X)
    Xs = (X - mean) / scale
    gamma = 1.0 / X.shape[1]
    y_pm = np.where(y01 == 1, 1.0, -1.0)
    K = rbf_kernel(Xs, Xs, gamma)
    alpha, bias = solve_svc_dual(K, y_pm, c, tol)

    sv = alpha > _ALPHA_EPS
    return {
        "mean": mean.tolist(),
        "scale": scale.tolist(),
        "gamma": gamma,
        "support_vectors": Xs[sv].tolist(),
        "dual_coef": (alpha[sv] * y_pm[sv]).tolist(),
        "bias": bias,
    }


def svc_decision(params: dict, X: np.ndarray) -> np.ndarray:
    mean = np.asarray(params["mean"])
    scale = np.asarray(params["scale"])
    sv = np.asarray(params["support_vectors"])
    dual = np.asarray(params["dual_coef"])
    Xs = (np.atleast_2d(X) - mean) / scale
    if sv.size == 0:
        return np.full(Xs.shape[0], float(params["bias"]))
    return rbf_kernel(Xs, sv, float(params["gamma"])) @ dual + float(params["bias"])


def fit_one_class_svm(X: np.ndarray, nu: float, tol: float = 1e-6) -> dict:
    """Schoelkopf one-class dual: min (1/2) a'Ka, 0 <= a_i <= 1/(nu n),
    sum a = 1; decision(x) = sum a_i k(x_i, x) - rho."""
    n = X.shape[0]
    mean, scale = standardizer(X)
    Xs = (X - mean) / scale
    gamma = 1.0 / X.shape[1]
    K = rbf_kernel(Xs, Xs, gamma)

    cap = 1.0 / (nu * n)
    alpha = np.zeros(n)
    full = int(np.floor(nu * n))
    alpha[:full] = cap
    if full < n:
        alpha[full] = 1.0 - full * cap

    g = K @ alpha
    i = j = 0
    for it in range(_MAX_PASSES):
        can_up = alpha < cap - _ALPHA_EPS
        can_down = alpha > _ALPHA_EPS
        if not can_up.any() or not can_down.any():
            break
        i = int(np.flatnonzero(can_up)[np.argmin(g[can_up])])
        j = int(np.flatnonzero(can_down)[np.argmax(g[can_down])])
        gap = g[j] - g[i]
        if gap <= tol:
            break
        eta = K[i, i] + K[j, j] - 2.0 * K[i, j]
        step = min(cap - alpha[i], alpha[j])
        if eta > _VAR_FLOOR:
            step = min(step, gap / eta)
        if step <= 0:
            break
        alpha[i] += step
        alpha[j] -= step
        g += step * (K[:, i] - K[:, j])
    else:
        logger.warning("one-class dual hit the iteration cap before tolerance")

    # Any rho between the bounded-side max and the zero-side min satisfies the
    # KKT conditions at tolerance; the smallest consistent estimate keeps
    # boundary support vectors at decision >= 0 under the strict < flag rule.
    free = (alpha > _ALPHA_EPS) & (alpha < cap - _ALPHA_EPS)
    rho = float(g[free].min()) if free.any() else float((g[i] + g[j]) / 2.0)

    sv = alpha > _ALPHA_EPS
    return {
        "mean": mean.tolist(),
        "scale": scale.tolist(),
        "gamma": gamma,
        "support_vectors": Xs[sv].tolist(),
        "dual_coef": alpha[sv].tolist(),
        "rho": rho,
    }


def one_class_decision(params: dict, X: np.ndarray) -> np.ndarray:
    mean = np.asarray(params["mean"])
    scale = np.asarray(params["scale"])
    sv = np.asarray(params["support_vectors"])
    dual = np.asarray(params["dual_coef"])
    Xs = (np.atleast_2d(X) - mean) / scale
    return rbf_kernel(Xs, sv, float(params["gamma"])) @ dual - float(params["rho"])
