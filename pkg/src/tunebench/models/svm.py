"""Linear soft-margin SVM trained by SMO with maximal-violating-pair selection."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .base import PredictionOutput, check_training_data
from .specs import LinearSvmSpec


@dataclass(frozen=True)
class SvmModel:
    weights: np.ndarray
    bias: float
    alphas: np.ndarray

    def margin(self, x) -> float:
        return float(np.dot(self.weights, x)) + self.bias

    def predict_one(self, x) -> PredictionOutput:
        m = self.margin(x)
        return PredictionOutput(label=int(m >= 0.0), score=m)


def kkt_residuals(X, y01, alphas, bias, cost) -> np.ndarray:
    """Per-point violation of the soft-margin optimality conditions.

    Points with alpha at 0 must sit on or outside the margin, points at the
    cost bound on or inside it, and free points exactly on it.
    """
    X = np.asarray(X, dtype=float)
    signs = 2.0 * np.asarray(y01, dtype=float) - 1.0
    w = (alphas * signs) @ X
    u = signs * (X @ w + bias)
    edge = 1e-8 * max(1.0, cost)
    residuals = np.empty(len(alphas))
    at_zero = alphas <= edge
    at_cost = alphas >= cost - edge
    free = ~(at_zero | at_cost)
    residuals[at_zero] = np.maximum(0.0, 1.0 - u[at_zero])
    residuals[at_cost] = np.maximum(0.0, u[at_cost] - 1.0)
    residuals[free] = np.abs(u[free] - 1.0)
    return residuals


def smo_solve(X, y01, cost=1.0, kkt_tolerance=1e-3, max_passes=200, seed=0):
    """Solve the linear-kernel SVM dual; returns (alphas, bias, converged).

    Each iteration optimizes the two multipliers with the largest mutual
    optimality violation, which always admits a strictly feasible step, so
    the dual objective strictly increases until the violation gap closes.
    Selection is by deterministic argmax, so the result does not depend on
    seed; the parameter is kept for interface parity with the other
    trainers. One "pass" of budget buys n pair updates.
    """
    X, y01 = check_training_data(X, y01)
    n = X.shape[0]
    y = 2.0 * y01.astype(float) - 1.0
    K = X @ X.T

    alphas = np.zeros(n)
    e = -y  # bias-free prediction error f(x) - y at alpha = 0
    edge = 1e-12 * max(1.0, cost)

    def violation_split():
        v = -e
        up = ((y > 0) & (alphas < cost - edge)) | ((y < 0) & (alphas > edge))
        low = ((y < 0) & (alphas < cost - edge)) | ((y > 0) & (alphas > edge))
        return v, up, low

    converged = False
    bias = 0.0
    for it in range(max_passes * n):
        if it and it % (2 * n) == 0:
            e = K @ (alphas * y) - y  # shed incremental round-off
        v, up, low = violation_split()
        if not up.any() or not low.any():
            converged = True
            break
        i = int(np.flatnonzero(up)[np.argmax(v[up])])
        j = int(np.flatnonzero(low)[np.argmin(v[low])])
        gap = v[i] - v[j]
        bias = 0.5 * (v[i] + v[j])
        if gap <= kkt_tolerance:
            converged = True
            break

        if y[i] != y[j]:
            lo = max(0.0, alphas[j] - alphas[i])
            hi = min(cost, cost + alphas[j] - alphas[i])
        else:
            lo = max(0.0, alphas[i] + alphas[j] - cost)
            hi = min(cost, alphas[i] + alphas[j])
        eta = K[i, i] + K[j, j] - 2.0 * K[i, j]
        if eta <= 0.0:
            eta = 1e-12  # duplicate points; the box clip still gives progress
        a_j = alphas[j] + y[j] * (e[i] - e[j]) / eta
        a_j = min(max(a_j, lo), hi)
        a_i = alphas[i] + y[i] * y[j] * (alphas[j] - a_j)
        # Round-off can push the derived multiplier a hair outside the box.
        if a_i < edge:
            a_i = 0.0
        elif a_i > cost - edge:
            a_i = cost

        d_i = a_i - alphas[i]
        d_j = a_j - alphas[j]
        e += y[i] * d_i * K[i, :] + y[j] * d_j * K[j, :]
        alphas[i], alphas[j] = a_i, a_j
    else:
        v, up, low = violation_split()
        if up.any() and low.any():
            bias = 0.5 * (float(v[up].max()) + float(v[low].min()))

    return alphas, float(bias), converged


def fit_svm(spec: LinearSvmSpec, X, y, seed=0) -> tuple[SvmModel, list[str]]:
    X, y = check_training_data(X, y)
    alphas, bias, converged = smo_solve(
        X, y, cost=spec.cost, kkt_tolerance=spec.kkt_tolerance,
        max_passes=spec.max_passes, seed=seed,
    )
    signs = 2.0 * y.astype(float) - 1.0
    weights = (alphas * signs) @ X
    warnings = []
    if not converged:
        warnings.append(
            f"SMO stopped after {spec.max_passes} passes with KKT residuals above "
            f"{spec.kkt_tolerance}"
        )
    return SvmModel(weights=weights, bias=bias, alphas=alphas), warnings
