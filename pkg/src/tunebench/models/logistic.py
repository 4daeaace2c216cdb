"""Binary logistic regression trained by deterministic full-batch descent."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .base import PredictionOutput, check_training_data, sigmoid, sigmoid_scalar
from .specs import LogisticRegressionSpec

_ARMIJO_C = 1e-4
_MIN_STEP = 1e-18


def logreg_objective_and_gradient(weights, bias, X, y, penalty="l2", cost=1.0):
    """Regularized mean negative log-likelihood and its exact gradient.

    Loss is mean NLL plus (1/cost) times the regularizer (0.5*||w||^2 for L2,
    ||w||_1 for L1; bias unpenalized). Returns (loss, gradient) with the
    gradient laid out as the weight components followed by the bias component.
    For L1 the sign subgradient is used, with sign(0) = 0.
    """
    w = np.asarray(weights, dtype=float)
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n = X.shape[0]

    z = X @ w + bias
    # softplus(z) - y*z is the stable form of the per-instance NLL
    nll = float(np.mean(np.logaddexp(0.0, z) - y * z))
    p = sigmoid(z)
    residual = (p - y) / n
    grad_w = X.T @ residual
    grad_b = float(residual.sum())

    inv_cost = 0.0 if np.isinf(cost) else 1.0 / cost
    if penalty == "l2":
        loss = nll + inv_cost * 0.5 * float(w @ w)
        grad_w = grad_w + inv_cost * w
    elif penalty == "l1":
        loss = nll + inv_cost * float(np.abs(w).sum())
        grad_w = grad_w + inv_cost * np.sign(w)
    else:
        raise ValueError(f"unknown penalty {penalty!r}")
    return loss, np.concatenate([grad_w, [grad_b]])


def _nll_and_gradient(w, b, X, y):
    loss, grad = logreg_objective_and_gradient(w, b, X, y, penalty="l2", cost=np.inf)
    return loss, grad[:-1], grad[-1]


def _soft_threshold(v, t):
    return np.sign(v) * np.maximum(np.abs(v) - t, 0.0)


@dataclass(frozen=True)
class LogisticModel:
    weights: np.ndarray
    bias: float

    def predict_one(self, x) -> PredictionOutput:
        score = sigmoid_scalar(float(np.dot(self.weights, x)) + self.bias)
        return PredictionOutput(label=int(score >= 0.5), score=score)


def _fit_l2(spec, X, y):
    w = np.zeros(X.shape[1])
    b = 0.0
    step = 1.0
    loss, grad = logreg_objective_and_gradient(w, b, X, y, "l2", spec.cost)
    for _ in range(spec.max_iterations):
        gw, gb = grad[:-1], grad[-1]
        if max(np.max(np.abs(gw)), abs(gb)) < spec.tolerance:
            return w, b, True
        gnorm2 = float(grad @ grad)
        t = min(step * 2.0, 1e12)
        while t > _MIN_STEP:
            cand_w = w - t * gw
            cand_b = b - t * gb
            cand_loss, cand_grad = logreg_objective_and_gradient(
                cand_w, cand_b, X, y, "l2", spec.cost
            )
            if cand_loss <= loss - _ARMIJO_C * t * gnorm2:
                break
            t *= 0.5
        w, b, loss, grad, step = cand_w, cand_b, cand_loss, cand_grad, t
    gw, gb = grad[:-1], grad[-1]
    return w, b, max(np.max(np.abs(gw)), abs(gb)) < spec.tolerance


def _fit_l1(spec, X, y):
    # Proximal gradient: descend the smooth NLL, soft-threshold the weights.
    inv_cost = 0.0 if np.isinf(spec.cost) else 1.0 / spec.cost
    w = np.zeros(X.shape[1])
    b = 0.0
    step = 1.0
    smooth, gw, gb = _nll_and_gradient(w, b, X, y)
    for _ in range(spec.max_iterations):
        t = min(step * 2.0, 1e12)
        while t > _MIN_STEP:
            cand_w = _soft_threshold(w - t * gw, t * inv_cost)
            cand_b = b - t * gb
            dw, db = cand_w - w, cand_b - b
            cand_smooth, cand_gw, cand_gb = _nll_and_gradient(cand_w, cand_b, X, y)
            # Majorization condition of proximal gradient descent
            quad = smooth + float(gw @ dw) + gb * db + (float(dw @ dw) + db * db) / (2.0 * t)
            if cand_smooth <= quad + 1e-15:
                break
            t *= 0.5
        residual = max(np.max(np.abs(cand_w - w)), abs(cand_b - b)) / t
        w, b, smooth, gw, gb, step = cand_w, cand_b, cand_smooth, cand_gw, cand_gb, t
        if residual < spec.tolerance:
            return w, b, True
    return w, b, False


def fit_logreg(spec: LogisticRegressionSpec, X, y) -> tuple[LogisticModel, list[str]]:
    X, y = check_training_data(X, y)
    if spec.penalty == "l2":
        w, b, converged = _fit_l2(spec, X, y)
    else:
        w, b, converged = _fit_l1(spec, X, y)
    warnings = []
    if not converged:
        warnings.append(
            f"logistic regression did not reach tolerance {spec.tolerance} "
            f"within {spec.max_iterations} iterations"
        )
    return LogisticModel(weights=w, bias=float(b)), warnings
