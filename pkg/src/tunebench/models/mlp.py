"""Feed-forward network with a single logistic output, trained full-batch."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.optimize

from .base import PredictionOutput, check_training_data, sigmoid
from .specs import MlpSpec

# Improvement threshold / patience for declaring the iterative solvers done.
_TOL_IMPROVE = 1e-4
_PATIENCE = 10


def _act(name):
    if name == "identity":
        return lambda z: z, lambda z, a: np.ones_like(z)
    if name == "logistic":
        return sigmoid, lambda z, a: a * (1.0 - a)
    if name == "tanh":
        return np.tanh, lambda z, a: 1.0 - a * a
    if name == "relu":
        return lambda z: np.maximum(z, 0.0), lambda z, a: (z > 0.0).astype(float)
    raise ValueError(f"unknown activation {name!r}")


def init_layers(layer_sizes, rng) -> list[tuple[np.ndarray, np.ndarray]]:
    """Glorot-uniform weight matrices and zero biases for the given sizes."""
    layers = []
    for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        W = rng.uniform(-limit, limit, size=(fan_in, fan_out))
        layers.append((W, np.zeros(fan_out)))
    return layers


def mlp_forward_backward(layers, activation, X, y, alpha):
    """Loss and exact per-layer gradients for one full batch.

    Loss is mean binary cross-entropy of the logistic output plus
    alpha/(2n) times the squared Frobenius norms of the weight matrices
    (biases unpenalized). Gradients come back as [(dW, db), ...] matching
    the layers argument.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    if X.ndim != 2:
        raise ValueError(f"shape mismatch: expected a 2-D batch, got {X.shape}")
    if X.shape[0] != y.shape[0]:
        raise ValueError(f"shape mismatch: {X.shape[0]} inputs vs {y.shape[0]} labels")
    if layers[-1][0].shape[1] != 1:
        raise ValueError("shape mismatch: final layer must have a single output unit")
    act, act_grad = _act(activation)
    n = X.shape[0]

    pre, post = [], []
    a = X
    for li, (W, b) in enumerate(layers):
        if a.shape[1] != W.shape[0]:
            raise ValueError(
                f"shape mismatch: layer {li} expects {W.shape[0]} inputs, got {a.shape[1]}"
            )
        z = a @ W + b
        pre.append(z)
        a = z if li == len(layers) - 1 else act(z)
        post.append(a)

    z_out = pre[-1][:, 0]
    loss = float(np.mean(np.logaddexp(0.0, z_out) - y * z_out))
    loss += alpha / (2.0 * n) * sum(float((W * W).sum()) for W, _ in layers)

    grads = [None] * len(layers)
    delta = ((sigmoid(z_out) - y) / n)[:, None]
    for li in range(len(layers) - 1, -1, -1):
        W, _ = layers[li]
        a_prev = X if li == 0 else post[li - 1]
        dW = a_prev.T @ delta + (alpha / n) * W
        db = delta.sum(axis=0)
        grads[li] = (dW, db)
        if li > 0:
            delta = (delta @ W.T) * act_grad(pre[li - 1], post[li - 1])
    return loss, grads


def _pack(layers):
    return np.concatenate([np.concatenate([W.ravel(), b]) for W, b in layers])


def _unpack(theta, shapes):
    layers, pos = [], 0
    for fan_in, fan_out in shapes:
        W = theta[pos:pos + fan_in * fan_out].reshape(fan_in, fan_out)
        pos += fan_in * fan_out
        b = theta[pos:pos + fan_out]
        pos += fan_out
        layers.append((W, b))
    return layers


@dataclass(frozen=True)
class MlpModel:
    layers: tuple[tuple[np.ndarray, np.ndarray], ...]
    activation: str

    def forward_proba(self, X) -> np.ndarray:
        act, _ = _act(self.activation)
        a = np.asarray(X, dtype=float)
        for li, (W, b) in enumerate(self.layers):
            z = a @ W + b
            a = z if li == len(self.layers) - 1 else act(z)
        return sigmoid(a[:, 0])

    def predict_one(self, x) -> PredictionOutput:
        score = float(self.forward_proba(np.asarray(x, dtype=float).reshape(1, -1))[0])
        return PredictionOutput(label=int(score >= 0.5), score=score)


def fit_mlp(spec: MlpSpec, X, y, seed=0) -> tuple[MlpModel, list[str]]:
    X, y = check_training_data(X, y)
    sizes = (X.shape[1], *spec.hidden_layers, 1)
    rng = np.random.default_rng(seed)
    layers = init_layers(sizes, rng)
    shapes = [(W.shape[0], W.shape[1]) for W, _ in layers]

    def objective(theta):
        loss, grads = mlp_forward_backward(_unpack(theta, shapes), spec.activation, X, y, spec.alpha)
        return loss, _pack(grads)

    theta = _pack(layers)
    converged = False
    if spec.solver == "lbfgs":
        result = scipy.optimize.minimize(
            objective, theta, jac=True, method="L-BFGS-B",
            options={"maxiter": spec.max_epochs},
        )
        theta = result.x
        converged = bool(result.success)
    else:
        if spec.solver == "adam":
            m = np.zeros_like(theta)
            v = np.zeros_like(theta)
        best = np.inf
        stale = 0
        for epoch in range(1, spec.max_epochs + 1):
            loss, grad = objective(theta)
            if loss < best - _TOL_IMPROVE:
                best = loss
                stale = 0
            else:
                stale += 1
                if stale >= _PATIENCE:
                    converged = True
                    break
            if spec.solver == "adam":
                m = 0.9 * m + 0.1 * grad
                v = 0.999 * v + 0.001 * grad * grad
                m_hat = m / (1.0 - 0.9 ** epoch)
                v_hat = v / (1.0 - 0.999 ** epoch)
                theta = theta - spec.learning_rate * m_hat / (np.sqrt(v_hat) + 1e-8)
            else:
                theta = theta - spec.learning_rate * grad

    warnings = []
    if not converged:
        warnings.append(f"MLP solver {spec.solver!r} did not converge within {spec.max_epochs} epochs")
    model = MlpModel(layers=tuple(_unpack(theta, shapes)), activation=spec.activation)
    return model, warnings
