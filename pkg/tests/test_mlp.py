import math

import numpy as np
import pytest

from tunebench.models import MlpSpec, fit_arrays
from tunebench.models.logistic import logreg_objective_and_gradient
from tunebench.models.mlp import MlpModel, init_layers, mlp_forward_backward

ACTIVATIONS = ("identity", "logistic", "tanh", "relu")


def pack(grads):
    return np.concatenate([np.concatenate([dW.ravel(), db]) for dW, db in grads])


def numeric_gradient(layers, activation, X, y, alpha, h=1e-6):
    flat = []
    for li, (W, b) in enumerate(layers):
        for arr_i in range(2):
            arr = (W, b)[arr_i]
            for idx in np.ndindex(arr.shape):
                def loss_with(delta, li=li, arr_i=arr_i, idx=idx):
                    perturbed = [(W.copy(), b.copy()) for W, b in layers]
                    target = perturbed[li][arr_i]
                    target[idx] += delta
                    return mlp_forward_backward(perturbed, activation, X, y, alpha)[0]

                step = h * max(1.0, abs(arr[idx]))
                flat.append((loss_with(step) - loss_with(-step)) / (2.0 * step))
    return np.array(flat)


def relative_error(a, b):
    return np.linalg.norm(a - b) / max(np.linalg.norm(a), np.linalg.norm(b), 1e-12)


def test_zero_weights_give_half_probability_and_ln2_loss():
    layers = [(np.zeros((4, 1)), np.zeros(1))]
    X = np.random.default_rng(0).normal(size=(6, 4))
    y = np.array([0, 1, 0, 1, 1, 0])
    loss, _ = mlp_forward_backward(layers, "identity", X, y, 0.0)
    assert loss == pytest.approx(math.log(2.0), abs=1e-12)
    model = MlpModel(layers=tuple(layers), activation="identity")
    out = model.predict_one(X[0])
    assert out.score == pytest.approx(0.5)
    assert out.label == 1


@pytest.mark.parametrize("activation", ACTIVATIONS)
def test_small_network_gradients_match_finite_differences(rng, activation):
    layers = init_layers((2, 2, 1), rng)
    X = rng.normal(size=(5, 2))
    y = rng.integers(0, 2, size=5)
    _, grads = mlp_forward_backward(layers, activation, X, y, 0.01)
    numeric = numeric_gradient(layers, activation, X, y, 0.01)
    assert relative_error(pack(grads), numeric) < 1e-4


def test_no_hidden_layer_identity_reduces_to_logistic_regression(rng):
    X = rng.normal(size=(9, 5))
    y = rng.integers(0, 2, size=9)
    W = rng.normal(size=(5, 1))
    b = rng.normal(size=1)
    mlp_loss, mlp_grads = mlp_forward_backward([(W, b)], "identity", X, y, 0.0)
    lr_loss, lr_grad = logreg_objective_and_gradient(W[:, 0], float(b[0]), X, y, "l2", np.inf)
    assert mlp_loss == pytest.approx(lr_loss, abs=1e-15)
    assert mlp_grads[0][0][:, 0] == pytest.approx(lr_grad[:-1], abs=1e-15)
    assert float(mlp_grads[0][1][0]) == pytest.approx(lr_grad[-1], abs=1e-15)


def test_shape_mismatch_raises(rng):
    layers = init_layers((3, 2, 1), rng)
    with pytest.raises(ValueError, match="shape mismatch"):
        mlp_forward_backward(layers, "relu", rng.normal(size=(4, 5)), np.zeros(4), 0.0)
    with pytest.raises(ValueError, match="shape mismatch"):
        mlp_forward_backward(layers, "relu", rng.normal(size=(4, 3)), np.zeros(3), 0.0)


def test_fit_is_bit_deterministic(rng):
    X = rng.normal(size=(20, 4))
    y = np.array([0, 1] * 10)
    spec = MlpSpec(hidden_layers=(6,), max_epochs=40)
    a = fit_arrays(spec, X, y, seed=11)
    b = fit_arrays(spec, X, y, seed=11)
    for (Wa, ba), (Wb, bb) in zip(a.state.layers, b.state.layers):
        assert np.array_equal(Wa, Wb) and np.array_equal(ba, bb)


def test_lbfgs_solver_fits_separated_blobs(rng):
    X = np.vstack([rng.normal(-1.5, 0.3, size=(15, 2)), rng.normal(1.5, 0.3, size=(15, 2))])
    y = np.array([0] * 15 + [1] * 15)
    model = fit_arrays(MlpSpec(hidden_layers=(8,), solver="lbfgs", max_epochs=300), X, y, seed=4)
    predictions = [model.predict_one(x).label for x in X]
    assert np.mean(np.array(predictions) == y) >= 0.95


@pytest.mark.parametrize("solver", ["adam", "sgd"])
def test_iterative_solvers_reduce_the_loss(rng, solver):
    X = rng.normal(size=(24, 3))
    y = rng.integers(0, 2, size=24)
    while len(set(y)) < 2:
        y = rng.integers(0, 2, size=24)
    spec = MlpSpec(hidden_layers=(5,), solver=solver, max_epochs=150, learning_rate=0.05)
    model = fit_arrays(spec, X, y, seed=6)
    init = init_layers((3, 5, 1), np.random.default_rng(6))
    loss_init, _ = mlp_forward_backward(init, spec.activation, X, y, spec.alpha)
    loss_final, _ = mlp_forward_backward(list(model.state.layers), spec.activation, X, y, spec.alpha)
    assert loss_final < loss_init


def test_unconverged_fit_warns(rng):
    X = rng.normal(size=(16, 3))
    y = rng.integers(0, 2, size=16)
    while len(set(y)) < 2:
        y = rng.integers(0, 2, size=16)
    model = fit_arrays(MlpSpec(max_epochs=3), X, y, seed=0)
    assert model.warnings and "converge" in model.warnings[0]


def test_probability_scores_stay_in_unit_interval(rng):
    X = rng.normal(size=(12, 4))
    y = np.array([0, 1] * 6)
    model = fit_arrays(MlpSpec(hidden_layers=(4,), max_epochs=30), X, y, seed=1)
    for _ in range(10):
        out = model.predict_one(rng.normal(size=4) * 5.0)
        assert 0.0 <= out.score <= 1.0
        assert out.label == int(out.score >= 0.5)
