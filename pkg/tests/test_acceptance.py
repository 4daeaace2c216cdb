"""Exit criteria, one test per criterion. Each prints a PASS/FAIL line;
run with `pytest tests/test_acceptance.py -s` to see them live."""

import functools
import json
import math
import time

import numpy as np
import pytest

from tunebench.cli import main
from tunebench.dataset import write_dataset
from tunebench.evaluation import cross_validate, stratified_folds
from tunebench.models import (
    KnnSpec,
    NaiveBayesSpec,
    RandomForestSpec,
    fit_arrays,
)
from tunebench.models.forest import build_decision_tree, impurity
from tunebench.models.knn import KnnModel
from tunebench.models.logistic import logreg_objective_and_gradient
from tunebench.models.mlp import init_layers, mlp_forward_backward
from tunebench.models.naive_bayes import nb_class_log_posterior
from tunebench.models.svm import kkt_residuals, smo_solve
from tunebench.synthetic import make_benchmark_dataset
from tunebench.tuning import (
    SearchSpace,
    IntegerSet,
    builtin_rf_space,
    search,
    trace_from_json,
    verdict,
)

from test_svm import separable_problem


def criterion(label):
    def wrap(fn):
        @functools.wraps(fn)
        def run(*args, **kwargs):
            try:
                fn(*args, **kwargs)
            except BaseException:
                print(f"\n{label}: FAIL")
                raise
            print(f"\n{label}: PASS")

        return run

    return wrap


def labelled_data(rng, n, d):
    while True:
        X = rng.uniform(size=(n, d))
        y = rng.integers(0, 2, size=n)
        if 0 < y.sum() < n:
            return X, y


# --- 1 ------------------------------------------------------------------------------


def _conditioned_nb_data(rng, n, d):
    # Keep every per-class variance bounded below: a near-singular Gaussian
    # magnifies harmless last-ulp differences between the vectorized model
    # and the plain-Python oracle far past the 1e-9 comparison tolerance.
    while True:
        X = rng.uniform(size=(n, d))
        y = rng.integers(0, 2, size=n)
        if not 1 < y.sum() < n - 1:
            continue
        if min(X[y == c][:, j].var() for c in (0, 1) for j in range(d)) >= 1e-3:
            return X, y


@criterion("criterion 1 (naive Bayes agrees with a brute-force density oracle)")
def test_criterion_1_naive_bayes_oracle():
    started = time.monotonic()
    rng = np.random.default_rng(101)
    for _ in range(50):
        n = int(rng.integers(6, 21))
        d = int(rng.integers(1, 5))
        X, y = _conditioned_nb_data(rng, n, d)
        model = fit_arrays(NaiveBayesSpec(), X, y, seed=0)
        queries = np.vstack([X, rng.uniform(size=(5, d))])
        for q in queries:
            got0, got1 = nb_class_log_posterior(model.state, q)
            want0, want1 = _brute_force_nb(X, y, 1e-9, q)
            assert abs(got0 - want0) <= 1e-9
            assert abs(got1 - want1) <= 1e-9
            oracle_label = 1 if want1 >= want0 else 0
            assert model.predict_one(q).label == oracle_label
    assert time.monotonic() - started < 5.0


def _brute_force_nb(X, y, smoothing, query):
    n, d = X.shape
    pooled = [sum((X[i, j] - sum(X[:, j]) / n) ** 2 for i in range(n)) / n for j in range(d)]
    eps = smoothing * max(pooled)
    if eps <= 0.0:
        eps = max(smoothing, 1e-12)
    out = []
    for cls in (0, 1):
        rows = [i for i in range(n) if y[i] == cls]
        total = math.log(len(rows) / n)
        for j in range(d):
            mean = sum(X[i, j] for i in rows) / len(rows)
            var = sum((X[i, j] - mean) ** 2 for i in rows) / len(rows) + eps
            total += -0.5 * math.log(2.0 * math.pi * var) - (query[j] - mean) ** 2 / (2.0 * var)
        out.append(total)
    return out


# --- 2 ------------------------------------------------------------------------------


@criterion("criterion 2 (kNN neighbor lists equal the exhaustive sort oracle)")
def test_criterion_2_knn_oracle():
    started = time.monotonic()
    rng = np.random.default_rng(202)
    for _ in range(50):
        n = int(rng.integers(2, 31))
        d = int(rng.integers(1, 7))
        X = np.round(rng.uniform(size=(n, d)), 1)  # coarse grid forces exact ties
        y = rng.integers(0, 2, size=n)
        model = KnnModel(X=X.astype(float), y=y, k=1, weights="uniform")
        for _ in range(4):
            q = np.round(rng.uniform(size=d), 1)
            k = int(rng.integers(1, n + 1))
            oracle = sorted(
                (math.sqrt(sum((X[i, j] - q[j]) ** 2 for j in range(d))), i)
                for i in range(n)
            )
            expected = [(i, dist) for dist, i in oracle[:k]]
            assert model.nearest(q, k) == expected
    assert time.monotonic() - started < 5.0


# --- 3 ------------------------------------------------------------------------------


def _relative_error(a, b):
    return np.linalg.norm(a - b) / max(np.linalg.norm(a), np.linalg.norm(b), 1e-12)


@criterion("criterion 3 (logreg and MLP gradients match central differences)")
def test_criterion_3_gradient_checks():
    started = time.monotonic()
    rng = np.random.default_rng(303)

    for case in range(100):
        n = int(rng.integers(3, 13))
        d = int(rng.integers(1, 13))
        X, y = labelled_data(rng, n, d)
        w = rng.normal(size=d)
        b = float(rng.normal())
        penalty = "l2" if case % 2 == 0 else "l1"
        w[np.abs(w) < 1e-3] += 0.01  # keep L1 away from its kink
        cost = float(rng.uniform(0.5, 20.0))
        _, analytic = logreg_objective_and_gradient(w, b, X, y, penalty, cost)
        theta = np.concatenate([w, [b]])

        def loss_at(t):
            return logreg_objective_and_gradient(t[:-1], t[-1], X, y, penalty, cost)[0]

        numeric = _central_difference(loss_at, theta)
        assert _relative_error(analytic, numeric) < 1e-4

    activations = ("identity", "logistic", "tanh", "relu")
    architectures = ((12, 8, 4, 1), (12, 8, 1), (4, 3, 1), (6, 1))
    for case in range(100):
        activation = activations[case % 4]
        sizes = architectures[case % 4]
        layers = init_layers(sizes, rng)
        nb = int(rng.integers(2, 7))
        X = rng.normal(size=(nb, sizes[0]))
        y = rng.integers(0, 2, size=nb)
        alpha = float(rng.uniform(0.0, 0.1))
        _, grads = mlp_forward_backward(layers, activation, X, y, alpha)
        analytic = np.concatenate([np.concatenate([dW.ravel(), db]) for dW, db in grads])
        numeric = _mlp_numeric_gradient(layers, activation, X, y, alpha)
        assert _relative_error(analytic, numeric) < 1e-4

    assert time.monotonic() - started < 30.0


def _central_difference(fn, theta, h=1e-6):
    grad = np.zeros_like(theta)
    for i in range(len(theta)):
        step = h * max(1.0, abs(theta[i]))
        plus, minus = theta.copy(), theta.copy()
        plus[i] += step
        minus[i] -= step
        grad[i] = (fn(plus) - fn(minus)) / (2.0 * step)
    return grad


def _mlp_numeric_gradient(layers, activation, X, y, alpha, h=1e-6):
    flat = []
    for li in range(len(layers)):
        for arr_i in range(2):
            arr = layers[li][arr_i]
            for idx in np.ndindex(arr.shape):
                def loss_with(delta):
                    perturbed = [(W.copy(), b.copy()) for W, b in layers]
                    perturbed[li][arr_i][idx] += delta
                    return mlp_forward_backward(perturbed, activation, X, y, alpha)[0]

                step = h * max(1.0, abs(arr[idx]))
                flat.append((loss_with(step) - loss_with(-step)) / (2.0 * step))
    return np.array(flat)


# --- 4 ------------------------------------------------------------------------------


@criterion("criterion 4 (SMO: separable problems solved to KKT, analytic 2-point case)")
def test_criterion_4_smo():
    rng = np.random.default_rng(404)
    for _ in range(100):
        X, y = separable_problem(rng, margin=0.5)
        alphas, bias, converged = smo_solve(
            X, y, cost=10.0, kkt_tolerance=1e-3, max_passes=300, seed=7
        )
        assert converged
        assert kkt_residuals(X, y, alphas, bias, 10.0).max() <= 1e-3
        signs = 2.0 * y - 1.0
        w = (alphas * signs) @ X
        predictions = ((X @ w + bias) >= 0.0).astype(int)
        assert np.array_equal(predictions, y)

    alphas, bias, _ = smo_solve(
        np.array([[-1.0], [1.0]]), np.array([0, 1]), cost=1.0, kkt_tolerance=1e-3,
        max_passes=50, seed=0,
    )
    assert abs(alphas[0] - 0.5) <= 1e-6
    assert abs(alphas[1] - 0.5) <= 1e-6
    assert abs(bias) <= 1e-6


# --- 5 ------------------------------------------------------------------------------


@criterion("criterion 5 (stumps match exhaustive split enumeration; impurity unit values)")
def test_criterion_5_trees():
    assert impurity((1, 3), (4, 0), "gini") == pytest.approx(0.1875, abs=1e-15)
    assert impurity((2, 2), (0, 0), "entropy") == pytest.approx(1.0, abs=1e-15)

    rng = np.random.default_rng(505)
    checked = 0
    while checked < 100:
        n = int(rng.integers(6, 40))
        d = int(rng.integers(1, 5))
        X = np.round(rng.uniform(size=(n, d)), 1)
        y = rng.integers(0, 2, size=n)
        if len(set(y)) < 2:
            continue
        criterion_name = ("gini", "entropy")[checked % 2]
        spec = RandomForestSpec(max_depth=1, max_features="all", criterion=criterion_name)
        tree = build_decision_tree(X, y, np.arange(n), spec, np.random.default_rng(1))

        best = None
        for f in range(d):
            values = np.unique(X[:, f])
            for lo, hi in zip(values[:-1], values[1:]):
                threshold = (lo + hi) / 2.0
                mask = X[:, f] <= threshold
                left = (int(((y == 0) & mask).sum()), int(((y == 1) & mask).sum()))
                right = (int(((y == 0) & ~mask).sum()), int(((y == 1) & ~mask).sum()))
                score = impurity(left, right, criterion_name)
                if best is None or score < best[0]:
                    best = (score, f, threshold)
        if best is None:
            assert tree.is_leaf()
        else:
            assert not tree.is_leaf()
            got = impurity(tuple(tree.left.counts), tuple(tree.right.counts), criterion_name)
            assert got == pytest.approx(best[0], abs=1e-12)
            assert (tree.feature, tree.threshold) == (best[1], pytest.approx(best[2]))
        checked += 1


# --- 6 ------------------------------------------------------------------------------


@criterion("criterion 6 (stratified folds: spread <= 1, disjoint, complete; 1000 cases)")
def test_criterion_6_stratification():
    rng = np.random.default_rng(606)
    for _ in range(1000):
        k = int(rng.integers(2, 11))
        n0 = int(rng.integers(k, 60))
        n1 = int(rng.integers(k, 60))
        labels = np.array([0] * n0 + [1] * n1)
        rng.shuffle(labels)
        plan = stratified_folds(labels, k, seed=int(rng.integers(0, 10_000)))
        assignment = np.array(plan.assignment)
        assert assignment.min() >= 0 and assignment.max() < k
        assert len(assignment) == n0 + n1  # every instance in exactly one fold
        for cls in (0, 1):
            counts = np.bincount(assignment[labels == cls], minlength=k)
            assert counts.max() - counts.min() <= 1


# --- 7 ------------------------------------------------------------------------------


@criterion("criterion 7 (bundled synthetic benchmark: forest >= 0.80 and beats kNN on shared folds)")
def test_criterion_7_synthetic_benchmark():
    started = time.monotonic()
    ds = make_benchmark_dataset(seed=42)
    assert len(ds) == 150 and ds.class_counts() == (75, 75)
    forest = cross_validate(RandomForestSpec(), ds, k=10, seed=42)
    knn = cross_validate(KnnSpec(), ds, k=10, seed=42)
    assert forest.mean >= 0.80
    assert forest.mean >= knn.mean
    assert time.monotonic() - started < 60.0


# --- 8 ------------------------------------------------------------------------------


@criterion("criterion 8 (default tune run: 32 in-domain candidates, recomputable verdict)")
def test_criterion_8_tuning_parity(tmp_path, capsys):
    ds = make_benchmark_dataset(seed=42)
    csv_path = tmp_path / "synthetic.csv"
    csv_path.write_text(write_dataset(ds), encoding="utf-8")
    trace_path = tmp_path / "trace.json"

    code = main(["tune", "--data", str(csv_path), "--out", str(trace_path)])
    stdout = capsys.readouterr().out
    assert code == 0

    trace = trace_from_json(trace_path.read_text(encoding="utf-8"))
    assert len(trace.entries) == 32

    space = builtin_rf_space()
    for entry in trace.entries:
        for name, domain in space.params.items():
            value = entry.params[name]
            if name == "max_features":
                assert value in ("sqrt", "log2")
            else:
                assert value in domain

    # verdict printed and recomputable from the trace file alone
    printed = next(l for l in stdout.splitlines() if l.startswith("verdict:"))
    recomputed = verdict(trace)
    assert printed == f"verdict: {recomputed.winner}"
    scores = [e.score for e in trace.entries if e.score is not None]
    assert trace.best.score == max(scores)
    assert trace.entries[trace.best_index].score == max(scores)

    # constructed case: the space cannot express the default forest, and its
    # only candidates cannot split a 135-instance training fold at all
    rigged = SearchSpace(
        params={
            "n_trees": IntegerSet((1,)),
            "max_depth": IntegerSet((1,)),
            "min_samples_leaf": IntegerSet((75,)),
        },
        n_iter=1,
        k=10,
    )
    assert 100 not in rigged.params["n_trees"]
    rigged_trace = search(rigged, ds, seed=42, strategy="random")
    assert verdict(rigged_trace).winner == "default wins"


# --- 9 ------------------------------------------------------------------------------


@criterion("criterion 9 (byte-identical benchmark reports; six algorithms under 5 minutes)")
def test_criterion_9_determinism(tmp_path):
    ds = make_benchmark_dataset(seed=42)
    csv_path = tmp_path / "synthetic.csv"
    csv_path.write_text(write_dataset(ds), encoding="utf-8")

    started = time.monotonic()
    args = ["benchmark", "--data", str(csv_path), "--algos", "all",
            "--folds", "10", "--seed", "42"]
    assert main(args + ["--out-dir", str(tmp_path / "a")]) == 0
    first_duration = time.monotonic() - started
    assert main(args + ["--out-dir", str(tmp_path / "b")]) == 0

    report_a = (tmp_path / "a" / "report.json").read_bytes()
    report_b = (tmp_path / "b" / "report.json").read_bytes()
    assert report_a == report_b
    assert first_duration < 300.0

    doc = json.loads(report_a)
    assert doc["algorithms"] == ["logreg", "nb", "svm", "mlp", "knn", "rf"]
