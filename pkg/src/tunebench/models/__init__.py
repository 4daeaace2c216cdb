"""Six from-scratch classifiers behind one fit/predict contract."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from ..dataset import AudioFeatures, Dataset
from .base import PredictionOutput, check_training_data
from .forest import ForestModel, TreeNode, build_decision_tree, fit_forest, forest_vote, impurity
from .knn import KnnModel, fit_knn, knn_nearest
from .logistic import LogisticModel, fit_logreg, logreg_objective_and_gradient
from .mlp import MlpModel, fit_mlp, init_layers, mlp_forward_backward
from .naive_bayes import NaiveBayesModel, fit_naive_bayes, nb_class_log_posterior
from .specs import (
    ALGORITHM_TAGS,
    ClassifierSpec,
    KnnSpec,
    LinearSvmSpec,
    LogisticRegressionSpec,
    MlpSpec,
    NaiveBayesSpec,
    RandomForestSpec,
    default_spec,
    spec_from_dict,
    spec_to_dict,
)
from .svm import SvmModel, fit_svm, kkt_residuals, smo_solve

MODEL_SCHEMA = "tunebench.model/1"

__all__ = [
    "ALGORITHM_TAGS",
    "ClassifierSpec",
    "KnnSpec",
    "LinearSvmSpec",
    "LogisticRegressionSpec",
    "MlpSpec",
    "NaiveBayesSpec",
    "RandomForestSpec",
    "PredictionOutput",
    "TrainedModel",
    "default_spec",
    "spec_from_dict",
    "spec_to_dict",
    "fit",
    "fit_arrays",
    "predict",
    "model_to_json",
    "model_from_json",
    "build_decision_tree",
    "forest_vote",
    "impurity",
    "init_layers",
    "kkt_residuals",
    "knn_nearest",
    "logreg_objective_and_gradient",
    "mlp_forward_backward",
    "nb_class_log_posterior",
    "smo_solve",
]


@dataclass(frozen=True)
class TrainedModel:
    """A fitted classifier: the spec it came from, its seed, and fitted state."""

    spec: ClassifierSpec
    seed: int
    state: object
    warnings: tuple[str, ...] = ()

    def predict_one(self, x) -> PredictionOutput:
        return self.state.predict_one(np.asarray(x, dtype=float))


def fit_arrays(spec: ClassifierSpec, X, y, seed: int = 0) -> TrainedModel:
    """Fit spec's algorithm on a feature matrix and 0/1 labels.

    Deterministic for fixed (spec, X, y, seed); non-convergence is attached
    as a warning on the returned model rather than raised.
    """
    if seed < 0:
        raise ValueError("seed must be non-negative")
    X, y = check_training_data(X, y)
    tag = spec.algorithm
    if tag == "logreg":
        state, warns = fit_logreg(spec, X, y)
    elif tag == "nb":
        state, warns = fit_naive_bayes(spec, X, y)
    elif tag == "svm":
        state, warns = fit_svm(spec, X, y, seed=seed)
    elif tag == "mlp":
        state, warns = fit_mlp(spec, X, y, seed=seed)
    elif tag == "knn":
        state, warns = fit_knn(spec, X, y)
    elif tag == "rf":
        state, warns = fit_forest(spec, X, y, seed=seed)
    else:
        raise ValueError(f"unknown algorithm {tag!r}")
    return TrainedModel(spec=spec, seed=seed, state=state, warnings=tuple(warns))


def fit(spec: ClassifierSpec, train: Dataset, seed: int = 0) -> TrainedModel:
    X, y = train.to_arrays()
    return fit_arrays(spec, X, y, seed=seed)


def predict(model: TrainedModel, f) -> PredictionOutput:
    """Classify one track; f may be an AudioFeatures record or a raw vector."""
    if isinstance(f, AudioFeatures):
        f = f.as_vector()
    return model.predict_one(f)


def _state_to_dict(state) -> dict:
    if isinstance(state, LogisticModel):
        return {"weights": state.weights.tolist(), "bias": state.bias}
    if isinstance(state, NaiveBayesModel):
        return {
            "means": state.means.tolist(),
            "variances": state.variances.tolist(),
            "log_priors": state.log_priors.tolist(),
        }
    if isinstance(state, SvmModel):
        return {
            "weights": state.weights.tolist(),
            "bias": state.bias,
            "alphas": state.alphas.tolist(),
        }
    if isinstance(state, MlpModel):
        return {
            "activation": state.activation,
            "layers": [[W.tolist(), b.tolist()] for W, b in state.layers],
        }
    if isinstance(state, KnnModel):
        return {
            "X": state.X.tolist(),
            "y": state.y.tolist(),
            "k": state.k,
            "weights": state.weights,
        }
    if isinstance(state, ForestModel):
        return {"trees": [tree.to_dict() for tree in state.trees]}
    raise TypeError(f"unknown model state {type(state).__name__}")


def _state_from_dict(tag: str, data: dict):
    if tag == "logreg":
        return LogisticModel(np.array(data["weights"], dtype=float), float(data["bias"]))
    if tag == "nb":
        return NaiveBayesModel(
            np.array(data["means"], dtype=float),
            np.array(data["variances"], dtype=float),
            np.array(data["log_priors"], dtype=float),
        )
    if tag == "svm":
        return SvmModel(
            np.array(data["weights"], dtype=float),
            float(data["bias"]),
            np.array(data["alphas"], dtype=float),
        )
    if tag == "mlp":
        layers = tuple(
            (np.array(W, dtype=float), np.array(b, dtype=float)) for W, b in data["layers"]
        )
        return MlpModel(layers=layers, activation=data["activation"])
    if tag == "knn":
        return KnnModel(
            np.array(data["X"], dtype=float),
            np.array(data["y"], dtype=np.int64),
            int(data["k"]),
            data["weights"],
        )
    if tag == "rf":
        return ForestModel(tuple(TreeNode.from_dict(t) for t in data["trees"]))
    raise ValueError(f"unknown algorithm {tag!r}")


def model_to_json(model: TrainedModel) -> str:
    doc = {
        "schema": MODEL_SCHEMA,
        "spec": spec_to_dict(model.spec),
        "seed": model.seed,
        "warnings": list(model.warnings),
        "state": _state_to_dict(model.state),
    }
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def model_from_json(text: str) -> TrainedModel:
    doc = json.loads(text)
    if doc.get("schema") != MODEL_SCHEMA:
        raise ValueError(f"unsupported model schema {doc.get('schema')!r}")
    spec = spec_from_dict(doc["spec"])
    state = _state_from_dict(spec.algorithm, doc["state"])
    return TrainedModel(
        spec=spec, seed=int(doc["seed"]), state=state, warnings=tuple(doc.get("warnings", ()))
    )
