"""Classifier configuration types and their serializable dict form."""

from __future__ import annotations

from dataclasses import dataclass, fields
from typing import ClassVar, Optional, Union


@dataclass(frozen=True)
class LogisticRegressionSpec:
    algorithm: ClassVar[str] = "logreg"
    penalty: str = "l2"
    cost: float = 1.0
    max_iterations: int = 1000
    tolerance: float = 1e-6

    def __post_init__(self):
        if self.penalty not in ("l2", "l1"):
            raise ValueError(f"penalty must be 'l2' or 'l1', got {self.penalty!r}")
        if not self.cost > 0:
            raise ValueError("cost must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")


@dataclass(frozen=True)
class NaiveBayesSpec:
    algorithm: ClassVar[str] = "nb"
    # Smoothing is relative: added variance = variance_smoothing * max feature variance.
    variance_smoothing: float = 1e-9

    def __post_init__(self):
        if self.variance_smoothing < 0:
            raise ValueError("variance_smoothing must be non-negative")


@dataclass(frozen=True)
class LinearSvmSpec:
    algorithm: ClassVar[str] = "svm"
    cost: float = 1.0
    kkt_tolerance: float = 1e-3
    max_passes: int = 200

    def __post_init__(self):
        if not self.cost > 0:
            raise ValueError("cost must be positive")
        if not self.kkt_tolerance > 0:
            raise ValueError("kkt_tolerance must be positive")
        if self.max_passes < 1:
            raise ValueError("max_passes must be >= 1")


@dataclass(frozen=True)
class MlpSpec:
    algorithm: ClassVar[str] = "mlp"
    hidden_layers: tuple[int, ...] = (100,)
    activation: str = "relu"
    solver: str = "adam"
    alpha: float = 0.001
    max_epochs: int = 200
    learning_rate: float = 0.001

    def __post_init__(self):
        object.__setattr__(self, "hidden_layers", tuple(int(h) for h in self.hidden_layers))
        if any(h < 1 for h in self.hidden_layers):
            raise ValueError("hidden layer sizes must be positive")
        if self.activation not in ("identity", "logistic", "tanh", "relu"):
            raise ValueError(f"unknown activation {self.activation!r}")
        if self.solver not in ("lbfgs", "sgd", "adam"):
            raise ValueError(f"unknown solver {self.solver!r}")
        if self.alpha < 0:
            raise ValueError("alpha must be non-negative")
        if self.max_epochs < 1:
            raise ValueError("max_epochs must be >= 1")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")


@dataclass(frozen=True)
class KnnSpec:
    algorithm: ClassVar[str] = "knn"
    k: int = 5
    weights: str = "uniform"

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.weights not in ("uniform", "distance"):
            raise ValueError(f"weights must be 'uniform' or 'distance', got {self.weights!r}")


@dataclass(frozen=True)
class RandomForestSpec:
    algorithm: ClassVar[str] = "rf"
    n_trees: int = 100
    criterion: str = "gini"
    max_depth: Optional[int] = None
    max_features: str = "sqrt"
    min_samples_split: int = 2
    min_samples_leaf: int = 1
    min_weight_fraction_leaf: float = 0.0
    max_leaf_nodes: Optional[int] = None
    min_impurity_decrease: float = 0.0
    bootstrap: bool = True
    ccp_alpha: float = 0.0

    def __post_init__(self):
        if self.n_trees < 1:
            raise ValueError("n_trees must be >= 1")
        if self.criterion not in ("gini", "entropy"):
            raise ValueError(f"criterion must be 'gini' or 'entropy', got {self.criterion!r}")
        if self.max_depth is not None and self.max_depth < 1:
            raise ValueError("max_depth must be >= 1 or None")
        if self.max_features not in ("sqrt", "log2", "all"):
            raise ValueError(f"max_features must be 'sqrt', 'log2' or 'all', got {self.max_features!r}")
        if self.min_samples_split < 2:
            raise ValueError("min_samples_split must be >= 2")
        if self.min_samples_leaf < 1:
            raise ValueError("min_samples_leaf must be >= 1")
        if not 0.0 <= self.min_weight_fraction_leaf <= 0.5:
            raise ValueError("min_weight_fraction_leaf must lie in [0, 0.5]")
        if self.max_leaf_nodes is not None and self.max_leaf_nodes < 2:
            raise ValueError("max_leaf_nodes must be >= 2 or None")
        if self.min_impurity_decrease < 0:
            raise ValueError("min_impurity_decrease must be non-negative")
        if self.ccp_alpha < 0:
            raise ValueError("ccp_alpha must be non-negative")


ClassifierSpec = Union[
    LogisticRegressionSpec,
    NaiveBayesSpec,
    LinearSvmSpec,
    MlpSpec,
    KnnSpec,
    RandomForestSpec,
]

SPEC_CLASSES = {
    cls.algorithm: cls
    for cls in (
        LogisticRegressionSpec,
        NaiveBayesSpec,
        LinearSvmSpec,
        MlpSpec,
        KnnSpec,
        RandomForestSpec,
    )
}

# Canonical algorithm order; "all" on the CLI expands to this.
ALGORITHM_TAGS = ("logreg", "nb", "svm", "mlp", "knn", "rf")


def default_spec(tag: str) -> ClassifierSpec:
    try:
        return SPEC_CLASSES[tag]()
    except KeyError:
        raise ValueError(f"unknown algorithm {tag!r}; expected one of {ALGORITHM_TAGS}") from None


def spec_to_dict(spec: ClassifierSpec) -> dict:
    out = {"algorithm": spec.algorithm}
    for f in fields(spec):
        value = getattr(spec, f.name)
        if isinstance(value, tuple):
            value = list(value)
        out[f.name] = value
    return out


def spec_from_dict(data: dict) -> ClassifierSpec:
    data = dict(data)
    tag = data.pop("algorithm", None)
    if tag not in SPEC_CLASSES:
        raise ValueError(f"unknown algorithm {tag!r}")
    cls = SPEC_CLASSES[tag]
    known = {f.name for f in fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise ValueError(f"unknown {tag} parameters: {sorted(unknown)}")
    if "hidden_layers" in data:
        data["hidden_layers"] = tuple(data["hidden_layers"])
    return cls(**data)
