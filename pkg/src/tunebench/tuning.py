"""Sequential hyperparameter search for the forest, scored by shared-fold CV."""

from __future__ import annotations

import dataclasses
import json
import math
import warnings as _warnings
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .dataset import Dataset, DatasetSizeWarning, benchmark_size_note
from .evaluation import CrossValidationError, cross_validate, stratified_folds
from .models import RandomForestSpec, spec_to_dict
from .seeding import stable_seed

TRACE_SCHEMA = "tunebench.search/1"

# Parameter spellings accepted in override files.
_PARAM_ALIASES = {"n_estimators": "n_trees"}
_RF_FIELDS = {f.name for f in dataclasses.fields(RandomForestSpec)}


@dataclass(frozen=True)
class Categorical:
    values: tuple

    def __post_init__(self):
        if not self.values:
            raise ValueError("categorical domain must be non-empty")

    def sample(self, rng):
        return self.values[int(rng.integers(len(self.values)))]

    def __contains__(self, value):
        return value in self.values

    def size(self):
        return len(self.values)


@dataclass(frozen=True)
class IntegerSet:
    values: tuple[int, ...]

    def __post_init__(self):
        if not self.values:
            raise ValueError("integer domain must be non-empty")
        object.__setattr__(self, "values", tuple(int(v) for v in self.values))

    def sample(self, rng):
        return self.values[int(rng.integers(len(self.values)))]

    def __contains__(self, value):
        return value in self.values

    def size(self):
        return len(self.values)


@dataclass(frozen=True)
class LogUniform:
    low: float
    high: float

    def __post_init__(self):
        if not 0.0 < self.low < self.high:
            raise ValueError("log-uniform requires 0 < low < high")

    def sample(self, rng):
        return float(np.exp(rng.uniform(np.log(self.low), np.log(self.high))))

    def __contains__(self, value):
        return self.low <= value <= self.high

    def size(self):
        return None


ParamDomain = Union[Categorical, IntegerSet, LogUniform]


@dataclass(frozen=True)
class SearchSpace:
    params: dict[str, ParamDomain]
    n_iter: int = 32
    k: int = 10

    def __post_init__(self):
        if not self.params:
            raise ValueError("search space must name at least one parameter")
        if self.n_iter < 1:
            raise ValueError("n_iter must be >= 1")
        unknown = set(self.params) - _RF_FIELDS
        if unknown:
            raise ValueError(f"parameters are not forest options: {sorted(unknown)}")

    def finite_size(self) -> Optional[int]:
        total = 1
        for domain in self.params.values():
            size = domain.size()
            if size is None:
                return None
            total *= size
        return total


def builtin_rf_space(n_iter: int = 32, k: int = 10) -> SearchSpace:
    """The full forest search grid: tree count, split quality, every stopping
    rule, and both pruning knobs. 'auto' means the same as 'sqrt'."""
    return SearchSpace(
        params={
            "n_trees": IntegerSet((1, 10, 75, 100, 200, 1000)),
            "criterion": Categorical(("gini", "entropy")),
            "max_depth": IntegerSet((1, 10, 100, 1000, 10_000_000_000)),
            "min_samples_split": IntegerSet((2, 20, 50, 100)),
            "min_samples_leaf": IntegerSet((1, 2, 3, 4, 5, 6, 7, 8)),
            "min_weight_fraction_leaf": Categorical((0.0, 0.25, 0.5)),
            "max_features": Categorical(("auto", "sqrt", "log2")),
            "max_leaf_nodes": IntegerSet((2, 5, 10, 20, 50, 100)),
            "min_impurity_decrease": LogUniform(1e-6, 1e6),
            "bootstrap": Categorical((True, False)),
            "ccp_alpha": LogUniform(1e-6, 1e6),
        },
        n_iter=n_iter,
        k=k,
    )


def _spec_value(name, value):
    if name == "max_features" and value == "auto":
        return "sqrt"
    return value


def sample_candidate(space: SearchSpace, rng, base: Optional[RandomForestSpec] = None) -> RandomForestSpec:
    """One independent draw per parameter, applied over the base spec."""
    base = base or RandomForestSpec()
    sampled = {name: _spec_value(name, domain.sample(rng)) for name, domain in space.params.items()}
    return dataclasses.replace(base, **sampled)


def _candidate_key(spec: RandomForestSpec, space: SearchSpace):
    return tuple((name, getattr(spec, name)) for name in space.params)


@dataclass(frozen=True)
class TraceEntry:
    index: int
    params: dict
    score: Optional[float] = None
    error: Optional[str] = None


@dataclass(frozen=True)
class SearchTrace:
    dataset: str
    seed: int
    strategy: str
    n_iter: int
    k: int
    fold_assignment: tuple[int, ...]
    default_params: dict
    default_score: float
    entries: tuple[TraceEntry, ...]

    @property
    def best_index(self) -> Optional[int]:
        best = None
        for entry in self.entries:
            if entry.score is None:
                continue
            if best is None or entry.score > self.entries[best].score:
                best = entry.index
        return best

    @property
    def best(self) -> Optional[TraceEntry]:
        idx = self.best_index
        return None if idx is None else self.entries[idx]


@dataclass(frozen=True)
class Verdict:
    winner: str  # "tuned wins" | "default wins"
    best_score: Optional[float]
    default_score: float


def verdict(trace: SearchTrace) -> Verdict:
    """Compare the best candidate and the default on their shared folds.

    Ties (and searches where every candidate failed) go to the default.
    """
    best = trace.best
    if best is not None and best.score > trace.default_score:
        return Verdict("tuned wins", best.score, trace.default_score)
    return Verdict("default wins", None if best is None else best.score, trace.default_score)


# --- forest-based surrogate for the guided strategy ---------------------------

class _RegNode:
    __slots__ = ("feature", "threshold", "left", "right", "value")

    def __init__(self, value):
        self.feature = None
        self.threshold = 0.0
        self.left = None
        self.right = None
        self.value = value

    def predict(self, x):
        node = self
        while node.feature is not None:
            node = node.left if x[node.feature] <= node.threshold else node.right
        return node.value


def _best_mse_split(X, y, idx):
    best = None
    for f in range(X.shape[1]):
        xv = X[idx, f]
        order = np.argsort(xv, kind="stable")
        xs, ys = xv[order], y[idx][order]
        cut = np.flatnonzero(xs[:-1] < xs[1:])
        if cut.size == 0:
            continue
        csum = np.cumsum(ys)[cut]
        csq = np.cumsum(ys * ys)[cut]
        n_left = cut + 1.0
        n_right = len(idx) - n_left
        sse_left = csq - csum * csum / n_left
        total_sum, total_sq = float(ys.sum()), float((ys * ys).sum())
        sse_right = (total_sq - csq) - (total_sum - csum) ** 2 / n_right
        sse = sse_left + sse_right
        at = int(np.argmin(sse))
        if best is None or sse[at] < best[0]:
            best = (float(sse[at]), f, float((xs[cut[at]] + xs[cut[at] + 1]) / 2.0))
    return best


def _grow_reg_tree(X, y, idx, depth, rng):
    node = _RegNode(float(y[idx].mean()))
    if depth >= 6 or len(idx) < 4 or np.ptp(y[idx]) == 0.0:
        return node
    best = _best_mse_split(X, y, idx)
    if best is None:
        return node
    _, feature, threshold = best
    mask = X[idx, feature] <= threshold
    node.feature, node.threshold = feature, threshold
    node.left = _grow_reg_tree(X, y, idx[mask], depth + 1, rng)
    node.right = _grow_reg_tree(X, y, idx[~mask], depth + 1, rng)
    return node


def _fit_surrogate(X, y, rng, n_trees=25):
    trees = []
    for _ in range(n_trees):
        idx = rng.integers(0, len(y), size=len(y))
        trees.append(_grow_reg_tree(X, y, idx, 0, rng))
    return trees


def _surrogate_stats(trees, x):
    preds = np.array([t.predict(x) for t in trees])
    return float(preds.mean()), float(preds.std())


def _expected_improvement(mu, sigma, best):
    gap = mu - best
    if sigma <= 0.0:
        return max(0.0, gap)
    z = gap / sigma
    cdf = 0.5 * (1.0 + math.erf(z / math.sqrt(2.0)))
    pdf = math.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)
    return gap * cdf + sigma * pdf


def _encode(spec: RandomForestSpec, space: SearchSpace) -> np.ndarray:
    out = []
    for name, domain in space.params.items():
        value = getattr(spec, name)
        if isinstance(domain, LogUniform):
            out.append(math.log(value))
        elif isinstance(domain, Categorical):
            # The spec holds mapped values ('auto' -> 'sqrt'), so map the
            # domain the same way before looking the value up.
            values = [_spec_value(name, v) for v in domain.values]
            out.append(float(values.index(value)))
        else:
            out.append(float(value))
    return np.array(out)


# ------------------------------------------------------------------------------

def search(
    space: SearchSpace,
    dataset: Dataset,
    base_spec: Optional[RandomForestSpec] = None,
    seed: int = 42,
    strategy: str = "random",
    scorer=None,
) -> SearchTrace:
    """Evaluate space.n_iter candidates under one shared fold plan.

    The random strategy draws independently, without replacement when every
    domain is finite. The surrogate strategy spends ceil(n_iter/4) draws on
    random warm-up, then repeatedly picks the expected-improvement maximizer
    (under a small regression forest fitted to the scores so far) among 64
    random proposals. Candidate failures are recorded and skipped.
    """
    if strategy not in ("random", "surrogate"):
        raise ValueError(f"unknown strategy {strategy!r}")
    base = base_spec or RandomForestSpec()
    _, y = dataset.to_arrays()
    plan = stratified_folds(y, space.k, seed)
    if scorer is None:
        def scorer(spec, plan=plan):
            return cross_validate(spec, dataset, k=space.k, seed=seed, plan=plan).mean

    note = benchmark_size_note(dataset)
    if note:
        _warnings.warn(note, DatasetSizeWarning)

    rng = np.random.default_rng(stable_seed(seed, dataset.name, strategy, "sampler"))
    finite = space.finite_size()
    seen: set = set()
    warmup = space.n_iter if strategy == "random" else math.ceil(space.n_iter / 4)

    def draw_unseen():
        while True:
            if finite is not None and len(seen) >= finite:
                return None
            spec = sample_candidate(space, rng, base)
            key = _candidate_key(spec, space)
            if key not in seen:
                return spec, key

    default_score = scorer(base)

    entries: list[TraceEntry] = []
    encoded: list[np.ndarray] = []
    scores: list[float] = []
    while len(entries) < space.n_iter:
        if len(entries) < warmup or len(scores) < 2:
            drawn = draw_unseen()
        else:
            surrogate = _fit_surrogate(np.stack(encoded), np.array(scores), rng)
            best_score = max(scores)
            drawn = None
            best_ei = -1.0
            for _ in range(64):
                spec = sample_candidate(space, rng, base)
                key = _candidate_key(spec, space)
                if key in seen:
                    continue
                mu, sigma = _surrogate_stats(surrogate, _encode(spec, space))
                ei = _expected_improvement(mu, sigma, best_score)
                if ei > best_ei:
                    best_ei = ei
                    drawn = (spec, key)
            if drawn is None:
                drawn = draw_unseen()
        if drawn is None:
            break  # finite space exhausted
        spec, key = drawn
        seen.add(key)
        index = len(entries)
        params = {name: getattr(spec, name) for name in space.params}
        try:
            score = scorer(spec)
        except (ValueError, CrossValidationError) as exc:
            entries.append(TraceEntry(index=index, params=params, error=str(exc)))
            continue
        entries.append(TraceEntry(index=index, params=params, score=float(score)))
        encoded.append(_encode(spec, space))
        scores.append(float(score))

    return SearchTrace(
        dataset=dataset.name,
        seed=seed,
        strategy=strategy,
        n_iter=space.n_iter,
        k=space.k,
        fold_assignment=plan.assignment,
        default_params=spec_to_dict(base),
        default_score=float(default_score),
        entries=tuple(entries),
    )


# --- serialization -------------------------------------------------------------

def _domain_to_dict(domain: ParamDomain) -> dict:
    if isinstance(domain, Categorical):
        return {"type": "categorical", "values": list(domain.values)}
    if isinstance(domain, IntegerSet):
        return {"type": "integers", "values": list(domain.values)}
    return {"type": "log_uniform", "low": domain.low, "high": domain.high}


def _domain_from_dict(data: dict) -> ParamDomain:
    kind = data.get("type")
    if kind == "categorical":
        return Categorical(tuple(data["values"]))
    if kind == "integers":
        return IntegerSet(tuple(data["values"]))
    if kind == "log_uniform":
        return LogUniform(float(data["low"]), float(data["high"]))
    raise ValueError(f"unknown domain type {kind!r}")


def space_from_json(text: str, n_iter: int = 32, k: int = 10) -> SearchSpace:
    """Parse an override file mapping parameter names to domain descriptors."""
    doc = json.loads(text)
    if not isinstance(doc, dict):
        raise ValueError("search space file must be a JSON object")
    params = {}
    for raw_name, descriptor in doc.items():
        name = _PARAM_ALIASES.get(raw_name, raw_name)
        params[name] = _domain_from_dict(descriptor)
    return SearchSpace(params=params, n_iter=n_iter, k=k)


def space_to_json(space: SearchSpace) -> str:
    doc = {name: _domain_to_dict(domain) for name, domain in space.params.items()}
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def trace_to_json(trace: SearchTrace) -> str:
    doc = {
        "schema": TRACE_SCHEMA,
        "dataset": trace.dataset,
        "seed": trace.seed,
        "strategy": trace.strategy,
        "n_iter": trace.n_iter,
        "k": trace.k,
        "fold_assignment": list(trace.fold_assignment),
        "default_params": trace.default_params,
        "default_score": trace.default_score,
        "best_index": trace.best_index,
        "entries": [
            {"index": e.index, "params": e.params, "score": e.score, "error": e.error}
            for e in trace.entries
        ],
    }
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def trace_from_json(text: str) -> SearchTrace:
    doc = json.loads(text)
    if doc.get("schema") != TRACE_SCHEMA:
        raise ValueError(f"unsupported trace schema {doc.get('schema')!r}")
    entries = tuple(
        TraceEntry(
            index=int(e["index"]),
            params=e["params"],
            score=e["score"],
            error=e.get("error"),
        )
        for e in doc["entries"]
    )
    return SearchTrace(
        dataset=doc["dataset"],
        seed=int(doc["seed"]),
        strategy=doc["strategy"],
        n_iter=int(doc["n_iter"]),
        k=int(doc["k"]),
        fold_assignment=tuple(doc["fold_assignment"]),
        default_params=doc["default_params"],
        default_score=float(doc["default_score"]),
        entries=entries,
    )
