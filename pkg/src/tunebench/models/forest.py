"""Random forest built on deterministic CART-style trees.

Split thresholds sit at midpoints of consecutive distinct sorted values;
impurity ties go to the lower feature index, then the lower threshold.
Per-tree RNG streams are spawned from the fit seed by tree index, so a
forest is bit-reproducible.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np

from .base import PredictionOutput, check_training_data
from .specs import RandomForestSpec


def _counts_impurity(zeros, ones, criterion):
    """Impurity of nodes given per-class counts; vectorized over arrays."""
    zeros = np.asarray(zeros, dtype=float)
    ones = np.asarray(ones, dtype=float)
    total = zeros + ones
    safe = np.maximum(total, 1.0)
    p0 = zeros / safe
    p1 = ones / safe
    if criterion == "gini":
        return 1.0 - p0 * p0 - p1 * p1
    if criterion == "entropy":
        t0 = np.where(p0 > 0.0, p0 * np.log2(np.maximum(p0, 1e-300)), 0.0)
        t1 = np.where(p1 > 0.0, p1 * np.log2(np.maximum(p1, 1e-300)), 0.0)
        return -(t0 + t1)
    raise ValueError(f"criterion must be 'gini' or 'entropy', got {criterion!r}")


def impurity(counts_left, counts_right, criterion="gini") -> float:
    """Size-weighted impurity of a two-way split given per-class counts."""
    left = np.asarray(counts_left, dtype=float)
    right = np.asarray(counts_right, dtype=float)
    n_left, n_right = left.sum(), right.sum()
    total = n_left + n_right
    if total <= 0:
        raise ValueError("at least one instance required")
    imp_left = float(_counts_impurity(left[0], left[1], criterion))
    imp_right = float(_counts_impurity(right[0], right[1], criterion))
    return (n_left * imp_left + n_right * imp_right) / total


class TreeNode:
    """One tree node; feature None marks a leaf."""

    __slots__ = ("feature", "threshold", "left", "right", "counts", "prediction")

    def __init__(self, counts):
        self.feature = None
        self.threshold = 0.0
        self.left = None
        self.right = None
        self.counts = counts  # (disliked, liked) sample counts at this node
        self.prediction = int(counts[1] > counts[0])

    def is_leaf(self):
        return self.feature is None

    def predict_one(self, x):
        node = self
        while not node.is_leaf():
            node = node.left if x[node.feature] <= node.threshold else node.right
        return node.prediction

    def leaf_count(self):
        if self.is_leaf():
            return 1
        return self.left.leaf_count() + self.right.leaf_count()

    def to_dict(self):
        out = {"counts": [int(self.counts[0]), int(self.counts[1])]}
        if not self.is_leaf():
            out["feature"] = int(self.feature)
            out["threshold"] = float(self.threshold)
            out["left"] = self.left.to_dict()
            out["right"] = self.right.to_dict()
        return out

    @classmethod
    def from_dict(cls, data):
        node = cls(tuple(data["counts"]))
        if "feature" in data:
            node.feature = data["feature"]
            node.threshold = data["threshold"]
            node.left = cls.from_dict(data["left"])
            node.right = cls.from_dict(data["right"])
        return node


def _n_candidate_features(max_features, d):
    if max_features == "sqrt":
        return max(1, int(np.sqrt(d)))
    if max_features == "log2":
        return max(1, int(np.log2(d)))
    return d


def _choose_features(X, idx, rng, budget):
    # Walk a fresh permutation, keeping non-constant features until the
    # budget is filled; constant columns cannot split and do not count.
    chosen = []
    for f in rng.permutation(X.shape[1]):
        col = X[idx, f]
        if col.min() < col.max():
            chosen.append(int(f))
            if len(chosen) >= budget:
                break
    chosen.sort()
    return chosen


def _best_split(X, y, idx, criterion, features, min_leaf_weight):
    """Best (weighted impurity, feature, threshold) over candidate features."""
    n = len(idx)
    best = None
    for f in features:
        xv = X[idx, f]
        order = np.argsort(xv, kind="stable")
        xs = xv[order]
        ys = y[idx][order]
        cut = np.flatnonzero(xs[:-1] < xs[1:])
        if cut.size == 0:
            continue
        n_left = cut + 1.0
        ones_left = np.cumsum(ys)[cut].astype(float)
        zeros_left = n_left - ones_left
        n_right = n - n_left
        ones_right = float(ys.sum()) - ones_left
        zeros_right = n_right - ones_right
        valid = (n_left >= min_leaf_weight) & (n_right >= min_leaf_weight)
        if not valid.any():
            continue
        weighted = (
            n_left * _counts_impurity(zeros_left, ones_left, criterion)
            + n_right * _counts_impurity(zeros_right, ones_right, criterion)
        ) / n
        weighted = np.where(valid, weighted, np.inf)
        at = int(np.argmin(weighted))
        score = float(weighted[at])
        if np.isfinite(score) and (best is None or score < best[0]):
            threshold = (xs[cut[at]] + xs[cut[at] + 1]) / 2.0
            best = (score, f, float(threshold))
    return best


class _TreeBuilder:
    def __init__(self, X, y, spec, rng):
        self.X = X
        self.y = y
        self.spec = spec
        self.rng = rng
        self.budget = _n_candidate_features(spec.max_features, X.shape[1])

    def build(self, idx):
        self.n_total = len(idx)
        self.min_leaf_weight = max(
            float(self.spec.min_samples_leaf),
            self.spec.min_weight_fraction_leaf * self.n_total,
        )
        if self.spec.max_leaf_nodes is None:
            root = self._make_node(idx)
            self._grow_depth_first(root, idx, 0)
        else:
            root = self._grow_best_first(idx)
        if self.spec.ccp_alpha > 0.0:
            _prune_cost_complexity(root, self.spec.ccp_alpha, self.n_total, self.spec.criterion)
        return root

    def _make_node(self, idx):
        ones = int(self.y[idx].sum())
        return TreeNode((len(idx) - ones, ones))

    def _split_decision(self, node, idx, depth):
        """Return (feature, threshold, decrease) when the node should split."""
        spec = self.spec
        n = len(idx)
        zeros, ones = node.counts
        if ones == 0 or zeros == 0:
            return None
        if spec.max_depth is not None and depth >= spec.max_depth:
            return None
        if n < spec.min_samples_split or n < 2 * self.min_leaf_weight:
            return None
        features = _choose_features(self.X, idx, self.rng, self.budget)
        if not features:
            return None
        best = _best_split(self.X, self.y, idx, spec.criterion, features, self.min_leaf_weight)
        if best is None:
            return None
        weighted, feature, threshold = best
        node_impurity = float(_counts_impurity(zeros, ones, spec.criterion))
        decrease = (n / self.n_total) * (node_impurity - weighted)
        if decrease < spec.min_impurity_decrease:
            return None
        return feature, threshold, decrease

    def _grow_depth_first(self, node, idx, depth):
        decision = self._split_decision(node, idx, depth)
        if decision is None:
            return
        feature, threshold, _ = decision
        mask = self.X[idx, feature] <= threshold
        node.feature = feature
        node.threshold = threshold
        node.left = self._make_node(idx[mask])
        node.right = self._make_node(idx[~mask])
        self._grow_depth_first(node.left, idx[mask], depth + 1)
        self._grow_depth_first(node.right, idx[~mask], depth + 1)

    def _grow_best_first(self, idx):
        root = self._make_node(idx)
        counter = 0
        frontier = []

        def consider(node, node_idx, depth):
            nonlocal counter
            decision = self._split_decision(node, node_idx, depth)
            if decision is not None:
                feature, threshold, decrease = decision
                heapq.heappush(frontier, (-decrease, counter, node, node_idx, depth, feature, threshold))
                counter += 1

        consider(root, idx, 0)
        leaves = 1
        while frontier and leaves < self.spec.max_leaf_nodes:
            _, _, node, node_idx, depth, feature, threshold = heapq.heappop(frontier)
            mask = self.X[node_idx, feature] <= threshold
            node.feature = feature
            node.threshold = threshold
            node.left = self._make_node(node_idx[mask])
            node.right = self._make_node(node_idx[~mask])
            leaves += 1
            consider(node.left, node_idx[mask], depth + 1)
            consider(node.right, node_idx[~mask], depth + 1)
        return root


def _prune_cost_complexity(root, ccp_alpha, n_total, criterion):
    """Weakest-link pruning: collapse subtrees whose effective alpha is lowest,
    while it does not exceed ccp_alpha."""

    def node_risk(node):
        zeros, ones = node.counts
        return (zeros + ones) / n_total * float(_counts_impurity(zeros, ones, criterion))

    def subtree(node):
        # (total leaf risk, leaf count)
        if node.is_leaf():
            return node_risk(node), 1
        lr, lc = subtree(node.left)
        rr, rc = subtree(node.right)
        return lr + rr, lc + rc

    while not root.is_leaf():
        weakest = None  # (alpha, preorder position, node)
        position = 0
        stack = [root]
        while stack:
            node = stack.pop()
            if not node.is_leaf():
                risk, leaves = subtree(node)
                alpha = (node_risk(node) - risk) / (leaves - 1)
                if weakest is None or alpha < weakest[0]:
                    weakest = (alpha, position, node)
                stack.append(node.right)
                stack.append(node.left)
            position += 1
        if weakest is None or weakest[0] > ccp_alpha:
            break
        node = weakest[2]
        node.feature = None
        node.left = None
        node.right = None


def build_decision_tree(X, y, indices, spec: RandomForestSpec, rng) -> TreeNode:
    """Grow one tree over X[indices] honoring every stopping rule in spec."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=np.int64)
    indices = np.asarray(indices, dtype=np.intp)
    if len(indices) == 0:
        raise ValueError("cannot build a tree from an empty index set")
    return _TreeBuilder(X, y, spec, rng).build(indices)


def forest_vote(trees, x) -> PredictionOutput:
    """Majority vote; score is the fraction voting liked. Even ties -> 0."""
    if not trees:
        raise ValueError("at least one tree required")
    votes = [tree.predict_one(x) for tree in trees]
    score = sum(votes) / len(votes)
    return PredictionOutput(label=int(score > 0.5), score=score)


@dataclass(frozen=True)
class ForestModel:
    trees: tuple[TreeNode, ...]

    def predict_one(self, x) -> PredictionOutput:
        return forest_vote(self.trees, np.asarray(x, dtype=float))


def fit_forest(spec: RandomForestSpec, X, y, seed=0) -> tuple[ForestModel, list[str]]:
    X, y = check_training_data(X, y)
    n = X.shape[0]
    trees = []
    for t in range(spec.n_trees):
        rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(t,)))
        idx = rng.integers(0, n, size=n) if spec.bootstrap else np.arange(n)
        trees.append(build_decision_tree(X, y, idx, spec, rng))
    return ForestModel(trees=tuple(trees)), []
