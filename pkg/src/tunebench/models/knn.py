"""k-nearest-neighbor voting over raw attribute Euclidean distance."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .base import PredictionOutput, check_training_data
from .specs import KnnSpec


@dataclass(frozen=True)
class KnnModel:
    X: np.ndarray
    y: np.ndarray
    k: int
    weights: str

    def nearest(self, x, k) -> list[tuple[int, float]]:
        if k > len(self.y):
            raise ValueError(f"k={k} exceeds training size {len(self.y)}")
        d = np.sqrt(((self.X - np.asarray(x, dtype=float)) ** 2).sum(axis=1))
        # Sort by distance, then by training index for deterministic ties.
        order = np.lexsort((np.arange(len(d)), d))
        return [(int(i), float(d[i])) for i in order[:k]]

    def predict_one(self, x) -> PredictionOutput:
        neighbors = self.nearest(x, self.k)
        labels = np.array([self.y[i] for i, _ in neighbors], dtype=float)
        if self.weights == "uniform":
            score = float(labels.mean())
        else:
            dists = np.array([d for _, d in neighbors])
            exact = dists == 0.0
            if exact.any():
                # 1/d blows up at zero; exact matches take the whole vote.
                score = float(labels[exact].mean())
            else:
                w = 1.0 / dists
                score = float((w * labels).sum() / w.sum())
        return PredictionOutput(label=int(score >= 0.5), score=score)


def knn_nearest(model: KnnModel, x, k) -> list[tuple[int, float]]:
    """The k training points closest to x as (training index, distance),
    ascending by distance with index breaking exact ties."""
    return model.nearest(x, k)


def fit_knn(spec: KnnSpec, X, y) -> tuple[KnnModel, list[str]]:
    X, y = check_training_data(X, y)
    if spec.k > X.shape[0]:
        raise ValueError(f"k={spec.k} exceeds training size {X.shape[0]}")
    return KnnModel(X=X.copy(), y=y.copy(), k=spec.k, weights=spec.weights), []
