"""Gaussian naive Bayes for continuous audio attributes."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .base import PredictionOutput, check_training_data
from .specs import NaiveBayesSpec

_LOG_2PI = float(np.log(2.0 * np.pi))


@dataclass(frozen=True)
class NaiveBayesModel:
    means: np.ndarray       # shape (2, d), row 0 = disliked, row 1 = liked
    variances: np.ndarray   # shape (2, d), strictly positive
    log_priors: np.ndarray  # shape (2,)

    def class_log_posterior(self, x) -> tuple[float, float]:
        x = np.asarray(x, dtype=float)
        log_density = -0.5 * (
            _LOG_2PI + np.log(self.variances) + (x - self.means) ** 2 / self.variances
        ).sum(axis=1)
        joint = self.log_priors + log_density
        return float(joint[0]), float(joint[1])

    def predict_one(self, x) -> PredictionOutput:
        lp0, lp1 = self.class_log_posterior(x)
        # P(liked | x) via a stable two-class softmax
        m = max(lp0, lp1)
        score = np.exp(lp1 - m) / (np.exp(lp0 - m) + np.exp(lp1 - m))
        return PredictionOutput(label=int(score >= 0.5), score=float(score))


def fit_naive_bayes(spec: NaiveBayesSpec, X, y) -> tuple[NaiveBayesModel, list[str]]:
    X, y = check_training_data(X, y)
    means = np.stack([X[y == c].mean(axis=0) for c in (0, 1)])
    variances = np.stack([X[y == c].var(axis=0) for c in (0, 1)])
    priors = np.array([(y == c).mean() for c in (0, 1)])

    max_var = float(X.var(axis=0).max())
    epsilon = spec.variance_smoothing * max_var
    if epsilon <= 0.0:
        # Fully constant data leaves nothing to smooth against; keep the
        # variances strictly positive with an absolute floor.
        epsilon = max(spec.variance_smoothing, 1e-12)
    variances = variances + epsilon

    return NaiveBayesModel(means, variances, np.log(priors)), []


def nb_class_log_posterior(model: NaiveBayesModel, x) -> tuple[float, float]:
    """Log prior plus summed per-feature Gaussian log-density, per class.

    Returned as (disliked, liked); the larger entry is predict's label, with
    liked winning exact ties.
    """
    return model.class_log_posterior(x)
