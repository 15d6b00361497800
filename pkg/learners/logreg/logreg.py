"""
Weighted logistic regression learner for fairweigh.

Minimizes (1 / sum w) * sum_i w_i * logloss_i + (l2 / 2) * ||coef||^2 by
full-batch gradient descent on features standardized with weighted
train-split statistics. Stops early once the largest gradient component
falls below tol, which is where warm starts pay off.
"""

import logging
from dataclasses import dataclass
from pathlib import Path
import sys
from typing import Any, Dict, Optional, Tuple

import numpy as np

sys.path.insert(0, str(Path(__file__).parent.parent.parent))
from fairweigh.errors import ConfigError, EmptyTrainingSet, NonFiniteLoss, SingleClassTrainingSet
from fairweigh.learner_interface import TrainedModel, WeightedLearner

_LOG = logging.getLogger("fairweigh.learners.logreg")


@dataclass(frozen=True)
class LogRegConfig:
    learning_rate: float = 0.1
    epochs: int = 500
    l2: float = 0.0
    tol: float = 1e-5

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ConfigError("learner.learning_rate must be positive")
        if not (isinstance(self.epochs, int) and self.epochs > 0):
            raise ConfigError("learner.epochs must be a positive integer")
        if self.l2 < 0:
            raise ConfigError("learner.l2 must be nonnegative")
        if self.tol < 0:
            raise ConfigError("learner.tol must be nonnegative")


CONFIG_CLASS = LogRegConfig


class Model(TrainedModel):
    """Coefficients and intercept in standardized space plus the standardization constants."""

    kind = "logreg"

    def __init__(self, coef: np.ndarray, intercept: float, mean: np.ndarray, scale: np.ndarray,
                 epochs_run: int = 0):
        self.coef = np.asarray(coef, dtype=float)
        self.intercept = float(intercept)
        self.mean = np.asarray(mean, dtype=float)
        self.scale = np.asarray(scale, dtype=float)
        self.epochs_run = epochs_run

    def decision_function(self, X: np.ndarray) -> np.ndarray:
        return ((np.asarray(X, dtype=float) - self.mean) / self.scale) @ self.coef + self.intercept

    def predict_matrix(self, X: np.ndarray) -> np.ndarray:
        # sigmoid(z) >= 0.5 exactly when z >= 0; ties predict 1
        return (self.decision_function(X) >= 0).astype(np.int64)

    def raw_parameters(self) -> Tuple[np.ndarray, float]:
        """Coefficients and intercept of the same linear function in raw feature space."""
        coef_raw = self.coef / self.scale
        return coef_raw, self.intercept - float(coef_raw @ self.mean)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": self.kind,
            "coef": self.coef.tolist(),
            "intercept": self.intercept,
            "mean": self.mean.tolist(),
            "scale": self.scale.tolist(),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Model":
        return cls(np.array(data["coef"], dtype=float), data["intercept"],
                   np.array(data["mean"], dtype=float), np.array(data["scale"], dtype=float))


def loss_and_gradient(params: np.ndarray, Z: np.ndarray, y: np.ndarray, w: np.ndarray,
                      l2: float = 0.0) -> Tuple[float, np.ndarray]:
    """
    Weighted mean log-loss and its gradient.

    Args:
        params: [intercept, coef_1, ..., coef_d]
        Z: Standardized features (n, d)
        y: Labels in {0, 1}
        w: Nonnegative weights with positive sum

    Returns:
        (loss, gradient) with gradient laid out like params
    """
    b, coef = params[0], params[1:]
    z = Z @ coef + b
    total = w.sum()
    # log(1 + e^z) - y z is the log-loss of sigmoid(z) against y
    loss = float(w @ (np.logaddexp(0.0, z) - y * z)) / total + 0.5 * l2 * float(coef @ coef)
    p = np.exp(-np.logaddexp(0.0, -z))
    r = w * (p - y) / total
    grad = np.empty_like(params)
    grad[0] = r.sum()
    grad[1:] = Z.T @ r + l2 * coef
    return loss, grad


def weighted_standardization(X: np.ndarray, w: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    total = w.sum()
    mean = (w @ X) / total
    var = (w @ (X - mean) ** 2) / total
    scale = np.sqrt(var)
    scale[~(scale > 1e-12)] = 1.0
    return mean, scale


class Learner(WeightedLearner):
    """Full-batch gradient descent on the weighted log-loss."""

    kind = "logreg"
    supports_warm_start = True

    def __init__(self, config: Optional[LogRegConfig] = None):
        super().__init__(config or LogRegConfig())

    def _fit(self, X, y, w, seed, warm_start):
        if np.unique(y).size < 2:
            raise SingleClassTrainingSet("Logistic regression needs both labels in the training set")
        if not w.sum() > 0:
            raise EmptyTrainingSet("All training weights are zero")

        cfg = self.config
        mean, scale = weighted_standardization(X, w)
        Z = (X - mean) / scale
        yf = y.astype(float)

        params = np.zeros(X.shape[1] + 1)
        if isinstance(warm_start, Model):
            coef_raw, b_raw = warm_start.raw_parameters()
            params[1:] = coef_raw * scale
            params[0] = b_raw + float(coef_raw @ mean)

        epoch = 0
        for epoch in range(1, cfg.epochs + 1):
            loss, grad = loss_and_gradient(params, Z, yf, w, cfg.l2)
            if not (np.isfinite(loss) and np.isfinite(grad).all()):
                raise NonFiniteLoss(f"Loss became non-finite at epoch {epoch}")
            if np.max(np.abs(grad)) < cfg.tol:
                break
            params = params - cfg.learning_rate * grad

        _LOG.debug("logreg fit: n=%d epochs=%d warm=%s loss=%.6f",
                   X.shape[0], epoch, warm_start is not None, loss)
        return Model(params[1:], params[0], mean, scale, epochs_run=epoch)


def weighted_log_loss(model: Model, X: np.ndarray, y: np.ndarray, w: np.ndarray, l2: float = 0.0) -> float:
    """Objective value of a fitted model on a weighted sample, in the model's own standardization."""
    Z = (np.asarray(X, dtype=float) - model.mean) / model.scale
    params = np.concatenate([[model.intercept], model.coef])
    return loss_and_gradient(params, Z, np.asarray(y, dtype=float), np.asarray(w, dtype=float), l2)[0]
