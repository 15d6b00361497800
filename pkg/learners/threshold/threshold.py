"""
Exact threshold-rule learner for fairweigh.

The hypothesis family is every rule 1[x_f >= t] or 1[x_f < t] on one feature,
with t drawn from at most max_thresholds candidates. fit() returns the rule
with the largest weighted accuracy, found by enumeration, so for any weights
(negative ones included) it solves the weighted problem exactly. That makes it
the reference learner for checking how accuracy and fairness respond to lambda.
"""

import logging
from dataclasses import dataclass
from pathlib import Path
import sys
from typing import Any, Dict, Optional

import numpy as np

sys.path.insert(0, str(Path(__file__).parent.parent.parent))
from fairweigh.errors import ConfigError, EmptyTrainingSet
from fairweigh.learner_interface import TrainedModel, WeightedLearner

_LOG = logging.getLogger("fairweigh.learners.threshold")


@dataclass(frozen=True)
class ThresholdConfig:
    feature: int = 0
    max_thresholds: int = 200
    both_directions: bool = True

    def __post_init__(self):
        if not (isinstance(self.feature, int) and self.feature >= 0):
            raise ConfigError("learner.feature must be a nonnegative integer")
        if not (isinstance(self.max_thresholds, int) and self.max_thresholds >= 2):
            raise ConfigError("learner.max_thresholds must be an integer >= 2")


CONFIG_CLASS = ThresholdConfig


class Model(TrainedModel):
    kind = "threshold"

    def __init__(self, feature: int, threshold: float, direction: int = 1):
        self.feature = int(feature)
        self.threshold = float(threshold)
        self.direction = int(direction)

    def predict_matrix(self, X: np.ndarray) -> np.ndarray:
        above = np.asarray(X, dtype=float)[:, self.feature] >= self.threshold
        return (above if self.direction > 0 else ~above).astype(np.int64)

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": self.kind, "feature": self.feature,
                "threshold": self.threshold, "direction": self.direction}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Model":
        return cls(data["feature"], data["threshold"], data.get("direction", 1))


def candidate_thresholds(values: np.ndarray, max_thresholds: int) -> np.ndarray:
    """Distinct values (thinned evenly when too many) followed by +inf."""
    uniq = np.unique(values)
    limit = max_thresholds - 1
    if uniq.size > limit:
        uniq = uniq[np.unique(np.linspace(0, uniq.size - 1, limit).round().astype(int))]
    return np.append(uniq, np.inf)


class Learner(WeightedLearner):
    """Enumerate every candidate rule and keep the first with maximal weighted accuracy."""

    kind = "threshold"
    accepts_negative_weights = True

    def __init__(self, config: Optional[ThresholdConfig] = None):
        super().__init__(config or ThresholdConfig())

    def _fit(self, X, y, w, seed, warm_start):
        cfg = self.config
        nonzero = w != 0
        if not nonzero.any():
            raise EmptyTrainingSet("All training weights are zero")
        x = X[:, cfg.feature]
        thresholds = candidate_thresholds(x[nonzero], cfg.max_thresholds)

        above = (x[None, :] >= thresholds[:, None]).astype(float)
        below = 1.0 - above
        w_pos = w * (y == 1)
        w_neg = w * (y == 0)
        scores = [above @ w_pos + below @ w_neg]
        if cfg.both_directions:
            scores.append(below @ w_pos + above @ w_neg)
        scores = np.concatenate(scores)

        best = int(np.argmax(scores))
        direction = 1 if best < thresholds.size else -1
        t = thresholds[best % thresholds.size]
        _LOG.debug("threshold fit: feature=%d t=%g direction=%d score=%.6f",
                   cfg.feature, t, direction, scores[best])
        return Model(cfg.feature, t, direction)
