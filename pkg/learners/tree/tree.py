"""
Weighted CART decision tree learner for fairweigh.

Axis-aligned threshold splits chosen by the largest decrease of weighted Gini
impurity; candidate thresholds are midpoints between consecutive distinct
feature values. Zero-weight examples take no part in fitting, so integer
weights behave exactly like replicated examples.
"""

import logging
from dataclasses import dataclass
from pathlib import Path
import sys
from typing import Any, Dict, Optional, Tuple

import numpy as np

sys.path.insert(0, str(Path(__file__).parent.parent.parent))
from fairweigh.errors import ConfigError, EmptyTrainingSet
from fairweigh.learner_interface import TrainedModel, WeightedLearner

_LOG = logging.getLogger("fairweigh.learners.tree")

_GAIN_TOL = 1e-12


@dataclass(frozen=True)
class TreeConfig:
    max_depth: int = 4
    min_leaf_weight: float = 1.0

    def __post_init__(self):
        if not (isinstance(self.max_depth, int) and self.max_depth > 0):
            raise ConfigError("learner.max_depth must be a positive integer")
        if not self.min_leaf_weight > 0:
            raise ConfigError("learner.min_leaf_weight must be positive")


CONFIG_CLASS = TreeConfig


class Model(TrainedModel):
    """
    Nested-dict tree. Leaves are {"label": 0|1}; internal nodes are
    {"feature", "threshold", "left", "right"} with x[feature] <= threshold going left.
    """

    kind = "tree"

    def __init__(self, root: Dict[str, Any]):
        self.root = root

    def depth(self, node: Optional[Dict[str, Any]] = None) -> int:
        node = self.root if node is None else node
        if "label" in node:
            return 0
        return 1 + max(self.depth(node["left"]), self.depth(node["right"]))

    def predict_matrix(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        out = np.zeros(X.shape[0], dtype=np.int64)
        self._route(self.root, X, np.arange(X.shape[0]), out)
        return out

    def _route(self, node, X, rows, out) -> None:
        if rows.size == 0:
            return
        if "label" in node:
            out[rows] = node["label"]
            return
        go_left = X[rows, node["feature"]] <= node["threshold"]
        self._route(node["left"], X, rows[go_left], out)
        self._route(node["right"], X, rows[~go_left], out)

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": self.kind, "root": self.root}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Model":
        return cls(data["root"])


def gini(total: float, positive: float) -> float:
    """Gini impurity of a node holding total weight with positive weight on label 1."""
    if total <= 0:
        return 0.0
    p = positive / total
    return 1.0 - p * p - (1.0 - p) * (1.0 - p)


def best_split(X: np.ndarray, y: np.ndarray, w: np.ndarray,
               min_leaf_weight: float) -> Optional[Tuple[int, float, float]]:
    """
    Best (feature, threshold, gain) over all midpoint candidates, or None.

    Ties keep the lowest feature index, then the lowest threshold. Splits with
    zero gain are allowed (an impure node may need one, as in XOR).
    """
    total = w.sum()
    positive = w[y == 1].sum()
    parent = gini(total, positive)
    best = None
    best_gain = -np.inf
    for j in range(X.shape[1]):
        order = np.argsort(X[:, j], kind="stable")
        xs = X[order, j]
        cw = np.cumsum(w[order])
        cp = np.cumsum(w[order] * (y[order] == 1))
        for k in np.flatnonzero(xs[:-1] != xs[1:]):
            left_w, left_p = cw[k], cp[k]
            right_w, right_p = total - left_w, positive - left_p
            if left_w < min_leaf_weight or right_w < min_leaf_weight:
                continue
            gain = parent - (left_w / total) * gini(left_w, left_p) - (right_w / total) * gini(right_w, right_p)
            if gain > best_gain + _GAIN_TOL:
                best_gain = gain
                best = (j, (xs[k] + xs[k + 1]) / 2.0, gain)
    if best is None or best_gain < -_GAIN_TOL:
        return None
    return best


class Learner(WeightedLearner):
    """Greedy depth-limited CART with weighted Gini."""

    kind = "tree"

    def __init__(self, config: Optional[TreeConfig] = None):
        super().__init__(config or TreeConfig())

    def _fit(self, X, y, w, seed, warm_start):
        keep = w > 0
        if not keep.any():
            raise EmptyTrainingSet("All training weights are zero")
        root = self._grow(X[keep], y[keep], w[keep], 0)
        model = Model(root)
        _LOG.debug("tree fit: n=%d depth=%d", int(keep.sum()), model.depth())
        return model

    def _grow(self, X, y, w, depth) -> Dict[str, Any]:
        total = w.sum()
        positive = w[y == 1].sum()
        label = 1 if positive >= total - positive else 0
        if depth >= self.config.max_depth or positive == 0 or positive == total:
            return {"label": label}
        split = best_split(X, y, w, self.config.min_leaf_weight)
        if split is None:
            return {"label": label}
        j, threshold, _ = split
        left = X[:, j] <= threshold
        return {
            "feature": int(j),
            "threshold": float(threshold),
            "left": self._grow(X[left], y[left], w[left], depth + 1),
            "right": self._grow(X[~left], y[~left], w[~left], depth + 1),
        }
