"""
Learner Interface Contract for fairweigh
All learner plug-ins under learners/ implement these two classes.
"""

import importlib
import logging
from abc import ABC, abstractmethod
from typing import Any, Dict, Optional, Sequence

import numpy as np

from .data import Dataset, as_index_set
from .errors import EmptyTrainingSet, LearnerError, UnknownLearner

_LOG = logging.getLogger("fairweigh.learners")


class TrainedModel(ABC):
    """
    A fitted hard classifier h_theta with outputs in {0, 1}.

    Subclasses hold their parameters theta and must be deterministic.
    """

    kind: str = "abstract"

    @abstractmethod
    def predict_matrix(self, X: np.ndarray) -> np.ndarray:
        """
        Predict labels for a feature matrix.

        Args:
            X: Array of shape (n, d) in raw feature space

        Returns:
            int64 array of n labels in {0, 1}
        """

    def predict(self, features: Sequence[float]) -> int:
        return int(self.predict_matrix(np.asarray(features, dtype=float).reshape(1, -1))[0])

    def predict_batch(self, dataset: Dataset, indices=None) -> np.ndarray:
        """Predict every example of dataset, or only those in indices (in sorted order)."""
        if indices is None:
            return self.predict_matrix(dataset.X)
        idx = np.asarray(indices, dtype=np.int64)
        if idx.size == 0:
            return np.zeros(0, dtype=np.int64)
        return self.predict_matrix(dataset.X[idx])

    @abstractmethod
    def to_dict(self) -> Dict[str, Any]:
        """
        Self-describing JSON-ready representation.

        Must contain "kind" so model_from_dict can find the plug-in.
        """

    @classmethod
    @abstractmethod
    def from_dict(cls, data: Dict[str, Any]) -> "TrainedModel":
        """Inverse of to_dict."""


class WeightedLearner(ABC):
    """
    Black-box learning algorithm that accepts per-example weights.

    fit() validates inputs once and hands the training slice to _fit().
    Weights of examples outside the training index set are ignored.
    """

    kind: str = "abstract"
    supports_warm_start: bool = False
    accepts_negative_weights: bool = False

    def __init__(self, config: Any = None):
        self.config = config

    def fit(self, dataset: Dataset, train, weights: Optional[np.ndarray] = None,
            seed: int = 0, warm_start: Optional[TrainedModel] = None) -> TrainedModel:
        """
        Fit on dataset rows listed in train.

        Args:
            dataset: Full dataset
            train: Training index set
            weights: Length-N weight vector (all ones when None)
            seed: Seed for any randomness inside the learner
            warm_start: Model whose parameters initialize optimization

        Returns:
            TrainedModel
        """
        idx = as_index_set(train)
        if idx.size == 0:
            raise EmptyTrainingSet("Training index set is empty")
        if weights is None:
            w = np.ones(idx.size, dtype=float)
        else:
            weights = np.asarray(weights, dtype=float)
            if weights.shape != (dataset.n,):
                raise LearnerError(f"Weight vector has shape {weights.shape}, expected ({dataset.n},)")
            w = weights[idx]
        if not np.isfinite(w).all():
            raise LearnerError("Weights must be finite")
        if not self.accepts_negative_weights and (w < 0).any():
            raise LearnerError(f"{self.kind} learner requires nonnegative weights")
        if not self.supports_warm_start:
            warm_start = None
        return self._fit(dataset.X[idx], dataset.y[idx], w, seed, warm_start)

    @abstractmethod
    def _fit(self, X: np.ndarray, y: np.ndarray, w: np.ndarray, seed: int,
             warm_start: Optional[TrainedModel]) -> TrainedModel:
        """Fit on an already sliced training set."""


def load_learner_module(kind: str):
    """Import learners.<kind>.<kind> (nested layout) or learners.<kind> (flat)."""
    try:
        try:
            return importlib.import_module(f"learners.{kind}.{kind}")
        except ModuleNotFoundError:
            return importlib.import_module(f"learners.{kind}")
    except Exception as e:
        _LOG.error("Failed to load learner '%s'", kind)
        raise UnknownLearner(f"Learner load error for '{kind}': {e}")


def make_learner(kind: str, params: Optional[Dict[str, Any]] = None) -> WeightedLearner:
    """
    Instantiate a learner plug-in from flat parameters.

    Unknown parameter names are ignored so a shared config section can feed
    every learner kind.
    """
    mod = load_learner_module(kind)
    config_cls = getattr(mod, "CONFIG_CLASS", None)
    if config_cls is None:
        return mod.Learner()
    fields = getattr(config_cls, "__dataclass_fields__", {})
    kwargs = {k: v for k, v in (params or {}).items() if k in fields}
    return mod.Learner(config_cls(**kwargs))


def model_from_dict(data: Dict[str, Any]) -> TrainedModel:
    """Rebuild a persisted model of any kind."""
    if "kind" not in data:
        raise LearnerError("Model document has no 'kind'")
    return load_learner_module(data["kind"]).Model.from_dict(data)
