"""
Template learner implementation.
Copy this to create your own learner plugin.

As shipped it predicts the weighted majority label for every example, which
also makes it a handy baseline.
"""

from dataclasses import dataclass
from pathlib import Path
import sys
from typing import Any, Dict, Optional

import numpy as np

sys.path.insert(0, str(Path(__file__).parent.parent.parent))
from fairweigh.errors import EmptyTrainingSet
from fairweigh.learner_interface import TrainedModel, WeightedLearner


@dataclass(frozen=True)
class TemplateConfig:
    # Add your hyperparameters here; unknown learner.* keys are ignored
    pass


CONFIG_CLASS = TemplateConfig


class Model(TrainedModel):
    """
    Template model - replace with your parameters.
    """

    kind = "template"

    def __init__(self, label: int):
        self.label = int(label)

    def predict_matrix(self, X: np.ndarray) -> np.ndarray:
        """
        Must return an int64 array with one label in {0, 1} per row of X.
        """
        return np.full(np.asarray(X).shape[0], self.label, dtype=np.int64)

    def to_dict(self) -> Dict[str, Any]:
        # "kind" must match the plugin directory name
        return {"kind": self.kind, "label": self.label}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Model":
        return cls(data["label"])


class Learner(WeightedLearner):
    """
    Template learner - replace _fit() with your algorithm.
    """

    kind = "template"

    def __init__(self, config: Optional[TemplateConfig] = None):
        super().__init__(config or TemplateConfig())

    def _fit(self, X, y, w, seed, warm_start):
        """
        Fit on the training slice.

        Args:
            X: Training features (n, d)
            y: Training labels in {0, 1}
            w: Nonnegative weights, already validated
            seed: Use for any randomness
            warm_start: Previous Model when supports_warm_start is True, else None

        Returns:
            Model
        """
        if not w.sum() > 0:
            raise EmptyTrainingSet("All training weights are zero")
        positive = float(w[y == 1].sum())
        return Model(1 if positive >= float(w.sum()) - positive else 0)
