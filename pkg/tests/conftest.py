"""
Shared fixtures for the fairweigh test suite.
"""

import sys
import logging
from pathlib import Path
from typing import Any, Dict

import numpy as np
import pytest

# Add repository root to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from fairweigh.data import DataSplit, Dataset, SplitSpec, split
from fairweigh.grouping import GroupingSpec, assign_groups
from fairweigh.learner_interface import TrainedModel, WeightedLearner
from fairweigh.metrics import register_metric
from fairweigh.synthetic import SyntheticSpec, generate

logging.basicConfig(
    level=logging.INFO,
    format="%(asctime)s | %(levelname)s | %(name)s | %(message)s"
)

_LOG = logging.getLogger("fairweigh.tests")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: end-to-end runs that take tens of seconds or more")


def _sp_coefficients(y, pred):
    n = y.size
    return np.where(y == 1, 1.0 / n, -1.0 / n), float(np.count_nonzero(y == 0)) / n


# SP coefficients declared as prediction-dependent so the tuner takes the linear path
register_metric("sp_theta", _sp_coefficients, parameterized_by_model=True)


class FixedModel(TrainedModel):
    """Predicts a stored label per row; feature 0 holds the row index."""

    kind = "fixed"

    def __init__(self, predictions):
        self.predictions = np.asarray(predictions, dtype=np.int64)

    def predict_matrix(self, X: np.ndarray) -> np.ndarray:
        return self.predictions[np.asarray(X, dtype=float)[:, 0].astype(np.int64)]

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": self.kind, "predictions": self.predictions.tolist()}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "FixedModel":
        return cls(data["predictions"])


class WeightBlindLearner(WeightedLearner):
    """Wraps a learner and fits it with unit weights, so lambda changes nothing."""

    def __init__(self, inner: WeightedLearner):
        super().__init__(inner.config)
        self.inner = inner
        self.kind = f"blind-{inner.kind}"
        self.accepts_negative_weights = inner.accepts_negative_weights
        self.calls = 0

    def _fit(self, X, y, w, seed, warm_start):
        self.calls += 1
        return self.inner._fit(X, y, np.ones_like(w), seed, None)


def indexed_dataset(y, groups, extra=None) -> Dataset:
    """Dataset whose feature 0 is the row index (for FixedModel) and raw column 'group'."""
    y = np.asarray(y, dtype=np.int64)
    columns = [np.arange(y.size, dtype=float)]
    names = ["row"]
    if extra is not None:
        columns.append(np.asarray(extra, dtype=float))
        names.append("x")
    return Dataset(X=np.column_stack(columns), y=y, feature_names=tuple(names),
                   raw={"group": tuple(groups)})


@pytest.fixture
def eight_rows():
    """A: labels [1,1,0,0] predictions [1,0,0,0]; B: labels [1,0,0,0] predictions [1,1,0,0]."""
    dataset = indexed_dataset([1, 1, 0, 0, 1, 0, 0, 0], ["A"] * 4 + ["B"] * 4)
    model = FixedModel([1, 0, 0, 0, 1, 1, 0, 0])
    assignment = assign_groups(dataset, GroupingSpec(attribute_names=("group",)))
    return dataset, model, assignment


@pytest.fixture(scope="session")
def planted_sp():
    """Two-group planted SP data (gap 0.2) with its split and groups."""
    dataset = generate(SyntheticSpec(n=2000, gap=0.2, seed=7))
    parts = split(dataset, SplitSpec(seed=7))
    assignment = assign_groups(dataset, GroupingSpec(attribute_names=("group",)))
    return dataset, parts, assignment


@pytest.fixture(scope="session")
def threshold_learner():
    from learners.threshold import Learner
    return Learner()


@pytest.fixture(scope="session")
def logreg_learner():
    from learners.logreg import Learner
    return Learner()


class ScriptedLearner(WeightedLearner):
    """Returns a fixed sequence of models, one per fit, and records the weights it was given."""

    kind = "scripted"
    accepts_negative_weights = True

    def __init__(self, models):
        super().__init__(None)
        self.models = list(models)
        self.weights = []

    @property
    def calls(self) -> int:
        return len(self.weights)

    def _fit(self, X, y, w, seed, warm_start):
        model = self.models[min(self.calls, len(self.models) - 1)]
        self.weights.append(np.array(w, copy=True))
        return model


def sp_model(a: int, b: int) -> FixedModel:
    """On the twenty-row fixture: a of A's ten rows and b of B's ten rows predicted positive."""
    pred = np.zeros(20, dtype=np.int64)
    pred[:a] = 1
    pred[10:10 + b] = 1
    return FixedModel(pred)


@pytest.fixture
def twenty_rows():
    """Ten rows per group; train, validation and test all cover every row."""
    y = [1, 1, 1, 1, 0, 0, 0, 0, 0, 0] * 2
    dataset = indexed_dataset(y, ["A"] * 10 + ["B"] * 10)
    everything = np.arange(20)
    parts = DataSplit(train=everything, validation=everything, test=everything)
    assignment = assign_groups(dataset, GroupingSpec(attribute_names=("group",)))
    return dataset, parts, assignment
