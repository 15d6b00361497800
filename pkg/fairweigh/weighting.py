##! @file weighting.py
##! @brief Translate fairness constraints into per-example training weights
##!
##! @details
##! Maximizing AP + sum_j lambda_j * FP_j is the same as maximizing the
##! weighted accuracy (1/N) sum w_i 1(h(x_i) = y_i) with
##!     w_i = 1 + N * sum_j lambda_j * (c_i^{g1_j} [i in g1_j] - c_i^{g2_j} [i in g2_j])
##! up to the constant sum_j lambda_j (c0^{g1_j} - c0^{g2_j}).
##! N is the size of the index set being weighted (the training split).
##! Negative weights are clamped to 0 unless the caller opts out.

import logging
from dataclasses import dataclass, field, replace
from typing import Dict, Mapping, Optional, Sequence

import numpy as np

from .data import Dataset, as_index_set
from .errors import ConfigError
from .grouping import GroupAssignment
from .learner_interface import TrainedModel
from .metrics import MetricSpec, coefficients

_LOG = logging.getLogger("fairweigh.weighting")


@dataclass(frozen=True)
class FairnessConstraint:
    ##! @struct FairnessConstraint
    ##! @brief |f(h, g1) - f(h, g2)| <= epsilon for one ordered group pair
    id: str
    g1: str
    g2: str
    metric: MetricSpec
    epsilon: float

    def __post_init__(self):
        if self.g1 == self.g2:
            raise ConfigError(f"Constraint '{self.id}' compares group '{self.g1}' with itself")
        if not self.epsilon >= 0:
            raise ConfigError(f"Constraint '{self.id}' has negative epsilon {self.epsilon}")

    def swapped(self) -> "FairnessConstraint":
        """Same constraint with the group order reversed (FP changes sign)."""
        return replace(self, g1=self.g2, g2=self.g1)

    def describe(self) -> str:
        return f"{self.metric.name}({self.g1}) - {self.metric.name}({self.g2}), eps={self.epsilon:g}"


@dataclass(frozen=True)
class LambdaVector:
    ##! @struct LambdaVector
    ##! @brief Signed trade-off hyperparameter per constraint id
    values: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        values = {str(k): float(v) for k, v in dict(self.values).items()}
        if not all(np.isfinite(v) for v in values.values()):
            raise ConfigError(f"Lambda values must be finite: {values}")
        object.__setattr__(self, "values", values)

    def get(self, constraint_id: str) -> float:
        return self.values.get(constraint_id, 0.0)

    def with_value(self, constraint_id: str, value: float) -> "LambdaVector":
        values = dict(self.values)
        values[constraint_id] = float(value)
        return LambdaVector(values)

    def to_dict(self) -> Dict[str, float]:
        return dict(self.values)


@dataclass(frozen=True, eq=False)
class WeightVector:
    ##! @struct WeightVector
    ##! @brief Length-N weights plus how many were clamped at zero
    w: np.ndarray
    clamped: int = 0

    @property
    def clamp_warning(self) -> bool:
        return self.clamped > 0

    def __len__(self) -> int:
        return int(self.w.shape[0])


def derive_weights_multi(lambdas: LambdaVector, constraints: Sequence[FairnessConstraint],
                         dataset: Dataset, assignment: GroupAssignment,
                         model: Optional[TrainedModel] = None, subset=None,
                         clamp: bool = True) -> WeightVector:
    """
    Weights for a vector of constraints.

    Args:
        lambdas: Signed lambda per constraint id; absent ids count as 0
        constraints: Constraints in any order
        dataset: Dataset the groups index into
        assignment: Group index sets
        model: Current model, required when a metric with nonzero lambda
            depends on predictions
        subset: Index set being weighted (default all rows); rows outside keep weight 1
        clamp: Clamp negative weights to 0

    Raises:
        MissingModel, EmptyDenominator, EmptyIndexSet
    """
    sub = dataset.all_indices() if subset is None else as_index_set(subset)
    n = float(sub.size)
    delta = np.zeros(dataset.n, dtype=float)

    active = [c for c in constraints if lambdas.get(c.id) != 0.0]
    pred = None
    if model is not None and any(c.metric.parameterized_by_model() for c in active):
        pred = model.predict_batch(dataset)

    for c in active:
        lam = lambdas.get(c.id)
        for gid, sign in ((c.g1, 1.0), (c.g2, -1.0)):
            cs = coefficients(c.metric, assignment.restrict(gid, sub), dataset, predictions=pred)
            delta[cs.index] += sign * n * lam * cs.c

    w = 1.0 + delta
    clamped = 0
    if clamp:
        negative = w < 0
        clamped = int(np.count_nonzero(negative))
        if clamped:
            w[negative] = 0.0
            _LOG.warning("Clamped %d negative weights to 0 (lambdas=%s)", clamped, lambdas.to_dict())
    w.setflags(write=False)
    return WeightVector(w=w, clamped=clamped)


def derive_weights(lam: float, constraint: FairnessConstraint, dataset: Dataset,
                   assignment: GroupAssignment, model: Optional[TrainedModel] = None,
                   subset=None, clamp: bool = True) -> WeightVector:
    """
    Weights for a single constraint:
    1 + N*lam*c_i^{g1} on g1 only, 1 - N*lam*c_i^{g2} on g2 only, both terms on
    the overlap and 1 elsewhere.
    """
    return derive_weights_multi(LambdaVector({constraint.id: lam}), [constraint], dataset,
                                assignment, model=model, subset=subset, clamp=clamp)


def objective_offset(lambdas: LambdaVector, constraints: Sequence[FairnessConstraint],
                     dataset: Dataset, assignment: GroupAssignment,
                     model: Optional[TrainedModel] = None, subset=None) -> float:
    """
    sum_j lambda_j (c0^{g1_j} - c0^{g2_j}): the constant dropped when the
    surrogate objective is rewritten as weighted accuracy.
    """
    sub = dataset.all_indices() if subset is None else as_index_set(subset)
    pred = model.predict_batch(dataset) if model is not None else None
    total = 0.0
    for c in constraints:
        lam = lambdas.get(c.id)
        if lam == 0.0:
            continue
        c0_1 = coefficients(c.metric, assignment.restrict(c.g1, sub), dataset, predictions=pred).c0
        c0_2 = coefficients(c.metric, assignment.restrict(c.g2, sub), dataset, predictions=pred).c0
        total += lam * (c0_1 - c0_2)
    return total
