##! @file metrics.py
##! @brief Group fairness metrics in linear coefficient form
##!
##! @details
##! Every supported metric is written as
##!     f(h, g) = sum_{i in g} c_i * 1(h(x_i) = y_i) + c_0
##! so that a fairness gap between two groups is linear in the per-example
##! correctness indicators. This module produces the coefficient sets and
##! evaluates metric values, signed gaps (FP) and accuracy (AP).
##!
##! Metrics:
##! - MR   misclassification-rate parity (group accuracy)
##! - SP   statistical parity, Pr(h=1 | g)
##! - FPR  false positive rate parity (coefficient form is Pr(h=0 | y=0, g))
##! - FNR  false negative rate parity (coefficient form is Pr(h=1 | y=1, g))
##! - FOR  false omission rate, Pr(y=1 | h=0, g); depends on the model
##! - FDR  false discovery rate, Pr(y=0 | h=1, g); depends on the model
##! - AEC  average cost of error with user costs (C_fp, C_fn)
##! - custom  user-registered coefficient function

import logging
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Callable, Dict, Iterable, Optional, Sequence, Tuple

import numpy as np

from .data import Dataset, as_index_set
from .errors import EmptyDenominator, EmptyIndexSet, MissingModel, UnknownMetric
from .grouping import GroupAssignment
from .learner_interface import TrainedModel

if TYPE_CHECKING:
    from .weighting import FairnessConstraint

_LOG = logging.getLogger("fairweigh.metrics")

BUILTIN_METRICS = ("MR", "SP", "FPR", "FNR", "FOR", "FDR", "AEC")
AUDIT_METRICS = ("MR", "SP", "FPR", "FNR", "FOR", "FDR")
METRIC_KINDS = BUILTIN_METRICS + ("custom",)
_MODEL_PARAMETERIZED = frozenset({"FOR", "FDR"})

# (labels, predictions or None) -> (c, c0)
CoefficientFn = Callable[[np.ndarray, Optional[np.ndarray]], Tuple[np.ndarray, float]]


@dataclass(frozen=True)
class _CustomMetric:
    fn: CoefficientFn
    parameterized_by_model: bool


_CUSTOM: Dict[str, _CustomMetric] = {}


def register_metric(name: str, fn: CoefficientFn, parameterized_by_model: bool = False) -> None:
    """
    Register a custom metric coefficient function.

    fn receives the group's labels and, when parameterized_by_model is set,
    the model's predictions on the same rows; it returns (c, c0).
    """
    _CUSTOM[name] = _CustomMetric(fn, bool(parameterized_by_model))
    _LOG.debug("Registered custom metric '%s' (parameterized=%s)", name, parameterized_by_model)


@dataclass(frozen=True)
class MetricSpec:
    ##! @struct MetricSpec
    ##! @brief Which metric to compute and its extra parameters
    kind: str
    aec_costs: Optional[Tuple[float, float]] = None
    custom_coefficient_fn: Optional[str] = None

    def __post_init__(self):
        if self.kind not in METRIC_KINDS:
            raise UnknownMetric(f"Unknown metric '{self.kind}'. Available: {', '.join(METRIC_KINDS)}")
        if self.kind == "AEC":
            if self.aec_costs is None:
                raise UnknownMetric("AEC metric requires aec_costs (C_fp, C_fn)")
            c_fp, c_fn = (float(v) for v in self.aec_costs)
            if c_fp < 0 or c_fn < 0:
                raise UnknownMetric("AEC costs must be nonnegative")
            object.__setattr__(self, "aec_costs", (c_fp, c_fn))
        if self.kind == "custom" and not self.custom_coefficient_fn:
            raise UnknownMetric("custom metric requires custom_coefficient_fn")

    def parameterized_by_model(self) -> bool:
        """True when the coefficients depend on the model's predictions."""
        if self.kind == "custom":
            return _custom(self.custom_coefficient_fn).parameterized_by_model
        return self.kind in _MODEL_PARAMETERIZED

    @property
    def name(self) -> str:
        return self.custom_coefficient_fn if self.kind == "custom" else self.kind


def _custom(name: Optional[str]) -> _CustomMetric:
    if name not in _CUSTOM:
        raise UnknownMetric(f"No custom metric registered as '{name}'")
    return _CUSTOM[name]


@dataclass(frozen=True, eq=False)
class CoefficientSet:
    ##! @struct CoefficientSet
    ##! @brief Coefficients c_i over one group's indices plus the constant c0
    index: np.ndarray
    c: np.ndarray
    c0: float

    def as_mapping(self) -> Dict[int, float]:
        return {int(i): float(v) for i, v in zip(self.index, self.c)}


def _coefficient_arrays(metric: MetricSpec, y: np.ndarray,
                        pred: Optional[np.ndarray]) -> Tuple[np.ndarray, float]:
    n = y.size
    kind = metric.kind
    if kind == "MR":
        return np.full(n, 1.0 / n), 0.0
    if kind == "SP":
        n0 = int(np.count_nonzero(y == 0))
        return np.where(y == 1, 1.0 / n, -1.0 / n), n0 / n
    if kind == "FPR":
        n0 = int(np.count_nonzero(y == 0))
        if n0 == 0:
            raise EmptyDenominator("FPR: group has no examples with y=0")
        return np.where(y == 0, 1.0 / n0, 0.0), 0.0
    if kind == "FNR":
        n1 = int(np.count_nonzero(y == 1))
        if n1 == 0:
            raise EmptyDenominator("FNR: group has no examples with y=1")
        return np.where(y == 1, 1.0 / n1, 0.0), 0.0
    if kind == "FOR":
        m0 = int(np.count_nonzero(pred == 0))
        if m0 == 0:
            raise EmptyDenominator("FOR: model predicts 0 for nobody in the group")
        return np.where(y == 0, -1.0 / m0, 0.0), 1.0
    if kind == "FDR":
        m1 = int(np.count_nonzero(pred == 1))
        if m1 == 0:
            raise EmptyDenominator("FDR: model predicts 1 for nobody in the group")
        return np.where(y == 1, -1.0 / m1, 0.0), 1.0
    if kind == "AEC":
        c_fp, c_fn = metric.aec_costs
        n0 = int(np.count_nonzero(y == 0))
        n1 = n - n0
        return np.where(y == 0, -c_fp / n, -c_fn / n), (c_fp * n0 + c_fn * n1) / n
    custom = _custom(metric.custom_coefficient_fn)
    c, c0 = custom.fn(y, pred if custom.parameterized_by_model else None)
    c = np.asarray(c, dtype=float)
    if c.shape != (n,):
        raise UnknownMetric(f"Custom metric '{metric.name}' returned {c.shape} coefficients for {n} rows")
    return c, float(c0)


def _group_predictions(dataset: Dataset, idx: np.ndarray, model: Optional[TrainedModel],
                       predictions: Optional[np.ndarray]) -> Optional[np.ndarray]:
    if predictions is not None:
        return np.asarray(predictions)[idx]
    if model is not None:
        return model.predict_batch(dataset, idx)
    return None


def coefficients(metric: MetricSpec, group, dataset: Dataset,
                 model: Optional[TrainedModel] = None,
                 predictions: Optional[np.ndarray] = None) -> CoefficientSet:
    """
    Coefficient set of a metric on one group.

    Args:
        metric: Metric to express
        group: Index set of the group
        dataset: Dataset the indices refer to
        model: Required when the metric is parameterized by the model
        predictions: Length-N predictions, an alternative to model

    Raises:
        EmptyIndexSet, MissingModel, EmptyDenominator
    """
    idx = as_index_set(group)
    if idx.size == 0:
        raise EmptyIndexSet(f"{metric.name}: group is empty")
    pred = None
    if metric.parameterized_by_model():
        pred = _group_predictions(dataset, idx, model, predictions)
        if pred is None:
            raise MissingModel(f"{metric.name} coefficients depend on the model's predictions")
    c, c0 = _coefficient_arrays(metric, dataset.y[idx], pred)
    return CoefficientSet(index=idx, c=c, c0=float(c0))


def fairness_value(metric: MetricSpec, group, dataset: Dataset,
                   model: Optional[TrainedModel] = None,
                   predictions: Optional[np.ndarray] = None) -> float:
    """f(h, g) = sum c_i * 1(h(x_i) = y_i) + c0."""
    idx = as_index_set(group)
    if idx.size == 0:
        raise EmptyIndexSet(f"{metric.name}: group is empty")
    pred_g = _group_predictions(dataset, idx, model, predictions)
    if pred_g is None:
        raise MissingModel("fairness_value needs a model or predictions")
    y_g = dataset.y[idx]
    c, c0 = _coefficient_arrays(metric, y_g, pred_g if metric.parameterized_by_model() else None)
    return float(c @ (pred_g == y_g).astype(float) + c0)


def fairness_gap(constraint: "FairnessConstraint", dataset: Dataset, model: Optional[TrainedModel],
                 assignment: GroupAssignment, subset=None,
                 predictions: Optional[np.ndarray] = None) -> float:
    """
    FP = f(h, g1) - f(h, g2) in the constraint's current group order.

    Args:
        subset: Restrict both groups to this index set (e.g. the validation split)
        predictions: Length-N predictions, used instead of model when given
    """
    sub = None if subset is None else as_index_set(subset)
    if predictions is None:
        if model is None:
            raise MissingModel("fairness_gap needs a model or predictions")
        predictions = model.predict_batch(dataset)
    g1 = assignment.restrict(constraint.g1, sub)
    g2 = assignment.restrict(constraint.g2, sub)
    return (fairness_value(constraint.metric, g1, dataset, predictions=predictions)
            - fairness_value(constraint.metric, g2, dataset, predictions=predictions))


def accuracy(dataset: Dataset, indices, model: Optional[TrainedModel] = None,
             predictions: Optional[np.ndarray] = None) -> float:
    """AP: fraction of indices where the model's prediction equals the label."""
    idx = as_index_set(indices)
    if idx.size == 0:
        raise EmptyIndexSet("accuracy over an empty index set")
    pred = np.asarray(predictions)[idx] if predictions is not None else model.predict_batch(dataset, idx)
    return float(np.mean(pred == dataset.y[idx]))


@dataclass
class EvaluationReport:
    ##! @struct EvaluationReport
    ##! @brief Accuracy, per-constraint gaps and per-group metric values on one split
    ap: float
    fp_per_constraint: Dict[str, float] = field(default_factory=dict)
    metric_values: Dict[Tuple[str, str], float] = field(default_factory=dict)

    def satisfied(self, constraints: Sequence["FairnessConstraint"]) -> Dict[str, bool]:
        return {c.id: abs(self.fp_per_constraint[c.id]) <= c.epsilon for c in constraints}

    def to_dict(self) -> Dict[str, object]:
        return {
            "ap": self.ap,
            "fp": dict(self.fp_per_constraint),
            "metric_values": {f"{cid}:{gid}": v for (cid, gid), v in self.metric_values.items()},
        }


def evaluate(dataset: Dataset, indices, model: TrainedModel,
             constraints: Iterable["FairnessConstraint"],
             assignment: GroupAssignment) -> EvaluationReport:
    """AP, FP per constraint and both groups' metric values on one index set."""
    sub = as_index_set(indices)
    pred = model.predict_batch(dataset)
    report = EvaluationReport(ap=accuracy(dataset, sub, predictions=pred))
    for c in constraints:
        v1 = fairness_value(c.metric, assignment.restrict(c.g1, sub), dataset, predictions=pred)
        v2 = fairness_value(c.metric, assignment.restrict(c.g2, sub), dataset, predictions=pred)
        report.metric_values[(c.id, c.g1)] = v1
        report.metric_values[(c.id, c.g2)] = v2
        report.fp_per_constraint[c.id] = v1 - v2
    return report


def audit(dataset: Dataset, indices, model: TrainedModel, assignment: GroupAssignment,
          metrics: Optional[Sequence[MetricSpec]] = None) -> Dict[str, object]:
    """
    Every metric on every group and every pairwise gap over one index set.

    Values that cannot be computed (empty conditioning set) are reported as None.
    """
    sub = as_index_set(indices)
    pred = model.predict_batch(dataset)
    metrics = list(metrics) if metrics is not None else [MetricSpec(k) for k in AUDIT_METRICS]
    out: Dict[str, object] = {"ap": accuracy(dataset, sub, predictions=pred), "metrics": {}}
    for metric in metrics:
        values: Dict[str, Optional[float]] = {}
        for gid in assignment.ids():
            group = assignment.restrict(gid, sub)
            try:
                values[gid] = fairness_value(metric, group, dataset, predictions=pred)
            except (EmptyDenominator, EmptyIndexSet) as e:
                _LOG.warning("%s on group '%s' not computable: %s", metric.name, gid, e)
                values[gid] = None
        gaps = {}
        for a, b in assignment.pairs():
            if values[a] is None or values[b] is None:
                gaps[f"{a} - {b}"] = None
            else:
                gaps[f"{a} - {b}"] = values[a] - values[b]
        out["metrics"][metric.name] = {"values": values, "gaps": gaps}
    return out
