##! @file tuning.py
##! @brief Single-lambda tuner: find the smallest lambda whose model meets one constraint
##!
##! @details
##! The search runs in four stages, all judged on the validation split:
##! 1. fit at lambda = 0 and stop if the constraint already holds
##! 2. orient the constraint so that FP at lambda = 0 is negative
##! 3. bracket the boundary: doubling for plain metrics, fixed steps of delta
##!    for metrics whose weights depend on the model's own predictions
##! 4. bisect the bracket down to width tau
##! Lambdas are reported in the constraint's declared group order, so a swapped
##! search returns a negative lambda.

import logging
import time
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .data import DataSplit, Dataset
from .errors import ConfigError, EmptyDenominator, EmptyIndexSet, InfeasibleWithinCap
from .grouping import GroupAssignment
from .learner_interface import TrainedModel, WeightedLearner
from .metrics import accuracy, fairness_gap
from .metrics_collector import ProbeCollector, TradeoffPoint
from .weighting import FairnessConstraint, LambdaVector, derive_weights_multi

_LOG = logging.getLogger("fairweigh.tuning")


@dataclass(frozen=True)
class TunerConfig:
    ##! @struct TunerConfig
    ##! @brief Search resolution and limits
    tau: float = 1e-4             ##! Bisection stops once the bracket is narrower than this
    delta: float = 1e-3           ##! Step of the linear bracket search
    lambda_cap: float = 2.0 ** 20 ##! Largest lambda either bracket search may try
    seed: int = 0
    warm_start: Optional[bool] = None  ##! None: whatever the learner supports
    max_linear_steps: int = 10000  ##! Most delta steps one linear bracket may take
    stall_steps: int = 200         ##! Linear steps without any prediction change before giving up

    def __post_init__(self):
        if not (0 < self.tau < self.delta < self.lambda_cap):
            raise ConfigError(
                f"Tuner needs 0 < tau < delta < lambda_cap, got "
                f"tau={self.tau}, delta={self.delta}, lambda_cap={self.lambda_cap}"
            )
        for name in ("max_linear_steps", "stall_steps"):
            value = getattr(self, name)
            if not (isinstance(value, int) and value >= 1):
                raise ConfigError(f"Tuner needs {name} to be a positive integer, got {value!r}")


@dataclass
class TuneResult:
    ##! @struct TuneResult
    ##! @brief Tuned model plus the probe trail that led to it
    model: TrainedModel
    lam: float
    validation_ap: float
    validation_fp: float
    satisfied: bool
    probes: List[TradeoffPoint] = field(default_factory=list)
    clamp_warnings: int = 0
    constraint_id: str = ""
    swapped: bool = False
    fits: int = 0
    note: str = ""

    def to_dict(self) -> Dict[str, Any]:
        return {
            "constraint": self.constraint_id,
            "lambda": self.lam,
            "validation_ap": self.validation_ap,
            "validation_fp": self.validation_fp,
            "satisfied": self.satisfied,
            "swapped": self.swapped,
            "fits": self.fits,
            "clamp_warnings": self.clamp_warnings,
            "note": self.note,
            "probes": [p.to_dict() for p in self.probes],
        }


@dataclass(frozen=True)
class _Probe:
    lam: float          # working orientation
    model: Optional[TrainedModel]
    ap: float
    fp: float           # working orientation
    clamped: int = 0
    pred: Optional[np.ndarray] = None  # predictions on every row


class LambdaSearch:
    """
    State of one single-lambda search.

    Other constraints may be frozen at fixed lambdas; they keep contributing
    their weight terms to every fit while only this constraint's lambda moves.
    """

    def __init__(self, dataset: Dataset, split: DataSplit, assignment: GroupAssignment,
                 constraint: FairnessConstraint, learner: WeightedLearner,
                 config: Optional[TunerConfig] = None,
                 frozen: Optional[LambdaVector] = None,
                 frozen_constraints: Sequence[FairnessConstraint] = (),
                 collector: Optional[ProbeCollector] = None):
        self.dataset = dataset
        self.split = split
        self.assignment = assignment
        self.constraint = constraint
        self.working = constraint
        self.sign = 1.0
        self.learner = learner
        self.config = config or TunerConfig()
        self.frozen = frozen or LambdaVector()
        self.frozen_constraints = [c for c in frozen_constraints if c.id != constraint.id]
        self.collector = collector or ProbeCollector()
        self.clamp = not learner.accepts_negative_weights
        warm = self.config.warm_start
        self.warm_start = learner.supports_warm_start if warm is None else (warm and learner.supports_warm_start)
        self.parameterized = constraint.metric.parameterized_by_model()
        self._last_model: Optional[TrainedModel] = None
        self._trail: List[_Probe] = []

    @property
    def epsilon(self) -> float:
        return self.constraint.epsilon

    def satisfied(self, p: _Probe) -> bool:
        return abs(p.fp) <= self.epsilon

    def swap(self) -> None:
        self.working = self.constraint.swapped()
        self.sign = -1.0

    def check_groups(self) -> None:
        for part in ("train", "validation"):
            for gid in (self.constraint.g1, self.constraint.g2):
                if self.assignment.restrict(gid, self.split.part(part)).size == 0:
                    raise EmptyIndexSet(f"Group '{gid}' has no examples in the {part} split")

    def probe(self, lam: float, base_model: Optional[TrainedModel] = None,
              fitted: Optional[TrainedModel] = None) -> _Probe:
        """
        Fit at working lambda lam and evaluate on validation.

        Args:
            lam: Lambda for the working orientation of the constraint
            base_model: Model whose predictions parameterize FOR/FDR-style weights
            fitted: Already fitted model for this point; skips the fit
        """
        declared = self.sign * lam
        clamped = 0
        try:
            if fitted is None:
                lambdas = LambdaVector({**self.frozen.to_dict(), self.working.id: lam})
                weights = derive_weights_multi(lambdas, [self.working] + self.frozen_constraints,
                                               self.dataset, self.assignment, model=base_model,
                                               subset=self.split.train, clamp=self.clamp)
                clamped = weights.clamped
                t0 = time.perf_counter()
                model = self.learner.fit(self.dataset, self.split.train, weights.w,
                                         seed=self.config.seed,
                                         warm_start=self._last_model if self.warm_start else None)
                self.collector.record_fit(time.perf_counter() - t0, clamped)
                self._last_model = model
            else:
                model = fitted
            pred = model.predict_batch(self.dataset)
            ap = accuracy(self.dataset, self.split.validation, predictions=pred)
            fp = fairness_gap(self.working, self.dataset, None, self.assignment,
                              subset=self.split.validation, predictions=pred)
        except EmptyDenominator as e:
            self.collector.record_error("EmptyDenominator", f"{self.constraint.id} at lambda={declared:g}: {e}")
            raise
        self.collector.record_probe(TradeoffPoint(lam=declared, ap=ap, fp=self.sign * fp,
                                                  constraint_id=self.constraint.id, clamped=clamped))
        p = _Probe(lam=lam, model=model, ap=ap, fp=fp, clamped=clamped, pred=pred)
        self._trail.append(p)
        return p

    def _infeasible(self, last: _Probe, reason: str = "") -> InfeasibleWithinCap:
        return InfeasibleWithinCap(self.sign * last.lam, self.sign * last.fp, self.config.lambda_cap, reason)

    def exponential(self, lower: _Probe) -> Tuple[_Probe, _Probe]:
        """Double lambda from 1 until FP >= -epsilon; lower is the lambda=0 probe."""
        eps = self.epsilon
        lam = 1.0
        while True:
            if lam > self.config.lambda_cap:
                raise self._infeasible(lower)
            p = self.probe(lam, lower.model)
            if p.fp >= -eps:
                _LOG.info("%s bracketed by doubling: [%g, %g]", self.constraint.id, lower.lam, p.lam)
                return lower, p
            lower = p
            lam *= 2.0

    def linear(self, lower: _Probe) -> Tuple[_Probe, _Probe]:
        """
        Step lambda by delta until FP >= -epsilon.

        Weights at step k+1 use the predictions of the model fitted at step k.
        Gives up once max_linear_steps steps are spent, or when stall_steps
        consecutive steps leave every prediction unchanged.
        """
        eps = self.epsilon
        cfg = self.config
        previous = lower.pred if lower.pred is not None else lower.model.predict_batch(self.dataset)
        stalled = 0
        k = 1
        while True:
            lam = k * cfg.delta
            if lam > cfg.lambda_cap:
                raise self._infeasible(lower)
            if k > cfg.max_linear_steps:
                raise self._infeasible(lower, f"{cfg.max_linear_steps} linear steps spent")
            p = self.probe(lam, lower.model)
            if p.fp >= -eps:
                _LOG.info("%s bracketed by %d linear steps: [%g, %g]",
                          self.constraint.id, k, lower.lam, p.lam)
                return lower, p
            stalled = stalled + 1 if np.array_equal(p.pred, previous) else 0
            if stalled >= cfg.stall_steps:
                _LOG.warning("%s: predictions unchanged for %d linear steps at lambda=%g",
                             self.constraint.id, stalled, self.sign * lam)
                raise self._infeasible(p, f"predictions unchanged for {stalled} linear steps")
            previous = p.pred
            lower = p
            k += 1

    def bisect(self, lower: _Probe, upper: _Probe) -> Tuple[_Probe, _Probe, Optional[_Probe]]:
        """Halve [lower, upper] until narrower than tau; returns (lower, upper, last midpoint)."""
        eps = self.epsilon
        mid = None
        while upper.lam - lower.lam >= self.config.tau:
            m = (lower.lam + upper.lam) / 2.0
            mid = self.probe(m, lower.model)
            if mid.fp < -eps:
                lower = mid
            else:
                upper = mid
        return lower, upper, mid

    def run(self, zero_model: Optional[TrainedModel] = None, raise_infeasible: bool = True,
            base_model: Optional[TrainedModel] = None) -> TuneResult:
        """
        Full search for this constraint.

        Args:
            zero_model: Model already fitted at lambda = 0 with the frozen lambdas
            base_model: Model whose predictions weight prediction-dependent frozen
                constraints in the lambda = 0 fit
            raise_infeasible: Raise InfeasibleWithinCap instead of returning satisfied=False
        """
        self.check_groups()
        fits_before = self.collector.fits
        probes_before = len(self.collector.probes)
        clamps_before = self.collector.clamp_warnings
        eps = self.epsilon

        if zero_model is not None:
            self._last_model = zero_model
        zero = self.probe(0.0, base_model=base_model, fitted=zero_model)
        _LOG.info("%s at lambda=0: AP=%.4f FP=%+.4f (eps=%g)",
                  self.constraint.id, zero.ap, zero.fp, eps)

        def finish(p: _Probe, satisfied: bool, note: str = "") -> TuneResult:
            result = TuneResult(
                model=p.model, lam=self.sign * p.lam, validation_ap=p.ap,
                validation_fp=self.sign * p.fp, satisfied=satisfied,
                probes=list(self.collector.probes[probes_before:]),
                clamp_warnings=self.collector.clamp_warnings - clamps_before,
                constraint_id=self.constraint.id, swapped=self.sign < 0,
                fits=self.collector.fits - fits_before, note=note,
            )
            self._log_monotonicity(result.probes)
            return result

        if self.satisfied(zero):
            return finish(zero, True, "satisfied without reweighting")

        if zero.fp > 0:
            _LOG.info("%s: FP > 0 at lambda=0, swapping %s and %s",
                      self.constraint.id, self.constraint.g1, self.constraint.g2)
            self.swap()
            zero = _Probe(lam=0.0, model=zero.model, ap=zero.ap, fp=-zero.fp, clamped=zero.clamped,
                          pred=zero.pred)
            self._trail = [zero]

        try:
            if self.parameterized:
                lower, upper = self.linear(zero)
            else:
                lower, upper = self.exponential(zero)
        except InfeasibleWithinCap as e:
            _LOG.warning("%s: %s", self.constraint.id, e)
            if raise_infeasible:
                raise
            closest = max(self._trail, key=lambda p: p.fp)
            return finish(closest, False, str(e))

        lower, upper, mid = self.bisect(lower, upper)
        final = mid if mid is not None else upper
        if self.satisfied(final):
            chosen, ok = final, True
        elif self.satisfied(upper):
            chosen, ok = upper, True
        else:
            chosen, ok = final, False
        _LOG.info("%s tuned: lambda=%g AP=%.4f FP=%+.4f satisfied=%s",
                  self.constraint.id, self.sign * chosen.lam, chosen.ap, self.sign * chosen.fp, ok)
        return finish(chosen, ok, "" if ok else "no probe met the constraint")

    def _log_monotonicity(self, probes: Sequence[TradeoffPoint]) -> None:
        ordered = sorted(probes, key=lambda p: self.sign * p.lam)
        fps = [self.sign * p.fp for p in ordered]
        drops = sum(1 for a, b in zip(fps, fps[1:]) if b < a - 1e-12)
        if drops:
            _LOG.info("%s: validation FP decreased %d time(s) as lambda grew",
                      self.constraint.id, drops)


def tune_single(dataset: Dataset, split: DataSplit, constraint: FairnessConstraint,
                learner: WeightedLearner, tuner_config: Optional[TunerConfig] = None, *,
                assignment: GroupAssignment,
                frozen: Optional[LambdaVector] = None,
                frozen_constraints: Sequence[FairnessConstraint] = (),
                collector: Optional[ProbeCollector] = None,
                zero_model: Optional[TrainedModel] = None,
                base_model: Optional[TrainedModel] = None,
                raise_infeasible: bool = True) -> TuneResult:
    """
    Tune lambda for one constraint and return the resulting model.

    Args:
        dataset: Full dataset
        split: Train/validation/test index sets; fits use train, decisions use validation
        constraint: Constraint to enforce
        learner: Weighted learner
        tuner_config: Search settings
        assignment: Group index sets
        frozen: Fixed lambdas of other constraints (declared orientation)
        frozen_constraints: The constraints those lambdas belong to
        collector: Shared probe collector
        zero_model: Model already fitted at this constraint's lambda = 0
        base_model: Predictions that weight prediction-dependent frozen constraints
            at lambda = 0; hill-climbing passes its current model
        raise_infeasible: When False, a bracket that reaches lambda_cap yields
            satisfied=False instead of InfeasibleWithinCap

    Returns:
        TuneResult with lambda in the constraint's declared orientation

    Raises:
        InfeasibleWithinCap, learner errors, metric errors
    """
    search = LambdaSearch(dataset, split, assignment, constraint, learner, tuner_config,
                          frozen=frozen, frozen_constraints=frozen_constraints, collector=collector)
    return search.run(zero_model=zero_model, raise_infeasible=raise_infeasible, base_model=base_model)


def exponential_search(constraint: FairnessConstraint, learner: WeightedLearner, dataset: Dataset,
                       split: DataSplit, tuner_config: Optional[TunerConfig] = None, *,
                       assignment: GroupAssignment,
                       collector: Optional[ProbeCollector] = None) -> Tuple[float, float]:
    """
    Bracket the boundary for a constraint whose FP at lambda = 0 is below -epsilon.

    Returns:
        (lambda_l, lambda_u) with FP(lambda_l) < -epsilon <= FP(lambda_u)

    Raises:
        InfeasibleWithinCap
    """
    search = LambdaSearch(dataset, split, assignment, constraint, learner, tuner_config,
                          collector=collector)
    lower, upper = search.exponential(_Probe(lam=0.0, model=None, ap=0.0, fp=-float("inf")))
    return lower.lam, upper.lam


def linear_search(constraint: FairnessConstraint, learner: WeightedLearner, dataset: Dataset,
                  split: DataSplit, tuner_config: Optional[TunerConfig] = None, *,
                  assignment: GroupAssignment, base_model: TrainedModel,
                  collector: Optional[ProbeCollector] = None) -> Tuple[float, float]:
    """
    Bracket the boundary in steps of delta for prediction-dependent metrics.

    Args:
        base_model: Model fitted at lambda = 0; its predictions weight the first step

    Returns:
        (lambda_u - delta, lambda_u) for the first lambda_u with FP >= -epsilon

    Raises:
        InfeasibleWithinCap, EmptyDenominator
    """
    search = LambdaSearch(dataset, split, assignment, constraint, learner, tuner_config,
                          collector=collector)
    search._last_model = base_model
    lower, upper = search.linear(_Probe(lam=0.0, model=base_model, ap=0.0, fp=-float("inf")))
    return lower.lam, upper.lam
