"""
Several fairness constraints at once.

hill_climb() repeatedly re-tunes the lambda of the worst violated constraint
while holding every other lambda fixed. grid_search() is the exhaustive
baseline over a lattice of lambda vectors, and sample_region() records FP and
AP over a 2-D lattice so the satisfactory region can be plotted elsewhere.
"""

import itertools
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from .data import DataSplit, Dataset
from .errors import ConfigError
from .grouping import GroupAssignment
from .learner_interface import TrainedModel, WeightedLearner
from .metrics import accuracy, fairness_gap
from .metrics_collector import ProbeCollector
from .tuning import LambdaSearch, TunerConfig
from .weighting import FairnessConstraint, LambdaVector, derive_weights_multi

_LOG = logging.getLogger("fairweigh.multitune")

ITERATIONS_PER_CONSTRAINT = 5


@dataclass
class MultiTuneResult:
    model: TrainedModel
    lambdas: LambdaVector
    per_constraint_fp: Dict[str, float]
    satisfied: bool
    iterations: int
    fits_performed: int
    validation_ap: float = 0.0
    clamp_warnings: int = 0
    note: str = ""
    region: Optional["RegionSample"] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "lambdas": self.lambdas.to_dict(),
            "validation_ap": self.validation_ap,
            "validation_fp": dict(self.per_constraint_fp),
            "satisfied": self.satisfied,
            "iterations": self.iterations,
            "fits": self.fits_performed,
            "clamp_warnings": self.clamp_warnings,
            "note": self.note,
        }


@dataclass(frozen=True)
class RegionPoint:
    lambdas: Tuple[float, ...]
    fps: Tuple[float, ...]
    ap: float


@dataclass
class RegionSample:
    """FP vector and AP at each lattice point, in lattice order."""

    constraint_ids: Tuple[str, ...]
    points: List[RegionPoint] = field(default_factory=list)

    def fp_surface(self, j: int) -> np.ndarray:
        return np.array([p.fps[j] for p in self.points])

    def satisfactory(self, epsilons: Sequence[float]) -> List[RegionPoint]:
        return [p for p in self.points if all(abs(f) <= e for f, e in zip(p.fps, epsilons))]

    def to_csv(self, path) -> None:
        """Columns lambda_1, lambda_2, fp_1, fp_2, ap."""
        k = len(self.constraint_ids)
        header = [f"lambda_{j + 1}" for j in range(k)] + [f"fp_{j + 1}" for j in range(k)] + ["ap"]
        rows = [[repr(float(v)) for v in (*p.lambdas, *p.fps, p.ap)] for p in self.points]
        pd.DataFrame(rows, columns=header).to_csv(path, index=False)
        _LOG.info("Region sample (%d points) written to %s", len(self.points), path)


def _validation_gaps(constraints: Sequence[FairnessConstraint], dataset: Dataset,
                     split: DataSplit, assignment: GroupAssignment,
                     model: TrainedModel) -> Tuple[float, Dict[str, float]]:
    pred = model.predict_batch(dataset)
    ap = accuracy(dataset, split.validation, predictions=pred)
    fps = {c.id: fairness_gap(c, dataset, None, assignment, subset=split.validation, predictions=pred)
           for c in constraints}
    return ap, fps


def _check_unique(constraints: Sequence[FairnessConstraint]) -> None:
    ids = [c.id for c in constraints]
    if len(set(ids)) != len(ids):
        raise ConfigError(f"Constraint ids must be unique, got {ids}")
    if not ids:
        raise ConfigError("At least one constraint is required")


def hill_climb(dataset: Dataset, split: DataSplit, constraints: Sequence[FairnessConstraint],
               learner: WeightedLearner, tuner_config: Optional[TunerConfig] = None, *,
               assignment: GroupAssignment,
               collector: Optional[ProbeCollector] = None) -> MultiTuneResult:
    """
    Greedy coordinate search over the lambda vector.

    Starting from all-zero lambdas, each iteration picks the violated
    constraint with the largest |FP_k| - eps_k (ties to the lowest index) and
    re-runs the single-lambda tuner on it with the other lambdas frozen. Stops
    when every constraint holds or after 5 iterations per constraint.

    Returns:
        MultiTuneResult; satisfied=False when the iteration budget ran out
    """
    _check_unique(constraints)
    config = tuner_config or TunerConfig()
    collector = collector or ProbeCollector()
    constraints = list(constraints)
    budget = ITERATIONS_PER_CONSTRAINT * len(constraints)
    fits_before = collector.fits
    clamps_before = collector.clamp_warnings

    lambdas = LambdaVector({c.id: 0.0 for c in constraints})
    t0 = time.perf_counter()
    model = learner.fit(dataset, split.train, None, seed=config.seed)
    collector.record_fit(time.perf_counter() - t0)
    ap, fps = _validation_gaps(constraints, dataset, split, assignment, model)

    def violations() -> List[Tuple[int, float]]:
        return [(k, abs(fps[c.id]) - c.epsilon) for k, c in enumerate(constraints)
                if abs(fps[c.id]) > c.epsilon]

    iterations = 0
    while violations() and iterations < budget:
        # max() keeps the first maximal entry, i.e. the lowest index on ties
        i, excess = max(violations(), key=lambda kv: kv[1])
        target = constraints[i]
        _LOG.info("Iteration %d: re-tuning %s (|FP|-eps=%.4f), lambdas=%s",
                  iterations + 1, target.id, excess, lambdas.to_dict())
        search = LambdaSearch(dataset, split, assignment, target, learner, config,
                              frozen=lambdas.with_value(target.id, 0.0),
                              frozen_constraints=constraints, collector=collector)
        zero_model = model if lambdas.get(target.id) == 0.0 else None
        result = search.run(zero_model=zero_model, raise_infeasible=False, base_model=model)
        lambdas = lambdas.with_value(target.id, result.lam)
        model = result.model
        ap, fps = _validation_gaps(constraints, dataset, split, assignment, model)
        iterations += 1

    satisfied = not violations()
    note = "" if satisfied else f"not found after {budget} iterations"
    if not satisfied:
        _LOG.warning("Hill-climbing stopped unsatisfied after %d iterations: FP=%s", iterations, fps)
    else:
        _LOG.info("Hill-climbing satisfied all %d constraints after %d iterations", len(constraints), iterations)
    return MultiTuneResult(model=model, lambdas=lambdas, per_constraint_fp=fps, satisfied=satisfied,
                           iterations=iterations, fits_performed=collector.fits - fits_before,
                           validation_ap=ap, clamp_warnings=collector.clamp_warnings - clamps_before,
                           note=note)


def lattice(grid_step: float, grid_max: float, k: int, symmetric: bool = False) -> List[Tuple[float, ...]]:
    """
    Every point of {0, step, 2*step, ..., max}^k in row-major order
    ([-max, max] per axis when symmetric).
    """
    if not grid_step > 0:
        raise ConfigError(f"grid.step must be positive, got {grid_step}")
    if grid_max < 0:
        raise ConfigError(f"grid.max must be nonnegative, got {grid_max}")
    steps = int(math.floor(grid_max / grid_step + 1e-9))
    axis = [round(s * grid_step, 12) for s in range(steps + 1)]
    if symmetric:
        axis = [-v for v in reversed(axis[1:])] + axis
    return list(itertools.product(axis, repeat=k))


class _LatticeEvaluator:
    """Fits one model per lambda vector; points are independent of each other."""

    def __init__(self, dataset, split, assignment, constraints, learner, seed, base_model=None):
        self.dataset = dataset
        self.split = split
        self.assignment = assignment
        self.constraints = list(constraints)
        self.learner = learner
        self.seed = seed
        self.base_model = base_model
        self.clamp = not learner.accepts_negative_weights

    def __call__(self, point: Tuple[float, ...]):
        lambdas = LambdaVector({c.id: lam for c, lam in zip(self.constraints, point)})
        weights = derive_weights_multi(lambdas, self.constraints, self.dataset, self.assignment,
                                       model=self.base_model, subset=self.split.train, clamp=self.clamp)
        t0 = time.perf_counter()
        model = self.learner.fit(self.dataset, self.split.train, weights.w, seed=self.seed)
        seconds = time.perf_counter() - t0
        ap, fps = _validation_gaps(self.constraints, self.dataset, self.split, self.assignment, model)
        return point, model, ap, fps, seconds, weights.clamped


def _evaluate_lattice(evaluator: _LatticeEvaluator, points: Sequence[Tuple[float, ...]],
                      jobs: int, collector: ProbeCollector):
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as executor:
            rows = list(executor.map(evaluator, points))
    else:
        rows = [evaluator(p) for p in points]
    for _, _, _, _, seconds, clamped in rows:
        collector.record_fit(seconds, clamped)
    return rows


def grid_search(dataset: Dataset, split: DataSplit, constraints: Sequence[FairnessConstraint],
                learner: WeightedLearner, grid_step: float = 0.01, grid_max: float = 1.0, *,
                assignment: GroupAssignment, seed: int = 0, symmetric: bool = False,
                jobs: int = 1, collector: Optional[ProbeCollector] = None,
                keep_region: bool = False) -> MultiTuneResult:
    """
    Fit every lattice point in [0, grid_max]^k and keep the best.

    Among points meeting every constraint the highest validation AP wins
    (first in lattice order on ties); if none does, the highest-AP point is
    returned with satisfied=False. Prediction-dependent weights use the model
    fitted at the origin. With keep_region and two constraints the evaluated
    lattice is also returned as a RegionSample.
    """
    _check_unique(constraints)
    collector = collector or ProbeCollector()
    constraints = list(constraints)
    points = lattice(grid_step, grid_max, len(constraints), symmetric)
    origin = tuple(0.0 for _ in constraints)
    _LOG.info("Grid search over %d points (step=%g, max=%g, k=%d)",
              len(points), grid_step, grid_max, len(constraints))
    fits_before = collector.fits
    clamps_before = collector.clamp_warnings

    evaluator = _LatticeEvaluator(dataset, split, assignment, constraints, learner, seed)
    first = _evaluate_lattice(evaluator, [origin], 1, collector)[0]
    evaluator.base_model = first[1]
    rest = [p for p in points if p != origin]
    rows = {r[0]: r for r in [first] + _evaluate_lattice(evaluator, rest, jobs, collector)}
    ordered = [rows[p] for p in points]

    def ok(row) -> bool:
        return all(abs(row[3][c.id]) <= c.epsilon for c in constraints)

    feasible = [r for r in ordered if ok(r)]
    pool = feasible or ordered
    best = pool[int(np.argmax([r[2] for r in pool]))]
    point, model, ap, fps, _, _ = best
    if not feasible:
        _LOG.warning("No lattice point satisfies every constraint; returning best-AP point %s", point)
    region = None
    if keep_region and len(constraints) == 2:
        region = RegionSample(constraint_ids=tuple(c.id for c in constraints))
        for p, _, p_ap, p_fps, _, _ in ordered:
            region.points.append(RegionPoint(lambdas=p, fps=tuple(p_fps[c.id] for c in constraints), ap=p_ap))
    return MultiTuneResult(model=model, lambdas=LambdaVector(dict(zip((c.id for c in constraints), point))),
                           per_constraint_fp=fps, satisfied=bool(feasible), iterations=len(points),
                           fits_performed=collector.fits - fits_before, validation_ap=ap,
                           clamp_warnings=collector.clamp_warnings - clamps_before,
                           note="" if feasible else "no feasible lattice point", region=region)


def sample_region(dataset: Dataset, split: DataSplit, constraints: Sequence[FairnessConstraint],
                  learner: WeightedLearner, grid: Sequence[Tuple[float, float]], *,
                  assignment: GroupAssignment, seed: int = 0, jobs: int = 1,
                  base_model: Optional[TrainedModel] = None,
                  collector: Optional[ProbeCollector] = None) -> RegionSample:
    """
    FP_1, FP_2 and AP at each (lambda_1, lambda_2) in grid.

    Args:
        grid: Lambda pairs, evaluated and reported in the given order
        base_model: Model whose predictions parameterize FOR/FDR-style weights
            (defaults to the unweighted model, fitted once when needed)
    """
    constraints = list(constraints)
    if len(constraints) != 2:
        raise ConfigError(f"Region sampling is two-dimensional, got {len(constraints)} constraints")
    if constraints[0].id == constraints[1].id:
        constraints[1] = replace(constraints[1], id=f"{constraints[1].id}#2")
    points = [tuple(float(v) for v in p) for p in grid]
    if any(len(p) != 2 for p in points):
        raise ConfigError("Every region grid point needs exactly two lambdas")
    collector = collector or ProbeCollector()
    if base_model is None and any(c.metric.parameterized_by_model() for c in constraints):
        t0 = time.perf_counter()
        base_model = learner.fit(dataset, split.train, None, seed=seed)
        collector.record_fit(time.perf_counter() - t0)

    evaluator = _LatticeEvaluator(dataset, split, assignment, constraints, learner, seed, base_model)
    rows = _evaluate_lattice(evaluator, points, jobs, collector)
    sample = RegionSample(constraint_ids=tuple(c.id for c in constraints))
    for point, _, ap, fps, _, _ in rows:
        sample.points.append(RegionPoint(lambdas=point, fps=tuple(fps[c.id] for c in constraints), ap=ap))
    return sample
