##! @file orchestrator.py
##! @brief Command lifecycle for fairweigh runs
##!
##! @details
##! Every command goes through the same stages:
##! 1. Load the dataset and cut the train/validation/test split
##! 2. Assign groups and expand configured constraint entries
##! 3. Load the learner plug-in
##! 4. Fit the unconstrained baseline
##! 5. Run the command (audit, train, sweep, compare-grid)
##! 6. Save the report and artifacts under the output directory
##!
##! Numbers in a report are recomputed from the returned model and the split,
##! so reloading model.json and re-evaluating reproduces them.

import logging
import math
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
import psutil

from .comparator import TunerComparator
from .data import Dataset, load_csv, split as make_split
from .errors import ConfigError, FairweighError, UnknownGroup
from .grouping import GroupAssignment, assign_groups
from .learner_interface import TrainedModel, WeightedLearner, make_learner
from .metrics import AUDIT_METRICS, MetricSpec, audit, evaluate
from .metrics_collector import ProbeCollector
from .multitune import grid_search, hill_climb
from .report_generator import ReportGenerator, write_tradeoff_csv
from .synthetic import SyntheticSpec, planted_fdr, planted_rates, planted_sp_gap, write_csv
from .tuning import tune_single
from .utils import ConstraintEntry, RunConfig, save_json
from .weighting import FairnessConstraint, LambdaVector, derive_weights_multi

_LOG = logging.getLogger("fairweigh.orchestrator")


class ResourceMonitor:
    """Samples resident memory of this process on a background thread."""

    def __init__(self, interval: float = 0.1):
        self.interval = interval
        self.peak_rss = 0
        self._stop = threading.Event()
        self._thread: Optional[threading.Thread] = None
        self._process = psutil.Process()

    def _sample(self) -> None:
        try:
            self.peak_rss = max(self.peak_rss, self._process.memory_info().rss)
        except (psutil.NoSuchProcess, psutil.AccessDenied):
            pass

    def _run(self) -> None:
        while not self._stop.is_set():
            self._sample()
            self._stop.wait(self.interval)

    def __enter__(self) -> "ResourceMonitor":
        self._sample()
        self._thread = threading.Thread(target=self._run, daemon=True)
        self._thread.start()
        return self

    def __exit__(self, *exc) -> None:
        self._stop.set()
        if self._thread is not None:
            self._thread.join()
        self._sample()


def build_constraints(entries: Sequence[ConstraintEntry], assignment: GroupAssignment,
                      aec_costs=None) -> List[FairnessConstraint]:
    """
    Expand configured entries into constraints with ids like "SP:A-B".

    "pairs": "all" yields one constraint per unordered group pair. Repeated
    ids get a "#2", "#3", ... suffix.

    Raises:
        UnknownGroup: If an entry names a group the assignment lacks
    """
    constraints: List[FairnessConstraint] = []
    seen: Dict[str, int] = {}
    for entry in entries:
        metric = MetricSpec(entry.metric, aec_costs=aec_costs if entry.metric == "AEC" else None)
        if entry.pairs_all:
            pairs = list(assignment.pairs())
        else:
            for gid in (entry.g1, entry.g2):
                if gid not in assignment:
                    raise UnknownGroup(gid)
            pairs = [(entry.g1, entry.g2)]
        for g1, g2 in pairs:
            cid = f"{entry.metric}:{g1}-{g2}"
            seen[cid] = seen.get(cid, 0) + 1
            if seen[cid] > 1:
                cid = f"{cid}#{seen[cid]}"
            constraints.append(FairnessConstraint(id=cid, g1=g1, g2=g2, metric=metric,
                                                  epsilon=entry.epsilon))
    return constraints


def load_learner(kind: str, params: Optional[Dict[str, Any]] = None) -> WeightedLearner:
    """Learner plug-in by kind, configured from flat learner.* parameters."""
    learner = make_learner(kind, params)
    _LOG.info("Loaded learner '%s' (warm start: %s, negative weights: %s)",
              kind, learner.supports_warm_start, learner.accepts_negative_weights)
    return learner


def sp_noise_bound(n_a: int, n_b: int) -> float:
    """Three standard deviations of a difference of two proportions at rate 0.5."""
    if n_a == 0 or n_b == 0:
        return float("nan")
    return 3.0 * math.sqrt(0.25 / n_a + 0.25 / n_b)


class Orchestrator:
    ##! @class Orchestrator
    ##! @brief Runs one configured command end to end
    ##! @details
    ##! prepare() is idempotent; every cmd_* calls it first so a caller can
    ##! also inject a dataset built in memory (tests, gen-synth pipelines).

    def __init__(self, run: RunConfig, out_dir: Optional[Path] = None,
                 dataset: Optional[Dataset] = None):
        self.run = run
        self.out_dir = Path(out_dir) if out_dir is not None else Path(run.output_dir)
        self.dataset = dataset
        self.split = None
        self.assignment: Optional[GroupAssignment] = None
        self.constraints: List[FairnessConstraint] = []
        self.learner: Optional[WeightedLearner] = None
        self.started = time.perf_counter()

    def prepare(self) -> None:
        if self.learner is not None:
            return
        run = self.run
        if self.dataset is None:
            self.dataset = load_csv(run.data_path, run.label_column, run.positive_label,
                                    run.feature_columns)
        self.split = make_split(self.dataset, run.split)
        self.assignment = assign_groups(self.dataset, run.grouping)
        self.constraints = build_constraints(run.constraints, self.assignment, run.aec_costs)
        self.learner = load_learner(run.learner_kind, run.learner_params)
        _LOG.info("Prepared run: N=%d split=%s groups=%s constraints=%s",
                  self.dataset.n, self.split.sizes(), list(self.assignment.ids()),
                  [c.id for c in self.constraints])

    def _require_constraints(self) -> None:
        if not self.constraints:
            raise ConfigError("At least one entry in 'constraints' is required for this command")

    def fit_baseline(self, collector: Optional[ProbeCollector] = None) -> TrainedModel:
        t0 = time.perf_counter()
        model = self.learner.fit(self.dataset, self.split.train, None, seed=self.run.seed)
        if collector is not None:
            collector.record_fit(time.perf_counter() - t0)
        return model

    def _evaluate(self, model: TrainedModel, part: str,
                  constraints: Optional[Sequence[FairnessConstraint]] = None) -> Dict[str, Any]:
        constraints = self.constraints if constraints is None else constraints
        report = evaluate(self.dataset, self.split.part(part), model, constraints, self.assignment)
        out = report.to_dict()
        out["satisfied"] = report.satisfied(constraints)
        return out

    def _header(self, command: str) -> Dict[str, Any]:
        return {
            "command": command,
            "timestamp": time.strftime("%Y-%m-%d %H:%M:%S"),
            "data": self.run.data_path,
            "n": self.dataset.n,
            "split": self.split.sizes(),
            "seed": self.run.seed,
            "groups": {gid: int(len(idx)) for gid, idx in self.assignment.groups.items()},
            "learner": {"kind": self.learner.kind, "params": dict(self.run.learner_params)},
            "constraints": [{"id": c.id, "metric": c.metric.name, "g1": c.g1, "g2": c.g2,
                             "epsilon": c.epsilon} for c in self.constraints],
        }

    def _resources(self, monitor: ResourceMonitor) -> Dict[str, Any]:
        return {"seconds": time.perf_counter() - self.started, "peak_rss_bytes": int(monitor.peak_rss)}

    def noise_bounds(self) -> Dict[str, Dict[str, float]]:
        """Per split and group pair, the SP gap expected from sampling alone."""
        out = {}
        for part in ("validation", "test"):
            sub = self.split.part(part)
            out[part] = {f"{a} - {b}": sp_noise_bound(self.assignment.restrict(a, sub).size,
                                                      self.assignment.restrict(b, sub).size)
                         for a, b in self.assignment.pairs()}
        return out

    def cmd_audit(self) -> Dict[str, Any]:
        """Unconstrained model; every metric on every group pair for validation and test."""
        with ResourceMonitor() as monitor:
            self.prepare()
            _LOG.info("Audit: fitting unconstrained %s model", self.learner.kind)
            model = self.fit_baseline()
            metrics = [MetricSpec(k) for k in AUDIT_METRICS]
            if self.run.aec_costs is not None:
                metrics.append(MetricSpec("AEC", aec_costs=self.run.aec_costs))
            report = self._header("audit")
            report["baseline"] = {
                part: audit(self.dataset, self.split.part(part), model, self.assignment, metrics)
                for part in ("validation", "test")
            }
            report["noise_bound"] = self.noise_bounds()
        report["resources"] = self._resources(monitor)
        self.save_report(report, model)
        return report

    def _tune(self, collector: ProbeCollector) -> Dict[str, Any]:
        if len(self.constraints) == 1:
            result = tune_single(self.dataset, self.split, self.constraints[0], self.learner,
                                 self.run.tuner, assignment=self.assignment, collector=collector,
                                 raise_infeasible=False)
            tuned = result.to_dict()
            tuned.pop("probes")
            tuned["lambdas"] = {result.constraint_id: result.lam}
            tuned["method"] = "single"
            return {"model": result.model, "summary": tuned, "satisfied": result.satisfied}
        result = hill_climb(self.dataset, self.split, self.constraints, self.learner, self.run.tuner,
                            assignment=self.assignment, collector=collector)
        tuned = result.to_dict()
        tuned["method"] = "hill_climb"
        return {"model": result.model, "summary": tuned, "satisfied": result.satisfied}

    def cmd_train(self) -> Dict[str, Any]:
        """Tune against every configured constraint and persist the tuned model."""
        with ResourceMonitor() as monitor:
            self.prepare()
            self._require_constraints()
            collector = ProbeCollector()
            baseline = self.fit_baseline()
            report = self._header("train")
            report["baseline"] = {part: self._evaluate(baseline, part) for part in ("validation", "test")}

            tuned = self._tune(collector)
            model = tuned["model"]
            collector.finalize()
            report["tuned"] = tuned["summary"]
            report["tuned"]["validation"] = self._evaluate(model, "validation")
            report["tuned"]["test"] = self._evaluate(model, "test")
            report["satisfied"] = bool(tuned["satisfied"])
            report["probe_log"] = [p.to_dict() for p in collector.probes]
            report["clamp_warnings"] = collector.clamp_warnings
            report["fits"] = collector.fits
            report["tuning"] = collector.get_summary()
        report["resources"] = self._resources(monitor)
        if not report["satisfied"]:
            _LOG.warning("Constraints not satisfied: %s", report["tuned"].get("note", ""))

        self.save_report(report, model)
        if self.run.dump_weights:
            self.dump_weights(LambdaVector(report["tuned"]["lambdas"]), model)
        return report

    def dump_weights(self, lambdas: LambdaVector, model: TrainedModel) -> Path:
        """weights.csv with the train-split weights at the final lambdas."""
        clamp = not self.learner.accepts_negative_weights
        weights = derive_weights_multi(lambdas, self.constraints, self.dataset, self.assignment,
                                       model=model, subset=self.split.train, clamp=clamp)
        path = self.out_dir / "weights.csv"
        self.out_dir.mkdir(parents=True, exist_ok=True)
        frame = pd.DataFrame({"index": self.split.train, "weight": weights.w[self.split.train]})
        frame.to_csv(path, index=False)
        _LOG.info("Weights written to %s (%d clamped)", path, weights.clamped)
        return path

    def _sweep_row(self, constraint: FairnessConstraint, epsilon: float) -> Dict[str, Any]:
        collector = ProbeCollector()
        target = replace(constraint, epsilon=float(epsilon))
        t0 = time.perf_counter()
        row: Dict[str, Any] = {"epsilon": float(epsilon)}
        try:
            result = tune_single(self.dataset, self.split, target, self.learner, self.run.tuner,
                                 assignment=self.assignment, collector=collector,
                                 raise_infeasible=False)
            test = evaluate(self.dataset, self.split.test, result.model, [target], self.assignment)
            row.update({"lambda": result.lam, "validation_ap": result.validation_ap,
                        "validation_fp": result.validation_fp, "test_ap": test.ap,
                        "test_fp": test.fp_per_constraint[target.id], "fits": collector.fits,
                        "satisfied": result.satisfied, "error": result.note if not result.satisfied else ""})
        except FairweighError as e:
            _LOG.warning("Sweep row epsilon=%g failed: %s", epsilon, e)
            row.update({k: float("nan") for k in ("lambda", "validation_ap", "validation_fp",
                                                  "test_ap", "test_fp")})
            row.update({"fits": collector.fits, "satisfied": False, "error": f"{type(e).__name__}: {e}"})
        row["seconds"] = time.perf_counter() - t0
        return row

    def cmd_sweep(self, epsilons: Sequence[float], jobs: Optional[int] = None) -> Dict[str, Any]:
        """One tuned model per epsilon for the single configured constraint."""
        with ResourceMonitor() as monitor:
            self.prepare()
            self._require_constraints()
            if len(self.constraints) != 1:
                raise ConfigError(f"sweep needs exactly one constraint, config yields "
                                  f"{[c.id for c in self.constraints]}")
            if not epsilons:
                raise ConfigError("sweep needs at least one epsilon")
            if any(not (e >= 0) for e in epsilons):
                raise ConfigError(f"epsilons must be nonnegative, got {list(epsilons)}")
            constraint = self.constraints[0]
            jobs = jobs or self.run.jobs
            _LOG.info("Sweeping %s over %d epsilons (jobs=%d)", constraint.id, len(epsilons), jobs)

            if jobs > 1:
                with ThreadPoolExecutor(max_workers=jobs) as executor:
                    rows = list(executor.map(lambda e: self._sweep_row(constraint, e), epsilons))
            else:
                rows = [self._sweep_row(constraint, e) for e in epsilons]

            report = self._header("sweep")
            report["rows"] = rows
            report["monotonicity_violations"] = sweep_violations(rows)
        report["resources"] = self._resources(monitor)
        for v in report["monotonicity_violations"]:
            _LOG.warning("test_ap rose from %.4f to %.4f as epsilon tightened from %g to %g",
                         v["test_ap_loose"], v["test_ap_tight"], v["epsilon_loose"], v["epsilon_tight"])

        self.out_dir.mkdir(parents=True, exist_ok=True)
        write_tradeoff_csv(rows, self.out_dir / "tradeoff.csv")
        self.save_report(report)
        return report

    def cmd_compare_grid(self) -> Dict[str, Any]:
        """Hill-climbing and grid search on the same constraints, side by side."""
        with ResourceMonitor() as monitor:
            self.prepare()
            self._require_constraints()
            hc_collector = ProbeCollector()
            hc = hill_climb(self.dataset, self.split, self.constraints, self.learner, self.run.tuner,
                            assignment=self.assignment, collector=hc_collector)
            hc_collector.finalize()
            grid_collector = ProbeCollector()
            grid = grid_search(self.dataset, self.split, self.constraints, self.learner,
                               self.run.grid_step, self.run.grid_max, assignment=self.assignment,
                               seed=self.run.seed, symmetric=self.run.grid_symmetric,
                               jobs=self.run.jobs, collector=grid_collector, keep_region=True)
            grid_collector.finalize()

            comparator = TunerComparator(self.constraints)
            comparator.add("hill_climb", hc, hc_collector.elapsed,
                           self._evaluate(hc.model, "test"))
            comparator.add("grid", grid, grid_collector.elapsed,
                           self._evaluate(grid.model, "test"))
            report = self._header("compare-grid")
            report["results"] = comparator.results
            report["fit_ratio"] = comparator.fit_ratio()
        report["resources"] = self._resources(monitor)

        self.out_dir.mkdir(parents=True, exist_ok=True)
        comparator.generate_report(self.out_dir / "comparison.txt")
        if grid.region is not None:
            grid.region.to_csv(self.out_dir / "region.csv")
        self.save_report(report, hc.model)
        return report

    def save_report(self, report: Dict[str, Any], model: Optional[TrainedModel] = None) -> None:
        """
        Write report.json, report.txt and (when given) model.json.

        Args:
            report: Command report
            model: Model the report describes
        """
        self.out_dir.mkdir(parents=True, exist_ok=True)
        generator = ReportGenerator(report, self.run.data_path)
        generator.generate_json_report(self.out_dir / "report.json")
        generator.generate_text_report(self.out_dir / "report.txt")
        if model is not None:
            save_json(model.to_dict(), str(self.out_dir / "model.json"))
        _LOG.info("Report saved to %s/", self.out_dir)


def sweep_violations(rows: Sequence[Dict[str, Any]]) -> List[Dict[str, float]]:
    """Adjacent rows (by decreasing epsilon) where test_ap went up."""
    ordered = sorted((r for r in rows if np.isfinite(r.get("test_ap", float("nan")))),
                     key=lambda r: -r["epsilon"])
    out = []
    for loose, tight in zip(ordered, ordered[1:]):
        if tight["epsilon"] < loose["epsilon"] and tight["test_ap"] > loose["test_ap"] + 1e-12:
            out.append({"epsilon_loose": loose["epsilon"], "epsilon_tight": tight["epsilon"],
                        "test_ap_loose": loose["test_ap"], "test_ap_tight": tight["test_ap"]})
    return out


def cmd_gen_synth(spec: SyntheticSpec, path: Path) -> Dict[str, Any]:
    """Write a planted-bias CSV and return what was planted."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    dataset = write_csv(spec, path)
    report = {
        "command": "gen-synth",
        "path": str(path),
        "n": dataset.n,
        "variant": spec.variant,
        "groups": spec.group_names,
        "seed": spec.seed,
        "planted_rates": planted_rates(spec),
    }
    if spec.variant == "sp":
        report["planted_sp_gap"] = planted_sp_gap(spec)
    else:
        report["planted_fdr"] = planted_fdr(spec)
    return report
