"""
Warm-start benchmark: time the same epsilon sweep with and without warm starts
on planted-SP datasets of growing size, and track peak memory and CPU.
"""

import argparse
import logging
import statistics
import sys
import threading
import time
from pathlib import Path

import psutil

sys.path.append(str(Path.cwd()))

from fairweigh.data import SplitSpec, split
from fairweigh.grouping import GroupingSpec, assign_groups
from fairweigh.metrics import MetricSpec
from fairweigh.synthetic import SyntheticSpec, generate
from fairweigh.tuning import TunerConfig, tune_single
from fairweigh.utils import format_bytes
from fairweigh.weighting import FairnessConstraint
from learners.logreg import Learner as LogRegLearner

logging.basicConfig(level=logging.ERROR)

EPSILONS = (0.1, 0.05, 0.03, 0.02, 0.01)


def monitor_resources(pid: int, stop_event: threading.Event, interval: float = 0.1) -> dict:
    """Sample RSS and CPU of the process until stop_event is set."""
    process = psutil.Process(pid)
    cpu_usage = []
    mem_usage = []

    while not stop_event.is_set():
        try:
            with process.oneshot():
                mem_usage.append(process.memory_info().rss)
                cpu_usage.append(process.cpu_percent(interval=None))
            time.sleep(interval)
        except (psutil.NoSuchProcess, psutil.AccessDenied):
            break

    return {
        "memory_peak": max(mem_usage) if mem_usage else 0,
        "cpu_peak": max(cpu_usage) if cpu_usage else 0.0,
        "cpu_mean": statistics.mean(cpu_usage) if cpu_usage else 0.0,
    }


def timed_sweep(dataset, parts, assignment, warm: bool) -> dict:
    learner = LogRegLearner()
    fits = 0
    t0 = time.perf_counter()
    for eps in EPSILONS:
        c = FairnessConstraint("SP:A-B", "A", "B", MetricSpec("SP"), eps)
        result = tune_single(dataset, parts, c, learner, TunerConfig(warm_start=warm),
                             assignment=assignment, raise_infeasible=False)
        fits += result.fits
    return {"seconds": time.perf_counter() - t0, "fits": fits}


def run_experiment(n: int, seed: int) -> dict:
    print(f"Running sweep on n={n}...", end="", flush=True)
    dataset = generate(SyntheticSpec(n=n, gap=0.2, seed=seed))
    parts = split(dataset, SplitSpec(seed=seed))
    assignment = assign_groups(dataset, GroupingSpec(attribute_names=("group",)))

    stop_event = threading.Event()
    res_results = {}
    res_thread = threading.Thread(
        target=lambda: res_results.update(monitor_resources(psutil.Process().pid, stop_event)))
    res_thread.start()
    try:
        cold = timed_sweep(dataset, parts, assignment, warm=False)
        warm = timed_sweep(dataset, parts, assignment, warm=True)
    finally:
        stop_event.set()
        res_thread.join()

    ratio = warm["seconds"] / cold["seconds"] if cold["seconds"] > 0 else float("nan")
    print(f" Done. (Cold: {cold['seconds']:.2f}s, Warm: {warm['seconds']:.2f}s, "
          f"Ratio: {ratio:.2f}, Mem: {format_bytes(res_results.get('memory_peak', 0))})")
    return {
        "N": n,
        "Fits": cold["fits"],
        "Cold (s)": f"{cold['seconds']:.2f}",
        "Warm (s)": f"{warm['seconds']:.2f}",
        "Ratio": f"{ratio:.2f}",
        "Memory": format_bytes(res_results.get("memory_peak", 0)),
        "CPU Peak (%)": f"{int(res_results.get('cpu_peak', 0))}",
    }


def main():
    parser = argparse.ArgumentParser(description="Warm vs cold start sweep timing")
    parser.add_argument("--sizes", default="2000,10000,50000", help="Comma-separated dataset sizes")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    results = []
    for n in (int(s) for s in args.sizes.split(",")):
        try:
            results.append(run_experiment(n, args.seed))
        except KeyboardInterrupt:
            print("\nBenchmark interrupted by user.")
            break

    if results:
        columns = list(results[0])
        print()
        print(" | ".join(f"{c:>12}" for c in columns))
        print("-" * (15 * len(columns)))
        for row in results:
            print(" | ".join(f"{str(row[c]):>12}" for c in columns))


if __name__ == "__main__":
    main()
