##! @file metrics_collector.py
##! @brief Probe bookkeeping for the lambda tuners
##!
##! @details
##! Every learner fit a tuner performs is recorded here:
##! - the probe itself (lambda, validation AP, validation FP)
##! - fit wall time, summarized as percentiles
##! - how many weights were clamped at zero
##! - errors that aborted a probe, by type
##!
##! One collector belongs to one tuner run; hill-climbing shares one across
##! its inner single-lambda runs so fit counts add up.

import logging
import time
from collections import deque
from dataclasses import dataclass
from typing import Any, Dict, List, Optional

import numpy as np

_LOG = logging.getLogger("fairweigh.metrics_collector")


@dataclass(frozen=True)
class TradeoffPoint:
    ##! @struct TradeoffPoint
    ##! @brief One evaluated lambda: validation accuracy and signed fairness gap
    lam: float   ##! Lambda in the constraint's declared orientation
    ap: float    ##! Validation accuracy
    fp: float    ##! Validation FP in the constraint's declared orientation
    constraint_id: str = ""
    clamped: int = 0

    def __post_init__(self):
        if not (np.isfinite(self.lam) and np.isfinite(self.ap) and np.isfinite(self.fp)):
            raise ValueError(f"Tradeoff point must be finite: {self}")

    def to_dict(self) -> Dict[str, Any]:
        return {"lambda": self.lam, "ap": self.ap, "fp": self.fp,
                "constraint": self.constraint_id, "clamped": self.clamped}


class StreamingPercentile:
    """Percentiles over the most recent samples with bounded memory."""

    def __init__(self, buffer_size: int = 10000):
        self.buffer = deque(maxlen=buffer_size)

    def add(self, value: float) -> None:
        self.buffer.append(value)

    def percentile(self, p: float) -> float:
        if not self.buffer:
            return 0.0
        return float(np.percentile(np.fromiter(self.buffer, dtype=float), p))

    def __len__(self) -> int:
        return len(self.buffer)


class ProbeCollector:
    """Fit and probe accounting for one tuning run."""

    def __init__(self, max_samples: int = 100000):
        self.probes: List[TradeoffPoint] = []
        self.fit_times = StreamingPercentile(max_samples)
        self.fits = 0
        self.clamp_warnings = 0
        self.clamped_total = 0
        self.error_types: Dict[str, int] = {}
        self.start_time = time.time()
        self.end_time: Optional[float] = None

    def record_fit(self, seconds: float, clamped: int = 0) -> None:
        """Record one learner fit and how many of its weights were clamped."""
        self.fits += 1
        self.fit_times.add(seconds)
        if clamped:
            self.clamp_warnings += 1
            self.clamped_total += clamped

    def record_probe(self, point: TradeoffPoint) -> None:
        self.probes.append(point)
        _LOG.debug("probe %s: lambda=%.6g ap=%.4f fp=%+.4f clamped=%d",
                   point.constraint_id, point.lam, point.ap, point.fp, point.clamped)

    def record_error(self, error_type: str, message: str = "") -> None:
        self.error_types[error_type] = self.error_types.get(error_type, 0) + 1
        _LOG.warning("%s: %s", error_type, message)

    def probes_for(self, constraint_id: str) -> List[TradeoffPoint]:
        return [p for p in self.probes if p.constraint_id == constraint_id]

    def finalize(self) -> None:
        self.end_time = time.time()

    @property
    def elapsed(self) -> float:
        return (self.end_time or time.time()) - self.start_time

    def get_summary(self) -> Dict[str, Any]:
        return {
            "fits": self.fits,
            "probes": len(self.probes),
            "clamp_warnings": self.clamp_warnings,
            "clamped_weights": self.clamped_total,
            "seconds": self.elapsed,
            "fit_p50_s": self.fit_times.percentile(50),
            "fit_p95_s": self.fit_times.percentile(95),
            "error_types": dict(self.error_types),
        }

