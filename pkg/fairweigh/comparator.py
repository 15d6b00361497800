# fairweigh/comparator.py
"""
Multi-constraint tuner comparison.
Puts hill-climbing and grid search results for the same constraints side by side.
"""

import logging
import time
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from .multitune import MultiTuneResult
from .weighting import FairnessConstraint

_LOG = logging.getLogger("fairweigh.comparator")


class TunerComparator:
    """Compare multi-constraint tuners on identical data and constraints."""

    def __init__(self, constraints: Sequence[FairnessConstraint]):
        self.constraints = list(constraints)
        self.results: Dict[str, Dict[str, Any]] = {}
        self.order: List[str] = []

    def add(self, name: str, result: MultiTuneResult, seconds: float,
            test: Optional[Dict[str, Any]] = None) -> None:
        """
        Register one tuner's outcome.

        Args:
            name: Tuner label, the first one added is the baseline of the table
            result: Tuner result
            seconds: Wall time the tuner took
            test: Evaluation of result.model on the test split
        """
        entry = result.to_dict()
        entry["seconds"] = seconds
        if test is not None:
            entry["test_ap"] = test["ap"]
            entry["test_fp"] = test["fp"]
        self.results[name] = entry
        self.order.append(name)
        _LOG.info("%s: satisfied=%s AP=%.4f fits=%d (%.2fs)",
                  name, result.satisfied, result.validation_ap, result.fits_performed, seconds)

    def fit_ratio(self, slow: str = "grid", fast: str = "hill_climb") -> Optional[float]:
        """Learner fits of slow divided by fits of fast."""
        if slow not in self.results or fast not in self.results:
            return None
        fast_fits = self.results[fast]["fits"]
        return self.results[slow]["fits"] / fast_fits if fast_fits else None

    def generate_report(self, output_file) -> str:
        """
        Write the comparison table.

        Args:
            output_file: Where to save the report

        Returns:
            The report text
        """
        if not self.results:
            _LOG.error("No results to compare")
            return ""

        report = []
        report.append("=" * 80)
        report.append("MULTI-CONSTRAINT TUNER COMPARISON")
        report.append("Constraints: " + ", ".join(f"{c.id} (eps={c.epsilon:g})" for c in self.constraints))
        report.append(f"Date: {time.strftime('%Y-%m-%d %H:%M:%S')}")
        report.append("=" * 80)
        report.append("")

        header = f"{'Metric':<28}" + "".join(f"{name:>16}" for name in self.order)
        report.append(header)
        report.append("-" * 80)

        def row(label: str, values) -> None:
            report.append(f"{label:<28}" + "".join(f"{v:>16}" for v in values))

        row("satisfied", [str(self.results[n]["satisfied"]).lower() for n in self.order])
        row("validation AP", [f"{self.results[n]['validation_ap']:.4f}" for n in self.order])
        if all("test_ap" in self.results[n] for n in self.order):
            row("test AP", [f"{self.results[n]['test_ap']:.4f}" for n in self.order])
        row("learner fits", [str(self.results[n]["fits"]) for n in self.order])
        row("seconds", [f"{self.results[n]['seconds']:.2f}" for n in self.order])
        for c in self.constraints:
            row(f"lambda {c.id}", [f"{self.results[n]['lambdas'].get(c.id, 0.0):.4g}" for n in self.order])
            row(f"validation FP {c.id}", [f"{self.results[n]['validation_fp'][c.id]:+.4f}" for n in self.order])

        report.append("")
        report.append("=" * 80)
        report.append("SUMMARY")
        report.append("=" * 80)
        ratio = self.fit_ratio()
        if ratio is not None:
            report.append(f"Fit ratio grid / hill_climb: {ratio:.1f}x")
        winner = self._determine_winner()
        report.append(f"Best: {winner['tuner']}")
        report.append(f"   Reason: {winner['reason']}")

        text = "\n".join(report)
        Path(output_file).write_text(text)
        _LOG.info("Comparison saved to: %s", output_file)
        return text

    def _determine_winner(self) -> Dict[str, str]:
        """Satisfied beats unsatisfied, then higher validation AP, then fewer fits."""
        if not self.results:
            return {"tuner": "Unknown", "reason": "No results"}

        def score(name: str):
            r = self.results[name]
            return (r["satisfied"], r["validation_ap"], -r["fits"])

        best = max(self.order, key=score)
        r = self.results[best]
        return {
            "tuner": best,
            "reason": f"satisfied={str(r['satisfied']).lower()}, validation AP {r['validation_ap']:.4f} "
                      f"with {r['fits']} fits",
        }
