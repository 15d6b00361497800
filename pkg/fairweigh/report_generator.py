# fairweigh/report_generator.py
"""
Report writers for fairweigh commands.

Every command produces a JSON document (the machine-readable report) and a
plain-text rendering of it; the sweep also produces tradeoff.csv.
"""

import json
import logging
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Sequence

import pandas as pd

from .utils import format_bytes, format_duration

_LOG = logging.getLogger("fairweigh.report_generator")

TRADEOFF_COLUMNS = ["epsilon", "lambda", "validation_ap", "validation_fp",
                    "test_ap", "test_fp", "fits", "seconds"]


def write_tradeoff_csv(rows: Sequence[Dict[str, Any]], filepath) -> None:
    """
    Write sweep rows in the order given.

    Failed rows keep their epsilon and carry nan in the numeric columns.
    """
    frame = pd.DataFrame([{k: row.get(k, float("nan")) for k in TRADEOFF_COLUMNS} for row in rows],
                         columns=TRADEOFF_COLUMNS)
    frame.to_csv(filepath, index=False, na_rep="nan")
    _LOG.info("Trade-off table (%d rows) written to %s", len(frame), filepath)


def _fmt(value: Any, spec: str = ".4f") -> str:
    if value is None:
        return "n/a"
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, (int, float)):
        return format(value, spec)
    return str(value)


class ReportGenerator:
    """Render one command report as JSON and text."""

    def __init__(self, report: Dict[str, Any], source_name: str = "Unnamed"):
        """
        Args:
            report: Report document returned by an Orchestrator command
            source_name: Dataset the run used, shown in headers
        """
        self.report = report
        self.source_name = source_name
        self.timestamp = datetime.now().strftime("%Y-%m-%d %H:%M:%S")

    def generate_json_report(self, filepath) -> None:
        Path(filepath).write_text(json.dumps(self.report, indent=2))
        _LOG.info("JSON report generated: %s", filepath)

    def generate_text_report(self, filepath) -> None:
        Path(filepath).write_text(self._build_text())
        _LOG.info("Text report generated: %s", filepath)

    def _build_text(self) -> str:
        r = self.report
        lines = []
        lines.append("=" * 80)
        lines.append(f"fairweigh {r.get('command', '?')} report - {self.source_name}")
        lines.append(f"Generated: {self.timestamp}")
        lines.append("=" * 80)
        lines.append("")
        lines.append("RUN")
        lines.append("-" * 80)
        lines.append(f"N: {r.get('n')}  split: {r.get('split')}  seed: {r.get('seed')}")
        lines.append(f"Groups: {r.get('groups')}")
        learner = r.get("learner", {})
        lines.append(f"Learner: {learner.get('kind')} {learner.get('params') or ''}")
        for c in r.get("constraints", []):
            lines.append(f"Constraint {c['id']}: |{c['metric']}({c['g1']}) - {c['metric']}({c['g2']})| <= {c['epsilon']:g}")
        lines.append("")

        builder = {
            "audit": self._audit_section,
            "train": self._train_section,
            "sweep": self._sweep_section,
            "compare-grid": self._compare_section,
        }.get(r.get("command"))
        if builder is not None:
            lines.extend(builder())

        res = r.get("resources")
        if res:
            lines.append("RESOURCES")
            lines.append("-" * 80)
            lines.append(f"Wall clock: {format_duration(res['seconds'])}")
            lines.append(f"Peak RSS: {format_bytes(res['peak_rss_bytes'])}")
            lines.append("")
        lines.append("=" * 80)
        return "\n".join(lines)

    def _audit_section(self) -> List[str]:
        lines = []
        for part, block in self.report.get("baseline", {}).items():
            lines.append(f"BASELINE ON {part.upper()} (AP={_fmt(block['ap'])})")
            lines.append("-" * 80)
            bounds = self.report.get("noise_bound", {}).get(part, {})
            for metric, values in block["metrics"].items():
                vals = ", ".join(f"{g}={_fmt(v)}" for g, v in values["values"].items())
                lines.append(f"{metric:<4} {vals}")
                for pair, gap in values["gaps"].items():
                    suffix = f"  (SP noise bound {_fmt(bounds.get(pair))})" if metric == "SP" else ""
                    lines.append(f"       gap {pair}: {_fmt(gap, '+.4f')}{suffix}")
            lines.append("")
        return lines

    def _train_section(self) -> List[str]:
        r = self.report
        tuned = r["tuned"]
        lines = ["RESULT", "-" * 80]
        lines.append(f"Method: {tuned.get('method')}  satisfied: {_fmt(r['satisfied'])}")
        if tuned.get("note"):
            lines.append(f"Note: {tuned['note']}")
        lines.append(f"Lambdas: {', '.join(f'{k}={v:g}' for k, v in tuned['lambdas'].items())}")
        lines.append(f"Fits: {r['fits']}  clamp warnings: {r['clamp_warnings']}")
        lines.append("")
        lines.append(f"{'':<14}{'baseline AP':>14}{'tuned AP':>12}")
        for part in ("validation", "test"):
            lines.append(f"{part:<14}{r['baseline'][part]['ap']:>14.4f}{tuned[part]['ap']:>12.4f}")
        lines.append("")
        lines.append(f"{'constraint':<22}{'split':<12}{'baseline FP':>13}{'tuned FP':>11}  ok")
        for cid in tuned["validation"]["fp"]:
            for part in ("validation", "test"):
                lines.append(f"{cid:<22}{part:<12}{r['baseline'][part]['fp'][cid]:>+13.4f}"
                             f"{tuned[part]['fp'][cid]:>+11.4f}  {_fmt(tuned[part]['satisfied'][cid])}")
        lines.append("")
        probes = r.get("probe_log", [])
        if probes:
            lines.append(f"PROBES ({len(probes)})")
            lines.append("-" * 80)
            for p in probes:
                lines.append(f"{p['constraint']:<22} lambda={p['lambda']:<14.6g} AP={p['ap']:.4f} "
                             f"FP={p['fp']:+.4f} clamped={p['clamped']}")
            lines.append("")
        return lines

    def _sweep_section(self) -> List[str]:
        lines = ["TRADE-OFF", "-" * 80]
        lines.append(f"{'epsilon':>9}{'lambda':>14}{'val AP':>9}{'val FP':>9}{'test AP':>9}{'test FP':>9}{'fits':>6}")
        for row in self.report["rows"]:
            lines.append(f"{row['epsilon']:>9.4g}{row['lambda']:>14.6g}{row['validation_ap']:>9.4f}"
                         f"{row['validation_fp']:>+9.4f}{row['test_ap']:>9.4f}{row['test_fp']:>+9.4f}"
                         f"{row['fits']:>6}")
            if row.get("error"):
                lines.append(f"{'':>9}  {row['error']}")
        violations = self.report.get("monotonicity_violations", [])
        lines.append("")
        lines.append(f"test_ap increases as epsilon tightens: {len(violations)}")
        lines.append("")
        return lines

    def _compare_section(self) -> List[str]:
        lines = ["COMPARISON", "-" * 80]
        for name, res in self.report["results"].items():
            lines.append(f"{name:<12} satisfied={_fmt(res['satisfied'])} AP={_fmt(res['validation_ap'])} "
                         f"fits={res['fits']} seconds={res['seconds']:.2f}")
        lines.append(f"Fit ratio (grid / hill_climb): {_fmt(self.report.get('fit_ratio'), '.1f')}")
        lines.append("")
        return lines
