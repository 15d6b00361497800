# fairweigh/validator.py
"""
Report validation.
Sanity checks on a finished train or sweep report: were the constraints met,
did clamping kick in, how much accuracy was given up, does the sweep behave.
"""

import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Optional

_LOG = logging.getLogger("fairweigh.validator")


@dataclass
class ValidationResult:
    """Result of a validation check."""
    check_name: str
    passed: bool
    message: str
    severity: str = "info"  # info, warning, critical
    metric_value: Optional[float] = None


class ReportValidator:
    """Validates fairweigh reports against expectations."""

    def __init__(self, report: Dict[str, Any], max_accuracy_drop: float = 0.05,
                 test_slack: float = 2.0):
        """
        Args:
            report: Report document from Orchestrator.cmd_train or cmd_sweep
            max_accuracy_drop: Largest acceptable test accuracy loss vs the baseline
            test_slack: Test |FP| may exceed epsilon by this factor before warning
        """
        self.report = report
        self.max_accuracy_drop = max_accuracy_drop
        self.test_slack = test_slack
        self.checks: List[ValidationResult] = []

    def run_all_checks(self) -> List[ValidationResult]:
        """Run the checks that apply to this report's command."""
        self.checks = []
        command = self.report.get("command")
        if command == "train":
            self._check_satisfied()
            self._check_test_gap()
            self._check_accuracy_drop()
            self._check_clamping()
        elif command == "sweep":
            self._check_sweep_rows()
            self._check_sweep_monotonicity()
        else:
            _LOG.info("No validation checks for command '%s'", command)
        return self.checks

    def _epsilons(self) -> Dict[str, float]:
        return {c["id"]: c["epsilon"] for c in self.report.get("constraints", [])}

    def _check_satisfied(self) -> None:
        tuned = self.report["tuned"]
        passed = bool(self.report.get("satisfied"))
        worst = max((abs(v) - self._epsilons()[cid] for cid, v in tuned["validation"]["fp"].items()),
                    default=0.0)
        self.checks.append(ValidationResult(
            check_name="Validation Constraints",
            passed=passed,
            message="all constraints met on validation" if passed
            else f"worst |FP| - eps = {worst:+.4f}; {tuned.get('note', '')}".rstrip("; "),
            severity="critical" if not passed else "info",
            metric_value=worst,
        ))

    def _check_test_gap(self) -> None:
        eps = self._epsilons()
        test_fp = self.report["tuned"]["test"]["fp"]
        over = {cid: v for cid, v in test_fp.items() if abs(v) > self.test_slack * eps[cid]}
        self.checks.append(ValidationResult(
            check_name="Test Generalization",
            passed=not over,
            message=f"test |FP| within {self.test_slack:g} x eps" if not over
            else f"test |FP| above {self.test_slack:g} x eps: " + ", ".join(f"{k}={v:+.4f}" for k, v in over.items()),
            severity="warning" if over else "info",
            metric_value=max((abs(v) for v in test_fp.values()), default=0.0),
        ))

    def _check_accuracy_drop(self) -> None:
        drop = self.report["baseline"]["test"]["ap"] - self.report["tuned"]["test"]["ap"]
        passed = drop <= self.max_accuracy_drop
        self.checks.append(ValidationResult(
            check_name="Accuracy Drop",
            passed=passed,
            message=f"test AP dropped {drop * 100:.2f} points (max {self.max_accuracy_drop * 100:.1f})",
            severity="warning" if not passed else "info",
            metric_value=drop,
        ))

    def _check_clamping(self) -> None:
        clamps = self.report.get("clamp_warnings", 0)
        self.checks.append(ValidationResult(
            check_name="Weight Clamping",
            passed=clamps == 0,
            message=f"{clamps} fit(s) had negative weights clamped to 0",
            severity="warning" if clamps else "info",
            metric_value=clamps,
        ))

    def _check_sweep_rows(self) -> None:
        rows = self.report.get("rows", [])
        failed = [r for r in rows if r.get("error")]
        self.checks.append(ValidationResult(
            check_name="Sweep Rows",
            passed=not failed,
            message=f"{len(rows) - len(failed)}/{len(rows)} rows satisfied",
            severity="warning" if failed else "info",
            metric_value=len(failed),
        ))

    def _check_sweep_monotonicity(self) -> None:
        violations = self.report.get("monotonicity_violations", [])
        self.checks.append(ValidationResult(
            check_name="Trade-off Monotonicity",
            passed=not violations,
            message=f"test AP rose {len(violations)} time(s) as epsilon tightened",
            severity="warning" if violations else "info",
            metric_value=len(violations),
        ))

    def generate_report(self) -> str:
        """Generate validation report."""
        report = []
        report.append("=" * 60)
        report.append("REPORT VALIDATION")
        report.append("=" * 60)
        report.append("")

        passed = sum(1 for c in self.checks if c.passed)
        total = len(self.checks)
        report.append(f"Checks Passed: {passed}/{total}")
        report.append("")

        for check in self.checks:
            if check.passed:
                symbol = "PASS"
            elif check.severity == "critical":
                symbol = "FAIL"
            else:
                symbol = "WARN"
            report.append(f"[{symbol}] {check.check_name}: {check.message}")

        report.append("")
        report.append("=" * 60)
        if passed == total:
            report.append(" ALL CHECKS PASSED")
        elif any(c.severity == "critical" and not c.passed for c in self.checks):
            report.append(" CRITICAL ISSUES FOUND - constraints not met")
        else:
            report.append(" WARNINGS FOUND - see above")
        report.append("=" * 60)
        return "\n".join(report)


def validate_report(report: Dict[str, Any], max_accuracy_drop: float = 0.05) -> str:
    """
    Convenience function to validate a command report.

    Returns:
        Validation report string
    """
    validator = ReportValidator(report, max_accuracy_drop=max_accuracy_drop)
    validator.run_all_checks()
    return validator.generate_report()
