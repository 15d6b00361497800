"""
Exception hierarchy for fairweigh.

Every error raised on purpose by the toolkit derives from FairweighError so the
CLI can turn it into a structured diagnostic and an exit code.
"""

from typing import Optional


class FairweighError(Exception):
    """Base class for all fairweigh errors."""


class ConfigError(FairweighError, ValueError):
    """Invalid or incomplete run configuration."""


# --- data ----------------------------------------------------------------

class DataError(FairweighError, ValueError):
    """Problem with an input dataset."""


class MissingColumn(DataError):
    def __init__(self, column: str, path: Optional[str] = None):
        self.column = column
        self.path = path
        where = f" in {path}" if path else ""
        super().__init__(f"Missing column '{column}'{where}")


class UnparsableNumeric(DataError):
    def __init__(self, row: int, col: str, value: str):
        self.row = row
        self.col = col
        self.value = value
        super().__init__(f"Cannot parse '{value}' as a number (row {row}, column '{col}')")


class MissingValue(DataError):
    def __init__(self, row: int, col: str):
        self.row = row
        self.col = col
        super().__init__(f"Missing value at row {row}, column '{col}'")


class EmptyDataset(DataError):
    """Dataset has no rows."""


class DatasetTooSmall(DataError):
    """Dataset cannot be split as requested."""


class InvalidSplit(DataError):
    """Split fractions are out of range or do not sum to 1."""


# --- grouping ------------------------------------------------------------

class GroupingError(FairweighError, ValueError):
    """Grouping function could not produce a valid assignment."""


class UnknownAttribute(GroupingError):
    def __init__(self, attribute: str):
        self.attribute = attribute
        super().__init__(f"Unknown attribute '{attribute}'")


class FewerThanTwoGroups(GroupingError):
    """Grouping produced fewer than two groups."""


class EmptyGroup(GroupingError):
    """A group has no members."""


class UnknownGroup(GroupingError):
    def __init__(self, group_id: str):
        self.group_id = group_id
        super().__init__(f"Unknown group '{group_id}'")


# --- metrics -------------------------------------------------------------

class MetricError(FairweighError, ValueError):
    """Metric could not be evaluated."""


class EmptyDenominator(MetricError):
    """A conditional rate has an empty conditioning set."""


class MissingModel(MetricError):
    """Metric coefficients depend on predictions but no model was supplied."""


class EmptyIndexSet(MetricError):
    """An evaluation index set is empty."""


class UnknownMetric(MetricError):
    """Metric kind or custom registry key is not known."""


# --- learners ------------------------------------------------------------

class LearnerError(FairweighError, RuntimeError):
    """Learner failed to fit."""


class SingleClassTrainingSet(LearnerError):
    """Training index set contains only one label."""


class NonFiniteLoss(LearnerError):
    """Loss became NaN or infinite during optimization."""


class EmptyTrainingSet(LearnerError):
    """No training examples (or no positive weight) to fit."""


class UnknownLearner(LearnerError):
    """Learner plug-in could not be loaded."""


# --- tuning --------------------------------------------------------------

class TuningError(FairweighError, RuntimeError):
    """Hyperparameter search failed."""


class InfeasibleWithinCap(TuningError):
    def __init__(self, lam: float, fp: float, cap: float, reason: str = ""):
        self.lam = lam
        self.fp = fp
        self.cap = cap
        self.reason = reason
        message = f"Constraint still violated at lambda={lam:g} (FP={fp:.4f}); cap is {cap:g}"
        super().__init__(f"{message}; {reason}" if reason else message)
