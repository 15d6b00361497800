##! @file data.py
##! @brief Tabular binary-classification datasets and deterministic splits
##!
##! @details
##! Owns the canonical example indexing (0..N-1) that grouping, metrics,
##! weighting and the learners all refer to:
##! - CSV loading with explicit or inferred numeric feature columns
##! - Round-trip CSV writing
##! - Seeded train/validation/test splitting
##!
##! Datasets are stored column-wise as read-only numpy arrays; the row view
##! (Example) is built on demand.

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterator, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from .errors import (
    DatasetTooSmall,
    EmptyDataset,
    InvalidSplit,
    MissingColumn,
    MissingValue,
    UnparsableNumeric,
    DataError,
)

_LOG = logging.getLogger("fairweigh.data")


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


def as_index_set(indices) -> np.ndarray:
    """Normalize any iterable of example indices to a sorted, unique int array."""
    if not isinstance(indices, np.ndarray):
        indices = list(indices)
    return _frozen(np.unique(np.asarray(indices, dtype=np.int64)))


@dataclass(frozen=True)
class Example:
    ##! @struct Example
    ##! @brief One row: numeric features, binary label, source columns as text
    features: Tuple[float, ...]
    label: int
    raw_attributes: Mapping[str, str] = field(default_factory=dict)


@dataclass(frozen=True, eq=False)
class Dataset:
    ##! @class Dataset
    ##! @brief Immutable table of N >= 1 examples
    ##! @details
    ##! X has shape (N, d) and y holds labels in {0, 1}. raw maps every
    ##! retained source column to its N string values; grouping reads these.
    X: np.ndarray
    y: np.ndarray
    feature_names: Tuple[str, ...]
    label_name: str = "label"
    raw: Mapping[str, Tuple[str, ...]] = field(default_factory=dict)

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        if X.ndim == 1:
            X = X.reshape(-1, 1)
        y = np.asarray(self.y, dtype=np.int64)
        if X.shape[0] == 0:
            raise EmptyDataset("Dataset must contain at least one example")
        if y.shape != (X.shape[0],):
            raise DataError(f"Label vector has shape {y.shape}, expected ({X.shape[0]},)")
        if not np.isin(y, (0, 1)).all():
            raise DataError("Labels must be 0 or 1")
        if len(self.feature_names) != X.shape[1]:
            raise DataError(
                f"{len(self.feature_names)} feature names for {X.shape[1]} feature columns"
            )
        if not np.isfinite(X).all():
            raise DataError("Features must be finite")
        raw = {}
        for col, values in dict(self.raw).items():
            values = tuple(str(v) for v in values)
            if len(values) != X.shape[0]:
                raise DataError(f"Attribute '{col}' has {len(values)} values, expected {X.shape[0]}")
            raw[col] = values
        object.__setattr__(self, "X", _frozen(X.copy()))
        object.__setattr__(self, "y", _frozen(y.copy()))
        object.__setattr__(self, "feature_names", tuple(self.feature_names))
        object.__setattr__(self, "raw", raw)

    @classmethod
    def from_examples(cls, examples: Sequence[Example], feature_names: Sequence[str],
                      label_name: str = "label") -> "Dataset":
        """Build a dataset from row objects."""
        if not examples:
            raise EmptyDataset("Dataset must contain at least one example")
        arity = len(feature_names)
        for i, ex in enumerate(examples):
            if len(ex.features) != arity:
                raise DataError(f"Example {i} has {len(ex.features)} features, expected {arity}")
        columns: List[str] = []
        for ex in examples:
            for col in ex.raw_attributes:
                if col not in columns:
                    columns.append(col)
        raw = {col: tuple(ex.raw_attributes.get(col, "") for ex in examples) for col in columns}
        X = np.array([ex.features for ex in examples], dtype=float).reshape(len(examples), arity)
        y = np.array([ex.label for ex in examples], dtype=np.int64)
        return cls(X=X, y=y, feature_names=tuple(feature_names), label_name=label_name, raw=raw)

    @property
    def n(self) -> int:
        return int(self.X.shape[0])

    def __len__(self) -> int:
        return self.n

    def example(self, i: int) -> Example:
        return Example(
            features=tuple(float(v) for v in self.X[i]),
            label=int(self.y[i]),
            raw_attributes={col: vals[i] for col, vals in self.raw.items()},
        )

    @property
    def examples(self) -> List[Example]:
        return [self.example(i) for i in range(self.n)]

    def __iter__(self) -> Iterator[Example]:
        for i in range(self.n):
            yield self.example(i)

    def all_indices(self) -> np.ndarray:
        return _frozen(np.arange(self.n, dtype=np.int64))

    def to_csv(self, path, positive_label: str = "1", negative_label: str = "0") -> None:
        """
        Write the dataset as CSV so that load_csv reproduces identical examples.

        Feature columns present in raw are written from their source text;
        others use repr() so floats survive the round trip exactly.
        """
        columns = list(self.raw.keys())
        for name in self.feature_names:
            if name not in columns:
                columns.append(name)
        columns.append(self.label_name)
        feature_pos = {name: j for j, name in enumerate(self.feature_names)}

        frame = pd.DataFrame({
            col: list(self.raw[col]) if col in self.raw
            else [repr(float(v)) for v in self.X[:, feature_pos[col]]]
            for col in columns[:-1]
        })
        frame[self.label_name] = np.where(self.y == 1, positive_label, negative_label)
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(path, index=False, columns=columns)
        _LOG.debug("Wrote %d rows to %s", self.n, path)


def _parse_float(text: str) -> Optional[float]:
    try:
        value = float(text)
    except ValueError:
        return None
    return value if math.isfinite(value) else None


def load_csv(path, label_column: str, positive_label: str = "1",
             feature_columns: Optional[Sequence[str]] = None) -> Dataset:
    """
    Load a UTF-8, comma-separated file with a header row.

    Args:
        path: CSV file path
        label_column: Column holding the binary label
        positive_label: Cell text that maps to label 1 (anything else is 0)
        feature_columns: Numeric feature columns; inferred when None as every
            non-label column whose cells all parse as numbers

    Returns:
        Dataset with every non-label column kept in raw attributes

    Raises:
        FileNotFoundError, MissingColumn, MissingValue, UnparsableNumeric, EmptyDataset
    """
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(f"Data file not found: {path}")

    try:
        frame = pd.read_csv(p, dtype=str, keep_default_na=False, encoding="utf-8")
    except pd.errors.EmptyDataError:
        raise EmptyDataset(f"No header or rows in {path}")

    if frame.shape[0] == 0:
        raise EmptyDataset(f"No data rows in {path}")
    if label_column not in frame.columns:
        raise MissingColumn(label_column, str(path))

    for col in frame.columns:
        blank = frame[col].str.strip() == ""
        if blank.any():
            raise MissingValue(int(np.flatnonzero(blank.to_numpy())[0]) + 1, col)

    attr_columns = [c for c in frame.columns if c != label_column]
    if feature_columns is None:
        feature_columns = [
            c for c in attr_columns
            if all(_parse_float(v) is not None for v in frame[c])
        ]
    else:
        for col in feature_columns:
            if col not in frame.columns:
                raise MissingColumn(col, str(path))

    X = np.empty((frame.shape[0], len(feature_columns)), dtype=float)
    for j, col in enumerate(feature_columns):
        for i, text in enumerate(frame[col]):
            value = _parse_float(text)
            if value is None:
                raise UnparsableNumeric(i + 1, col, text)
            X[i, j] = value

    y = (frame[label_column].str.strip() == str(positive_label)).to_numpy().astype(np.int64)
    raw = {col: tuple(frame[col]) for col in attr_columns}

    dataset = Dataset(X=X, y=y, feature_names=tuple(feature_columns),
                      label_name=label_column, raw=raw)
    _LOG.info("Loaded %s: N=%d, features=%s, positives=%d",
              path, dataset.n, list(feature_columns), int(y.sum()))
    return dataset


@dataclass(frozen=True)
class SplitSpec:
    ##! @struct SplitSpec
    ##! @brief Fractions for train/validation/test and the shuffling seed
    train_fraction: float = 0.6
    validation_fraction: float = 0.2
    test_fraction: float = 0.2
    seed: int = 0

    def __post_init__(self):
        fractions = (self.train_fraction, self.validation_fraction, self.test_fraction)
        if any(not (0.0 < f < 1.0) for f in fractions):
            raise InvalidSplit(f"Each split fraction must lie in (0, 1), got {fractions}")
        if abs(sum(fractions) - 1.0) > 1e-9:
            raise InvalidSplit(f"Split fractions must sum to 1, got {sum(fractions)}")


@dataclass(frozen=True, eq=False)
class DataSplit:
    ##! @struct DataSplit
    ##! @brief Sorted train/validation/test index sets; split() makes them disjoint and covering
    train: np.ndarray
    validation: np.ndarray
    test: np.ndarray

    def __post_init__(self):
        for name in ("train", "validation", "test"):
            object.__setattr__(self, name, as_index_set(getattr(self, name)))

    def part(self, name: str) -> np.ndarray:
        if name not in ("train", "validation", "test"):
            raise KeyError(name)
        return getattr(self, name)

    def sizes(self) -> Dict[str, int]:
        return {"train": len(self.train), "validation": len(self.validation), "test": len(self.test)}


def split(dataset: Dataset, spec: SplitSpec) -> DataSplit:
    """
    Shuffle indices with spec.seed and cut them into three parts.

    Validation and test get floor(fraction * N) rows; the remainder goes to train.
    """
    n = dataset.n
    if n < 3:
        raise DatasetTooSmall(f"Need at least 3 examples to split, got {n}")

    n_val = int(math.floor(spec.validation_fraction * n))
    n_test = int(math.floor(spec.test_fraction * n))
    n_train = n - n_val - n_test
    if min(n_train, n_val, n_test) < 1:
        raise DatasetTooSmall(
            f"N={n} leaves an empty part (train={n_train}, validation={n_val}, test={n_test})"
        )

    perm = np.random.default_rng(spec.seed).permutation(n)
    result = DataSplit(
        train=perm[:n_train],
        validation=perm[n_train:n_train + n_val],
        test=perm[n_train + n_val:],
    )
    _LOG.debug("Split N=%d into %s (seed=%d)", n, result.sizes(), spec.seed)
    return result
