"""
Dataset loading, round-trip writing and splitting.
"""

import logging

import numpy as np
import pytest

from fairweigh.data import Dataset, Example, SplitSpec, as_index_set, load_csv, split
from fairweigh.errors import (
    DatasetTooSmall,
    EmptyDataset,
    InvalidSplit,
    MissingColumn,
    MissingValue,
    UnparsableNumeric,
)

_LOG = logging.getLogger("fairweigh.tests.data")


def write(tmp_path, text, name="data.csv"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


def test_load_infers_numeric_features(tmp_path):
    """Test 1: numeric columns become features, text columns stay raw."""
    path = write(tmp_path, "age,sex,label\n30,M,yes\n41.5,F,no\n25,F,yes\n")
    ds = load_csv(path, "label", positive_label="yes")
    assert ds.feature_names == ("age",)
    assert ds.X[:, 0].tolist() == [30.0, 41.5, 25.0]
    assert ds.y.tolist() == [1, 0, 1]
    assert ds.raw["sex"] == ("M", "F", "F")
    assert ds.raw["age"] == ("30", "41.5", "25")
    assert ds.example(1).raw_attributes["sex"] == "F"


def test_load_explicit_feature_columns(tmp_path):
    path = write(tmp_path, "a,b,label\n1,2,1\n3,4,0\n")
    ds = load_csv(path, "label", feature_columns=["b"])
    assert ds.feature_names == ("b",)
    assert ds.X[:, 0].tolist() == [2.0, 4.0]


def test_load_errors(tmp_path):
    """Test 2: structured load errors."""
    with pytest.raises(FileNotFoundError):
        load_csv(tmp_path / "missing.csv", "label")

    with pytest.raises(MissingColumn):
        load_csv(write(tmp_path, "a,b\n1,2\n"), "label")

    with pytest.raises(MissingColumn):
        load_csv(write(tmp_path, "a,label\n1,1\n"), "label", feature_columns=["zzz"])

    with pytest.raises(EmptyDataset):
        load_csv(write(tmp_path, "a,label\n"), "label")

    with pytest.raises(MissingValue) as exc:
        load_csv(write(tmp_path, "a,label\n1,1\n,0\n"), "label")
    assert exc.value.row == 2 and exc.value.col == "a"

    with pytest.raises(UnparsableNumeric) as exc:
        load_csv(write(tmp_path, "a,label\n1,1\nabc,0\n"), "label", feature_columns=["a"])
    assert (exc.value.row, exc.value.col, exc.value.value) == (2, "a", "abc")


def test_csv_round_trip(tmp_path):
    """Test 3: to_csv followed by load_csv reproduces every example."""
    rng = np.random.default_rng(3)
    X = rng.normal(size=(25, 2))
    y = rng.integers(0, 2, size=25)
    groups = tuple(rng.choice(["A", "B"], size=25))
    ds = Dataset(X=X, y=y, feature_names=("f1", "f2"), raw={"group": groups})
    path = tmp_path / "round.csv"
    ds.to_csv(path)
    assert path.read_text().splitlines()[0] == "group,f1,f2,label"
    back = load_csv(path, "label", feature_columns=["f1", "f2"])
    assert np.array_equal(back.X, ds.X)
    assert np.array_equal(back.y, ds.y)
    assert back.raw["group"] == groups


def test_from_examples_and_immutability():
    examples = [Example(features=(1.0,), label=1, raw_attributes={"g": "A"}),
                Example(features=(2.0,), label=0, raw_attributes={"g": "B"})]
    ds = Dataset.from_examples(examples, ["x"])
    assert ds.n == 2 and list(ds)[1].raw_attributes == {"g": "B"}
    with pytest.raises(ValueError):
        ds.X[0, 0] = 5.0


def test_split_sizes_and_cover():
    """Test 4: floor sizes for validation/test, remainder to train, disjoint cover."""
    ds = Dataset(X=np.arange(103, dtype=float), y=np.arange(103) % 2, feature_names=("x",))
    parts = split(ds, SplitSpec(0.6, 0.2, 0.2, seed=5))
    assert parts.sizes() == {"train": 63, "validation": 20, "test": 20}
    everything = np.concatenate([parts.train, parts.validation, parts.test])
    assert sorted(everything.tolist()) == list(range(103))
    assert np.all(np.diff(parts.train) > 0)


def test_split_is_deterministic():
    ds = Dataset(X=np.arange(50, dtype=float), y=np.arange(50) % 2, feature_names=("x",))
    a = split(ds, SplitSpec(seed=11))
    b = split(ds, SplitSpec(seed=11))
    c = split(ds, SplitSpec(seed=12))
    assert np.array_equal(a.validation, b.validation)
    assert not np.array_equal(a.validation, c.validation)


def test_split_errors():
    with pytest.raises(InvalidSplit):
        SplitSpec(0.5, 0.2, 0.2)
    with pytest.raises(InvalidSplit):
        SplitSpec(1.0, 0.0, 0.0)
    tiny = Dataset(X=[[0.0], [1.0]], y=[0, 1], feature_names=("x",))
    with pytest.raises(DatasetTooSmall):
        split(tiny, SplitSpec())
    four = Dataset(X=np.arange(4, dtype=float), y=[0, 1, 0, 1], feature_names=("x",))
    with pytest.raises(DatasetTooSmall):
        split(four, SplitSpec())


def test_as_index_set_sorts_and_dedupes():
    assert as_index_set([5, 1, 5, 3]).tolist() == [1, 3, 5]
