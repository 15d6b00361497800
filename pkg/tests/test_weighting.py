"""
Weight derivation: the weighted-accuracy identity, clamping and subsets.
"""

import logging

import numpy as np
import pytest

from conftest import indexed_dataset
from fairweigh.errors import ConfigError, EmptyDenominator, MissingModel
from fairweigh.grouping import GroupAssignment
from fairweigh.metrics import BUILTIN_METRICS, MetricSpec, accuracy, fairness_gap
from fairweigh.weighting import (
    FairnessConstraint,
    LambdaVector,
    derive_weights,
    derive_weights_multi,
    objective_offset,
)
from learners.threshold import Model as ThresholdModel

_LOG = logging.getLogger("fairweigh.tests.weighting")


def sp_constraint(eps=0.1):
    return FairnessConstraint("SP:A-B", "A", "B", MetricSpec("SP"), eps)


def random_instance(rng):
    n = int(rng.integers(4, 65))
    y = rng.integers(0, 2, size=n)
    groups = np.where(rng.random(n) < 0.5, "A", "B")
    groups[0], groups[1] = "A", "B"
    dataset = indexed_dataset(y, list(groups), extra=rng.normal(size=n))
    model = ThresholdModel(1, float(rng.normal()), int(rng.choice([-1, 1])))
    assignment = GroupAssignment({"A": np.flatnonzero(groups == "A"), "B": np.flatnonzero(groups == "B")})
    return dataset, model, assignment


def test_weighted_accuracy_identity():
    """Test 1: (1/N) sum w 1(h=y) = AP + lambda*FP - offset on 1000 random instances."""
    rng = np.random.default_rng(99)
    checked = 0
    for trial in range(1000):
        dataset, model, assignment = random_instance(rng)
        kind = BUILTIN_METRICS[trial % len(BUILTIN_METRICS)]
        costs = tuple(rng.uniform(0, 2, size=2)) if kind == "AEC" else None
        c = FairnessConstraint("c", "A", "B", MetricSpec(kind, aec_costs=costs), 0.0)
        lam = float(rng.uniform(-2, 2))
        lambdas = LambdaVector({"c": lam})
        try:
            wv = derive_weights_multi(lambdas, [c], dataset, assignment, model=model, clamp=False)
            fp = fairness_gap(c, dataset, model, assignment)
        except EmptyDenominator:
            continue
        correct = (model.predict_batch(dataset) == dataset.y).astype(float)
        lhs = float(wv.w @ correct) / dataset.n
        rhs = (accuracy(dataset, dataset.all_indices(), model) + lam * fp
               - objective_offset(lambdas, [c], dataset, assignment, model=model))
        assert lhs == pytest.approx(rhs, abs=1e-9), (trial, kind)
        assert wv.clamped == 0
        checked += 1
    _LOG.info("Identity held on %d instances", checked)
    assert checked > 600


def test_identity_with_two_constraints_and_subset():
    """Test 2: several constraints at once, weighted over a subset of rows."""
    rng = np.random.default_rng(5)
    for _ in range(200):
        dataset, model, assignment = random_instance(rng)
        constraints = [
            FairnessConstraint("sp", "A", "B", MetricSpec("SP"), 0.0),
            FairnessConstraint("mr", "B", "A", MetricSpec("MR"), 0.0),
        ]
        lambdas = LambdaVector({"sp": rng.uniform(-2, 2), "mr": rng.uniform(-2, 2)})
        sub = np.flatnonzero(rng.random(dataset.n) < 0.7)
        if not (np.isin(assignment["A"], sub).any() and np.isin(assignment["B"], sub).any()):
            continue
        wv = derive_weights_multi(lambdas, constraints, dataset, assignment, subset=sub, clamp=False)
        outside = np.setdiff1d(dataset.all_indices(), sub)
        assert np.all(wv.w[outside] == 1.0)
        correct = (model.predict_batch(dataset) == dataset.y).astype(float)
        lhs = float(wv.w[sub] @ correct[sub]) / sub.size
        rhs = accuracy(dataset, sub, model) - objective_offset(lambdas, constraints, dataset, assignment,
                                                               subset=sub)
        for c in constraints:
            rhs += lambdas.get(c.id) * fairness_gap(c, dataset, model, assignment, subset=sub)
        assert lhs == pytest.approx(rhs, abs=1e-9)


def test_weights_are_linear_in_lambda():
    """Test 5: w - 1 is linear in the lambda vector, FDR terms included."""
    rng = np.random.default_rng(23)
    constraints = [
        FairnessConstraint("sp", "A", "B", MetricSpec("SP"), 0.0),
        FairnessConstraint("fdr", "B", "A", MetricSpec("FDR"), 0.0),
    ]
    checked = 0
    for _ in range(300):
        dataset, model, assignment = random_instance(rng)
        a = {"sp": rng.uniform(-2, 2), "fdr": rng.uniform(-2, 2)}
        b = {"sp": rng.uniform(-2, 2), "fdr": rng.uniform(-2, 2)}
        scale = rng.uniform(-3, 3)

        def shifted(lams):
            wv = derive_weights_multi(LambdaVector(lams), constraints, dataset, assignment,
                                      model=model, clamp=False)
            return wv.w - 1.0

        try:
            wa, wb = shifted(a), shifted(b)
        except EmptyDenominator:
            continue
        summed = shifted({k: a[k] + b[k] for k in a})
        scaled = shifted({k: scale * a[k] for k in a})
        np.testing.assert_allclose(summed, wa + wb, atol=1e-9)
        np.testing.assert_allclose(scaled, scale * wa, atol=1e-9)
        checked += 1
    _LOG.info("Linearity held on %d instances", checked)
    assert checked > 100


def test_zero_lambda_gives_unit_weights(eight_rows):
    dataset, _, assignment = eight_rows
    wv = derive_weights(0.0, sp_constraint(), dataset, assignment)
    assert wv.w.tolist() == [1.0] * 8
    assert not wv.clamp_warning
    # no model needed while the parameterized constraint is inactive
    fdr = FairnessConstraint("FDR:A-B", "A", "B", MetricSpec("FDR"), 0.1)
    assert derive_weights(0.0, fdr, dataset, assignment).w.tolist() == [1.0] * 8


def test_sp_weights_and_clamping(eight_rows):
    """Test 3: N*lambda*c = 8 * 1 * 1/4 = 2 per row; three rows go negative."""
    dataset, _, assignment = eight_rows
    wv = derive_weights(1.0, sp_constraint(), dataset, assignment)
    assert wv.w.tolist() == [3.0, 3.0, 0.0, 0.0, 0.0, 3.0, 3.0, 3.0]
    assert wv.clamped == 3 and wv.clamp_warning

    raw = derive_weights(1.0, sp_constraint(), dataset, assignment, clamp=False)
    assert raw.w.tolist() == [3.0, 3.0, -1.0, -1.0, -1.0, 3.0, 3.0, 3.0]
    assert raw.clamped == 0

    small = derive_weights(0.25, sp_constraint(), dataset, assignment)
    assert small.w.tolist() == [1.5, 1.5, 0.5, 0.5, 0.5, 1.5, 1.5, 1.5]
    assert small.clamped == 0


def test_subset_weights(eight_rows):
    """Test 4: N is the subset size and rows outside it keep weight 1."""
    dataset, _, assignment = eight_rows
    wv = derive_weights(1.0, sp_constraint(), dataset, assignment, subset=[0, 1, 4, 5])
    assert wv.w.tolist() == [3.0, 3.0, 1.0, 1.0, 0.0, 3.0, 1.0, 1.0]
    assert wv.clamped == 1


def test_overlapping_groups_get_both_terms(eight_rows):
    dataset, _, _ = eight_rows
    overlap = GroupAssignment({"A": [0, 1, 2, 3], "B": [2, 3, 4, 5]})
    c = FairnessConstraint("MR:A-B", "A", "B", MetricSpec("MR"), 0.1)
    w = derive_weights(0.5, c, dataset, overlap).w
    # rows 2 and 3 belong to both groups with equal MR coefficients
    assert w.tolist() == [2.0, 2.0, 1.0, 1.0, 0.0, 0.0, 1.0, 1.0]


def test_parameterized_metric_needs_model(eight_rows):
    dataset, model, assignment = eight_rows
    fdr = FairnessConstraint("FDR:A-B", "A", "B", MetricSpec("FDR"), 0.1)
    with pytest.raises(MissingModel):
        derive_weights(0.5, fdr, dataset, assignment)
    wv = derive_weights(0.5, fdr, dataset, assignment, model=model)
    # FDR coefficients: -1/m1 on y=1 rows; A has m1=1, B has m1=2
    assert wv.w.tolist() == [0.0, 0.0, 1.0, 1.0, 3.0, 1.0, 1.0, 1.0]
    assert wv.clamped == 2


def test_weight_vector_is_read_only(eight_rows):
    dataset, _, assignment = eight_rows
    w = derive_weights(0.1, sp_constraint(), dataset, assignment).w
    with pytest.raises(ValueError):
        w[0] = 5.0


def test_constraint_validation():
    with pytest.raises(ConfigError):
        FairnessConstraint("x", "A", "A", MetricSpec("SP"), 0.1)
    with pytest.raises(ConfigError):
        FairnessConstraint("x", "A", "B", MetricSpec("SP"), -0.1)
    with pytest.raises(ConfigError):
        LambdaVector({"x": float("inf")})
    c = sp_constraint()
    assert (c.swapped().g1, c.swapped().g2) == ("B", "A")
