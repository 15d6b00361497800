"""
Single-lambda tuner.
Fast tests run on the session planted-SP fixture; the acceptance runs are
marked slow and use larger data so split noise stays below the tolerances.
"""

import logging
import time

import numpy as np
import pytest

from conftest import FixedModel, ScriptedLearner, WeightBlindLearner, sp_model
from fairweigh.data import DataSplit, Dataset, SplitSpec, split
from fairweigh.errors import ConfigError, EmptyDenominator, EmptyIndexSet, InfeasibleWithinCap, MissingModel
from fairweigh.grouping import GroupAssignment, GroupingSpec, assign_groups
from fairweigh.metrics import MetricSpec, accuracy, evaluate, fairness_gap
from fairweigh.metrics_collector import ProbeCollector
from fairweigh.multitune import hill_climb
from fairweigh.synthetic import SyntheticSpec, generate
from fairweigh.tuning import TunerConfig, exponential_search, linear_search, tune_single
from fairweigh.weighting import FairnessConstraint, LambdaVector, derive_weights, derive_weights_multi
from learners.logreg import Learner as LogRegLearner
from learners.threshold import Learner as ThresholdLearner, ThresholdConfig
from learners.threshold.threshold import candidate_thresholds

_LOG = logging.getLogger("fairweigh.tests.tuning")


def sp(g1="A", g2="B", eps=0.03):
    return FairnessConstraint(f"SP:{g1}-{g2}", g1, g2, MetricSpec("SP"), eps)


def test_loose_constraint_needs_no_reweighting(planted_sp, logreg_learner):
    """Test 1: epsilon = 1 holds at lambda = 0 after a single fit."""
    dataset, parts, assignment = planted_sp
    result = tune_single(dataset, parts, sp(eps=1.0), logreg_learner, assignment=assignment)
    assert result.lam == 0.0
    assert result.satisfied
    assert result.fits == 1
    assert len(result.probes) == 1
    assert result.note == "satisfied without reweighting"


def test_sp_tuning_swaps_and_satisfies(planted_sp, logreg_learner):
    """Test 2: A has the higher positive rate, so A-B is swapped and lambda comes back negative."""
    dataset, parts, assignment = planted_sp
    collector = ProbeCollector()
    result = tune_single(dataset, parts, sp(), logreg_learner, assignment=assignment, collector=collector)
    _LOG.info("lambda=%g AP=%.4f FP=%+.4f fits=%d", result.lam, result.validation_ap,
              result.validation_fp, result.fits)

    assert result.satisfied
    assert result.swapped
    assert result.lam < 0
    assert abs(result.validation_fp) <= 0.03
    assert result.fits == len(result.probes) == collector.fits
    assert result.probes[0].lam == 0.0 and result.probes[0].fp > 0.03
    # reported FP is in the declared order and matches a fresh evaluation
    fp = fairness_gap(sp(), dataset, result.model, assignment, subset=parts.validation)
    assert fp == pytest.approx(result.validation_fp)
    assert accuracy(dataset, parts.validation, result.model) == pytest.approx(result.validation_ap)


def test_declared_order_only_flips_the_sign(planted_sp):
    dataset, parts, assignment = planted_sp
    forward = tune_single(dataset, parts, sp("A", "B"), LogRegLearner(), assignment=assignment)
    backward = tune_single(dataset, parts, sp("B", "A"), LogRegLearner(), assignment=assignment)
    assert not backward.swapped
    assert backward.lam == pytest.approx(-forward.lam)
    assert backward.validation_fp == pytest.approx(-forward.validation_fp)


def test_bisection_bracket_width(planted_sp, logreg_learner):
    """Probes after the bracket halve it down to tau."""
    dataset, parts, assignment = planted_sp
    config = TunerConfig(tau=1e-2, delta=2e-2)
    result = tune_single(dataset, parts, sp("B", "A"), logreg_learner, config, assignment=assignment)
    lams = [p.lam for p in result.probes]
    doubling = [lam for lam in lams[1:] if lam >= 1.0 and np.log2(lam) == int(np.log2(lam))]
    assert doubling == [2.0 ** k for k in range(len(doubling))]
    bisections = len(lams) - 1 - len(doubling)
    upper = doubling[-1]
    width = upper / 2 if len(doubling) > 1 else upper
    assert bisections == int(np.ceil(np.log2(width / config.tau)))


def test_exponential_search_brackets(planted_sp, logreg_learner):
    dataset, parts, assignment = planted_sp
    c = sp("B", "A")
    lo, hi = exponential_search(c, logreg_learner, dataset, parts, assignment=assignment)
    assert hi >= 1.0 and np.log2(hi) == int(np.log2(hi))
    assert lo == (0.0 if hi == 1.0 else hi / 2)


def test_linear_search_brackets(planted_sp, logreg_learner):
    dataset, parts, assignment = planted_sp
    c = FairnessConstraint("theta", "B", "A", MetricSpec("custom", custom_coefficient_fn="sp_theta"), 0.03)
    config = TunerConfig(tau=1e-3, delta=0.05)
    base = logreg_learner.fit(dataset, parts.train)
    lo, hi = linear_search(c, logreg_learner, dataset, parts, config, assignment=assignment, base_model=base)
    assert hi == pytest.approx(lo + 0.05)
    assert hi / 0.05 == pytest.approx(round(hi / 0.05))


def test_parameterized_metric_takes_linear_steps(planted_sp, logreg_learner):
    """Test 3: a prediction-dependent metric brackets in steps of delta."""
    dataset, parts, assignment = planted_sp
    c = FairnessConstraint("theta", "A", "B", MetricSpec("custom", custom_coefficient_fn="sp_theta"), 0.03)
    config = TunerConfig(tau=1e-3, delta=0.01)
    result = tune_single(dataset, parts, c, logreg_learner, config, assignment=assignment)
    assert result.satisfied
    assert result.lam < 0
    steps = [abs(p.lam) for p in result.probes[1:4]]
    assert steps == pytest.approx([0.01, 0.02, 0.03])


def test_weight_blind_learner_is_infeasible(planted_sp, logreg_learner):
    """Test 4: when weights change nothing the doubling search runs into the cap."""
    dataset, parts, assignment = planted_sp
    config = TunerConfig(lambda_cap=8.0)
    blind = WeightBlindLearner(logreg_learner)
    with pytest.raises(InfeasibleWithinCap) as info:
        tune_single(dataset, parts, sp(), blind, config, assignment=assignment)
    assert info.value.cap == 8.0
    # lambda = 0, 1, 2, 4, 8
    assert blind.calls == 5

    result = tune_single(dataset, parts, sp(), WeightBlindLearner(logreg_learner), config,
                         assignment=assignment, raise_infeasible=False)
    assert not result.satisfied
    assert "cap" in result.note
    assert result.fits == 5
    assert abs(result.validation_fp) > 0.03


def test_group_missing_from_a_split(planted_sp, logreg_learner):
    dataset, parts, _ = planted_sp
    assignment = GroupAssignment({"A": np.concatenate([parts.train, parts.validation]), "B": parts.test})
    with pytest.raises(EmptyIndexSet):
        tune_single(dataset, parts, sp(), logreg_learner, assignment=assignment)


def test_tuner_config_validation():
    with pytest.raises(ConfigError):
        TunerConfig(tau=1e-2, delta=1e-3)
    with pytest.raises(ConfigError):
        TunerConfig(lambda_cap=1e-4)
    with pytest.raises(ConfigError):
        TunerConfig(tau=0.0)


def test_exact_learner_trade_off_is_monotone():
    """
    Test 5: with an exact weighted-accuracy maximizer, FP never decreases and
    AP never increases as lambda >= 0 grows.
    """
    rng = np.random.default_rng(31)
    learner = ThresholdLearner()
    lams = np.round(np.arange(0.0, 2.0001, 0.05), 10)
    for trial, n in enumerate([53, 59, 61, 67, 71, 73, 79, 83, 89, 97, 101] + [53, 59, 61, 67, 71, 73, 79, 83, 89]):
        x = rng.normal(size=n)
        groups = np.where(rng.random(n) < 0.5, "A", "B")
        groups[:2] = ["A", "B"]
        y = (x + rng.normal(scale=0.7, size=n) + 0.6 * (groups == "A") > 0.3).astype(int)
        dataset = Dataset(X=x.reshape(-1, 1), y=y, feature_names=("x",), raw={"group": tuple(groups)})
        assignment = assign_groups(dataset, GroupingSpec(attribute_names=("group",)))
        kind = ("MR", "SP", "FPR", "FNR")[trial % 4]
        c = FairnessConstraint("c", "B", "A", MetricSpec(kind), 0.0)
        everything = dataset.all_indices()
        aps, fps = [], []
        for lam in lams:
            try:
                w = derive_weights(float(lam), c, dataset, assignment, clamp=False).w
            except EmptyDenominator:
                break
            model = learner.fit(dataset, everything, w)
            aps.append(accuracy(dataset, everything, model))
            fps.append(fairness_gap(c, dataset, model, assignment))
        assert all(b >= a - 1e-12 for a, b in zip(fps, fps[1:])), (trial, kind, fps)
        assert all(b <= a + 1e-12 for a, b in zip(aps, aps[1:])), (trial, kind, aps)


@pytest.mark.slow
def test_sp_acceptance_with_logistic_regression():
    """
    Test 6: planted SP gap of 0.2, epsilon 0.03: validation satisfied, test gap
    within 0.06 and at most 5 points of test accuracy lost.
    """
    dataset = generate(SyntheticSpec(n=60000, gap=0.2, seed=1))
    parts = split(dataset, SplitSpec(seed=1))
    assignment = assign_groups(dataset, GroupingSpec(attribute_names=("group",)))
    learner = LogRegLearner()
    c = sp()
    t0 = time.perf_counter()
    baseline = learner.fit(dataset, parts.train)
    result = tune_single(dataset, parts, c, learner, assignment=assignment)
    before = evaluate(dataset, parts.test, baseline, [c], assignment)
    after = evaluate(dataset, parts.test, result.model, [c], assignment)
    _LOG.info("SP acceptance: lambda=%g test FP %+.4f -> %+.4f, AP %.4f -> %.4f (%.1fs)",
              result.lam, before.fp_per_constraint[c.id], after.fp_per_constraint[c.id],
              before.ap, after.ap, time.perf_counter() - t0)

    assert result.satisfied
    assert abs(before.fp_per_constraint[c.id]) > 0.1
    assert abs(after.fp_per_constraint[c.id]) <= 0.06
    assert before.ap - after.ap <= 0.05


@pytest.mark.slow
def test_fdr_acceptance_with_logistic_regression():
    """
    Test 7: a baseline FDR gap of at least 0.15 is brought within epsilon by the
    linear search (delta = 0.01).
    """
    dataset = generate(SyntheticSpec(n=20000, variant="fdr", shift=0.5, minority_share=0.3, seed=2))
    parts = split(dataset, SplitSpec(seed=2))
    assignment = assign_groups(dataset, GroupingSpec(attribute_names=("group",)))
    c = FairnessConstraint("FDR:A-B", "A", "B", MetricSpec("FDR"), 0.05)
    result = tune_single(dataset, parts, c, LogRegLearner(), TunerConfig(tau=1e-3, delta=0.01),
                         assignment=assignment)
    after = evaluate(dataset, parts.test, result.model, [c], assignment)
    _LOG.info("FDR acceptance: lambda=%g val FP %+.4f test FP %+.4f",
              result.lam, result.validation_fp, after.fp_per_constraint[c.id])

    assert result.probes[0].lam == 0.0
    assert abs(result.probes[0].fp) >= 0.15
    assert result.satisfied
    assert abs(after.fp_per_constraint[c.id]) <= 0.1


def test_doubling_bracket_from_scripted_gaps(twenty_rows):
    """Test 8: FP first reaches -epsilon between lambda 1 and 2."""
    dataset, parts, assignment = twenty_rows
    learner = ScriptedLearner([sp_model(2, 5), sp_model(5, 5)])
    lo, hi = exponential_search(sp(eps=0.05), learner, dataset, parts, assignment=assignment)
    assert (lo, hi) == (1.0, 2.0)
    assert learner.calls == 2


def test_doubling_bracket_satisfied_at_one(twenty_rows):
    dataset, parts, assignment = twenty_rows
    learner = ScriptedLearner([sp_model(5, 5)])
    assert exponential_search(sp(eps=0.05), learner, dataset, parts, assignment=assignment) == (0.0, 1.0)
    assert learner.calls == 1


def test_doubling_stops_at_cap(twenty_rows):
    dataset, parts, assignment = twenty_rows
    learner = ScriptedLearner([sp_model(2, 5)])
    with pytest.raises(InfeasibleWithinCap):
        exponential_search(sp(eps=0.05), learner, dataset, parts, TunerConfig(lambda_cap=4.0),
                           assignment=assignment)
    assert learner.calls == 3


def test_linear_bracket_from_scripted_gaps(twenty_rows):
    """Test 9: FDR holds first at the third step of 0.001; each step weights by the previous model."""
    dataset, parts, assignment = twenty_rows
    c = FairnessConstraint("FDR:A-B", "A", "B", MetricSpec("FDR"), 0.05)
    base = sp_model(4, 6)
    scripted = [sp_model(4, 6), sp_model(4, 5), sp_model(6, 6)]
    learner = ScriptedLearner(scripted)
    config = TunerConfig(delta=0.001, tau=1e-4)
    lo, hi = linear_search(c, learner, dataset, parts, config, assignment=assignment, base_model=base)
    assert lo == pytest.approx(0.002)
    assert hi == pytest.approx(0.003)
    assert learner.calls == 3
    previous = [base] + scripted[:2]
    for k, w in enumerate(learner.weights):
        expected = derive_weights((k + 1) * 0.001, c, dataset, assignment, model=previous[k],
                                  subset=parts.train, clamp=False)
        np.testing.assert_allclose(w, expected.w)


def test_linear_bracket_satisfied_at_first_step(twenty_rows):
    dataset, parts, assignment = twenty_rows
    c = FairnessConstraint("theta", "A", "B", MetricSpec("custom", custom_coefficient_fn="sp_theta"), 0.05)
    learner = ScriptedLearner([sp_model(5, 5)])
    config = TunerConfig(delta=0.001, tau=1e-4)
    lo, hi = linear_search(c, learner, dataset, parts, config, assignment=assignment, base_model=sp_model(2, 5))
    assert lo == 0.0
    assert hi == pytest.approx(0.001)


def test_threshold_tuning_close_to_best_fair_rule():
    """Test 10: on exact data the tuned rule is near the most accurate rule meeting the constraint."""
    dataset = generate(SyntheticSpec(n=2000, gap=0.1, seed=11))
    everything = dataset.all_indices()
    parts = DataSplit(train=everything, validation=everything, test=everything)
    assignment = assign_groups(dataset, GroupingSpec(attribute_names=("group",)))
    c = sp(eps=0.05)
    config = TunerConfig(tau=1e-4)
    learner = ThresholdLearner(ThresholdConfig(feature=0, both_directions=False))
    result = tune_single(dataset, parts, c, learner, config, assignment=assignment)
    assert result.satisfied

    a_rows = assignment["A"]
    b_rows = assignment["B"]
    x = dataset.X[:, 0]
    best = -1.0
    for t in candidate_thresholds(x, 200):
        pred = (x >= t).astype(np.int64)
        gap = pred[a_rows].mean() - pred[b_rows].mean()
        if abs(gap) <= c.epsilon:
            best = max(best, float((pred == dataset.y).mean()))
    _LOG.info("Tuned AP %.4f, best fair rule %.4f", result.validation_ap, best)
    assert result.validation_ap <= best + 1e-12
    assert result.validation_ap >= best - 0.02

    # every probe left of the result by more than tau violated the constraint
    for p in result.probes:
        if abs(p.lam) < abs(result.lam) - config.tau:
            assert abs(p.fp) > c.epsilon


@pytest.mark.slow
def test_warm_start_speeds_up_sweep():
    """Test 11: a warm-started sweep runs in at most 0.8 of the cold wall time."""
    dataset = generate(SyntheticSpec(n=2000, gap=0.2, seed=7))
    parts = split(dataset, SplitSpec(seed=7))
    assignment = assign_groups(dataset, GroupingSpec(attribute_names=("group",)))
    learner = LogRegLearner()

    def sweep(warm: bool) -> float:
        t0 = time.perf_counter()
        for eps in (0.1, 0.05, 0.03, 0.02):
            tune_single(dataset, parts, sp(eps=eps), learner, TunerConfig(warm_start=warm),
                        assignment=assignment, raise_infeasible=False)
        return time.perf_counter() - t0

    cold = sweep(False)
    warm = sweep(True)
    _LOG.info("Sweep wall time: cold %.2fs, warm %.2fs", cold, warm)
    assert warm <= 0.8 * cold


def fdr(g1="A", g2="B", eps=0.05):
    return FairnessConstraint(f"FDR:{g1}-{g2}", g1, g2, MetricSpec("FDR"), eps)


def test_zero_fit_weights_frozen_fdr_with_base_model(twenty_rows):
    """Test 12: a frozen nonzero FDR lambda is weighted by the base model's predictions at lambda = 0."""
    dataset, parts, assignment = twenty_rows
    sp_c, fdr_c = sp(eps=0.05), fdr()
    frozen = LambdaVector({fdr_c.id: 0.01, sp_c.id: 0.0})
    base = sp_model(4, 6)

    with pytest.raises(MissingModel):
        tune_single(dataset, parts, sp_c, ScriptedLearner([sp_model(5, 5)]), assignment=assignment,
                    frozen=frozen, frozen_constraints=[sp_c, fdr_c])

    learner = ScriptedLearner([sp_model(5, 5)])
    result = tune_single(dataset, parts, sp_c, learner, assignment=assignment,
                         frozen=frozen, frozen_constraints=[sp_c, fdr_c], base_model=base)
    assert result.satisfied and result.lam == 0.0
    expected = derive_weights_multi(frozen, [sp_c, fdr_c], dataset, assignment, model=base,
                                    subset=parts.train, clamp=False)
    np.testing.assert_allclose(learner.weights[0], expected.w)


def test_linear_search_gives_up_when_predictions_stall(twenty_rows):
    """Test 13: five steps without a single changed prediction end the search."""
    dataset, parts, assignment = twenty_rows
    learner = ScriptedLearner([sp_model(4, 6)])
    config = TunerConfig(delta=0.001, tau=1e-4, stall_steps=5)
    with pytest.raises(InfeasibleWithinCap, match="unchanged for 5 linear steps"):
        linear_search(fdr(), learner, dataset, parts, config, assignment=assignment,
                      base_model=sp_model(4, 5))
    # the first step changes predictions, the next five do not
    assert learner.calls == 6


def test_linear_search_step_budget(twenty_rows):
    dataset, parts, assignment = twenty_rows
    learner = ScriptedLearner([sp_model(4, 5), sp_model(4, 6)] * 10)
    config = TunerConfig(delta=0.001, tau=1e-4, max_linear_steps=8)
    with pytest.raises(InfeasibleWithinCap, match="8 linear steps spent"):
        linear_search(fdr(), learner, dataset, parts, config, assignment=assignment,
                      base_model=sp_model(4, 6))
    assert learner.calls == 8


def test_stalled_search_reports_unsatisfied(twenty_rows):
    dataset, parts, assignment = twenty_rows
    learner = ScriptedLearner([sp_model(4, 6)])
    result = tune_single(dataset, parts, fdr(), learner, TunerConfig(delta=0.001, tau=1e-4, stall_steps=3),
                         assignment=assignment, raise_infeasible=False)
    assert not result.satisfied
    assert "unchanged" in result.note
    assert learner.calls == 4


def test_linear_budget_validation():
    with pytest.raises(ConfigError):
        TunerConfig(stall_steps=0)
    with pytest.raises(ConfigError):
        TunerConfig(max_linear_steps=2.5)


def rows_model(*rows) -> FixedModel:
    pred = np.zeros(20, dtype=np.int64)
    pred[list(rows)] = 1
    return FixedModel(pred)


def test_hill_climb_revisit_with_frozen_fdr(twenty_rows):
    """
    Test 14: SP, then FDR, then SP again. The third search fits at lambda_SP = 0
    while lambda_FDR is frozen away from zero, so its weights need the current model.
    """
    dataset, parts, assignment = twenty_rows
    sp_c, fdr_c = sp(eps=0.05), fdr()
    start = sp_model(2, 6)                                  # SP -0.4, FDR -0.33
    sp_fixed = rows_model(4, 5, 6, 7, 8, 9, *range(10, 16))  # SP 0, FDR +0.67
    fdr_fixed = rows_model(0, 1, 2, 3, 10, 11)              # SP +0.2, FDR 0
    both = rows_model(0, 1, 2, 3, 4, 10, 11, 12, 13, 14)    # SP 0, FDR 0
    learner = ScriptedLearner([start, sp_fixed, sp_fixed, fdr_fixed, fdr_fixed, both])
    config = TunerConfig(tau=0.6, delta=0.7)

    result = hill_climb(dataset, parts, [sp_c, fdr_c], learner, config, assignment=assignment)
    assert result.satisfied
    assert result.iterations == 3
    assert learner.calls == 6
    assert result.lambdas.get(fdr_c.id) == pytest.approx(-0.35)
    expected = derive_weights_multi(LambdaVector({sp_c.id: 0.0, fdr_c.id: -0.35}), [sp_c, fdr_c],
                                    dataset, assignment, model=fdr_fixed, subset=parts.train, clamp=False)
    np.testing.assert_allclose(learner.weights[5], expected.w)
