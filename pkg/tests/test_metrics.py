
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import expit

from conftest import noisy_cohort
from seqcpm.errors import ConstantLogit, DegenerateOutcome, DimensionMismatch
from seqcpm.metrics import (
    StabilityMatrix,
    UtilityConfig,
    c_statistic,
    calibration_slope,
    delta_stat,
    evpi,
    mean_ui_width,
    misclassification_prob,
    nb_all,
    nb_max,
    nb_model,
    ui_bounds,
    ui_width,
)
from seqcpm.model_core import fit_logistic, predict_risk


def brute_c(risks, y):
    pairs = [(risks[i], risks[j]) for i in range(len(y)) for j in range(len(y)) if y[i] == 1 and y[j] == 0]
    score = sum(1.0 if a > b else 0.5 if a == b else 0.0 for a, b in pairs)
    return score / len(pairs)


def test_c_statistic_perfect_and_flat():
    y = np.array([0, 0, 1, 1, 0, 1])
    assert c_statistic(np.array([0.1, 0.2, 0.8, 0.9, 0.3, 0.7]), y) == 1.0
    assert c_statistic(np.full(6, 0.4), y) == 0.5


def test_c_statistic_needs_both_classes():
    with pytest.raises(DegenerateOutcome):
        c_statistic(np.array([0.1, 0.2]), np.array([1, 1]))


@settings(max_examples=200, deadline=None)
@given(data=st.data())
def test_c_statistic_equals_all_pairs(data):
    n = data.draw(st.integers(2, 40))
    y = np.array(data.draw(st.lists(st.integers(0, 1), min_size=n, max_size=n)))
    if y.min() == y.max():
        y[0] = 1 - y[0]
    # coarse values force ties
    risks = np.array(data.draw(st.lists(st.sampled_from([0.05, 0.1, 0.2, 0.35, 0.5, 0.8]) | st.floats(0.01, 0.99),
                                        min_size=n, max_size=n)))
    assert c_statistic(risks, y) == brute_c(risks, y)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_c_statistic_symmetry_and_monotone_invariance(seed):
    rng = np.random.default_rng(seed)
    y = rng.integers(0, 2, 30)
    y[:2] = [0, 1]
    risks = rng.random(30)
    c = c_statistic(risks, y)
    assert c_statistic(1 - risks, 1 - y) == pytest.approx(c, abs=1e-15)
    assert c_statistic(np.log(risks) * 3 + 1, y) == pytest.approx(c, abs=1e-15)


def test_calibration_slope_of_own_fit_is_one():
    cohort = noisy_cohort(300, p=4, seed=5, beta=[0.5, -0.4, 0.3, 0.0])
    risks = predict_risk(fit_logistic(cohort), cohort.X)
    assert calibration_slope(risks, cohort.y) == pytest.approx(1.0, abs=1e-6)


def test_calibration_slope_recovers_known_underfit():
    rng = np.random.default_rng(2)
    lp = -1.5 + rng.standard_normal(100_000)
    y = (rng.random(100_000) < expit(lp)).astype(float)
    assert calibration_slope(expit(0.5 * lp), y) == pytest.approx(2.0, abs=0.05)


def test_calibration_slope_below_one_out_of_sample():
    beta = [0.3, 0.3, 0.2, 0.0, -0.2, 0.1]
    train = noisy_cohort(100, seed=21, beta=beta)
    test = noisy_cohort(100_000, seed=22, beta=beta)
    model = fit_logistic(train)
    assert calibration_slope(predict_risk(model, test.X), test.y) < 1


def test_calibration_slope_constant_logit():
    with pytest.raises(ConstantLogit):
        calibration_slope(np.full(10, 0.2), np.array([0, 1] * 5))


def test_ui_bounds_constant_column():
    m = StabilityMatrix(np.array([0.3]), np.full((200, 1), 0.3))
    lo, hi = ui_bounds(m)
    assert lo[0] == pytest.approx(0.3) and hi[0] == pytest.approx(0.3)
    assert mean_ui_width(m) == pytest.approx(0.0)


def test_ui_bounds_interpolation_rule():
    column = np.linspace(0.0, 1.0, 201)
    lo, hi = ui_bounds(StabilityMatrix(np.array([0.5]), column.reshape(-1, 1)))
    assert lo[0] == pytest.approx(0.025, abs=1e-12)
    assert hi[0] == pytest.approx(0.975, abs=1e-12)


def test_ui_bounds_interpolation_between_order_statistics():
    # position q*(B-1): 0.025*3 = 0.075 between the first two sorted values
    lo, hi = ui_bounds(StabilityMatrix(np.array([0.5]), np.array([[0.4], [0.1], [0.2], [0.3]])))
    assert lo[0] == pytest.approx(0.1 + 0.075 * 0.1)
    assert hi[0] == pytest.approx(0.3 + 0.925 * 0.1)


def test_ui_width_mean_of_two():
    boot = np.array([[0.1, 0.2], [0.3, 0.6]])
    # B=2: linear percentiles span 95% of each range
    widths = ui_width(StabilityMatrix(np.array([0.2, 0.4]), boot)).values
    np.testing.assert_allclose(widths, [0.19, 0.38])
    assert widths.mean() == pytest.approx(0.285)


def test_ui_width_zero_when_degenerate():
    orig = np.array([0.05, 0.2, 0.6])
    m = StabilityMatrix(orig, np.tile(orig, (50, 1)))
    assert mean_ui_width(m) == 0.0
    assert delta_stat(m).mean == 0.0
    assert misclassification_prob(m).mean == 0.0


def test_delta_definition():
    # column whose percentiles are exactly 0.2 and 0.5
    boot = np.concatenate([np.full(100, 0.2), np.full(101, 0.5)]).reshape(-1, 1)
    m = StabilityMatrix(np.array([0.3]), boot)
    lo, hi = ui_bounds(m)
    assert (lo[0], hi[0]) == (0.2, 0.5)
    assert delta_stat(m).values[0] == pytest.approx(0.2)


def test_misclassification_examples():
    boot = np.concatenate([np.full(30, 0.05), np.full(170, 0.2)]).reshape(-1, 1)
    assert misclassification_prob(StabilityMatrix(np.array([0.12]), boot)).values[0] == pytest.approx(0.15)
    same_side = StabilityMatrix(np.array([0.3]), np.full((20, 1), 0.5))
    assert misclassification_prob(same_side).values[0] == 0.0
    tie = StabilityMatrix(np.array([0.1]), np.full((20, 1), 0.1))
    assert misclassification_prob(tie, UtilityConfig(0.1)).values[0] == 0.0


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_stability_properties(seed):
    rng = np.random.default_rng(seed)
    orig = rng.uniform(0.01, 0.99, 15)
    boot = np.clip(orig + rng.normal(0, 0.1, (40, 15)), 0.001, 0.999)
    m = StabilityMatrix(orig, boot)
    w = ui_width(m)
    d = delta_stat(m)
    assert np.all((w.values >= 0) & (w.values <= 1))
    assert np.all(d.values >= w.values / 2 - 1e-15)
    mis = misclassification_prob(m).values
    assert np.all((mis >= 0) & (mis <= 1))
    assert w.p2_5 <= w.p97_5
    perm = rng.permutation(40)
    np.testing.assert_array_equal(ui_bounds(StabilityMatrix(orig, boot[perm]))[0], ui_bounds(m)[0])
    cols = rng.permutation(15)
    np.testing.assert_allclose(delta_stat(StabilityMatrix(orig[cols], boot[:, cols])).values, d.values[cols])


def test_net_benefit_single_individual():
    assert nb_all(np.array([0.3])) == pytest.approx(0.3 - 0.7 * 0.1 / 0.9)


def test_net_benefit_four_individual_hand_case():
    truths = [0.05, 0.15, 0.40, 0.08]
    decisions = [0.12, 0.09, 0.50, 0.02]
    z = 0.1
    w = z / (1 - z)
    gain = [t - (1 - t) * w for t in truths]
    expect_all = sum(gain) / 4
    expect_model = sum(g for g, d in zip(gain, decisions) if d >= z) / 4
    expect_max = sum(g for g, t in zip(gain, truths) if t >= z) / 4
    cfg = UtilityConfig(z)
    assert nb_all(truths, cfg) == pytest.approx(expect_all, abs=1e-12)
    assert nb_model(decisions, truths, cfg) == pytest.approx(expect_model, abs=1e-12)
    assert nb_max(truths, cfg) == pytest.approx(expect_max, abs=1e-12)
    expect_evpi = expect_max - max(0.0, expect_model, expect_all)
    assert evpi(nb_all(truths, cfg), nb_model(decisions, truths, cfg), nb_max(truths, cfg)) == pytest.approx(
        expect_evpi, abs=1e-12)


def test_net_benefit_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        nb_model([0.1, 0.2], [0.1])


def test_nb_model_equals_nb_max_when_decisions_are_truth():
    t = np.array([0.02, 0.11, 0.5, 0.09])
    assert nb_model(t, t) == nb_max(t)


def test_evpi_examples():
    assert evpi(0.01, 0.05, 0.05) == 0.0
    assert evpi(-0.2, 0.046, 0.05) == pytest.approx(0.004, abs=1e-15)
    assert evpi(0.0, 0.05, 0.05 - 1e-13) == 0.0
    with pytest.raises(ValueError):
        evpi(0.0, 0.05, 0.04)


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 10_000), z=st.floats(0.02, 0.6))
def test_nb_max_dominates(seed, z):
    rng = np.random.default_rng(seed)
    truth = rng.uniform(0.001, 0.999, 25)
    decision = rng.uniform(0.001, 0.999, 25)
    cfg = UtilityConfig(z)
    assert nb_max(truth, cfg) >= nb_model(decision, truth, cfg) - 1e-15
    assert nb_max(truth, cfg) >= nb_all(truth, cfg) - 1e-15
    assert evpi(nb_all(truth, cfg), nb_model(decision, truth, cfg), nb_max(truth, cfg)) >= 0
