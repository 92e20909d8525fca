import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from orliczsup import (Coefficient, ConstantPower, DoublePhase,
                       ExponentSequence, Grid, InfinityIndicator,
                       SamplePlan, VariableExponent, check_a0, check_aInc,
                       check_anchor, evaluate, orlicz_preset)
from orliczsup.errors import HypothesisError
from orliczsup.phi import ConjugateExponent, constant_power_ladder


@pytest.fixture
def unit_grid():
    return Grid.interval(0.0, 1.0, 100)


@pytest.fixture
def plan(unit_grid):
    return SamplePlan(unit_grid.cell_centers())


# -- evaluate -----------------------------------------------------------------

def test_constant_power_value():
    assert evaluate(ConstantPower(2), 0.3, 3.0) == 9.0


def test_indicator_is_exact_zero_or_inf():
    ind = InfinityIndicator()
    assert evaluate(ind, 0.1, 0.99) == 0.0
    assert evaluate(ind, 0.1, 1.0) == 0.0
    assert evaluate(ind, 0.1, 1.01) == float("inf")


def test_double_phase_substitution():
    phi = DoublePhase(2, 3, Coefficient("affine", 0.0, 1.0))
    # t^2 + x * t^3 at x = 0.5, t = 2
    assert evaluate(phi, np.array([0.5]), 2.0) == pytest.approx(8.0, abs=1e-14)


@pytest.mark.parametrize("bad_t", [-1.0, float("nan"), float("inf")])
def test_evaluate_rejects_bad_t(bad_t):
    with pytest.raises(ValueError):
        evaluate(ConstantPower(2), 0.0, bad_t)


def test_indicator_vanishes_at_one_everywhere():
    ind = InfinityIndicator()
    x = np.linspace(0, 1, 17)
    assert np.all(ind(x, np.ones(17)) == 0.0)


# -- (aInc) checker ------------------------------------------------------------

def test_aInc_exact_power_passes(plan):
    assert check_aInc(ConstantPower(5), 5.0, 1.0, plan).passed


def test_aInc_overclaimed_rate_fails_with_witness(plan):
    report = check_aInc(ConstantPower(5), 6.0, 1.0, plan)
    assert not report.passed
    x, t, lam = report.witness
    assert lam < 1.0
    assert report.worst_violation > 0


def test_aInc_variable_exponent_at_lower_rate(unit_grid, plan):
    # oracle: exhaustive evaluation of the defining inequality on the lattice
    phi = VariableExponent(Coefficient("affine", 2.0, 1.0))
    assert check_aInc(phi, 2.0, 1.0, plan).passed

    xs = unit_grid.cell_centers()[::7]
    ts = np.logspace(-3, 3, 11)
    lams = 2.0 ** -np.arange(0, 12, dtype=float)
    p_of_x = 2.0 + xs[:, 0]
    for i, x in enumerate(xs):
        for t in ts:
            for lam in lams:
                lhs = (lam * t) ** p_of_x[i]
                rhs = lam**2 * t ** p_of_x[i]
                assert lhs <= rhs * (1 + 1e-12)


def test_aInc_passes_for_any_rate_on_indicator(plan):
    # the indicator satisfies (aInc)_p for every p: that is what makes the
    # sup norm reachable as a growth limit
    for p in (1.0, 4.0, 64.0, 4096.0):
        assert check_aInc(InfinityIndicator(), p, 1.0, plan).passed


def test_aInc_downward_closure(plan):
    # (aInc)_p implies (aInc)_p' for p' < p on the same samples
    phi = DoublePhase(3, 5, Coefficient("constant", 1.0))
    for rate in (3.0, 2.5, 2.0, 1.0):
        assert check_aInc(phi, rate, 1.0, plan).passed


def test_aInc_convexity_shortcut_is_exact(plan):
    # phi(x,.)^(1/p^-) convex => (aInc)_{p^-} holds with L = 1 exactly
    for phi, rate in [(ConstantPower(7), 7.0),
                      (VariableExponent(Coefficient("affine", 2.0, 2.0)), 2.0)]:
        report = check_aInc(phi, rate, 1.0, plan)
        assert report.passed
        assert report.worst_violation <= 0.0


def test_aInc_argument_validation(plan):
    with pytest.raises(ValueError):
        check_aInc(ConstantPower(2), 0.5, 1.0, plan)
    with pytest.raises(ValueError):
        check_aInc(ConstantPower(2), 2.0, 0.5, plan)
    with pytest.raises(ValueError):
        SamplePlan(np.array([]))


def test_two_power_max_needs_growing_constant(plan):
    # max(t^q, t^p) with q < p only satisfies (aInc)_p with L -> inf
    phi = orlicz_preset("two_power_max", p_low=2.0, p_high=4.0)
    assert not check_aInc(phi, 4.0, 1.0, plan).passed
    assert check_aInc(phi, 2.0, 1.0, plan).passed


# -- anchor and (A0) -----------------------------------------------------------

def test_anchor_constant_power(unit_grid):
    rep = check_anchor(ConstantPower(17), 1.0, unit_grid.cell_centers())
    assert rep.passed
    assert rep.phi_minus_1 == 1.0 == rep.phi_plus_1


def test_anchor_double_phase(unit_grid):
    phi = DoublePhase(2, 3, Coefficient("affine", 0.0, 1.0))
    rep = check_anchor(phi, 2.0, unit_grid.cell_centers())
    assert rep.passed
    assert rep.phi_minus_1 == pytest.approx(1.0, abs=1e-2)
    assert rep.phi_plus_1 == pytest.approx(2.0, abs=1e-2)


def test_anchor_degenerate_weight_fails_any_c():
    # phi(x, t) = x t^2 on (0,1): the lattice minimum of phi(x,1) tends to 0
    phi = ConstantPower(2, scale=Coefficient("affine", 0.0, 1.0))
    minima = []
    for m in (50, 200, 800):
        grid = Grid.interval(0.0, 1.0, m)
        rep = check_anchor(phi, 10.0, grid.cell_centers())
        assert not rep.passed
        minima.append(rep.phi_minus_1)
        assert rep.phi_minus_1 == pytest.approx(0.5 / m, rel=1e-12)
    assert minima[0] > minima[1] > minima[2]


def test_anchor_indicator_flagged_unsupported(unit_grid):
    rep = check_anchor(InfinityIndicator(), 5.0, unit_grid.cell_centers())
    assert not rep.passed
    assert not rep.supported
    assert rep.phi_plus_1 == 0.0  # phi_inf(x, 1) = 0


def test_a0_holds_while_anchor_fails(unit_grid):
    # scaled powers a_n t^p with a_n -> 0 keep the one-sided anchoring
    centers = unit_grid.cell_centers()
    for n in range(1, 6):
        phi = ConstantPower(2.0**n, scale=4.0**-n)
        assert check_a0(phi, centers).passed
        assert not check_anchor(phi, 2.0, centers).passed


def test_indicator_anchor_at_one_is_zero():
    assert evaluate(InfinityIndicator(), 0.5, 1.0) == 0.0


# -- monotone consistency property ----------------------------------------------

@settings(max_examples=60, deadline=None)
@given(x=st.floats(0.0, 1.0), t1=st.floats(0.0, 1e4), scale=st.floats(1e-3, 1e3))
def test_monotone_in_t(x, t1, scale):
    t2 = t1 * (1.0 + scale)
    pt = np.array([x])
    for phi in (ConstantPower(3), VariableExponent(Coefficient("affine", 2, 1)),
                DoublePhase(2, 4, Coefficient("sinusoidal", 1.0, 0.5)),
                InfinityIndicator()):
        v1 = evaluate(phi, pt, t1)
        v2 = evaluate(phi, pt, t2)
        assert v1 <= v2 or np.isinf(v1) and np.isinf(v2)


# -- exponent sequences ----------------------------------------------------------

def test_ladder_exponents_and_limit_validation(unit_grid):
    seq = constant_power_ladder(2, 2, 5, unit_grid.cell_centers())
    assert list(seq.p_minus) == [2, 4, 8, 16, 32]
    seq.validate_for_limit()


def test_non_increasing_ladder_refused(unit_grid):
    centers = unit_grid.cell_centers()
    seq = ExponentSequence([ConstantPower(4), ConstantPower(4)], centers)
    with pytest.raises(HypothesisError) as err:
        seq.validate_for_limit()
    assert err.value.hypothesis == "(5.3)"


def test_ratio_bound_enforced(unit_grid):
    centers = unit_grid.cell_centers()
    # p_n(x) = m_n (2 + sin(2 pi x)): ratio p+/p- = 3 on the lattice
    base = Coefficient("sinusoidal", 2.0, 1.0)
    entries = [VariableExponent(lambda x, m=m: m * base(x)) for m in (2, 4, 8)]
    seq = ExponentSequence(entries, centers, ratio_bound=2.0)
    with pytest.raises(HypothesisError) as err:
        seq.validate_for_limit()
    assert err.value.hypothesis == "(5.4)"
    seq_ok = ExponentSequence(entries, centers, ratio_bound=3.1)
    seq_ok.validate_for_limit()


def test_conjugate_exponent_convention():
    conj = ConjugateExponent(Coefficient("constant", 2.0))
    assert conj(np.array([[0.5]])) == pytest.approx(2.0)
    inf_p = ConjugateExponent(lambda x: np.full(np.shape(x)[0], np.inf))
    assert np.all(inf_p(np.zeros((3, 1))) == 1.0)


def test_nan_in_evaluation_is_hard_error():
    phi = VariableExponent(lambda x: np.full(np.shape(x)[:-1] or (), np.nan))
    with pytest.raises((FloatingPointError, ValueError)):
        phi(np.zeros((2, 1)), 2.0 * np.ones(2))
