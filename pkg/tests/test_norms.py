import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from orliczsup import (Coefficient, ConstantPower, DoublePhase, Grid,
                       InfinityIndicator, OrliczFunction, VariableExponent,
                       embedding_check, embedding_constant, holder_check,
                       luxemburg_norm, lp_norm, modular,
                       norm_convergence_experiment, sandwich_check,
                       sup_cellwise, unit_ball_check)
from orliczsup.errors import BracketError, HypothesisError
from orliczsup.phi import ExponentSequence, constant_power_ladder


@pytest.fixture
def grid():
    return Grid.interval(0.0, 1.0, 400)


@pytest.fixture
def coord(grid):
    return grid.cell_centers()[:, 0]


# -- modular ---------------------------------------------------------------------

def test_modular_square_of_constant(grid):
    g = np.full(grid.n_cells, 2.0)
    assert modular(ConstantPower(2), grid, g) == pytest.approx(4.0, rel=1e-12)


def test_modular_indicator_dichotomy(grid, coord):
    ind = InfinityIndicator()
    assert modular(ind, grid, 0.9 * coord / coord.max()) == 0.0
    assert modular(ind, grid, 1.1 * coord / coord.max()) == np.inf


def test_modular_variable_exponent_of_one(grid):
    phi = VariableExponent(Coefficient("affine", 2.0, 1.0))
    assert modular(phi, grid, np.ones(grid.n_cells)) == pytest.approx(1.0, rel=1e-12)


def test_modular_rejects_negative(grid):
    with pytest.raises(ValueError):
        modular(ConstantPower(2), grid, -np.ones(grid.n_cells))


# -- Luxemburg norm ----------------------------------------------------------------

@pytest.mark.parametrize("p", [1.0, 2.0, 7.0, 100.0])
def test_norm_of_constant_is_the_constant(grid, p):
    g = np.full(grid.n_cells, 2.5)
    nv = luxemburg_norm(ConstantPower(p), grid, g, tol=1e-10)
    assert nv.value == pytest.approx(2.5, abs=1e-9)
    assert nv.achieved_tol <= 1e-10


def test_norm_of_coordinate_closed_form(grid, coord):
    # rho(x / lam) = 1 gives lam = 3^{-1/2}; midpoint quadrature adds O(h^2)
    nv = luxemburg_norm(ConstantPower(2), grid, coord, tol=1e-8)
    assert nv.value == pytest.approx(3.0**-0.5, abs=1e-8 + 1.0 / 400**2)


def test_indicator_short_circuit_is_bitexact(grid):
    rng = np.random.default_rng(5)
    for _ in range(20):
        g = rng.uniform(0, 3, grid.n_cells)
        nv = luxemburg_norm(InfinityIndicator(), grid, g)
        assert nv.value == sup_cellwise(grid, g)
        assert nv.achieved_tol == 0.0


def test_zero_field_norm(grid):
    assert luxemburg_norm(ConstantPower(3), grid, np.zeros(grid.n_cells)).value == 0.0


def test_bracket_failure_carries_diagnostics(grid):
    # a bounded "phi" never pushes the modular above 1: no lower bracket
    bounded = OrliczFunction(lambda t: np.minimum(t, 0.5), aInc_rate=1.0)
    with pytest.raises(BracketError) as err:
        luxemburg_norm(bounded, grid, np.ones(grid.n_cells))
    assert err.value.rho_lo <= 1.0


def test_norm_tol_must_be_positive(grid, coord):
    with pytest.raises(ValueError):
        luxemburg_norm(ConstantPower(2), grid, coord, tol=0.0)


@settings(max_examples=25, deadline=None)
@given(s=st.floats(0.01, 100.0), seed=st.integers(0, 10**6))
def test_norm_homogeneity(s, seed):
    grid = Grid.interval(0.0, 1.0, 64)
    rng = np.random.default_rng(seed)
    g = rng.uniform(0, 1, 64)
    phi = ConstantPower(3)
    tol = 1e-9
    n1 = luxemburg_norm(phi, grid, s * g, tol=tol).value
    n2 = s * luxemburg_norm(phi, grid, g, tol=tol * min(1.0, 1.0 / s)).value
    assert abs(n1 - n2) <= 2 * tol * (1 + s)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10**6))
def test_norm_monotone_in_the_field(seed):
    grid = Grid.interval(0.0, 1.0, 64)
    rng = np.random.default_rng(seed)
    g1 = rng.uniform(0, 1, 64)
    g2 = g1 + rng.uniform(0, 1, 64)
    phi = DoublePhase(2, 3, Coefficient("sinusoidal", 1.0, 0.5))
    tol = 1e-9
    assert luxemburg_norm(phi, grid, g1, tol=tol).value <= \
        luxemburg_norm(phi, grid, g2, tol=tol).value + 2 * tol


def test_lp_ladder_monotone(grid, coord):
    # p -> ||g||_p is nondecreasing on a unit-measure domain (power means)
    norms = [luxemburg_norm(ConstantPower(p), grid, coord, tol=1e-10).value
             for p in (1, 2, 4, 8, 16, 32)]
    assert all(b >= a - 2e-10 for a, b in zip(norms, norms[1:]))


def test_lp_norm_log_space_matches_direct(grid, coord):
    direct = (np.sum(coord**3) * grid.cell_measure) ** (1.0 / 3.0)
    assert lp_norm(grid, coord, 3.0) == pytest.approx(direct, rel=1e-12)
    # huge exponent: the direct power would overflow, the log form is fine
    big = lp_norm(grid, 2.0 * np.ones(grid.n_cells), 4096.0)
    assert big == pytest.approx(2.0, rel=1e-10)


# -- unit ball property --------------------------------------------------------------

def test_unit_ball_small_norm(grid):
    g = np.full(grid.n_cells, 0.8)
    rep = unit_ball_check(ConstantPower(3), grid, g)
    assert rep.passed
    assert rep.modular_value == pytest.approx(0.8**3, rel=1e-12)


def test_unit_ball_indicator_boundary(grid, coord):
    g = coord / coord.max()  # sup exactly 1
    rep = unit_ball_check(InfinityIndicator(), grid, g)
    assert rep.passed
    assert rep.modular_value == 0.0
    assert rep.norm == 1.0


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10**6), scale=st.floats(0.1, 3.0))
def test_unit_ball_randomized(seed, scale):
    grid = Grid.interval(0.0, 1.0, 50)
    rng = np.random.default_rng(seed)
    g = rng.uniform(0, scale, 50)
    catalog = [ConstantPower(2 + 5 * rng.random()),
               VariableExponent(Coefficient("affine", 2.0, 1.0)),
               DoublePhase(2, 4, Coefficient("affine", 0.5, 0.5)),
               InfinityIndicator()]
    phi = catalog[seed % len(catalog)]
    assert unit_ball_check(phi, grid, g).passed


# -- embedding -----------------------------------------------------------------------

def test_embedding_constant_values():
    assert embedding_constant(100.0, 1.0, 1.0, 1.0) == pytest.approx(
        4.0**0.01, rel=1e-12)
    assert 4.0**0.01 == pytest.approx(1.01396, abs=5e-6)


def test_embedding_inequality_constant_power(grid, coord):
    for p in (2.0, 16.0, 128.0):
        rep = embedding_check(ConstantPower(p), grid, coord, p, L=1.0, c=1.0)
        assert rep.passed
        assert rep.constant == pytest.approx((2 * (1 + 1)) ** (1 / p), rel=1e-12)
        assert rep.lp_norm <= rep.constant * rep.phi_norm * (1 + 1e-9)


def test_embedding_zero_field(grid):
    rep = embedding_check(ConstantPower(4), grid, np.zeros(grid.n_cells),
                          4.0, L=1.0, c=1.0)
    assert rep.passed
    assert rep.lp_norm == 0.0 and rep.phi_norm == 0.0


def test_embedding_rejects_failed_anchor(grid, coord):
    bad = ConstantPower(2, scale=0.001)  # phi(x,1) far below 1/c
    with pytest.raises(HypothesisError) as err:
        embedding_check(bad, grid, coord, 2.0, L=1.0, c=2.0)
    assert err.value.hypothesis == "(H4)"


def test_embedding_rejects_overclaimed_rate(grid, coord):
    with pytest.raises(HypothesisError) as err:
        embedding_check(ConstantPower(2), grid, coord, 3.0, L=1.0, c=1.0)
    assert err.value.hypothesis == "(H3)"


# -- Hoelder ---------------------------------------------------------------------------

def test_holder_cauchy_schwarz(grid, coord):
    rep = holder_check(grid, coord, coord, Coefficient("constant", 2.0))
    assert rep.passed
    assert rep.constant == pytest.approx(1.0, rel=1e-12)


def test_holder_zero_function(grid, coord):
    rep = holder_check(grid, np.zeros(grid.n_cells), coord,
                       Coefficient("constant", 2.0))
    assert rep.passed
    assert rep.product_integral == 0.0


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10**6))
def test_holder_variable_exponent_randomized(seed):
    grid = Grid.interval(0.0, 1.0, 80)
    rng = np.random.default_rng(seed)
    f = rng.uniform(-2, 2, 80)
    g = rng.uniform(-2, 2, 80)
    rep = holder_check(grid, f, g, Coefficient("affine", 2.0, 1.0))
    assert rep.passed


# -- sandwich ----------------------------------------------------------------------------

def test_sandwich_constant_exponent_collapses(grid, coord):
    rep = sandwich_check(grid, coord, Coefficient("constant", 3.0))
    assert rep.passed
    assert rep.lower == pytest.approx(rep.upper, rel=1e-12)
    assert rep.norm == pytest.approx(rep.lower, abs=2e-9)


def test_sandwich_of_unit_field(grid):
    rep = sandwich_check(grid, np.ones(grid.n_cells),
                         Coefficient("affine", 2.0, 1.0))
    assert rep.passed
    assert rep.modular_value == pytest.approx(1.0, rel=1e-12)
    assert rep.lower == pytest.approx(1.0, rel=1e-12)
    assert rep.norm == pytest.approx(1.0, abs=2e-9)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10**6))
def test_sandwich_randomized(seed):
    grid = Grid.interval(0.0, 1.0, 60)
    rng = np.random.default_rng(seed)
    u = rng.uniform(0, 3, 60)
    rep = sandwich_check(grid, u, Coefficient("affine", 2.0, 2.0))
    assert rep.passed


def test_sandwich_needs_bounded_exponent(grid, coord):
    with pytest.raises(ValueError):
        sandwich_check(grid, coord, lambda x: np.full(np.shape(x)[0], np.inf))


# -- the norm-convergence experiment ---------------------------------------------------

def test_norm_convergence_of_constant_field():
    grid = Grid.interval(0.0, 1.0, 100)
    seq = constant_power_ladder(2, 2, 6, grid.cell_centers())
    g = np.full(grid.n_cells, 1.7)
    report = norm_convergence_experiment(grid, g, seq, L=1.0, c=1.0,
                                         tol=1e-10, final_gap_threshold=1e-8)
    assert report.all_passed
    assert all(gap <= 2e-9 for gap in report.column("gap"))


def test_norm_convergence_coordinate_closed_form():
    grid = Grid.interval(0.0, 1.0, 2000)
    seq = constant_power_ladder(2, 2, 12, grid.cell_centers())
    x = grid.cell_centers()[:, 0]
    report = norm_convergence_experiment(grid, x, seq, L=1.0, c=1.0,
                                         tol=1e-6, final_gap_threshold=3e-3)
    assert report.all_passed
    for (_, p, _, norm, sup, gap, const) in report.rows:
        analytic = (1.0 + p) ** (-1.0 / p)
        assert norm == pytest.approx(analytic, abs=1e-3)
        assert const == pytest.approx(4.0 ** (1.0 / p), rel=1e-12)
    assert report.column("gap")[-1] < 3e-3


def test_norm_convergence_double_phase_gap_shrinks():
    grid = Grid.interval(0.0, 1.0, 500)
    centers = grid.cell_centers()
    entries = [DoublePhase(2.0**n, 2.0 ** (n + 1), Coefficient("constant", 1.0))
               for n in range(1, 9)]
    seq = ExponentSequence(entries, centers)
    x = centers[:, 0]
    report = norm_convergence_experiment(grid, x, seq, L=1.0, c=2.0,
                                         tol=1e-8, final_gap_threshold=2e-2)
    assert report.all_passed
    gaps = report.column("gap")
    assert gaps[-1] < gaps[0]


def test_norm_convergence_threads_match_serial():
    grid = Grid.interval(0.0, 1.0, 200)
    seq = constant_power_ladder(2, 2, 6, grid.cell_centers())
    x = grid.cell_centers()[:, 0]
    serial = norm_convergence_experiment(grid, x, seq, L=1.0, c=1.0)
    threaded = norm_convergence_experiment(grid, x, seq, L=1.0, c=1.0, threads=4)
    assert serial.rows == threaded.rows


def test_norm_convergence_rejects_anchor_violation():
    grid = Grid.interval(0.0, 1.0, 50)
    centers = grid.cell_centers()
    entries = [ConstantPower(2.0**n, scale=4.0**-n) for n in range(1, 5)]
    seq = ExponentSequence(entries, centers)
    with pytest.raises(HypothesisError) as err:
        norm_convergence_experiment(grid, centers[:, 0], seq, L=1.0, c=2.0)
    assert err.value.hypothesis == "(H4)"
