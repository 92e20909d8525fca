import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from orliczsup import Grid, GridFunction, gradient, integrate, sup_cellwise
from orliczsup.domain import load_csv, load_json, save_csv, save_json


def test_grid_invariants():
    grid = Grid([(0.0, 2.0), (-1.0, 1.0)], (8, 5))
    assert grid.dim == 2
    assert grid.n_cells == 40
    assert grid.n_nodes == 9 * 6
    total = grid.n_cells * grid.cell_measure
    assert total == pytest.approx(grid.measure, rel=1e-12)


def test_grid_needs_two_cells_per_axis():
    with pytest.raises(ValueError):
        Grid.interval(0, 1, 1)


# -- gradients -------------------------------------------------------------------

def test_gradient_affine_1d_exact():
    # dyadic lattice: nodes, differences and the division are all exact floats
    grid = Grid.interval(0.0, 1.0, 16)
    u = GridFunction.from_callable(grid, lambda x: x[:, 0])
    g = gradient(u).values
    assert np.all(g == 1.0)


def test_gradient_affine_1d_nondyadic():
    grid = Grid.interval(0.0, 1.0, 13)
    u = GridFunction.from_callable(grid, lambda x: x[:, 0])
    g = gradient(u).values
    assert np.allclose(g, 1.0, rtol=0, atol=1e-12)


def test_gradient_affine_2d_exact():
    grid = Grid([(0, 1), (0, 1)], (8, 16))
    u = GridFunction.from_callable(grid, lambda x: 3 * x[:, 0] - 2 * x[:, 1])
    g = gradient(u).values
    assert np.all(g[:, 0, 0] == 3.0)
    assert np.all(g[:, 1, 0] == -2.0)


def test_gradient_quadratic_forward_differences():
    # u = x^2 on [0,1], m = 4: (u(x+h) - u(x))/h = 2x + h at the left nodes
    grid = Grid.interval(0.0, 1.0, 4)
    u = GridFunction.from_callable(grid, lambda x: x[:, 0] ** 2)
    g = gradient(u).values[:, 0, 0]
    assert g == pytest.approx([0.25, 0.75, 1.25, 1.75], abs=1e-14)


def test_gradient_linear_in_u():
    grid = Grid.interval(0.0, 1.0, 10)
    rng = np.random.default_rng(3)
    a = rng.standard_normal(grid.n_nodes)
    b = rng.standard_normal(grid.n_nodes)
    ga = gradient(GridFunction(grid, a)).values
    gb = gradient(GridFunction(grid, b)).values
    gab = gradient(GridFunction(grid, 2.0 * a - 3.0 * b)).values
    assert np.allclose(gab, 2.0 * ga - 3.0 * gb, rtol=1e-12, atol=1e-12)


# -- quadrature ------------------------------------------------------------------

def test_integrate_constant():
    grid = Grid.interval(0.0, 1.0, 10)
    assert integrate(grid, np.ones(10)) == pytest.approx(1.0, rel=1e-15)


def test_integrate_midpoint_exact_on_affine():
    grid = Grid.interval(0.0, 1.0, 10)
    x = grid.cell_centers()[:, 0]
    assert integrate(grid, x) == pytest.approx(0.5, abs=1e-15)


def test_integrate_quadratic_second_order():
    grid = Grid.interval(0.0, 1.0, 100)
    x = grid.cell_centers()[:, 0]
    assert integrate(grid, x**2) == pytest.approx(1.0 / 3.0, abs=1e-4)


def test_integrate_propagates_infinity():
    grid = Grid.interval(0.0, 1.0, 4)
    field = np.array([1.0, np.inf, 2.0, 3.0])
    assert integrate(grid, field) == np.inf


def test_integrate_rejects_nan():
    grid = Grid.interval(0.0, 1.0, 4)
    with pytest.raises(FloatingPointError):
        integrate(grid, np.array([1.0, np.nan, 2.0, 3.0]))


@settings(max_examples=40, deadline=None)
@given(alpha=st.floats(-5, 5), beta=st.floats(-5, 5), seed=st.integers(0, 999))
def test_integrate_linearity(alpha, beta, seed):
    grid = Grid.interval(0.0, 2.0, 32)
    rng = np.random.default_rng(seed)
    g1 = rng.uniform(-1, 1, 32)
    g2 = rng.uniform(-1, 1, 32)
    lhs = integrate(grid, alpha * g1 + beta * g2)
    rhs = alpha * integrate(grid, g1) + beta * integrate(grid, g2)
    assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-12)


def test_integral_below_sup_times_measure():
    grid = Grid.interval(0.0, 3.0, 50)
    rng = np.random.default_rng(7)
    g = rng.uniform(0, 5, 50)
    assert integrate(grid, g) <= sup_cellwise(grid, g) * grid.measure + 1e-12


# -- discrete essential sup -------------------------------------------------------

def test_sup_constant():
    grid = Grid.interval(0.0, 1.0, 5)
    assert sup_cellwise(grid, np.full(5, 2.0)) == 2.0


def test_sup_of_midpoint_samples():
    grid = Grid.interval(0.0, 1.0, 10)
    x = grid.cell_centers()[:, 0]
    assert sup_cellwise(grid, x) == pytest.approx(0.95, abs=1e-15)


def test_sup_with_infinite_cell():
    grid = Grid.interval(0.0, 1.0, 3)
    assert sup_cellwise(grid, np.array([1.0, np.inf, 0.0])) == np.inf


# -- import/export ----------------------------------------------------------------

def test_csv_round_trip(tmp_path):
    grid = Grid([(0, 1), (0, 2)], (4, 6))
    rng = np.random.default_rng(11)
    u = GridFunction(grid, rng.standard_normal((grid.n_nodes, 2)))
    path = tmp_path / "u.csv"
    save_csv(u, path)
    back = load_csv(path)
    assert back.grid == grid
    assert np.array_equal(back.values, u.values)


def test_json_round_trip(tmp_path):
    grid = Grid.interval(-1.0, 1.0, 9)
    u = GridFunction.from_callable(grid, lambda x: np.sin(x[:, 0]))
    path = tmp_path / "u.json"
    save_json(u, path)
    back = load_json(path)
    assert back.grid == grid
    assert np.array_equal(back.values, u.values)


def test_grid_function_rejects_nonfinite():
    grid = Grid.interval(0.0, 1.0, 4)
    with pytest.raises(ValueError):
        GridFunction(grid, np.array([0.0, 1.0, np.nan, 2.0, 3.0]))
