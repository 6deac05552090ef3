import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from chemoflow.errors import ConfigValidationError, InvalidDimensions
from chemoflow.grid import (BC, Forcing, Grid, Params, ScalarField, SimState, VectorField, ghost_extend,
                            integrate, make_grid)


def test_spacing_and_shapes(grid):
    assert grid.hx == pytest.approx(0.125)
    assert grid.hy == pytest.approx(0.125)
    x, y = grid.cell_centers()
    assert x.shape == (8, 6)
    assert x[0, 0] == pytest.approx(0.0625) and y[0, 0] == pytest.approx(0.0625)
    assert grid.xface_centers()[0].shape == (9, 6)
    assert grid.yface_centers()[0].shape == (8, 7)


@pytest.mark.parametrize("nx,ny,lx,ly", [(3, 8, 1, 1), (8, 2, 1, 1), (8, 8, 0.0, 1), (8, 8, 1, -1)])
def test_invalid_dimensions(nx, ny, lx, ly):
    with pytest.raises(InvalidDimensions):
        make_grid(nx, ny, lx, ly)


def test_non_integer_counts_rejected():
    with pytest.raises(InvalidDimensions):
        make_grid(8.5, 8, 1.0, 1.0)


def test_ghost_cells_mirror_or_negate():
    a = np.arange(16.0).reshape(4, 4)
    neu = ghost_extend(a, BC.NEUMANN_ZERO)
    dir_ = ghost_extend(a, BC.DIRICHLET_ZERO)
    assert neu.shape == (6, 6)
    np.testing.assert_array_equal(neu[0, 1:-1], a[0])
    np.testing.assert_array_equal(neu[1:-1, -1], a[:, -1])
    np.testing.assert_array_equal(dir_[0, 1:-1], -a[0])
    np.testing.assert_array_equal(dir_[1:-1, 0], -a[:, 0])


def test_integrate_constant_is_value_times_area(grid):
    f = ScalarField.constant(grid, 2.5)
    assert integrate(f) == pytest.approx(2.5 * 0.75)


def test_integrate_linear_exact_by_midpoint_rule():
    g = make_grid(10, 10, 2.0, 1.0)
    f = ScalarField.from_function(g, lambda x, y: 3 * x + y)
    # int_0^2 int_0^1 (3x + y) = 3*2 + 0.5*2 = 7
    assert integrate(f) == pytest.approx(7.0, rel=1e-14)


def test_vector_field_zeroes_wall_normals(grid):
    ux = np.ones((9, 6))
    uy = np.ones((8, 7))
    u = VectorField(grid, ux, uy)
    assert np.all(u.ux[0] == 0) and np.all(u.ux[-1] == 0)
    assert np.all(u.uy[:, 0] == 0) and np.all(u.uy[:, -1] == 0)
    assert u.max_abs() == 1.0


def test_field_shape_checked(grid):
    with pytest.raises(InvalidDimensions):
        ScalarField(grid, np.zeros((6, 8)))


@pytest.mark.parametrize("name,value", [("k", 1.0), ("k", 0.0), ("eta", 1.5), ("mu", 0.0), ("chi", -1.0)])
def test_params_strict_rejects(name, value):
    kw = dict(r=1, mu=1, alpha=1, beta=1, chi=1, k=0.5, eta=0.5)
    kw[name] = value
    with pytest.raises(ConfigValidationError):
        Params(**kw)


def test_params_relaxed_allows_boundary_values():
    p = Params(k=1.5, chi=0.0, strict=False)
    assert not p.in_hypothesis
    assert Params().in_hypothesis


def test_forcing_faces_shape_and_norm(grid):
    phi = ScalarField.constant(grid, 0.0)
    f = Forcing(phi, lambda x, y, t: (0 * x + math.sin(t), 0 * y))
    fx, fy = f.faces(math.pi / 2)
    assert fx.shape == (9, 6) and fy.shape == (8, 7)
    assert np.allclose(fx, 1.0)
    assert f.sup_norm(math.pi, samples=3) == pytest.approx(1.0)


def test_simstate_equality_is_exact(grid):
    s = SimState(0.5, ScalarField.constant(grid, 1.0), ScalarField.constant(grid, 2.0), VectorField.zeros(grid))
    t = s.copy()
    assert s == t
    t.n.data[0, 0] = np.nextafter(1.0, 2.0)
    assert s != t


@settings(max_examples=30, deadline=None)
@given(st.integers(4, 20), st.integers(4, 20), st.floats(0.1, 10), st.floats(0.1, 10))
def test_cell_areas_tile_domain(nx, ny, lx, ly):
    g = Grid(nx, ny, lx, ly)
    assert g.cell_area * nx * ny == pytest.approx(lx * ly, rel=1e-12)
