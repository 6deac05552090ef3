from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from chemoflow import operators as ops
from chemoflow.errors import DivergenceTooLarge
from chemoflow.grid import BC, ScalarField, VectorField, make_grid

finite = st.floats(-10, 10, allow_nan=False)


def random_velocity(g, rng):
    return VectorField(g, rng.normal(size=(g.nx + 1, g.ny)), rng.normal(size=(g.nx, g.ny + 1)))


def divergence_free_velocity(g, rng):
    """Face velocities from a random nodal stream function vanishing on the walls."""
    psi = np.zeros((g.nx + 1, g.ny + 1))
    psi[1:-1, 1:-1] = rng.normal(size=(g.nx - 1, g.ny - 1))
    return VectorField(g, (psi[:, 1:] - psi[:, :-1]) / g.hy, -(psi[1:] - psi[:-1]) / g.hx)


def test_laplacian_of_quadratic_is_two_in_interior():
    g = make_grid(8, 8, 1.0, 1.0)
    f = ScalarField.from_function(g, lambda x, y: x**2)
    lap = ops.laplacian(f).data
    np.testing.assert_allclose(lap[1:-1, :], 2.0, rtol=1e-11)


def test_neumann_laplacian_wall_row_by_hand():
    # one-dimensional profile along x on a 4x4 grid with h = 1/4
    g = make_grid(4, 4, 1.0, 1.0)
    a = np.repeat(np.array([1.0, 2.0, 4.0, 8.0])[:, None], 4, axis=1)
    lap = ops.laplacian(ScalarField(g, a)).data[:, 0]
    # mirror ghosts: (2-1)*16, (1-4+4)*16, (2-8+8)*16, (4-8)*16
    np.testing.assert_allclose(lap, [16.0, 16.0, 32.0, -64.0])


def test_dirichlet_laplacian_wall_value_by_hand():
    g = make_grid(4, 4, 1.0, 1.0)
    lap = ops.laplacian(ScalarField.constant(g, 1.0, BC.DIRICHLET_ZERO)).data
    # corner cell sees two negated ghosts: (-2 + -2) * 16 = -64; edge cell sees one: -32
    assert lap[0, 0] == pytest.approx(-64.0)
    assert lap[0, 1] == pytest.approx(-32.0)
    assert lap[1, 1] == pytest.approx(0.0)


@settings(max_examples=40, deadline=None)
@given(arrays(float, (6, 5), elements=finite))
def test_neumann_laplacian_conserves_mass(a):
    g = make_grid(6, 5, 1.0, 1.0)
    assert abs(np.sum(ops.laplacian(ScalarField(g, a)).data)) <= 1e-9 * (1 + np.sum(np.abs(a))) * 36


@settings(max_examples=40, deadline=None)
@given(arrays(float, (7, 5), elements=finite))
def test_div_grad_equals_neumann_laplacian(p):
    g = make_grid(7, 5, 1.4, 1.0)
    dg = ops.mac_divergence(ops.grad_to_faces(ScalarField(g, p))).data
    np.testing.assert_allclose(dg, ops.laplacian(ScalarField(g, p)).data, atol=1e-9)


def test_divergence_of_uniform_interior_flow_by_hand():
    g = make_grid(4, 4, 1.0, 1.0)
    ux = np.ones((5, 4))
    u = VectorField(g, ux, np.zeros((4, 5)))  # walls zeroed on construction
    div = ops.mac_divergence(u).data
    np.testing.assert_allclose(div[0], 4.0)
    np.testing.assert_allclose(div[-1], -4.0)
    np.testing.assert_allclose(div[1:-1], 0.0)


def test_stream_function_velocity_is_discretely_divergence_free(rng):
    g = make_grid(10, 7, 1.0, 0.7)
    assert ops.max_divergence(divergence_free_velocity(g, rng)) < 1e-11


def test_upwind_advection_conserves_mass(rng):
    g = make_grid(9, 8, 1.0, 1.0)
    u = divergence_free_velocity(g, rng)
    a = ScalarField(g, rng.uniform(0.5, 2.0, size=(9, 8)))
    assert abs(np.sum(ops.advect_scalar(a, u).data)) < 1e-10


def test_upwind_advection_of_constant_vanishes_for_solenoidal_flow(rng):
    g = make_grid(9, 8, 1.0, 1.0)
    u = divergence_free_velocity(g, rng)
    np.testing.assert_allclose(ops.advect_scalar(ScalarField.constant(g, 3.0), u).data, 0.0, atol=1e-10)


def test_advect_scalar_rejects_divergent_flow(rng):
    g = make_grid(6, 6, 1.0, 1.0)
    u = random_velocity(g, rng)
    with pytest.raises(DivergenceTooLarge):
        ops.advect_scalar(ScalarField.constant(g, 1.0), u)
    ops.advect_scalar(ScalarField.constant(g, 1.0), u, proj_tol=None)


def test_upwind_picks_donor_cell():
    a = np.arange(16.0).reshape(4, 4)
    vx = np.zeros((5, 4))
    vx[2] = [1.0, -1.0, 1.0, -1.0]
    fx, _ = ops.upwind_flux_array(a, vx, np.zeros((4, 5)))
    np.testing.assert_array_equal(fx[2], [a[1, 0], -a[2, 1], a[1, 2], -a[2, 3]])


def test_upwind_explicit_update_keeps_sign_under_cfl(rng):
    g = make_grid(8, 8, 1.0, 1.0)
    u = divergence_free_velocity(g, rng)
    a = rng.uniform(0.0, 1.0, size=(8, 8))
    dt = 1.0 / np.max(ops.outflow_rate_array(u.ux, u.uy, g.hx, g.hy))
    assert np.min(a + dt * ops.advect_scalar_array(a, u.ux, u.uy, g.hx, g.hy)) >= -1e-14


def test_chemotaxis_flux_by_hand(params):
    g = make_grid(4, 4, 1.0, 1.0)
    c = np.repeat(np.array([1.0, 4.0, 4.0, 4.0])[:, None], 4, axis=1)
    vx, vy, clamped = ops.chemotactic_velocity_array(c, params, g.hx, g.hy)
    # face between c = 1 and c = 4: chi * (3 / 0.25) / sqrt(2.5)
    np.testing.assert_allclose(vx[1], 12.0 / np.sqrt(2.5))
    np.testing.assert_allclose(vx[2:], 0.0)
    np.testing.assert_allclose(vy, 0.0)
    assert clamped == 0


def test_chemotaxis_conserves_mass_and_counts_clamps(params, rng):
    g = make_grid(6, 6, 1.0, 1.0)
    n = ScalarField(g, rng.uniform(0.1, 2.0, size=(6, 6)))
    c = ScalarField(g, rng.uniform(0.5, 1.5, size=(6, 6)))
    counter = Counter()
    assert abs(np.sum(ops.chemotaxis_div(n, c, params, counter).data)) < 1e-10
    assert counter[ops.CLAMP_KEY] == 0
    c.data[2:4, 2:4] = 0.0
    ops.chemotaxis_div(n, c, params, counter)
    # the four zero cells share 4 interior faces with each other
    assert counter[ops.CLAMP_KEY] == 4


def test_no_slip_face_laplacian_by_hand():
    g = make_grid(4, 4, 1.0, 1.0)
    ux = np.zeros((5, 4))
    ux[1:-1] = 1.0
    lap = ops.laplacian_ux_array(ux, g.hx, g.hy)
    # face next to the x-walls sees a zero wall node: (0 - 2 + 1) * 16 = -16;
    # face next to the y-walls sees a negated ghost: (-1 - 2 + 1) * 16 = -32
    assert lap[1, 1] == pytest.approx(-16.0)
    assert lap[2, 1] == pytest.approx(0.0)
    assert lap[2, 0] == pytest.approx(-32.0)
    assert lap[1, 0] == pytest.approx(-48.0)
    np.testing.assert_array_equal(lap[0], 0.0)


def test_velocity_energy_matches_minus_inner_product_with_laplacian(rng):
    g = make_grid(7, 6, 1.0, 0.8)
    u = random_velocity(g, rng)
    lx = ops.laplacian_ux_array(u.ux, g.hx, g.hy)
    ly = ops.laplacian_uy_array(u.uy, g.hx, g.hy)
    inner = -g.cell_area * (np.sum(u.ux * lx) + np.sum(u.uy * ly))
    assert ops.velocity_dirichlet_energy(u.ux, u.uy, g.hx, g.hy) == pytest.approx(inner, rel=1e-12)


def test_momentum_advection_of_rest_is_zero():
    g = make_grid(6, 6, 1.0, 1.0)
    tx, ty = ops.advect_velocity_array(np.zeros((7, 6)), np.zeros((6, 7)), g.hx, g.hy)
    assert not tx.any() and not ty.any()
