"""Finite-volume operators on the MAC grid.

The ``*_array`` kernels work on raw numpy arrays and are what the stepper and
the solvers call in their inner loops; the field-level functions wrap them.
"""

from __future__ import annotations

import logging
from collections import Counter
from typing import Optional

import numpy as np

from .errors import DivergenceTooLarge
from .grid import Grid, Params, ScalarField, VectorField, ghost_extend

log = logging.getLogger(__name__)

CLAMP_KEY = "c_below_floor"


class StencilWorkspace:
    """Reusable ghost-padded buffers for one grid."""

    def __init__(self, grid: Grid):
        self.grid = grid
        self.cells = np.empty((grid.nx + 2, grid.ny + 2))
        self.ux = np.empty((grid.nx + 1, grid.ny + 2))
        self.uy = np.empty((grid.nx + 2, grid.ny + 1))


# ---------------------------------------------------------------------------
# Laplacians
# ---------------------------------------------------------------------------

def laplacian_array(a, bc, hx, hy, work: Optional[np.ndarray] = None):
    g = ghost_extend(a, bc, work)
    return ((g[2:, 1:-1] - 2.0 * a + g[:-2, 1:-1]) / hx**2
            + (g[1:-1, 2:] - 2.0 * a + g[1:-1, :-2]) / hy**2)


def laplacian_ux_array(ux, hx, hy, work: Optional[np.ndarray] = None):
    """No-slip Laplacian on x-face values; wall faces (i=0, nx) are zero and stay zero.

    Along x the wall faces are Dirichlet nodes; along y the wall sits half a cell
    past the last face, handled by a negated ghost.
    """
    nxp1, ny = ux.shape
    if work is None:
        work = np.empty((nxp1, ny + 2))
    work[:, 1:-1] = ux
    work[:, 0] = -ux[:, 0]
    work[:, -1] = -ux[:, -1]
    out = np.zeros_like(ux)
    c = ux[1:-1]
    out[1:-1] = ((ux[2:] - 2.0 * c + ux[:-2]) / hx**2
                 + (work[1:-1, 2:] - 2.0 * c + work[1:-1, :-2]) / hy**2)
    return out


def laplacian_uy_array(uy, hx, hy, work: Optional[np.ndarray] = None):
    nx, nyp1 = uy.shape
    if work is None:
        work = np.empty((nx + 2, nyp1))
    work[1:-1] = uy
    work[0] = -uy[0]
    work[-1] = -uy[-1]
    out = np.zeros_like(uy)
    c = uy[:, 1:-1]
    out[:, 1:-1] = ((work[2:, 1:-1] - 2.0 * c + work[:-2, 1:-1]) / hx**2
                    + (uy[:, 2:] - 2.0 * c + uy[:, :-2]) / hy**2)
    return out


def laplacian(field: ScalarField) -> ScalarField:
    g = field.grid
    return ScalarField(g, laplacian_array(field.data, field.bc, g.hx, g.hy), field.bc)


def vector_laplacian(u: VectorField) -> VectorField:
    g = u.grid
    return VectorField(g, laplacian_ux_array(u.ux, g.hx, g.hy), laplacian_uy_array(u.uy, g.hx, g.hy))


# ---------------------------------------------------------------------------
# Divergence / gradient pair
# ---------------------------------------------------------------------------

def divergence_array(fx, fy, hx, hy):
    return (fx[1:] - fx[:-1]) / hx + (fy[:, 1:] - fy[:, :-1]) / hy


def mac_divergence(u: VectorField) -> ScalarField:
    g = u.grid
    return ScalarField(g, divergence_array(u.ux, u.uy, g.hx, g.hy))


def face_gradient_array(p, hx, hy):
    """Face-normal differences of a cell field; wall faces are zero."""
    nx, ny = p.shape
    gx = np.zeros((nx + 1, ny))
    gy = np.zeros((nx, ny + 1))
    gx[1:-1] = (p[1:] - p[:-1]) / hx
    gy[:, 1:-1] = (p[:, 1:] - p[:, :-1]) / hy
    return gx, gy


def grad_to_faces(p: ScalarField) -> VectorField:
    g = p.grid
    gx, gy = face_gradient_array(p.data, g.hx, g.hy)
    return VectorField(g, gx, gy)


def max_divergence(u: VectorField) -> float:
    return float(np.max(np.abs(mac_divergence(u).data)))


# ---------------------------------------------------------------------------
# Upwind transport
# ---------------------------------------------------------------------------

def upwind_flux_array(a, vx, vy):
    """Face fluxes v * a_upwind for a cell field and face velocities (walls zero)."""
    fx = np.zeros_like(vx)
    fy = np.zeros_like(vy)
    wx = vx[1:-1]
    fx[1:-1] = np.where(wx > 0.0, wx * a[:-1], wx * a[1:])
    wy = vy[:, 1:-1]
    fy[:, 1:-1] = np.where(wy > 0.0, wy * a[:, :-1], wy * a[:, 1:])
    return fx, fy


def advect_scalar_array(a, ux, uy, hx, hy):
    fx, fy = upwind_flux_array(a, ux, uy)
    return -divergence_array(fx, fy, hx, hy)


def advect_scalar(field: ScalarField, u: VectorField, proj_tol: Optional[float] = 1e-9) -> ScalarField:
    """Conservative first-order upwind tendency -div(u a).

    Pass ``proj_tol=None`` to skip the incompressibility check.
    """
    g = field.grid
    if proj_tol is not None:
        md = max_divergence(u)
        if md > proj_tol:
            raise DivergenceTooLarge(md, proj_tol)
    return ScalarField(g, advect_scalar_array(field.data, u.ux, u.uy, g.hx, g.hy), field.bc)


def chemotactic_velocity_array(c, params: Params, hx, hy):
    """Face velocity chi * grad c / c_face^k and the number of clamped faces."""
    nx, ny = c.shape
    vx = np.zeros((nx + 1, ny))
    vy = np.zeros((nx, ny + 1))
    cfx = 0.5 * (c[1:] + c[:-1])
    cfy = 0.5 * (c[:, 1:] + c[:, :-1])
    clamped = int(np.count_nonzero(cfx < params.c_floor) + np.count_nonzero(cfy < params.c_floor))
    cfx = np.maximum(cfx, params.c_floor)
    cfy = np.maximum(cfy, params.c_floor)
    vx[1:-1] = params.chi * (c[1:] - c[:-1]) / hx / cfx**params.k
    vy[:, 1:-1] = params.chi * (c[:, 1:] - c[:, :-1]) / hy / cfy**params.k
    return vx, vy, clamped


def chemotaxis_div(n: ScalarField, c: ScalarField, params: Params,
                   counter: Optional[Counter] = None) -> ScalarField:
    """Upwind discretisation of -chi div(n grad c / c^k).

    Clamp activations (face-averaged c below ``params.c_floor``) are added to
    ``counter[CLAMP_KEY]`` when a counter is supplied.
    """
    g = n.grid
    vx, vy, clamped = chemotactic_velocity_array(c.data, params, g.hx, g.hy)
    if clamped:
        log.warning("c clamped at c_floor on %d faces", clamped)
        if counter is not None:
            counter[CLAMP_KEY] += clamped
    fx, fy = upwind_flux_array(n.data, vx, vy)
    return ScalarField(g, -divergence_array(fx, fy, g.hx, g.hy), n.bc)


def outflow_rate_array(vx, vy, hx, hy):
    """Per-cell sum of outgoing face speeds over the face spacing.

    An explicit upwind update stays non-negative when dt times this is at most 1.
    """
    return ((np.maximum(vx[1:], 0.0) - np.minimum(vx[:-1], 0.0)) / hx
            + (np.maximum(vy[:, 1:], 0.0) - np.minimum(vy[:, :-1], 0.0)) / hy)


# ---------------------------------------------------------------------------
# Momentum convection
# ---------------------------------------------------------------------------

def advect_velocity_array(ux, uy, hx, hy):
    nxp1, ny = ux.shape
    nx = nxp1 - 1
    tx = np.zeros_like(ux)
    ty = np.zeros_like(uy)

    # x-momentum on interior x-faces
    u = ux[1:-1]
    v = 0.25 * (uy[:-1, :-1] + uy[1:, :-1] + uy[:-1, 1:] + uy[1:, 1:])
    dxm = (ux[1:-1] - ux[:-2]) / hx
    dxp = (ux[2:] - ux[1:-1]) / hx
    gy = np.empty((nx - 1, ny + 2))
    gy[:, 1:-1] = u
    gy[:, 0] = -u[:, 0]
    gy[:, -1] = -u[:, -1]
    dym = (gy[:, 1:-1] - gy[:, :-2]) / hy
    dyp = (gy[:, 2:] - gy[:, 1:-1]) / hy
    tx[1:-1] = -(np.where(u > 0.0, u * dxm, u * dxp) + np.where(v > 0.0, v * dym, v * dyp))

    # y-momentum on interior y-faces
    w = uy[:, 1:-1]
    q = 0.25 * (ux[:-1, :-1] + ux[1:, :-1] + ux[:-1, 1:] + ux[1:, 1:])
    dym = (uy[:, 1:-1] - uy[:, :-2]) / hy
    dyp = (uy[:, 2:] - uy[:, 1:-1]) / hy
    gx = np.empty((nx + 2, ny - 1))
    gx[1:-1] = w
    gx[0] = -w[0]
    gx[-1] = -w[-1]
    dxm = (gx[1:-1] - gx[:-2]) / hx
    dxp = (gx[2:] - gx[1:-1]) / hx
    ty[:, 1:-1] = -(np.where(q > 0.0, q * dxm, q * dxp) + np.where(w > 0.0, w * dym, w * dyp))
    return tx, ty


def advect_velocity(u: VectorField) -> VectorField:
    """Upwind tendency -(u . grad) u; wall faces are zero."""
    g = u.grid
    tx, ty = advect_velocity_array(u.ux, u.uy, g.hx, g.hy)
    return VectorField(g, tx, ty)


# ---------------------------------------------------------------------------
# Cell-centred gradients for diagnostics
# ---------------------------------------------------------------------------

def centered_gradient_array(a, bc, hx, hy):
    g = ghost_extend(a, bc)
    return (g[2:, 1:-1] - g[:-2, 1:-1]) / (2.0 * hx), (g[1:-1, 2:] - g[1:-1, :-2]) / (2.0 * hy)


def velocity_dirichlet_energy(ux, uy, hx, hy):
    """Discrete int |grad u|^2, i.e. -<u, Lap_h u> over faces.

    Wall-adjacent differences span half a cell and carry half weight.
    """
    area = hx * hy
    e = np.sum(((ux[1:] - ux[:-1]) / hx) ** 2) + np.sum(((uy[:, 1:] - uy[:, :-1]) / hy) ** 2)
    e += np.sum(((ux[:, 1:] - ux[:, :-1]) / hy) ** 2) + np.sum(((uy[1:] - uy[:-1]) / hx) ** 2)
    e += 2.0 * (np.sum(ux[:, 0] ** 2) + np.sum(ux[:, -1] ** 2)) / hy**2
    e += 2.0 * (np.sum(uy[0] ** 2) + np.sum(uy[-1] ** 2)) / hx**2
    return float(area * e)
