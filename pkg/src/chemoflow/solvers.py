"""Conjugate-gradient solvers for the implicit diffusion and pressure problems."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import fft

from .errors import NoConvergence
from .grid import BC, Grid, ScalarField
from .operators import laplacian_array, laplacian_ux_array, laplacian_uy_array


@dataclass(frozen=True)
class SolverConfig:
    tol: float = 1e-10
    max_iter: Optional[int] = None  # None -> 10 * (nx + ny)
    method: str = "cg"
    preconditioner: str = "none"  # "none", "jacobi" or "spectral"

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iter is not None and self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if self.method != "cg":
            raise ValueError(f"unknown solver method {self.method!r}")
        if self.preconditioner not in PRECONDITIONERS:
            raise ValueError(f"unknown preconditioner {self.preconditioner!r}")

    def iteration_cap(self, grid: Grid) -> int:
        return self.max_iter if self.max_iter is not None else 10 * (grid.nx + grid.ny)


def conjugate_gradient(apply: Callable[[np.ndarray], np.ndarray], b: np.ndarray,
                       x0: Optional[np.ndarray] = None, *, tol: float, max_iter: int,
                       atol: float = 0.0, zero_mean: bool = False,
                       precond: Optional[Callable[[np.ndarray], np.ndarray]] = None):
    """Solve ``apply(x) = b`` for a symmetric positive (semi-)definite operator.

    Stops once the true residual satisfies ``||r|| <= tol * ||b||`` and, if
    ``atol`` is set, also ``||r|| <= atol``. With ``zero_mean`` the iterates are
    kept orthogonal to constants (the Neumann null space). ``precond`` applies
    an SPD approximation of the inverse operator.

    Returns ``(x, iterations, residual_norm)``.
    """
    bnorm = float(np.linalg.norm(b))
    target = tol * bnorm
    if atol > 0.0:
        target = min(target, atol)
    x = np.zeros_like(b) if x0 is None else np.array(x0, dtype=float)
    if zero_mean:
        x -= x.mean()
    if bnorm == 0.0:
        return np.zeros_like(b), 0, 0.0

    r = b - apply(x)
    rnorm = float(np.linalg.norm(r))
    it = 0
    while rnorm > target:
        start = it
        z = r if precond is None else precond(r)
        p = z.copy()
        rr = float(np.vdot(r, z))
        while it < max_iter:
            ap = apply(p)
            pap = float(np.vdot(p, ap))
            if pap <= 0.0:
                break
            alpha = rr / pap
            x += alpha * p
            r -= alpha * ap
            if zero_mean:
                r -= r.mean()
            it += 1
            if float(np.linalg.norm(r)) <= target:
                break
            z = r if precond is None else precond(r)
            rr_new = float(np.vdot(r, z))
            p *= rr_new / rr
            p += z
            rr = rr_new
        if zero_mean:
            x -= x.mean()
        # the recurrence residual drifts; restart from the true one if needed
        r = b - apply(x)
        rnorm = float(np.linalg.norm(r))
        if rnorm > target and (it >= max_iter or it == start):
            raise NoConvergence(it, rnorm / bnorm)
    return x, it, rnorm


def _symbols(n, h, kind):
    """1D eigenvalues of -Lap for one axis: 'neumann', 'dirichlet' (half-cell wall) or 'nodes'."""
    if kind == "neumann":
        k = np.arange(n)
    elif kind == "dirichlet":
        k = np.arange(1, n + 1)
    else:
        k = np.arange(1, n + 1)  # n interior nodes between two zero nodes
        return 4.0 / h**2 * np.sin(np.pi * k / (2 * (n + 1))) ** 2
    return 4.0 / h**2 * np.sin(np.pi * k / (2 * n)) ** 2


_FORWARD = {"neumann": (fft.dct, 2), "dirichlet": (fft.dst, 2), "nodes": (fft.dst, 1)}
_INVERSE = {"neumann": (fft.idct, 2), "dirichlet": (fft.idst, 2), "nodes": (fft.idst, 1)}


def _axis_kinds(kind):
    if kind == "ux":
        return "nodes", "dirichlet"
    if kind == "uy":
        return "dirichlet", "nodes"
    if kind is BC.DIRICHLET_ZERO:
        return "dirichlet", "dirichlet"
    return "neumann", "neumann"


def spectral_preconditioner(grid: Grid, gamma: float, kind, shift: float = 1.0):
    """Exact inverse of ``shift * I - gamma Lap`` via fast sine/cosine transforms.

    The uniform-grid stencils with mirror, negated-ghost and zero-node walls are
    diagonalised by DCT-II, DST-II and DST-I respectively. A zero eigenvalue
    (pure Neumann Poisson) is mapped to zero.
    """
    kx, ky = _axis_kinds(kind)
    nx = grid.nx - 1 if kx == "nodes" else grid.nx
    ny = grid.ny - 1 if ky == "nodes" else grid.ny
    lam = shift + gamma * (_symbols(nx, grid.hx, kx)[:, None] + _symbols(ny, grid.hy, ky)[None, :])
    with np.errstate(divide="ignore"):
        inv = np.where(lam > 0.0, 1.0 / np.where(lam > 0.0, lam, 1.0), 0.0)
    (fx, tx), (fy, ty) = _FORWARD[kx], _FORWARD[ky]
    (ix, sx), (iy, sy) = _INVERSE[kx], _INVERSE[ky]
    sl = (slice(1, -1) if kx == "nodes" else slice(None), slice(1, -1) if ky == "nodes" else slice(None))

    def apply(r):
        out = np.zeros_like(r)
        a = fy(fx(r[sl], type=tx, axis=0, norm="ortho"), type=ty, axis=1, norm="ortho")
        out[sl] = iy(ix(a * inv, type=sx, axis=0, norm="ortho"), type=sy, axis=1, norm="ortho")
        return out

    return apply


def jacobi_preconditioner(grid: Grid, gamma: float, kind, shift: float = 1.0):
    diag = shift + gamma * (2.0 / grid.hx**2 + 2.0 / grid.hy**2)
    return lambda r: r / diag


PRECONDITIONERS = {"none": None, "jacobi": jacobi_preconditioner, "spectral": spectral_preconditioner}


def _preconditioner(cfg, grid, gamma, kind, shift=1.0):
    factory = PRECONDITIONERS[cfg.preconditioner]
    return None if factory is None else factory(grid, gamma, kind, shift)


def helmholtz_operator(grid: Grid, gamma: float, kind):
    """Matrix-free ``x -> (I - gamma Lap) x`` for cells (``kind`` a BC) or faces ('ux'/'uy')."""
    hx, hy = grid.hx, grid.hy
    if kind == "ux":
        work = np.empty((grid.nx + 1, grid.ny + 2))
        return lambda x: x - gamma * laplacian_ux_array(x, hx, hy, work)
    if kind == "uy":
        work = np.empty((grid.nx + 2, grid.ny + 1))
        return lambda x: x - gamma * laplacian_uy_array(x, hx, hy, work)
    work = np.empty((grid.nx + 2, grid.ny + 2))
    return lambda x: x - gamma * laplacian_array(x, kind, hx, hy, work)


def helmholtz_array(grid: Grid, rhs: np.ndarray, gamma: float, kind, cfg: SolverConfig,
                    x0: Optional[np.ndarray] = None):
    """Array-level Helmholtz solve; returns ``(x, iterations)``."""
    if gamma < 0:
        raise ValueError("gamma must be non-negative")
    if gamma == 0.0:
        return rhs.copy(), 0
    op = helmholtz_operator(grid, gamma, kind)
    x, its, _ = conjugate_gradient(op, rhs, rhs if x0 is None else x0,
                                   tol=cfg.tol, max_iter=cfg.iteration_cap(grid),
                                   precond=_preconditioner(cfg, grid, gamma, kind))
    if kind == "ux":
        x[0] = x[-1] = 0.0
    elif kind == "uy":
        x[:, 0] = x[:, -1] = 0.0
    return x, its


def solve_helmholtz(rhs: ScalarField, gamma: float, bc: BC = BC.NEUMANN_ZERO,
                    cfg: SolverConfig = SolverConfig()) -> ScalarField:
    """Solve ``(I - gamma Lap_bc) x = rhs``."""
    x, _ = helmholtz_array(rhs.grid, rhs.data, gamma, bc, cfg)
    return ScalarField(rhs.grid, x, bc)


def pressure_array(grid: Grid, rhs: np.ndarray, cfg: SolverConfig,
                   x0: Optional[np.ndarray] = None, atol: float = 0.0):
    """Zero-mean solution of the Neumann Poisson problem; returns ``(p, iterations)``."""
    b = rhs - rhs.mean()
    hx, hy = grid.hx, grid.hy
    work = np.empty((grid.nx + 2, grid.ny + 2))

    def neg_lap(x):
        return -laplacian_array(x, BC.NEUMANN_ZERO, hx, hy, work)

    p, its, _ = conjugate_gradient(neg_lap, -b, x0, tol=cfg.tol, max_iter=cfg.iteration_cap(grid),
                                   atol=atol, zero_mean=True,
                                   precond=_preconditioner(cfg, grid, 1.0, BC.NEUMANN_ZERO, shift=0.0))
    return p, its


def solve_pressure_poisson(div_u_star: ScalarField, cfg: SolverConfig = SolverConfig()) -> ScalarField:
    """Zero-mean ``p`` with ``Lap_N p = rhs - mean(rhs)``."""
    p, _ = pressure_array(div_u_star.grid, div_u_star.data, cfg)
    return ScalarField(div_u_star.grid, p, BC.NEUMANN_ZERO)
