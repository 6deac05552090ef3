"""Grid-refinement studies against manufactured solutions.

Two studies are available:

* ``diffusion``: chemotaxis, reaction and flow switched off, so n and c solve
  heat equations with a separable cosine solution. dt scales like h^2, so the
  observed order is the spatial order of the Laplacian (about 2).
* ``full``: every term active. Source terms for n, c and the momentum equation
  are derived symbolically so that a smooth field triple is an exact solution.
  dt scales like h, and the upwind transport makes the scheme first order.

The observed order is the least-squares slope of log(error) against log(h)
over all levels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np
import sympy as sp

from ..grid import Forcing, Grid, Params, ScalarField, SimState, VectorField, make_grid
from ..solvers import SolverConfig
from ..stepper import StepConfig, step

DEFAULT_LEVELS = (32, 64, 128)
THRESHOLDS = {"diffusion": 1.9, "full": 0.9}


def observed_order(h: Sequence[float], errors: Sequence[float]) -> float:
    """Least-squares slope of log(error) versus log(h)."""
    lh = np.log(np.asarray(h, dtype=float))
    le = np.log(np.asarray(errors, dtype=float))
    slope, _ = np.polyfit(lh, le, 1)
    return float(slope)


def l2_error(a: np.ndarray, b: np.ndarray, cell_area: float) -> float:
    return math.sqrt(cell_area * float(np.sum((a - b) ** 2)))


@dataclass
class OrderReport:
    study: str
    levels: List[int]
    h: List[float]
    errors: Dict[str, List[float]]
    orders: Dict[str, float]
    composite_order: float
    threshold: float
    degenerate: bool = False
    notes: str = ""

    @property
    def passed(self) -> bool:
        return (not self.degenerate) and self.composite_order >= self.threshold


# ---------------------------------------------------------------------------
# Manufactured solutions
# ---------------------------------------------------------------------------

@dataclass
class Manufactured:
    """Exact fields as numpy callables ``fn(x, y, t)`` plus the forcing needed to sustain them."""

    n: callable
    c: callable
    psi: Optional[callable] = None        # stream function; u = (psi_y, -psi_x)
    u: Optional[callable] = None
    v: Optional[callable] = None
    phi: Optional[callable] = None
    n_source: Optional[callable] = None
    c_source: Optional[callable] = None
    f: Optional[callable] = None
    params: Params = field(default_factory=Params)


def _lambdify(expr, x, y, t):
    fn = sp.lambdify((x, y, t), expr, "numpy")

    def wrapped(xa, ya, ta):
        return np.broadcast_to(np.asarray(fn(xa, ya, ta), dtype=float), np.shape(xa)).copy()
    return wrapped


def diffusion_solution(lx: float = 1.0, ly: float = 1.0) -> Manufactured:
    lam = math.pi ** 2 * (1 / lx ** 2 + 1 / ly ** 2)

    def mode(x, y, t):
        return np.cos(math.pi * x / lx) * np.cos(math.pi * y / ly) * math.exp(-lam * t)

    params = Params(r=0.0, mu=0.0, alpha=0.0, beta=0.0, chi=0.0, strict=False)
    return Manufactured(n=lambda x, y, t: 2.0 + mode(x, y, t),
                        c=lambda x, y, t: 1.0 + 0.5 * mode(x, y, t),
                        params=params)


def full_solution(params: Params, lx: float = 1.0, ly: float = 1.0, gravity: float = 1.0) -> Manufactured:
    """Smooth n, c, u compatible with the wall conditions; sources derived with sympy."""
    x, y, t = sp.symbols("x y t", real=True)
    X, Y = sp.pi * x / lx, sp.pi * y / ly
    n = sp.Rational(3, 2) + sp.Rational(1, 2) * sp.cos(X) * sp.cos(Y) * sp.cos(t)
    c = 2 + sp.Rational(1, 2) * sp.cos(X) * sp.cos(2 * Y) * sp.exp(-t)
    psi = sp.Rational(1, 10) * sp.sin(X) ** 2 * sp.sin(Y) ** 2 * sp.cos(t)
    u, v = sp.diff(psi, y), -sp.diff(psi, x)
    phi = gravity * y

    def lap(e):
        return sp.diff(e, x, 2) + sp.diff(e, y, 2)

    def adv(e):
        return u * sp.diff(e, x) + v * sp.diff(e, y)

    p = params
    damping = p.mu * n ** 2 / sp.log(n + sp.E) ** p.eta
    chem = sp.diff(n * sp.diff(c, x) / c ** p.k, x) + sp.diff(n * sp.diff(c, y) / c ** p.k, y)
    s_n = sp.diff(n, t) + adv(n) - lap(n) + p.chi * chem - (p.r * n - damping)
    s_c = sp.diff(c, t) + adv(c) - lap(c) + p.alpha * c - p.beta * n
    f_x = sp.diff(u, t) + adv(u) - p.nu_visc * lap(u) - n * sp.diff(phi, x)
    f_y = sp.diff(v, t) + adv(v) - p.nu_visc * lap(v) - n * sp.diff(phi, y)

    L = lambda e: _lambdify(e, x, y, t)
    fx_fn, fy_fn = L(f_x), L(f_y)
    return Manufactured(n=L(n), c=L(c), psi=L(psi), u=L(u), v=L(v), phi=L(phi),
                        n_source=L(s_n), c_source=L(s_c),
                        f=lambda xa, ya, ta: (fx_fn(xa, ya, ta), fy_fn(xa, ya, ta)),
                        params=params)


def discrete_velocity(grid: Grid, psi, t: float) -> VectorField:
    """Face velocities from nodal stream-function differences; exactly divergence-free on the MAC grid."""
    xn = np.linspace(0.0, grid.lx, grid.nx + 1)
    yn = np.linspace(0.0, grid.ly, grid.ny + 1)
    X, Y = np.meshgrid(xn, yn, indexing="ij")
    P = psi(X, Y, t)
    ux = (P[:, 1:] - P[:, :-1]) / grid.hy
    uy = -(P[1:, :] - P[:-1, :]) / grid.hx
    return VectorField(grid, ux, uy)


def _exact_state(grid: Grid, m: Manufactured, t: float) -> SimState:
    x, y = grid.cell_centers()
    u = discrete_velocity(grid, m.psi, t) if m.psi is not None else VectorField.zeros(grid)
    return SimState(t, ScalarField(grid, m.n(x, y, t)), ScalarField(grid, m.c(x, y, t)), u)


def run_level(m: Manufactured, nx: int, t_end: float, dt: float, lx: float = 1.0, ly: float = 1.0,
              solver: SolverConfig = SolverConfig(preconditioner="spectral")) -> Dict[str, float]:
    """Integrate one level to ``t_end`` with a fixed dt and return the L2 errors per field."""
    g = make_grid(nx, nx, lx, ly)
    x, y = g.cell_centers()
    phi = m.phi(x, y, 0.0) if m.phi is not None else np.zeros_like(x)
    forcing = Forcing(ScalarField(g, phi), m.f, m.n_source, m.c_source)
    cfg = StepConfig(dt_max=dt * (1 + 1e-12), dt_min=min(1e-9, dt / 2), cfl_adv=0.9, cfl_chem=0.9)
    state = _exact_state(g, m, 0.0)
    steps = int(round(t_end / dt))
    for k in range(steps):
        remaining = t_end - state.t
        state, _ = step(state, m.params, forcing, cfg, solver, dt_cap=min(dt, remaining))
    errors = {
        "n": l2_error(state.n.data, m.n(x, y, state.t), g.cell_area),
        "c": l2_error(state.c.data, m.c(x, y, state.t), g.cell_area),
    }
    if m.u is not None:
        xx, yx = g.xface_centers()
        xy, yy = g.yface_centers()
        eu = np.sum((state.u.ux - m.u(xx, yx, state.t)) ** 2) + np.sum((state.u.uy - m.v(xy, yy, state.t)) ** 2)
        errors["u"] = math.sqrt(g.cell_area * float(eu))
    return errors


def convergence_study(study: str = "diffusion", levels: Sequence[int] = DEFAULT_LEVELS,
                      params: Optional[Params] = None, lx: float = 1.0, ly: float = 1.0,
                      t_end: Optional[float] = None, courant: Optional[float] = None) -> OrderReport:
    """Refine through ``levels`` (cells per side) and estimate the observed order of accuracy."""
    if study not in THRESHOLDS:
        raise ValueError(f"study must be one of {sorted(THRESHOLDS)}")
    levels = [int(n) for n in levels]
    threshold = THRESHOLDS[study]
    if len(set(levels)) < 2:
        return OrderReport(study, levels, [], {}, {}, math.nan, threshold, degenerate=True,
                           notes="fewer than two distinct levels")
    degenerate = len(set(levels)) != len(levels)
    distinct = sorted(set(levels))

    if study == "diffusion":
        m = diffusion_solution(lx, ly)
        t_end = 0.02 if t_end is None else t_end
        courant = 0.2 if courant is None else courant
        dt_of = lambda h: courant * h * h
    else:
        m = full_solution(params if params is not None else Params(), lx, ly)
        t_end = 0.5 if t_end is None else t_end
        courant = 0.25 if courant is None else courant
        dt_of = lambda h: courant * h

    hs, errs = [], {}
    for nx in distinct:
        h = min(lx, ly) / nx
        dt = t_end / math.ceil(t_end / dt_of(h))
        e = run_level(m, nx, t_end, dt, lx, ly)
        hs.append(max(lx, ly) / nx)
        for k, v in e.items():
            errs.setdefault(k, []).append(v)
    composite = [math.sqrt(sum(errs[k][i] ** 2 for k in errs)) for i in range(len(hs))]
    orders = {k: observed_order(hs, v) for k, v in errs.items()}
    report = OrderReport(study, levels, hs, dict(errs, composite=composite), orders,
                         observed_order(hs, composite), threshold, degenerate=degenerate)
    if degenerate:
        report.notes = "repeated levels"
    return report
