"""Operator-split time stepping: fluid -> c -> n.

Each stage is first order in time. Transport and chemotaxis are explicit
upwind, diffusion is backward Euler, and the logistic-type reaction uses a
Patankar factorisation so that n stays non-negative for any dt.
"""

from __future__ import annotations

import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np

from . import operators as ops
from .errors import (BlowupSuspected, DivergenceTooLarge, DtUnderflow, NegativeC, NegativeN,
                     PositivityViolation)
from .grid import BC, Forcing, Params, ScalarField, SimState, VectorField
from .solvers import SolverConfig, helmholtz_array, pressure_array

log = logging.getLogger(__name__)

EPS_SPEED = 1e-30


@dataclass(frozen=True)
class StepConfig:
    cfl_adv: float = 0.4
    cfl_chem: float = 0.4
    dt_max: float = 1e-2
    dt_min: float = 1e-9
    proj_tol: float = 1e-9
    overflow_guard: float = 1e12
    max_retries: int = 30

    def __post_init__(self):
        if not (0 < self.cfl_adv < 1 and 0 < self.cfl_chem < 1):
            raise ValueError("CFL factors must lie in (0,1)")
        if not (0 < self.dt_min < self.dt_max):
            raise ValueError("need 0 < dt_min < dt_max")
        if self.proj_tol <= 0:
            raise ValueError("proj_tol must be positive")


@dataclass
class StepReport:
    dt_used: float
    clamp_activations: int = 0
    solver_iters: Dict[str, int] = field(default_factory=dict)
    min_n: float = math.nan
    min_c: float = math.nan
    max_divergence: float = math.nan
    retries: int = 0


def log_factor(n, eta):
    """log^eta(n + e), the sub-logistic damping denominator."""
    return np.log(n + math.e) ** eta


def reaction_rate(n, params: Params):
    return params.r * n - params.mu * n * n / log_factor(n, params.eta)


def patankar_reaction(n, dt, params: Params):
    """n (1 + dt r) / (1 + dt mu n / log^eta(n + e)); non-negative for n >= 0."""
    return n * (1.0 + dt * params.r) / (1.0 + dt * params.mu * n / log_factor(n, params.eta))


def chemotactic_speed(c: ScalarField, params: Params) -> float:
    g = c.grid
    vx, vy, _ = ops.chemotactic_velocity_array(c.data, params, g.hx, g.hy)
    return float(max(np.max(np.abs(vx)), np.max(np.abs(vy))))


def compute_dt(state: SimState, params: Params, cfg: StepConfig) -> float:
    h = state.grid.h
    dt = min(cfg.dt_max,
             cfg.cfl_adv * h / max(state.u.max_abs(), EPS_SPEED),
             cfg.cfl_chem * h / max(chemotactic_speed(state.c, params), EPS_SPEED))
    if dt < cfg.dt_min:
        raise DtUnderflow(dt, cfg.dt_min)
    return dt


def _body_force(state: SimState, forcing: Forcing):
    """n grad(phi) + f on the faces at the current time; walls zero."""
    g = state.grid
    n = state.n.data
    gx, gy = ops.face_gradient_array(forcing.phi.data, g.hx, g.hy)
    bx = np.zeros_like(gx)
    by = np.zeros_like(gy)
    bx[1:-1] = 0.5 * (n[1:] + n[:-1]) * gx[1:-1]
    by[:, 1:-1] = 0.5 * (n[:, 1:] + n[:, :-1]) * gy[:, 1:-1]
    if forcing.f is not None:
        fx, fy = forcing.faces(state.t)
        bx[1:-1] += fx[1:-1]
        by[:, 1:-1] += fy[:, 1:-1]
    return bx, by


def step_fluid(state: SimState, params: Params, forcing: Forcing, cfg: StepConfig, dt: float,
               solver: SolverConfig = SolverConfig()):
    """Implicit viscous predictor followed by a pressure projection.

    Returns ``(u_new, fragment)`` where the fragment holds solver iteration
    counts and the post-projection divergence.
    """
    g = state.grid
    u = state.u
    ax, ay = ops.advect_velocity_array(u.ux, u.uy, g.hx, g.hy)
    bx, by = _body_force(state, forcing)
    gamma = dt * params.nu_visc
    sx, itx = helmholtz_array(g, u.ux + dt * (ax + bx), gamma, "ux", solver)
    sy, ity = helmholtz_array(g, u.uy + dt * (ay + by), gamma, "uy", solver)

    div_star = ops.divergence_array(sx, sy, g.hx, g.hy)
    # dt * ||r||_inf <= proj_tol / 10 leaves room for the mean and roundoff
    p, itp = pressure_array(g, div_star / dt, solver, atol=0.1 * cfg.proj_tol / dt)
    px, py = ops.face_gradient_array(p, g.hx, g.hy)
    u_new = VectorField(g, sx - dt * px, sy - dt * py)
    max_div = ops.max_divergence(u_new)
    if max_div > cfg.proj_tol:
        raise DivergenceTooLarge(max_div, cfg.proj_tol)
    return u_new, {"iters": {"ux": itx, "uy": ity, "pressure": itp}, "max_divergence": max_div}


def step_c(state: SimState, params: Params, cfg: StepConfig, u_new: VectorField, dt: float,
           solver: SolverConfig = SolverConfig(), forcing: Optional[Forcing] = None):
    """Solve ((1 + alpha dt) I - dt Lap) c_new = c + dt (adv(c) + beta n [+ source]).

    Returns ``(c_new, iterations)``.
    """
    g = state.grid
    c = state.c.data
    if dt * float(np.max(ops.outflow_rate_array(u_new.ux, u_new.uy, g.hx, g.hy))) > 1.0:
        raise PositivityViolation("advective CFL exceeded in the c stage")
    rhs = c + dt * (ops.advect_scalar_array(c, u_new.ux, u_new.uy, g.hx, g.hy) + params.beta * state.n.data)
    if forcing is not None and forcing.c_source is not None:
        x, y = g.cell_centers()
        rhs = rhs + dt * forcing.c_source(x, y, state.t)
    shift = 1.0 + dt * params.alpha
    c_new, its = helmholtz_array(g, rhs / shift, dt / shift, BC.NEUMANN_ZERO, solver)
    cmin = float(np.min(c_new))
    if not cmin > 0.0:
        raise NegativeC(f"min c = {cmin:.3e} after the c stage at t = {state.t:.6g}")
    return ScalarField(g, c_new), its


def step_n(state: SimState, params: Params, cfg: StepConfig, u_new: VectorField, c_new: ScalarField,
           dt: float, solver: SolverConfig = SolverConfig(), counter: Optional[Counter] = None,
           forcing: Optional[Forcing] = None):
    """Upwind transport and chemotaxis, implicit diffusion, then the Patankar reaction.

    Returns ``(n_new, n_mid, iterations)`` with ``n_mid`` the pre-reaction field.
    """
    g = state.grid
    n = state.n.data
    vx, vy, clamped = ops.chemotactic_velocity_array(c_new.data, params, g.hx, g.hy)
    if clamped:
        log.warning("c clamped at c_floor on %d faces", clamped)
        if counter is not None:
            counter[ops.CLAMP_KEY] += clamped
    rate = (ops.outflow_rate_array(u_new.ux, u_new.uy, g.hx, g.hy)
            + ops.outflow_rate_array(vx, vy, g.hx, g.hy))
    if dt * float(np.max(rate)) > 1.0:
        raise PositivityViolation("transport + chemotaxis CFL exceeded in the n stage")

    fx, fy = ops.upwind_flux_array(n, vx, vy)
    tendency = (ops.advect_scalar_array(n, u_new.ux, u_new.uy, g.hx, g.hy)
                - ops.divergence_array(fx, fy, g.hx, g.hy))
    n_exp = n + dt * tendency
    if forcing is not None and forcing.n_source is not None:
        x, y = g.cell_centers()
        n_exp = n_exp + dt * forcing.n_source(x, y, state.t)
    if float(np.min(n_exp)) < 0.0:
        raise PositivityViolation("explicit n stage went negative")

    n_mid, its = helmholtz_array(g, n_exp, dt, BC.NEUMANN_ZERO, solver)
    n_new = patankar_reaction(n_mid, dt, params)
    nmin = float(np.min(n_new))
    if nmin < 0.0:
        raise NegativeN(f"min n = {nmin:.3e} after the n stage at t = {state.t:.6g}")
    return ScalarField(g, n_new), ScalarField(g, n_mid), its


def step(state: SimState, params: Params, forcing: Forcing, cfg: StepConfig = StepConfig(),
         solver: SolverConfig = SolverConfig(), dt_cap: Optional[float] = None):
    """Advance one step. Returns ``(new_state, StepReport)``.

    ``dt_cap`` bounds the step (used to land on snapshot times). A step whose
    explicit stages would lose positivity is retried with half the dt.
    """
    try:
        dt = compute_dt(state, params, cfg)
    except DtUnderflow as exc:
        raise BlowupSuspected(str(exc)) from exc
    if dt_cap is not None:
        dt = min(dt, dt_cap)

    retries = 0
    while True:
        counter: Counter = Counter()
        try:
            u_new, frag = step_fluid(state, params, forcing, cfg, dt, solver)
            c_new, itc = step_c(state, params, cfg, u_new, dt, solver, forcing)
            n_new, _, itn = step_n(state, params, cfg, u_new, c_new, dt, solver, counter, forcing)
            break
        except PositivityViolation:
            retries += 1
            dt *= 0.5
            if dt < cfg.dt_min or retries > cfg.max_retries:
                raise BlowupSuspected(f"dt underflow at t = {state.t:.6g} while retrying for positivity")

    new = SimState(state.t + dt, n_new, c_new, u_new)
    nmax = float(np.max(n_new.data))
    if not (math.isfinite(nmax) and nmax <= cfg.overflow_guard and c_new.is_finite() and u_new.is_finite()):
        raise BlowupSuspected(f"field overflow at t = {new.t:.6g} (max n = {nmax:.3e})")
    iters = dict(frag["iters"], c=itc, n=itn)
    report = StepReport(dt_used=dt, clamp_activations=counter[ops.CLAMP_KEY], solver_iters=iters,
                        min_n=float(np.min(n_new.data)), min_c=float(np.min(c_new.data)),
                        max_divergence=frag["max_divergence"], retries=retries)
    return new, report
