"""Functionals tracked along a run, evaluated on one state, plus windowed space-time integrals."""

from __future__ import annotations

import collections
import dataclasses
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import operators as ops
from .grid import Params, SimState
from .stepper import log_factor

CSV_COLUMNS = (
    "t", "mass_n", "mass_c", "l2_u", "l2_grad_u_win", "l2_c", "l2_grad_c", "nlogn", "nlogc",
    "energy_F", "dissipation_win", "lp_n_2", "lp_n_4", "np_cq", "grad_c_4", "min_c", "max_n",
    "linf_grad_c",
)


@dataclass(frozen=True)
class DiagnosticSettings:
    """Exponents for the higher-moment functionals (defaults match the CSV labels)."""

    np_cq_p: float = 2.0
    np_cq_q: float = 0.5
    grad_c_p: float = 2.0


@dataclass
class DiagnosticsRecord:
    t: float
    mass_n: float
    mass_c: float
    l2_u: float
    l2_grad_u: float
    l2_grad_u_win: float
    l2_c: float
    l2_grad_c: float
    nlogn: float
    nlogc: float
    energy_F: float
    dissipation: float
    dissipation_win: float
    lp_n_2: float
    lp_n_4: float
    np_cq: float
    grad_c_4: float
    min_c: float
    max_n: float
    linf_grad_c: float
    # not part of the CSV schema
    min_n: float = math.nan
    linf_u: float = math.nan
    max_div: float = math.nan

    def csv_row(self):
        return [getattr(self, name) for name in CSV_COLUMNS]

    def as_dict(self):
        return dataclasses.asdict(self)

    def is_finite(self) -> bool:
        return all(math.isfinite(v) for v in self.csv_row())


def energy(nlogn: float, nlogc: float, l2_grad_c: float) -> float:
    return nlogn - nlogc / 3.0 + 0.5 * l2_grad_c


def xlogy(x, y):
    """x log y with the 0 log 0 = 0 convention."""
    out = np.zeros_like(x, dtype=float)
    np.multiply(x, np.log(y, out=np.zeros_like(x, dtype=float), where=x > 0), out=out, where=x > 0)
    return out


def dissipation_density(n, eta):
    return n * n / log_factor(n, eta)


def snapshot(state: SimState, params: Params, windows: Optional["SpaceTimeWindows"] = None,
             settings: DiagnosticSettings = DiagnosticSettings()) -> DiagnosticsRecord:
    g = state.grid
    area = g.cell_area
    n = state.n.data
    c = state.c.data
    u = state.u

    gx, gy = ops.centered_gradient_array(c, state.c.bc, g.hx, g.hy)
    grad2 = gx * gx + gy * gy
    fgx, fgy = ops.face_gradient_array(c, g.hx, g.hy)
    l2_grad_c = area * float(np.sum(grad2))
    nlogn = area * float(np.sum(xlogy(n, n)))
    nlogc = area * float(np.sum(xlogy(n, c)))
    l2_grad_u = ops.velocity_dirichlet_energy(u.ux, u.uy, g.hx, g.hy)
    dissipation = area * float(np.sum(dissipation_density(n, params.eta)))
    if windows is None:
        grad_u_win = diss_win = 0.0
    else:
        grad_u_win, diss_win = windows.values(state.t)

    return DiagnosticsRecord(
        t=state.t,
        mass_n=area * float(np.sum(n)),
        mass_c=area * float(np.sum(c)),
        l2_u=area * float(np.sum(u.ux**2) + np.sum(u.uy**2)),
        l2_grad_u=l2_grad_u,
        l2_grad_u_win=grad_u_win,
        l2_c=area * float(np.sum(c * c)),
        l2_grad_c=l2_grad_c,
        nlogn=nlogn,
        nlogc=nlogc,
        energy_F=energy(nlogn, nlogc, l2_grad_c),
        dissipation=dissipation,
        dissipation_win=diss_win,
        lp_n_2=area * float(np.sum(n**2)),
        lp_n_4=area * float(np.sum(n**4)),
        np_cq=area * float(np.sum(n**settings.np_cq_p * c**-settings.np_cq_q)),
        grad_c_4=area * float(np.sum(grad2**settings.grad_c_p)),
        min_c=float(np.min(c)),
        max_n=float(np.max(n)),
        linf_grad_c=float(max(np.max(np.abs(fgx)), np.max(np.abs(fgy)))),
        min_n=float(np.min(n)),
        linf_u=u.max_abs(),
        max_div=ops.max_divergence(u),
    )


class WindowIntegral:
    """Rectangle-rule integral of a scalar signal over the trailing window [t - tau, t]."""

    def __init__(self, tau: float = 1.0):
        if tau <= 0:
            raise ValueError("tau must be positive")
        self.tau = tau
        self._pieces = collections.deque()  # (t0, t1, value)
        self._t = -math.inf

    def add(self, t0: float, t1: float, value: float) -> None:
        if t1 < t0 or t0 < self._t:
            raise ValueError("window pieces must be added in increasing time")
        self._pieces.append((t0, t1, float(value)))
        self._t = t1
        cutoff = t1 - self.tau
        while self._pieces and self._pieces[0][1] <= cutoff:
            self._pieces.popleft()

    def value(self, t: Optional[float] = None) -> float:
        t = self._t if t is None else t
        lo = t - self.tau
        total = 0.0
        for t0, t1, v in self._pieces:
            a, b = max(t0, lo), min(t1, t)
            if b > a:
                total += v * (b - a)
        return total


class SpaceTimeWindows:
    """Trailing-window integrals of int |grad u|^2 and of the damping dissipation."""

    def __init__(self, tau: float = 1.0):
        self.grad_u = WindowIntegral(tau)
        self.dissipation = WindowIntegral(tau)

    def values(self, t: Optional[float] = None):
        return self.grad_u.value(t), self.dissipation.value(t)


def accumulate(windows: SpaceTimeWindows, state: SimState, params: Params, dt: float):
    """Charge the integrands at ``state`` to the interval [t, t + dt]; return the window values."""
    g = state.grid
    grad_u = ops.velocity_dirichlet_energy(state.u.ux, state.u.uy, g.hx, g.hy)
    diss = g.cell_area * float(np.sum(dissipation_density(state.n.data, params.eta)))
    windows.grad_u.add(state.t, state.t + dt, grad_u)
    windows.dissipation.add(state.t, state.t + dt, diss)
    return windows.values(state.t + dt)
