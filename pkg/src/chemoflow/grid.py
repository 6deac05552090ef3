"""Discrete domain, field containers and parameter records.

Arrays are indexed ``[i, j]`` with ``i`` running along x. Cell-centred data
has shape ``(nx, ny)``; x-face velocity ``(nx + 1, ny)``; y-face velocity
``(nx, ny + 1)``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import ConfigValidationError, InvalidDimensions


class BC(enum.Enum):
    NEUMANN_ZERO = "neumann_zero"
    DIRICHLET_ZERO = "dirichlet_zero"
    NO_SLIP = "no_slip"


@dataclass(frozen=True)
class Grid:
    nx: int
    ny: int
    lx: float
    ly: float

    def __post_init__(self):
        if self.nx < 4 or self.ny < 4:
            raise InvalidDimensions(f"need nx, ny >= 4, got {self.nx}x{self.ny}")
        if not (math.isfinite(self.lx) and math.isfinite(self.ly)) or self.lx <= 0 or self.ly <= 0:
            raise InvalidDimensions(f"domain lengths must be positive, got {self.lx}x{self.ly}")

    @property
    def hx(self) -> float:
        return self.lx / self.nx

    @property
    def hy(self) -> float:
        return self.ly / self.ny

    @property
    def h(self) -> float:
        return min(self.hx, self.hy)

    @property
    def cell_area(self) -> float:
        return self.hx * self.hy

    @property
    def area(self) -> float:
        return self.lx * self.ly

    def cell_centers(self):
        x = (np.arange(self.nx) + 0.5) * self.hx
        y = (np.arange(self.ny) + 0.5) * self.hy
        return np.meshgrid(x, y, indexing="ij")

    def xface_centers(self):
        x = np.arange(self.nx + 1) * self.hx
        y = (np.arange(self.ny) + 0.5) * self.hy
        return np.meshgrid(x, y, indexing="ij")

    def yface_centers(self):
        x = (np.arange(self.nx) + 0.5) * self.hx
        y = np.arange(self.ny + 1) * self.hy
        return np.meshgrid(x, y, indexing="ij")


def make_grid(nx: int, ny: int, lx: float, ly: float) -> Grid:
    for name, count in (("nx", nx), ("ny", ny)):
        if isinstance(count, bool) or int(count) != count:
            raise InvalidDimensions(f"{name} must be an integer, got {count!r}")
    return Grid(int(nx), int(ny), float(lx), float(ly))


def ghost_extend(a: np.ndarray, bc: BC, out: Optional[np.ndarray] = None) -> np.ndarray:
    """Return ``a`` padded by one ghost layer on every side.

    Neumann ghosts mirror the adjacent interior value; Dirichlet ghosts are its
    negation, which puts zero on the wall midway between the two.
    """
    nx, ny = a.shape
    if out is None:
        out = np.empty((nx + 2, ny + 2), dtype=float)
    out[1:-1, 1:-1] = a
    sign = -1.0 if bc is BC.DIRICHLET_ZERO else 1.0
    out[0, 1:-1] = sign * a[0]
    out[-1, 1:-1] = sign * a[-1]
    out[1:-1, 0] = sign * a[:, 0]
    out[1:-1, -1] = sign * a[:, -1]
    out[0, 0] = out[0, -1] = out[-1, 0] = out[-1, -1] = 0.0
    return out


@dataclass
class ScalarField:
    grid: Grid
    data: np.ndarray
    bc: BC = BC.NEUMANN_ZERO

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=float)
        if self.data.shape != (self.grid.nx, self.grid.ny):
            raise InvalidDimensions(
                f"scalar data shape {self.data.shape} does not match grid ({self.grid.nx}, {self.grid.ny})")
        if self.bc is BC.NO_SLIP:
            raise ValueError("NO_SLIP applies to vector fields only")

    @classmethod
    def constant(cls, grid: Grid, value: float, bc: BC = BC.NEUMANN_ZERO) -> "ScalarField":
        return cls(grid, np.full((grid.nx, grid.ny), float(value)), bc)

    @classmethod
    def from_function(cls, grid: Grid, fn, bc: BC = BC.NEUMANN_ZERO) -> "ScalarField":
        x, y = grid.cell_centers()
        return cls(grid, np.broadcast_to(fn(x, y), x.shape).astype(float), bc)

    def ghosted(self) -> np.ndarray:
        return ghost_extend(self.data, self.bc)

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.data)))

    def copy(self) -> "ScalarField":
        return ScalarField(self.grid, self.data.copy(), self.bc)


@dataclass
class VectorField:
    """Face-centred velocity on the MAC grid; wall faces are held at zero."""

    grid: Grid
    ux: np.ndarray
    uy: np.ndarray
    bc: BC = BC.NO_SLIP

    def __post_init__(self):
        g = self.grid
        self.ux = np.array(self.ux, dtype=float)
        self.uy = np.array(self.uy, dtype=float)
        if self.ux.shape != (g.nx + 1, g.ny) or self.uy.shape != (g.nx, g.ny + 1):
            raise InvalidDimensions(
                f"face shapes {self.ux.shape}, {self.uy.shape} do not match grid ({g.nx}, {g.ny})")
        self.enforce_walls()

    @classmethod
    def zeros(cls, grid: Grid) -> "VectorField":
        return cls(grid, np.zeros((grid.nx + 1, grid.ny)), np.zeros((grid.nx, grid.ny + 1)))

    def enforce_walls(self) -> None:
        self.ux[0, :] = 0.0
        self.ux[-1, :] = 0.0
        self.uy[:, 0] = 0.0
        self.uy[:, -1] = 0.0

    def max_abs(self) -> float:
        return float(max(np.max(np.abs(self.ux)), np.max(np.abs(self.uy))))

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.ux)) and np.all(np.isfinite(self.uy)))

    def copy(self) -> "VectorField":
        return VectorField(self.grid, self.ux.copy(), self.uy.copy())


def integrate(field: ScalarField) -> float:
    """Midpoint-rule integral over the domain."""
    return float(field.grid.cell_area * np.sum(field.data))


def _check_open_unit(name, value):
    if not 0.0 < value < 1.0:
        raise ConfigValidationError(name, "must lie in (0,1)")


@dataclass(frozen=True)
class Params:
    r: float = 1.0
    mu: float = 1.0
    alpha: float = 1.0
    beta: float = 1.0
    chi: float = 1.0
    k: float = 0.5
    eta: float = 0.5
    nu_visc: float = 1.0
    c_floor: float = 1e-12
    # False admits degenerate values (zero coefficients, k >= 1) for
    # manufactured-solution studies and out-of-hypothesis sweeps.
    strict: bool = field(default=True, compare=False, repr=False)

    def __post_init__(self):
        for name in ("r", "mu", "alpha", "beta", "chi", "k", "eta", "nu_visc", "c_floor"):
            if not math.isfinite(getattr(self, name)):
                raise ConfigValidationError(name, "must be finite")
        if self.c_floor <= 0:
            raise ConfigValidationError("c_floor", "must be positive")
        if self.nu_visc <= 0:
            raise ConfigValidationError("nu_visc", "must be positive")
        if self.strict:
            for name in ("r", "mu", "alpha", "beta", "chi"):
                if getattr(self, name) <= 0:
                    raise ConfigValidationError(name, "must be positive")
            _check_open_unit("k", self.k)
            _check_open_unit("eta", self.eta)
        else:
            for name in ("r", "mu", "alpha", "beta", "chi", "k", "eta"):
                if getattr(self, name) < 0:
                    raise ConfigValidationError(name, "must be non-negative")

    @property
    def in_hypothesis(self) -> bool:
        return (min(self.r, self.mu, self.alpha, self.beta, self.chi) > 0
                and 0 < self.k < 1 and 0 < self.eta < 1)


VectorFn = Callable[[np.ndarray, np.ndarray, float], tuple]
ScalarFn = Callable[[np.ndarray, np.ndarray, float], np.ndarray]


@dataclass
class Forcing:
    """Potential and body force, plus optional source terms for manufactured runs.

    ``f(x, y, t)`` returns the pair ``(fx, fy)``; the stepper evaluates fx on
    x-faces and fy on y-faces. ``n_source``/``c_source`` are added to the
    n and c equations when set.
    """

    phi: ScalarField
    f: Optional[VectorFn] = None
    n_source: Optional[ScalarFn] = None
    c_source: Optional[ScalarFn] = None

    def __post_init__(self):
        if not self.phi.is_finite():
            raise ConfigValidationError("phi", "potential must be finite")

    def faces(self, t: float):
        """Body force sampled on (x-faces, y-faces) at time t."""
        g = self.phi.grid
        if self.f is None:
            return np.zeros((g.nx + 1, g.ny)), np.zeros((g.nx, g.ny + 1))
        xx, yx = g.xface_centers()
        xy, yy = g.yface_centers()
        fx = np.broadcast_to(self.f(xx, yx, t)[0], xx.shape).astype(float)
        fy = np.broadcast_to(self.f(xy, yy, t)[1], xy.shape).astype(float)
        return fx, fy

    def sup_norm(self, t_end: float, samples: int = 64) -> float:
        """Sampled max of |f| over [0, t_end]."""
        if self.f is None:
            return 0.0
        best = 0.0
        for t in np.linspace(0.0, t_end, samples):
            fx, fy = self.faces(float(t))
            best = max(best, float(np.max(np.abs(fx))), float(np.max(np.abs(fy))))
        return best


@dataclass
class SimState:
    t: float
    n: ScalarField
    c: ScalarField
    u: VectorField

    @property
    def grid(self) -> Grid:
        return self.n.grid

    def copy(self) -> "SimState":
        return SimState(self.t, self.n.copy(), self.c.copy(), self.u.copy())

    def __eq__(self, other):
        if not isinstance(other, SimState):
            return NotImplemented
        return (self.t == other.t and self.grid == other.grid
                and np.array_equal(self.n.data, other.n.data)
                and np.array_equal(self.c.data, other.c.data)
                and np.array_equal(self.u.ux, other.u.ux)
                and np.array_equal(self.u.uy, other.u.uy))
