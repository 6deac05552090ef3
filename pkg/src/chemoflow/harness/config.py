"""Scenario configuration: TOML loading, validation, presets and serialisation.

Layout::

    [grid]       nx, ny, lx, ly
    [params]     r, mu, alpha, beta, chi, k, eta, nu_visc, c_floor
    [initial]    preset = "uniform" | "gaussian_bump" | "random_perturbed" | "checker", preset keys, scale
    [potential]  preset = "constant" | "linear_gravity" | "bump", preset keys
    [forcing]    preset = "zero" | "oscillatory", preset keys
    [run]        t_end, snapshot_interval, checkpoint_interval, out_dir, name, seed, ...
    [solver]     tol, max_iter, preconditioner
    [step]       cfl_adv, cfl_chem, dt_max, dt_min, proj_tol, overflow_guard

Only [grid] and [params] are required; everything else has defaults.
"""

from __future__ import annotations

import dataclasses
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict

import numpy as np
import tomli
import tomli_w

from ..diagnostics import DiagnosticSettings
from ..errors import ConfigParseError, ConfigValidationError, InvalidDimensions
from ..grid import Forcing, Grid, Params, ScalarField, SimState, VectorField, make_grid
from ..solvers import PRECONDITIONERS, SolverConfig
from ..stepper import StepConfig

INITIAL_PRESETS = {
    "uniform": {"n0": 1.0, "c0": 1.0},
    "gaussian_bump": {"amplitude": 5.0, "width": 0.2, "center": None, "c0": 1.0},
    "random_perturbed": {"base": 1.0, "noise_amp": 0.1, "seed": None, "c0": 1.0},
    "checker": {"level_a": 1.0, "level_b": 0.5, "block": 4, "c0": 1.0},
}
POTENTIAL_PRESETS = {
    "constant": {"value": 0.0},
    "linear_gravity": {"g": 1.0},
    "bump": {"amplitude": 1.0, "width": 0.2},
}
FORCING_PRESETS = {
    "zero": {},
    "oscillatory": {"amplitude": 0.1, "frequency": 1.0},
}


@dataclass(frozen=True)
class GridSpec:
    nx: int
    ny: int
    lx: float = 1.0
    ly: float = 1.0

    def build(self) -> Grid:
        return make_grid(self.nx, self.ny, self.lx, self.ly)


@dataclass(frozen=True)
class PresetSpec:
    preset: str
    options: Dict[str, Any] = field(default_factory=dict)

    def get(self, key):
        return self.options[key]


@dataclass(frozen=True)
class RunSpec:
    t_end: float = 1.0
    snapshot_interval: float = 0.1
    checkpoint_interval: float = 0.0  # 0 -> final checkpoint only
    out_dir: str = "out"
    name: str = "run"
    seed: int = 0
    window_tau: float = 1.0
    tail_fraction: float = 0.2
    spread_threshold: float = 1.5
    np_cq_p: float = 2.0
    np_cq_q: float = 0.5
    grad_c_p: float = 2.0

    def diagnostic_settings(self) -> DiagnosticSettings:
        return DiagnosticSettings(self.np_cq_p, self.np_cq_q, self.grad_c_p)


@dataclass(frozen=True)
class ScenarioConfig:
    grid: GridSpec
    params: Params
    initial: PresetSpec = PresetSpec("gaussian_bump", dict(INITIAL_PRESETS["gaussian_bump"], scale=1.0))
    potential: PresetSpec = PresetSpec("constant", dict(POTENTIAL_PRESETS["constant"]))
    forcing: PresetSpec = PresetSpec("zero", {})
    run: RunSpec = RunSpec()
    solver: SolverConfig = SolverConfig(preconditioner="spectral")
    step: StepConfig = StepConfig()

    def replace(self, **changes) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)

    def with_scale(self, scale: float) -> "ScenarioConfig":
        opts = dict(self.initial.options, scale=float(scale))
        return self.replace(initial=PresetSpec(self.initial.preset, opts))

    def with_param(self, name: str, value: float, strict: bool = False) -> "ScenarioConfig":
        kw = {f.name: getattr(self.params, f.name) for f in dataclasses.fields(Params) if f.name != "strict"}
        kw[name] = float(value)
        return self.replace(params=Params(**kw, strict=strict))


# ---------------------------------------------------------------------------
# Parsing and validation
# ---------------------------------------------------------------------------

def _number(section, key, value, *, integer=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigValidationError(f"{section}.{key}", "must be a number")
    if integer:
        if isinstance(value, float) and not value.is_integer():
            raise ConfigValidationError(f"{section}.{key}", "must be an integer")
        return int(value)
    if not math.isfinite(value):
        raise ConfigValidationError(f"{section}.{key}", "must be finite")
    return float(value)


def _check_keys(section, table, allowed):
    for key in table:
        if key not in allowed:
            raise ConfigValidationError(f"{section}.{key}", "unknown key")


def _dataclass_section(cls, section, table, int_fields=(), str_fields=(), optional=()):
    names = [f.name for f in dataclasses.fields(cls) if f.name != "strict"]
    _check_keys(section, table, names)
    kw = {}
    for key, value in table.items():
        if key in str_fields:
            if not isinstance(value, str):
                raise ConfigValidationError(f"{section}.{key}", "must be a string")
            kw[key] = value
        elif value is None and key in optional:
            kw[key] = None
        else:
            kw[key] = _number(section, key, value, integer=key in int_fields)
    return kw


def _preset_section(section, table, presets, extra=()):
    table = dict(table)
    name = table.pop("preset", None)
    if name is None:
        name = next(iter(presets)) if section != "initial" else "gaussian_bump"
    if not isinstance(name, str) or name.lower() not in presets:
        raise ConfigValidationError(f"{section}.preset", f"must be one of {sorted(presets)}")
    name = name.lower()
    defaults = dict(presets[name])
    for key in extra:
        defaults.setdefault(key, 1.0)
    _check_keys(section, table, defaults)
    opts = dict(defaults)
    for key, value in table.items():
        if key == "center":
            if not (isinstance(value, list) and len(value) == 2):
                raise ConfigValidationError(f"{section}.center", "must be a list [x, y]")
            opts[key] = [_number(section, key, v) for v in value]
        elif key in ("seed", "block"):
            opts[key] = _number(section, key, value, integer=True)
        else:
            opts[key] = _number(section, key, value)
    return PresetSpec(name, opts)


def _validate(cfg: ScenarioConfig) -> ScenarioConfig:
    try:
        g = cfg.grid.build()
    except InvalidDimensions as exc:
        raise ConfigValidationError("grid", str(exc)) from exc
    ini = cfg.initial.options
    if "c0" in ini and not ini["c0"] > 0:
        raise ConfigValidationError("initial.c0", "must be positive")
    if "n0" in ini and not ini["n0"] > 0:
        raise ConfigValidationError("initial.n0", "must be positive (n0 >= 0 and not identically 0)")
    if not ini.get("scale", 1.0) > 0:
        raise ConfigValidationError("initial.scale", "must be positive")
    p = cfg.initial.preset
    if p == "gaussian_bump":
        if not ini["amplitude"] > 0:
            raise ConfigValidationError("initial.amplitude", "must be positive")
        if not ini["width"] > 0:
            raise ConfigValidationError("initial.width", "must be positive")
    elif p == "random_perturbed":
        if not ini["base"] > 0:
            raise ConfigValidationError("initial.base", "must be positive")
        if not 0 <= ini["noise_amp"] <= 1:
            raise ConfigValidationError("initial.noise_amp", "must lie in [0,1] to keep n0 >= 0")
    elif p == "checker":
        if min(ini["level_a"], ini["level_b"]) < 0 or max(ini["level_a"], ini["level_b"]) <= 0:
            raise ConfigValidationError("initial.level_a", "levels must be >= 0 and not both 0")
        if ini["block"] < 1:
            raise ConfigValidationError("initial.block", "must be >= 1")
    if cfg.potential.preset == "bump" and not cfg.potential.get("width") > 0:
        raise ConfigValidationError("potential.width", "must be positive")
    if cfg.forcing.preset == "oscillatory" and cfg.forcing.get("frequency") < 0:
        raise ConfigValidationError("forcing.frequency", "must be non-negative")
    run = cfg.run
    if not run.t_end > 0:
        raise ConfigValidationError("run.t_end", "must be positive")
    if not 0 < run.snapshot_interval <= run.t_end:
        raise ConfigValidationError("run.snapshot_interval", "must lie in (0, t_end]")
    if run.checkpoint_interval < 0:
        raise ConfigValidationError("run.checkpoint_interval", "must be non-negative")
    if not run.window_tau > 0:
        raise ConfigValidationError("run.window_tau", "must be positive")
    if not 0 < run.tail_fraction <= 1:
        raise ConfigValidationError("run.tail_fraction", "must lie in (0,1]")
    if not run.spread_threshold >= 1:
        raise ConfigValidationError("run.spread_threshold", "must be >= 1")
    if not re.fullmatch(r"[A-Za-z0-9_.\-]+", run.name):
        raise ConfigValidationError("run.name", "use letters, digits, '_', '-', '.' only")
    del g
    return cfg


def config_from_dict(data: Dict[str, Any]) -> ScenarioConfig:
    sections = {"grid", "params", "initial", "potential", "forcing", "run", "solver", "step"}
    for key, value in data.items():
        if key not in sections:
            raise ConfigValidationError(key, "unknown section")
        if not isinstance(value, dict):
            raise ConfigValidationError(key, "must be a table")
    for required in ("grid", "params"):
        if required not in data:
            raise ConfigValidationError(required, "section is required")

    grid_kw = _dataclass_section(GridSpec, "grid", data["grid"], int_fields=("nx", "ny"))
    for req in ("nx", "ny"):
        if req not in grid_kw:
            raise ConfigValidationError(f"grid.{req}", "is required")
    params_kw = _dataclass_section(Params, "params", data["params"])
    params = Params(**params_kw)

    kw = dict(grid=GridSpec(**grid_kw), params=params)
    kw["initial"] = _preset_section("initial", data.get("initial", {}), INITIAL_PRESETS, extra=("scale",))
    kw["potential"] = _preset_section("potential", data.get("potential", {}), POTENTIAL_PRESETS)
    kw["forcing"] = _preset_section("forcing", data.get("forcing", {}), FORCING_PRESETS)
    kw["run"] = RunSpec(**_dataclass_section(RunSpec, "run", data.get("run", {}), int_fields=("seed",),
                                             str_fields=("out_dir", "name")))
    solver_kw = _dataclass_section(SolverConfig, "solver", data.get("solver", {}), int_fields=("max_iter",),
                                   str_fields=("method", "preconditioner"))
    solver_kw.setdefault("preconditioner", "spectral")
    if solver_kw["preconditioner"] not in PRECONDITIONERS:
        raise ConfigValidationError("solver.preconditioner", f"must be one of {sorted(PRECONDITIONERS)}")
    step_kw = _dataclass_section(StepConfig, "step", data.get("step", {}), int_fields=("max_retries",))
    try:
        kw["solver"] = SolverConfig(**solver_kw)
        kw["step"] = StepConfig(**step_kw)
    except ValueError as exc:
        raise ConfigValidationError("solver/step", str(exc)) from exc
    return _validate(ScenarioConfig(**kw))


def parse_config(text: str) -> ScenarioConfig:
    try:
        data = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        line = getattr(exc, "lineno", None)
        if line is None:
            m = re.search(r"line (\d+)", str(exc))
            line = int(m.group(1)) if m else 0
        raise ConfigParseError(line, getattr(exc, "msg", str(exc))) from exc
    return config_from_dict(data)


def load_config(path) -> ScenarioConfig:
    return parse_config(Path(path).read_text())


def config_to_dict(cfg: ScenarioConfig) -> Dict[str, Any]:
    def clean(d):
        return {k: v for k, v in d.items() if v is not None}

    params = {f.name: getattr(cfg.params, f.name) for f in dataclasses.fields(Params) if f.name != "strict"}
    return {
        "grid": dataclasses.asdict(cfg.grid),
        "params": params,
        "initial": clean(dict(cfg.initial.options, preset=cfg.initial.preset)),
        "potential": clean(dict(cfg.potential.options, preset=cfg.potential.preset)),
        "forcing": clean(dict(cfg.forcing.options, preset=cfg.forcing.preset)),
        "run": dataclasses.asdict(cfg.run),
        "solver": clean(dataclasses.asdict(cfg.solver)),
        "step": dataclasses.asdict(cfg.step),
    }


def serialize(cfg: ScenarioConfig) -> str:
    return tomli_w.dumps(config_to_dict(cfg))


# ---------------------------------------------------------------------------
# Presets -> fields
# ---------------------------------------------------------------------------

def initial_state(cfg: ScenarioConfig) -> SimState:
    g = cfg.grid.build()
    x, y = g.cell_centers()
    opts = cfg.initial.options
    preset = cfg.initial.preset
    if preset == "uniform":
        n0 = np.full(x.shape, opts["n0"])
    elif preset == "gaussian_bump":
        cx, cy = opts["center"] if opts.get("center") is not None else (g.lx / 2, g.ly / 2)
        n0 = opts["amplitude"] * np.exp(-((x - cx) ** 2 + (y - cy) ** 2) / opts["width"] ** 2)
    elif preset == "random_perturbed":
        seed = opts["seed"] if opts.get("seed") is not None else cfg.run.seed
        rng = np.random.default_rng(seed)
        n0 = opts["base"] * (1.0 + opts["noise_amp"] * rng.uniform(-1.0, 1.0, size=x.shape))
    elif preset == "checker":
        b = opts["block"]
        i, j = np.meshgrid(np.arange(g.nx) // b, np.arange(g.ny) // b, indexing="ij")
        n0 = np.where((i + j) % 2 == 0, opts["level_a"], opts["level_b"])
    else:
        raise ConfigValidationError("initial.preset", f"unknown preset {preset!r}")
    scale = opts.get("scale", 1.0)
    n = ScalarField(g, scale * np.asarray(n0, dtype=float))
    c = ScalarField(g, np.full(x.shape, scale * opts["c0"]))
    return SimState(0.0, n, c, VectorField.zeros(g))


class OscillatoryForce:
    """f = A sin(2 pi w t) * (-(y - yc), x - xc) / R, a rotational (non-gradient) body force with |f| <= A."""

    def __init__(self, amplitude, frequency, lx, ly):
        self.amplitude = amplitude
        self.frequency = frequency
        self.xc, self.yc = lx / 2, ly / 2
        self.radius = 0.5 * math.hypot(lx, ly)

    def __call__(self, x, y, t):
        s = self.amplitude * math.sin(2 * math.pi * self.frequency * t) / self.radius
        return -s * (y - self.yc), s * (x - self.xc)


def build_forcing(cfg: ScenarioConfig) -> Forcing:
    g = cfg.grid.build()
    x, y = g.cell_centers()
    pot = cfg.potential
    if pot.preset == "constant":
        phi = np.full(x.shape, pot.get("value"))
    elif pot.preset == "linear_gravity":
        phi = pot.get("g") * y
    else:
        phi = pot.get("amplitude") * np.exp(-((x - g.lx / 2) ** 2 + (y - g.ly / 2) ** 2) / pot.get("width") ** 2)
    f = None
    if cfg.forcing.preset == "oscillatory":
        f = OscillatoryForce(cfg.forcing.get("amplitude"), cfg.forcing.get("frequency"), g.lx, g.ly)
    return Forcing(ScalarField(g, phi), f)
