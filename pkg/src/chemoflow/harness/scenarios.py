"""Long-time runs, the absorbing-set experiment and parameter sweeps."""

from __future__ import annotations

import csv
import dataclasses
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from ..diagnostics import CSV_COLUMNS, DiagnosticsRecord, SpaceTimeWindows, accumulate, snapshot
from ..errors import AbsorbingAborted, ConfigValidationError, SimulationError
from ..grid import Params, SimState
from ..stepper import step
from .checkpoint import write_checkpoint
from .config import ScenarioConfig, build_forcing, initial_state

log = logging.getLogger(__name__)

TAIL_QUANTITIES = ("max_n", "linf_grad_c", "linf_u")
SNAP_TOL = 1e-9


@dataclass
class RunSummary:
    steps: int = 0
    min_dt: float = math.inf
    max_dt: float = 0.0
    clamp_activations: int = 0
    retries: int = 0
    blowup: bool = False
    blowup_reason: str = ""
    min_n: float = math.inf
    min_c: float = math.inf
    max_divergence: float = 0.0
    wall_seconds: float = 0.0


@dataclass
class RunResult:
    config: ScenarioConfig
    records: List[DiagnosticsRecord]
    summary: RunSummary
    final_state: SimState
    csv_path: Optional[Path] = None
    checkpoint_path: Optional[Path] = None

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records])


def format_value(v: float) -> str:
    return format(v, ".17g")


def write_csv(records: Sequence[DiagnosticsRecord], path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for rec in records:
            w.writerow([format_value(v) for v in rec.csv_row()])
    return path


def run_scenario(cfg: ScenarioConfig, out_dir=None, write: bool = True) -> RunResult:
    """Integrate ``cfg`` to ``t_end``, recording diagnostics at every snapshot time.

    Steps are shortened so snapshots land exactly on multiples of the
    snapshot interval. A suspected blow-up ends the run early and is reported
    in the summary instead of raised.
    """
    started = time.perf_counter()
    run = cfg.run
    params = cfg.params
    forcing = build_forcing(cfg)
    state = initial_state(cfg)
    windows = SpaceTimeWindows(run.window_tau)
    settings = run.diagnostic_settings()
    out = Path(out_dir if out_dir is not None else run.out_dir)

    summary = RunSummary()
    records = [snapshot(state, params, windows, settings)]
    n_snap = max(1, int(round(run.t_end / run.snapshot_interval)))
    targets = [min(run.t_end, k * run.snapshot_interval) for k in range(1, n_snap + 1)]
    if targets[-1] < run.t_end:
        targets.append(run.t_end)
    next_ckpt = run.checkpoint_interval if run.checkpoint_interval > 0 else math.inf
    ckpt_paths = []

    try:
        for target in targets:
            while state.t < target:
                cap = target - state.t
                new, rep = step(state, params, forcing, cfg.step, cfg.solver, dt_cap=cap)
                accumulate(windows, state, params, rep.dt_used)
                if target - new.t <= SNAP_TOL * max(1.0, target):
                    new.t = target  # avoid a round-off sliver step before the snapshot
                state = new
                summary.steps += 1
                summary.min_dt = min(summary.min_dt, rep.dt_used)
                summary.max_dt = max(summary.max_dt, rep.dt_used)
                summary.clamp_activations += rep.clamp_activations
                summary.retries += rep.retries
                summary.min_n = min(summary.min_n, rep.min_n)
                summary.min_c = min(summary.min_c, rep.min_c)
                summary.max_divergence = max(summary.max_divergence, rep.max_divergence)
            rec = snapshot(state, params, windows, settings)
            records.append(rec)
            if not rec.is_finite():
                raise SimulationError(f"non-finite diagnostics at t = {state.t:.6g}")
            if write and state.t >= next_ckpt - 1e-12:
                ckpt_paths.append(write_checkpoint(state, out / f"{run.name}_t{state.t:.6g}.ckpt"))
                next_ckpt += run.checkpoint_interval
    except SimulationError as exc:
        summary.blowup = True
        summary.blowup_reason = f"{type(exc).__name__}: {exc}"
        log.warning("run %s stopped at t = %.6g: %s", run.name, state.t, summary.blowup_reason)

    result = RunResult(cfg, records, summary, state)
    if write:
        result.csv_path = write_csv(records, out / f"{run.name}.csv")
        result.checkpoint_path = write_checkpoint(state, out / f"{run.name}.ckpt")
    summary.wall_seconds = time.perf_counter() - started
    return result


# ---------------------------------------------------------------------------
# Absorbing-set experiment
# ---------------------------------------------------------------------------

def tail_maxima(result: RunResult, fraction: float = 0.2) -> Dict[str, float]:
    """Maximum of each tracked quantity over the last ``fraction`` of the time horizon."""
    t = result.column("t")
    t_end = result.config.run.t_end
    mask = t >= t_end * (1.0 - fraction) - 1e-12
    return {q: float(np.max(result.column(q)[mask])) for q in TAIL_QUANTITIES}


def spread_ratio(values: Sequence[float]) -> float:
    values = np.asarray(values, dtype=float)
    lo, hi = float(np.min(values)), float(np.max(values))
    if hi == lo:
        return 1.0
    if lo <= 0.0:
        return math.inf
    return hi / lo


@dataclass
class AbsorbingReport:
    scales: List[float]
    tail: Dict[float, Dict[str, float]]
    spreads: Dict[str, float]
    threshold: float
    results: Dict[float, RunResult] = field(default_factory=dict, repr=False)

    @property
    def passed(self) -> bool:
        return all(s <= self.threshold for s in self.spreads.values())

    @property
    def worst_spread(self) -> float:
        return max(self.spreads.values())


def _run_scaled(args):
    cfg, scale, out_dir, write = args
    scaled = cfg.with_scale(scale)
    scaled = scaled.replace(run=_renamed(scaled.run, f"{cfg.run.name}_scale{scale:g}"))
    return scale, run_scenario(scaled, out_dir, write)


def _renamed(run, name):
    return dataclasses.replace(run, name=name)


def _map(fn, jobs, workers):
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, jobs))
    return [fn(j) for j in jobs]


def absorbing_experiment(cfg: ScenarioConfig, scales: Sequence[float], out_dir=None, workers: int = 1,
                         write: bool = True, precomputed: Optional[Dict[float, RunResult]] = None
                         ) -> AbsorbingReport:
    """Run ``cfg`` with n0 and c0 multiplied by each scale and compare tail maxima.

    The spread of a quantity is max/min of its tail maxima across scales.
    ``precomputed`` lets a caller reuse runs it already has (keyed by scale).
    """
    scales = [float(s) for s in scales]
    if len(scales) < 3:
        raise ConfigValidationError("scales", "need at least 3 scales")
    if any(not s > 0 for s in scales):
        raise ConfigValidationError("scales", "scales must be positive")
    if max(scales) / min(scales) < 10:
        log.warning("scales %s span less than one order of magnitude", scales)
    results = dict(precomputed or {})
    todo = sorted({s for s in scales if s not in results})
    for scale, res in _map(_run_scaled, [(cfg, s, out_dir, write) for s in todo], workers):
        results[scale] = res
    for s in set(scales):
        if results[s].summary.blowup:
            raise AbsorbingAborted(s, results[s].summary.blowup_reason)
    tail = {s: tail_maxima(results[s], cfg.run.tail_fraction) for s in set(scales)}
    spreads = {q: spread_ratio([tail[s][q] for s in scales]) for q in TAIL_QUANTITIES}
    return AbsorbingReport(scales, tail, spreads, cfg.run.spread_threshold, results)


# ---------------------------------------------------------------------------
# Parameter sweeps
# ---------------------------------------------------------------------------

SWEEP_COLUMNS = ("param", "value", "in_hypothesis", "blowup", "t_reached", "tail_max_n",
                 "tail_linf_grad_c", "tail_linf_u", "reason")


def _run_sweep_point(args):
    cfg, param, value, out_dir, write = args
    point = cfg.with_param(param, value, strict=False)
    point = point.replace(run=_renamed(point.run, f"{cfg.run.name}_{param}{value:g}"))
    res = run_scenario(point, out_dir, write)
    if res.summary.blowup:
        tails = {q: math.nan for q in TAIL_QUANTITIES}
    else:
        tails = tail_maxima(res, cfg.run.tail_fraction)
    return {
        "param": param, "value": float(value), "in_hypothesis": point.params.in_hypothesis,
        "blowup": res.summary.blowup, "t_reached": res.final_state.t,
        "tail_max_n": tails["max_n"], "tail_linf_grad_c": tails["linf_grad_c"],
        "tail_linf_u": tails["linf_u"], "reason": res.summary.blowup_reason,
    }


def sweep(cfg: ScenarioConfig, param: str, values: Sequence[float], out_dir=None, workers: int = 1,
          write: bool = True) -> List[dict]:
    """Run ``cfg`` once per value of ``param``; values outside the hypothesis regime are allowed."""
    names = {f for f in Params.__dataclass_fields__ if f != "strict"}
    if param not in names:
        raise ConfigValidationError("param", f"must be one of {sorted(names)}")
    rows = _map(_run_sweep_point, [(cfg, param, float(v), out_dir, write) for v in values], workers)
    if write:
        path = Path(out_dir if out_dir is not None else cfg.run.out_dir) / f"{cfg.run.name}_sweep_{param}.csv"
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=SWEEP_COLUMNS, lineterminator="\n")
            w.writeheader()
            for row in rows:
                w.writerow({k: format_value(v) if isinstance(v, float) else v for k, v in row.items()})
    return rows
