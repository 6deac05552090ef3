"""Simulator-independent checks of the computable inequalities behind the boundedness proof.

Each bound is provided in closed form, together with a randomised routine that
integrates the corresponding differential inequality with RK4 and measures
how far the trajectory gets from the bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from .errors import ThresholdNotFound


# ---------------------------------------------------------------------------
# Linear ODI with windowed forcing
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OdiProblem:
    """y' + a y <= h(t) with (1/tau) * int_t^{t+tau} h <= b."""

    a: float
    tau: float
    b: float
    y0: float
    t0: float = 0.0

    def __post_init__(self):
        if not (self.a > 0 and self.tau > 0):
            raise ValueError("a and tau must be positive")
        if self.b < 0 or self.y0 < 0:
            raise ValueError("b and y0 must be non-negative")


def odi_bound(problem: OdiProblem, t: float) -> float:
    if t < problem.t0:
        raise ValueError("t must not precede t0")
    a, tau = problem.a, problem.tau
    return problem.y0 * math.exp(-a * (t - problem.t0)) + problem.b * tau / -math.expm1(-a * tau)


def odi_prime_bound(L1: float, L2: float, L3: float, tau: float) -> float:
    """Bound for y' <= h y + g given window integrals of y, h, g bounded by L1, L2, L3."""
    if min(L1, L2, L3) < 0 or tau <= 0:
        raise ValueError("need L1, L2, L3 >= 0 and tau > 0")
    return L1 * math.exp(L2) / tau + L3 * math.exp(L2)


@dataclass(frozen=True)
class PiecewiseConstant:
    breaks: np.ndarray  # increasing, len m + 1
    values: np.ndarray  # len m

    def __call__(self, t):
        idx = np.clip(np.searchsorted(self.breaks, t, side="right") - 1, 0, len(self.values) - 1)
        return self.values[idx]

    def cumulative(self, t):
        """int_{breaks[0]}^t of the function (t inside the support)."""
        t = np.asarray(t, dtype=float)
        widths = np.diff(self.breaks)
        head = np.concatenate([[0.0], np.cumsum(widths * self.values)])
        idx = np.clip(np.searchsorted(self.breaks, t, side="right") - 1, 0, len(self.values) - 1)
        return head[idx] + self.values[idx] * (t - self.breaks[idx])

    def max_window_integral(self, tau: float) -> float:
        """Exact max over s in [start, end - tau] of int_s^{s + tau}.

        The window integral is piecewise linear in s with kinks where s or
        s + tau meets a breakpoint, so the maximum sits at one of those.
        """
        lo, hi = self.breaks[0], self.breaks[-1] - tau
        cand = np.concatenate([self.breaks, self.breaks - tau, [lo, hi]])
        cand = cand[(cand >= lo) & (cand <= hi)]
        return float(np.max(self.cumulative(cand + tau) - self.cumulative(cand)))


def rk4_piecewise(rhs, y0: float, breaks: np.ndarray, max_step: float):
    """RK4 for y' = rhs(t, y), stepping exactly onto every breakpoint.

    ``rhs`` must be smooth inside each piece; the piece index is passed as a
    third argument so the integrator never samples across a jump.
    """
    ts = [float(breaks[0])]
    ys = [float(y0)]
    y = float(y0)
    for k in range(len(breaks) - 1):
        t0, t1 = float(breaks[k]), float(breaks[k + 1])
        m = max(1, int(math.ceil((t1 - t0) / max_step)))
        dt = (t1 - t0) / m
        for i in range(m):
            t = t0 + i * dt
            k1 = rhs(t, y, k)
            k2 = rhs(t + dt / 2, y + dt / 2 * k1, k)
            k3 = rhs(t + dt / 2, y + dt / 2 * k2, k)
            k4 = rhs(t + dt, y + dt * k3, k)
            y += dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            ts.append(t0 + (i + 1) * dt)
            ys.append(y)
    return np.array(ts), np.array(ys)


def mass_ode_rk4(r: float, mu: float, eta: float, alpha: float, beta: float, n0: float, c0: float,
                 times, step: float = 1e-3):
    """RK4 trajectory of the spatially homogeneous system, sampled at ``times``.

    n' = r n - mu n^2 / log^eta(n + e),  c' = -alpha c + beta n.
    Returns an array of shape (len(times), 2).
    """
    def rhs(y):
        n, c = y
        return np.array([r * n - mu * n * n / math.log(n + math.e) ** eta, -alpha * c + beta * n])

    times = np.asarray(times, dtype=float)
    out = np.empty((len(times), 2))
    y = np.array([n0, c0], dtype=float)
    t = 0.0
    for i, target in enumerate(times):
        m = int(math.ceil((target - t) / step - 1e-9))
        if m > 0:
            h = (target - t) / m
            for _ in range(m):
                k1 = rhs(y)
                k2 = rhs(y + h / 2 * k1)
                k3 = rhs(y + h / 2 * k2)
                k4 = rhs(y + h * k3)
                y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        t = target
        out[i] = y
    return out


def _random_breaks(rng, t0, t1, m):
    inner = np.sort(rng.uniform(t0, t1, size=m - 1))
    return np.concatenate([[t0], inner, [t1]])


def _random_levels(rng, m):
    vals = rng.exponential(1.0, size=m)
    spikes = rng.random(m) < 0.15
    vals[spikes] *= rng.uniform(5.0, 30.0, size=int(spikes.sum()))
    vals[rng.random(m) < 0.2] = 0.0
    return vals


def odi_domination_gap(rng: np.random.Generator, max_step: float = 0.01):
    """One random admissible instance of the linear ODI; returns (max excess, problem).

    Excess is max over the trajectory of y(t) - odi_bound(t); it should be <= 0.
    """
    a = rng.uniform(0.1, 3.0)
    tau = rng.uniform(0.2, 2.0)
    t0 = rng.uniform(-1.0, 1.0)
    t_end = t0 + tau * rng.uniform(3.0, 10.0)
    m = int(rng.integers(5, 40))
    breaks = _random_breaks(rng, t0, t_end, m)
    h = PiecewiseConstant(breaks, _random_levels(rng, m))
    b = rng.uniform(0.1, 5.0)
    peak = h.max_window_integral(tau) / tau
    if peak > 0:
        h = PiecewiseConstant(breaks, h.values * (b / peak))
    problem = OdiProblem(a=a, tau=tau, b=b, y0=rng.uniform(0.0, 5.0), t0=t0)
    vals = h.values
    ts, ys = rk4_piecewise(lambda t, y, k: -a * y + vals[k], problem.y0, breaks, max_step)
    bound = problem.y0 * np.exp(-a * (ts - t0)) + b * tau / -math.expm1(-a * tau)
    return float(np.max(ys - bound)), problem


def odi_prime_domination_gap(rng: np.random.Generator, max_step: float = 0.005):
    """One random instance of y' = h y + g; returns (max excess over the bound, (L1, L2, L3, tau))."""
    a = 0.0
    t_end = rng.uniform(2.5, 10.0)
    tau = min(1.0, (t_end - a) / 2)
    m = int(rng.integers(5, 40))
    breaks = _random_breaks(rng, a, t_end, m)
    h = PiecewiseConstant(breaks, _random_levels(rng, m))
    g = PiecewiseConstant(breaks, _random_levels(rng, m))
    h_target = rng.uniform(0.05, 2.0)
    peak = h.max_window_integral(tau)
    if peak > 0:
        h = PiecewiseConstant(breaks, h.values * (h_target / peak))
    L2 = max(h.max_window_integral(tau), 1e-300)
    L3 = max(g.max_window_integral(tau), 1e-300)
    hv, gv = h.values, g.values
    y0 = rng.uniform(0.0, 3.0)
    ts, ys = rk4_piecewise(lambda t, y, k: hv[k] * y + gv[k], y0, breaks, max_step)

    # window integrals of y from the trapezoid cumulative on the RK4 nodes
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (ys[1:] + ys[:-1]) * np.diff(ts))])
    starts = ts[ts <= t_end - tau]
    win = np.interp(starts + tau, ts, cum) - np.interp(starts, ts, cum)
    L1 = float(np.max(win))
    bound = odi_prime_bound(L1, L2, L3, tau)
    return float(np.max(ys) - bound), (L1, L2, L3, tau)


# ---------------------------------------------------------------------------
# Threshold for the logarithmic comparison g(s) <= (6/5) h(s)
# ---------------------------------------------------------------------------

GROWTH_FACTOR = 6.0 / 5.0


def log_terms(s, r, mu, eta):
    """The pair (g(s), h(s)) compared in the L log L estimate."""
    s = np.asarray(s, dtype=float)
    ls = np.log(s) + 1.0
    lse = np.log(s + math.e)
    g = r * s * ls + 5.0 * mu / 6.0 * s * s * lse ** (1.0 - eta)
    h = 5.0 * mu / 6.0 * s * s * ls / lse**eta
    return g, h


def log_ratio(s, r, mu, eta):
    g, h = log_terms(s, r, mu, eta)
    return g / h


def geometric_scan(s_max: float, ratio: float = 1.01, start: float = math.e + 1e-6,
                   s_min: Optional[float] = None):
    lo = start if s_min is None else max(start, s_min)
    m = int(math.floor(math.log(s_max / lo) / math.log(ratio)))
    pts = lo * ratio ** np.arange(m + 1)
    return pts[pts <= s_max]


@dataclass(frozen=True)
class ThresholdReport:
    N: float
    ratio_at_smax: float
    sup_ratio: float      # smallest constant C with g <= C h on the whole scan
    tail_decreasing: bool


def threshold_report(r: float, mu: float, eta: float, s_max: float, ratio: float = 1.01) -> ThresholdReport:
    if not (r > 0 and mu > 0 and 0 < eta < 1):
        raise ValueError("need r, mu > 0 and 0 < eta < 1")
    if not s_max > math.e:
        raise ValueError("s_max must exceed e")
    s = geometric_scan(s_max, ratio)
    g, h = log_terms(s, r, mu, eta)
    ok = g <= GROWTH_FACTOR * h
    if not ok[-1]:
        raise ThresholdNotFound(f"g > (6/5) h still at s = {s[-1]:.6g}")
    bad = np.flatnonzero(~ok)
    N = float(s[0] if bad.size == 0 else s[bad[-1] + 1])
    q = g / h
    tail_ratio = float(log_ratio(s_max, r, mu, eta))
    if not 0.9 <= tail_ratio <= GROWTH_FACTOR:
        raise ThresholdNotFound(f"g/h = {tail_ratio:.6g} at s_max is outside [0.9, 1.2]")
    tail = q[s >= N]
    return ThresholdReport(N=N, ratio_at_smax=tail_ratio, sup_ratio=float(np.max(q)),
                           tail_decreasing=bool(np.all(np.diff(tail) <= 0)))


def log_threshold(r: float, mu: float, eta: float, s_max: float) -> float:
    """First scan point N > e from which g(s) <= (6/5) h(s) holds at every scanned s >= N."""
    return threshold_report(r, mu, eta, s_max).N


# ---------------------------------------------------------------------------
# Young-type inequality  x y <= x ln x + e^{y - 1}
# ---------------------------------------------------------------------------

def young_log_slack(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return x * np.log(x) + np.exp(y - 1.0) - x * y


def young_log_check(x, y):
    """True where x y <= x ln x + e^{y-1} up to roundoff (1e-12 relative to the term sizes)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.any(x <= 0):
        raise ValueError("x must be positive")
    scale = np.maximum(1.0, np.abs(x * np.log(x)) + np.exp(y - 1.0) + np.abs(x * y))
    ok = young_log_slack(x, y) >= -1e-12 * scale
    return bool(ok) if ok.ndim == 0 else ok


# ---------------------------------------------------------------------------
# Suite
# ---------------------------------------------------------------------------

@dataclass
class LemmaCheck:
    name: str
    passed: bool
    measured: float
    threshold: float
    notes: str = ""


def run_lemma_suite(seed: int = 0, instances: int = 100, young_samples: int = 10**6) -> List[LemmaCheck]:
    rng = np.random.default_rng(seed)
    out = []

    gaps = [odi_domination_gap(rng)[0] for _ in range(instances)]
    worst = max(gaps)
    out.append(LemmaCheck("odi_bound dominates RK4", worst <= 1e-8, worst, 1e-8,
                          f"{instances} random piecewise-constant forcings"))

    gaps = [odi_prime_domination_gap(rng)[0] for _ in range(instances)]
    worst = max(gaps)
    out.append(LemmaCheck("odi_prime_bound dominates RK4", worst <= 1e-8, worst, 1e-8,
                          f"{instances} random (h, g) pairs"))

    x = rng.uniform(0.0, 1e3, size=young_samples)
    x[x == 0.0] = 1e-300
    y = rng.uniform(-10.0, 10.0, size=young_samples)
    ok = young_log_check(x, y)
    fails = int(np.count_nonzero(~ok))
    out.append(LemmaCheck("young_log_check", fails == 0, float(fails), 0.0,
                          f"{young_samples} samples on (0,1e3]x[-10,10]"))

    try:
        rep = threshold_report(1.0, 1.0, 0.5, 1e10)
        tail = float(log_ratio(1e8, 1.0, 1.0, 0.5))
        passed = math.isfinite(rep.N) and 0.9 < tail < 1.2
        out.append(LemmaCheck("log_threshold finite N", passed, rep.N, 1e10,
                              f"g/h(1e8) = {tail:.6f}; sup ratio on scan = {rep.sup_ratio:.4f}"))
    except ThresholdNotFound as exc:
        out.append(LemmaCheck("log_threshold finite N", False, math.inf, 1e10, str(exc)))
    return out
