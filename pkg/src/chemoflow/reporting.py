"""Verdicts on diagnostic time series.

A run is judged bounded in a column when the maximum over the second half of
the horizon does not exceed the maximum over the middle third by more than
``factor - 1`` of its magnitude.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np

from .diagnostics import CSV_COLUMNS
from .errors import SchemaError

VERDICT_COLUMNS = ("criterion", "pass", "measured", "threshold", "notes")
BOUNDED_COLUMNS = ("max_n", "l2_grad_c", "l2_u", "energy_F")


@dataclass(frozen=True)
class Verdict:
    criterion: str
    passed: bool
    measured: float
    threshold: float
    notes: str = ""

    def row(self):
        return [self.criterion, "PASS" if self.passed else "FAIL", format(self.measured, ".6g"),
                format(self.threshold, ".6g"), self.notes]

    def line(self) -> str:
        return (f"[{'PASS' if self.passed else 'FAIL'}] {self.criterion}: measured {self.measured:.6g}"
                f" vs threshold {self.threshold:.6g}" + (f" ({self.notes})" if self.notes else ""))


@dataclass(frozen=True)
class BoundednessCriterion:
    column: str
    factor: float = 1.05

    @property
    def name(self) -> str:
        return f"bounded:{self.column}"


def read_series(csv_path) -> Dict[str, np.ndarray]:
    """Read a diagnostics CSV into column arrays, enforcing the exact column set."""
    with Path(csv_path).open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError("t", "file is empty") from None
        rows = [r for r in reader if r]
    for col in CSV_COLUMNS:
        if col not in header:
            raise SchemaError(col)
    for col in header:
        if col not in CSV_COLUMNS:
            raise SchemaError(col, f"unexpected column {col!r}")
    data = np.array([[float(v) for v in r] for r in rows], dtype=float).reshape(len(rows), len(header))
    return {name: data[:, i] for i, name in enumerate(header)}


def tail_slope(t: np.ndarray, values: np.ndarray) -> float:
    if len(t) < 2 or np.ptp(t) == 0:
        return 0.0
    return float(np.polyfit(t, values, 1)[0])


def bounded_verdict(t: np.ndarray, values: np.ndarray, crit: BoundednessCriterion) -> Verdict:
    t_end = float(t[-1])
    mid = (t >= t_end / 3) & (t <= 2 * t_end / 3)
    tail = t >= t_end / 2
    if not mid.any() or not tail.any():
        return Verdict(crit.name, False, math.nan, math.nan, "too few samples")
    mid_max = float(np.max(values[mid]))
    tail_max = float(np.max(values[tail]))
    # written so that it reduces to factor * mid_max for positive maxima and stays meaningful for negative ones
    threshold = mid_max + (crit.factor - 1.0) * abs(mid_max)
    finite = bool(np.all(np.isfinite(values)))
    slope = tail_slope(t[tail], values[tail])
    return Verdict(crit.name, finite and tail_max <= threshold, tail_max, threshold,
                   f"tail slope {slope:.3e}")


def summarize(csv_path, criteria: Optional[Sequence[BoundednessCriterion]] = None) -> List[Verdict]:
    series = read_series(csv_path)
    criteria = criteria or [BoundednessCriterion(c) for c in BOUNDED_COLUMNS]
    return [bounded_verdict(series["t"], series[c.column], c) for c in criteria]


def write_verdicts(verdicts: Iterable[Verdict], path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(VERDICT_COLUMNS)
        for v in verdicts:
            w.writerow(v.row())
    return path


def format_table(verdicts: Iterable[Verdict]) -> str:
    return "\n".join(v.line() for v in verdicts)
