"""Empirical-distribution machinery and convergence-report generation.

Weak convergence of the normalized processes is operationalized as marginal
Kolmogorov-Smirnov proximity at grid times (plus the sup-over-grid path
functional), judged against conservative DKW thresholds.
"""
from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import timechange
from .errors import HorizonExceeded
from .limitproc import LimitSpec, limit_timechange_values
from .pathsim import RngStream

DEFAULT_ALPHA = 0.01
DEFAULT_INTERNAL_STEPS = 100_000

PASS = "pass"
FAIL = "fail"
INCOMPLETE = "incomplete"

SUP_LABEL = "sup"


@dataclass(frozen=True)
class EmpiricalSample:
    """One marginal at one time point across many replicates."""

    values: np.ndarray
    meta: tuple = ()

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", vals)
        if vals.size < 1 or not np.all(np.isfinite(vals)):
            raise ValueError("sample must be nonempty and finite")


def ecdf(sample: EmpiricalSample, x: float) -> float:
    """Right-continuous empirical CDF: fraction of values <= x."""
    srt = np.sort(sample.values)
    return float(np.searchsorted(srt, x, side="right")) / srt.size


def ks_two_sample(a: EmpiricalSample, b: EmpiricalSample) -> float:
    """Exact sup_x |ECDF_a(x) - ECDF_b(x)| via a sorted merge."""
    xa = np.sort(a.values)
    xb = np.sort(b.values)
    pooled = np.concatenate([xa, xb])
    ca = np.searchsorted(xa, pooled, side="right") / xa.size
    cb = np.searchsorted(xb, pooled, side="right") / xb.size
    return float(np.max(np.abs(ca - cb)))


def dkw_threshold(n_a: int, n_b: int, alpha: float = DEFAULT_ALPHA) -> float:
    """Two-sample union-bound DKW critical value at level alpha."""
    if n_a < 1 or n_b < 1:
        raise ValueError("sample sizes must be >= 1")
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    return math.sqrt(math.log(2.0 / alpha) / 2.0) * math.sqrt(
        1.0 / n_a + 1.0 / n_b)


# ---------------------------------------------------------------------------
# Ensembles
# ---------------------------------------------------------------------------

def _rep_id(cell_index: int, r: int) -> int:
    # Disjoint 64-bit replicate namespaces per cell keep parallel schedules
    # byte-deterministic.
    return (cell_index << 32) + r


def normalized_ensemble(model, n: float, grid, replicates: int,
                        master_seed: int, cell_index: int, dt: float,
                        max_steps: int = timechange.MAX_TOTAL_STEPS) -> np.ndarray:
    """Matrix (replicates, len(grid)) of X_n marginals at the grid times."""
    grid = np.asarray(grid, dtype=float)
    out = np.empty((replicates, grid.size))
    for r in range(replicates):
        stream = RngStream(master_seed, _rep_id(cell_index, r))
        path = timechange.simulate_normalized(model, n, grid, stream, dt,
                                              max_steps=max_steps)
        out[r] = path.values[:grid.size]
    return out


def limit_ensemble(spec: LimitSpec, grid, replicates: int, master_seed: int,
                   cell_index: int, dt: float) -> np.ndarray:
    """Matrix (replicates, len(grid)) of limit-process marginals."""
    grid = np.asarray(grid, dtype=float)
    out = np.empty((replicates, grid.size))
    for r in range(replicates):
        stream = RngStream(master_seed, _rep_id(cell_index, r))
        out[r] = limit_timechange_values(stream, spec, grid, dt)
    return out


# ---------------------------------------------------------------------------
# Convergence report
# ---------------------------------------------------------------------------

@dataclass
class Cell:
    n: float
    label: str          # a grid time rendered as text, or "sup"
    ks: float | None
    threshold: float
    verdict: str


@dataclass
class ConvergenceReport:
    ladder: list
    grid: list
    replicates: int
    alpha: float
    cells: list = field(default_factory=list)
    trends: dict = field(default_factory=dict)
    config_echo: dict = field(default_factory=dict)

    @property
    def all_pass(self) -> bool:
        return all(c.verdict != FAIL for c in self.cells)

    @property
    def overall(self) -> str:
        """Run verdict: ladder trends hold and every final-n cell passes.

        Early-ladder cells are allowed to exceed the threshold; they document
        the approach, not the limit.
        """
        final_n = self.ladder[-1]
        finals_ok = all(c.verdict == PASS for c in self.cells
                        if c.n == final_n)
        return PASS if (finals_ok and all(self.trends.values())) else FAIL

    def cell(self, n: float, label: str) -> Cell:
        for c in self.cells:
            if c.n == n and c.label == label:
                return c
        raise KeyError((n, label))

    def to_dict(self) -> dict:
        return {
            "config_echo": self.config_echo,
            "ladder": self.ladder,
            "grid": self.grid,
            "replicates": self.replicates,
            "alpha": self.alpha,
            "cells": [{"n": c.n, "t": c.label, "ks": c.ks,
                       "threshold": c.threshold, "verdict": c.verdict}
                      for c in self.cells],
            "trends": self.trends,
            "overall": self.overall,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def _trend_ok(series: Sequence[float | None]) -> bool:
    """Strictly decreasing along the ladder, allowing one inversion."""
    vals = [v for v in series if v is not None]
    if len(vals) < 2:
        return True
    inversions = sum(1 for lo, hi in zip(vals, vals[1:]) if hi >= lo)
    return inversions <= 1


def _label(t: float) -> str:
    return f"{t:g}"


def convergence_report(model, spec: LimitSpec, ladder, grid,
                       replicates: int, master_seed: int,
                       dt: float = 1e-3,
                       internal_steps: int = DEFAULT_INTERNAL_STEPS,
                       alpha: float = DEFAULT_ALPHA,
                       jobs: int = 1,
                       config_echo: dict | None = None,
                       sample_sink: list | None = None) -> ConvergenceReport:
    """KS-vs-DKW verdicts for the normalized process against its limit.

    For each n in the ladder the normalized process and the limit process are
    sampled with independent per-cell streams derived from master_seed; the
    report is identical for any parallel schedule.
    """
    ladder = [float(n) for n in ladder]
    grid = np.asarray(grid, dtype=float)
    labels = [_label(t) for t in grid] + [SUP_LABEL]
    threshold = dkw_threshold(replicates, replicates, alpha)
    t_max = float(grid[-1])

    def run_cell(i: int, n: float):
        est = timechange._estimated_horizon(model, n * t_max)
        cell_dt = max(dt, est / internal_steps)
        try:
            xs = normalized_ensemble(model, n, grid, replicates,
                                     master_seed, 2 * i, cell_dt)
        except HorizonExceeded:
            return None, None
        ys = limit_ensemble(spec, grid, replicates, master_seed,
                            2 * i + 1, dt)
        return xs, ys

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(lambda args: run_cell(*args),
                                    enumerate(ladder)))
    else:
        results = [run_cell(i, n) for i, n in enumerate(ladder)]

    report = ConvergenceReport(ladder=ladder, grid=[float(t) for t in grid],
                               replicates=replicates, alpha=alpha,
                               config_echo=config_echo or {})
    ks_by_label = {lab: [] for lab in labels}
    for n, (xs, ys) in zip(ladder, results):
        if sample_sink is not None and xs is not None:
            sample_sink.append(("normalized", n, grid, xs))
            sample_sink.append(("limit", n, grid, ys))
        if xs is None:
            for lab in labels:
                report.cells.append(Cell(n, lab, None, threshold, INCOMPLETE))
                ks_by_label[lab].append(None)
            continue
        cols = [(lab, xs[:, j], ys[:, j])
                for j, lab in enumerate(labels[:-1])]
        cols.append((SUP_LABEL, np.max(np.abs(xs), axis=1),
                     np.max(np.abs(ys), axis=1)))
        for lab, xcol, ycol in cols:
            d = ks_two_sample(EmpiricalSample(xcol), EmpiricalSample(ycol))
            verdict = PASS if d <= threshold else FAIL
            report.cells.append(Cell(n, lab, d, threshold, verdict))
            ks_by_label[lab].append(d)
    report.trends = {lab: _trend_ok(ks_by_label[lab]) for lab in labels}
    return report
