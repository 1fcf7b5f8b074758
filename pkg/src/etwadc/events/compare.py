"""Transmission counts of event-triggered runs against continuous feeding."""
from __future__ import annotations

import csv
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from ..validation import check_sigma

COLUMNS = ("sigma", "baseline", "events", "reduction_pct", "tau_min_s", "tau_mean_s",
           "tau_max_s", "log_decrement")


def log_decrement(t, y, window=5.0):
    """Mean logarithmic decrement of ``y`` over the last ``window`` seconds.

    Each swing is a local maximum minus the next local minimum, which makes
    the measure insensitive to offsets. Positive values mean decaying
    oscillations. NaN when fewer than two swings are present.
    """
    t = np.asarray(t)
    y = np.asarray(y)
    ys = y[t >= t[-1] - window]
    inner = ys[1:-1]
    peaks = np.flatnonzero((inner > ys[:-2]) & (inner >= ys[2:])) + 1
    troughs = np.flatnonzero((inner < ys[:-2]) & (inner <= ys[2:])) + 1
    swings = []
    for p in peaks:
        later = troughs[troughs > p]
        if later.size:
            swings.append(ys[p] - ys[later[0]])
    swings = np.asarray(swings)
    if swings.size < 2 or np.any(swings <= 0):
        return float("nan")
    return float(np.log(swings[0] / swings[-1]) / (swings.size - 1))


@dataclass(frozen=True)
class ComparisonRow:
    sigma: float
    baseline: int
    events: int
    reduction_pct: float
    tau_min_s: float
    tau_mean_s: float
    tau_max_s: float
    log_decrement: float


@dataclass(frozen=True)
class ComparisonTable:
    rows: tuple

    def __len__(self):
        return len(self.rows)

    def column(self, name):
        return [getattr(r, name) for r in self.rows]

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(COLUMNS)
            for r in self.rows:
                w.writerow([repr(v) if isinstance(v, float) else v
                            for v in (getattr(r, c) for c in COLUMNS)])

    def to_json(self, path):
        rows = [{k: (None if isinstance(v, float) and not np.isfinite(v) else v)
                 for k, v in asdict(r).items()} for r in self.rows]
        with open(path, "w", newline="\n") as fh:
            json.dump({"columns": list(COLUMNS), "rows": rows}, fh, indent=2, sort_keys=True)
            fh.write("\n")


def summarize(sigma, trace, log, signal="y1"):
    tau = log.tau
    stats = (float(tau.min()), float(tau.mean()), float(tau.max())) if tau.size else (
        float("nan"),) * 3
    return ComparisonRow(float(sigma), log.baseline, log.count,
                         100.0 * (1.0 - log.count / log.baseline), *stats,
                         log_decrement(trace.t, trace.signals[signal]))


def thread_count(n_jobs):
    """Worker threads for ``n_jobs`` runs, capped by ``ETWADC_THREADS``."""
    cap = os.environ.get("ETWADC_THREADS")
    limit = os.cpu_count() or 1
    if cap:
        limit = max(1, int(cap))
    return max(1, min(n_jobs, limit))


def compare_transmissions(run, sigmas, signal="y1", threads=None) -> ComparisonTable:
    """One row per ``sigma``; ``run(sigma)`` returns ``(SimTrace, EventLog)``.

    Runs are independent and may execute on worker threads; rows keep the
    order of ``sigmas``.
    """
    sigmas = [check_sigma(s) for s in sigmas]
    n = thread_count(len(sigmas)) if threads is None else max(1, int(threads))
    if n == 1:
        results = [run(s) for s in sigmas]
    else:
        with ThreadPoolExecutor(max_workers=n) as pool:
            results = list(pool.map(run, sigmas))
    return ComparisonTable(tuple(summarize(s, tr, lg, signal)
                                 for s, (tr, lg) in zip(sigmas, results)))
