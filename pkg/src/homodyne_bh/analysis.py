"""Post-processing of trajectory records: PSD, jumps, ensemble moments."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import signal as sps


@dataclass(frozen=True)
class PsdEstimate:
    frequencies: np.ndarray
    values: np.ndarray
    segment_length: int
    overlap: float
    window: str

    def integral(self) -> float:
        return float(np.trapezoid(self.values, self.frequencies))

    def write_csv(self, path) -> None:
        _write_rows(path, ("freq", "psd"), zip(self.frequencies, self.values))


def welch_psd(
    samples: np.ndarray,
    dt: float,
    segment_length: int,
    overlap: float = 0.5,
    window: str = "hann",
) -> PsdEstimate:
    """One-sided Welch estimate in density units.

    The normalization makes the frequency integral equal the variance of
    a zero-mean input, so white noise of per-sample variance ``s2`` sits
    at ``2 s2 dt``.
    """
    x = np.asarray(samples, dtype=float)
    if segment_length > x.size:
        raise ValueError(f"segment length {segment_length} exceeds signal length {x.size}")
    if not 0 <= overlap < 1:
        raise ValueError("overlap must lie in [0, 1)")
    noverlap = int(round(overlap * segment_length))
    step = segment_length - noverlap
    if (x.size - segment_length) // step + 1 < 2:
        raise ValueError("need at least two segments")
    f, p = sps.welch(
        x, fs=1.0 / dt, window=window, nperseg=segment_length, noverlap=noverlap,
        detrend="constant", return_onesided=True, scaling="density",
    )
    return PsdEstimate(f, p, segment_length, overlap, window)


def flat_floor_deviation(psd: PsdEstimate, level: float, n_bands: int = 10) -> np.ndarray:
    """Relative deviation of the band-averaged PSD from ``level``.

    The interior bins (DC and Nyquist excluded) are split into ``n_bands``
    contiguous bands.
    """
    interior = psd.values[1:-1]
    bands = np.array_split(interior, n_bands)
    return np.array([b.mean() / level - 1.0 for b in bands])


@dataclass(frozen=True)
class JumpReport:
    times: np.ndarray
    from_labels: np.ndarray
    to_labels: np.ndarray
    residence: np.ndarray
    labels: np.ndarray

    @property
    def count(self) -> int:
        return int(self.times.size)

    def rate(self, duration: float) -> float:
        return self.count / duration

    def write_csv(self, path) -> None:
        _write_rows(path, ("jump_time", "from_label", "to_label"),
                    zip(self.times, self.from_labels, self.to_labels))


def detect_jumps(
    trace: np.ndarray,
    eigenvalues: Sequence[float],
    dwell_min: int = 10,
    hysteresis: float | None = None,
    times: np.ndarray | None = None,
) -> JumpReport:
    """Plateau switches between eigenvalue bins.

    A sample is a switch candidate toward bin ``b`` when it is closer to
    ``b`` than to the current bin by more than ``hysteresis``. The switch
    is accepted once the candidate persists for ``dwell_min`` consecutive
    samples, and is timed at the first of them.
    """
    x = np.asarray(trace, dtype=float)
    if x.size == 0:
        raise ValueError("trace is empty")
    grid = np.unique(np.asarray(eigenvalues, dtype=float))
    if grid.size == 0:
        raise ValueError("eigenvalue grid is empty")
    if hysteresis is None:
        hysteresis = 0.5 * float(np.min(np.diff(grid))) if grid.size > 1 else 0.0
    t = np.arange(x.size, dtype=float) if times is None else np.asarray(times, dtype=float)
    nearest = np.abs(x[:, None] - grid[None, :]).argmin(axis=1)
    dist_near = np.abs(x - grid[nearest])

    current = nearest[0]
    labels = np.empty(x.size, dtype=int)
    jumps, froms, tos = [], [], []
    start, cand, run = 0, -1, 0
    for i in range(x.size):
        b = nearest[i]
        if b != current and dist_near[i] < abs(x[i] - grid[current]) - hysteresis:
            if b == cand:
                run += 1
            else:
                cand, run, start = b, 1, i
            if run >= dwell_min:
                jumps.append(start)
                froms.append(grid[current])
                tos.append(grid[b])
                labels[start : i + 1] = b
                current, cand, run = b, -1, 0
                continue
        else:
            cand, run = -1, 0
        labels[i] = current
    idx = np.array(jumps, dtype=int)
    edges = np.concatenate([[t[0]], t[idx], [t[-1]]])
    return JumpReport(t[idx], np.array(froms), np.array(tos), np.diff(edges), grid[labels])


@dataclass(frozen=True)
class EnsembleStats:
    times: np.ndarray
    mean: np.ndarray
    var: np.ndarray
    stderr: np.ndarray

    def write_csv(self, path) -> None:
        _write_rows(path, ("t", "mean", "var", "stderr"),
                    zip(self.times, self.mean, self.var, self.stderr))


def ensemble_statistics(records, times: np.ndarray | None = None) -> EnsembleStats:
    """Per-time mean, Bessel-corrected variance and standard error.

    ``records`` is a sequence of objects with ``times`` and ``expectation``
    or a plain ``(n_traj, n_t)`` array. Sums are exactly rounded so the
    result does not depend on record order.
    """
    if isinstance(records, np.ndarray):
        data = np.asarray(records, dtype=float)
        grid = np.arange(data.shape[1], dtype=float) if times is None else np.asarray(times)
    else:
        records = list(records)
        if not records:
            raise ValueError("no records")
        grid = np.asarray(records[0].times)
        for r in records[1:]:
            if r.times.shape != grid.shape or not np.array_equal(r.times, grid):
                raise ValueError("records do not share a time grid")
        data = np.array([r.expectation for r in records], dtype=float)
    n = data.shape[0]
    mean = np.array([math.fsum(col) / n for col in data.T])
    if n > 1:
        var = np.array([math.fsum((col - mu) ** 2) / (n - 1) for col, mu in zip(data.T, mean)])
    else:
        var = np.zeros_like(mean)
    return EnsembleStats(grid, mean, var, np.sqrt(var / n))


def relative_std(x: np.ndarray) -> float:
    x = np.asarray(x, dtype=float)
    return float(np.std(x, ddof=1) / abs(np.mean(x)))


def _write_rows(path, header, rows) -> None:
    with open(path, "w", newline="", encoding="ascii") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) for v in row])
