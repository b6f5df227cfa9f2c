"""Iterative multi-trace extraction by carving traces out of the spectrogram.

Each iteration runs the single-trace tracker, tests presence, and then
erases the found trace by multiplying every column with a flipped Gaussian
notch centered on the trace bin.  The notch width adapts to the local
"effective peak": the interval around the trace bin delimited by the
nearest local minimum of the column or local extremum of its first-order
difference.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .dp import ConstraintRegion, TransitionModel, track_single
from .presence import DetectionParams, decide, merge_segments, rer

SIGMA2_FLOOR = 0.25


@dataclass(frozen=True)
class EffectivePeak:
    """Peak interval [m1, m2] (inclusive bins) and its mass-weighted width."""

    m1: int
    m2: int
    sigma2: float


def effective_peak_bounds(column: np.ndarray, f_hat: int) -> tuple[int, int]:
    """Locate the effective-peak interval around ``f_hat``.

    Scanning away from the peak, a bin qualifies as a boundary when it is a
    strict local minimum of the column, or a strict local extremum of the
    first-order difference (minimum on the left side, maximum on the right,
    which catches the inflection where a neighboring component starts to
    rise).  The spectrum edge is the boundary when no interior bin
    qualifies.  Plateaus are not extrema.
    """
    column = np.asarray(column, dtype=float)
    m = column.size
    f = int(f_hat)
    if not 0 <= f < m:
        raise ValueError("trace bin outside the spectrum")
    d = np.diff(column)
    m1 = 0
    for j in range(f - 1, 0, -1):
        if j <= m - 2 and column[j] < column[j - 1] and column[j] < column[j + 1]:
            m1 = j
            break
        if j <= m - 3 and d[j] < d[j - 1] and d[j] < d[j + 1]:
            m1 = j
            break
    m2 = m - 1
    for j in range(f + 1, m - 1):
        if column[j] < column[j - 1] and column[j] < column[j + 1]:
            m2 = j
            break
        if j <= m - 3 and j >= 1 and d[j] > d[j - 1] and d[j] > d[j + 1]:
            m2 = j
            break
    return m1, m2


def effective_peak(column: np.ndarray, f_hat: int) -> EffectivePeak:
    """Bounds plus the mass-weighted squared width of the peak interval.

    The width is floored at SIGMA2_FLOOR bins^2 so the notch stays defined
    for single-bin peaks and zero-mass columns.
    """
    column = np.asarray(column, dtype=float)
    m1, m2 = effective_peak_bounds(column, f_hat)
    bins = np.arange(m1, m2 + 1)
    weights = column[m1:m2 + 1]
    total = weights.sum()
    if total > 0:
        sigma2 = float(weights @ (bins - f_hat) ** 2 / total)
    else:
        sigma2 = 0.0
    return EffectivePeak(m1=m1, m2=m2, sigma2=max(sigma2, SIGMA2_FLOOR))


def compensate(z: np.ndarray, trace: np.ndarray) -> np.ndarray:
    """Erase a trace: multiply each full column by ``1 - exp(-(m - f)^2 /
    (2 sigma^2))`` with the per-frame adaptive width.

    The factor is exactly 0 at the trace bin and strictly below 1
    everywhere, so the output is a contraction of the input.
    """
    z = np.asarray(z, dtype=float)
    m, n = z.shape
    trace = np.asarray(trace)
    if trace.size != n:
        raise ValueError("trace length must match the frame count")
    bins = np.arange(m)
    out = np.empty_like(z)
    for i in range(n):
        f = int(trace[i])
        peak = effective_peak(z[:, i], f)
        factor = 1.0 - np.exp(-((bins - f) ** 2) / (2.0 * peak.sigma2))
        out[:, i] = factor * z[:, i]
    return out


def compensate_column(column: np.ndarray, f_hat: int) -> np.ndarray:
    """Single-column variant of :func:`compensate`."""
    column = np.asarray(column, dtype=float)
    peak = effective_peak(column, f_hat)
    bins = np.arange(column.size)
    return (1.0 - np.exp(-((bins - f_hat) ** 2) / (2.0 * peak.sigma2))) * column


@dataclass(frozen=True)
class MultiTraceResult:
    """Traces in extraction order with their masks and RER statistics."""

    traces: np.ndarray      # (L, N) int bins
    masks: np.ndarray       # (L, N) bool
    rers: np.ndarray        # (L, N) float
    mean_rer: np.ndarray    # (L,) float

    @property
    def n_traces(self) -> int:
        return self.traces.shape[0]

    def to_json(self, f0: float = 0.0, df: float = 1.0) -> dict:
        return {
            "traces": self.traces.astype(int).tolist(),
            "masks": self.masks.astype(int).tolist(),
            "mean_rer": [float(v) for v in self.mean_rer],
            "freq_axis": {"f0": float(f0), "df": float(df)},
        }


def _model_for(models, iteration: int) -> TransitionModel:
    if isinstance(models, TransitionModel):
        return models
    return models[iteration]


def amtc_offline(
    z: np.ndarray,
    n_traces: int,
    models: TransitionModel | Sequence[TransitionModel],
    det: DetectionParams,
    constraints: Mapping[int, Sequence[ConstraintRegion]] | None = None,
) -> MultiTraceResult:
    """Extract ``n_traces`` traces by track / detect / compensate iterations.

    ``models`` may be a single transition model reused every iteration or
    one model per iteration (e.g. a wide band for a motion trace followed
    by a narrow band for a pulse trace).  ``constraints`` maps 1-based
    iteration numbers to regions the corresponding trace must pass through.
    Exactly ``n_traces - 1`` compensations are performed.
    """
    z = np.asarray(z, dtype=float)
    if n_traces < 1:
        raise ValueError("n_traces must be at least 1")
    if not isinstance(models, TransitionModel) and len(models) != n_traces:
        raise ValueError("need one transition model or one per iteration")
    n = z.shape[1]
    traces = np.empty((n_traces, n), dtype=np.int64)
    masks = np.empty((n_traces, n), dtype=bool)
    rers = np.empty((n_traces, n))
    current = z
    for layer in range(n_traces):
        regions = None if constraints is None else constraints.get(layer + 1)
        f = track_single(current, _model_for(models, layer), regions)
        series = rer(current, f, det.delta_f)
        mask = merge_segments(decide(series, det), det.delta1, det.delta2)
        traces[layer] = f
        masks[layer] = mask
        rers[layer] = series
        if layer < n_traces - 1:
            current = compensate(current, f)
    return MultiTraceResult(
        traces=traces, masks=masks, rers=rers, mean_rer=rers.mean(axis=1)
    )


def estimate_trace_count(
    z: np.ndarray,
    l_max: int,
    model: TransitionModel | Sequence[TransitionModel],
    det: DetectionParams,
    rer_threshold: float = 2.41,
) -> int:
    """Number of traces present, judged by the mean RER per iteration.

    Runs ``l_max`` carving iterations and returns one less than the first
    iteration whose mean RER falls below the threshold; ``l_max`` if none
    does.  The default threshold matches the presence-decision default.
    """
    if l_max < 1:
        raise ValueError("l_max must be at least 1")
    result = amtc_offline(z, l_max, model, det)
    for i, value in enumerate(result.mean_rer):
        if value < rer_threshold:
            return i
    return l_max
