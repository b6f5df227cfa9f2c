"""Per-frame voiced/unvoiced decisions for an estimated trace.

The test statistic is the relative energy ratio (RER): the magnitude at the
trace bin divided by the mean background magnitude, where the background
excludes a ``delta_f`` neighborhood around the trace.  Raw threshold
decisions are then cleaned up by absorbing short unvoiced gaps and short
voiced blips.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DELTA_RER_DEFAULT = 2.41
DELTA_F_DEFAULT = 10
DELTA1_DEFAULT = 30
DELTA2_DEFAULT = 30


@dataclass(frozen=True)
class DetectionParams:
    delta_rer: float = DELTA_RER_DEFAULT
    delta_f: int = DELTA_F_DEFAULT
    delta1: int = DELTA1_DEFAULT
    delta2: int = DELTA2_DEFAULT

    def __post_init__(self):
        if self.delta_rer <= 0:
            raise ValueError("delta_rer must be positive")
        if self.delta_f < 0 or self.delta1 < 0 or self.delta2 < 0:
            raise ValueError("delta_f, delta1, delta2 must be nonnegative")


def rer(z: np.ndarray, trace: np.ndarray, delta_f: int) -> np.ndarray:
    """Relative energy ratio per frame.

    ``rer[n] = |F| * Z[f(n), n] / sum_{m in F} Z[m, n]`` where ``F`` is the
    bin set excluding the clipped window ``[f(n)-delta_f, f(n)+delta_f]``.
    A frame whose background sums to zero yields +inf if the peak is
    positive, else 1 (no evidence either way).
    """
    z = np.asarray(z, dtype=float)
    trace = np.asarray(trace)
    m, n = z.shape
    if trace.size != n:
        raise ValueError("trace length must match the frame count")
    if 2 * delta_f + 1 >= m:
        raise ValueError("delta_f too large: background set would be empty")
    totals = z.sum(axis=0)
    out = np.empty(n)
    for i in range(n):
        f = int(trace[i])
        lo = max(0, f - delta_f)
        hi = min(m - 1, f + delta_f)
        bg_sum = totals[i] - z[lo:hi + 1, i].sum()
        bg_count = m - (hi - lo + 1)
        peak = z[f, i]
        if bg_sum <= 0.0:
            out[i] = np.inf if peak > 0 else 1.0
        else:
            out[i] = bg_count * peak / bg_sum
    return out


def decide(rers: np.ndarray, params: DetectionParams) -> np.ndarray:
    """Threshold the RER series; the comparison is inclusive."""
    return np.asarray(rers) >= params.delta_rer


def _runs(mask: np.ndarray) -> list[tuple[bool, int, int]]:
    """Run-length encode as (value, start, length) triples."""
    runs = []
    start = 0
    for i in range(1, mask.size + 1):
        if i == mask.size or mask[i] != mask[start]:
            runs.append((bool(mask[start]), start, i - start))
            start = i
    return runs


def merge_segments(mask: np.ndarray, delta1: int, delta2: int) -> np.ndarray:
    """Absorb short runs, in two fixed passes.

    Pass 1 turns every unvoiced run strictly shorter than ``delta1`` that is
    flanked by voiced runs on both sides into voiced; pass 2 does the
    symmetric absorption of voiced runs shorter than ``delta2`` on the
    pass-1 output.  Runs touching either boundary are never absorbed.
    """
    mask = np.asarray(mask, dtype=bool).copy()
    if mask.size == 0:
        return mask
    runs = _runs(mask)
    for i, (value, start, length) in enumerate(runs):
        if not value and 0 < i < len(runs) - 1 and length < delta1:
            mask[start:start + length] = True
    runs = _runs(mask)
    for i, (value, start, length) in enumerate(runs):
        if value and 0 < i < len(runs) - 1 and length < delta2:
            mask[start:start + length] = False
    return mask


def detect_presence(z: np.ndarray, trace: np.ndarray,
                    params: DetectionParams) -> tuple[np.ndarray, np.ndarray]:
    """Full pipeline: RER series plus the merged voiced mask."""
    series = rer(z, trace, params.delta_f)
    mask = merge_segments(decide(series, params), params.delta1, params.delta2)
    return series, mask
