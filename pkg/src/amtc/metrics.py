"""Error metrics for single- and multi-trace frequency estimates."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

TAU_DEFAULT = 0.03
GROSS_DEVIATION = 0.20


@dataclass(frozen=True)
class SingleMetrics:
    rmse: float
    erate: float
    ecount: float

    def to_json(self) -> dict:
        return asdict(self)


def single_metrics(est: np.ndarray, gt: np.ndarray,
                   tau: float = TAU_DEFAULT) -> SingleMetrics:
    """RMSE, mean relative error, and the fraction of frames whose relative
    error exceeds ``tau``.  Frequencies are physical units; ground truth
    must be positive."""
    est = np.asarray(est, dtype=float)
    gt = np.asarray(gt, dtype=float)
    if est.shape != gt.shape or est.ndim != 1 or est.size == 0:
        raise ValueError("estimate and ground truth must be equal-length 1-D")
    if np.any(gt <= 0):
        raise ValueError("ground-truth frequencies must be positive")
    err = est - gt
    rel = np.abs(err) / gt
    return SingleMetrics(
        rmse=float(np.sqrt(np.mean(err ** 2))),
        erate=float(np.mean(rel)),
        ecount=float(np.mean(rel > tau)),
    )


def pearson(a: np.ndarray, b: np.ndarray) -> float:
    """Sample correlation coefficient; raises on zero variance."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.size < 2:
        raise ValueError("need two equal-length sequences of at least 2 points")
    da = a - a.mean()
    db = b - b.mean()
    denom = np.sqrt((da ** 2).sum() * (db ** 2).sum())
    if denom == 0:
        raise ValueError("zero variance input")
    return float((da * db).sum() / denom)


@dataclass(frozen=True)
class MultiMetrics:
    """Voicing-count confusions plus gross/fine frequency deviations.

    ``e_ij`` is the fraction of frames where the true voiced count i was
    reported as j.  On count-matched frames, each true component's relative
    deviation to its nearest estimate is compared against 20%: any excess
    marks the frame gross, otherwise the deviations feed the per-component
    fine averages.  ``e_total`` is the sum of the six confusion terms and
    the gross term.
    """

    e01: float
    e02: float
    e10: float
    e12: float
    e20: float
    e21: float
    e_gross: float
    e_fine: float
    e_total: float
    e_fine_per_trace: tuple[float, ...]

    def to_json(self) -> dict:
        out = asdict(self)
        out["e_fine_per_trace"] = list(self.e_fine_per_trace)
        return out


def multi_metrics(est_freqs: np.ndarray, est_voiced: np.ndarray,
                  gt_freqs: np.ndarray, gt_voiced: np.ndarray) -> MultiMetrics:
    """Multi-trace error bundle over a common frame grid.

    Estimates and ground truth are (L, N) frequency arrays with boolean
    voiced masks; at most two components each.
    """
    est_freqs = np.atleast_2d(np.asarray(est_freqs, dtype=float))
    gt_freqs = np.atleast_2d(np.asarray(gt_freqs, dtype=float))
    est_voiced = np.atleast_2d(np.asarray(est_voiced, dtype=bool))
    gt_voiced = np.atleast_2d(np.asarray(gt_voiced, dtype=bool))
    if est_freqs.shape != est_voiced.shape or gt_freqs.shape != gt_voiced.shape:
        raise ValueError("frequency and voiced arrays must align")
    if est_freqs.shape[1] != gt_freqs.shape[1]:
        raise ValueError("estimate and ground truth must share the frame grid")
    if est_freqs.shape[0] > 2 or gt_freqs.shape[0] > 2:
        raise ValueError("confusion terms are defined for at most 2 components")
    n = gt_freqs.shape[1]
    l_gt = gt_freqs.shape[0]
    confusion = np.zeros((3, 3))
    gross = 0
    fine_sums = np.zeros(l_gt)
    fine_counts = np.zeros(l_gt)
    for frame in range(n):
        true_count = int(gt_voiced[:, frame].sum())
        det_count = int(est_voiced[:, frame].sum())
        if true_count != det_count:
            confusion[true_count, det_count] += 1
            continue
        if true_count == 0:
            continue
        active = np.flatnonzero(est_voiced[:, frame])
        deviations = {}
        for l in np.flatnonzero(gt_voiced[:, frame]):
            ref = gt_freqs[l, frame]
            deviations[l] = np.min(np.abs(est_freqs[active, frame] - ref)) / ref
        if any(d > GROSS_DEVIATION for d in deviations.values()):
            gross += 1
            continue
        for l, d in deviations.items():
            fine_sums[l] += d
            fine_counts[l] += 1
    per_trace = tuple(
        float(fine_sums[l] / fine_counts[l]) if fine_counts[l] else 0.0
        for l in range(l_gt)
    )
    e = confusion / n
    e_gross = gross / n
    parts = (e[0, 1], e[0, 2], e[1, 0], e[1, 2], e[2, 0], e[2, 1])
    return MultiMetrics(
        e01=float(parts[0]), e02=float(parts[1]), e10=float(parts[2]),
        e12=float(parts[3]), e20=float(parts[4]), e21=float(parts[5]),
        e_gross=float(e_gross),
        e_fine=float(sum(per_trace)),
        e_total=float(sum(parts) + e_gross),
        e_fine_per_trace=per_trace,
    )


@dataclass(frozen=True)
class MetricReport:
    """Bundle of whichever metric families a run produced."""

    single: SingleMetrics | None = None
    multi: MultiMetrics | None = None
    pearson_rho: float | None = None

    def to_json(self) -> dict:
        out: dict = {}
        if self.single is not None:
            out.update(self.single.to_json())
        if self.pearson_rho is not None:
            out["pearson_rho"] = self.pearson_rho
        if self.multi is not None:
            out.update(self.multi.to_json())
        return out
