"""Single-trace tracking on a magnitude spectrogram via dynamic programming.

The tracker maximizes trace energy plus a Markov smoothness term: the score
of a trace ``f`` is ``sum_n Z[f(n), n] + lam * (log prior(f(0)) +
sum_n log P(f(n-1) -> f(n)))``.  A forward pass builds an accumulated score
map column by column; backtracking from the best entry of the last column
recovers the optimal trace.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

NEG_INF = float("-inf")

UNIFORM_BAND = "uniform_band"
EXPLICIT_MATRIX = "explicit_matrix"


class ConstraintUnsatisfiableError(RuntimeError):
    """Raised when region scaling hits its round cap without the trace
    entering every requested region.  Carries the last trace found."""

    def __init__(self, message: str, trace: np.ndarray):
        super().__init__(message)
        self.trace = trace


@dataclass(frozen=True)
class TransitionModel:
    """Markov prior on frame-to-frame bin movement.

    ``uniform_band`` allows steps of at most ``k`` bins, all equally likely
    with probability ``1/(2k+1)``.  Rows clipped at the spectrum edge are
    deliberately not renormalized: every feasible step then carries the same
    log-probability, so the regularization weight ``lam`` shifts each column
    of the accumulated map by a constant and cannot change the optimal trace
    (nor can rescaling the spectrogram).

    ``explicit_matrix`` takes arbitrary prior/transition probabilities.
    Zero-probability entries are stored as a -inf sentinel that survives
    multiplication by any ``lam`` (including 0) and never wins a max, so
    forbidden transitions stay forbidden.
    """

    kind: str
    k: int = 0
    lam: float = 1.0
    log_prior: np.ndarray | None = field(default=None, repr=False)
    log_trans: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind not in (UNIFORM_BAND, EXPLICIT_MATRIX):
            raise ValueError(f"unknown transition model kind: {self.kind!r}")
        if self.lam < 0:
            raise ValueError("lam must be nonnegative")
        if self.kind == UNIFORM_BAND:
            if self.k < 0:
                raise ValueError("band half-width k must be nonnegative")
        else:
            if self.log_prior is None or self.log_trans is None:
                raise ValueError("explicit_matrix requires log_prior and log_trans")

    @staticmethod
    def uniform_band(k: int, lam: float = 1.0) -> "TransitionModel":
        return TransitionModel(kind=UNIFORM_BAND, k=int(k), lam=float(lam))

    @staticmethod
    def explicit(prior: np.ndarray, trans: np.ndarray, lam: float = 1.0) -> "TransitionModel":
        """Build from probabilities. ``trans[i, j]`` is P(bin i -> bin j)."""
        prior = np.asarray(prior, dtype=float)
        trans = np.asarray(trans, dtype=float)
        m = prior.size
        if trans.shape != (m, m):
            raise ValueError("transition matrix must be MxM matching the prior")
        if np.any(prior < 0) or np.any(trans < 0):
            raise ValueError("probabilities must be nonnegative")
        if not np.isclose(prior.sum(), 1.0, atol=1e-8):
            raise ValueError("prior must sum to 1")
        if not np.allclose(trans.sum(axis=1), 1.0, atol=1e-8):
            raise ValueError("each transition row must sum to 1")
        with np.errstate(divide="ignore"):
            return TransitionModel(
                kind=EXPLICIT_MATRIX,
                lam=float(lam),
                log_prior=np.log(prior),
                log_trans=np.log(trans),
            )

    @property
    def m(self) -> int | None:
        return None if self.log_prior is None else self.log_prior.size

    def check_bins(self, m: int) -> None:
        if self.kind == EXPLICIT_MATRIX and self.m != m:
            raise ValueError(f"model has {self.m} bins, spectrogram has {m}")

    def scaled_prior(self, m: int) -> np.ndarray:
        """``lam * log prior`` with -inf preserved for zero probability."""
        if self.kind == UNIFORM_BAND:
            return np.full(m, self.lam * np.log(1.0 / m))
        lp = self.log_prior
        return np.where(np.isneginf(lp), NEG_INF, self.lam * lp)

    def scaled_trans(self) -> np.ndarray:
        """``lam * log_trans`` with -inf preserved (explicit_matrix only)."""
        lt = self.log_trans
        return np.where(np.isneginf(lt), NEG_INF, self.lam * lt)

    def step_cost(self) -> float:
        """Per-step ``lam * log(1/(2k+1))`` (uniform_band only)."""
        return self.lam * np.log(1.0 / (2 * self.k + 1))

    def log_path_prob(self, trace: np.ndarray, m: int) -> float:
        """Unscaled log probability of a trace: prior plus transition terms."""
        trace = np.asarray(trace)
        if self.kind == UNIFORM_BAND:
            if trace.size > 1 and np.any(np.abs(np.diff(trace)) > self.k):
                return NEG_INF
            return np.log(1.0 / m) + (trace.size - 1) * np.log(1.0 / (2 * self.k + 1))
        total = self.log_prior[trace[0]]
        for a, b in zip(trace[:-1], trace[1:]):
            total += self.log_trans[a, b]
        return float(total)


@dataclass(frozen=True)
class AccumulatedMap:
    """Forward DP state: per-entry best accumulated score and the
    predecessor bin that achieved it (lowest bin on ties, -1 in column 0)."""

    values: np.ndarray
    argmax_prev: np.ndarray


@dataclass(frozen=True)
class ConstraintRegion:
    """Per-frame bin ranges (inclusive) the trace should pass through."""

    frame_lo: int
    frame_hi: int
    bin_lo: np.ndarray
    bin_hi: np.ndarray

    def __post_init__(self):
        n = self.frame_hi - self.frame_lo + 1
        if n < 1:
            raise ValueError("frame range must contain at least one frame")
        if self.bin_lo.shape != (n,) or self.bin_hi.shape != (n,):
            raise ValueError("per-frame bin bounds must match the frame range")
        if np.any(self.bin_lo > self.bin_hi):
            raise ValueError("bin_lo must not exceed bin_hi")

    @staticmethod
    def rect(frames: tuple[int, int], bins: tuple[int, int]) -> "ConstraintRegion":
        n1, n2 = int(frames[0]), int(frames[1])
        m1, m2 = int(bins[0]), int(bins[1])
        count = n2 - n1 + 1
        return ConstraintRegion(
            frame_lo=n1,
            frame_hi=n2,
            bin_lo=np.full(count, m1, dtype=int),
            bin_hi=np.full(count, m2, dtype=int),
        )

    @staticmethod
    def ellipse(center_frame: float, center_bin: float,
                radius_frames: float, radius_bins: float) -> "ConstraintRegion":
        """Rasterize an ellipse to per-frame bin ranges, rounding outward."""
        n1 = int(np.ceil(center_frame - radius_frames))
        n2 = int(np.floor(center_frame + radius_frames))
        if n2 < n1:
            n1 = n2 = int(round(center_frame))
        lows, highs = [], []
        for n in range(n1, n2 + 1):
            u = (n - center_frame) / radius_frames if radius_frames > 0 else 0.0
            u = min(1.0, abs(u))
            half = radius_bins * np.sqrt(max(0.0, 1.0 - u * u))
            lows.append(int(np.floor(center_bin - half)))
            highs.append(int(np.ceil(center_bin + half)))
        return ConstraintRegion(frame_lo=n1, frame_hi=n2,
                                bin_lo=np.array(lows), bin_hi=np.array(highs))

    @staticmethod
    def from_json(obj: dict) -> "ConstraintRegion":
        return ConstraintRegion.rect(tuple(obj["frames"]), tuple(obj["bins"]))

    def to_json(self) -> dict:
        return {
            "frames": [int(self.frame_lo), int(self.frame_hi)],
            "bins": [int(self.bin_lo.min()), int(self.bin_hi.max())],
        }

    def clipped(self, m: int, n: int) -> "ConstraintRegion":
        """Clip to matrix bounds; raises if nothing remains."""
        lo = max(0, self.frame_lo)
        hi = min(n - 1, self.frame_hi)
        if hi < lo:
            raise ValueError("constraint region lies outside the spectrogram")
        off = lo - self.frame_lo
        cnt = hi - lo + 1
        return ConstraintRegion(
            frame_lo=lo,
            frame_hi=hi,
            bin_lo=np.clip(self.bin_lo[off:off + cnt], 0, m - 1),
            bin_hi=np.clip(self.bin_hi[off:off + cnt], 0, m - 1),
        )

    def satisfied_by(self, trace: np.ndarray) -> bool:
        """True when the trace enters the region on at least one frame."""
        seg = trace[self.frame_lo:self.frame_hi + 1]
        cnt = seg.size
        return bool(np.any((seg >= self.bin_lo[:cnt]) & (seg <= self.bin_hi[:cnt])))

    def scale_inplace(self, z: np.ndarray, factor: float) -> None:
        for i, n in enumerate(range(self.frame_lo, self.frame_hi + 1)):
            z[self.bin_lo[i]:self.bin_hi[i] + 1, n] *= factor


def _band_max(prev: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Max of ``prev`` over a sliding window of half-width ``k`` plus the
    argmax, ties resolved to the lowest bin."""
    m = prev.size
    best = np.full(m, NEG_INF)
    barg = np.zeros(m, dtype=np.int64)
    idx = np.arange(m, dtype=np.int64)
    for d in range(-k, k + 1):
        lo, hi = max(0, -d), min(m, m - d)
        if lo >= hi:
            continue
        cand = prev[lo + d:hi + d]
        take = cand > best[lo:hi]
        best[lo:hi] = np.where(take, cand, best[lo:hi])
        barg[lo:hi] = np.where(take, idx[lo:hi] + d, barg[lo:hi])
    return best, barg


def accumulate(z: np.ndarray, model: TransitionModel) -> AccumulatedMap:
    """Forward pass: best accumulated score for every (bin, frame).

    Column 0 is the spectrogram column plus the scaled log prior; each later
    column adds the best predecessor score (within the band for
    ``uniform_band``) plus the scaled transition term and the spectrogram
    value.  Cost is O(N * M * (2k+1)) for the banded model.
    """
    z = np.asarray(z, dtype=float)
    if z.ndim != 2 or z.size == 0:
        raise ValueError("spectrogram must be a nonempty MxN matrix")
    m, n = z.shape
    model.check_bins(m)
    values = np.empty((m, n))
    prev_arg = np.empty((m, n), dtype=np.int64)
    prev_arg[:, 0] = -1
    values[:, 0] = z[:, 0] + model.scaled_prior(m)
    if model.kind == UNIFORM_BAND:
        step = model.step_cost()
        for col in range(1, n):
            best, barg = _band_max(values[:, col - 1], model.k)
            values[:, col] = best + step + z[:, col]
            prev_arg[:, col] = barg
    else:
        scaled = model.scaled_trans()
        for col in range(1, n):
            scores = values[:, col - 1][:, None] + scaled
            barg = np.argmax(scores, axis=0)
            values[:, col] = scores[barg, np.arange(m)] + z[:, col]
            prev_arg[:, col] = barg
    return AccumulatedMap(values=values, argmax_prev=prev_arg)


def backtrack(amap: AccumulatedMap) -> np.ndarray:
    """Recover the optimal trace from the accumulated map.

    Starts at the best entry of the last column and follows the stored
    predecessors; ties were already resolved to the lowest bin during the
    forward pass.
    """
    values = amap.values
    n = values.shape[1]
    trace = np.empty(n, dtype=np.int64)
    trace[n - 1] = int(np.argmax(values[:, n - 1]))
    for col in range(n - 2, -1, -1):
        trace[col] = amap.argmax_prev[trace[col + 1], col + 1]
    return trace


def trace_energy(z: np.ndarray, trace: np.ndarray) -> float:
    return float(np.asarray(z)[trace, np.arange(trace.size)].sum())


def trace_objective(z: np.ndarray, trace: np.ndarray, model: TransitionModel) -> float:
    """Energy plus scaled log path probability of a trace."""
    z = np.asarray(z)
    lp = model.log_path_prob(trace, z.shape[0])
    if lp == NEG_INF:
        return NEG_INF
    return trace_energy(z, trace) + model.lam * lp


CONSTRAINT_SCALE = 2.0
CONSTRAINT_MAX_ROUNDS = 32


def track_single(
    z: np.ndarray,
    model: TransitionModel,
    constraint: ConstraintRegion | list[ConstraintRegion] | None = None,
    *,
    scale: float = CONSTRAINT_SCALE,
    max_rounds: int = CONSTRAINT_MAX_ROUNDS,
) -> np.ndarray:
    """Solve the regularized tracking problem, optionally forcing the trace
    through constraint regions.

    With constraints, spectrogram entries inside every unsatisfied region
    are doubled and the problem re-solved until each region is hit or the
    round cap is reached, in which case ConstraintUnsatisfiableError is
    raised carrying the last trace.
    """
    z = np.asarray(z, dtype=float)
    if constraint is None:
        return backtrack(accumulate(z, model))
    regions = constraint if isinstance(constraint, (list, tuple)) else [constraint]
    regions = [r.clipped(z.shape[0], z.shape[1]) for r in regions]
    work = z
    trace = backtrack(accumulate(work, model))
    for _ in range(max_rounds):
        unsat = [r for r in regions if not r.satisfied_by(trace)]
        if not unsat:
            return trace
        if work is z:
            work = z.copy()
        for r in unsat:
            r.scale_inplace(work, scale)
        trace = backtrack(accumulate(work, model))
    if all(r.satisfied_by(trace) for r in regions):
        return trace
    raise ConstraintUnsatisfiableError(
        f"constraint not satisfiable within {max_rounds} scaling rounds", trace
    )
