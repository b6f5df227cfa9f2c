"""Near-real-time multi-trace tracking over a bounded rolling window.

Frames arrive one at a time; estimates for frame ``n`` are emitted once
frame ``n + k2`` has been seen (``k2`` is the tolerated delay) and may use
``k1`` frames of look-back.  Per layer, the tracker keeps fixed-length
buffers of compensated spectrogram columns, accumulated-score columns, and
the previous backtrack.  A new frame extends the first layer's score map by
one column; backtracking walks left only until it reproduces the previous
estimate, at which point the remainder is reused and deeper layers
recompute only the changed span.  Memory and per-frame work are therefore
independent of the stream length.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .carve import compensate_column
from .dp import EXPLICIT_MATRIX, TransitionModel, _band_max
from .presence import DetectionParams, decide, merge_segments, rer


@dataclass(frozen=True)
class OnlineParams:
    """Window geometry and per-layer models; buffers hold k1+k2+1 columns."""

    k1: int
    k2: int
    n_traces: int = 1
    models: TransitionModel | tuple[TransitionModel, ...] = TransitionModel.uniform_band(3)
    det: DetectionParams = field(default_factory=DetectionParams)

    def __post_init__(self):
        if self.k1 < 0 or self.k2 < 0:
            raise ValueError("k1 and k2 must be nonnegative")
        if self.n_traces < 1:
            raise ValueError("n_traces must be at least 1")
        models = self.models
        if isinstance(models, TransitionModel):
            models = (models,) * self.n_traces
        else:
            models = tuple(models)
            if len(models) != self.n_traces:
                raise ValueError("need one model or one per trace")
        object.__setattr__(self, "models", models)

    @property
    def window(self) -> int:
        return self.k1 + self.k2 + 1


@dataclass(frozen=True)
class OnlineEstimate:
    frame: int
    bins: np.ndarray
    voiced: np.ndarray


class _Layer:
    __slots__ = ("z", "g", "f", "f_base", "mask", "mask_base")

    def __init__(self):
        self.z: list[np.ndarray] = []
        self.g: list[np.ndarray] = []
        self.f: np.ndarray | None = None
        self.f_base = 0
        self.mask: np.ndarray | None = None
        self.mask_base = 0


class OnlineTracker:
    """Single-owner streaming state; feed columns with :meth:`push`, then
    drain the look-ahead span with :meth:`finalize`."""

    def __init__(self, params: OnlineParams, n_bins: int):
        if n_bins < 1:
            raise ValueError("n_bins must be at least 1")
        self.params = params
        self.n_bins = n_bins
        for model in params.models:
            model.check_bins(n_bins)
        self._layers = [_Layer() for _ in range(params.n_traces)]
        self._priors = [m.scaled_prior(n_bins) for m in params.models]
        self._scaled_trans = [
            m.scaled_trans() if m.kind == EXPLICIT_MATRIX else None
            for m in params.models
        ]
        self._base = 0          # absolute index of the first buffered column
        self._count = 0         # frames pushed so far
        self.last_backtrack_steps = 0   # layer-1 loop steps on the last push

    # -- model-step helpers -------------------------------------------------

    def _dp_step(self, layer: int, g_prev: np.ndarray) -> np.ndarray:
        """Best predecessor score per bin plus the scaled transition term."""
        model = self.params.models[layer]
        if model.kind == EXPLICIT_MATRIX:
            return (g_prev[:, None] + self._scaled_trans[layer]).max(axis=0)
        best, _ = _band_max(g_prev, model.k)
        return best + model.step_cost()

    def _bt_step(self, layer: int, g_col: np.ndarray, f_next: int) -> int:
        """One backtrack step: best bin feeding ``f_next``, lowest on ties."""
        model = self.params.models[layer]
        if model.kind == EXPLICIT_MATRIX:
            return int(np.argmax(g_col + self._scaled_trans[layer][:, f_next]))
        lo = max(0, f_next - model.k)
        hi = min(self.n_bins - 1, f_next + model.k)
        return lo + int(np.argmax(g_col[lo:hi + 1]))

    # -- buffer plumbing -----------------------------------------------------

    def _rel(self, abs_index: int) -> int:
        return abs_index - self._base

    def _set_z(self, layer: _Layer, abs_index: int, col: np.ndarray) -> None:
        i = self._rel(abs_index)
        if i == len(layer.z):
            layer.z.append(col)
        else:
            layer.z[i] = col

    def _set_g(self, layer: _Layer, abs_index: int, col: np.ndarray) -> None:
        i = self._rel(abs_index)
        if i == len(layer.g):
            layer.g.append(col)
        else:
            layer.g[i] = col

    def _evict_to(self, keep_from: int) -> None:
        drop = keep_from - self._base
        if drop <= 0:
            return
        for layer in self._layers:
            del layer.z[:drop]
            del layer.g[:drop]
        self._base = keep_from

    @property
    def buffered_columns(self) -> int:
        return max(len(layer.z) for layer in self._layers)

    # -- streaming interface ---------------------------------------------------

    def push(self, frame: np.ndarray) -> OnlineEstimate | None:
        """Ingest one spectrogram column; returns the estimate for frame
        ``t - k2`` once enough look-ahead has accumulated, else None."""
        frame = np.asarray(frame, dtype=float)
        if frame.shape != (self.n_bins,):
            raise ValueError(f"frame must have length {self.n_bins}")
        params = self.params
        t = self._count
        self._count += 1
        tau1 = max(0, t - (params.k1 + params.k2))

        first = self._layers[0]
        if t == 0:
            g_new = frame + self._priors[0]
        else:
            g_new = self._dp_step(0, first.g[self._rel(t - 1)]) + frame
        self._set_z(first, t, frame)
        self._set_g(first, t, g_new)

        te = t - 1
        for li, layer in enumerate(self._layers):
            nxt = self._layers[li + 1] if li + 1 < params.n_traces else None
            f_cur = np.empty(t - tau1 + 1, dtype=np.int64)
            f_cur[t - tau1] = int(np.argmax(layer.g[self._rel(t)]))
            for i in range(t - 1, te, -1):
                f_cur[i - tau1] = self._bt_step(li, layer.g[self._rel(i)],
                                                int(f_cur[i + 1 - tau1]))
            if nxt is not None:
                for i in range(max(te + 1, tau1), t + 1):
                    self._set_z(nxt, i, compensate_column(
                        layer.z[self._rel(i)], int(f_cur[i - tau1])))
            prev_f, prev_base = layer.f, layer.f_base
            broke = False
            steps = 0
            for i in range(te, tau1 - 1, -1):
                steps += 1
                f_cur[i - tau1] = self._bt_step(li, layer.g[self._rel(i)],
                                                int(f_cur[i + 1 - tau1]))
                if nxt is not None:
                    self._set_z(nxt, i, compensate_column(
                        layer.z[self._rel(i)], int(f_cur[i - tau1])))
                if (prev_f is not None and prev_base <= i
                        and f_cur[i - tau1] == prev_f[i - prev_base]):
                    # The score columns left of i are untouched, so the rest
                    # of the previous backtrack is still optimal.
                    count = i - tau1
                    f_cur[:count] = prev_f[tau1 - prev_base:i - prev_base]
                    if nxt is not None:
                        g_prev = nxt.g[self._rel(i)]
                        for j in range(i + 1, t + 1):
                            g_col = self._dp_step(li + 1, g_prev) + nxt.z[self._rel(j)]
                            self._set_g(nxt, j, g_col)
                            g_prev = g_col
                    te = i
                    broke = True
                    break
            if li == 0:
                self.last_backtrack_steps = steps
            if not broke:
                if te < tau1:
                    # Window of one column: extend the next layer's map
                    # incrementally, exactly like the first layer's append.
                    if nxt is not None:
                        if t == 0:
                            self._set_g(nxt, 0, nxt.z[self._rel(0)] + self._priors[li + 1])
                        else:
                            g_col = (self._dp_step(li + 1, nxt.g[self._rel(t - 1)])
                                     + nxt.z[self._rel(t)])
                            self._set_g(nxt, t, g_col)
                else:
                    # Estimates changed through the window start: rebuild the
                    # next layer's map over the whole window from the prior.
                    if nxt is not None:
                        g_col = nxt.z[self._rel(tau1)] + self._priors[li + 1]
                        self._set_g(nxt, tau1, g_col)
                        for j in range(tau1 + 1, t + 1):
                            g_col = self._dp_step(li + 1, g_col) + nxt.z[self._rel(j)]
                            self._set_g(nxt, j, g_col)
                    te = tau1
            z_win = np.stack([layer.z[self._rel(i)] for i in range(tau1, t + 1)], axis=1)
            series = rer(z_win, f_cur, params.det.delta_f)
            mask = merge_segments(decide(series, params.det),
                                  params.det.delta1, params.det.delta2)
            layer.f = f_cur
            layer.f_base = tau1
            layer.mask = mask
            layer.mask_base = tau1

        self._evict_to(tau1)
        emit_at = t - params.k2
        if emit_at < 0:
            return None
        return self._estimate_for(emit_at)

    def _estimate_for(self, n: int) -> OnlineEstimate:
        bins = np.array([layer.f[n - layer.f_base] for layer in self._layers],
                        dtype=np.int64)
        voiced = np.array([layer.mask[n - layer.mask_base] for layer in self._layers],
                          dtype=bool)
        return OnlineEstimate(frame=n, bins=bins, voiced=voiced)

    def finalize(self) -> list[OnlineEstimate]:
        """Estimates for frames still inside the look-ahead span, from the
        final buffered state; no new information is incorporated."""
        if self._count == 0:
            return []
        t = self._count - 1
        start = max(0, t - self.params.k2 + 1)
        return [self._estimate_for(n) for n in range(start, t + 1)]


def track_stream(frames: Sequence[np.ndarray] | np.ndarray,
                 params: OnlineParams) -> list[OnlineEstimate]:
    """Run the tracker over a whole stream: push everything, then finalize."""
    frames = np.asarray(frames, dtype=float)
    if frames.ndim != 2:
        raise ValueError("frames must be (N, M) or a sequence of columns")
    tracker = OnlineTracker(params, frames.shape[1])
    out: list[OnlineEstimate] = []
    for row in frames:
        est = tracker.push(row)
        if est is not None:
            out.append(est)
    out.extend(tracker.finalize())
    return out
