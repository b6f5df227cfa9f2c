"""Detection and tracking of weak frequency traces in noisy spectrograms.

The core pipeline: build a magnitude spectrogram (:mod:`amtc.ingest`),
extract the dominant trace by banded dynamic programming (:mod:`amtc.dp`),
decide per-frame presence (:mod:`amtc.presence`), and carve traces out
iteratively for multi-component signals (:mod:`amtc.carve`).  A bounded-
buffer streaming variant lives in :mod:`amtc.online`; synthesis and
evaluation utilities in :mod:`amtc.synth` and :mod:`amtc.metrics`.
"""

from .carve import (
    MultiTraceResult,
    amtc_offline,
    compensate,
    effective_peak,
    effective_peak_bounds,
    estimate_trace_count,
)
from .dp import (
    AccumulatedMap,
    ConstraintRegion,
    ConstraintUnsatisfiableError,
    TransitionModel,
    accumulate,
    backtrack,
    track_single,
    trace_objective,
)
from .ingest import (
    Spectrogram,
    StftConfig,
    TimeSeries,
    compute_spectrogram,
    harmonic_combine,
    load_timeseries,
)
from .metrics import MetricReport, multi_metrics, pearson, single_metrics
from .online import OnlineEstimate, OnlineParams, OnlineTracker, track_stream
from .presence import DetectionParams, decide, detect_presence, merge_segments, rer
from .synth import SynthConfig, TraceSpec, ground_truth_on_frames, synthesize

__version__ = "0.1.0"

__all__ = [
    "AccumulatedMap",
    "ConstraintRegion",
    "ConstraintUnsatisfiableError",
    "DetectionParams",
    "MetricReport",
    "MultiTraceResult",
    "OnlineEstimate",
    "OnlineParams",
    "OnlineTracker",
    "Spectrogram",
    "StftConfig",
    "SynthConfig",
    "TimeSeries",
    "TraceSpec",
    "TransitionModel",
    "accumulate",
    "amtc_offline",
    "backtrack",
    "compensate",
    "compute_spectrogram",
    "decide",
    "detect_presence",
    "effective_peak",
    "effective_peak_bounds",
    "estimate_trace_count",
    "ground_truth_on_frames",
    "harmonic_combine",
    "load_timeseries",
    "merge_segments",
    "multi_metrics",
    "pearson",
    "rer",
    "single_metrics",
    "synthesize",
    "trace_objective",
    "track_single",
    "track_stream",
]
