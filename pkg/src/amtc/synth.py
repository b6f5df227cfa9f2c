"""Ground-truth signal synthesis for benchmarks.

Generates sums of phase-accumulated sinusoids with configurable frequency
processes, optional unvoiced gaps, and white Gaussian noise calibrated to a
target SNR.  Everything is driven by one seed so trials reproduce exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .carve import effective_peak_bounds
from .ingest import Spectrogram, TimeSeries

CONSTANT = "constant"
RANDOM_WALK = "random_walk"
AR = "ar"
PIECEWISE = "piecewise"


@dataclass(frozen=True)
class TraceSpec:
    """One synthetic frequency component.

    ``freq`` is the constant frequency, walk start, or AR baseline in Hz.
    ``step_std`` is the per-sample random-walk standard deviation (Hz).
    ``unvoiced`` silences the sinusoid over a [t1, t2] interval in seconds.
    """

    process: str = CONSTANT
    freq: float = 1.0
    step_std: float = 0.0
    ar_coeffs: tuple[float, ...] = ()
    ar_noise_std: float = 0.0
    times: tuple[float, ...] = ()
    freqs: tuple[float, ...] = ()
    amplitude: float = 1.0
    unvoiced: tuple[float, float] | None = None

    def __post_init__(self):
        if self.process not in (CONSTANT, RANDOM_WALK, AR, PIECEWISE):
            raise ValueError(f"unknown frequency process: {self.process!r}")
        if self.amplitude <= 0:
            raise ValueError("amplitude must be positive")
        if self.process == PIECEWISE and len(self.times) != len(self.freqs):
            raise ValueError("piecewise times and freqs must pair up")


@dataclass(frozen=True)
class SynthConfig:
    duration_s: float
    sample_rate_hz: float
    traces: tuple[TraceSpec, ...] = ()
    snr_db: float | None = None
    noise_std: float | None = None
    freq_lo: float = 0.0
    freq_hi: float = np.inf
    seed: int = 0

    def __post_init__(self):
        if self.duration_s <= 0 or self.sample_rate_hz <= 0:
            raise ValueError("duration and sample rate must be positive")
        if self.snr_db is not None and self.noise_std is not None:
            raise ValueError("give snr_db or noise_std, not both")
        if self.snr_db is not None and not self.traces:
            raise ValueError("snr_db needs at least one trace; use noise_std")


@dataclass(frozen=True)
class TraceTruth:
    """Per-sample ground truth for one synthesized component."""

    freq_hz: np.ndarray
    voiced: np.ndarray
    sample_rate_hz: float


def _freq_track(spec: TraceSpec, count: int, fs: float, lo: float, hi: float,
                rng: np.random.Generator) -> np.ndarray:
    if spec.process == CONSTANT:
        return np.full(count, spec.freq)
    if spec.process == RANDOM_WALK:
        steps = rng.normal(0.0, spec.step_std, count)
        steps[0] = 0.0
        walk = spec.freq + np.cumsum(steps)
        return np.clip(walk, lo, hi)
    if spec.process == AR:
        order = len(spec.ar_coeffs)
        noise = rng.normal(0.0, spec.ar_noise_std, count)
        x = np.zeros(count)
        for n in range(count):
            acc = noise[n]
            for i, a in enumerate(spec.ar_coeffs, start=1):
                if n - i >= 0:
                    acc += a * x[n - i]
            x[n] = acc
        return np.clip(spec.freq + x, lo, hi)
    t = np.arange(count) / fs
    return np.clip(np.interp(t, spec.times, spec.freqs), lo, hi)


def synthesize(cfg: SynthConfig) -> tuple[TimeSeries, list[TraceTruth]]:
    """Generate the noisy signal and per-sample ground truth.

    Each component accumulates phase as ``phi[n] = phi[n-1] +
    2*pi*f[n]/fs`` and is zeroed inside its unvoiced interval.  Noise
    variance is set so total sinusoid power over noise power matches
    ``snr_db`` (components count whether voiced or not), unless
    ``noise_std`` pins it directly.
    """
    rng = np.random.default_rng(cfg.seed)
    fs = cfg.sample_rate_hz
    count = int(round(cfg.duration_s * fs))
    if count < 1:
        raise ValueError("duration too short for one sample")
    signal = np.zeros(count)
    truths = []
    t = np.arange(count) / fs
    for spec in cfg.traces:
        freq = _freq_track(spec, count, fs, cfg.freq_lo, cfg.freq_hi, rng)
        phase0 = rng.uniform(0.0, 2.0 * np.pi)
        phase = phase0 + 2.0 * np.pi * np.cumsum(freq) / fs
        voiced = np.ones(count, dtype=bool)
        if spec.unvoiced is not None:
            t1, t2 = spec.unvoiced
            voiced &= ~((t >= t1) & (t < t2))
        signal += spec.amplitude * np.sin(phase) * voiced
        truths.append(TraceTruth(freq_hz=freq, voiced=voiced, sample_rate_hz=fs))
    if cfg.noise_std is not None:
        sigma = cfg.noise_std
    elif cfg.snr_db is not None:
        power = sum(s.amplitude ** 2 / 2.0 for s in cfg.traces)
        sigma = float(np.sqrt(power / 10.0 ** (cfg.snr_db / 10.0)))
    else:
        sigma = 0.0
    if sigma > 0:
        signal = signal + rng.normal(0.0, sigma, count)
    return TimeSeries(samples=signal, sample_rate_hz=fs), truths


def ground_truth_on_frames(truths: Sequence[TraceTruth],
                           spect: Spectrogram) -> tuple[np.ndarray, np.ndarray]:
    """Sample per-sample truth at each frame's center time.

    Returns ``(freqs, voiced)`` arrays of shape (L, N) aligned with the
    spectrogram frame grid.
    """
    n = spect.n_frames
    centers = np.asarray(spect.time_of_frame(np.arange(n)), dtype=float)
    freqs = np.empty((len(truths), n))
    voiced = np.empty((len(truths), n), dtype=bool)
    for i, truth in enumerate(truths):
        idx = np.clip(np.rint(centers * truth.sample_rate_hz).astype(int),
                      0, truth.freq_hz.size - 1)
        freqs[i] = truth.freq_hz[idx]
        voiced[i] = truth.voiced[idx]
    return freqs, voiced


def measure_trs(values: np.ndarray, bins_a: np.ndarray, bins_b: np.ndarray) -> float:
    """Trace relative separation: bin distance over mean effective-peak width.

    Width is the extent of the effective-peak interval around each trace
    bin; the ratio is averaged over frames.
    """
    values = np.asarray(values, dtype=float)
    n = values.shape[1]
    ratios = np.empty(n)
    for i in range(n):
        a1, a2 = effective_peak_bounds(values[:, i], int(bins_a[i]))
        b1, b2 = effective_peak_bounds(values[:, i], int(bins_b[i]))
        width = ((a2 - a1) + (b2 - b1)) / 2.0
        ratios[i] = abs(int(bins_a[i]) - int(bins_b[i])) / max(width, 1.0)
    return float(ratios.mean())
