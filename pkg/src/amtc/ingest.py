"""Signal ingestion and spectrogram construction.

Loads WAV/CSV time series, computes rectangular-window STFT magnitude maps
restricted to a caller-chosen frequency range, and combines harmonic bands
into a single strip weighted by local SNR.
"""

from __future__ import annotations

import io
import wave
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np


class IngestError(Exception):
    """Base class for ingestion failures."""


class FileUnreadableError(IngestError):
    pass


class MalformedDataError(IngestError):
    pass


class UnsupportedEncodingError(IngestError):
    pass


class EmptyInputError(IngestError):
    pass


@dataclass(frozen=True)
class TimeSeries:
    samples: np.ndarray
    sample_rate_hz: float

    def __post_init__(self):
        object.__setattr__(self, "samples", np.asarray(self.samples, dtype=float))
        if self.sample_rate_hz <= 0:
            raise ValueError("sample_rate_hz must be positive")
        if self.samples.ndim != 1 or self.samples.size < 1:
            raise ValueError("samples must be a nonempty 1-D sequence")

    @property
    def duration_s(self) -> float:
        return self.samples.size / self.sample_rate_hz


@dataclass(frozen=True)
class Spectrogram:
    """Nonnegative magnitude matrix with affine physical axis maps.

    ``values`` is M frequency bins by N time frames; bin ``m`` maps to
    ``f0 + df * m`` (Hz or any frequency-like unit) and frame ``n`` to its
    window-center time ``t0 + dt * n`` seconds.
    """

    values: np.ndarray
    f0: float
    df: float
    t0: float
    dt: float

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))
        if self.values.ndim != 2 or self.values.size == 0:
            raise ValueError("values must be a nonempty MxN matrix")
        if np.any(self.values < 0):
            raise ValueError("magnitudes must be nonnegative")
        if self.df <= 0:
            raise ValueError("df must be positive")

    @property
    def n_bins(self) -> int:
        return self.values.shape[0]

    @property
    def n_frames(self) -> int:
        return self.values.shape[1]

    def freq_of_bin(self, m) -> np.ndarray | float:
        return self.f0 + self.df * np.asarray(m, dtype=float)

    def time_of_frame(self, n) -> np.ndarray | float:
        return self.t0 + self.dt * np.asarray(n, dtype=float)

    def bin_of_freq(self, freq) -> np.ndarray | int:
        return np.rint((np.asarray(freq, dtype=float) - self.f0) / self.df).astype(int)


RECTANGULAR = "rectangular"


@dataclass(frozen=True)
class StftConfig:
    window_len_s: float
    overlap_fraction: float = 0.0
    zero_pad_factor: float = 1.0
    window_shape: str = RECTANGULAR

    def __post_init__(self):
        if self.window_len_s <= 0:
            raise ValueError("window_len_s must be positive")
        if not 0.0 <= self.overlap_fraction < 1.0:
            raise ValueError("overlap_fraction must be in [0, 1)")
        if self.zero_pad_factor < 1.0:
            raise ValueError("zero_pad_factor must be at least 1")
        if self.window_shape != RECTANGULAR:
            raise ValueError("only the rectangular window is supported")


def load_timeseries(path: str | Path, fmt: str, sample_rate_hz: float | None = None) -> TimeSeries:
    """Load a WAV (PCM 16-bit mono) or CSV time series.

    CSV rows are either a single amplitude column (``sample_rate_hz``
    required) or time,amplitude pairs from which the rate is inferred.
    Unreadable files, malformed rows, and unsupported encodings raise
    distinct exception types.
    """
    if fmt == "wav":
        return _load_wav(path)
    if fmt == "csv":
        return _load_csv(path, sample_rate_hz)
    raise ValueError(f"unsupported format: {fmt!r}")


def _load_wav(path: str | Path) -> TimeSeries:
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise FileUnreadableError(f"cannot read {path}: {exc}") from exc
    if not raw:
        raise EmptyInputError("empty input")
    try:
        with wave.open(io.BytesIO(raw)) as wav:
            channels = wav.getnchannels()
            width = wav.getsampwidth()
            rate = wav.getframerate()
            count = wav.getnframes()
            data = wav.readframes(count)
    except (wave.Error, EOFError) as exc:
        raise MalformedDataError(f"not a valid WAV file: {exc}") from exc
    if channels != 1:
        raise UnsupportedEncodingError(f"expected mono audio, got {channels} channels")
    if width != 2:
        raise UnsupportedEncodingError(f"expected 16-bit PCM, got {8 * width}-bit")
    if count == 0:
        raise EmptyInputError("empty input")
    samples = np.frombuffer(data, dtype="<i2").astype(float) / 32768.0
    return TimeSeries(samples=samples, sample_rate_hz=float(rate))


def write_timeseries_wav(path: str | Path, ts: TimeSeries) -> None:
    """Write as PCM 16-bit mono; samples are clipped to [-1, 1]."""
    scaled = np.clip(ts.samples, -1.0, 1.0)
    pcm = np.rint(scaled * 32767.0).astype("<i2")
    with wave.open(str(path), "wb") as wav:
        wav.setnchannels(1)
        wav.setsampwidth(2)
        wav.setframerate(int(round(ts.sample_rate_hz)))
        wav.writeframes(pcm.tobytes())


def _load_csv(path: str | Path, sample_rate_hz: float | None) -> TimeSeries:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise FileUnreadableError(f"cannot read {path}: {exc}") from exc
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise EmptyInputError("empty input")
    rows = []
    for lineno, line in enumerate(lines, start=1):
        parts = [p.strip() for p in line.split(",")]
        try:
            rows.append([float(p) for p in parts])
        except ValueError as exc:
            if lineno == 1:
                continue  # header line
            raise MalformedDataError(f"malformed row {lineno}: {line!r}") from exc
    if not rows:
        raise EmptyInputError("empty input")
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise MalformedDataError("rows have inconsistent column counts")
    width = widths.pop()
    if width == 1:
        if sample_rate_hz is None:
            raise ValueError("sample_rate_hz is required for single-column CSV input")
        return TimeSeries(samples=np.array([r[0] for r in rows]),
                          sample_rate_hz=sample_rate_hz)
    if width == 2:
        times = np.array([r[0] for r in rows])
        amps = np.array([r[1] for r in rows])
        if times.size < 2:
            if sample_rate_hz is None:
                raise ValueError("sample_rate_hz is required for a single-row CSV")
            return TimeSeries(samples=amps, sample_rate_hz=sample_rate_hz)
        steps = np.diff(times)
        if np.any(steps <= 0) or not np.allclose(steps, steps[0], rtol=1e-6, atol=1e-12):
            raise MalformedDataError("time column must be uniformly increasing")
        return TimeSeries(samples=amps, sample_rate_hz=1.0 / float(steps[0]))
    raise MalformedDataError(f"expected 1 or 2 columns, got {width}")


def decimate(ts: TimeSeries, factor: int) -> TimeSeries:
    """Integer decimation with a moving-average pre-filter of the same width."""
    if factor < 1:
        raise ValueError("factor must be a positive integer")
    if factor == 1:
        return ts
    kernel = np.full(factor, 1.0 / factor)
    smoothed = np.convolve(ts.samples, kernel, mode="full")[factor - 1:ts.samples.size]
    return TimeSeries(samples=smoothed[::factor],
                      sample_rate_hz=ts.sample_rate_hz / factor)


def compute_spectrogram(ts: TimeSeries, cfg: StftConfig,
                        freq_range: tuple[float, float]) -> Spectrogram:
    """Rectangular-window STFT magnitude restricted to ``freq_range``.

    The hop is ``window * (1 - overlap)`` samples, each frame is
    zero-padded to ``window * zero_pad_factor`` points before the DFT, and
    only bins whose frequency falls inside the closed range are kept.
    """
    lo, hi = freq_range
    if lo > hi:
        raise ValueError("freq_range must be (low, high)")
    fs = ts.sample_rate_hz
    window = int(round(cfg.window_len_s * fs))
    if window < 2:
        raise ValueError("window must span at least 2 samples")
    if ts.samples.size < window:
        raise ValueError("signal shorter than one window")
    hop = max(1, int(round(window * (1.0 - cfg.overlap_fraction))))
    nfft = max(window, int(round(window * cfg.zero_pad_factor)))
    frames = np.lib.stride_tricks.sliding_window_view(ts.samples, window)[::hop]
    spectrum = np.abs(np.fft.rfft(frames, n=nfft, axis=1))
    df = fs / nfft
    freqs = np.arange(spectrum.shape[1]) * df
    keep = (freqs >= lo) & (freqs <= hi)
    if not np.any(keep):
        raise ValueError("freq_range retains no bins")
    values = spectrum[:, keep].T
    return Spectrogram(
        values=values,
        f0=float(freqs[keep][0]),
        df=df,
        t0=(window / 2.0) / fs,
        dt=hop / fs,
    )


def band_local_snr(values: np.ndarray, delta_f: int = 2) -> np.ndarray:
    """Per-frame peak-over-background ratio used as the combining weight.

    All-zero frames get an SNR of 1 so weights never divide by zero.
    """
    values = np.asarray(values, dtype=float)
    m = values.shape[0]
    delta_f = min(delta_f, max(0, (m - 2) // 2))
    peaks = values.argmax(axis=0)
    from .presence import rer  # local import to avoid a cycle at module load

    return rer(values, peaks, delta_f)


def harmonic_combine(bands: Sequence[Spectrogram], orders: Sequence[int],
                     delta_f: int = 2) -> Spectrogram:
    """Combine harmonic bands into one strip, frame by frame.

    Every band must already live on a common nominal-frequency axis (the
    band of order ``h`` divided by ``h``) with identical shape.  Each output
    frame is the convex combination of the band frames with weights
    proportional to each band's local SNR, so the result stays within the
    pointwise min/max envelope of the inputs.
    """
    if len(bands) == 0:
        raise ValueError("need at least one band")
    if len(orders) != len(bands):
        raise ValueError("orders must match bands")
    shape = bands[0].values.shape
    for band in bands[1:]:
        if band.values.shape != shape:
            raise ValueError("all bands must have identical dimensions")
    snrs = np.stack([band_local_snr(b.values, delta_f) for b in bands])  # (B, N)
    finite = np.isfinite(snrs)
    weights = np.zeros_like(snrs)
    for n in range(shape[1]):
        col = snrs[:, n]
        if np.all(finite[:, n]):
            weights[:, n] = col / col.sum()
        else:
            infs = ~finite[:, n]
            weights[infs, n] = 1.0 / infs.sum()
    stacked = np.stack([b.values for b in bands])  # (B, M, N)
    combined = np.einsum("bn,bmn->mn", weights, stacked)
    ref = bands[0]
    return Spectrogram(values=combined, f0=ref.f0, df=ref.df, t0=ref.t0, dt=ref.dt)


def extract_harmonic_bands(ts: TimeSeries, cfg: StftConfig, nominal_hz: float,
                           orders: Sequence[int],
                           half_bandwidth_hz: float) -> list[Spectrogram]:
    """STFT strips around each harmonic, mapped onto the nominal axis.

    The strip of order ``h`` covers ``h * (nominal +- half_bandwidth)``;
    its frequency axis is divided by ``h`` and linearly interpolated onto
    the order-one grid so all bands share one shape.
    """
    if not orders:
        raise ValueError("need at least one harmonic order")
    base = compute_spectrogram(ts, cfg, (nominal_hz - half_bandwidth_hz,
                                         nominal_hz + half_bandwidth_hz))
    target = np.asarray(base.freq_of_bin(np.arange(base.n_bins)), dtype=float)
    bands = []
    for h in orders:
        if h == 1:
            bands.append(base)
            continue
        strip = compute_spectrogram(
            ts, cfg, (h * (nominal_hz - half_bandwidth_hz),
                      h * (nominal_hz + half_bandwidth_hz)))
        source = np.asarray(strip.freq_of_bin(np.arange(strip.n_bins)), dtype=float) / h
        values = np.empty((target.size, strip.n_frames))
        for n in range(strip.n_frames):
            values[:, n] = np.interp(target, source, strip.values[:, n])
        bands.append(Spectrogram(values=values, f0=base.f0, df=base.df,
                                 t0=strip.t0, dt=strip.dt))
    return bands
