"""File interchange formats: spectrogram CSV, trace CSV, result JSON.

Spectrogram CSV carries a header line ``M,N,f0,df,t0,dt`` followed by N
lines of M comma-separated magnitudes, one line per time frame.  Trace CSV
has a ``frame,bin,freq,voiced`` header; ``voiced`` is 0/1.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .carve import MultiTraceResult
from .ingest import MalformedDataError, Spectrogram

SPECTROGRAM_HEADER_FIELDS = 6
TRACE_HEADER = "frame,bin,freq,voiced"


def write_spectrogram_csv(path: str | Path, spect: Spectrogram) -> None:
    m, n = spect.values.shape
    head = [repr(float(v)) for v in (spect.f0, spect.df, spect.t0, spect.dt)]
    with open(path, "w") as fh:
        fh.write(",".join([str(m), str(n)] + head) + "\n")
        for frame in range(n):
            fh.write(",".join(repr(float(v)) for v in spect.values[:, frame]) + "\n")


def read_spectrogram_csv(path: str | Path) -> Spectrogram:
    text = Path(path).read_text()
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise MalformedDataError("empty input")
    head = lines[0].split(",")
    if len(head) != SPECTROGRAM_HEADER_FIELDS:
        raise MalformedDataError("spectrogram CSV header must be M,N,f0,df,t0,dt")
    try:
        m, n = int(head[0]), int(head[1])
        f0, df, t0, dt = (float(v) for v in head[2:])
    except ValueError as exc:
        raise MalformedDataError(f"bad spectrogram header: {lines[0]!r}") from exc
    if len(lines) - 1 != n:
        raise MalformedDataError(f"expected {n} frame lines, found {len(lines) - 1}")
    values = np.empty((m, n))
    for frame, line in enumerate(lines[1:]):
        parts = line.split(",")
        if len(parts) != m:
            raise MalformedDataError(f"frame {frame}: expected {m} values")
        try:
            values[:, frame] = [float(p) for p in parts]
        except ValueError as exc:
            raise MalformedDataError(f"frame {frame}: non-numeric value") from exc
    return Spectrogram(values=values, f0=f0, df=df, t0=t0, dt=dt)


def looks_like_spectrogram_csv(path: str | Path) -> bool:
    """Sniff the six-field header without parsing the body."""
    try:
        with open(path) as fh:
            head = fh.readline().strip().split(",")
    except OSError:
        return False
    if len(head) != SPECTROGRAM_HEADER_FIELDS:
        return False
    try:
        int(head[0]), int(head[1])
        [float(v) for v in head[2:]]
    except ValueError:
        return False
    return True


def write_trace_csv(path: str | Path, trace: np.ndarray, freqs: np.ndarray,
                    voiced: np.ndarray | None = None) -> None:
    trace = np.asarray(trace)
    freqs = np.asarray(freqs, dtype=float)
    if voiced is None:
        voiced = np.ones(trace.size, dtype=bool)
    with open(path, "w") as fh:
        fh.write(TRACE_HEADER + "\n")
        for n in range(trace.size):
            fh.write(f"{n},{int(trace[n])},{float(freqs[n])!r},{int(voiced[n])}\n")


def read_trace_csv(path: str | Path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Returns (bins, freqs, voiced) arrays."""
    lines = [ln for ln in Path(path).read_text().splitlines() if ln.strip()]
    if not lines:
        raise MalformedDataError("empty input")
    if lines[0].strip() != TRACE_HEADER:
        raise MalformedDataError(f"trace CSV must start with {TRACE_HEADER!r}")
    bins, freqs, voiced = [], [], []
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != 4:
            raise MalformedDataError(f"line {lineno}: expected 4 columns")
        try:
            bins.append(int(parts[1]))
            freqs.append(float(parts[2]))
            voiced.append(bool(int(parts[3])))
        except ValueError as exc:
            raise MalformedDataError(f"line {lineno}: bad value") from exc
    return np.array(bins), np.array(freqs), np.array(voiced, dtype=bool)


def write_result_json(path: str | Path, result: MultiTraceResult,
                      f0: float, df: float) -> None:
    Path(path).write_text(json.dumps(result.to_json(f0=f0, df=df), indent=2) + "\n")
