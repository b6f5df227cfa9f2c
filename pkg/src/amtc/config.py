"""Declarative run configuration shared by the CLI and the HTTP service.

One JSON document mirrors the transition model, detection, online, STFT,
and synthesis parameters.  Unknown keys are rejected, and parsing the
serialized form reproduces the document exactly, so benchmark manifests
stay reproducible.  Command-line flags override file values.
"""

from __future__ import annotations

import json
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .dp import ConstraintRegion, TransitionModel
from .online import OnlineParams
from .presence import DetectionParams
from .synth import SynthConfig, TraceSpec

from .ingest import StftConfig


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class TrackerSettings(_Strict):
    kind: Literal["uniform_band", "explicit_matrix"] = "uniform_band"
    k: int = 3
    lam: float = 1.0
    prior: list[float] | None = None
    trans: list[list[float]] | None = None

    @model_validator(mode="after")
    def _explicit_needs_matrices(self):
        if self.kind == "explicit_matrix" and (self.prior is None or self.trans is None):
            raise ValueError("explicit_matrix needs prior and trans")
        return self

    def to_model(self) -> TransitionModel:
        if self.kind == "uniform_band":
            return TransitionModel.uniform_band(self.k, lam=self.lam)
        return TransitionModel.explicit(np.array(self.prior),
                                        np.array(self.trans), lam=self.lam)


class DetectionSettings(_Strict):
    delta_rer: float = 2.41
    delta_f: int = 10
    delta1: int = 30
    delta2: int = 30

    def to_params(self) -> DetectionParams:
        return DetectionParams(delta_rer=self.delta_rer, delta_f=self.delta_f,
                               delta1=self.delta1, delta2=self.delta2)


class OnlineSettings(_Strict):
    k1: int = 50
    k2: int = 100


class StftSettings(_Strict):
    window_len_s: float = 10.0
    overlap_fraction: float = 0.98
    zero_pad_factor: float = 1.0
    window_shape: Literal["rectangular"] = "rectangular"
    freq_lo: float
    freq_hi: float

    def to_config(self) -> StftConfig:
        return StftConfig(window_len_s=self.window_len_s,
                          overlap_fraction=self.overlap_fraction,
                          zero_pad_factor=self.zero_pad_factor,
                          window_shape=self.window_shape)

    @property
    def freq_range(self) -> tuple[float, float]:
        return (self.freq_lo, self.freq_hi)


class TraceSettings(_Strict):
    process: Literal["constant", "random_walk", "ar", "piecewise"] = "constant"
    freq: float = 1.0
    step_std: float = 0.0
    ar_coeffs: list[float] = Field(default_factory=list)
    ar_noise_std: float = 0.0
    times: list[float] = Field(default_factory=list)
    freqs: list[float] = Field(default_factory=list)
    amplitude: float = 1.0
    unvoiced: tuple[float, float] | None = None

    def to_spec(self) -> TraceSpec:
        return TraceSpec(process=self.process, freq=self.freq,
                         step_std=self.step_std,
                         ar_coeffs=tuple(self.ar_coeffs),
                         ar_noise_std=self.ar_noise_std,
                         times=tuple(self.times), freqs=tuple(self.freqs),
                         amplitude=self.amplitude, unvoiced=self.unvoiced)


class SynthSettings(_Strict):
    duration_s: float = 60.0
    sample_rate_hz: float = 30.0
    traces: list[TraceSettings] = Field(default_factory=list)
    snr_db: float | None = None
    noise_std: float | None = None
    freq_lo: float = 0.0
    freq_hi: float | None = None
    seed: int = 0

    def to_config(self) -> SynthConfig:
        return SynthConfig(
            duration_s=self.duration_s,
            sample_rate_hz=self.sample_rate_hz,
            traces=tuple(t.to_spec() for t in self.traces),
            snr_db=self.snr_db,
            noise_std=self.noise_std,
            freq_lo=self.freq_lo,
            freq_hi=np.inf if self.freq_hi is None else self.freq_hi,
            seed=self.seed,
        )


class ConstraintSettings(_Strict):
    frames: tuple[int, int]
    bins: tuple[int, int]
    iteration: int = 1

    def to_region(self) -> ConstraintRegion:
        return ConstraintRegion.rect(self.frames, self.bins)


class RunConfig(_Strict):
    n_traces: int = 1
    sample_rate_hz: float | None = None
    stft: StftSettings | None = None
    tracker: TrackerSettings = Field(default_factory=TrackerSettings)
    trackers: list[TrackerSettings] | None = None
    detection: DetectionSettings = Field(default_factory=DetectionSettings)
    online: OnlineSettings = Field(default_factory=OnlineSettings)
    synth: SynthSettings | None = None
    constraints: list[ConstraintSettings] = Field(default_factory=list)

    @model_validator(mode="after")
    def _tracker_count(self):
        if self.trackers is not None and len(self.trackers) != self.n_traces:
            raise ValueError("trackers must list one entry per trace")
        return self

    def models(self) -> TransitionModel | list[TransitionModel]:
        if self.trackers is not None:
            return [t.to_model() for t in self.trackers]
        return self.tracker.to_model()

    def detection_params(self) -> DetectionParams:
        return self.detection.to_params()

    def online_params(self) -> OnlineParams:
        models = self.models()
        if isinstance(models, list):
            models = tuple(models)
        return OnlineParams(k1=self.online.k1, k2=self.online.k2,
                            n_traces=self.n_traces, models=models,
                            det=self.detection_params())

    def constraint_map(self) -> dict[int, list[ConstraintRegion]] | None:
        if not self.constraints:
            return None
        out: dict[int, list[ConstraintRegion]] = {}
        for c in self.constraints:
            out.setdefault(c.iteration, []).append(c.to_region())
        return out

    def to_json_str(self) -> str:
        return json.dumps(self.model_dump(mode="json"), indent=2)


def load_config(path: str) -> RunConfig:
    with open(path) as fh:
        return RunConfig.model_validate_json(fh.read())


def parse_config(text: str) -> RunConfig:
    return RunConfig.model_validate_json(text)
