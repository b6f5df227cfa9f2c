"""HTTP layer exposing tracking jobs and constraint-guided re-estimation.

A thin wrapper over the library: upload a recording or spectrogram to
create a job, fetch a (optionally max-pooled) heatmap tile, start tracking
runs with constraint regions, and poll for the result.  Responses are
exactly what the corresponding library calls produce.  Jobs live in a
bounded in-memory store; nothing is persisted.
"""

from __future__ import annotations

import tempfile
import threading
import uuid
from collections import OrderedDict
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from fastapi import FastAPI, Form, HTTPException, UploadFile
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, ConfigDict, Field

from .carve import amtc_offline
from .config import ConstraintSettings, RunConfig, parse_config
from .dp import ConstraintUnsatisfiableError
from .formats import SPECTROGRAM_HEADER_FIELDS
from .ingest import IngestError, Spectrogram, compute_spectrogram, load_timeseries

JOB_CAP_DEFAULT = 32
PAYLOAD_CAP_DEFAULT = 64 * 1024 * 1024

IDLE = "idle"
RUNNING = "running"
DONE = "done"
ERROR = "error"


class JobCreated(BaseModel):
    id: str


class JobStatus(BaseModel):
    id: str
    status: str
    n_bins: int
    n_frames: int
    has_result: bool
    error: str | None = None


class TrackRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    n_traces: int = Field(default=1, ge=1)
    constraints: list[ConstraintSettings] = Field(default_factory=list)


class SpectrogramTile(BaseModel):
    values: list[list[float]]
    f0: float
    df: float
    t0: float
    dt: float
    full_bins: int
    full_frames: int


@dataclass
class Job:
    id: str
    spect: Spectrogram
    config: RunConfig
    status: str = IDLE
    result: dict | None = None
    error: str | None = None
    error_code: int = 500
    constraint_history: list[dict] = field(default_factory=list)
    lock: threading.Lock = field(default_factory=threading.Lock)


class JobStore:
    """LRU-capped job registry, safe for concurrent access."""

    def __init__(self, cap: int):
        self.cap = cap
        self._jobs: OrderedDict[str, Job] = OrderedDict()
        self._lock = threading.Lock()

    def add(self, job: Job) -> None:
        with self._lock:
            self._jobs[job.id] = job
            self._jobs.move_to_end(job.id)
            while len(self._jobs) > self.cap:
                self._jobs.popitem(last=False)

    def get(self, job_id: str) -> Job:
        with self._lock:
            job = self._jobs.get(job_id)
            if job is None:
                raise HTTPException(status_code=404, detail="unknown job id")
            self._jobs.move_to_end(job_id)
            return job


def _parse_payload(data: bytes, cfg: RunConfig) -> Spectrogram:
    if data.startswith(b"RIFF"):
        with tempfile.NamedTemporaryFile(suffix=".wav") as tmp:
            tmp.write(data)
            tmp.flush()
            ts = load_timeseries(tmp.name, "wav")
        return _require_stft(ts, cfg)
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise HTTPException(status_code=400,
                            detail="payload is neither WAV nor CSV") from exc
    head = text.split("\n", 1)[0].split(",")
    if len(head) == SPECTROGRAM_HEADER_FIELDS:
        from .formats import read_spectrogram_csv

        with tempfile.NamedTemporaryFile("w", suffix=".csv") as tmp:
            tmp.write(text)
            tmp.flush()
            return read_spectrogram_csv(tmp.name)
    with tempfile.NamedTemporaryFile("w", suffix=".csv") as tmp:
        tmp.write(text)
        tmp.flush()
        ts = load_timeseries(tmp.name, "csv", sample_rate_hz=cfg.sample_rate_hz)
    return _require_stft(ts, cfg)


def _require_stft(ts, cfg: RunConfig) -> Spectrogram:
    if cfg.stft is None:
        raise HTTPException(status_code=400,
                            detail="audio payloads need an stft config section")
    return compute_spectrogram(ts, cfg.stft.to_config(), cfg.stft.freq_range)


def max_pool_tile(spect: Spectrogram, max_bins: int | None,
                  max_frames: int | None) -> SpectrogramTile:
    """Downsample for display by max pooling; axis maps follow block centers."""
    values = spect.values
    m, n = values.shape
    bm = 1 if not max_bins or max_bins >= m else int(np.ceil(m / max_bins))
    bn = 1 if not max_frames or max_frames >= n else int(np.ceil(n / max_frames))
    if bm > 1 or bn > 1:
        rows = int(np.ceil(m / bm))
        cols = int(np.ceil(n / bn))
        pooled = np.full((rows, cols), -np.inf)
        for i in range(rows):
            for j in range(cols):
                pooled[i, j] = values[i * bm:(i + 1) * bm, j * bn:(j + 1) * bn].max()
        values = pooled
    return SpectrogramTile(
        values=[[float(v) for v in row] for row in values],
        f0=spect.f0 + spect.df * (bm - 1) / 2.0,
        df=spect.df * bm,
        t0=spect.t0 + spect.dt * (bn - 1) / 2.0,
        dt=spect.dt * bn,
        full_bins=m,
        full_frames=n,
    )


def create_app(job_cap: int = JOB_CAP_DEFAULT,
               payload_cap: int = PAYLOAD_CAP_DEFAULT,
               static_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="amtc", version="0.1.0")
    store = JobStore(job_cap)

    @app.post("/jobs", status_code=201, response_model=JobCreated)
    async def create_job(file: UploadFile, config: str | None = Form(default=None)):
        data = await file.read()
        if len(data) > payload_cap:
            raise HTTPException(status_code=413, detail="payload too large")
        try:
            cfg = parse_config(config) if config else RunConfig()
        except Exception as exc:
            raise HTTPException(status_code=400,
                                detail=f"bad config: {exc}") from exc
        try:
            spect = _parse_payload(data, cfg)
        except HTTPException:
            raise
        except (IngestError, ValueError) as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        job = Job(id=uuid.uuid4().hex, spect=spect, config=cfg)
        store.add(job)
        return JobCreated(id=job.id)

    @app.get("/jobs/{job_id}", response_model=JobStatus)
    def job_status(job_id: str):
        job = store.get(job_id)
        return JobStatus(
            id=job.id,
            status=job.status,
            n_bins=job.spect.n_bins,
            n_frames=job.spect.n_frames,
            has_result=job.result is not None,
            error=job.error,
        )

    @app.get("/jobs/{job_id}/spectrogram", response_model=SpectrogramTile)
    def job_spectrogram(job_id: str, maxw: int | None = None,
                        maxh: int | None = None):
        job = store.get(job_id)
        return max_pool_tile(job.spect, max_bins=maxh, max_frames=maxw)

    def _run_tracking(job: Job, request: TrackRequest) -> None:
        cfg = job.config.model_copy(update={
            "n_traces": request.n_traces,
            "constraints": request.constraints,
        })
        try:
            result = amtc_offline(job.spect.values, cfg.n_traces, cfg.models(),
                                  cfg.detection_params(), cfg.constraint_map())
        except ConstraintUnsatisfiableError as exc:
            job.error = str(exc)
            job.error_code = 422
            job.status = ERROR
        except Exception as exc:
            job.error = str(exc)
            job.error_code = 500
            job.status = ERROR
        else:
            job.result = result.to_json(f0=job.spect.f0, df=job.spect.df)
            job.error = None
            job.status = DONE
        finally:
            job.lock.release()

    @app.post("/jobs/{job_id}/track", status_code=202)
    def start_tracking(job_id: str, request: TrackRequest):
        job = store.get(job_id)
        if not job.lock.acquire(blocking=False):
            raise HTTPException(status_code=409,
                                detail="a run is already in progress")
        job.status = RUNNING
        job.result = None
        job.constraint_history.append(request.model_dump(mode="json"))
        worker = threading.Thread(target=_run_tracking, args=(job, request),
                                  daemon=True)
        worker.start()
        return {"id": job.id, "status": RUNNING}

    @app.get("/jobs/{job_id}/result")
    def job_result(job_id: str):
        job = store.get(job_id)
        if job.status == RUNNING:
            raise HTTPException(status_code=409, detail="run in progress")
        if job.status == ERROR:
            raise HTTPException(status_code=job.error_code, detail=job.error)
        if job.result is None:
            raise HTTPException(status_code=404, detail="no run yet")
        return JSONResponse(job.result)

    static_root = Path(static_dir) if static_dir else (
        Path(__file__).resolve().parents[2] / "frontend" / "dist")
    if static_root.is_dir():
        app.mount("/", StaticFiles(directory=static_root, html=True),
                  name="ui")

    return app
