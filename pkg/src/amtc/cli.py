"""Command-line entry points: track, track-online, synth, eval, serve.

Every command is deterministic given its config and seed.  Exit codes:
0 success, 2 usage or input error, 3 computation error; failures print a
machine-readable JSON error object to stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np
from pydantic import ValidationError

from .carve import amtc_offline
from .config import ConstraintSettings, RunConfig, load_config
from .dp import ConstraintUnsatisfiableError
from .formats import (
    looks_like_spectrogram_csv,
    read_spectrogram_csv,
    read_trace_csv,
    write_result_json,
    write_spectrogram_csv,
    write_trace_csv,
)
from .ingest import (
    IngestError,
    Spectrogram,
    compute_spectrogram,
    load_timeseries,
    write_timeseries_wav,
)
from .metrics import MetricReport, multi_metrics, pearson, single_metrics
from .online import OnlineTracker
from .synth import ground_truth_on_frames, synthesize

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_COMPUTE = 3


class UsageError(Exception):
    pass


def _fail(exc: Exception, code: int) -> int:
    doc = {"error": {"type": type(exc).__name__, "message": str(exc)}}
    print(json.dumps(doc), file=sys.stderr)
    return code


def _load_run_config(args) -> RunConfig:
    cfg = load_config(args.config) if getattr(args, "config", None) else RunConfig()
    return _apply_overrides(cfg, args)


def _apply_overrides(cfg: RunConfig, args) -> RunConfig:
    """Flags win over the config file."""
    updates = {}
    if getattr(args, "ntraces", None) is not None:
        updates["n_traces"] = args.ntraces
    if getattr(args, "sample_rate", None) is not None:
        updates["sample_rate_hz"] = args.sample_rate
    tracker = {}
    for flag, key in (("k", "k"), ("lam", "lam")):
        value = getattr(args, flag, None)
        if value is not None:
            tracker[key] = value
    if tracker:
        updates["tracker"] = cfg.tracker.model_copy(update=tracker)
        updates["trackers"] = None
    detection = {}
    for flag, key in (("delta_rer", "delta_rer"), ("delta_f", "delta_f"),
                      ("delta1", "delta1"), ("delta2", "delta2")):
        value = getattr(args, flag, None)
        if value is not None:
            detection[key] = value
    if detection:
        updates["detection"] = cfg.detection.model_copy(update=detection)
    online = {}
    for flag in ("k1", "k2"):
        value = getattr(args, flag, None)
        if value is not None:
            online[flag] = value
    if online:
        updates["online"] = cfg.online.model_copy(update=online)
    stft = {}
    for flag, key in (("window_s", "window_len_s"), ("overlap", "overlap_fraction"),
                      ("zero_pad", "zero_pad_factor"), ("fmin", "freq_lo"),
                      ("fmax", "freq_hi")):
        value = getattr(args, flag, None)
        if value is not None:
            stft[key] = value
    if stft:
        if cfg.stft is not None:
            updates["stft"] = cfg.stft.model_copy(update=stft)
        else:
            if "freq_lo" not in stft or "freq_hi" not in stft:
                raise UsageError("--fmin and --fmax are required when no "
                                 "stft section is configured")
            from .config import StftSettings

            updates["stft"] = StftSettings(**stft)
    if getattr(args, "seed", None) is not None and cfg.synth is not None:
        updates["synth"] = cfg.synth.model_copy(update={"seed": args.seed})
    return cfg.model_copy(update=updates) if updates else cfg


def _load_constraints(args, cfg: RunConfig) -> RunConfig:
    raw = getattr(args, "constraints", None)
    if raw is None:
        return cfg
    text = Path(raw).read_text() if Path(raw).exists() else raw
    items = json.loads(text)
    if isinstance(items, dict):
        items = [items]
    parsed = [ConstraintSettings(**item) for item in items]
    return cfg.model_copy(update={"constraints": parsed})


def _input_spectrogram(path: str, cfg: RunConfig) -> Spectrogram:
    if not Path(path).exists():
        raise FileNotFoundError(f"input not found: {path}")
    suffix = Path(path).suffix.lower()
    if suffix == ".wav":
        ts = load_timeseries(path, "wav")
    elif looks_like_spectrogram_csv(path):
        return read_spectrogram_csv(path)
    else:
        ts = load_timeseries(path, "csv", sample_rate_hz=cfg.sample_rate_hz)
    if cfg.stft is None:
        raise UsageError("audio input needs an stft section or "
                         "--window-s/--fmin/--fmax flags")
    return compute_spectrogram(ts, cfg.stft.to_config(), cfg.stft.freq_range)


def cmd_track(args) -> int:
    cfg = _load_constraints(args, _load_run_config(args))
    spect = _input_spectrogram(args.input, cfg)
    result = amtc_offline(spect.values, cfg.n_traces, cfg.models(),
                          cfg.detection_params(), cfg.constraint_map())
    prefix = Path(args.out)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    write_result_json(prefix.with_suffix(".json"), result, spect.f0, spect.df)
    for layer in range(result.n_traces):
        trace = result.traces[layer]
        write_trace_csv(Path(f"{prefix}_trace{layer + 1}.csv"), trace,
                        spect.freq_of_bin(trace), result.masks[layer])
    print(json.dumps({
        "result": str(prefix.with_suffix(".json")),
        "n_traces": result.n_traces,
        "mean_rer": [float(v) for v in result.mean_rer],
    }))
    return EXIT_OK


def _parse_frame_line(line: str) -> np.ndarray:
    line = line.strip()
    if line.startswith("["):
        return np.asarray(json.loads(line), dtype=float)
    return np.asarray([float(p) for p in line.split(",")], dtype=float)


def cmd_track_online(args) -> int:
    cfg = _load_run_config(args)
    stream = open(args.input) if args.input else sys.stdin
    tracker = None
    try:
        for line in stream:
            if not line.strip():
                continue
            frame = _parse_frame_line(line)
            if tracker is None:
                tracker = OnlineTracker(cfg.online_params(), frame.size)
            estimate = tracker.push(frame)
            if estimate is not None:
                _emit_estimate(estimate)
        if tracker is not None:
            for estimate in tracker.finalize():
                _emit_estimate(estimate)
    finally:
        if args.input:
            stream.close()
    return EXIT_OK


def _emit_estimate(est) -> None:
    print(json.dumps({
        "frame": int(est.frame),
        "bins": [int(b) for b in est.bins],
        "voiced": [bool(v) for v in est.voiced],
    }), flush=True)


def cmd_synth(args) -> int:
    cfg = _load_run_config(args)
    if cfg.synth is None:
        raise UsageError("synth command needs a config with a synth section")
    ts, truths = synthesize(cfg.synth.to_config())
    written = {}
    if args.out_wav:
        write_timeseries_wav(args.out_wav, ts)
        written["wav"] = args.out_wav
    if args.out_csv:
        with open(args.out_csv, "w") as fh:
            dt = 1.0 / ts.sample_rate_hz
            for i, v in enumerate(ts.samples):
                fh.write(f"{i * dt!r},{float(v)!r}\n")
        written["csv"] = args.out_csv
    if args.gt_prefix:
        if cfg.stft is None:
            raise UsageError("--gt-prefix needs an stft section to define "
                             "the frame grid")
        spect = compute_spectrogram(ts, cfg.stft.to_config(), cfg.stft.freq_range)
        if args.out_spectrogram:
            write_spectrogram_csv(args.out_spectrogram, spect)
            written["spectrogram"] = args.out_spectrogram
        freqs, voiced = ground_truth_on_frames(truths, spect)
        for layer in range(freqs.shape[0]):
            path = f"{args.gt_prefix}_trace{layer + 1}.csv"
            write_trace_csv(path, spect.bin_of_freq(freqs[layer]),
                            freqs[layer], voiced[layer])
            written[f"gt_trace{layer + 1}"] = path
    elif args.out_spectrogram:
        if cfg.stft is None:
            raise UsageError("--out-spectrogram needs an stft section")
        spect = compute_spectrogram(ts, cfg.stft.to_config(), cfg.stft.freq_range)
        write_spectrogram_csv(args.out_spectrogram, spect)
        written["spectrogram"] = args.out_spectrogram
    print(json.dumps({"written": written, "samples": int(ts.samples.size),
                      "seed": cfg.synth.seed}))
    return EXIT_OK


def cmd_eval(args) -> int:
    if len(args.est) != len(args.gt):
        raise UsageError("need as many --est files as --gt files")
    est_bins, est_freqs, est_voiced = [], [], []
    gt_freqs, gt_voiced = [], []
    for path in args.est:
        bins, freqs, voiced = read_trace_csv(path)
        est_freqs.append(freqs)
        est_voiced.append(voiced)
    for path in args.gt:
        _, freqs, voiced = read_trace_csv(path)
        gt_freqs.append(freqs)
        gt_voiced.append(voiced)
    lengths = {f.size for f in est_freqs} | {f.size for f in gt_freqs}
    if len(lengths) != 1:
        raise UsageError("estimate and ground-truth files must have the "
                         "same frame count")
    if len(args.est) == 1:
        single = single_metrics(est_freqs[0], gt_freqs[0], tau=args.tau)
        try:
            rho = pearson(est_freqs[0], gt_freqs[0])
        except ValueError:
            rho = None  # constant sequences have no defined correlation
        report = MetricReport(single=single, pearson_rho=rho)
        print(json.dumps(report.to_json(), indent=2))
    else:
        multi = multi_metrics(np.stack(est_freqs), np.stack(est_voiced),
                              np.stack(gt_freqs), np.stack(gt_voiced))
        print(json.dumps(MetricReport(multi=multi).to_json(), indent=2))
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="amtc",
        description="Detect and track weak frequency traces in spectrograms",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="JSON run-config file")
        p.add_argument("--ntraces", type=int, help="number of traces to extract")
        p.add_argument("-k", type=int, help="transition band half-width")
        p.add_argument("--lam", type=float, help="regularization weight")
        p.add_argument("--delta-rer", dest="delta_rer", type=float,
                       help="presence threshold (default 2.41)")
        p.add_argument("--delta-f", dest="delta_f", type=int,
                       help="background exclusion half-width in bins")
        p.add_argument("--delta1", type=int, help="max unvoiced gap to absorb")
        p.add_argument("--delta2", type=int, help="max voiced blip to absorb")
        p.add_argument("--window-s", dest="window_s", type=float,
                       help="STFT window length in seconds")
        p.add_argument("--overlap", type=float, help="STFT overlap fraction")
        p.add_argument("--zero-pad", dest="zero_pad", type=float,
                       help="DFT zero-padding factor")
        p.add_argument("--fmin", type=float, help="retained band low edge (Hz)")
        p.add_argument("--fmax", type=float, help="retained band high edge (Hz)")
        p.add_argument("--sample-rate", dest="sample_rate", type=float,
                       help="sample rate for single-column CSV audio")
        p.add_argument("--seed", type=int, help="override the synthesis seed")

    track = sub.add_parser("track", help="extract traces from a recording "
                                         "or spectrogram")
    add_common(track)
    track.add_argument("input", help="WAV, audio CSV, or spectrogram CSV")
    track.add_argument("--out", default="amtc_out", help="output path prefix")
    track.add_argument("--constraints",
                       help="JSON constraint regions (file or literal)")
    track.set_defaults(func=cmd_track)

    online = sub.add_parser("track-online", help="streaming tracking over "
                                                 "frames from a pipe")
    add_common(online)
    online.add_argument("--input", help="frame file (default: stdin)")
    online.add_argument("--k1", type=int, help="look-back frames (default 50)")
    online.add_argument("--k2", type=int, help="look-ahead frames (default 100)")
    online.set_defaults(func=cmd_track_online)

    synth = sub.add_parser("synth", help="generate a synthetic test signal")
    add_common(synth)
    synth.add_argument("--out-wav", dest="out_wav", help="write PCM16 WAV")
    synth.add_argument("--out-csv", dest="out_csv", help="write time,amp CSV")
    synth.add_argument("--out-spectrogram", dest="out_spectrogram",
                       help="write the spectrogram CSV")
    synth.add_argument("--gt-prefix", dest="gt_prefix",
                       help="write per-trace ground-truth CSVs on the frame grid")
    synth.set_defaults(func=cmd_synth)

    ev = sub.add_parser("eval", help="compare estimate CSVs against ground truth")
    ev.add_argument("--est", nargs="+", required=True)
    ev.add_argument("--gt", nargs="+", required=True)
    ev.add_argument("--tau", type=float, default=0.03,
                    help="relative-error threshold (default 0.03)")
    ev.set_defaults(func=cmd_eval)

    serve = sub.add_parser("serve", help="run the HTTP service")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    serve.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except (UsageError, IngestError, FileNotFoundError, ValidationError,
            json.JSONDecodeError) as exc:
        return _fail(exc, EXIT_USAGE)
    except ConstraintUnsatisfiableError as exc:
        return _fail(exc, EXIT_COMPUTE)
    except ValueError as exc:
        return _fail(exc, EXIT_USAGE)
    except Exception as exc:  # computation failures keep a distinct code
        return _fail(exc, EXIT_COMPUTE)


if __name__ == "__main__":
    sys.exit(main())
