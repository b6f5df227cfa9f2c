import json
import subprocess
import sys

import numpy as np
import pytest

from amtc.cli import main
from amtc.dp import TransitionModel, accumulate, backtrack
from amtc.formats import read_trace_csv, write_spectrogram_csv
from amtc.ingest import Spectrogram


@pytest.fixture
def ridge_csv(tmp_path):
    rng = np.random.default_rng(0)
    values = rng.random((24, 40)) * 0.2
    values[7] += 3.0
    values[15] += 1.5
    spect = Spectrogram(values=values, f0=50.0, df=0.5, t0=1.0, dt=0.2)
    path = tmp_path / "spect.csv"
    write_spectrogram_csv(path, spect)
    return path, spect


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestTrack:
    def test_track_spectrogram_against_library(self, tmp_path, ridge_csv, capsys):
        path, spect = ridge_csv
        out = tmp_path / "run"
        code, stdout, _ = run_cli(capsys, "track", str(path), "--out", str(out),
                                  "--ntraces", "2", "-k", "2", "--delta-f", "3")
        assert code == 0
        summary = json.loads(stdout)
        assert summary["n_traces"] == 2
        doc = json.loads((tmp_path / "run.json").read_text())
        expected = backtrack(accumulate(spect.values, TransitionModel.uniform_band(2)))
        assert doc["traces"][0] == [int(b) for b in expected]
        assert doc["freq_axis"] == {"f0": 50.0, "df": 0.5}
        bins, freqs, voiced = read_trace_csv(tmp_path / "run_trace1.csv")
        assert np.array_equal(bins, np.array(doc["traces"][0]))
        np.testing.assert_allclose(freqs, 50.0 + 0.5 * bins)

    def test_missing_input_exits_2(self, tmp_path, capsys):
        code, _, err = run_cli(capsys, "track", str(tmp_path / "nope.csv"),
                               "--out", str(tmp_path / "x"))
        assert code == 2
        doc = json.loads(err)
        assert "not found" in doc["error"]["message"]

    def test_constraint_flag_redirects_trace(self, tmp_path, ridge_csv, capsys):
        path, spect = ridge_csv
        constraint = json.dumps({"frames": [5, 30], "bins": [14, 16]})
        out = tmp_path / "run"
        code, stdout, _ = run_cli(capsys, "track", str(path), "--out", str(out),
                                  "-k", "2", "--delta-f", "3",
                                  "--constraints", constraint)
        assert code == 0
        doc = json.loads((tmp_path / "run.json").read_text())
        assert any(14 <= b <= 16 for b in doc["traces"][0][5:31])

    def test_unsatisfiable_constraint_exits_3(self, tmp_path, ridge_csv, capsys):
        path, spect = ridge_csv
        values = spect.values.copy()
        values[20:22, :] = 0.0
        dead = Spectrogram(values=values, f0=50.0, df=0.5, t0=1.0, dt=0.2)
        dead_path = tmp_path / "dead.csv"
        write_spectrogram_csv(dead_path, dead)
        constraint = json.dumps({"frames": [0, 10], "bins": [20, 21]})
        code, _, err = run_cli(capsys, "track", str(dead_path),
                               "--out", str(tmp_path / "x"),
                               "-k", "2", "--delta-f", "3",
                               "--constraints", constraint)
        assert code == 3
        assert "Constraint" in json.loads(err)["error"]["type"]

    def test_audio_csv_without_stft_flags_exits_2(self, tmp_path, capsys):
        audio = tmp_path / "audio.csv"
        audio.write_text("\n".join(str(np.sin(0.3 * i)) for i in range(400)))
        code, _, err = run_cli(capsys, "track", str(audio),
                               "--out", str(tmp_path / "y"),
                               "--sample-rate", "40")
        assert code == 2

    def test_wav_end_to_end(self, tmp_path, capsys):
        from amtc.ingest import TimeSeries, write_timeseries_wav

        fs = 100.0
        t = np.arange(3000) / fs
        ts = TimeSeries(samples=0.7 * np.sin(2 * np.pi * 12.0 * t),
                        sample_rate_hz=fs)
        wav = tmp_path / "tone.wav"
        write_timeseries_wav(wav, ts)
        out = tmp_path / "tone_out"
        code, stdout, _ = run_cli(capsys, "track", str(wav), "--out", str(out),
                                  "--window-s", "1.0", "--overlap", "0.5",
                                  "--zero-pad", "2", "--fmin", "5", "--fmax", "20",
                                  "--delta-f", "2")
        assert code == 0
        _, freqs, _ = read_trace_csv(tmp_path / "tone_out_trace1.csv")
        np.testing.assert_allclose(freqs, 12.0, atol=0.5)


class TestSynthEval:
    def _config(self, tmp_path, seed=1):
        cfg = {
            "n_traces": 1,
            "stft": {"window_len_s": 5.0, "overlap_fraction": 0.8,
                     "zero_pad_factor": 4, "freq_lo": 0.8, "freq_hi": 3.5},
            "synth": {
                "duration_s": 60.0, "sample_rate_hz": 30.0,
                "traces": [{"process": "constant", "freq": 1.5}],
                "snr_db": 10.0, "freq_lo": 0.8, "freq_hi": 3.5, "seed": seed,
            },
        }
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(cfg))
        return path

    def test_seeded_synth_is_byte_identical(self, tmp_path, capsys):
        cfg = self._config(tmp_path)
        a, b = tmp_path / "a.wav", tmp_path / "b.wav"
        assert run_cli(capsys, "synth", "--config", str(cfg),
                       "--out-wav", str(a))[0] == 0
        assert run_cli(capsys, "synth", "--config", str(cfg),
                       "--out-wav", str(b))[0] == 0
        assert a.read_bytes() == b.read_bytes()

    def test_synth_track_eval_pipeline(self, tmp_path, capsys):
        cfg = self._config(tmp_path)
        code, stdout, _ = run_cli(
            capsys, "synth", "--config", str(cfg),
            "--out-spectrogram", str(tmp_path / "spect.csv"),
            "--gt-prefix", str(tmp_path / "gt"))
        assert code == 0
        code, _, _ = run_cli(capsys, "track", str(tmp_path / "spect.csv"),
                             "--config", str(cfg),
                             "--out", str(tmp_path / "est"), "--delta-f", "5")
        assert code == 0
        code, stdout, _ = run_cli(capsys, "eval",
                                  "--est", str(tmp_path / "est_trace1.csv"),
                                  "--gt", str(tmp_path / "gt_trace1.csv"))
        assert code == 0
        report = json.loads(stdout)
        assert report["erate"] < 0.02
        assert report["ecount"] <= 0.05

    def test_eval_identical_files_all_zero(self, tmp_path, capsys):
        cfg = self._config(tmp_path)
        run_cli(capsys, "synth", "--config", str(cfg),
                "--out-spectrogram", str(tmp_path / "s.csv"),
                "--gt-prefix", str(tmp_path / "gt"))
        code, stdout, _ = run_cli(capsys, "eval",
                                  "--est", str(tmp_path / "gt_trace1.csv"),
                                  "--gt", str(tmp_path / "gt_trace1.csv"))
        assert code == 0
        report = json.loads(stdout)
        assert report["rmse"] == 0.0 and report["erate"] == 0.0
        assert report["ecount"] == 0.0

    def test_eval_mismatched_lengths_exits_2(self, tmp_path, capsys):
        from amtc.formats import write_trace_csv

        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        write_trace_csv(a, np.arange(5), np.full(5, 100.0))
        write_trace_csv(b, np.arange(4), np.full(4, 100.0))
        code, _, err = run_cli(capsys, "eval", "--est", str(a), "--gt", str(b))
        assert code == 2

    def test_seed_flag_overrides_config(self, tmp_path, capsys):
        cfg = self._config(tmp_path, seed=1)
        a, b = tmp_path / "a.wav", tmp_path / "b.wav"
        run_cli(capsys, "synth", "--config", str(cfg), "--out-wav", str(a))
        run_cli(capsys, "synth", "--config", str(cfg), "--seed", "99",
                "--out-wav", str(b))
        assert a.read_bytes() != b.read_bytes()


class TestTrackOnline:
    def test_pipe_round_trip_counts(self, tmp_path, capsys, monkeypatch):
        rng = np.random.default_rng(2)
        frames = rng.random((30, 12))
        frames[:, 4] += 2.0
        lines = "\n".join(",".join(str(v) for v in row) for row in frames)
        frame_file = tmp_path / "frames.txt"
        frame_file.write_text(lines + "\n")
        code, stdout, _ = run_cli(capsys, "track-online",
                                  "--input", str(frame_file),
                                  "--k1", "5", "--k2", "10",
                                  "-k", "2", "--delta-f", "2")
        assert code == 0
        records = [json.loads(ln) for ln in stdout.splitlines() if ln.strip()]
        assert len(records) == 30
        assert [r["frame"] for r in records] == list(range(30))
        assert all(r["bins"][0] == 4 for r in records)

    def test_matches_offline_with_covering_window(self, tmp_path, capsys):
        rng = np.random.default_rng(3)
        frames = rng.random((25, 10))
        frames[:, 6] += 1.0
        frame_file = tmp_path / "frames.txt"
        frame_file.write_text(
            "\n".join(json.dumps(list(row)) for row in frames) + "\n")
        code, stdout, _ = run_cli(capsys, "track-online",
                                  "--input", str(frame_file),
                                  "--k1", "30", "--k2", "30",
                                  "-k", "2", "--delta-f", "2")
        assert code == 0
        records = [json.loads(ln) for ln in stdout.splitlines() if ln.strip()]
        offline = backtrack(accumulate(frames.T, TransitionModel.uniform_band(2)))
        assert [r["bins"][0] for r in records] == [int(b) for b in offline]


class TestEntryPoint:
    def test_module_invocation(self, tmp_path):
        result = subprocess.run(
            [sys.executable, "-m", "amtc.cli", "eval", "--est", "missing.csv",
             "--gt", "missing.csv"],
            capture_output=True, text=True, cwd=tmp_path)
        assert result.returncode == 2
