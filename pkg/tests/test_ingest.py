import wave

import numpy as np
import pytest

from amtc.formats import (
    looks_like_spectrogram_csv,
    read_spectrogram_csv,
    write_spectrogram_csv,
)
from amtc.ingest import (
    EmptyInputError,
    FileUnreadableError,
    MalformedDataError,
    Spectrogram,
    StftConfig,
    TimeSeries,
    UnsupportedEncodingError,
    band_local_snr,
    compute_spectrogram,
    decimate,
    extract_harmonic_bands,
    harmonic_combine,
    load_timeseries,
    write_timeseries_wav,
)


class TestLoadCsv:
    def test_single_column_with_rate(self, tmp_path):
        path = tmp_path / "sig.csv"
        path.write_text("0.0\n1.0\n0.0\n")
        ts = load_timeseries(path, "csv", sample_rate_hz=3.0)
        assert ts.samples.size == 3
        assert ts.sample_rate_hz == 3.0

    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("")
        with pytest.raises(EmptyInputError, match="empty input"):
            load_timeseries(path, "csv", sample_rate_hz=1.0)

    def test_two_column_rate_inferred(self, tmp_path):
        path = tmp_path / "sig.csv"
        path.write_text("time,amp\n0.0,1.0\n0.25,2.0\n0.5,3.0\n")
        ts = load_timeseries(path, "csv")
        assert ts.sample_rate_hz == pytest.approx(4.0)
        np.testing.assert_allclose(ts.samples, [1.0, 2.0, 3.0])

    def test_malformed_row(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("0.0\nnot-a-number\n")
        with pytest.raises(MalformedDataError, match="row 2"):
            load_timeseries(path, "csv", sample_rate_hz=1.0)

    def test_nonuniform_times_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("0.0,1.0\n0.1,2.0\n0.35,3.0\n")
        with pytest.raises(MalformedDataError, match="uniform"):
            load_timeseries(path, "csv")

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileUnreadableError):
            load_timeseries(tmp_path / "nope.csv", "csv", sample_rate_hz=1.0)

    def test_single_column_requires_rate(self, tmp_path):
        path = tmp_path / "sig.csv"
        path.write_text("1.0\n2.0\n")
        with pytest.raises(ValueError, match="sample_rate_hz"):
            load_timeseries(path, "csv")


class TestLoadWav:
    def _write_sine(self, path, freq_hz, rate=44100, seconds=1.0):
        t = np.arange(int(rate * seconds)) / rate
        pcm = np.rint(0.8 * 32767 * np.sin(2 * np.pi * freq_hz * t)).astype("<i2")
        with wave.open(str(path), "wb") as fh:
            fh.setnchannels(1)
            fh.setsampwidth(2)
            fh.setframerate(rate)
            fh.writeframes(pcm.tobytes())

    def test_sine_fixture_peak_at_30hz(self, tmp_path):
        path = tmp_path / "sine.wav"
        self._write_sine(path, 30.0)
        ts = load_timeseries(path, "wav")
        assert ts.sample_rate_hz == 44100.0
        spectrum = np.abs(np.fft.rfft(ts.samples))
        peak_hz = np.fft.rfftfreq(ts.samples.size, 1 / 44100.0)[np.argmax(spectrum)]
        assert peak_hz == pytest.approx(30.0, abs=0.5)

    def test_stereo_rejected(self, tmp_path):
        path = tmp_path / "stereo.wav"
        with wave.open(str(path), "wb") as fh:
            fh.setnchannels(2)
            fh.setsampwidth(2)
            fh.setframerate(8000)
            fh.writeframes(np.zeros(64, dtype="<i2").tobytes())
        with pytest.raises(UnsupportedEncodingError, match="mono"):
            load_timeseries(path, "wav")

    def test_8bit_rejected(self, tmp_path):
        path = tmp_path / "bad.wav"
        with wave.open(str(path), "wb") as fh:
            fh.setnchannels(1)
            fh.setsampwidth(1)
            fh.setframerate(8000)
            fh.writeframes(bytes(64))
        with pytest.raises(UnsupportedEncodingError, match="16-bit"):
            load_timeseries(path, "wav")

    def test_garbage_bytes_rejected(self, tmp_path):
        path = tmp_path / "junk.wav"
        path.write_bytes(b"definitely not riff data")
        with pytest.raises(MalformedDataError):
            load_timeseries(path, "wav")

    def test_write_read_roundtrip(self, tmp_path):
        rng = np.random.default_rng(0)
        ts = TimeSeries(samples=rng.uniform(-0.9, 0.9, 500), sample_rate_hz=8000.0)
        path = tmp_path / "rt.wav"
        write_timeseries_wav(path, ts)
        back = load_timeseries(path, "wav")
        np.testing.assert_allclose(back.samples, ts.samples, atol=1e-4)


class TestComputeSpectrogram:
    def test_on_bin_sinusoid_peaks_every_frame(self):
        fs = 100.0
        cfg = StftConfig(window_len_s=1.0, overlap_fraction=0.5)
        t = np.arange(1000) / fs
        ts = TimeSeries(samples=np.sin(2 * np.pi * 10.0 * t), sample_rate_hz=fs)
        spect = compute_spectrogram(ts, cfg, (5.0, 15.0))
        peak_bins = spect.values.argmax(axis=0)
        np.testing.assert_allclose(spect.freq_of_bin(peak_bins), 10.0)

    def test_dc_excluded_range_is_near_zero(self):
        fs = 50.0
        cfg = StftConfig(window_len_s=1.0)
        ts = TimeSeries(samples=np.ones(500), sample_rate_hz=fs)
        without_dc = compute_spectrogram(ts, cfg, (1.0, 20.0))
        with_dc = compute_spectrogram(ts, cfg, (0.0, 20.0))
        assert without_dc.values.max() < 1e-9 * with_dc.values.max()

    def test_mains_monitoring_config(self):
        # 8 s rectangular window, no overlap, 0.004 Hz bins around 60 Hz
        fs = 1000.0
        cfg = StftConfig(window_len_s=8.0, overlap_fraction=0.0,
                         zero_pad_factor=31.25)
        t = np.arange(int(24 * fs)) / fs
        ts = TimeSeries(samples=np.sin(2 * np.pi * 60.0 * t), sample_rate_hz=fs)
        spect = compute_spectrogram(ts, cfg, (59.0, 61.0))
        assert spect.dt == pytest.approx(8.0)
        assert spect.df == pytest.approx(0.004)
        assert spect.n_frames == 3
        peak = spect.values[:, 0].argmax()
        assert spect.freq_of_bin(peak) == pytest.approx(60.0, abs=0.004)

    def test_frame_count_formula(self):
        fs = 10.0
        ts = TimeSeries(samples=np.random.default_rng(1).random(107),
                        sample_rate_hz=fs)
        cfg = StftConfig(window_len_s=2.0, overlap_fraction=0.75)
        spect = compute_spectrogram(ts, cfg, (0.0, 5.0))
        window, hop = 20, 5
        assert spect.n_frames == (107 - window) // hop + 1

    def test_magnitude_linearity(self):
        rng = np.random.default_rng(2)
        samples = rng.normal(size=400)
        fs = 40.0
        cfg = StftConfig(window_len_s=1.0, overlap_fraction=0.5, zero_pad_factor=2)
        one = compute_spectrogram(TimeSeries(samples, fs), cfg, (0.0, 20.0))
        two = compute_spectrogram(TimeSeries(2.0 * samples, fs), cfg, (0.0, 20.0))
        np.testing.assert_allclose(two.values, 2.0 * one.values, rtol=1e-12)
        assert np.all(one.values >= 0)

    def test_too_short_signal(self):
        ts = TimeSeries(samples=np.ones(5), sample_rate_hz=10.0)
        with pytest.raises(ValueError, match="shorter than one window"):
            compute_spectrogram(ts, StftConfig(window_len_s=1.0), (0.0, 5.0))


class TestHarmonicCombine:
    def _spect(self, values):
        return Spectrogram(values=np.asarray(values, dtype=float),
                           f0=59.0, df=0.01, t0=0.5, dt=1.0)

    def test_single_band_identity(self):
        rng = np.random.default_rng(3)
        band = self._spect(rng.random((12, 7)))
        out = harmonic_combine([band], [1])
        np.testing.assert_allclose(out.values, band.values)

    def test_two_identical_bands(self):
        rng = np.random.default_rng(4)
        band = self._spect(rng.random((12, 7)))
        twin = self._spect(band.values.copy())
        out = harmonic_combine([band, twin], [1, 2])
        np.testing.assert_allclose(out.values, band.values, rtol=1e-12)

    def test_three_to_one_snr_gives_three_to_one_weights(self):
        m = 9
        a = np.ones((m, 1))
        a[4, 0] = 9.0   # local snr 9 with delta_f=1 on a flat background
        b = np.ones((m, 1))
        b[6, 0] = 3.0   # local snr 3
        band_a, band_b = self._spect(a), self._spect(b)
        snr_a = band_local_snr(a, delta_f=1)[0]
        snr_b = band_local_snr(b, delta_f=1)[0]
        assert snr_a / snr_b == pytest.approx(3.0)
        out = harmonic_combine([band_a, band_b], [1, 2], delta_f=1)
        expected = 0.75 * a + 0.25 * b
        np.testing.assert_allclose(out.values, expected, rtol=1e-12)

    def test_convex_envelope(self):
        rng = np.random.default_rng(5)
        bands = [self._spect(rng.random((10, 6)) + 0.01) for _ in range(3)]
        out = harmonic_combine(bands, [1, 2, 3])
        stacked = np.stack([b.values for b in bands])
        assert np.all(out.values <= stacked.max(axis=0) + 1e-12)
        assert np.all(out.values >= stacked.min(axis=0) - 1e-12)

    def test_empty_band_list_rejected(self):
        with pytest.raises(ValueError):
            harmonic_combine([], [])

    def test_mismatched_shapes_rejected(self):
        a = self._spect(np.ones((4, 4)))
        b = self._spect(np.ones((4, 5)))
        with pytest.raises(ValueError):
            harmonic_combine([a, b], [1, 2])

    def test_extract_bands_share_axis(self):
        fs = 400.0
        t = np.arange(int(40 * fs)) / fs
        samples = np.sin(2 * np.pi * 60.0 * t) + 0.5 * np.sin(2 * np.pi * 120.0 * t)
        ts = TimeSeries(samples=samples, sample_rate_hz=fs)
        cfg = StftConfig(window_len_s=4.0, overlap_fraction=0.0, zero_pad_factor=4)
        bands = extract_harmonic_bands(ts, cfg, 60.0, [1, 2], 1.0)
        assert bands[0].values.shape == bands[1].values.shape
        combined = harmonic_combine(bands, [1, 2])
        peak = combined.values[:, 0].argmax()
        assert combined.freq_of_bin(peak) == pytest.approx(60.0, abs=2 * combined.df)


class TestDecimate:
    def test_identity_factor(self):
        ts = TimeSeries(samples=np.arange(10.0), sample_rate_hz=10.0)
        assert decimate(ts, 1) is ts

    def test_rate_and_length(self):
        ts = TimeSeries(samples=np.arange(100.0), sample_rate_hz=1000.0)
        out = decimate(ts, 4)
        assert out.sample_rate_hz == 250.0
        assert out.samples.size == 25

    def test_moving_average_prefilter_kills_nyquist_tone(self):
        fs = 1000.0
        t = np.arange(2000) / fs
        # tone exactly at the post-decimation Nyquist alias target
        tone = np.sin(2 * np.pi * 250.0 * t)
        out = decimate(TimeSeries(tone, fs), 4)
        assert np.abs(out.samples[4:]).max() < 0.3


class TestSpectrogramCsv:
    def test_roundtrip(self, tmp_path):
        rng = np.random.default_rng(6)
        spect = Spectrogram(values=rng.random((5, 8)), f0=59.0, df=0.004,
                            t0=4.0, dt=8.0)
        path = tmp_path / "spect.csv"
        write_spectrogram_csv(path, spect)
        back = read_spectrogram_csv(path)
        np.testing.assert_array_equal(back.values, spect.values)
        assert (back.f0, back.df, back.t0, back.dt) == (59.0, 0.004, 4.0, 8.0)
        assert looks_like_spectrogram_csv(path)

    def test_sniffer_rejects_audio_csv(self, tmp_path):
        path = tmp_path / "audio.csv"
        path.write_text("0.0,1.0\n0.1,2.0\n")
        assert not looks_like_spectrogram_csv(path)

    def test_wrong_frame_count_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("2,3,0.0,1.0,0.0,1.0\n1.0,2.0\n")
        with pytest.raises(MalformedDataError):
            read_spectrogram_csv(path)
