"""WAV round trips, SNR-controlled mixing, and manifest assembly."""

import json
import math
import wave

import numpy as np
import pytest
from numpy.testing import assert_allclose

from sppkit.audio_io import (
    Utterance,
    build_manifest,
    load_manifest,
    mix_at_snr,
    read_wav,
    save_manifest,
    write_wav,
)
from sppkit.errors import EmptyDirectoryError, SilentInputError, UnsupportedFormatError


def _write_raw_wav(path, channels, width, rate, frames: bytes):
    with wave.open(str(path), "wb") as w:
        w.setnchannels(channels)
        w.setsampwidth(width)
        w.setframerate(rate)
        w.writeframes(frames)


class TestReadWav:
    def test_silence_one_second(self, tmp_path):
        p = tmp_path / "zeros.wav"
        _write_raw_wav(p, 1, 2, 16000, b"\x00\x00" * 16000)
        u = read_wav(p)
        assert len(u.samples) == 16000
        assert np.all(u.samples == 0.0)

    def test_scaling_identity(self, tmp_path):
        p = tmp_path / "half.wav"
        _write_raw_wav(p, 1, 2, 16000, np.array([16384], dtype="<i2").tobytes())
        assert read_wav(p).samples[0] == 0.5

    def test_rejects_stereo_44k(self, tmp_path):
        p = tmp_path / "bad.wav"
        _write_raw_wav(p, 2, 2, 44100, b"\x00\x00\x00\x00" * 10)
        with pytest.raises(UnsupportedFormatError):
            read_wav(p)

    def test_rejects_non_wav(self, tmp_path):
        p = tmp_path / "not.wav"
        p.write_bytes(b"definitely not RIFF data")
        with pytest.raises(UnsupportedFormatError):
            read_wav(p)

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            read_wav(tmp_path / "nope.wav")

    def test_write_read_round_trip(self, tmp_path):
        rng = np.random.default_rng(0)
        samples = np.round(rng.uniform(-1, 1, 1000) * 32768) / 32768.0
        samples = np.clip(samples, -1.0, 32767 / 32768.0)
        p = tmp_path / "rt.wav"
        write_wav(p, Utterance(samples, id="rt"))
        assert_allclose(read_wav(p).samples, samples, atol=1e-12)


class TestMixAtSnr:
    def _utt(self, samples, name="u"):
        return Utterance(np.asarray(samples, dtype=np.float64), id=name)

    def test_gain_closed_form(self):
        rng = np.random.default_rng(1)
        clean = self._utt(0.1 * np.sign(rng.normal(size=4000)))  # RMS exactly 0.1
        noise = self._utt(0.1 * np.sign(rng.normal(size=4000)))
        _, _, gain = mix_at_snr(clean, noise, 20.0, seed=0)
        assert_allclose(gain, 0.1, rtol=1e-12)

    def test_zero_db_equal_rms_gain_one(self):
        rng = np.random.default_rng(2)
        x = rng.normal(0, 0.05, 3000)
        clean = self._utt(x)
        noise = self._utt(x[::-1].copy())
        _, _, gain = mix_at_snr(clean, noise, 0.0, seed=0)
        assert_allclose(gain, 1.0, rtol=1e-12)

    def test_achieved_snr(self):
        rng = np.random.default_rng(3)
        clean = self._utt(rng.normal(0, 0.08, 16000))
        noise = self._utt(rng.normal(0, 0.05, 20000))
        for snr in (-5.0, 0.0, 11.5, 25.0):
            noisy, scaled, _ = mix_at_snr(clean, noise, snr, seed=4)
            recovered = noisy.samples - scaled.samples
            achieved = 10 * math.log10(np.mean(recovered**2) / np.mean(scaled.samples**2))
            assert abs(achieved - snr) < 1e-9

    def test_linearity(self):
        rng = np.random.default_rng(4)
        clean = self._utt(rng.normal(0, 0.05, 8000))
        noise = self._utt(rng.normal(0, 0.05, 8000))
        noisy, scaled, _ = mix_at_snr(clean, noise, 10.0, seed=0)
        assert np.max(np.abs((noisy.samples - scaled.samples) - clean.samples)) < 1e-12

    def test_peak_scaling_keeps_snr_and_range(self):
        rng = np.random.default_rng(5)
        clean = self._utt(0.95 * np.sin(2 * np.pi * 440 * np.arange(8000) / 16000))
        noise = self._utt(rng.normal(0, 0.3, 8000))
        noisy, scaled, _ = mix_at_snr(clean, noise, 0.0, seed=1)
        assert np.max(np.abs(noisy.samples)) <= 1.0 + 1e-15
        recovered = noisy.samples - scaled.samples
        achieved = 10 * math.log10(np.mean(recovered**2) / np.mean(scaled.samples**2))
        assert abs(achieved - 0.0) < 1e-9

    def test_noise_tiling_when_short(self):
        rng = np.random.default_rng(6)
        clean = self._utt(rng.normal(0, 0.05, 10000))
        noise = self._utt(rng.normal(0, 0.05, 3000))
        noisy, scaled, _ = mix_at_snr(clean, noise, 5.0, seed=2)
        assert len(noisy.samples) == len(clean.samples) == len(scaled.samples)

    def test_silent_inputs_rejected(self):
        silent = self._utt(np.zeros(1000))
        live = self._utt(np.full(1000, 0.1))
        with pytest.raises(SilentInputError):
            mix_at_snr(silent, live, 0.0, seed=0)
        with pytest.raises(SilentInputError):
            mix_at_snr(live, silent, 0.0, seed=0)

    def test_determinism(self):
        rng = np.random.default_rng(7)
        clean = self._utt(rng.normal(0, 0.05, 5000))
        noise = self._utt(rng.normal(0, 0.05, 9000))
        a = mix_at_snr(clean, noise, 3.0, seed=42)
        b = mix_at_snr(clean, noise, 3.0, seed=42)
        assert np.array_equal(a[0].samples, b[0].samples)
        assert np.array_equal(a[1].samples, b[1].samples)


class TestManifest:
    def _corpus(self, tmp_path, n_clean, n_noise):
        clean_dir = tmp_path / "clean"
        noise_dir = tmp_path / "noise"
        rng = np.random.default_rng(0)
        for i in range(n_clean):
            write_wav(clean_dir / f"c{i}.wav", Utterance(rng.normal(0, 0.05, 1600)))
        for i in range(n_noise):
            write_wav(noise_dir / f"n{i}.wav", Utterance(rng.normal(0, 0.05, 1600)))
        return clean_dir, noise_dir

    def test_forced_pairing_single_noise(self, tmp_path):
        clean_dir, noise_dir = self._corpus(tmp_path, 2, 1)
        m = build_manifest(clean_dir, noise_dir, seed=7)
        assert len(m.entries) == 2
        assert m.entries[0].noise == m.entries[1].noise

    def test_deterministic_bytes(self, tmp_path):
        clean_dir, noise_dir = self._corpus(tmp_path, 3, 2)
        p1, p2 = tmp_path / "m1.json", tmp_path / "m2.json"
        save_manifest(build_manifest(clean_dir, noise_dir, seed=9), p1)
        save_manifest(build_manifest(clean_dir, noise_dir, seed=9), p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_snr_range_and_unique_seeds(self, tmp_path):
        clean_dir, noise_dir = self._corpus(tmp_path, 8, 3)
        m = build_manifest(clean_dir, noise_dir, snr_min=-5, snr_max=25, seed=1)
        snrs = [e.snr_db for e in m.entries]
        assert all(-5.0 <= s <= 25.0 for s in snrs)
        seeds = [e.seed for e in m.entries]
        assert len(set(seeds)) == len(seeds)

    def test_empty_directory(self, tmp_path):
        clean_dir, noise_dir = self._corpus(tmp_path, 1, 1)
        empty = tmp_path / "empty"
        empty.mkdir()
        with pytest.raises(EmptyDirectoryError):
            build_manifest(empty, noise_dir)
        with pytest.raises(EmptyDirectoryError):
            build_manifest(clean_dir, empty)

    def test_round_trip_and_unknown_fields(self, tmp_path):
        clean_dir, noise_dir = self._corpus(tmp_path, 2, 2)
        m = build_manifest(clean_dir, noise_dir, seed=5)
        path = tmp_path / "m.json"
        save_manifest(m, path)
        loaded = load_manifest(path)
        assert [e.__dict__ for e in loaded.entries] == [e.__dict__ for e in m.entries]
        rows = json.loads(path.read_text())
        rows[0]["surprise"] = 1
        path.write_text(json.dumps(rows))
        with pytest.raises(ValueError):
            load_manifest(path)
