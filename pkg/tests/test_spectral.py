"""STFT analysis, features, and normalization statistics."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from sppkit.audio_io import Utterance
from sppkit.errors import (
    BinCountMismatchError,
    EmptyInputError,
    InvalidLengthError,
    TooShortError,
)
from sppkit.spectral import (
    FeatureMatrix,
    PowerSpectrogram,
    compute_norm_stats,
    denormalize,
    frame_count,
    hann_window,
    log_power,
    normalize,
    power_spec,
    stft,
)


class TestHannWindow:
    def test_small_exact(self):
        assert_allclose(hann_window(4), [0.0, 0.5, 1.0, 0.5], atol=1e-15)

    def test_endpoints_256(self):
        w = hann_window(256)
        assert w[0] == 0.0
        assert w[128] == 1.0

    def test_invalid_lengths(self):
        for n in (0, 1, 3, 255):
            with pytest.raises(InvalidLengthError):
                hann_window(n)


class TestStft:
    def test_one_second_shape(self):
        u = Utterance(np.zeros(16000))
        s = stft(u)
        assert (s.bins, s.frames) == (129, 123)

    def test_frame_counts(self):
        assert frame_count(16000, 256, 128) == 123
        assert frame_count(16001, 256, 128) == 124
        assert frame_count(256, 256, 128) == 1
        assert frame_count(257, 256, 128) == 1

    def test_too_short(self):
        with pytest.raises(TooShortError):
            stft(Utterance(np.zeros(255)))

    def test_pure_cosine_peaks_at_bin_16(self):
        t = np.arange(16000) / 16000.0
        u = Utterance(0.5 * np.cos(2 * np.pi * 1000.0 * t))
        p = power_spec(stft(u))
        assert np.all(np.argmax(p.values, axis=0) == 16)

    def test_zero_input_zero_output(self):
        s = stft(Utterance(np.zeros(4000)))
        assert np.all(s.values == 0)

    def test_parseval_per_frame(self):
        rng = np.random.default_rng(11)
        x = rng.normal(0, 0.1, 8000)
        s = stft(Utterance(x))
        w = hann_window(256)
        for t in range(s.frames):
            frame = x[t * 128 : t * 128 + 256] * w
            time_energy = np.sum(frame**2)
            mags = np.abs(s.values[:, t]) ** 2
            freq_energy = (mags[0] + mags[-1] + 2 * np.sum(mags[1:-1])) / 256.0
            assert abs(freq_energy - time_energy) <= 1e-6 * time_energy


class TestPowerSpec:
    def test_three_four_i(self):
        s = stft(Utterance(np.zeros(4000)))
        s.values[:] = 3 + 4j
        assert np.all(power_spec(s).values == 25.0)

    def test_conjugation_invariance(self):
        rng = np.random.default_rng(12)
        s = stft(Utterance(rng.normal(0, 0.1, 4000)))
        p1 = power_spec(s).values
        s.values = s.values.conj()
        p2 = power_spec(s).values
        assert np.array_equal(p1, p2)


class TestLogPower:
    def test_values(self):
        p = PowerSpectrogram(np.array([[1.0, 0.0, np.e**2]]))
        f = log_power(p)
        assert_allclose(f.values, [[0.0, np.log(1e-10), 2.0]], rtol=1e-12)


class TestNormStats:
    def test_constant_row_floored(self):
        stats = compute_norm_stats([FeatureMatrix(np.array([[1.0, 1.0, 1.0]]))])
        assert stats.mean[0] == 1.0
        assert stats.std[0] == 1e-8

    def test_population_std(self):
        stats = compute_norm_stats([FeatureMatrix(np.array([[0.0, 2.0]]))])
        assert_allclose([stats.mean[0], stats.std[0]], [1.0, 1.0], rtol=1e-15)

    def test_normalized_stats_are_standard(self):
        rng = np.random.default_rng(13)
        mats = [FeatureMatrix(rng.normal(3, 2, (5, 40))) for _ in range(3)]
        stats = compute_norm_stats(mats)
        renorm = compute_norm_stats([normalize(m, stats) for m in mats])
        assert_allclose(renorm.mean, 0.0, atol=1e-9)
        assert_allclose(renorm.std, 1.0, atol=1e-9)

    def test_errors(self):
        with pytest.raises(EmptyInputError):
            compute_norm_stats([])
        with pytest.raises(BinCountMismatchError):
            compute_norm_stats([FeatureMatrix(np.zeros((3, 4))), FeatureMatrix(np.zeros((4, 4)))])

    def test_normalize_round_trip(self):
        rng = np.random.default_rng(14)
        m = FeatureMatrix(rng.normal(-10, 4, (6, 30)))
        stats = compute_norm_stats([m])
        back = denormalize(normalize(m, stats), stats)
        assert np.max(np.abs(back.values - m.values)) < 1e-12

    def test_bin_mismatch_on_normalize(self):
        m = FeatureMatrix(np.zeros((3, 4)))
        stats = compute_norm_stats([FeatureMatrix(np.zeros((5, 4)))])
        with pytest.raises(BinCountMismatchError):
            normalize(m, stats)


class TestPowerAdditivity:
    def test_monte_carlo_mean_power_adds(self):
        """Independent zero-mean signals: mean |Y|^2 = mean |X|^2 + mean |D|^2."""
        rng = np.random.default_rng(15)
        trials = 1000
        sum_x = sum_d = sum_y = 0.0
        for _ in range(trials):
            x = rng.normal(0, 0.1, 1024)
            d = rng.normal(0, 0.07, 1024)
            sum_x = sum_x + power_spec(stft(Utterance(x))).values
            sum_d = sum_d + power_spec(stft(Utterance(d))).values
            sum_y = sum_y + power_spec(stft(Utterance(x + d))).values
        lhs = sum_y / trials
        rhs = (sum_x + sum_d) / trials
        rel = np.abs(lhs - rhs) / rhs
        assert np.max(rel) < 0.05
