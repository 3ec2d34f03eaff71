"""STFT analysis, power spectra, log-power features, and normalization stats.

Analysis uses a periodic Hann window with no zero-padding. A trailing
frame that would end exactly at the signal boundary is dropped (unless it
is the only frame), so a 1 s / 16 kHz utterance maps to 123 frames with
the default 256/128 framing.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .audio_io import Utterance
from .errors import (
    BinCountMismatchError,
    EmptyInputError,
    InvalidLengthError,
    TooShortError,
)

EPS_FLOOR = 1e-10
STD_FLOOR = 1e-8


@dataclass
class ComplexSpectrogram:
    values: np.ndarray  # (K, L) complex, linear amplitude
    frame_len: int
    hop: int

    @property
    def bins(self) -> int:
        return self.values.shape[0]

    @property
    def frames(self) -> int:
        return self.values.shape[1]


@dataclass
class PowerSpectrogram:
    values: np.ndarray  # (K, L) real, amplitude squared
    role: str = "noisy"  # one of: noisy, clean, noise, smoothed-noise


@dataclass
class FeatureMatrix:
    values: np.ndarray  # (K, L) log power


@dataclass
class NormStats:
    mean: np.ndarray  # (K,)
    std: np.ndarray  # (K,), floored at STD_FLOOR


def hann_window(n: int) -> np.ndarray:
    """Periodic Hann: w[i] = 0.5 * (1 - cos(2 pi i / n))."""
    if n < 2 or n % 2 != 0:
        raise InvalidLengthError(f"window length must be even and >= 2, got {n}")
    return 0.5 * (1.0 - np.cos(2.0 * np.pi * np.arange(n) / n))


def frame_count(num_samples: int, frame_len: int, hop: int) -> int:
    """Frames fully inside the signal, dropping a final frame that ends flush
    with the last sample (kept when it is the only frame)."""
    if num_samples < frame_len:
        raise TooShortError(f"{num_samples} samples < frame length {frame_len}")
    return max(1, -(-(num_samples - frame_len) // hop))


def stft(u: Utterance, frame_len: int = 256, hop: int = 128) -> ComplexSpectrogram:
    """Windowed one-sided DFT; frame t covers samples [t*hop, t*hop + frame_len)."""
    x = u.samples
    num_frames = frame_count(len(x), frame_len, hop)
    window = hann_window(frame_len)
    starts = np.arange(num_frames) * hop
    frames = x[starts[:, None] + np.arange(frame_len)] * window
    values = np.ascontiguousarray(np.fft.rfft(frames, axis=1).T)
    return ComplexSpectrogram(values=values, frame_len=frame_len, hop=hop)


def power_spec(s: ComplexSpectrogram, role: str = "noisy") -> PowerSpectrogram:
    v = s.values
    return PowerSpectrogram(values=v.real**2 + v.imag**2, role=role)


def log_power(p: PowerSpectrogram, eps_floor: float = EPS_FLOOR) -> FeatureMatrix:
    """Natural log of the power, floored at eps_floor to avoid -inf on silence."""
    return FeatureMatrix(values=np.log(np.maximum(p.values, eps_floor)))


def compute_norm_stats(features: list[FeatureMatrix]) -> NormStats:
    """Per-bin mean and population std pooled over all frames of all matrices."""
    if not features:
        raise EmptyInputError("need at least one feature matrix")
    bins = features[0].values.shape[0]
    for f in features:
        if f.values.shape[0] != bins:
            raise BinCountMismatchError(
                f"bin counts disagree: {f.values.shape[0]} vs {bins}"
            )
    pooled = np.concatenate([f.values for f in features], axis=1)
    mean = pooled.mean(axis=1)
    std = np.maximum(pooled.std(axis=1), STD_FLOOR)
    return NormStats(mean=mean, std=std)


def normalize(f: FeatureMatrix, s: NormStats) -> FeatureMatrix:
    if f.values.shape[0] != s.mean.shape[0]:
        raise BinCountMismatchError(
            f"features have {f.values.shape[0]} bins, stats have {s.mean.shape[0]}"
        )
    return FeatureMatrix(values=(f.values - s.mean[:, None]) / s.std[:, None])


def denormalize(f: FeatureMatrix, s: NormStats) -> FeatureMatrix:
    if f.values.shape[0] != s.mean.shape[0]:
        raise BinCountMismatchError(
            f"features have {f.values.shape[0]} bins, stats have {s.mean.shape[0]}"
        )
    return FeatureMatrix(values=f.values * s.std[:, None] + s.mean[:, None])
