"""Training targets and ground-truth labels.

Targets are the a-posteriori speech presence probability computed from the
noisy periodogram against an oracle noise PSD (available during data
synthesis, never at inference). Labels mark bins whose clean power lies
within 60 dB of the utterance's maximum instantaneous power.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import AllSilentError, ShapeMismatchError
from .spectral import PowerSpectrogram

NOISE_PSD_FLOOR = 1e-12


@dataclass
class TargetConfig:
    prior_ratio: float = 1.0  # p(H0)/p(H1)
    xi_h1: float = 10.0**1.5  # a-priori SNR when speech is present, linear power
    noise_smoothing: float = 0.8

    def validate(self) -> None:
        if self.prior_ratio <= 0.0:
            raise ValueError("prior_ratio must be > 0")
        if self.xi_h1 <= 0.0:
            raise ValueError("xi_h1 must be > 0")
        if not 0.0 < self.noise_smoothing < 1.0:
            raise ValueError("noise_smoothing must be in (0, 1)")


@dataclass
class SppMatrix:
    values: np.ndarray  # (K, L) probabilities in [0, 1]


@dataclass
class LabelMatrix:
    values: np.ndarray  # (K, L) integers in {0, 1}


def smooth_noise_psd(noise_power: PowerSpectrogram, alpha: float) -> PowerSpectrogram:
    """First-order recursive smoothing along frames, seeded with frame 0."""
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must be in (0, 1), got {alpha}")
    x = noise_power.values
    out = np.empty_like(x)
    out[:, 0] = x[:, 0]
    step = 1.0 - alpha
    # incremental form: exact fixed point for constant input
    for l in range(1, x.shape[1]):
        out[:, l] = out[:, l - 1] + step * (x[:, l] - out[:, l - 1])
    return PowerSpectrogram(values=out, role="smoothed-noise")


def oracle_spp(
    noisy_power: PowerSpectrogram, noise_psd: PowerSpectrogram, cfg: TargetConfig
) -> SppMatrix:
    """A-posteriori SPP under the fixed-prior complex-Gaussian model.

    SPP = 1 / (1 + prior_ratio * (1 + xi) * exp(-(|Y|^2 / phi_D) * xi / (1 + xi)))
    """
    cfg.validate()
    if noisy_power.values.shape != noise_psd.values.shape:
        raise ShapeMismatchError(
            f"noisy {noisy_power.values.shape} vs noise PSD {noise_psd.values.shape}"
        )
    posterior = noisy_power.values / np.maximum(noise_psd.values, NOISE_PSD_FLOOR)
    xi = cfg.xi_h1
    spp = 1.0 / (1.0 + cfg.prior_ratio * (1.0 + xi) * np.exp(-posterior * (xi / (1.0 + xi))))
    return SppMatrix(values=spp)


def spp_floor(cfg: TargetConfig) -> float:
    """Value the oracle SPP takes when the noisy power is zero."""
    return 1.0 / (1.0 + cfg.prior_ratio * (1.0 + cfg.xi_h1))


def ground_truth_labels(clean_power: PowerSpectrogram, threshold_db: float = 60.0) -> LabelMatrix:
    """Label 1 iff the bin's power lies strictly above (max power - threshold_db)."""
    max_power = float(clean_power.values.max(initial=0.0))
    if max_power <= 0.0:
        raise AllSilentError("clean power is identically zero")
    threshold = max_power * 10.0 ** (-threshold_db / 10.0)
    return LabelMatrix(values=(clean_power.values > threshold).astype(np.uint8))


def write_matrix_csv(values: np.ndarray, path) -> None:
    """Rows are frequency bins, columns are frames; header names the frames."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    integral = np.issubdtype(values.dtype, np.integer)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"frame_{l}" for l in range(values.shape[1])])
        for row in values:
            writer.writerow([int(v) for v in row] if integral else [repr(float(v)) for v in row])
