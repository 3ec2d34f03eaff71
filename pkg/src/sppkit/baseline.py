"""Conventional blind SPP estimation: fixed-prior posterior probability with
SPP-driven noise PSD tracking (unbiased-MMSE style).

Per bin and frame: evaluate the a-posteriori SPP against the current noise
PSD estimate, guard against the probability sticking at one via a
time-smoothed SPP, then update the PSD with the SPP-weighted periodogram.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .spectral import PowerSpectrogram
from .targets import NOISE_PSD_FLOOR, SppMatrix


@dataclass
class BaselineConfig:
    xi_h1: float = 10.0**1.5  # fixed a-priori SNR when speech is present
    prior_ratio: float = 1.0  # p(H0)/p(H1)
    psd_smoothing: float = 0.8
    spp_time_smoothing: float = 0.9
    stuck_guard: float = 0.99
    init_frames: int = 5  # frames averaged for the initial noise PSD

    def validate(self) -> None:
        for name in ("psd_smoothing", "spp_time_smoothing", "stuck_guard"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise ValueError(f"{name} must be in (0, 1), got {v}")
        if self.xi_h1 <= 0.0 or self.prior_ratio <= 0.0:
            raise ValueError("xi_h1 and prior_ratio must be > 0")
        if self.init_frames < 1:
            raise ValueError("init_frames must be >= 1")


def unbiased_mmse_spp(
    noisy_power: PowerSpectrogram, cfg: BaselineConfig | None = None
) -> tuple[SppMatrix, PowerSpectrogram]:
    """Blind SPP from the noisy periodogram alone.

    Returns (SPP matrix, tracked noise PSD). The PSD starts from the mean
    of the first few frames, so a noise-leading segment is assumed.
    """
    cfg = cfg or BaselineConfig()
    cfg.validate()
    power = noisy_power.values
    bins, frames = power.shape
    glr_factor = cfg.prior_ratio * (1.0 + cfg.xi_h1)
    exp_factor = cfg.xi_h1 / (1.0 + cfg.xi_h1)

    psd = power[:, : min(cfg.init_frames, frames)].mean(axis=1)
    smoothed_spp = np.zeros(bins)
    spp = np.empty((bins, frames))
    tracked = np.empty((bins, frames))
    a_psd = cfg.psd_smoothing
    a_spp = cfg.spp_time_smoothing
    for l in range(frames):
        posterior = power[:, l] / np.maximum(psd, NOISE_PSD_FLOOR)
        prob = 1.0 / (1.0 + glr_factor * np.exp(-posterior * exp_factor))
        smoothed_spp = a_spp * smoothed_spp + (1.0 - a_spp) * prob
        prob = np.where(smoothed_spp > cfg.stuck_guard, np.minimum(prob, cfg.stuck_guard), prob)
        periodogram = (1.0 - prob) * power[:, l] + prob * psd
        psd = a_psd * psd + (1.0 - a_psd) * periodogram
        spp[:, l] = prob
        tracked[:, l] = psd
    return SppMatrix(values=spp), PowerSpectrogram(values=tracked, role="smoothed-noise")
