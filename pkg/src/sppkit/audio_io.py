"""WAV input/output, dataset manifests, and SNR-controlled noise mixing.

All audio is 16 kHz mono 16-bit PCM; anything else is rejected so the
caller knows the dataset needs pre-conversion. Mixing and manifest
assembly are pure functions of (inputs, seed), so reruns reproduce the
same bytes.
"""

from __future__ import annotations

import json
import math
import wave
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import EmptyDirectoryError, SilentInputError, UnsupportedFormatError

SAMPLE_RATE = 16000
PCM_SCALE = 32768.0


@dataclass
class Utterance:
    samples: np.ndarray  # float64 amplitudes in [-1, 1]
    sample_rate: int = SAMPLE_RATE
    id: str = ""

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)

    def rms(self) -> float:
        if self.samples.size == 0:
            return 0.0
        return float(np.sqrt(np.mean(self.samples**2)))


@dataclass
class MixSpec:
    clean_id: str
    noise_id: str
    snr_db: float
    seed: int
    gain: float = 0.0


@dataclass
class ManifestEntry:
    clean: str
    noise: str
    snr_db: float
    seed: int


@dataclass
class Manifest:
    entries: list[ManifestEntry]
    split: str = "train"


def read_wav(path) -> Utterance:
    """Read a mono 16-bit 16 kHz PCM WAV, scaling raw integers by 1/32768."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(str(path))
    try:
        with wave.open(str(path), "rb") as wav:
            channels = wav.getnchannels()
            width = wav.getsampwidth()
            rate = wav.getframerate()
            if (channels, width, rate) != (1, 2, SAMPLE_RATE):
                raise UnsupportedFormatError(
                    f"{path}: need mono 16-bit {SAMPLE_RATE} Hz PCM, "
                    f"got {channels} ch / {8 * width} bit / {rate} Hz"
                )
            raw = wav.readframes(wav.getnframes())
    except (wave.Error, EOFError) as exc:
        raise UnsupportedFormatError(f"{path}: not a readable RIFF/WAVE file ({exc})") from exc
    samples = np.frombuffer(raw, dtype="<i2").astype(np.float64) / PCM_SCALE
    return Utterance(samples=samples, id=path.stem)


def write_wav(path, utterance: Utterance) -> None:
    """Write as mono 16-bit PCM, clipping to the representable range."""
    ints = np.clip(np.rint(utterance.samples * PCM_SCALE), -32768, 32767).astype("<i2")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with wave.open(str(path), "wb") as wav:
        wav.setnchannels(1)
        wav.setsampwidth(2)
        wav.setframerate(utterance.sample_rate)
        wav.writeframes(ints.tobytes())


def _align_noise(noise: np.ndarray, length: int, rng: np.random.Generator) -> np.ndarray:
    """Crop at a seeded random offset if longer than the clean signal, tile if shorter."""
    if len(noise) == length:
        return noise.copy()
    if len(noise) > length:
        offset = int(rng.integers(0, len(noise) - length + 1))
        return noise[offset : offset + length].copy()
    reps = -(-length // len(noise))
    return np.tile(noise, reps)[:length]


def mix_at_snr(clean: Utterance, noise: Utterance, snr_db: float, seed: int):
    """Mix noise into clean speech at the requested broadband SNR.

    The noise gain is g = sqrt(P_clean / (P_noise * 10^(snr_db/10))) with P
    the mean squared amplitude over the full aligned segments. If the sum
    would clip, all outputs are scaled jointly so the achieved SNR is kept.

    Returns (noisy, scaled_noise, gain) where scaled_noise is exactly the
    noise component of the returned mix (gain times the aligned noise),
    available downstream for oracle noise statistics.
    """
    if clean.rms() == 0.0:
        raise SilentInputError("clean utterance has zero RMS")
    if noise.rms() == 0.0:
        raise SilentInputError("noise utterance has zero RMS")
    rng = np.random.default_rng(seed)
    aligned = _align_noise(noise.samples, len(clean.samples), rng)
    p_clean = float(np.mean(clean.samples**2))
    p_noise = float(np.mean(aligned**2))
    if p_noise == 0.0:
        raise SilentInputError("aligned noise segment has zero RMS")
    gain = math.sqrt(p_clean / (p_noise * 10.0 ** (snr_db / 10.0)))
    scaled = gain * aligned
    noisy = clean.samples + scaled
    peak = float(np.max(np.abs(noisy)))
    if peak > 1.0:
        noisy = noisy / peak
        scaled = scaled / peak
        gain = gain / peak
    mix_id = f"{clean.id}+{noise.id}@{snr_db:g}dB"
    return (
        Utterance(noisy, clean.sample_rate, mix_id),
        Utterance(scaled, clean.sample_rate, mix_id + ".noise"),
        gain,
    )


def build_manifest(
    clean_dir,
    noise_dir,
    snr_min: float = -5.0,
    snr_max: float = 25.0,
    seed: int = 0,
    split: str = "train",
) -> Manifest:
    """One entry per clean WAV; noise file and SNR drawn with the seeded generator."""
    cleans = sorted(Path(clean_dir).glob("*.wav"))
    noises = sorted(Path(noise_dir).glob("*.wav"))
    if not cleans:
        raise EmptyDirectoryError(f"no WAV files in {clean_dir}")
    if not noises:
        raise EmptyDirectoryError(f"no WAV files in {noise_dir}")
    rng = np.random.default_rng(seed)
    entries = []
    seen_seeds: set[int] = set()
    for idx, clean in enumerate(cleans):
        noise = noises[int(rng.integers(len(noises)))]
        snr_db = float(rng.uniform(snr_min, snr_max))
        entry_seed = int(np.random.SeedSequence((seed, idx)).generate_state(1)[0])
        while entry_seed in seen_seeds:
            entry_seed = (entry_seed + 1) % 2**32
        seen_seeds.add(entry_seed)
        entries.append(ManifestEntry(str(clean), str(noise), snr_db, entry_seed))
    return Manifest(entries=entries, split=split)


def save_manifest(manifest: Manifest, path) -> None:
    """Serialize as a JSON array of {clean, noise, snr_db, seed} objects."""
    rows = [
        {"clean": e.clean, "noise": e.noise, "snr_db": e.snr_db, "seed": e.seed}
        for e in manifest.entries
    ]
    Path(path).write_text(json.dumps(rows, indent=2) + "\n", encoding="utf-8")


def load_manifest(path, split: str = "train") -> Manifest:
    rows = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(rows, list):
        raise ValueError(f"{path}: manifest must be a JSON array")
    entries = []
    for row in rows:
        extra = set(row) - {"clean", "noise", "snr_db", "seed"}
        if extra:
            raise ValueError(f"{path}: unknown manifest fields {sorted(extra)}")
        entries.append(
            ManifestEntry(str(row["clean"]), str(row["noise"]), float(row["snr_db"]), int(row["seed"]))
        )
    return Manifest(entries=entries, split=split)
