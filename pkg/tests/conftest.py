"""Shared fixtures: synthetic corpora and the trained smoke-test bundle."""

import shutil

import pytest

from sppkit.audio_io import Manifest, build_manifest, mix_at_snr, read_wav
from sppkit.evaluation import evaluate
from sppkit.model import ModelConfig, infer, train_binwise
from sppkit.spectral import power_spec, stft
from sppkit.targets import ground_truth_labels
from sppkit.synth import write_tone_burst_corpus

# Configuration used for the end-to-end smoke training (acceptance criterion
# scale): desk-sized corpus, higher learning rate than the real-data default
# since each scalar model sees only a few minutes of audio.
SMOKE_TRAIN = dict(
    kind="binwise",
    neighbors=0,
    epochs=80,
    batch_utterances=1,
    lr=0.01,
    lr_decay_epochs=[60, 75],
    seed=5,
)


@pytest.fixture(scope="session")
def corpus(tmp_path_factory):
    """20 utterances x 10 s, split 16 train / 4 held out."""
    root = tmp_path_factory.mktemp("corpus")
    clean_dir, noise_dir = root / "clean", root / "noise"
    write_tone_burst_corpus(clean_dir, noise_dir, 20, seed=123, duration_s=10.0)
    cleans = sorted(clean_dir.glob("*.wav"))
    noises = sorted(noise_dir.glob("*.wav"))
    dirs = {}
    for name in ("train_clean", "test_clean", "train_noise", "test_noise"):
        dirs[name] = root / name
        dirs[name].mkdir()
    for p in cleans[:16]:
        shutil.copy(p, dirs["train_clean"] / p.name)
    for p in cleans[16:]:
        shutil.copy(p, dirs["test_clean"] / p.name)
    for p in noises[:16]:
        shutil.copy(p, dirs["train_noise"] / p.name)
    for p in noises[16:]:
        shutil.copy(p, dirs["test_noise"] / p.name)
    train_man = build_manifest(dirs["train_clean"], dirs["train_noise"], -5, 25, seed=11)
    test_man = build_manifest(dirs["test_clean"], dirs["test_noise"], -5, 25, seed=22, split="test")
    return {"root": root, "train": train_man, "test": test_man}


@pytest.fixture(scope="session")
def small_corpus(tmp_path_factory):
    """4 utterances x 2 s for fast pipeline tests."""
    root = tmp_path_factory.mktemp("small_corpus")
    clean_dir, noise_dir = root / "clean", root / "noise"
    write_tone_burst_corpus(clean_dir, noise_dir, 4, seed=7, duration_s=2.0)
    manifest = build_manifest(clean_dir, noise_dir, -5, 25, seed=3)
    return {"root": root, "clean": clean_dir, "noise": noise_dir, "manifest": manifest}


@pytest.fixture(scope="session")
def smoke_bundle(corpus):
    """Bin-wise model trained on the session corpus (shared by several tests)."""
    cfg = ModelConfig(**SMOKE_TRAIN)
    bundle, history = train_binwise(corpus["train"], cfg)
    return {"bundle": bundle, "history": history, "config": cfg}


def mixed_pairs(manifest: Manifest, score_fn, frame_len=256, hop=128):
    """(scores, labels) per manifest entry; score_fn(noisy, scaled_noise) -> SppMatrix."""
    pairs = []
    for e in manifest.entries:
        clean = read_wav(e.clean)
        noise = read_wav(e.noise)
        noisy, scaled_noise, _ = mix_at_snr(clean, noise, e.snr_db, e.seed)
        labels = ground_truth_labels(power_spec(stft(clean, frame_len, hop), role="clean"))
        pairs.append((score_fn(noisy, scaled_noise), labels))
    return pairs


def evaluate_bundle(bundle, manifest: Manifest, name="model"):
    pairs = mixed_pairs(manifest, lambda noisy, _: infer(bundle, noisy))
    return evaluate(pairs, estimator=name, dataset=manifest.split)
