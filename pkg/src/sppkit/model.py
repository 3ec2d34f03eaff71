"""Frequency bin-wise model ensembles: training, inference, serialization.

Two kinds are supported:
  - "binwise": one scalar-hidden GRU per frequency bin, fed the bin's
    log-power feature and up to `neighbors` bins on each side (the
    neighborhood is truncated at the spectrum edges, so edge models have
    fewer inputs);
  - "typical": a single GRU whose input and hidden sizes both equal the
    bin count, hidden unit k estimating bin k.

A bundle (weights + normalization stats + config) serializes to a single
JSON document with floats printed at 17 significant digits and a SHA-256
checksum over the canonical little-endian float64 bytes of every numeric
array, so a round trip is bit-exact.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .audio_io import Manifest, Utterance, mix_at_snr, read_wav
from .errors import (
    BinOutOfRangeError,
    CorruptFileError,
    EmptyManifestError,
    InvalidDimsError,
    VersionMismatchError,
)
from .gru import GruParams, GruStack, HeadConfig, forward_stack, init_gru, softplus_head
from .spectral import FeatureMatrix, NormStats, compute_norm_stats, log_power, normalize, power_spec, stft
from .targets import SppMatrix, TargetConfig, oracle_spp, smooth_noise_psd
from .training import EpochRecord, TrainingExample, fit_stack_parallel

FORMAT_VERSION = 1


@dataclass
class ModelConfig:
    kind: str = "binwise"  # or "typical"
    bins: int = 129
    neighbors: int = 0  # bins taken on each side of the estimated bin
    hidden: int | None = None  # None resolves to 1 (binwise) or bins (typical)
    head: HeadConfig = field(default_factory=HeadConfig)
    lr: float = 0.001
    weight_decay: float = 1e-5
    lr_decay_epochs: list[int] = field(default_factory=lambda: [50, 100])
    lr_decay_factor: float = 0.1
    epochs: int = 120
    batch_utterances: int = 8
    seed: int = 0
    shuffle: bool = True  # seeded per-epoch utterance order
    chunk_frames: int | None = None  # None = full-length backpropagation
    workers: int = 1
    frame_len: int = 256
    hop: int = 128

    def resolved_hidden(self) -> int:
        if self.hidden is not None:
            return self.hidden
        return 1 if self.kind == "binwise" else self.bins

    def validate(self) -> None:
        if self.kind not in ("binwise", "typical"):
            raise ValueError(f"unknown model kind {self.kind!r}")
        if self.bins < 1 or self.neighbors < 0:
            raise InvalidDimsError("need bins >= 1 and neighbors >= 0")
        if self.bins != self.frame_len // 2 + 1:
            raise InvalidDimsError(
                f"bins ({self.bins}) must equal frame_len/2 + 1 ({self.frame_len // 2 + 1})"
            )
        if self.kind == "binwise" and self.resolved_hidden() != 1:
            raise InvalidDimsError("binwise models use hidden size 1")
        if self.kind == "typical" and self.resolved_hidden() != self.bins:
            raise InvalidDimsError("the typical model uses hidden size == bins")
        if self.lr <= 0.0 or self.epochs < 1 or self.batch_utterances < 1:
            raise ValueError("need lr > 0, epochs >= 1, batch_utterances >= 1")
        if self.frame_len < 2 or self.frame_len % 2 or self.hop < 1:
            raise ValueError("need even frame_len >= 2 and hop >= 1")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if self.chunk_frames is not None and self.chunk_frames < 1:
            raise ValueError("chunk_frames must be None or >= 1")


@dataclass
class ModelBundle:
    config: ModelConfig
    norm: NormStats
    models: list[GruParams]
    format_version: int = FORMAT_VERSION


def neighborhood_span(k: int, bins: int, radius: int) -> tuple[int, int]:
    """Inclusive (lo, hi) feature-bin range feeding the model for bin k."""
    if not 0 <= k < bins:
        raise BinOutOfRangeError(f"bin {k} outside [0, {bins})")
    return max(0, k - radius), min(bins - 1, k + radius)


def assemble_neighborhood(f: FeatureMatrix, k: int, radius: int) -> np.ndarray:
    """(L, n) input for bin k: columns are feature bins lo..hi in ascending order."""
    lo, hi = neighborhood_span(k, f.values.shape[0], radius)
    return np.ascontiguousarray(f.values[lo : hi + 1].T)


def _model_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence((seed, index)).generate_state(1)[0])


def _stacked_inputs(values: np.ndarray, radius: int) -> np.ndarray:
    """(K, L) features to (L, K, 2*radius+1) neighborhoods, zero-padded at edges."""
    bins, frames = values.shape
    width = 2 * radius + 1
    x = np.zeros((frames, bins, width))
    for off in range(-radius, radius + 1):
        col = off + radius
        if off < 0:
            x[:, -off:, col] = values[:off].T
        elif off == 0:
            x[:, :, col] = values.T
        else:
            x[:, :-off, col] = values[off:].T
    return x


def _stack_binwise(models: list[GruParams], radius: int) -> GruStack:
    """Embed per-bin weights into one zero-padded kernel of width 2*radius+1.

    Padded input columns receive zero features, zero gradients, and zero
    weight decay, so they stay exactly zero and the stacked arithmetic
    matches per-model training bit for bit.
    """
    bins = len(models)
    width = 2 * radius + 1
    hidden = models[0].h
    w_input = np.zeros((bins, 3 * hidden, width))
    w_recurrent = np.empty((bins, 3 * hidden, hidden))
    bias_input = np.empty((bins, 3 * hidden))
    bias_recurrent = np.empty((bins, 3 * hidden))
    for k, m in enumerate(models):
        lo, _ = neighborhood_span(k, bins, radius)
        start = radius + lo - k
        w_input[k, :, start : start + m.n] = m.w_input
        w_recurrent[k] = m.w_recurrent
        bias_input[k] = m.bias_input
        bias_recurrent[k] = m.bias_recurrent
    return GruStack(w_input, w_recurrent, bias_input, bias_recurrent)


def _unstack_binwise(stack: GruStack, radius: int) -> list[GruParams]:
    bins = stack.models
    hidden = stack.h
    models = []
    for k in range(bins):
        lo, hi = neighborhood_span(k, bins, radius)
        start = radius + lo - k
        n_k = hi - lo + 1
        models.append(
            GruParams(
                w_input=stack.w_input[k, :, start : start + n_k].copy(),
                w_recurrent=stack.w_recurrent[k].copy(),
                bias_input=stack.bias_input[k].copy(),
                bias_recurrent=stack.bias_recurrent[k].copy(),
                n=n_k,
                h=hidden,
            )
        )
    return models


def build_training_set(
    manifest: Manifest, cfg: ModelConfig, target_cfg: TargetConfig
) -> tuple[list[FeatureMatrix], list[SppMatrix], NormStats]:
    """Mix, analyze, and label every manifest entry; features come back normalized."""
    if not manifest.entries:
        raise EmptyManifestError("manifest has no entries")
    raw_features: list[FeatureMatrix] = []
    targets: list[SppMatrix] = []
    for entry in manifest.entries:
        clean = read_wav(entry.clean)
        noise = read_wav(entry.noise)
        noisy, scaled_noise, _ = mix_at_snr(clean, noise, entry.snr_db, entry.seed)
        noisy_power = power_spec(stft(noisy, cfg.frame_len, cfg.hop))
        raw_features.append(log_power(noisy_power))
        noise_power = power_spec(stft(scaled_noise, cfg.frame_len, cfg.hop), role="noise")
        noise_psd = smooth_noise_psd(noise_power, target_cfg.noise_smoothing)
        targets.append(oracle_spp(noisy_power, noise_psd, target_cfg))
    stats = compute_norm_stats(raw_features)
    features = [normalize(f, stats) for f in raw_features]
    return features, targets, stats


def _fit(stack, examples, cfg: ModelConfig) -> list[EpochRecord]:
    return fit_stack_parallel(
        stack,
        examples,
        cfg.head,
        workers=cfg.workers,
        epochs=cfg.epochs,
        lr=cfg.lr,
        weight_decay=cfg.weight_decay,
        lr_decay_epochs=cfg.lr_decay_epochs,
        lr_decay_factor=cfg.lr_decay_factor,
        batch_utterances=cfg.batch_utterances,
        chunk_frames=cfg.chunk_frames,
        shuffle_seed=cfg.seed if cfg.shuffle else None,
    )


def train_binwise(
    manifest: Manifest, cfg: ModelConfig, target_cfg: TargetConfig | None = None
) -> tuple[ModelBundle, list[EpochRecord]]:
    """Train one GRU per frequency bin on oracle SPP targets."""
    cfg.validate()
    if cfg.kind != "binwise":
        raise ValueError("cfg.kind must be 'binwise'")
    target_cfg = target_cfg or TargetConfig()
    features, targets, stats = build_training_set(manifest, cfg, target_cfg)
    radius = cfg.neighbors
    models = []
    for k in range(cfg.bins):
        lo, hi = neighborhood_span(k, cfg.bins, radius)
        models.append(init_gru(hi - lo + 1, 1, _model_seed(cfg.seed, k)))
    stack = _stack_binwise(models, radius)
    examples = [
        TrainingExample(
            inputs=_stacked_inputs(f.values, radius),
            targets=np.ascontiguousarray(t.values.T)[:, :, None],
        )
        for f, t in zip(features, targets)
    ]
    history = _fit(stack, examples, cfg)
    bundle = ModelBundle(config=cfg, norm=stats, models=_unstack_binwise(stack, radius))
    return bundle, history


def train_typical(
    manifest: Manifest, cfg: ModelConfig, target_cfg: TargetConfig | None = None
) -> tuple[ModelBundle, list[EpochRecord]]:
    """Train the all-bins reference model (input size = hidden size = bins)."""
    cfg.validate()
    if cfg.kind != "typical":
        raise ValueError("cfg.kind must be 'typical'")
    target_cfg = target_cfg or TargetConfig()
    features, targets, stats = build_training_set(manifest, cfg, target_cfg)
    model = init_gru(cfg.bins, cfg.bins, _model_seed(cfg.seed, 0))
    stack = GruStack(
        w_input=model.w_input[None].copy(),
        w_recurrent=model.w_recurrent[None].copy(),
        bias_input=model.bias_input[None].copy(),
        bias_recurrent=model.bias_recurrent[None].copy(),
    )
    examples = [
        TrainingExample(
            inputs=np.ascontiguousarray(f.values.T)[:, None, :],
            targets=np.ascontiguousarray(t.values.T)[:, None, :],
        )
        for f, t in zip(features, targets)
    ]
    history = _fit(stack, examples, cfg)
    trained = GruParams(
        w_input=stack.w_input[0],
        w_recurrent=stack.w_recurrent[0],
        bias_input=stack.bias_input[0],
        bias_recurrent=stack.bias_recurrent[0],
        n=cfg.bins,
        h=cfg.bins,
    )
    bundle = ModelBundle(config=cfg, norm=stats, models=[trained])
    return bundle, history


def infer(bundle: ModelBundle, utterance: Utterance) -> SppMatrix:
    """Causal frame-by-frame SPP estimation with the bundle's stored stats."""
    cfg = bundle.config
    spec = stft(utterance, cfg.frame_len, cfg.hop)
    feats = normalize(log_power(power_spec(spec)), bundle.norm)
    if cfg.kind == "binwise":
        stack = _stack_binwise(bundle.models, cfg.neighbors)
        x = _stacked_inputs(feats.values, cfg.neighbors)
        h_seq, _ = forward_stack(stack, x)
        est = softplus_head(h_seq, cfg.head)
        spp = est[:, :, 0].T
    else:
        m = bundle.models[0]
        stack = GruStack(
            m.w_input[None], m.w_recurrent[None], m.bias_input[None], m.bias_recurrent[None]
        )
        x = np.ascontiguousarray(feats.values.T)[:, None, :]
        h_seq, _ = forward_stack(stack, x)
        est = softplus_head(h_seq, cfg.head)
        spp = est[:, 0, :].T
    return SppMatrix(values=np.clip(spp, 0.0, 1.0))


def count_params(bundle: ModelBundle) -> int:
    """Stored weights only; the output head is a fixed activation."""
    return sum(m.param_count() for m in bundle.models)


def count_macs_per_frame(bundle: ModelBundle) -> int:
    """Multiply-accumulates of the two matrix-vector products per time frame,
    summed over models: 3h(n + h). Pointwise gate arithmetic is excluded."""
    return sum(m.w_input.size + m.w_recurrent.size for m in bundle.models)


# ---------------------------------------------------------------------------
# Serialization: one JSON document, floats at 17 significant digits,
# checksum over the canonical bytes of all numeric arrays.
# ---------------------------------------------------------------------------


def _format_float(x: float) -> str:
    if not math.isfinite(x):
        raise ValueError(f"non-finite value {x} cannot be serialized")
    return format(x, ".17g")


def _emit_json(obj, out: list[str]) -> None:
    if obj is None or isinstance(obj, (bool, int, str)):
        out.append(json.dumps(obj))
    elif isinstance(obj, float):
        out.append(_format_float(obj))
    elif isinstance(obj, dict):
        out.append("{")
        for i, (key, value) in enumerate(obj.items()):
            if i:
                out.append(",")
            out.append(json.dumps(key) + ":")
            _emit_json(value, out)
        out.append("}")
    elif isinstance(obj, (list, tuple)):
        out.append("[")
        for i, value in enumerate(obj):
            if i:
                out.append(",")
            _emit_json(value, out)
        out.append("]")
    else:
        raise TypeError(f"cannot serialize {type(obj)}")


def _config_to_dict(cfg: ModelConfig) -> dict:
    # `workers` is an execution detail with no effect on the math, so it is
    # kept out of the serialized config (bundles match across parallelism).
    return {
        "kind": cfg.kind,
        "bins": cfg.bins,
        "neighbors": cfg.neighbors,
        "hidden": cfg.hidden,
        "head": {"beta": cfg.head.beta, "clamp": cfg.head.clamp},
        "lr": cfg.lr,
        "weight_decay": cfg.weight_decay,
        "lr_decay_epochs": list(cfg.lr_decay_epochs),
        "lr_decay_factor": cfg.lr_decay_factor,
        "epochs": cfg.epochs,
        "batch_utterances": cfg.batch_utterances,
        "seed": cfg.seed,
        "shuffle": cfg.shuffle,
        "chunk_frames": cfg.chunk_frames,
        "frame_len": cfg.frame_len,
        "hop": cfg.hop,
    }


def config_from_dict(data: dict) -> ModelConfig:
    data = dict(data)
    head = data.pop("head", None)
    known = {f for f in ModelConfig.__dataclass_fields__ if f != "head"}
    extra = set(data) - known
    if extra:
        raise ValueError(f"unknown config fields {sorted(extra)}")
    cfg = ModelConfig(**data)
    if head is not None:
        extra = set(head) - {"beta", "clamp"}
        if extra:
            raise ValueError(f"unknown head fields {sorted(extra)}")
        cfg.head = HeadConfig(beta=float(head.get("beta", 10.0)), clamp=bool(head.get("clamp", True)))
    cfg.validate()
    return cfg


def config_fingerprint(cfg: ModelConfig) -> str:
    out: list[str] = []
    _emit_json(_config_to_dict(cfg), out)
    return hashlib.sha256("".join(out).encode("utf-8")).hexdigest()[:12]


def _canonical_bytes(bundle: ModelBundle) -> bytes:
    digest = hashlib.sha256()
    digest.update(np.ascontiguousarray(bundle.norm.mean, dtype="<f8").tobytes())
    digest.update(np.ascontiguousarray(bundle.norm.std, dtype="<f8").tobytes())
    for m in bundle.models:
        for arr in (m.w_input, m.w_recurrent, m.bias_input, m.bias_recurrent):
            digest.update(np.ascontiguousarray(arr, dtype="<f8").tobytes())
    return digest.hexdigest().encode("ascii")


def save_bundle(bundle: ModelBundle, path) -> None:
    doc = {
        "format_version": bundle.format_version,
        "config": _config_to_dict(bundle.config),
        "norm": {
            "mean": [float(v) for v in bundle.norm.mean],
            "std": [float(v) for v in bundle.norm.std],
        },
        "models": [
            {
                "n": m.n,
                "h": m.h,
                "w_input": [[float(v) for v in row] for row in m.w_input],
                "w_recurrent": [[float(v) for v in row] for row in m.w_recurrent],
                "bias_input": [float(v) for v in m.bias_input],
                "bias_recurrent": [float(v) for v in m.bias_recurrent],
            }
            for m in bundle.models
        ],
        "checksum": _canonical_bytes(bundle).decode("ascii"),
    }
    out: list[str] = []
    _emit_json(doc, out)
    Path(path).write_text("".join(out), encoding="utf-8")


def load_bundle(path) -> ModelBundle:
    text = Path(path).read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CorruptFileError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(doc, dict) or "format_version" not in doc:
        raise CorruptFileError(f"{path}: missing format_version")
    if doc["format_version"] != FORMAT_VERSION:
        raise VersionMismatchError(
            f"{path}: format_version {doc['format_version']} unsupported (want {FORMAT_VERSION})"
        )
    try:
        cfg = config_from_dict(doc["config"])
        norm = NormStats(
            mean=np.asarray(doc["norm"]["mean"], dtype=np.float64),
            std=np.asarray(doc["norm"]["std"], dtype=np.float64),
        )
        models = [
            GruParams(
                w_input=np.asarray(m["w_input"], dtype=np.float64).reshape(3 * m["h"], m["n"]),
                w_recurrent=np.asarray(m["w_recurrent"], dtype=np.float64).reshape(3 * m["h"], m["h"]),
                bias_input=np.asarray(m["bias_input"], dtype=np.float64),
                bias_recurrent=np.asarray(m["bias_recurrent"], dtype=np.float64),
                n=int(m["n"]),
                h=int(m["h"]),
            )
            for m in doc["models"]
        ]
        stored_checksum = doc["checksum"]
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptFileError(f"{path}: malformed bundle ({exc})") from exc
    bundle = ModelBundle(config=cfg, norm=norm, models=models)
    if _canonical_bytes(bundle).decode("ascii") != stored_checksum:
        raise CorruptFileError(f"{path}: checksum mismatch")
    expected = cfg.bins if cfg.kind == "binwise" else 1
    if len(models) != expected:
        raise CorruptFileError(f"{path}: expected {expected} models, found {len(models)}")
    return bundle
