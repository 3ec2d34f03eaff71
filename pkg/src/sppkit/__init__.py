"""Frequency bin-wise speech presence probability estimation toolkit."""

from .audio_io import (
    Manifest,
    ManifestEntry,
    MixSpec,
    Utterance,
    build_manifest,
    load_manifest,
    mix_at_snr,
    read_wav,
    save_manifest,
    write_wav,
)
from .baseline import BaselineConfig, unbiased_mmse_spp
from .evaluation import MetricsReport, RocCurve, auc, evaluate, pd_at_pfa, roc_curve
from .gru import (
    AdamState,
    GruParams,
    HeadConfig,
    adam_init,
    adam_step,
    gru_backward,
    gru_forward,
    init_gru,
    mse_loss,
    softplus_head,
)
from .model import (
    ModelBundle,
    ModelConfig,
    assemble_neighborhood,
    count_macs_per_frame,
    count_params,
    infer,
    load_bundle,
    save_bundle,
    train_binwise,
    train_typical,
)
from .spectral import (
    ComplexSpectrogram,
    FeatureMatrix,
    NormStats,
    PowerSpectrogram,
    compute_norm_stats,
    denormalize,
    hann_window,
    log_power,
    normalize,
    power_spec,
    stft,
)
from .targets import (
    LabelMatrix,
    SppMatrix,
    TargetConfig,
    ground_truth_labels,
    oracle_spp,
    smooth_noise_psd,
    spp_floor,
)

__version__ = "0.1.0"
