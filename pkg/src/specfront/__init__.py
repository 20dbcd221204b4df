"""Audio perturbations, speech front-ends, and STFT-domain masking.

A regularization toolkit for speech feature extraction: six waveform
perturbations applied per sequence with configurable probability, fixed
log mel and trainable convolutional front-ends (with analytic gradients),
three masking strategies (feature-domain, sorted-channel, STFT-domain),
and a gradient verification harness. A scikit-learn style estimator layer
makes the transforms composable with the wider ecosystem; a CLI covers
file-based processing.
"""

from .config import PRESETS, PipelineConfig, load_config, parse_config, preset
from .convfront import (
    FrontendGrads,
    FrontendParams,
    FrontendTape,
    filter_peak_frequencies,
    frontend_backward,
    frontend_forward,
    init_frontend_params,
    load_frontend_params,
    save_frontend_params,
)
from .demo import DemoConfig, DemoResult, ToyTask, toy_overfit_demo, write_curves_csv
from .dsp import (
    Spectrogram,
    hann_periodic,
    hz_to_mel,
    istft,
    mel_filterbank,
    mel_to_hz,
    reconstruction_weight,
    resample,
    stft,
)
from .errors import ConfigError
from .estimators import (
    AudioPerturber,
    ConvFrontend,
    FeatureMasker,
    LogMelFrontend,
    StftMasker,
)
from .features import FeatureMatrix, log_mel_features, mean_variance_normalize
from .gradcheck import (
    GradReport,
    MaskedGradientReport,
    finite_difference_check,
    masked_gradient_experiment,
)
from .io import read_features, read_wav, write_features, write_pgm, write_wav
from .masking import (
    MaskPolicy,
    MaskSet,
    apply_feature_masks,
    apply_sorted_feature_masks,
    apply_spectrogram_masks,
    apply_stft_masks,
    sample_masks,
)
from .perturb import (
    PerturbChain,
    PerturbSpec,
    apply_chain,
    perturb_amplitude_nonlinear,
    perturb_mulaw,
    perturb_pitch,
    perturb_preemphasis_jitter,
    perturb_speed,
    perturb_tempo,
    preemphasis,
)

__version__ = "0.1.0"

__all__ = [
    "AudioPerturber",
    "ConfigError",
    "ConvFrontend",
    "DemoConfig",
    "DemoResult",
    "FeatureMasker",
    "FeatureMatrix",
    "FrontendGrads",
    "FrontendParams",
    "FrontendTape",
    "GradReport",
    "LogMelFrontend",
    "MaskPolicy",
    "MaskSet",
    "MaskedGradientReport",
    "PRESETS",
    "PerturbChain",
    "PerturbSpec",
    "PipelineConfig",
    "Spectrogram",
    "StftMasker",
    "ToyTask",
    "apply_chain",
    "apply_feature_masks",
    "apply_sorted_feature_masks",
    "apply_spectrogram_masks",
    "apply_stft_masks",
    "filter_peak_frequencies",
    "finite_difference_check",
    "frontend_backward",
    "frontend_forward",
    "hann_periodic",
    "hz_to_mel",
    "init_frontend_params",
    "istft",
    "load_config",
    "load_frontend_params",
    "log_mel_features",
    "masked_gradient_experiment",
    "mean_variance_normalize",
    "mel_filterbank",
    "mel_to_hz",
    "parse_config",
    "perturb_amplitude_nonlinear",
    "perturb_mulaw",
    "perturb_pitch",
    "perturb_preemphasis_jitter",
    "perturb_speed",
    "perturb_tempo",
    "preemphasis",
    "preset",
    "read_features",
    "read_wav",
    "reconstruction_weight",
    "resample",
    "sample_masks",
    "save_frontend_params",
    "stft",
    "toy_overfit_demo",
    "write_curves_csv",
    "write_features",
    "write_pgm",
    "write_wav",
]
