"""Log mel filterbank features, the fixed front-end."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ._validation import check_sample_rate, check_waveform
from .dsp import DEFAULT_HOP_MS, DEFAULT_WINDOW_MS, mel_filterbank, stft

LOG_FLOOR = 1e-10
VARIANCE_FLOOR = 1e-8
DEFAULT_MEL_BANDS = 80


@dataclass
class FeatureMatrix:
    """Frames-by-channels feature matrix with its frame shift.

    channel_labels optionally carries permutation metadata (for example
    a peak-frequency ordering of learned filters).
    """

    data: np.ndarray
    frame_shift_ms: float
    channel_labels: np.ndarray | None = None

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float64)
        if self.data.ndim != 2:
            raise ValueError(f"feature data must be 2-D, got shape {self.data.shape}")
        if self.data.size and not np.all(np.isfinite(self.data)):
            raise ValueError("feature data contains non-finite entries")

    @property
    def n_frames(self) -> int:
        return self.data.shape[0]

    @property
    def n_channels(self) -> int:
        return self.data.shape[1]


def mean_variance_normalize(data: np.ndarray) -> np.ndarray:
    """Per-channel mean/variance normalization over time.

    Channels whose variance falls below VARIANCE_FLOOR come out as all
    zeros (the centered values are divided by the floored deviation), so
    degenerate constant channels stay finite.
    """
    if data.shape[0] == 0:
        return data.copy()
    mean = data.mean(axis=0, keepdims=True)
    var = data.var(axis=0, keepdims=True)
    return (data - mean) / np.sqrt(np.maximum(var, VARIANCE_FLOOR))


@lru_cache(maxsize=8)
def _cached_filterbank(sample_rate: int, fft_size: int, n_bands: int) -> np.ndarray:
    bank = mel_filterbank(sample_rate, fft_size, n_bands, 0.0, sample_rate / 2.0)
    bank.flags.writeable = False
    return bank


def log_mel_features(
    x,
    sample_rate: int,
    window_ms: float = DEFAULT_WINDOW_MS,
    hop_ms: float = DEFAULT_HOP_MS,
    n_bands: int = DEFAULT_MEL_BANDS,
    normalize: bool = True,
) -> FeatureMatrix:
    """Log mel features: STFT -> power -> mel warp -> log -> normalization.

    The filterbank spans 0 Hz to Nyquist at the given rate. An utterance
    shorter than one window still produces a single (zero padded) frame;
    with normalization enabled that frame is all zeros because every
    channel is constant over its single time step.
    """
    x = check_waveform(x)
    sample_rate = check_sample_rate(sample_rate)
    spec = stft(x, sample_rate, window_ms=window_ms, hop_ms=hop_ms)
    if spec.n_frames == 0:
        return FeatureMatrix(np.zeros((0, n_bands)), hop_ms)
    power = np.abs(spec.frames) ** 2
    bank = _cached_filterbank(sample_rate, spec.fft_size, n_bands)
    logmel = np.log(power @ bank.T + LOG_FLOOR)
    if normalize:
        logmel = mean_variance_normalize(logmel)
    return FeatureMatrix(logmel, hop_ms)
