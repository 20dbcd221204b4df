"""Time and channel masking in three flavors.

Masks are blocks of consecutive frames or channels set to zero, the
SpecAugment recipe. Three application strategies:

* feature-domain masking directly on the extracted feature matrix,
* sorted feature masking, where channel masks address channels through a
  peak-frequency ordering so each mask covers a coherent frequency
  region even when the storage order of learned filters is arbitrary,
* STFT-domain masking, which zeroes complex STFT cells of the waveform
  and resynthesizes it, so masking happens before any feature extraction.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._validation import check_waveform
from .dsp import (
    DEFAULT_HOP_MS,
    DEFAULT_WINDOW_MS,
    Spectrogram,
    istft,
    reconstruction_weight,
    stft,
)
from .errors import ConfigError
from .features import FeatureMatrix

DOMAINS = ("feature", "feature_sorted", "stft")

# Samples whose overlap-add weight is at or below this have essentially no
# window coverage (the first and last handful of samples). They reconstruct
# exactly for an unmodified spectrogram, but after masking the division by
# a near-zero weight would blow up whatever modification residue lands
# there, so apply_stft_masks mutes them instead.
EDGE_WEIGHT_GATE = 1e-3


@dataclass(frozen=True)
class MaskPolicy:
    """Upper limits and counts for random mask sampling.

    Mask lengths are drawn uniformly from {1..max}, start positions
    uniformly over the axis, and masks are clipped at the boundary, so a
    sampled mask never exceeds the sequence or channel extent. The fill
    value is zero in every domain (features are mean normalized, so zero
    is approximately the channel mean; STFT cells are zeroed as complex
    values).
    """

    max_time_mask: int = 15
    num_time_masks: int = 2
    max_channel_mask: int = 8
    num_channel_masks: int = 2
    domain: str = "feature"

    def __post_init__(self):
        if self.domain not in DOMAINS:
            raise ConfigError(f"unknown masking domain {self.domain!r}; expected one of {DOMAINS}")
        for count_name, max_name in (
            ("num_time_masks", "max_time_mask"),
            ("num_channel_masks", "max_channel_mask"),
        ):
            count = getattr(self, count_name)
            limit = getattr(self, max_name)
            if count < 0:
                raise ConfigError(f"{count_name} must be >= 0, got {count}")
            if count > 0 and limit < 1:
                raise ConfigError(f"{max_name} must be >= 1 when {count_name} > 0, got {limit}")


@dataclass(frozen=True)
class MaskSet:
    """Concrete sampled masks: (start, length) intervals per axis."""

    time_masks: tuple[tuple[int, int], ...] = field(default_factory=tuple)
    channel_masks: tuple[tuple[int, int], ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "time_masks", tuple((int(s), int(l)) for s, l in self.time_masks))
        object.__setattr__(
            self, "channel_masks", tuple((int(s), int(l)) for s, l in self.channel_masks)
        )
        for start, length in self.time_masks + self.channel_masks:
            if start < 0 or length < 1:
                raise ValueError(f"invalid mask interval ({start}, {length})")


def sample_masks(policy: MaskPolicy, n_frames: int, n_channels: int, rng) -> MaskSet:
    """Draw a MaskSet for a (n_frames, n_channels) extent.

    Draw order is fixed for reproducibility: all time masks first, then
    all channel masks; per mask the length is drawn before the start.
    """
    if n_frames < 1 or n_channels < 1:
        raise ValueError(f"extents must be >= 1, got ({n_frames}, {n_channels})")

    def draw(count: int, limit: int, extent: int):
        masks = []
        for _ in range(count):
            length = int(rng.integers(1, limit + 1))
            start = int(rng.integers(0, extent))
            masks.append((start, min(length, extent - start)))
        return tuple(masks)

    return MaskSet(
        time_masks=draw(policy.num_time_masks, policy.max_time_mask, n_frames),
        channel_masks=draw(policy.num_channel_masks, policy.max_channel_mask, n_channels),
    )


def _check_bounds(masks, extent: int, axis_name: str) -> None:
    for start, length in masks:
        if start + length > extent:
            raise ValueError(
                f"{axis_name} mask [{start}, {start + length}) exceeds extent {extent}"
            )


def _unwrap(features):
    if isinstance(features, FeatureMatrix):
        return features.data, features
    return np.asarray(features, dtype=np.float64), None


def _rewrap(data: np.ndarray, template):
    if template is None:
        return data
    return FeatureMatrix(data, template.frame_shift_ms, template.channel_labels)


def apply_feature_masks(features, mask_set: MaskSet):
    """Zero masked rows/columns of a feature matrix; all other cells are untouched.

    Accepts a FeatureMatrix or a plain (frames, channels) array and
    returns the same kind. Raises ValueError for out-of-bounds masks
    (sample_masks never produces one).
    """
    data, template = _unwrap(features)
    _check_bounds(mask_set.time_masks, data.shape[0], "time")
    _check_bounds(mask_set.channel_masks, data.shape[1], "channel")
    out = data.copy()
    for start, length in mask_set.time_masks:
        out[start : start + length, :] = 0.0
    for start, length in mask_set.channel_masks:
        out[:, start : start + length] = 0.0
    return _rewrap(out, template)


def apply_sorted_feature_masks(features, permutation, mask_set: MaskSet):
    """Apply channel masks through a peak-frequency ordering.

    A channel mask [s, s+l) covers permutation[s:s+l], i.e. channels that
    are adjacent in the sorted order rather than in storage order. When
    the feature matrix has an integer multiple of len(permutation)
    channels (the trainable front-end stores each base filter as a group
    of consecutive temporal-integration variants), a masked base filter
    zeroes its whole group. Time masks behave as in apply_feature_masks.
    """
    data, template = _unwrap(features)
    perm = np.asarray(permutation, dtype=np.int64)
    if perm.ndim != 1 or np.any(np.sort(perm) != np.arange(len(perm))):
        raise ValueError("permutation must contain each channel index exactly once")
    n_storage = data.shape[1]
    if len(perm) == 0 or n_storage % len(perm) != 0:
        raise ValueError(
            f"feature matrix has {n_storage} channels, not a multiple of "
            f"permutation length {len(perm)}"
        )
    group = n_storage // len(perm)

    _check_bounds(mask_set.time_masks, data.shape[0], "time")
    _check_bounds(mask_set.channel_masks, len(perm), "channel")
    out = data.copy()
    for start, length in mask_set.time_masks:
        out[start : start + length, :] = 0.0
    for start, length in mask_set.channel_masks:
        for base in perm[start : start + length]:
            out[:, base * group : (base + 1) * group] = 0.0
    return _rewrap(out, template)


def apply_spectrogram_masks(spec: Spectrogram, mask_set: MaskSet) -> Spectrogram:
    """Zero complex STFT cells in masked frames (time) and bins (channels)."""
    _check_bounds(mask_set.time_masks, spec.n_frames, "time")
    _check_bounds(mask_set.channel_masks, spec.n_bins, "frequency")
    frames = spec.frames.copy()
    for start, length in mask_set.time_masks:
        frames[start : start + length, :] = 0.0
    for start, length in mask_set.channel_masks:
        frames[:, start : start + length] = 0.0
    return Spectrogram(
        frames, spec.window_size, spec.hop_size, spec.fft_size,
        spec.original_length, spec.sample_rate,
    )


def apply_stft_masks(
    x,
    sample_rate: int,
    policy: MaskPolicy,
    rng,
    window_ms: float = DEFAULT_WINDOW_MS,
    hop_ms: float = DEFAULT_HOP_MS,
) -> np.ndarray:
    """Mask in the STFT domain and resynthesize the waveform.

    The waveform is analyzed with the same 25/10 ms framing the feature
    pipeline uses, masks are sampled over (frames x bins), the masked
    complex cells are zeroed, and the inverse transform restores a
    waveform of exactly the input length.
    """
    if policy.domain != "stft":
        raise ConfigError(f"apply_stft_masks needs domain='stft', got {policy.domain!r}")
    x = check_waveform(x)
    if len(x) == 0:
        return x.copy()
    spec = stft(x, sample_rate, window_ms=window_ms, hop_ms=hop_ms)
    mask_set = sample_masks(policy, spec.n_frames, spec.n_bins, rng)
    out = istft(apply_spectrogram_masks(spec, mask_set))
    out[reconstruction_weight(spec) <= EDGE_WEIGHT_GATE] = 0.0
    return out
