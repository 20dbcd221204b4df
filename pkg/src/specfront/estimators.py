"""Scikit-learn style wrappers around the functional core.

Each transformer accepts either a single waveform / feature matrix or a
list of them and returns the matching structure, so the pieces compose
with sklearn.pipeline.Pipeline:

    Pipeline([
        ("perturb", AudioPerturber(specs=[...], seed=7)),
        ("features", ConvFrontend()),
        ("mask", FeatureMasker(seed=7)),
    ])

Transforms are deterministic: random draws are keyed by (seed, item
index), so calling transform twice on the same input reproduces the same
output. Vary `seed` to get fresh draws.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from ._validation import as_waveform_list, check_feature_matrix
from . import convfront
from .config import FRONTEND_DEFAULT_ALPHA
from .features import DEFAULT_MEL_BANDS, log_mel_features
from .masking import (
    MaskPolicy,
    apply_feature_masks,
    apply_sorted_feature_masks,
    apply_stft_masks,
    sample_masks,
)
from .perturb import PerturbChain, PerturbSpec, apply_chain, preemphasis


def _as_specs(specs):
    out = []
    for s in specs:
        if isinstance(s, PerturbSpec):
            out.append(s)
        else:
            out.append(PerturbSpec(**s))
    return tuple(out)


class AudioPerturber(TransformerMixin, BaseEstimator):
    """Apply a probabilistic perturbation chain per utterance.

    Parameters
    ----------
    specs : sequence of PerturbSpec or dict
        Ordered chain entries; dicts use the PerturbSpec field names.
    sample_rate : int
    seed : int
        Corpus-level seed; item index within the batch selects the
        per-utterance substream.
    """

    def __init__(self, specs=(), sample_rate=8000, seed=0):
        self.specs = specs
        self.sample_rate = sample_rate
        self.seed = seed

    def fit(self, X=None, y=None):
        self.chain_ = PerturbChain(_as_specs(self.specs), self.seed)
        return self

    def transform(self, X):
        if not hasattr(self, "chain_"):
            self.fit()
        waves, single = as_waveform_list(X)
        out = [
            apply_chain(x, self.sample_rate, self.chain_, utterance_index=i)[0]
            for i, x in enumerate(waves)
        ]
        return out[0] if single else out


class LogMelFrontend(TransformerMixin, BaseEstimator):
    """Fixed log mel filterbank features (frames x n_bands)."""

    def __init__(self, sample_rate=8000, window_ms=25.0, hop_ms=10.0,
                 n_bands=DEFAULT_MEL_BANDS, preemphasis_alpha=FRONTEND_DEFAULT_ALPHA["logmel"],
                 normalize=True):
        self.sample_rate = sample_rate
        self.window_ms = window_ms
        self.hop_ms = hop_ms
        self.n_bands = n_bands
        self.preemphasis_alpha = preemphasis_alpha
        self.normalize = normalize

    def fit(self, X=None, y=None):
        self.frame_shift_ms_ = float(self.hop_ms)
        return self

    def transform(self, X):
        waves, single = as_waveform_list(X)
        out = []
        for x in waves:
            if self.preemphasis_alpha:
                x = preemphasis(x, self.preemphasis_alpha)
            out.append(
                log_mel_features(
                    x, self.sample_rate, self.window_ms, self.hop_ms,
                    self.n_bands, self.normalize,
                ).data
            )
        return out[0] if single else out


class ConvFrontend(TransformerMixin, BaseEstimator):
    """Trainable convolutional front-end used as a fixed transformer.

    fit() initializes (or loads) the filter parameters and exposes them
    as `params_` together with the peak-frequency ordering of the first
    layer (`peak_frequencies_`, `permutation_`). transform() runs the
    forward pass only; training the parameters is the caller's business
    (see the gradcheck and demo modules).
    """

    def __init__(self, seed=0, params_path=None,
                 preemphasis_alpha=FRONTEND_DEFAULT_ALPHA["conv"]):
        self.seed = seed
        self.params_path = params_path
        self.preemphasis_alpha = preemphasis_alpha

    def fit(self, X=None, y=None):
        if self.params_path is not None:
            self.params_ = convfront.load_frontend_params(self.params_path)
        else:
            self.params_ = convfront.init_frontend_params(self.seed)
        self.peak_frequencies_, self.permutation_ = convfront.filter_peak_frequencies(self.params_)
        self.frame_shift_ms_ = 10.0
        return self

    def transform(self, X):
        if not hasattr(self, "params_"):
            self.fit()
        waves, single = as_waveform_list(X)
        out = []
        for x in waves:
            if self.preemphasis_alpha:
                x = preemphasis(x, self.preemphasis_alpha)
            out.append(convfront.frontend_forward(x, self.params_)[0].data)
        return out[0] if single else out


def _as_matrix_list(X):
    if isinstance(X, np.ndarray) and X.ndim == 2:
        return [check_feature_matrix(X)], True
    if isinstance(X, np.ndarray) and X.ndim == 1:
        raise ValueError("feature input must be 2-D (frames x channels)")
    return [check_feature_matrix(m) for m in X], False


class FeatureMasker(TransformerMixin, BaseEstimator):
    """Zero random time/channel blocks of feature matrices.

    With `permutation=None` channel masks address storage channels
    directly; with a permutation they address the sorted (for example
    peak-frequency) order, expanding to whole channel groups when the
    matrix width is a multiple of the permutation length.
    """

    def __init__(self, max_time_mask=15, num_time_masks=2, max_channel_mask=8,
                 num_channel_masks=2, permutation=None, seed=0):
        self.max_time_mask = max_time_mask
        self.num_time_masks = num_time_masks
        self.max_channel_mask = max_channel_mask
        self.num_channel_masks = num_channel_masks
        self.permutation = permutation
        self.seed = seed

    def fit(self, X=None, y=None):
        domain = "feature" if self.permutation is None else "feature_sorted"
        self.policy_ = MaskPolicy(
            self.max_time_mask, self.num_time_masks,
            self.max_channel_mask, self.num_channel_masks, domain=domain,
        )
        return self

    def transform(self, X):
        if not hasattr(self, "policy_"):
            self.fit()
        matrices, single = _as_matrix_list(X)
        out = []
        for i, mat in enumerate(matrices):
            rng = np.random.default_rng([self.seed, i])
            if self.permutation is None:
                masks = sample_masks(self.policy_, mat.shape[0], mat.shape[1], rng)
                out.append(apply_feature_masks(mat, masks))
            else:
                perm = np.asarray(self.permutation)
                masks = sample_masks(self.policy_, mat.shape[0], len(perm), rng)
                out.append(apply_sorted_feature_masks(mat, perm, masks))
        return out[0] if single else out


class StftMasker(TransformerMixin, BaseEstimator):
    """Mask time/frequency blocks of the STFT and resynthesize the waveform."""

    def __init__(self, sample_rate=8000, window_ms=25.0, hop_ms=10.0,
                 max_time_mask=15, num_time_masks=2, max_freq_mask=8,
                 num_freq_masks=2, seed=0):
        self.sample_rate = sample_rate
        self.window_ms = window_ms
        self.hop_ms = hop_ms
        self.max_time_mask = max_time_mask
        self.num_time_masks = num_time_masks
        self.max_freq_mask = max_freq_mask
        self.num_freq_masks = num_freq_masks
        self.seed = seed

    def fit(self, X=None, y=None):
        self.policy_ = MaskPolicy(
            self.max_time_mask, self.num_time_masks,
            self.max_freq_mask, self.num_freq_masks, domain="stft",
        )
        return self

    def transform(self, X):
        if not hasattr(self, "policy_"):
            self.fit()
        waves, single = as_waveform_list(X)
        out = [
            apply_stft_masks(
                x, self.sample_rate, self.policy_, np.random.default_rng([self.seed, i]),
                self.window_ms, self.hop_ms,
            )
            for i, x in enumerate(waves)
        ]
        return out[0] if single else out
