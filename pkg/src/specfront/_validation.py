"""Input validation helpers used by the functional core and the estimators."""

from __future__ import annotations

import numpy as np

from .errors import ConfigError


def check_waveform(x, name: str = "waveform") -> np.ndarray:
    """Validate and convert a waveform to a 1-D float64 array.

    Accepts anything array-like holding a mono sample sequence. Empty
    signals are allowed (the degenerate case is representable); NaN/Inf
    samples are not.
    """
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be 1-D (mono), got shape {arr.shape}")
    if arr.size and not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite samples")
    return arr


def check_sample_rate(sample_rate, name: str = "sample_rate") -> int:
    rate = int(sample_rate)
    if rate <= 0:
        raise ConfigError(f"{name} must be a positive integer, got {sample_rate}")
    return rate


def check_feature_matrix(f, name: str = "features") -> np.ndarray:
    """Validate a frames-by-channels feature matrix."""
    arr = np.asarray(f, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-D (frames x channels), got shape {arr.shape}")
    if arr.size and not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def check_positive(value: float, name: str) -> float:
    value = float(value)
    if not value > 0:
        raise ConfigError(f"{name} must be > 0, got {value}")
    return value


def check_seed(seed, name: str = "seed") -> int:
    seed = int(seed)
    if seed < 0:
        raise ConfigError(f"{name} must be a non-negative integer, got {seed}")
    return seed


def as_waveform_list(X):
    """Normalize estimator input to a list of waveforms.

    Returns (list_of_arrays, was_single). A single 1-D array-like counts
    as one waveform; any other iterable is treated as a batch.
    """
    if isinstance(X, np.ndarray) and X.ndim == 1:
        return [check_waveform(X)], True
    if isinstance(X, (list, tuple)):
        first = X[0] if len(X) else None
        if first is not None and np.isscalar(first):
            return [check_waveform(np.asarray(X, dtype=np.float64))], True
        return [check_waveform(x) for x in X], False
    # generic iterable (generator, etc.)
    return [check_waveform(x) for x in X], False
