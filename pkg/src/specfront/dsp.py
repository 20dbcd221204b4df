"""Foundational DSP: STFT/iSTFT, band-limited resampling, mel filterbanks.

All functions are pure; precomputed tables (windows, filterbanks) are
plain immutable arrays, so everything here is safe to call concurrently.

Conventions baked in throughout the package:

* analysis uses a periodic Hann window,
* the FFT size is the next power of two at or above the window length
  (the window tail is zero padded),
* a trailing partial frame is zero padded rather than dropped, so the
  framing covers every input sample,
* the inverse transform uses weighted overlap-add with window-squared
  normalization and restores the exact original length.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ._validation import check_positive, check_sample_rate, check_waveform
from .errors import ConfigError

DEFAULT_WINDOW_MS = 25.0
DEFAULT_HOP_MS = 10.0

# Floor for the overlap-add normalization denominator.
OLA_FLOOR = 1e-10


def next_pow2(n: int) -> int:
    """Smallest power of two >= n (n >= 1)."""
    p = 1
    while p < n:
        p *= 2
    return p


def hann_periodic(size: int) -> np.ndarray:
    """Periodic Hann window: 0.5 - 0.5*cos(2*pi*k/size), k = 0..size-1.

    The periodic variant satisfies constant overlap-add at integer
    divisions of the window length, which is what makes the iSTFT exact.
    """
    k = np.arange(size, dtype=np.float64)
    return 0.5 - 0.5 * np.cos(2.0 * np.pi * k / size)


@dataclass
class Spectrogram:
    """One-sided complex STFT with the framing metadata needed to invert it.

    frames has shape (n_frames, n_bins) with n_bins == fft_size // 2 + 1.
    original_length records the input sample count so istft can restore
    the exact length.
    """

    frames: np.ndarray
    window_size: int
    hop_size: int
    fft_size: int
    original_length: int
    sample_rate: int

    def __post_init__(self):
        self.frames = np.asarray(self.frames, dtype=np.complex128)
        if self.frames.ndim != 2:
            raise ValueError(f"frames must be 2-D, got shape {self.frames.shape}")
        if not (0 < self.hop_size <= self.window_size <= self.fft_size):
            raise ValueError(
                "inconsistent framing: need 0 < hop <= window <= fft_size, got "
                f"hop={self.hop_size} window={self.window_size} fft={self.fft_size}"
            )
        expected_bins = self.fft_size // 2 + 1
        if self.frames.shape[1] != expected_bins:
            raise ValueError(
                f"frames has {self.frames.shape[1]} bins, expected fft_size//2+1 = {expected_bins}"
            )
        if self.original_length < 0:
            raise ValueError("original_length must be >= 0")

    @property
    def n_frames(self) -> int:
        return self.frames.shape[0]

    @property
    def n_bins(self) -> int:
        return self.frames.shape[1]

    @property
    def bin_hz(self) -> float:
        return self.sample_rate / self.fft_size


def frame_count(n_samples: int, window_size: int, hop_size: int) -> int:
    """Number of analysis frames: 1 + ceil(max(0, N - window)/hop); 0 if N == 0."""
    if n_samples == 0:
        return 0
    return 1 + int(np.ceil(max(0, n_samples - window_size) / hop_size))


def stft(
    x,
    sample_rate: int,
    window_ms: float = DEFAULT_WINDOW_MS,
    hop_ms: float = DEFAULT_HOP_MS,
) -> Spectrogram:
    """Short-time Fourier transform with periodic Hann analysis.

    Parameters
    ----------
    x : array-like, shape (n,)
        Mono waveform. An empty signal yields an empty (0 frame)
        spectrogram rather than an error.
    sample_rate : int
        Sample rate in Hz.
    window_ms, hop_ms : float
        Analysis window and hop in milliseconds. Both must be positive
        and hop_ms <= window_ms.

    Returns
    -------
    Spectrogram
        One-sided complex spectrum, (n_frames, fft_size//2 + 1).
    """
    x = check_waveform(x)
    sample_rate = check_sample_rate(sample_rate)
    check_positive(window_ms, "window_ms")
    check_positive(hop_ms, "hop_ms")
    if hop_ms > window_ms:
        raise ConfigError(f"hop_ms ({hop_ms}) must not exceed window_ms ({window_ms})")

    window_size = int(round(sample_rate * window_ms / 1000.0))
    hop_size = int(round(sample_rate * hop_ms / 1000.0))
    if window_size < 1 or hop_size < 1:
        raise ConfigError("window and hop must be at least one sample at this rate")
    fft_size = next_pow2(window_size)

    n = len(x)
    n_frames = frame_count(n, window_size, hop_size)
    if n_frames == 0:
        frames = np.zeros((0, fft_size // 2 + 1), dtype=np.complex128)
        return Spectrogram(frames, window_size, hop_size, fft_size, 0, sample_rate)

    padded_len = (n_frames - 1) * hop_size + window_size
    padded = np.zeros(padded_len, dtype=np.float64)
    padded[:n] = x
    segments = sliding_window_view(padded, window_size)[::hop_size]
    window = hann_periodic(window_size)
    frames = np.fft.rfft(segments * window, n=fft_size, axis=1)
    return Spectrogram(frames, window_size, hop_size, fft_size, n, sample_rate)


def reconstruction_weight(spec: Spectrogram) -> np.ndarray:
    """Per-sample overlap-add weight (sum of squared window values).

    Samples whose weight is at or below the normalization floor cannot be
    reconstructed by istft; tests use this to delimit the fully covered
    region.
    """
    window_sq = hann_periodic(spec.window_size) ** 2
    length = max(spec.original_length, 0)
    buf_len = (spec.n_frames - 1) * spec.hop_size + spec.window_size if spec.n_frames else 0
    weight = np.zeros(max(buf_len, length), dtype=np.float64)
    for t in range(spec.n_frames):
        start = t * spec.hop_size
        weight[start : start + spec.window_size] += window_sq
    return weight[:length]


def istft(spec: Spectrogram) -> np.ndarray:
    """Inverse STFT via weighted overlap-add.

    Each frame is inverse-transformed, windowed again, and accumulated;
    the result is divided by the accumulated squared window (floored at
    OLA_FLOOR) and cut to the recorded original length. For an unmodified
    spectrogram this reconstructs the input exactly wherever the window
    coverage is nonzero.
    """
    if not isinstance(spec, Spectrogram):
        raise ValueError("istft expects a Spectrogram")
    length = spec.original_length
    if spec.n_frames == 0:
        return np.zeros(length, dtype=np.float64)

    window = hann_periodic(spec.window_size)
    time_frames = np.fft.irfft(spec.frames, n=spec.fft_size, axis=1)[:, : spec.window_size]
    buf_len = (spec.n_frames - 1) * spec.hop_size + spec.window_size
    acc = np.zeros(buf_len, dtype=np.float64)
    norm = np.zeros(buf_len, dtype=np.float64)
    window_sq = window**2
    for t in range(spec.n_frames):
        start = t * spec.hop_size
        acc[start : start + spec.window_size] += time_frames[t] * window
        norm[start : start + spec.window_size] += window_sq
    out = acc / np.maximum(norm, OLA_FLOOR)

    if length <= buf_len:
        return out[:length]
    return np.concatenate([out, np.zeros(length - buf_len)])


def resample(x, factor: float, zero_crossings: int = 16, kaiser_beta: float = 8.6) -> np.ndarray:
    """Band-limited resampling by a real factor (speed-change semantics).

    Output sample n is the windowed-sinc interpolation of the input at
    position n*factor, so the output has round(N/factor) samples and all
    frequencies scale by `factor` when the result is played back at the
    original rate. The anti-aliasing cutoff is min(1, 1/factor) times
    Nyquist and the kernel keeps `zero_crossings` sinc zeros per side
    under a Kaiser window.

    Raises ConfigError when factor is outside the guard range [0.5, 2.0].
    """
    x = check_waveform(x)
    factor = float(factor)
    if not (0.5 <= factor <= 2.0):
        raise ConfigError(f"resample factor must lie in [0.5, 2.0], got {factor}")

    n = len(x)
    n_out = int(np.floor(n / factor + 0.5))
    if n_out == 0 or n == 0:
        return np.zeros(0, dtype=np.float64)

    cutoff = min(1.0, 1.0 / factor)
    half_width = zero_crossings / cutoff
    half_taps = int(np.ceil(half_width))

    pos = np.arange(n_out, dtype=np.float64) * factor
    k0 = np.floor(pos).astype(np.int64)
    frac = pos - k0
    offsets = np.arange(-half_taps, half_taps + 1)
    u = frac[:, None] - offsets[None, :]

    kernel = np.zeros_like(u)
    inside = np.abs(u) <= half_width
    uu = u[inside]
    taper = np.i0(kaiser_beta * np.sqrt(1.0 - (uu / half_width) ** 2)) / np.i0(kaiser_beta)
    kernel[inside] = cutoff * np.sinc(cutoff * uu) * taper

    pad = half_taps + 1
    padded = np.concatenate([np.zeros(pad), x, np.zeros(pad)])
    idx = k0[:, None] + offsets[None, :] + pad
    return np.einsum("ij,ij->i", kernel, padded[idx])


def hz_to_mel(hz) -> np.ndarray:
    """Mel scale: m = 2595 * log10(1 + f/700)."""
    return 2595.0 * np.log10(1.0 + np.asarray(hz, dtype=np.float64) / 700.0)


def mel_to_hz(mel) -> np.ndarray:
    return 700.0 * (10.0 ** (np.asarray(mel, dtype=np.float64) / 2595.0) - 1.0)


def mel_filterbank(
    sample_rate: int,
    fft_size: int,
    n_bands: int,
    f_min: float = 0.0,
    f_max: float | None = None,
) -> np.ndarray:
    """Triangular mel filterbank, shape (n_bands, fft_size//2 + 1).

    Band centers are equally spaced on the mel scale between f_min and
    f_max; each triangle spans its two neighbours' centers. Rows are
    ordered by ascending center frequency and every row has nonzero
    support (a ConfigError is raised if the requested resolution leaves
    a band without any FFT bin).
    """
    sample_rate = check_sample_rate(sample_rate)
    if fft_size < 2:
        raise ConfigError(f"fft_size must be >= 2, got {fft_size}")
    if n_bands < 1:
        raise ConfigError(f"n_bands must be >= 1, got {n_bands}")
    nyquist = sample_rate / 2.0
    if f_max is None:
        f_max = nyquist
    if not (0.0 <= f_min < f_max <= nyquist):
        raise ConfigError(
            f"need 0 <= f_min < f_max <= Nyquist ({nyquist} Hz), got f_min={f_min}, f_max={f_max}"
        )

    n_bins = fft_size // 2 + 1
    bin_freqs = np.arange(n_bins) * (sample_rate / fft_size)
    edges_hz = mel_to_hz(np.linspace(hz_to_mel(f_min), hz_to_mel(f_max), n_bands + 2))

    weights = np.zeros((n_bands, n_bins), dtype=np.float64)
    for i in range(n_bands):
        lower, center, upper = edges_hz[i], edges_hz[i + 1], edges_hz[i + 2]
        rising = (bin_freqs >= lower) & (bin_freqs <= center)
        if center > lower:
            weights[i, rising] = (bin_freqs[rising] - lower) / (center - lower)
        falling = (bin_freqs > center) & (bin_freqs <= upper)
        if upper > center:
            weights[i, falling] = (upper - bin_freqs[falling]) / (upper - center)

    empty = np.where(~np.any(weights > 0, axis=1))[0]
    if empty.size:
        raise ConfigError(
            f"mel band {int(empty[0])} has no FFT bin support; "
            "use fewer bands or a larger fft_size"
        )
    return weights
