"""Trainable two-layer convolutional waveform front-end.

The first convolution acts as a learned time-frequency decomposition:
150 filters of 128 samples (16 ms at 8 kHz) with a 5-sample stride
(0.625 ms), no bias, valid padding, followed by an elementwise absolute
value. The second convolution performs temporal integration: 5 filters of
40 frames, stride 16, each applied to every one of the 150 channels,
giving 750 output channels at a 10 ms frame shift. The activations pass
through the 2.5th root of the absolute value, then layer normalization
over the 750 channels per frame with a learned affine.

Forward returns a tape whose cached intermediates drive an analytic
backward pass producing gradients for all parameters and for the input
waveform. Both directions are pure functions, so concurrent inference
with shared read-only parameters is safe.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ._validation import check_seed, check_waveform
from .features import FeatureMatrix

SAMPLE_RATE = 8000

N_TF_FILTERS = 150  # time-frequency decomposition filters
TF_FILTER_LEN = 128  # 16 ms at 8 kHz
TF_STRIDE = 5  # 0.625 ms at 8 kHz
N_TI_FILTERS = 5  # temporal integration filters
TI_FILTER_LEN = 40  # frames
TI_STRIDE = 16
N_CHANNELS = N_TF_FILTERS * N_TI_FILTERS  # 750

ROOT_EXPONENT = 1.0 / 2.5
# |u|**0.4 has an unbounded derivative at 0; below this magnitude the
# backward pass treats the derivative as 0.
ROOT_KINK_EPS = 1e-8
# Keeps layer norm finite on constant frames while staying far below the
# typical activation variance, so per-frame statistics are exact to well
# under the 1e-5 tolerances asserted on scale invariance.
LAYER_NORM_EPS = 1e-8

# Valid padding through both layers needs this many input samples.
MIN_INPUT_SAMPLES = TF_FILTER_LEN + (TI_FILTER_LEN - 1) * TF_STRIDE  # 323

PARAMS_MAGIC = b"SCF1"


@dataclass
class FrontendParams:
    """Learnable parameters: two filter banks plus the layer-norm affine."""

    filters1: np.ndarray  # (150, 128)
    filters2: np.ndarray  # (5, 40)
    ln_gain: np.ndarray  # (750,)
    ln_bias: np.ndarray  # (750,)

    def __post_init__(self):
        self.filters1 = np.asarray(self.filters1, dtype=np.float64)
        self.filters2 = np.asarray(self.filters2, dtype=np.float64)
        self.ln_gain = np.asarray(self.ln_gain, dtype=np.float64)
        self.ln_bias = np.asarray(self.ln_bias, dtype=np.float64)
        expected = {
            "filters1": (N_TF_FILTERS, TF_FILTER_LEN),
            "filters2": (N_TI_FILTERS, TI_FILTER_LEN),
            "ln_gain": (N_CHANNELS,),
            "ln_bias": (N_CHANNELS,),
        }
        for name, shape in expected.items():
            arr = getattr(self, name)
            if arr.shape != shape:
                raise ValueError(f"{name} must have shape {shape}, got {arr.shape}")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} contains non-finite values")

    def copy(self) -> "FrontendParams":
        return FrontendParams(
            self.filters1.copy(), self.filters2.copy(), self.ln_gain.copy(), self.ln_bias.copy()
        )


@dataclass
class FrontendGrads:
    """Parameter gradients, shape-matched to FrontendParams."""

    filters1: np.ndarray
    filters2: np.ndarray
    ln_gain: np.ndarray
    ln_bias: np.ndarray


@dataclass
class FrontendTape:
    """Intermediates cached by the forward pass for the backward pass."""

    x: np.ndarray  # input waveform
    frames1: np.ndarray  # (T1, 128) strided input windows
    z1: np.ndarray  # (T1, 150) first-layer pre-activations
    h1: np.ndarray  # (T1, 150) |z1|
    h1_windows: np.ndarray  # (T2, 150, 40) strided h1 windows
    z2: np.ndarray  # (T2, 150, 5) second-layer pre-activations
    u: np.ndarray  # (T2, 750) |z2|**0.4
    normalized: np.ndarray  # (T2, 750) layer-normalized u
    inv_std: np.ndarray  # (T2, 1) 1/sqrt(var + eps)


def init_frontend_params(seed: int = 0) -> FrontendParams:
    """Random initialization: filters ~ U(-k, k) with k = 1/sqrt(fan_in)."""
    rng = np.random.default_rng(check_seed(seed))
    k1 = 1.0 / np.sqrt(TF_FILTER_LEN)
    k2 = 1.0 / np.sqrt(TI_FILTER_LEN)
    return FrontendParams(
        filters1=rng.uniform(-k1, k1, size=(N_TF_FILTERS, TF_FILTER_LEN)),
        filters2=rng.uniform(-k2, k2, size=(N_TI_FILTERS, TI_FILTER_LEN)),
        ln_gain=np.ones(N_CHANNELS),
        ln_bias=np.zeros(N_CHANNELS),
    )


def n_output_frames(n_samples: int) -> int:
    """Output frame count for a given input length (valid padding, both layers)."""
    if n_samples < MIN_INPUT_SAMPLES:
        return 0
    t1 = (n_samples - TF_FILTER_LEN) // TF_STRIDE + 1
    return (t1 - TI_FILTER_LEN) // TI_STRIDE + 1


def frontend_forward(x, params: FrontendParams) -> tuple[FeatureMatrix, FrontendTape]:
    """Run the front-end on an 8 kHz waveform.

    Returns the (T, 750) feature matrix at a 10 ms shift together with the
    tape needed by frontend_backward. Inputs shorter than
    MIN_INPUT_SAMPLES (= 323 samples: one 128-sample filter plus 39 hops
    of 5) cannot produce a single output frame and raise ValueError.
    """
    x = check_waveform(x)
    n = len(x)
    if n < MIN_INPUT_SAMPLES:
        raise ValueError(
            f"input has {n} samples but the front-end needs at least "
            f"{MIN_INPUT_SAMPLES} ({TF_FILTER_LEN}-sample filters plus "
            f"{TI_FILTER_LEN - 1} second-layer taps of stride {TF_STRIDE})"
        )

    # Contiguous copies: BLAS matmuls on strided views are several times slower.
    frames1 = np.ascontiguousarray(sliding_window_view(x, TF_FILTER_LEN)[::TF_STRIDE])  # (T1, 128)
    z1 = frames1 @ params.filters1.T  # (T1, 150)
    h1 = np.abs(z1)
    h1_windows = np.ascontiguousarray(
        sliding_window_view(h1, TI_FILTER_LEN, axis=0)[::TI_STRIDE]
    )  # (T2, 150, 40)
    t2 = h1_windows.shape[0]
    z2 = (h1_windows.reshape(-1, TI_FILTER_LEN) @ params.filters2.T).reshape(
        t2, N_TF_FILTERS, N_TI_FILTERS
    )  # (T2, 150, 5)
    u = np.abs(z2).reshape(t2, N_CHANNELS) ** ROOT_EXPONENT  # (T2, 750)

    mean = u.mean(axis=1, keepdims=True)
    var = u.var(axis=1, keepdims=True)
    inv_std = 1.0 / np.sqrt(var + LAYER_NORM_EPS)
    normalized = (u - mean) * inv_std
    out = normalized * params.ln_gain + params.ln_bias

    shift_ms = TF_STRIDE * TI_STRIDE / SAMPLE_RATE * 1000.0  # 10 ms
    tape = FrontendTape(x, frames1, z1, h1, h1_windows, z2, u, normalized, inv_std)
    return FeatureMatrix(out, shift_ms), tape


def frontend_backward(
    tape: FrontendTape,
    upstream: np.ndarray,
    params: FrontendParams,
) -> tuple[FrontendGrads, np.ndarray]:
    """Analytic gradients for all parameters and for the input waveform.

    upstream is dLoss/dOutput with the same (T, 750) shape the forward
    produced. The subgradient of |.| at 0 is taken as 0, and the
    derivative of |u|**0.4 is clamped to 0 for |u| < ROOT_KINK_EPS
    (the true derivative is unbounded there).
    """
    upstream = np.asarray(upstream, dtype=np.float64)
    t2, n_ch = tape.u.shape
    if upstream.shape != (t2, n_ch):
        raise ValueError(f"upstream gradient must have shape {(t2, n_ch)}, got {upstream.shape}")

    # Layer norm backward (per frame over the channel axis).
    d_gain = (upstream * tape.normalized).sum(axis=0)
    d_bias = upstream.sum(axis=0)
    d_norm = upstream * params.ln_gain
    d_u = tape.inv_std * (
        d_norm
        - d_norm.mean(axis=1, keepdims=True)
        - tape.normalized * (d_norm * tape.normalized).mean(axis=1, keepdims=True)
    )

    # u = |z2| ** 0.4, clamped at the kink.
    z2_flat = tape.z2.reshape(t2, n_ch)
    d_z2 = np.zeros_like(z2_flat)
    away = np.abs(z2_flat) >= ROOT_KINK_EPS
    d_z2[away] = (
        d_u[away] * ROOT_EXPONENT * np.abs(z2_flat[away]) ** (ROOT_EXPONENT - 1.0)
        * np.sign(z2_flat[away])
    )
    d_z2 = d_z2.reshape(tape.z2.shape)  # (T2, 150, 5)

    # Second convolution.
    d_z2_flat = d_z2.reshape(-1, N_TI_FILTERS)  # (T2*150, 5)
    windows_flat = tape.h1_windows.reshape(-1, TI_FILTER_LEN)  # (T2*150, 40)
    d_filters2 = d_z2_flat.T @ windows_flat
    window_contrib = (d_z2_flat @ params.filters2).reshape(t2, N_TF_FILTERS, TI_FILTER_LEN)
    d_h1 = np.zeros_like(tape.h1)
    t2_starts = np.arange(t2) * TI_STRIDE
    for tap in range(TI_FILTER_LEN):
        d_h1[t2_starts + tap, :] += window_contrib[:, :, tap]

    # |z1| with subgradient 0 at 0 (np.sign(0) == 0).
    d_z1 = d_h1 * np.sign(tape.z1)

    # First convolution.
    d_filters1 = d_z1.T @ tape.frames1
    sample_contrib = d_z1 @ params.filters1  # (T1, 128)
    t1 = tape.z1.shape[0]
    flat_positions = (np.arange(t1) * TF_STRIDE)[:, None] + np.arange(TF_FILTER_LEN)[None, :]
    d_x = np.bincount(
        flat_positions.ravel(), weights=sample_contrib.ravel(), minlength=len(tape.x)
    )

    grads = FrontendGrads(d_filters1, d_filters2, d_gain, d_bias)
    return grads, d_x


def filter_peak_frequencies(
    params: FrontendParams,
    sample_rate: int = SAMPLE_RATE,
    fft_size: int = 1024,
) -> tuple[np.ndarray, np.ndarray]:
    """Peak response frequency of each first-layer filter, plus the sort order.

    Each filter is zero padded to fft_size; the peak is the argmax bin of
    the magnitude response (ties, including the all-zero filter, resolve
    to the lowest bin). The returned permutation is a stable ascending
    argsort, so filters with equal peaks keep their original relative
    order.
    """
    spectrum = np.abs(np.fft.rfft(params.filters1, n=fft_size, axis=1))
    peak_bins = np.argmax(spectrum, axis=1)
    peaks_hz = peak_bins * (sample_rate / fft_size)
    permutation = np.argsort(peaks_hz, kind="stable")
    return peaks_hz, permutation


def save_frontend_params(path, params: FrontendParams) -> None:
    """Write parameters as flat little-endian binary.

    Layout: magic "SCF1"; four u32 dims (filter counts and lengths of the
    two banks); then filters1, filters2, ln_gain, ln_bias as row-major
    float32.
    """
    with open(path, "wb") as fh:
        fh.write(PARAMS_MAGIC)
        fh.write(
            struct.pack("<IIII", N_TF_FILTERS, TF_FILTER_LEN, N_TI_FILTERS, TI_FILTER_LEN)
        )
        for arr in (params.filters1, params.filters2, params.ln_gain, params.ln_bias):
            fh.write(np.ascontiguousarray(arr, dtype="<f4").tobytes())


def load_frontend_params(path) -> FrontendParams:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != PARAMS_MAGIC:
            raise OSError(f"{path}: not a front-end parameter file (bad magic {magic!r})")
        dims = struct.unpack("<IIII", fh.read(16))
        if dims != (N_TF_FILTERS, TF_FILTER_LEN, N_TI_FILTERS, TI_FILTER_LEN):
            raise OSError(f"{path}: unsupported parameter dimensions {dims}")
        n1 = N_TF_FILTERS * TF_FILTER_LEN
        n2 = N_TI_FILTERS * TI_FILTER_LEN
        payload = np.frombuffer(fh.read(), dtype="<f4")
        expected = n1 + n2 + 2 * N_CHANNELS
        if payload.size != expected:
            raise OSError(f"{path}: expected {expected} parameter values, got {payload.size}")
    filters1 = payload[:n1].reshape(N_TF_FILTERS, TF_FILTER_LEN)
    filters2 = payload[n1 : n1 + n2].reshape(N_TI_FILTERS, TI_FILTER_LEN)
    ln_gain = payload[n1 + n2 : n1 + n2 + N_CHANNELS]
    ln_bias = payload[n1 + n2 + N_CHANNELS :]
    return FrontendParams(filters1, filters2, ln_gain, ln_bias)
