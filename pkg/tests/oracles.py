"""Independent oracles shared by the test modules.

These deliberately avoid the library's own code paths: the DFT oracle is
the textbook matrix formula, peak picking runs on the full signal with
its own windowing, and interval arithmetic is plain Python.
"""

import numpy as np


def brute_force_dft(frame: np.ndarray, fft_size: int) -> np.ndarray:
    """One-sided DFT by the definition: X[k] = sum_n x[n] e^{-2 pi i k n / N}."""
    n = np.arange(fft_size)
    padded = np.zeros(fft_size, dtype=np.float64)
    padded[: len(frame)] = frame
    k = np.arange(fft_size // 2 + 1)
    basis = np.exp(-2j * np.pi * np.outer(k, n) / fft_size)
    return basis @ padded


def dft_peak_hz(x: np.ndarray, sample_rate: int, zero_pad: int = 8) -> float:
    """Dominant frequency via Hann-windowed zero-padded DFT with parabolic refinement."""
    n = len(x)
    windowed = x * np.hanning(n)
    spectrum = np.abs(np.fft.rfft(windowed, n=n * zero_pad))
    k = int(np.argmax(spectrum))
    if 0 < k < len(spectrum) - 1:
        a, b, c = np.log(spectrum[k - 1 : k + 2] + 1e-300)
        denom = a - 2 * b + c
        if denom < 0:
            k = k + 0.5 * (a - c) / denom
    return float(k * sample_rate / (n * zero_pad))


def band_power(x: np.ndarray, sample_rate: int, f_lo: float, f_hi: float) -> float:
    """Total DFT power in [f_lo, f_hi] (inclusive)."""
    spectrum = np.abs(np.fft.rfft(x)) ** 2
    freqs = np.arange(len(spectrum)) * sample_rate / len(x)
    sel = (freqs >= f_lo) & (freqs <= f_hi)
    return float(np.sum(spectrum[sel]))


def spectral_centroid(x: np.ndarray, sample_rate: int) -> float:
    spectrum = np.abs(np.fft.rfft(x * np.hanning(len(x)))) ** 2
    freqs = np.arange(len(spectrum)) * sample_rate / len(x)
    return float(np.sum(freqs * spectrum) / np.sum(spectrum))


def interval_union_length(intervals) -> int:
    """Length of the union of half-open integer intervals [(start, len), ...]."""
    covered = set()
    for start, length in intervals:
        covered.update(range(start, start + length))
    return len(covered)


def speech_shaped_noise(n: int, rng: np.random.Generator) -> np.ndarray:
    """White noise through a short smoothing filter, peak-normalized to 0.7."""
    white = rng.standard_normal(n + 16)
    kernel = np.array([0.12, 0.22, 0.32, 0.22, 0.12])
    shaped = np.convolve(white, kernel, mode="same")[:n]
    return 0.7 * shaped / np.max(np.abs(shaped))


def band_limited_noise(
    n: int, sample_rate: int, f_lo: float, f_hi: float, rng: np.random.Generator
) -> np.ndarray:
    """Noise whose DFT support lies inside [f_lo, f_hi], peak 0.5."""
    spectrum = np.zeros(n // 2 + 1, dtype=complex)
    freqs = np.arange(n // 2 + 1) * sample_rate / n
    sel = (freqs >= f_lo) & (freqs <= f_hi)
    spectrum[sel] = rng.standard_normal(sel.sum()) + 1j * rng.standard_normal(sel.sum())
    x = np.fft.irfft(spectrum, n=n)
    return 0.5 * x / np.max(np.abs(x))
