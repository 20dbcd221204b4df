"""File formats: RIFF WAV, the binary feature format, and PGM images."""

from __future__ import annotations

import struct

import numpy as np
from scipy.io import wavfile

from ._validation import check_waveform
from .dsp import stft
from .features import FeatureMatrix

FEAT_MAGIC = b"FEAT"


def read_wav(path) -> tuple[np.ndarray, int]:
    """Read a mono PCM WAV (8/16-bit int or 32-bit float) as float64 in [-1, 1].

    Raises OSError (with the file path) for unreadable files, multi-channel
    audio, or unsupported sample formats.
    """
    try:
        rate, data = wavfile.read(path)
    except OSError:
        raise
    except Exception as exc:
        raise OSError(f"{path}: cannot read WAV file ({exc})") from exc
    if data.ndim != 1:
        raise OSError(f"{path}: expected mono audio, got {data.shape[1]} channels")
    if data.dtype == np.int16:
        samples = data.astype(np.float64) / 32768.0
    elif data.dtype == np.uint8:
        samples = (data.astype(np.float64) - 128.0) / 128.0
    elif data.dtype in (np.float32, np.float64):
        samples = data.astype(np.float64)
    else:
        raise OSError(f"{path}: unsupported WAV sample format {data.dtype}")
    return samples, int(rate)


def write_wav(path, x, sample_rate: int) -> None:
    """Write 16-bit PCM; samples are clipped to [-1, 1] and rounded (no dither).

    The 1/32768 scale matches the read path, so a write/read cycle is
    exact to half an LSB (full scale +1.0 clips to 32767).
    """
    x = check_waveform(x)
    pcm = np.floor(np.clip(x, -1.0, 1.0) * 32768.0 + 0.5)
    pcm = np.clip(pcm, -32768, 32767).astype(np.int16)
    wavfile.write(path, int(sample_rate), pcm)


def write_features(path, features: FeatureMatrix) -> None:
    """Binary feature file: magic FEAT, u32 frames, u32 dims, f32 shift_ms, f32 data.

    All fields little-endian; the matrix is row-major float32.
    """
    data = np.ascontiguousarray(features.data, dtype="<f4")
    with open(path, "wb") as fh:
        fh.write(FEAT_MAGIC)
        fh.write(struct.pack("<IIf", data.shape[0], data.shape[1], float(features.frame_shift_ms)))
        fh.write(data.tobytes())


def read_features(path) -> FeatureMatrix:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != FEAT_MAGIC:
            raise OSError(f"{path}: not a feature file (bad magic {magic!r})")
        header = fh.read(12)
        if len(header) != 12:
            raise OSError(f"{path}: truncated feature header")
        n_frames, n_dims, shift_ms = struct.unpack("<IIf", header)
        payload = np.frombuffer(fh.read(), dtype="<f4")
    if payload.size != n_frames * n_dims:
        raise OSError(
            f"{path}: expected {n_frames * n_dims} values, got {payload.size}"
        )
    return FeatureMatrix(payload.reshape(n_frames, n_dims).astype(np.float64), float(shift_ms))


def write_pgm(path, image: np.ndarray) -> None:
    """Grayscale binary PGM (P5), min-max scaled per image.

    A constant image (for example from an all-zero signal) maps to a
    uniform all-zero picture.
    """
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 2:
        raise ValueError(f"image must be 2-D, got shape {image.shape}")
    lo = float(image.min()) if image.size else 0.0
    hi = float(image.max()) if image.size else 0.0
    if hi > lo:
        scaled = (image - lo) / (hi - lo) * 255.0
    else:
        scaled = np.zeros_like(image)
    pixels = np.floor(scaled + 0.5).astype(np.uint8)
    height, width = pixels.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{width} {height}\n255\n".encode("ascii"))
        fh.write(pixels.tobytes())


def write_matrix_csv(path, matrix: np.ndarray) -> None:
    """One CSV row per frame, plain %.10g cells."""
    matrix = np.asarray(matrix, dtype=np.float64)
    with open(path, "w") as fh:
        for row in matrix:
            fh.write(",".join(f"{v:.10g}" for v in row))
            fh.write("\n")


def spectrogram_image(x, sample_rate: int) -> np.ndarray:
    """Log-magnitude STFT image, low frequencies at the bottom row."""
    spec = stft(x, sample_rate)
    magnitude = np.log(np.abs(spec.frames) + 1e-10)
    return magnitude.T[::-1]


def feature_image(features: FeatureMatrix) -> np.ndarray:
    """Feature matrix as an image, channel 0 at the bottom row."""
    return features.data.T[::-1]
