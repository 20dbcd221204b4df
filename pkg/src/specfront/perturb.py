"""Per-sequence audio perturbations with probabilistic, seeded application.

Six waveform transforms: speed (resampling), tempo (WSOLA time-scale
modification), pitch (tempo + resample), nonlinear amplitude distortion,
mu-law companding, and a randomized second preemphasis pass. A chain
applies each with a per-sequence probability and a strength factor drawn
uniformly from a configured range; the random stream is keyed by
(seed, utterance_index) so corpora can be processed in any order, or in
parallel, with bit-identical results.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._validation import check_sample_rate, check_seed, check_waveform
from .dsp import hann_periodic, resample
from .errors import ConfigError

KINDS = (
    "speed",
    "tempo",
    "pitch",
    "nonlinear_amplitude",
    "mulaw",
    "preemphasis_jitter",
)

# Guard ranges for the strength factors (configuration errors outside).
SPEED_FACTOR_RANGE = (0.5, 2.0)
TEMPO_FACTOR_RANGE = (0.5, 2.0)
PITCH_SEMITONE_RANGE = (-4.0, 4.0)
PREEMPHASIS_JITTER_RANGE = (-0.2, 0.2)

# WSOLA working parameters (milliseconds).
WSOLA_FRAME_MS = 25.0
WSOLA_SYNTHESIS_HOP_MS = 12.5
WSOLA_TOLERANCE_MS = 5.0


@dataclass(frozen=True)
class PerturbSpec:
    """One perturbation slot: kind, application probability, factor range.

    Factor units depend on the kind: a dimensionless rate for speed and
    tempo, semitones for pitch, the distortion exponent for
    nonlinear_amplitude, mu for mulaw, and the extra preemphasis
    coefficient for preemphasis_jitter.
    """

    kind: str
    probability: float
    factor_min: float
    factor_max: float

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown perturbation kind {self.kind!r}; expected one of {KINDS}")
        if not (0.0 <= self.probability <= 1.0):
            raise ConfigError(f"probability must lie in [0, 1], got {self.probability}")
        if self.factor_min > self.factor_max:
            raise ConfigError(
                f"factor_min ({self.factor_min}) must not exceed factor_max ({self.factor_max})"
            )
        if self.kind in ("speed", "tempo", "mulaw", "nonlinear_amplitude") and self.factor_min <= 0:
            raise ConfigError(f"{self.kind} factors must be > 0, got min {self.factor_min}")


@dataclass(frozen=True)
class PerturbChain:
    """Ordered perturbation specs plus the corpus-level random seed."""

    specs: tuple[PerturbSpec, ...] = field(default_factory=tuple)
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "specs", tuple(self.specs))
        object.__setattr__(self, "seed", check_seed(self.seed))


def perturb_speed(x, factor: float) -> np.ndarray:
    """Change speed by resampling: duration scales by 1/factor, pitch by factor."""
    lo, hi = SPEED_FACTOR_RANGE
    if not (lo <= float(factor) <= hi):
        raise ConfigError(f"speed factor must lie in [{lo}, {hi}], got {factor}")
    return resample(x, factor)


def _read_padded(x: np.ndarray, start: int, length: int) -> np.ndarray:
    """Slice x[start:start+length], zero padded past the end (start >= 0)."""
    end = start + length
    if end <= len(x):
        return x[start:end]
    out = np.zeros(length, dtype=np.float64)
    avail = max(0, len(x) - start)
    if avail:
        out[:avail] = x[start : start + avail]
    return out


def perturb_tempo(x, sample_rate: int, factor: float) -> np.ndarray:
    """Time-scale modification via WSOLA: duration scales by 1/factor, pitch kept.

    Synthesis frames are Hann cross-faded at a fixed hop; for each frame
    the analysis position is refined within a +/- tolerance window by
    maximizing the normalized cross-correlation against the natural
    progression of the previous frame. Signals shorter than one analysis
    frame are returned as an unmodified copy.
    """
    lo, hi = TEMPO_FACTOR_RANGE
    factor = float(factor)
    if not (lo <= factor <= hi):
        raise ConfigError(f"tempo factor must lie in [{lo}, {hi}], got {factor}")
    x = check_waveform(x)
    sample_rate = check_sample_rate(sample_rate)

    n = len(x)
    frame = int(round(sample_rate * WSOLA_FRAME_MS / 1000.0))
    if n < frame:
        return x.copy()
    synth_hop = int(round(sample_rate * WSOLA_SYNTHESIS_HOP_MS / 1000.0))
    tolerance = int(round(sample_rate * WSOLA_TOLERANCE_MS / 1000.0))
    window = hann_periodic(frame)

    target_len = int(np.floor(n / factor + 0.5))
    n_frames = max(1, int(np.ceil(target_len / synth_hop)))
    buf_len = (n_frames - 1) * synth_hop + frame
    out = np.zeros(buf_len, dtype=np.float64)
    weight = np.zeros(buf_len, dtype=np.float64)

    template_norm_eps = 1e-12
    prev_pos = 0
    for j in range(n_frames):
        nominal = int(np.floor(j * synth_hop * factor + 0.5))
        nominal = min(max(nominal, 0), n - frame)
        if j == 0:
            pos = nominal
        else:
            template = _read_padded(x, prev_pos + synth_hop, frame)
            lo_pos = max(0, nominal - tolerance)
            hi_pos = min(n - frame, nominal + tolerance)
            if hi_pos <= lo_pos:
                pos = nominal
            else:
                segment = x[lo_pos : hi_pos + frame]
                corr = np.correlate(segment, template, mode="valid")
                sq = np.concatenate([[0.0], np.cumsum(segment**2)])
                energies = sq[frame:] - sq[:-frame]
                ncc = corr / (
                    np.sqrt(np.maximum(energies, 0.0)) * np.linalg.norm(template)
                    + template_norm_eps
                )
                pos = lo_pos + int(np.argmax(ncc))
        start = j * synth_hop
        out[start : start + frame] += x[pos : pos + frame] * window
        weight[start : start + frame] += window
        prev_pos = pos

    out = out[:target_len]
    weight = weight[:target_len]
    covered = weight > 1e-6
    out[covered] /= weight[covered]
    out[~covered] = 0.0
    return out


def perturb_pitch(x, sample_rate: int, semitones: float) -> np.ndarray:
    """Shift pitch by a semitone amount while preserving duration.

    The signal is first time-stretched (WSOLA) so that resampling it back
    to the original duration leaves the length unchanged and scales all
    frequencies by 2**(semitones/12).
    """
    lo, hi = PITCH_SEMITONE_RANGE
    semitones = float(semitones)
    if not (lo <= semitones <= hi):
        raise ConfigError(f"pitch shift must lie in [{lo}, {hi}] semitones, got {semitones}")
    factor = 2.0 ** (semitones / 12.0)
    stretched = perturb_tempo(x, sample_rate, 1.0 / factor)
    return resample(stretched, factor)


def _apply_normalized(x: np.ndarray, transform) -> np.ndarray:
    """Apply an amplitude map that assumes |x| <= 1.

    If the input peak exceeds 1 the signal is peak-normalized first and
    the original peak is restored afterwards; already-normalized input is
    transformed as-is.
    """
    peak = float(np.max(np.abs(x))) if len(x) else 0.0
    if peak > 1.0:
        return transform(x / peak) * peak
    return transform(x)


def perturb_amplitude_nonlinear(x, beta: float) -> np.ndarray:
    """Nonlinear amplitude distortion: sign(x) * |x|**beta, elementwise.

    beta > 1 makes the signal more peaky, beta < 1 de-emphasizes outliers;
    beta == 1 is the identity.
    """
    beta = float(beta)
    if beta <= 0:
        raise ConfigError(f"nonlinear amplitude exponent must be > 0, got {beta}")
    x = check_waveform(x)
    return _apply_normalized(x, lambda v: np.sign(v) * np.abs(v) ** beta)


def perturb_mulaw(x, mu: float) -> np.ndarray:
    """Continuous mu-law companding: sgn(x) * ln(1 + mu|x|) / ln(1 + mu).

    A monotone odd map fixing 0 and +/-1. Telephony codecs use mu = 255;
    as a perturbation much smaller values keep the output close to the
    input distribution.
    """
    mu = float(mu)
    if mu <= 0:
        raise ConfigError(f"mu must be > 0, got {mu}")
    x = check_waveform(x)
    return _apply_normalized(x, lambda v: np.sign(v) * np.log1p(mu * np.abs(v)) / np.log1p(mu))


def preemphasis(x, alpha: float) -> np.ndarray:
    """First-order high-pass y(t) = x(t) - alpha*x(t-1), with y(0) = x(0)."""
    alpha = float(alpha)
    if not (0.0 <= alpha <= 1.0):
        raise ConfigError(f"preemphasis alpha must lie in [0, 1], got {alpha}")
    x = check_waveform(x)
    y = x.copy()
    if len(y) > 1:
        y[1:] -= alpha * x[:-1]
    return y


def perturb_preemphasis_jitter(x, alpha_tilde: float) -> np.ndarray:
    """Second preemphasis pass with a small randomized coefficient.

    Intended as a training-time perturbation on top of the standard
    preemphasis; inference applies only the standard pass. Composing the
    two passes equals one FIR filter [1, -(alpha+alpha_tilde),
    alpha*alpha_tilde].
    """
    lo, hi = PREEMPHASIS_JITTER_RANGE
    alpha_tilde = float(alpha_tilde)
    if not (lo <= alpha_tilde <= hi):
        raise ConfigError(
            f"preemphasis jitter must lie in [{lo}, {hi}], got {alpha_tilde}"
        )
    x = check_waveform(x)
    y = x.copy()
    if len(y) > 1:
        y[1:] -= alpha_tilde * x[:-1]
    return y


def _apply_one(x: np.ndarray, sample_rate: int, kind: str, factor: float) -> np.ndarray:
    if kind == "speed":
        return perturb_speed(x, factor)
    if kind == "tempo":
        return perturb_tempo(x, sample_rate, factor)
    if kind == "pitch":
        return perturb_pitch(x, sample_rate, factor)
    if kind == "nonlinear_amplitude":
        return perturb_amplitude_nonlinear(x, factor)
    if kind == "mulaw":
        return perturb_mulaw(x, factor)
    if kind == "preemphasis_jitter":
        return perturb_preemphasis_jitter(x, factor)
    raise ConfigError(f"unknown perturbation kind {kind!r}")


def apply_chain(
    x,
    sample_rate: int,
    chain: PerturbChain,
    utterance_index: int = 0,
) -> tuple[np.ndarray, list[tuple[str, float]]]:
    """Run a perturbation chain on one utterance.

    For each spec, in declaration order, a uniform draw decides whether
    it fires; if it does, the strength factor is drawn uniformly from
    [factor_min, factor_max] and the transform applied. The random stream
    is derived from (chain.seed, utterance_index), so the same pair always
    reproduces the same output regardless of processing order.

    Returns the perturbed waveform and the list of (kind, factor) pairs
    that were actually applied.
    """
    x = check_waveform(x)
    sample_rate = check_sample_rate(sample_rate)
    utterance_index = int(utterance_index)
    if utterance_index < 0:
        raise ConfigError(f"utterance_index must be >= 0, got {utterance_index}")

    rng = np.random.default_rng([chain.seed, utterance_index])
    applied: list[tuple[str, float]] = []
    y = x
    for spec in chain.specs:
        if rng.uniform() < spec.probability:
            factor = float(rng.uniform(spec.factor_min, spec.factor_max))
            y = _apply_one(y, sample_rate, spec.kind, factor)
            applied.append((spec.kind, factor))
    if not applied:
        y = x.copy()
    return y, applied
