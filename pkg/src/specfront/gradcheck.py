"""Gradient verification: finite-difference oracle and masking experiments.

The finite-difference check probes random parameter coordinates of the
trainable front-end and compares the analytic backward pass against
central differences of a scalar readout loss. Probes that land in a kink
neighborhood of the non-smooth activations are re-drawn; see
finite_difference_check for the exact exclusion rules.

The masked-gradient experiment contrasts the two places a mask can sit:
applied after the front-end, masked positions contribute exactly zero
gradient (and masking every frame silences the filter gradients
entirely), while masking in the STFT domain before the front-end leaves
the filters with nonzero gradients because the surviving signal still
traverses every filter.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .convfront import (
    FrontendParams,
    frontend_backward,
    frontend_forward,
    init_frontend_params,
)
from .dsp import istft, reconstruction_weight, stft
from .errors import ConfigError
from .masking import EDGE_WEIGHT_GATE, MaskSet, apply_spectrogram_masks

PARAM_GROUPS = ("filters1", "filters2", "ln_gain", "ln_bias")

# Kink handling. The |.| activations are piecewise linear, so finite
# differences only break when a probe step pushes a pre-activation across
# zero; such probes are re-drawn (as are probes touching pre-activations
# below KINK_MAGNITUDE_EPS). The 2.5th-root activation is worse: its
# curvature is unbounded near zero, so the random readout zeroes the
# weight of output cells whose second-layer pre-activation lies within
# KINK_CELL_RADIUS_STEPS fd steps of the kink (a percent or two of cells;
# gradients still flow through all the rest). Layer norm couples every
# cell of a frame through its statistics, so a residual curvature leak
# remains; the half-step Richardson consistency guard re-draws any probe
# whose fd truncation estimate eats more than KINK_CONSISTENCY_FRACTION
# of the tolerance budget.
KINK_MAGNITUDE_EPS = 1e-6
KINK_CELL_RADIUS_STEPS = 30.0
KINK_CONSISTENCY_FRACTION = 0.25
DEFAULT_TOLERANCE = 1e-3
MAX_REDRAWS_PER_PROBE = 200


@dataclass
class GradReport:
    """Outcome of a finite-difference run."""

    group_max_rel_err: dict[str, float]
    probe_count: int
    kink_exclusions: int
    eps: float
    seed: int

    @property
    def max_rel_err(self) -> float:
        return max(self.group_max_rel_err.values())

    def lines(self) -> list[str]:
        out = [
            f"probes={self.probe_count}",
            f"kink_exclusions={self.kink_exclusions}",
            f"eps={self.eps:g}",
            f"seed={self.seed}",
        ]
        for group in PARAM_GROUPS:
            out.append(f"max_rel_err_{group}={self.group_max_rel_err[group]:.3e}")
        out.append(f"max_rel_err={self.max_rel_err:.3e}")
        return out


def _group_array(params: FrontendParams, group: str) -> np.ndarray:
    return getattr(params, group)


def _touched_slices(tape, group: str, flat_index: int):
    """Pre-activation slices whose values depend on the probed coordinate."""
    if group == "filters1":
        channel = flat_index // tape.frames1.shape[1]
        return [tape.z1[:, channel], tape.z2[:, channel, :]]
    if group == "filters2":
        ti_filter = flat_index // tape.h1_windows.shape[2]
        return [tape.z2[:, :, ti_filter]]
    return []


def _readout_loss(x, params, weights):
    feats, tape = frontend_forward(x, params)
    return float(np.sum(feats.data * weights)), tape


def finite_difference_check(
    probe_count: int = 500,
    eps: float = 1e-4,
    seed: int = 0,
    duration_s: float = 0.2,
    tolerance: float = DEFAULT_TOLERANCE,
) -> GradReport:
    """Compare analytic gradients against central finite differences.

    Builds a random input and random parameters, forms the loss as a
    random-weighted sum over all output cells, and probes random
    coordinates split evenly over the four parameter groups. The relative
    error of each accepted probe is |analytic - fd| / max(|analytic|,
    |fd|, 1e-8); the report carries the per-group maximum.
    """
    if not (1e-6 <= eps <= 1e-2):
        raise ConfigError(f"eps must lie in [1e-6, 1e-2], got {eps}")
    if probe_count < 1:
        raise ConfigError(f"probe_count must be >= 1, got {probe_count}")

    rng = np.random.default_rng(seed)
    n = int(round(duration_s * 8000))
    x = rng.uniform(-0.9, 0.9, size=n)
    params = init_frontend_params(seed=int(rng.integers(0, 2**31)))
    feats, tape = frontend_forward(x, params)
    weights = rng.standard_normal(feats.data.shape)
    # Read out only cells safely away from the root activation's kink.
    kink_radius = KINK_CELL_RADIUS_STEPS * eps
    weights[np.abs(tape.z2.reshape(weights.shape)) < kink_radius] = 0.0
    grads, _ = frontend_backward(tape, weights, params)

    consistency_budget = KINK_CONSISTENCY_FRACTION * tolerance
    group_max = {g: 0.0 for g in PARAM_GROUPS}
    exclusions = 0
    per_group = [probe_count // len(PARAM_GROUPS)] * len(PARAM_GROUPS)
    for i in range(probe_count - sum(per_group)):
        per_group[i] += 1

    for group, n_probes in zip(PARAM_GROUPS, per_group):
        base = _group_array(params, group)
        analytic = getattr(grads, group).ravel()
        accepted = 0
        attempts = 0
        while accepted < n_probes and attempts < n_probes * MAX_REDRAWS_PER_PROBE:
            attempts += 1
            idx = int(rng.integers(0, base.size))

            def loss_at(step: float) -> tuple[float, object]:
                probe_params = params.copy()
                arr = _group_array(probe_params, group)
                arr.ravel()[idx] += step
                return _readout_loss(x, probe_params, weights)

            loss_plus, tape_plus = loss_at(+eps)
            loss_minus, tape_minus = loss_at(-eps)
            fd = (loss_plus - loss_minus) / (2.0 * eps)

            kink = False
            for sl_plus, sl_minus in zip(
                _touched_slices(tape_plus, group, idx), _touched_slices(tape_minus, group, idx)
            ):
                if np.any(np.sign(sl_plus) != np.sign(sl_minus)):
                    kink = True
                    break
                if min(np.min(np.abs(sl_plus)), np.min(np.abs(sl_minus))) < KINK_MAGNITUDE_EPS:
                    kink = True
                    break

            a = float(analytic[idx])
            denom = max(abs(a), abs(fd), 1e-8)
            if not kink:
                loss_plus_h, _ = loss_at(+eps / 2.0)
                loss_minus_h, _ = loss_at(-eps / 2.0)
                fd_half = (loss_plus_h - loss_minus_h) / eps
                # Richardson estimate of the O(eps^2) truncation error.
                fd_err_est = (4.0 / 3.0) * abs(fd - fd_half)
                if fd_err_est > consistency_budget * denom:
                    kink = True

            if kink:
                exclusions += 1
                continue

            rel = abs(a - fd) / denom
            group_max[group] = max(group_max[group], rel)
            accepted += 1

    return GradReport(group_max, probe_count, exclusions, eps, seed)


@dataclass
class MaskedGradientReport:
    """Gradient norms contrasting post-feature masking with STFT-domain masking."""

    seed: int
    n_feature_frames: int
    masked_upstream_max: float  # |dLoss/dFeature| over masked cells (exact 0)
    allmask_filter_grad_norm: float  # every frame masked after the front-end
    nomask_filter_grad_norm: float  # no masking at all
    stft_filter_grad_norm: float  # half the STFT frames masked before the front-end
    n_stft_frames: int
    n_masked_stft_frames: int

    def lines(self) -> list[str]:
        return [
            f"seed={self.seed}",
            f"feature_frames={self.n_feature_frames}",
            f"masked_upstream_max={self.masked_upstream_max:.3e}",
            f"allmask_filter_grad_norm={self.allmask_filter_grad_norm:.3e}",
            f"nomask_filter_grad_norm={self.nomask_filter_grad_norm:.3e}",
            f"stft_filter_grad_norm={self.stft_filter_grad_norm:.3e}",
            f"stft_frames_masked={self.n_masked_stft_frames}/{self.n_stft_frames}",
        ]


def masked_gradient_experiment(
    seed: int = 0,
    duration_s: float = 0.3,
    stft_mask_fraction: float = 0.5,
) -> MaskedGradientReport:
    """Measure where gradients survive under the two masking placements.

    Arm A applies time masks to the front-end output before a fixed
    random readout: the loss gradient at masked feature cells is exactly
    zero, and masking every frame zeroes all filter gradients. Arm B
    masks a contiguous block of STFT frames of the input waveform
    covering stft_mask_fraction of the signal, resynthesizes, and runs
    the front-end: filter gradients stay nonzero because unmasked signal
    still reaches every filter.
    """
    rng = np.random.default_rng(seed)
    n = int(round(duration_s * 8000))
    x = rng.uniform(-0.9, 0.9, size=n)
    params = init_frontend_params(seed=int(rng.integers(0, 2**31)))

    feats, tape = frontend_forward(x, params)
    weights = rng.standard_normal(feats.data.shape)
    t_frames = feats.data.shape[0]

    # Arm A, partial masking: loss = sum(weights * masked(features)).
    keep = np.ones_like(feats.data)
    masked_frames = rng.choice(t_frames, size=max(1, t_frames // 2), replace=False)
    keep[masked_frames, :] = 0.0
    upstream_partial = weights * keep
    masked_upstream_max = float(np.max(np.abs(upstream_partial[masked_frames, :])))

    # Arm A, every frame masked.
    grads_allmask, _ = frontend_backward(tape, np.zeros_like(weights), params)
    allmask_norm = float(np.linalg.norm(grads_allmask.filters1))

    # No masking.
    grads_nomask, _ = frontend_backward(tape, weights, params)
    nomask_norm = float(np.linalg.norm(grads_nomask.filters1))

    # Arm B: mask a contiguous block of STFT frames, resynthesize, re-run.
    spec = stft(x, 8000)
    n_masked = max(1, int(round(spec.n_frames * stft_mask_fraction)))
    n_masked = min(n_masked, spec.n_frames)
    start = int(rng.integers(0, spec.n_frames - n_masked + 1))
    masked_spec = apply_spectrogram_masks(spec, MaskSet(time_masks=((start, n_masked),)))
    x_masked = istft(masked_spec)
    x_masked[reconstruction_weight(spec) <= EDGE_WEIGHT_GATE] = 0.0
    feats_b, tape_b = frontend_forward(x_masked, params)
    grads_b, _ = frontend_backward(tape_b, weights[: feats_b.data.shape[0], :], params)
    stft_norm = float(np.linalg.norm(grads_b.filters1))

    return MaskedGradientReport(
        seed=seed,
        n_feature_frames=t_frames,
        masked_upstream_max=masked_upstream_max,
        allmask_filter_grad_norm=allmask_norm,
        nomask_filter_grad_norm=nomask_norm,
        stft_filter_grad_norm=stft_norm,
        n_stft_frames=spec.n_frames,
        n_masked_stft_frames=n_masked,
    )
