"""Toy classification demo contrasting front-ends with and without augmentation.

A small synthetic task (each class is a family of band-limited tone
mixtures plus noise) is classified by a linear head on pooled features.
Four arms run: log mel features with a frozen front-end and the trainable
convolutional front-end trained end-to-end, each with and without
augmentation (tempo perturbation plus masking). Training uses plain
full-batch gradient descent; the reported train/dev losses are always
evaluated on clean data, so a zero learning rate yields exactly flat
curves even for the augmented arms.

This is a desk-scale demonstration of the overfitting mechanism, not a
recognition benchmark; the train/dev gap ordering is reported, not
asserted.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .convfront import (
    FrontendParams,
    frontend_backward,
    frontend_forward,
    init_frontend_params,
)
from .errors import ConfigError
from .features import log_mel_features
from .masking import MaskPolicy, apply_feature_masks, apply_stft_masks, sample_masks
from .perturb import perturb_tempo

SAMPLE_RATE = 8000
POOL_EPS = 1e-8
# Whitened pooled statistics are clipped to this many standard deviations.
POOL_CLIP = 8.0

ARM_NAMES = ("logmel", "logmel_aug", "conv", "conv_aug")


@dataclass(frozen=True)
class ToyTask:
    """Synthetic K-class audio classification task.

    Each class owns a fixed set of tone frequencies; an example is a sum
    of those tones with random amplitudes, phases and a little frequency
    jitter, plus white noise. Generation is deterministic given the seed
    and train/dev draw from disjoint random streams.
    """

    seed: int = 0
    n_classes: int = 4
    train_size: int = 48
    dev_size: int = 48
    duration_s: float = 0.5

    def __post_init__(self):
        if self.n_classes < 2:
            raise ConfigError(f"n_classes must be >= 2, got {self.n_classes}")
        if self.train_size < 1 or self.dev_size < 1:
            raise ConfigError("train_size and dev_size must be >= 1")
        if self.duration_s <= 0:
            raise ConfigError("duration_s must be > 0")


@dataclass(frozen=True)
class DemoConfig:
    # Mask sizes are scaled down from the usual long-utterance settings:
    # the toy clips are only ~50 frames long, so masks keep roughly the
    # same masked-frame ratio.
    epochs: int = 150
    learning_rate: float = 0.02
    tempo_probability: float = 1.0
    tempo_min: float = 0.7
    tempo_max: float = 1.3
    mask_domain: str = "stft"  # "stft" or "feature"
    max_time_mask: int = 4
    num_time_masks: int = 2
    max_channel_mask: int = 10
    num_channel_masks: int = 2
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if self.mask_domain not in ("stft", "feature"):
            raise ConfigError(f"mask_domain must be 'stft' or 'feature', got {self.mask_domain!r}")


@dataclass
class ArmResult:
    name: str
    train_losses: list[float] = field(default_factory=list)
    dev_losses: list[float] = field(default_factory=list)
    diverged: bool = False


@dataclass
class DemoResult:
    task: ToyTask
    config: DemoConfig
    arms: list[ArmResult]

    def final_gaps(self) -> dict[str, float]:
        """dev minus train loss at the last recorded epoch, per arm."""
        return {
            arm.name: arm.dev_losses[-1] - arm.train_losses[-1]
            for arm in self.arms
            if arm.train_losses
        }


def generate_dataset(task: ToyTask):
    """Deterministic train/dev waveform lists with integer labels."""
    n = int(round(task.duration_s * SAMPLE_RATE))
    t = np.arange(n) / SAMPLE_RATE
    class_rng = np.random.default_rng([task.seed, 0])
    class_freqs = [np.sort(class_rng.uniform(300.0, 3500.0, size=3)) for _ in range(task.n_classes)]

    def make_example(split_id: int, index: int, label: int) -> np.ndarray:
        rng = np.random.default_rng([task.seed, split_id, index])
        signal = np.zeros(n)
        for freq in class_freqs[label]:
            amp = rng.uniform(0.3, 1.0)
            phase = rng.uniform(0.0, 2.0 * np.pi)
            jitter = rng.uniform(0.96, 1.04)
            signal += amp * np.sin(2.0 * np.pi * freq * jitter * t + phase)
        signal = 0.9 * signal / np.max(np.abs(signal))
        return signal + 0.2 * rng.standard_normal(n)

    def make_split(split_id: int, size: int):
        labels = [i % task.n_classes for i in range(size)]
        waves = [make_example(split_id, i, lab) for i, lab in enumerate(labels)]
        return waves, np.array(labels)

    train_x, train_y = make_split(1, task.train_size)
    dev_x, dev_y = make_split(2, task.dev_size)
    return train_x, train_y, dev_x, dev_y


def pool_features(data: np.ndarray) -> np.ndarray:
    """Mean plus standard deviation per channel, concatenated.

    Mean-only pooling would be blind for per-utterance normalized
    features (their time mean is zero by construction); the deviation
    half carries that information instead.
    """
    mean = data.mean(axis=0)
    std = np.sqrt(data.var(axis=0) + POOL_EPS)
    return np.concatenate([mean, std])


def _pool_backward(data: np.ndarray, d_pool: np.ndarray) -> np.ndarray:
    """Gradient of pool_features wrt the feature matrix."""
    t, d = data.shape
    d_mean = d_pool[:d]
    d_std = d_pool[d:]
    mean = data.mean(axis=0)
    std = np.sqrt(data.var(axis=0) + POOL_EPS)
    return d_mean / t + d_std * (data - mean) / (t * std)


def _softmax_cross_entropy(logits: np.ndarray, labels: np.ndarray):
    """Mean cross entropy and dLoss/dLogits for integer labels."""
    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    probs = exp / exp.sum(axis=1, keepdims=True)
    n = len(labels)
    eps = 1e-12
    loss = -float(np.mean(np.log(probs[np.arange(n), labels] + eps)))
    d_logits = probs.copy()
    d_logits[np.arange(n), labels] -= 1.0
    return loss, d_logits / n, probs


def _augment(x: np.ndarray, config: DemoConfig, rng) -> np.ndarray:
    if rng.uniform() < config.tempo_probability:
        factor = rng.uniform(config.tempo_min, config.tempo_max)
        x = perturb_tempo(x, SAMPLE_RATE, factor)
    if config.mask_domain == "stft":
        policy = MaskPolicy(
            config.max_time_mask, config.num_time_masks,
            config.max_channel_mask, config.num_channel_masks, domain="stft",
        )
        x = apply_stft_masks(x, SAMPLE_RATE, policy, rng)
    return x


def _sample_feature_masks(data: np.ndarray, config: DemoConfig, rng):
    policy = MaskPolicy(
        config.max_time_mask, config.num_time_masks,
        config.max_channel_mask, config.num_channel_masks, domain="feature",
    )
    return sample_masks(policy, data.shape[0], data.shape[1], rng)


def _keep_matrix(shape, mask_set) -> np.ndarray:
    keep = np.ones(shape)
    for start, length in mask_set.time_masks:
        keep[start : start + length, :] = 0.0
    for start, length in mask_set.channel_masks:
        keep[:, start : start + length] = 0.0
    return keep


def _log_mel(x: np.ndarray) -> np.ndarray:
    # Unnormalized: per-utterance normalization pins every channel to mean 0
    # and unit variance, which erases exactly the statistics the pooled
    # linear head reads on these quasi-stationary toy signals.
    return log_mel_features(x, SAMPLE_RATE, normalize=False).data


def _run_arm(arm: str, task, config, data) -> ArmResult:
    train_x, train_y, dev_x, dev_y = data
    trainable_frontend = arm.startswith("conv")
    augmented = arm.endswith("_aug")
    result = ArmResult(arm)
    arm_id = ARM_NAMES.index(arm)

    frontend_params: FrontendParams | None = None
    if trainable_frontend:
        frontend_params = init_frontend_params(seed=config.seed)
        clean_feats = lambda x: frontend_forward(x, frontend_params)[0].data
    else:
        cache = {id(x): _log_mel(x) for x in train_x + dev_x}
        clean_feats = lambda x: cache[id(x)]

    # Fixed standardization of the pooled vectors, estimated once from the
    # initial clean train features, so one learning rate suits both
    # front-ends. It is a constant affine map absorbed by the head; the
    # clip keeps rare augmented outliers from destabilizing plain
    # gradient descent.
    init_pooled = np.stack([pool_features(clean_feats(x)) for x in train_x])
    pool_mean = init_pooled.mean(axis=0)
    pool_scale = init_pooled.std(axis=0)
    pool_scale = np.maximum(pool_scale, max(1e-3 * pool_scale.max(), 1e-12))

    head_w = np.zeros((task.n_classes, init_pooled.shape[1]))
    head_b = np.zeros(task.n_classes)

    def whiten(pooled: np.ndarray) -> np.ndarray:
        return np.clip((pooled - pool_mean) / pool_scale, -POOL_CLIP, POOL_CLIP)

    def clean_loss(waves, labels) -> float:
        pooled = np.stack([whiten(pool_features(clean_feats(x))) for x in waves])
        logits = pooled @ head_w.T + head_b
        loss, _, _ = _softmax_cross_entropy(logits, labels)
        return loss

    lr = config.learning_rate
    for epoch in range(config.epochs):
        # One full-batch training step on (possibly augmented) data. The
        # trainable front-end runs two passes: the full-batch head gradient
        # must exist before any feature gradient, and re-running the
        # forward is cheaper than holding every example's tape at once.
        batch_inputs = []  # (x_in, feature MaskSet or None) per example
        pooled_list = []
        for i, x in enumerate(train_x):
            rng = np.random.default_rng([config.seed, arm_id, epoch, i])
            x_in = _augment(x, config, rng) if augmented else x
            if trainable_frontend:
                data_i = frontend_forward(x_in, frontend_params)[0].data
            else:
                data_i = _log_mel(x_in) if augmented else clean_feats(x)
            feature_masks = None
            if augmented and config.mask_domain == "feature":
                feature_masks = _sample_feature_masks(data_i, config, rng)
                data_i = apply_feature_masks(data_i, feature_masks)
            batch_inputs.append((x_in, feature_masks))
            pooled_list.append(whiten(pool_features(data_i)))

        pooled = np.stack(pooled_list)
        logits = pooled @ head_w.T + head_b
        _, d_logits, _ = _softmax_cross_entropy(logits, train_y)
        d_head_w = d_logits.T @ pooled
        d_head_b = d_logits.sum(axis=0)
        if trainable_frontend:
            d_pooled = (d_logits @ head_w) / pool_scale
            acc = None
            for i, (x_in, feature_masks) in enumerate(batch_inputs):
                feats, tape = frontend_forward(x_in, frontend_params)
                data_i = feats.data
                if feature_masks is not None:
                    data_i = apply_feature_masks(data_i, feature_masks)
                raw = (pool_features(data_i) - pool_mean) / pool_scale
                inside_clip = (np.abs(raw) < POOL_CLIP).astype(np.float64)
                d_feat = _pool_backward(data_i, d_pooled[i] * inside_clip)
                if feature_masks is not None:
                    # Chain rule through the mask: zero flows to masked cells.
                    d_feat = d_feat * _keep_matrix(data_i.shape, feature_masks)
                grads, _ = frontend_backward(tape, d_feat, frontend_params)
                if acc is None:
                    acc = grads
                else:
                    acc.filters1 += grads.filters1
                    acc.filters2 += grads.filters2
                    acc.ln_gain += grads.ln_gain
                    acc.ln_bias += grads.ln_bias
            frontend_params.filters1 -= lr * acc.filters1
            frontend_params.filters2 -= lr * acc.filters2
            frontend_params.ln_gain -= lr * acc.ln_gain
            frontend_params.ln_bias -= lr * acc.ln_bias
        head_w -= lr * d_head_w
        head_b -= lr * d_head_b

        train_loss = clean_loss(train_x, train_y)
        dev_loss = clean_loss(dev_x, dev_y)
        if not (np.isfinite(train_loss) and np.isfinite(dev_loss)):
            result.diverged = True
            break
        result.train_losses.append(train_loss)
        result.dev_losses.append(dev_loss)
    return result


def toy_overfit_demo(task: ToyTask, config: DemoConfig) -> DemoResult:
    """Run all four arms and collect per-epoch clean train/dev losses."""
    data = generate_dataset(task)
    arms = [_run_arm(name, task, config, data) for name in ARM_NAMES]
    return DemoResult(task, config, arms)


def write_curves_csv(result: DemoResult, path) -> None:
    """Learning curves as CSV with header epoch,arm,train_loss,dev_loss."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "arm", "train_loss", "dev_loss"])
        for arm in result.arms:
            for epoch, (tr, dv) in enumerate(zip(arm.train_losses, arm.dev_losses)):
                writer.writerow([epoch, arm.name, f"{tr:.10g}", f"{dv:.10g}"])
