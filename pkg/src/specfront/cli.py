"""Command line interface.

Subcommands: perturb, featurize, augment, inspect, gradcheck, demo.
Exit codes: 0 success, 1 usage/config error, 2 I/O error, 3 verification
failure. Every command is deterministic given --seed.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys

import numpy as np

from . import convfront
from .config import PRESETS, PipelineConfig, load_config, preset
from .demo import DemoConfig, ToyTask, toy_overfit_demo, write_curves_csv
from .errors import ConfigError
from .features import FeatureMatrix, log_mel_features
from .gradcheck import finite_difference_check, masked_gradient_experiment
from .io import (
    feature_image,
    read_features,
    read_wav,
    spectrogram_image,
    write_features,
    write_matrix_csv,
    write_pgm,
    write_wav,
)
from .masking import (
    apply_feature_masks,
    apply_sorted_feature_masks,
    apply_stft_masks,
    sample_masks,
)
from .perturb import apply_chain, preemphasis

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2
EXIT_VERIFICATION = 3


class _UsageError(Exception):
    def __init__(self, message):
        super().__init__(message)
        self.message = message


class _Parser(argparse.ArgumentParser):
    """argparse with usage errors mapped to exit code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(message)


def _sniff_kind(path) -> str:
    """Classify an input file by magic bytes: 'wav' or 'feat'."""
    try:
        with open(path, "rb") as fh:
            magic = fh.read(4)
    except OSError as exc:
        raise OSError(f"{path}: {exc.strerror or exc}") from exc
    if magic == b"RIFF":
        return "wav"
    if magic == b"FEAT":
        return "feat"
    raise OSError(f"{path}: unrecognized file type (neither RIFF WAV nor FEAT)")


def _load_pipeline_config(args) -> PipelineConfig:
    if getattr(args, "config", None) and getattr(args, "preset", None):
        raise ConfigError("--config and --preset are mutually exclusive")
    if getattr(args, "preset", None):
        cfg = preset(args.preset)
    elif getattr(args, "config", None):
        cfg = load_config(args.config)
    else:
        cfg = PipelineConfig()
    if getattr(args, "seed", None) is not None:
        cfg = dataclasses.replace(cfg, seed=args.seed)
    return cfg


def _frontend_params(cfg: PipelineConfig) -> convfront.FrontendParams:
    if cfg.frontend_params:
        return convfront.load_frontend_params(cfg.frontend_params)
    return convfront.init_frontend_params(cfg.seed)


def _featurize(x: np.ndarray, rate: int, cfg: PipelineConfig) -> FeatureMatrix:
    alpha = cfg.resolved_alpha
    if alpha > 0:
        x = preemphasis(x, alpha)
    if cfg.frontend == "logmel":
        return log_mel_features(x, rate)
    if rate != convfront.SAMPLE_RATE:
        raise ConfigError(
            f"the conv front-end expects {convfront.SAMPLE_RATE} Hz input, got {rate} Hz"
        )
    return convfront.frontend_forward(x, _frontend_params(cfg))[0]


def _cmd_perturb(args) -> int:
    cfg = _load_pipeline_config(args)
    x, rate = read_wav(args.input)
    y, applied = apply_chain(x, rate, cfg.chain(), utterance_index=args.index)
    write_wav(args.output, y, rate)
    for kind, factor in applied:
        print(f"kind={kind}, factor={factor:.6f}")
    return EXIT_OK


def _cmd_featurize(args) -> int:
    cfg = _load_pipeline_config(args)
    x, rate = read_wav(args.input)
    write_features(args.output, _featurize(x, rate, cfg))
    return EXIT_OK


def _cmd_augment(args) -> int:
    cfg = _load_pipeline_config(args)
    if cfg.masking is None:
        raise ConfigError("augment needs a masking section in the config")
    policy = cfg.masking
    kind = _sniff_kind(args.input)
    rng = np.random.default_rng([cfg.seed, args.index])

    if policy.domain == "stft":
        if kind != "wav":
            raise ConfigError(
                "masking domain 'stft' operates on audio before feature extraction; "
                "give a WAV input (feature files are already past that stage)"
            )
        x, rate = read_wav(args.input)
        write_wav(args.output, apply_stft_masks(x, rate, policy, rng), rate)
        return EXIT_OK

    # Feature-domain masking: features in, features out (WAV is featurized first).
    if kind == "wav":
        x, rate = read_wav(args.input)
        feats = _featurize(x, rate, cfg)
    else:
        feats = read_features(args.input)

    if policy.domain == "feature":
        masks = sample_masks(policy, feats.n_frames, feats.n_channels, rng)
        masked = apply_feature_masks(feats, masks)
    else:  # feature_sorted
        if feats.n_channels == convfront.N_CHANNELS:
            _, permutation = convfront.filter_peak_frequencies(_frontend_params(cfg))
        elif cfg.frontend == "logmel":
            # Fixed filterbank channels are already in frequency order.
            permutation = np.arange(feats.n_channels)
        else:
            raise ConfigError(
                f"cannot derive a channel ordering for {feats.n_channels}-dim features"
            )
        masks = sample_masks(policy, feats.n_frames, len(permutation), rng)
        masked = apply_sorted_feature_masks(feats, permutation, masks)
    write_features(args.output, masked)
    return EXIT_OK


def _cmd_inspect(args) -> int:
    if not args.pgm and not args.csv:
        raise ConfigError("inspect needs --pgm and/or --csv")
    kind = _sniff_kind(args.input)
    if kind == "wav":
        x, rate = read_wav(args.input)
        image = spectrogram_image(x, rate)
    else:
        image = feature_image(read_features(args.input))
    if args.pgm:
        write_pgm(args.pgm, image)
    if args.csv:
        # CSV rows are frames, columns are channels/bins (undo the image flip).
        write_matrix_csv(args.csv, image[::-1].T)
    return EXIT_OK


def _cmd_gradcheck(args) -> int:
    report = finite_difference_check(
        probe_count=args.probes, eps=args.eps, seed=args.seed, tolerance=args.tol
    )
    for line in report.lines():
        print(line)
    experiment = masked_gradient_experiment(seed=args.seed)
    for line in experiment.lines():
        print(line)
    ok = (
        report.max_rel_err <= args.tol
        and experiment.masked_upstream_max == 0.0
        and experiment.allmask_filter_grad_norm == 0.0
        and experiment.stft_filter_grad_norm > 1e-8
    )
    print(f"status={'ok' if ok else 'fail'}")
    return EXIT_OK if ok else EXIT_VERIFICATION


def _cmd_demo(args) -> int:
    task = ToyTask(
        seed=args.seed, n_classes=args.classes,
        train_size=args.train_size, dev_size=args.dev_size,
    )
    cfg = DemoConfig(
        epochs=args.epochs, learning_rate=args.lr,
        mask_domain=args.mask_domain, seed=args.seed,
    )
    result = toy_overfit_demo(task, cfg)
    write_curves_csv(result, args.out)
    diverged = False
    for arm in result.arms:
        if arm.diverged:
            diverged = True
            print(f"arm={arm.name} DIVERGED after {len(arm.train_losses)} epochs")
        else:
            gap = arm.dev_losses[-1] - arm.train_losses[-1]
            print(
                f"arm={arm.name} train_loss={arm.train_losses[-1]:.4f} "
                f"dev_loss={arm.dev_losses[-1]:.4f} gap={gap:.4f}"
            )
    print(f"seed={args.seed} curves={args.out}")
    return EXIT_VERIFICATION if diverged else EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="specfront", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_config_args(p, with_index=False):
        p.add_argument("--config", "-c", help="YAML pipeline config")
        p.add_argument("--preset", choices=sorted(PRESETS), help="named built-in config")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        if with_index:
            p.add_argument("--index", type=int, default=0,
                           help="utterance index selecting the RNG substream")

    p = sub.add_parser("perturb", help="apply a perturbation chain to a WAV file")
    p.add_argument("input")
    p.add_argument("output")
    add_config_args(p, with_index=True)
    p.set_defaults(func=_cmd_perturb)

    p = sub.add_parser("featurize", help="extract features from a WAV file")
    p.add_argument("input")
    p.add_argument("output")
    add_config_args(p)
    p.set_defaults(func=_cmd_featurize)

    p = sub.add_parser("augment", help="apply masking in the configured domain")
    p.add_argument("input", help="WAV (stft domain) or WAV/FEAT (feature domains)")
    p.add_argument("output")
    add_config_args(p, with_index=True)
    p.set_defaults(func=_cmd_augment)

    p = sub.add_parser("inspect", help="render a WAV spectrogram or feature file")
    p.add_argument("input")
    p.add_argument("--pgm", help="write a grayscale PGM image")
    p.add_argument("--csv", help="write the matrix as CSV")
    p.set_defaults(func=_cmd_inspect)

    p = sub.add_parser("gradcheck", help="finite-difference and masking gradient checks")
    p.add_argument("--probes", type=int, default=500)
    p.add_argument("--eps", type=float, default=1e-4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=1e-3)
    p.set_defaults(func=_cmd_gradcheck)

    p = sub.add_parser("demo", help="toy overfitting demo (four training arms)")
    p.add_argument("--out", required=True, help="learning-curve CSV path")
    p.add_argument("--epochs", type=int, default=150)
    p.add_argument("--train-size", type=int, default=48)
    p.add_argument("--dev-size", type=int, default=48)
    p.add_argument("--classes", type=int, default=4)
    p.add_argument("--lr", type=float, default=0.02)
    p.add_argument("--mask-domain", choices=("stft", "feature"), default="stft")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_demo)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"error: {exc.message}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
