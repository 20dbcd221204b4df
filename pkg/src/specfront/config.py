"""Pipeline configuration: YAML schema, strict parsing, and named presets.

A config file is a YAML mapping with these keys (all optional):

    seed: 0                     # non-negative integer
    frontend: logmel            # logmel | conv
    preemphasis_alpha: 0.97     # standard pass; null picks the frontend default
    frontend_params: params.scf # conv front-end weights (else seeded init)
    perturb:                    # ordered perturbation chain
      - kind: tempo             # speed | tempo | pitch | nonlinear_amplitude
        probability: 1.0        #   | mulaw | preemphasis_jitter
        factor_min: 0.7
        factor_max: 1.3
    masking:                    # omit (or null) for no masking
      domain: stft              # feature | feature_sorted | stft
      max_time_mask: 15
      num_time_masks: 2
      max_channel_mask: 8
      num_channel_masks: 2

Unknown keys anywhere are rejected with an error naming the key.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import yaml

from ._validation import check_seed
from .errors import ConfigError
from .masking import MaskPolicy
from .perturb import PerturbChain, PerturbSpec

FRONTENDS = ("logmel", "conv")

# Standard preemphasis defaults per front-end when the config leaves
# preemphasis_alpha unset: the trainable front-end benefits from the
# conventional 0.97, fixed log mel runs without preemphasis.
FRONTEND_DEFAULT_ALPHA = {"logmel": 0.0, "conv": 0.97}

_TOP_KEYS = {"seed", "frontend", "preemphasis_alpha", "frontend_params", "perturb", "masking"}
_PERTURB_KEYS = {"kind", "probability", "factor_min", "factor_max"}
_MASKING_KEYS = {
    "domain",
    "max_time_mask",
    "num_time_masks",
    "max_channel_mask",
    "num_channel_masks",
}


@dataclass(frozen=True)
class PipelineConfig:
    seed: int = 0
    frontend: str = "logmel"
    preemphasis_alpha: float | None = None
    frontend_params: str | None = None
    perturb: tuple[PerturbSpec, ...] = field(default_factory=tuple)
    masking: MaskPolicy | None = None

    def __post_init__(self):
        if self.frontend not in FRONTENDS:
            raise ConfigError(f"frontend must be one of {FRONTENDS}, got {self.frontend!r}")
        check_seed(self.seed)
        if self.preemphasis_alpha is not None and not (0.0 <= self.preemphasis_alpha <= 1.0):
            raise ConfigError(
                f"preemphasis_alpha must lie in [0, 1], got {self.preemphasis_alpha}"
            )

    @property
    def resolved_alpha(self) -> float:
        if self.preemphasis_alpha is None:
            return FRONTEND_DEFAULT_ALPHA[self.frontend]
        return float(self.preemphasis_alpha)

    def chain(self, seed: int | None = None) -> PerturbChain:
        return PerturbChain(self.perturb, self.seed if seed is None else seed)


def _reject_unknown(mapping: dict, allowed: set, context: str) -> None:
    for key in mapping:
        if key not in allowed:
            raise ConfigError(f"unknown config key {key!r} in {context}")


def parse_config(raw: dict | None) -> PipelineConfig:
    """Build a PipelineConfig from a parsed YAML mapping, rejecting unknown keys."""
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError(f"config root must be a mapping, got {type(raw).__name__}")
    _reject_unknown(raw, _TOP_KEYS, "config")

    specs = []
    for i, entry in enumerate(raw.get("perturb") or []):
        if not isinstance(entry, dict):
            raise ConfigError(f"perturb entry {i} must be a mapping")
        _reject_unknown(entry, _PERTURB_KEYS, f"perturb entry {i}")
        for needed in _PERTURB_KEYS:
            if needed not in entry:
                raise ConfigError(f"perturb entry {i} is missing key {needed!r}")
        specs.append(
            PerturbSpec(
                kind=str(entry["kind"]),
                probability=float(entry["probability"]),
                factor_min=float(entry["factor_min"]),
                factor_max=float(entry["factor_max"]),
            )
        )

    masking = None
    raw_masking = raw.get("masking")
    if raw_masking is not None:
        if not isinstance(raw_masking, dict):
            raise ConfigError("masking must be a mapping")
        _reject_unknown(raw_masking, _MASKING_KEYS, "masking")
        if "domain" not in raw_masking:
            raise ConfigError("masking is missing key 'domain'")
        masking = MaskPolicy(
            max_time_mask=int(raw_masking.get("max_time_mask", 15)),
            num_time_masks=int(raw_masking.get("num_time_masks", 2)),
            max_channel_mask=int(raw_masking.get("max_channel_mask", 8)),
            num_channel_masks=int(raw_masking.get("num_channel_masks", 2)),
            domain=str(raw_masking["domain"]),
        )

    alpha = raw.get("preemphasis_alpha")
    return PipelineConfig(
        seed=int(raw.get("seed", 0)),
        frontend=str(raw.get("frontend", "logmel")),
        preemphasis_alpha=None if alpha is None else float(alpha),
        frontend_params=raw.get("frontend_params"),
        perturb=tuple(specs),
        masking=masking,
    )


def load_config(path) -> PipelineConfig:
    try:
        with open(path) as fh:
            raw = yaml.safe_load(fh)
    except OSError:
        raise
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: invalid YAML ({exc})") from exc
    return parse_config(raw)


def _perturb_preset(kind: str, probability: float, lo: float, hi: float) -> dict:
    return {
        "perturb": [
            {"kind": kind, "probability": probability, "factor_min": lo, "factor_max": hi}
        ]
    }


def _masking_preset(domain: str, t_max: int, f_max: int) -> dict:
    # Larger time masks come with proportionally fewer of them so the
    # expected masked-frame coverage stays constant (2 masks at 15, 1 at 30).
    n_time = 2 if t_max <= 15 else 1
    return {
        "masking": {
            "domain": domain,
            "max_time_mask": t_max,
            "num_time_masks": n_time,
            "max_channel_mask": f_max,
            "num_channel_masks": 2,
        }
    }


PRESETS: dict[str, dict] = {
    "table1-speed": _perturb_preset("speed", 0.7, 0.88, 1.12),
    "table1-tempo": _perturb_preset("tempo", 1.0, 0.7, 1.3),
    "table1-pitch": _perturb_preset("pitch", 0.7, -2.0, 2.0),
    "table1-nonlinamp": _perturb_preset("nonlinear_amplitude", 0.7, 0.8, 1.2),
    "table1-mulaw": _perturb_preset("mulaw", 0.3, 1.0, 5.0),
    "table1-preemphasis": _perturb_preset("preemphasis_jitter", 0.7, -0.05, 0.05),
    "table2-baseline-15-8": _masking_preset("feature", 15, 8),
    "table2-baseline-15-15": _masking_preset("feature", 15, 15),
    "table2-baseline-30-8": _masking_preset("feature", 30, 8),
    "table2-sorted-15-8": _masking_preset("feature_sorted", 15, 8),
    "table2-stft-15-4": _masking_preset("stft", 15, 4),
    "table2-stft-30-8": _masking_preset("stft", 30, 8),
}


def preset(name: str) -> PipelineConfig:
    """Look up a shipped preset by name."""
    if name not in PRESETS:
        known = ", ".join(sorted(PRESETS))
        raise ConfigError(f"unknown preset {name!r}; available: {known}")
    return parse_config(PRESETS[name])
