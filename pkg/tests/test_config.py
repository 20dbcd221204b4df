import pytest

from specfront import ConfigError, PRESETS, load_config, parse_config, preset


class TestParsing:
    def test_defaults(self):
        cfg = parse_config({})
        assert cfg.seed == 0
        assert cfg.frontend == "logmel"
        assert cfg.perturb == ()
        assert cfg.masking is None

    def test_unknown_top_key_named(self):
        with pytest.raises(ConfigError, match="unknown config key 'wtf'"):
            parse_config({"wtf": 1})

    def test_unknown_nested_keys_named(self):
        with pytest.raises(ConfigError, match="speed_factor"):
            parse_config({"perturb": [{"kind": "speed", "probability": 1.0,
                                       "factor_min": 0.9, "factor_max": 1.1,
                                       "speed_factor": 2}]})
        with pytest.raises(ConfigError, match="width"):
            parse_config({"masking": {"domain": "stft", "width": 3}})

    def test_missing_perturb_key_named(self):
        with pytest.raises(ConfigError, match="factor_max"):
            parse_config({"perturb": [{"kind": "speed", "probability": 1.0,
                                       "factor_min": 0.9}]})

    def test_masking_requires_domain(self):
        with pytest.raises(ConfigError, match="domain"):
            parse_config({"masking": {"max_time_mask": 10}})

    def test_invalid_values_propagate(self):
        with pytest.raises(ConfigError):
            parse_config({"frontend": "mfcc"})
        with pytest.raises(ConfigError):
            parse_config({"seed": -1})
        with pytest.raises(ConfigError):
            parse_config({"preemphasis_alpha": 1.5})

    def test_alpha_defaults_per_frontend(self):
        assert parse_config({"frontend": "logmel"}).resolved_alpha == 0.0
        assert parse_config({"frontend": "conv"}).resolved_alpha == 0.97
        assert parse_config({"frontend": "conv", "preemphasis_alpha": 0.0}).resolved_alpha == 0.0

    def test_yaml_file_round_trip(self, tmp_path):
        path = tmp_path / "cfg.yaml"
        path.write_text(
            "seed: 11\n"
            "frontend: conv\n"
            "perturb:\n"
            "  - kind: tempo\n"
            "    probability: 1.0\n"
            "    factor_min: 0.7\n"
            "    factor_max: 1.3\n"
            "masking:\n"
            "  domain: stft\n"
            "  max_time_mask: 30\n"
            "  num_time_masks: 1\n"
        )
        cfg = load_config(path)
        assert cfg.seed == 11
        assert cfg.frontend == "conv"
        assert cfg.perturb[0].kind == "tempo"
        assert cfg.masking.max_time_mask == 30
        assert cfg.chain().seed == 11

    def test_invalid_yaml(self, tmp_path):
        path = tmp_path / "bad.yaml"
        path.write_text("a: [unclosed\n")
        with pytest.raises(ConfigError):
            load_config(path)


class TestPresets:
    # Hyperparameter cells the presets must reproduce exactly as parsed.
    PERTURB_CELLS = {
        "table1-speed": ("speed", 0.7, 0.88, 1.12),
        "table1-tempo": ("tempo", 1.0, 0.7, 1.3),
        "table1-pitch": ("pitch", 0.7, -2.0, 2.0),
        "table1-nonlinamp": ("nonlinear_amplitude", 0.7, 0.8, 1.2),
        "table1-mulaw": ("mulaw", 0.3, 1.0, 5.0),
        "table1-preemphasis": ("preemphasis_jitter", 0.7, -0.05, 0.05),
    }
    MASK_CELLS = {
        "table2-baseline-15-8": ("feature", 15, 2, 8),
        "table2-baseline-15-15": ("feature", 15, 2, 15),
        "table2-baseline-30-8": ("feature", 30, 1, 8),
        "table2-sorted-15-8": ("feature_sorted", 15, 2, 8),
        "table2-stft-15-4": ("stft", 15, 2, 4),
        "table2-stft-30-8": ("stft", 30, 1, 8),
    }

    @pytest.mark.parametrize("name", sorted(PERTURB_CELLS))
    def test_perturbation_presets(self, name):
        cfg = preset(name)
        kind, p, lo, hi = self.PERTURB_CELLS[name]
        assert len(cfg.perturb) == 1
        spec = cfg.perturb[0]
        assert (spec.kind, spec.probability, spec.factor_min, spec.factor_max) == (kind, p, lo, hi)

    @pytest.mark.parametrize("name", sorted(MASK_CELLS))
    def test_masking_presets(self, name):
        cfg = preset(name)
        domain, t_max, n_time, f_max = self.MASK_CELLS[name]
        assert cfg.masking.domain == domain
        assert cfg.masking.max_time_mask == t_max
        assert cfg.masking.num_time_masks == n_time
        assert cfg.masking.max_channel_mask == f_max

    def test_all_presets_parse(self):
        for name in PRESETS:
            preset(name)

    def test_unknown_preset(self):
        with pytest.raises(ConfigError, match="table1-tempo"):
            preset("nope")
