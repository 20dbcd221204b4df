import numpy as np
import pytest

from specfront import (
    ConfigError,
    finite_difference_check,
    frontend_backward,
    frontend_forward,
    init_frontend_params,
    masked_gradient_experiment,
)


class TestFiniteDifferenceCheck:
    def test_full_model_within_tolerance(self):
        report = finite_difference_check(probe_count=200, eps=1e-4, seed=0)
        assert report.max_rel_err <= 1e-3
        assert report.probe_count == 200
        assert set(report.group_max_rel_err) == {"filters1", "filters2", "ln_gain", "ln_bias"}
        # exclusion must not be doing all the work
        assert report.kink_exclusions < 20 * report.probe_count

    def test_eps_guard(self):
        with pytest.raises(ConfigError):
            finite_difference_check(probe_count=10, eps=1.0)

    def test_report_lines_are_key_value(self):
        report = finite_difference_check(probe_count=8, eps=1e-4, seed=1)
        for line in report.lines():
            assert "=" in line

    def test_linear_subpath_exact(self):
        # All-positive input and filters keep every pre-activation away
        # from the |.| kinks; central differences then agree to 1e-5.
        rng = np.random.default_rng(2)
        params = init_frontend_params(2)
        params.filters1[:] = rng.uniform(0.05, 0.15, params.filters1.shape)
        params.filters2[:] = rng.uniform(0.05, 0.15, params.filters2.shape)
        x = rng.uniform(0.5, 1.0, 1200)
        feats, tape = frontend_forward(x, params)
        assert np.min(tape.z1) > 0 and np.min(tape.z2) > 0
        weights = rng.standard_normal(feats.data.shape)
        grads, _ = frontend_backward(tape, weights, params)
        eps = 1e-5
        worst = 0.0
        for group in ("filters1", "filters2", "ln_gain", "ln_bias"):
            base = getattr(params, group)
            for _ in range(10):
                idx = int(rng.integers(0, base.size))
                p_plus = params.copy()
                getattr(p_plus, group).ravel()[idx] += eps
                p_minus = params.copy()
                getattr(p_minus, group).ravel()[idx] -= eps
                lp = float(np.sum(frontend_forward(x, p_plus)[0].data * weights))
                lm = float(np.sum(frontend_forward(x, p_minus)[0].data * weights))
                fd = (lp - lm) / (2 * eps)
                analytic = float(getattr(grads, group).ravel()[idx])
                worst = max(worst, abs(analytic - fd) / max(abs(analytic), abs(fd), 1e-8))
        assert worst <= 1e-5

    def test_zero_input_gradients_match(self):
        # Zero input: conv gradients are exactly zero and finite
        # differences of conv coordinates see a constant loss.
        rng = np.random.default_rng(3)
        params = init_frontend_params(3)
        x = np.zeros(1000)
        feats, tape = frontend_forward(x, params)
        weights = rng.standard_normal(feats.data.shape)
        grads, _ = frontend_backward(tape, weights, params)
        assert np.all(grads.filters1 == 0.0)
        assert np.all(grads.filters2 == 0.0)
        eps = 1e-4
        for group in ("filters1", "filters2"):
            for _ in range(5):
                idx = int(rng.integers(0, getattr(params, group).size))
                p_plus = params.copy()
                getattr(p_plus, group).ravel()[idx] += eps
                p_minus = params.copy()
                getattr(p_minus, group).ravel()[idx] -= eps
                lp = float(np.sum(frontend_forward(x, p_plus)[0].data * weights))
                lm = float(np.sum(frontend_forward(x, p_minus)[0].data * weights))
                assert abs((lp - lm) / (2 * eps)) <= 1e-8


class TestMaskedGradientExperiment:
    def test_single_seed_report(self):
        report = masked_gradient_experiment(seed=0)
        assert report.masked_upstream_max == 0.0
        assert report.allmask_filter_grad_norm == 0.0
        assert report.nomask_filter_grad_norm > 0.0
        assert report.stft_filter_grad_norm > 1e-8
        assert 0 < report.n_masked_stft_frames <= report.n_stft_frames

    def test_all_frames_masked_exact_zero_everywhere(self):
        rng = np.random.default_rng(4)
        params = init_frontend_params(4)
        feats, tape = frontend_forward(rng.uniform(-0.9, 0.9, 2500), params)
        grads, d_x = frontend_backward(tape, np.zeros_like(feats.data), params)
        for arr in (grads.filters1, grads.filters2, grads.ln_gain, grads.ln_bias, d_x):
            assert np.all(arr == 0.0)

    def test_deterministic_given_seed(self):
        a = masked_gradient_experiment(seed=5)
        b = masked_gradient_experiment(seed=5)
        assert a == b

    def test_many_seeds_nonzero_under_stft_masking(self):
        for seed in range(20):
            report = masked_gradient_experiment(seed=seed)
            assert report.stft_filter_grad_norm > 1e-8
