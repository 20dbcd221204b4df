import numpy as np
import pytest

from specfront import (
    FrontendParams,
    filter_peak_frequencies,
    frontend_backward,
    frontend_forward,
    init_frontend_params,
    load_frontend_params,
    log_mel_features,
    save_frontend_params,
)
from specfront.convfront import MIN_INPUT_SAMPLES, n_output_frames


def random_input(n=4000, seed=0):
    return np.random.default_rng(seed).uniform(-0.9, 0.9, n)


class TestForward:
    def test_architecture_shapes_one_second(self):
        feats, _ = frontend_forward(random_input(8000), init_frontend_params(0))
        # conv1: (8000 - 128) // 5 + 1 = 1575 frames
        # conv2: (1575 - 40) // 16 + 1 = 96 frames x 150 * 5 = 750 channels
        assert feats.data.shape == (96, 750)
        assert feats.frame_shift_ms == 10.0
        assert n_output_frames(8000) == 96

    def test_frame_alignment_with_log_mel(self):
        # Both front-ends hop 10 ms, but boundary conventions differ: the
        # log mel framing pads the tail (99 frames for 1 s) while the valid
        # convolutions trade their 323-sample receptive field for 3 frames.
        x = random_input(8000)
        t_logmel = log_mel_features(x, 8000).data.shape[0]
        t_conv = frontend_forward(x, init_frontend_params(0))[0].data.shape[0]
        assert t_logmel == 99
        assert t_conv == 96
        assert t_logmel - t_conv == 3

    def test_minimum_length_enforced(self):
        params = init_frontend_params(0)
        frontend_forward(np.zeros(MIN_INPUT_SAMPLES), params)  # exactly enough
        with pytest.raises(ValueError, match="323"):
            frontend_forward(np.zeros(MIN_INPUT_SAMPLES - 1), params)

    def test_zero_input_yields_bias(self):
        params = init_frontend_params(1)
        params.ln_bias[:] = np.random.default_rng(2).standard_normal(750)
        feats, _ = frontend_forward(np.zeros(1000), params)
        np.testing.assert_array_equal(feats.data, np.tile(params.ln_bias, (feats.data.shape[0], 1)))

    def test_scale_invariance(self):
        params = init_frontend_params(3)
        x = random_input(4000, seed=3)
        base, _ = frontend_forward(x, params)
        for c in (0.5, 2.0, 10.0):
            scaled, _ = frontend_forward(c * x, params)
            assert np.max(np.abs(scaled.data - base.data)) <= 1e-5

    def test_layer_norm_statistics(self):
        feats, _ = frontend_forward(random_input(4000, seed=4), init_frontend_params(4))
        # unit gain, zero bias at init: per-frame mean 0, variance 1
        assert np.max(np.abs(feats.data.mean(axis=1))) <= 1e-6
        assert np.max(np.abs(feats.data.var(axis=1) - 1.0)) <= 1e-5

    def test_param_shape_validation(self):
        with pytest.raises(ValueError):
            FrontendParams(np.zeros((150, 100)), np.zeros((5, 40)), np.ones(750), np.zeros(750))


class TestBackward:
    def test_zero_upstream_zero_grads(self):
        params = init_frontend_params(5)
        feats, tape = frontend_forward(random_input(2000, seed=5), params)
        grads, d_x = frontend_backward(tape, np.zeros_like(feats.data), params)
        assert np.all(grads.filters1 == 0)
        assert np.all(grads.filters2 == 0)
        assert np.all(grads.ln_gain == 0)
        assert np.all(grads.ln_bias == 0)
        assert np.all(d_x == 0)

    def test_receptive_field(self):
        params = init_frontend_params(6)
        feats, tape = frontend_forward(random_input(4000, seed=6), params)
        for frame in (0, 2, 11):
            upstream = np.zeros_like(feats.data)
            upstream[frame, :] = 1.0
            _, d_x = frontend_backward(tape, upstream, params)
            support = np.nonzero(d_x)[0]
            # width 128 + 39 * 5 = 323 samples, offset 80 per frame
            assert support.min() >= frame * 80
            assert support.max() < frame * 80 + 323

    def test_shape_mismatch_rejected(self):
        params = init_frontend_params(7)
        _, tape = frontend_forward(random_input(2000, seed=7), params)
        with pytest.raises(ValueError):
            frontend_backward(tape, np.zeros((3, 750)), params)

    def test_spot_finite_differences(self):
        rng = np.random.default_rng(8)
        params = init_frontend_params(8)
        x = random_input(1000, seed=8)
        feats, tape = frontend_forward(x, params)
        weights = rng.standard_normal(feats.data.shape)
        grads, d_x = frontend_backward(tape, weights, params)
        eps = 1e-5

        def loss(p, xs=x):
            out, _ = frontend_forward(xs, p)
            return float(np.sum(out.data * weights))

        for name in ("ln_gain", "ln_bias"):
            arr = getattr(params, name)
            for idx in (0, 200, 749):
                p_plus = params.copy()
                getattr(p_plus, name).ravel()[idx] += eps
                p_minus = params.copy()
                getattr(p_minus, name).ravel()[idx] -= eps
                fd = (loss(p_plus) - loss(p_minus)) / (2 * eps)
                analytic = getattr(grads, name).ravel()[idx]
                assert abs(analytic - fd) / max(abs(analytic), abs(fd), 1e-8) < 1e-5

        # input gradient spot check
        for idx in (137, 512):
            xp = x.copy(); xp[idx] += eps
            xm = x.copy(); xm[idx] -= eps
            fd = (loss(params, xp) - loss(params, xm)) / (2 * eps)
            assert abs(d_x[idx] - fd) / max(abs(d_x[idx]), abs(fd), 1e-8) < 1e-3


class TestPeakFrequencies:
    def test_sinusoid_filter_peak(self):
        params = init_frontend_params(9)
        k = np.arange(128)
        window = np.hanning(128)
        params.filters1[17] = np.sin(2 * np.pi * 1000.0 * k / 8000.0) * window
        peaks, _ = filter_peak_frequencies(params)
        # 1024-point DFT: one bin is 7.8125 Hz
        assert abs(peaks[17] - 1000.0) <= 8.0

    def test_zero_filter_peaks_at_dc(self):
        params = init_frontend_params(10)
        params.filters1[3] = 0.0
        peaks, _ = filter_peak_frequencies(params)
        assert peaks[3] == 0.0

    def test_stable_sort_keeps_ties_in_order(self):
        params = init_frontend_params(11)
        params.filters1[40] = params.filters1[10]  # identical -> identical peak
        peaks, perm = filter_peak_frequencies(params)
        pos = {int(f): i for i, f in enumerate(perm)}
        assert pos[10] < pos[40]

    def test_permutation_sorts_ascending(self):
        peaks, perm = filter_peak_frequencies(init_frontend_params(12))
        assert np.all(np.diff(peaks[perm]) >= 0)


class TestSerialization:
    def test_round_trip(self, tmp_path):
        params = init_frontend_params(13)
        path = tmp_path / "weights.scf"
        save_frontend_params(path, params)
        loaded = load_frontend_params(path)
        # float32 storage: exact after one quantization cycle
        np.testing.assert_array_equal(
            loaded.filters1, params.filters1.astype(np.float32).astype(np.float64)
        )
        save_frontend_params(path, loaded)
        again = load_frontend_params(path)
        np.testing.assert_array_equal(again.filters1, loaded.filters1)
        np.testing.assert_array_equal(again.ln_gain, loaded.ln_gain)

    def test_magic_checked(self, tmp_path):
        path = tmp_path / "bogus.scf"
        path.write_bytes(b"NOPE" + b"\x00" * 64)
        with pytest.raises(OSError):
            load_frontend_params(path)

    def test_header_starts_with_magic(self, tmp_path):
        path = tmp_path / "weights.scf"
        save_frontend_params(path, init_frontend_params(14))
        assert path.read_bytes()[:4] == b"SCF1"
