import numpy as np
import pytest

from groundwire.blocks import (
    ChannelAttentionParams,
    PyramidParams,
    StripBlockParams,
    StripBranch,
    StripKernel,
    channel_attention,
    conv2d,
    strip_block,
    strip_conv,
    strip_pyramid,
)
from groundwire.convcheck import (
    attention_oracle,
    dense_block_oracle,
    dense_pyramid_oracle,
    dense_strip_oracle,
)
from groundwire.weights import (
    random_channel_attention,
    random_pyramid,
    random_strip_block,
    random_strip_kernel,
)
from oracles import conv2d_naive

TOL = 1e-5


def rand_map(rng, c, h, w):
    return rng.uniform(-1, 1, size=(c, h, w)).astype(np.float32)


class TestConv2d:
    def test_identity_1x1(self):
        rng = np.random.default_rng(0)
        x = rand_map(rng, 3, 6, 7)
        weight = np.eye(3, dtype=np.float32).reshape(3, 3, 1, 1)
        assert np.array_equal(conv2d(x, weight), x)

    def test_zero_weights_gives_bias(self):
        rng = np.random.default_rng(1)
        x = rand_map(rng, 2, 4, 4)
        weight = np.zeros((3, 2, 3, 3), dtype=np.float32)
        bias = np.array([0.5, -1.0, 2.0], dtype=np.float32)
        out = conv2d(x, weight, bias)
        for o in range(3):
            assert np.all(out[o] == bias[o])

    def test_matches_naive_loop_with_dilation(self):
        rng = np.random.default_rng(2)
        x = rand_map(rng, 2, 5, 5)
        weight = rng.uniform(-1, 1, size=(2, 2, 3, 3)).astype(np.float32)
        bias = rng.uniform(-1, 1, size=2).astype(np.float32)
        got = conv2d(x, weight, bias, dilation=(2, 2))
        want = conv2d_naive(x, weight, bias, dilation=(2, 2))
        assert np.abs(got - want).max() <= TOL

    @pytest.mark.parametrize("seed", range(6))
    def test_matches_naive_loop_random_shapes(self, seed):
        rng = np.random.default_rng(10 + seed)
        c_in, c_out = rng.integers(1, 4, size=2)
        h, w = rng.integers(2, 8, size=2)
        kh, kw = rng.integers(1, 4, size=2)
        dh, dw = rng.integers(1, 3, size=2)
        x = rand_map(rng, int(c_in), int(h), int(w))
        weight = rng.uniform(-1, 1, size=(int(c_out), int(c_in), int(kh), int(kw))).astype(np.float32)
        bias = rng.uniform(-1, 1, size=int(c_out)).astype(np.float32)
        got = conv2d(x, weight, bias, dilation=(int(dh), int(dw)))
        want = conv2d_naive(x, weight, bias, dilation=(int(dh), int(dw)))
        assert np.abs(got - want).max() <= TOL

    def test_channel_mismatch_rejected(self):
        with pytest.raises(ValueError, match="channels"):
            conv2d(np.zeros((2, 3, 3), np.float32), np.zeros((1, 3, 1, 1), np.float32))


class TestStripConv:
    def test_length_one_identity(self):
        rng = np.random.default_rng(3)
        x = rand_map(rng, 2, 5, 6)
        kern = StripKernel(
            orientation="horizontal",
            weight=np.eye(2, dtype=np.float32).reshape(2, 2, 1),
            bias=np.zeros(2, np.float32),
        )
        assert np.array_equal(strip_conv(x, kern), x)

    def test_dilated_impulse_taps(self):
        x = np.zeros((1, 7, 9), dtype=np.float32)
        x[0, 3, 4] = 1.0
        kern = StripKernel(
            orientation="horizontal",
            weight=np.ones((1, 1, 3), dtype=np.float32),
            bias=np.zeros(1, np.float32),
            dilation=2,
        )
        out = strip_conv(x, kern)[0]
        expected = np.zeros((7, 9), dtype=np.float32)
        expected[3, 2] = expected[3, 4] = expected[3, 6] = 1.0
        assert np.array_equal(out, expected)
        assert np.array_equal(out, dense_strip_oracle(x, kern)[0])

    def test_cascade_gives_separable_square(self):
        x = np.zeros((1, 7, 7), dtype=np.float32)
        x[0, 3, 3] = 1.0
        vertical = StripKernel("vertical", np.ones((1, 1, 3), np.float32), np.zeros(1, np.float32))
        horizontal = StripKernel("horizontal", np.ones((1, 1, 3), np.float32), np.zeros(1, np.float32))
        out = strip_conv(strip_conv(x, vertical), horizontal)[0]
        expected = np.zeros((7, 7), dtype=np.float32)
        expected[2:5, 2:5] = 1.0
        assert np.array_equal(out, expected)

    @pytest.mark.parametrize("seed", range(10))
    def test_equals_embedded_dense_kernel(self, seed):
        rng = np.random.default_rng(20 + seed)
        c_in, c_out = int(rng.integers(1, 4)), int(rng.integers(1, 4))
        h, w = int(rng.integers(1, 12)), int(rng.integers(1, 12))
        k, d = int(rng.integers(1, 6)), int(rng.integers(1, 4))
        orientation = "vertical" if rng.integers(0, 2) else "horizontal"
        x = rand_map(rng, c_in, h, w)
        kern = random_strip_kernel(rng, c_out, c_in, k, orientation, d)
        assert np.abs(strip_conv(x, kern) - dense_strip_oracle(x, kern)).max() <= TOL

    def test_linearity(self):
        rng = np.random.default_rng(4)
        kern = random_strip_kernel(rng, 2, 2, 3, "vertical", 2)
        kern = StripKernel(kern.orientation, kern.weight, np.zeros(2, np.float32), kern.dilation)
        x = rand_map(rng, 2, 6, 6)
        y = rand_map(rng, 2, 6, 6)
        a, b = np.float32(0.7), np.float32(-1.3)
        lhs = strip_conv(a * x + b * y, kern)
        rhs = a * strip_conv(x, kern) + b * strip_conv(y, kern)
        assert np.abs(lhs - rhs).max() <= TOL

    def test_translation_equivariance_in_interior(self):
        rng = np.random.default_rng(5)
        kern = random_strip_kernel(rng, 1, 1, 3, "horizontal", 2)
        kern = StripKernel(kern.orientation, kern.weight, np.zeros(1, np.float32), kern.dilation)
        base = np.zeros((1, 15, 15), dtype=np.float32)
        base[0, 7, 7] = 1.0
        shifted = np.zeros_like(base)
        shifted[0, 9, 8] = 1.0
        out_base = strip_conv(base, kern)[0]
        out_shifted = strip_conv(shifted, kern)[0]
        # responses stay clear of the border, so the shift carries over exactly
        assert np.array_equal(np.roll(out_base, (2, 1), axis=(0, 1)), out_shifted)


class TestStripBlock:
    def test_identity_configuration(self):
        rng = np.random.default_rng(6)
        x = rand_map(rng, 2, 5, 5)
        eye = np.eye(2, dtype=np.float32)
        branch = StripBranch(
            dilation=1,
            vertical=StripKernel("vertical", eye.reshape(2, 2, 1), np.zeros(2, np.float32)),
            horizontal=StripKernel("horizontal", eye.reshape(2, 2, 1), np.zeros(2, np.float32)),
        )
        params = StripBlockParams(branches=(branch,), project_weight=eye, project_bias=np.zeros(2, np.float32))
        assert np.array_equal(strip_block(x, params), x)

    def test_two_identical_branches_halved_projection(self):
        rng = np.random.default_rng(7)
        x = rand_map(rng, 2, 6, 6)
        single = random_strip_block(rng, 2, 2, (2,), 3)
        double = StripBlockParams(
            branches=(single.branches[0], single.branches[0]),
            project_weight=single.project_weight * np.float32(0.5),
            project_bias=single.project_bias,
        )
        got = strip_block(x, double)
        want = strip_block(x, single)
        assert np.abs(got - want).max() <= TOL

    @pytest.mark.parametrize("seed", range(8))
    def test_matches_dense_composition(self, seed):
        rng = np.random.default_rng(30 + seed)
        x = rand_map(rng, 2, 8, 9)
        params = random_strip_block(rng, 2, 3, (1, 2, 3), 3)
        got = strip_block(x, params)
        want = dense_block_oracle(x, params)
        assert np.abs(got - want).max() <= TOL

    def test_branch_validation(self):
        v = StripKernel("vertical", np.ones((1, 1, 3), np.float32), np.zeros(1, np.float32), 2)
        h = StripKernel("horizontal", np.ones((1, 1, 3), np.float32), np.zeros(1, np.float32), 1)
        with pytest.raises(ValueError, match="dilation"):
            StripBranch(dilation=2, vertical=v, horizontal=h)


class TestChannelAttention:
    def test_zero_weights_halve_input(self):
        rng = np.random.default_rng(8)
        x = rand_map(rng, 4, 5, 6)
        params = ChannelAttentionParams(
            weight=np.zeros((4, 4), np.float32), bias=np.zeros(4, np.float32)
        )
        out = channel_attention(x, params)
        assert np.abs(out - x / 2).max() <= 1e-6

    def test_constant_channels_pool_exactly(self):
        consts = np.array([1.5, -2.0, 0.25], dtype=np.float32)
        x = np.broadcast_to(consts[:, None, None], (3, 4, 5)).copy()
        assert np.array_equal(x.mean(axis=(1, 2), dtype=np.float32), consts)

    @pytest.mark.parametrize("seed", range(6))
    def test_matches_hand_oracle(self, seed):
        rng = np.random.default_rng(40 + seed)
        c = int(rng.integers(1, 7))
        x = rand_map(rng, c, int(rng.integers(1, 8)), int(rng.integers(1, 8)))
        params = random_channel_attention(rng, c)
        got = channel_attention(x, params)
        want = attention_oracle(x, params)
        assert np.abs(got - want).max() <= TOL

    def test_gates_bounded_and_contractive(self):
        rng = np.random.default_rng(9)
        x = rand_map(rng, 5, 6, 6)
        params = random_channel_attention(rng, 5)
        pooled = x.mean(axis=(1, 2), dtype=np.float32)
        gate = 1.0 / (1.0 + np.exp(-(params.weight @ pooled + params.bias)))
        assert np.all(gate > 0.0) and np.all(gate < 1.0)
        out = channel_attention(x, params)
        assert np.all(np.abs(out) <= np.abs(x) + 1e-7)

    def test_channel_mismatch_rejected(self):
        params = ChannelAttentionParams(weight=np.zeros((3, 3), np.float32), bias=np.zeros(3, np.float32))
        with pytest.raises(ValueError, match="channels"):
            channel_attention(np.zeros((2, 4, 4), np.float32), params)


class TestStripPyramid:
    def _zero_pyramid(self, channels=2, rates=(1, 2)):
        def zero_kernel(orientation, d):
            return StripKernel(orientation, np.zeros((channels, channels, 3), np.float32),
                               np.zeros(channels, np.float32), d)

        branches = tuple(
            StripBlockParams(
                branches=(StripBranch(d, zero_kernel("vertical", d), zero_kernel("horizontal", d)),),
                project_weight=np.zeros((channels, channels), np.float32),
                project_bias=np.zeros(channels, np.float32),
            )
            for d in rates
        )
        concat = channels * (len(rates) + 2)
        return PyramidParams(
            point_weight=np.zeros((channels, channels), np.float32),
            point_bias=np.zeros(channels, np.float32),
            branches=branches,
            pool_weight=np.zeros((channels, channels), np.float32),
            pool_bias=np.zeros(channels, np.float32),
            project_weight=np.zeros((channels, concat), np.float32),
            project_bias=np.zeros(channels, np.float32),
        )

    def test_all_zero_weights_leave_residual(self):
        rng = np.random.default_rng(10)
        x = rand_map(rng, 2, 6, 7)
        assert np.array_equal(strip_pyramid(x, self._zero_pyramid()), x)

    @pytest.mark.parametrize("seed", range(6))
    def test_matches_dense_composition(self, seed):
        rng = np.random.default_rng(50 + seed)
        x = rand_map(rng, 2, 8, 8)
        params = random_pyramid(rng, 2, rates=(1, 2), length=3)
        got = strip_pyramid(x, params)
        want = dense_pyramid_oracle(x, params)
        assert np.abs(got - want).max() <= TOL

    @pytest.mark.parametrize("size", [1, 2, 3, 5, 8, 13, 17])
    def test_spatial_dims_preserved(self, size):
        rng = np.random.default_rng(60 + size)
        x = rand_map(rng, 2, size, max(1, 18 - size))
        params = random_pyramid(rng, 2, rates=(1, 6, 12, 18), length=3)
        assert strip_pyramid(x, params).shape == x.shape

    def test_default_rates_follow_config(self):
        rng = np.random.default_rng(12)
        params = random_pyramid(rng, 2)
        assert params.rates == (1, 6, 12, 18)

    def test_residual_channel_mismatch_rejected(self):
        rng = np.random.default_rng(13)
        params = random_pyramid(rng, 3)
        with pytest.raises(ValueError, match="residual"):
            strip_pyramid(np.zeros((2, 4, 4), np.float32), params)
