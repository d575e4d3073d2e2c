"""Preprocessing primitives: point transforms, warps, filters, DFT."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sensoryeval import imageproc as ip
from sensoryeval.validation import ValidationError


def gradient_image(w=16, h=12):
    return np.tile(np.linspace(0, 255, w, dtype=np.uint8), (h, 1))


def random_image(seed=0, w=16, h=12, channels=1):
    rng = np.random.default_rng(seed)
    shape = (h, w) if channels == 1 else (h, w, 3)
    return rng.integers(0, 256, size=shape, dtype=np.uint8)


class TestLinearBrightness:
    def test_identity(self):
        img = random_image()
        assert np.array_equal(ip.linear_brightness(img, 1.0, 0.0), img)

    def test_saturation(self):
        img = np.full((4, 4), 200, dtype=np.uint8)
        assert np.all(ip.linear_brightness(img, 2.0, 0.0) == 255)

    def test_hand_arithmetic(self):
        img = np.full((2, 2), 100, dtype=np.uint8)
        assert np.all(ip.linear_brightness(img, 0.5, 10.0) == 60)

    def test_alpha_must_be_positive(self):
        with pytest.raises(ValidationError):
            ip.linear_brightness(random_image(), 0.0, 0.0)

    def test_monotone(self):
        ramp = np.arange(256, dtype=np.uint8).reshape(16, 16)
        out = ip.linear_brightness(ramp, 1.7, -20).ravel()
        assert np.all(np.diff(out.astype(int)) >= 0)


class TestGammaCorrect:
    def test_identity(self):
        img = random_image(1)
        assert np.array_equal(ip.gamma_correct(img, 1.0), img)

    def test_white_fixed_point(self):
        img = np.full((3, 3), 255, dtype=np.uint8)
        for gamma in (0.25, 1.0, 4.0):
            assert np.all(ip.gamma_correct(img, gamma) == 255)

    def test_hand_value(self):
        img = np.full((1, 1), 64, dtype=np.uint8)
        # 255 * (64/255)^2 = 4096/255 = 16.06...
        assert ip.gamma_correct(img, 2.0)[0, 0] == 16

    def test_monotone(self):
        ramp = np.arange(256, dtype=np.uint8).reshape(16, 16)
        for gamma in (0.4, 2.5):
            out = ip.gamma_correct(ramp, gamma).ravel()
            assert np.all(np.diff(out.astype(int)) >= 0)

    def test_gamma_must_be_positive(self):
        with pytest.raises(ValidationError):
            ip.gamma_correct(random_image(), -1.0)


class TestSigmoidStretch:
    def test_threshold_maps_to_128(self):
        img = np.full((2, 2), 77, dtype=np.uint8)
        assert np.all(ip.sigmoid_stretch(img, c=0.31, th=77) == 128)

    def test_zero_contrast_uniform(self):
        img = random_image(2)
        assert np.all(ip.sigmoid_stretch(img, c=0.0, th=100) == 128)

    def test_hand_value(self):
        img = np.full((1, 1), 188, dtype=np.uint8)
        # 255 / (1 + e^-6) = 254.37...
        assert ip.sigmoid_stretch(img, c=0.1, th=128)[0, 0] == 254

    def test_extreme_contrast_does_not_overflow(self):
        img = np.array([[0, 255]], dtype=np.uint8)
        out = ip.sigmoid_stretch(img, c=1000.0, th=128)
        assert out[0, 0] == 0 and out[0, 1] == 255


class TestEqualizeHistogram:
    def test_two_level_image_unchanged(self):
        img = np.zeros((4, 4), dtype=np.uint8)
        img[:, 2:] = 255
        assert np.array_equal(ip.equalize_histogram(img), img)

    def test_constant_image_degenerate(self):
        img = np.full((4, 4), 130, dtype=np.uint8)
        with pytest.warns(ip.DegenerateHistogramWarning):
            out = ip.equalize_histogram(img)
        assert np.all(out == 0)

    def test_uniform_ramp_is_near_identity(self):
        img = np.arange(256, dtype=np.uint8).reshape(16, 16)
        out = ip.equalize_histogram(img)
        assert np.max(np.abs(out.astype(int) - img.astype(int))) <= 1

    def test_mapping_monotone_and_in_range(self):
        img = random_image(3)
        out = ip.equalize_histogram(img)
        # Monotone: sort inputs, the corresponding outputs must be sorted.
        order = np.argsort(img.ravel(), kind="stable")
        mapped = out.ravel()[order].astype(int)
        assert np.all(np.diff(mapped) >= 0)

    def test_three_channel_per_channel(self):
        img = random_image(4, channels=3)
        out = ip.equalize_histogram(img)
        for c in range(3):
            assert np.array_equal(out[:, :, c],
                                  ip.equalize_histogram(img[:, :, c]))


class TestAffine:
    def test_rotate_zero_is_identity(self):
        m = ip.affine_rotate(0.0)
        assert (m.a1, m.a2, m.b1, m.b2) == (1.0, 0.0, 0.0, 1.0)

    def test_rotate_90_maps_x_axis_to_y_axis(self):
        m = ip.affine_rotate(90.0)
        x, y = m.apply(1.0, 0.0)
        assert x == pytest.approx(0.0, abs=1e-12)
        assert y == pytest.approx(1.0)

    def test_compose_translate_after_scale(self):
        m = ip.compose(ip.affine_translate(3.0, -2.0), ip.affine_scale(2.0, 4.0))
        assert m.apply(1.0, 1.0) == (5.0, 2.0)

    def test_shear_form(self):
        m = ip.affine_shear(0.5, 0.25)
        assert m.apply(2.0, 4.0) == (2.0 + 4.0 * 0.5, 2.0 * 0.25 + 4.0)

    def test_make_affine_dispatch(self):
        assert ip.make_affine("scale", sx=2.0, sy=2.0) == ip.affine_scale(2.0, 2.0)
        with pytest.raises(ValidationError):
            ip.make_affine("perspective")

    def test_zero_scale_rejected(self):
        with pytest.raises(ValidationError):
            ip.affine_scale(0.0, 1.0)

    def test_inverse(self):
        m = ip.compose(ip.affine_rotate(30.0), ip.affine_scale(2.0, 0.5))
        inv = m.inverse()
        x, y = inv.apply(*m.apply(3.0, -7.0))
        assert x == pytest.approx(3.0)
        assert y == pytest.approx(-7.0)

    def test_singular_inverse_rejected(self):
        m = ip.AffineMatrix(1.0, 2.0, 0.0, 2.0, 4.0, 0.0)
        with pytest.raises(ValidationError):
            m.inverse()


class TestBicubicKernel:
    def test_anchor_values(self):
        assert ip.bicubic_kernel(0.0) == 1.0
        assert ip.bicubic_kernel(1.0) == 0.0
        assert ip.bicubic_kernel(2.0) == 0.0
        assert ip.bicubic_kernel(-1.0) == 0.0

    def test_hand_value_at_one_and_a_half(self):
        # 4 - 8*1.5 + 5*1.5^2 - 1.5^3 = -0.125
        assert ip.bicubic_kernel(1.5) == pytest.approx(-0.125)
        assert ip.bicubic_kernel(-1.5) == pytest.approx(-0.125)

    def test_zero_outside_support(self):
        assert np.all(ip.bicubic_kernel(np.array([2.5, -3.0, 10.0])) == 0.0)


class TestWarp:
    @pytest.mark.parametrize("interp", ["nearest", "linear", "bicubic"])
    def test_identity_is_bit_exact(self, interp):
        img = random_image(5)
        m = ip.affine_translate(0.0, 0.0)
        assert np.array_equal(ip.warp(img, m, interp), img)

    @pytest.mark.parametrize("interp", ["nearest", "linear", "bicubic"])
    def test_identity_three_channel(self, interp):
        img = random_image(6, channels=3)
        m = ip.affine_scale(1.0, 1.0)
        assert np.array_equal(ip.warp(img, m, interp), img)

    def test_integer_translation_nearest(self):
        img = random_image(7, w=8, h=8)
        out = ip.warp(img, ip.affine_translate(2.0, 1.0), "nearest")
        assert np.array_equal(out[1:, 2:], img[:-1, :-2])
        assert np.all(out[0, :] == 0)
        assert np.all(out[:, :2] == 0)

    def test_composition_coherence_integer_translations(self):
        img = random_image(8, w=10, h=10)
        m1 = ip.affine_translate(1.0, 0.0)
        m2 = ip.affine_translate(0.0, 2.0)
        two_step = ip.warp(ip.warp(img, m1, "nearest"), m2, "nearest")
        one_step = ip.warp(img, ip.compose(m2, m1), "nearest")
        assert np.array_equal(two_step, one_step)

    def test_unknown_interp_rejected(self):
        with pytest.raises(ValidationError):
            ip.warp(random_image(), ip.affine_scale(1.0, 1.0), "lanczos")


def dft_double_sum(f):
    """Literal double-sum evaluation of the forward transform."""
    n = f.shape[0]
    out = np.zeros((n, n), dtype=complex)
    for k in range(n):
        for l in range(n):
            acc = 0.0 + 0.0j
            for i in range(n):
                for j in range(n):
                    acc += f[i, j] * np.exp(-2j * np.pi * (k * i + l * j) / n)
            out[k, l] = acc
    return out


class TestDft:
    def test_constant_image_is_dc_only(self):
        f = np.full((8, 8), 3.25)
        big_f = ip.dft2(f)
        assert big_f[0, 0] == pytest.approx(64 * 3.25)
        rest = big_f.copy()
        rest[0, 0] = 0
        assert np.max(np.abs(rest)) < 1e-9

    def test_delta_has_flat_spectrum(self):
        f = np.zeros((8, 8))
        f[0, 0] = 1.0
        assert np.max(np.abs(ip.dft2(f) - 1.0)) < 1e-12

    def test_round_trip(self):
        rng = np.random.default_rng(9)
        f = rng.uniform(-1, 1, size=(8, 8))
        assert np.max(np.abs(ip.idft2(ip.dft2(f)) - f)) < 1e-9

    def test_matches_double_sum_oracle(self):
        rng = np.random.default_rng(10)
        f = rng.uniform(0, 255, size=(6, 6))
        assert np.max(np.abs(ip.dft2(f) - dft_double_sum(f))) < 1e-6

    def test_parseval(self):
        rng = np.random.default_rng(11)
        f = rng.uniform(-1, 1, size=(8, 8))
        big_f = ip.dft2(f)
        lhs = np.sum(np.abs(big_f) ** 2)
        rhs = 64 * np.sum(f ** 2)
        assert lhs == pytest.approx(rhs, rel=1e-9)

    def test_linearity(self):
        rng = np.random.default_rng(12)
        f, g = rng.uniform(-1, 1, size=(2, 8, 8))
        lhs = ip.dft2(2.5 * f - 1.5 * g)
        rhs = 2.5 * ip.dft2(f) - 1.5 * ip.dft2(g)
        assert np.max(np.abs(lhs - rhs)) < 1e-9

    def test_non_square_rejected(self):
        with pytest.raises(ValidationError):
            ip.dft2(np.zeros((4, 6)))
        with pytest.raises(ValidationError):
            ip.idft2(np.zeros((4, 6), dtype=complex))

    def test_odd_sizes_supported(self):
        rng = np.random.default_rng(13)
        f = rng.uniform(-1, 1, size=(7, 7))
        assert np.max(np.abs(ip.idft2(ip.dft2(f)) - f)) < 1e-9


class TestSpatialFilter:
    def test_mean_preserves_constant(self):
        img = np.full((5, 5), 90, dtype=np.uint8)
        assert np.array_equal(ip.spatial_filter(img, "mean3"), img)

    def test_laplacian_of_constant_is_zero(self):
        img = np.full((5, 5), 90, dtype=np.uint8)
        assert np.all(ip.spatial_filter(img, "laplacian") == 0)

    def test_single_bright_pixel_spreads(self):
        img = np.zeros((5, 5), dtype=np.uint8)
        img[2, 2] = 90
        out = ip.spatial_filter(img, "mean3")
        assert out[2, 2] == 10  # 90/9
        assert out[1, 1] == 10
        assert out[0, 0] == 0

    def test_replicated_border(self):
        # A vertical step: border replication keeps edge columns stable.
        img = np.zeros((4, 6), dtype=np.uint8)
        img[:, 3:] = 90
        out = ip.spatial_filter(img, "mean3")
        assert np.all(out[:, 0] == 0)
        assert np.all(out[:, 5] == 90)

    def test_too_small_rejected(self):
        with pytest.raises(ValidationError):
            ip.spatial_filter(np.zeros((2, 5), dtype=np.uint8), "mean3")

    def test_unknown_kind_rejected(self):
        with pytest.raises(ValidationError):
            ip.spatial_filter(random_image(), "sobel")


class TestOpChain:
    def test_parse_mixed_arguments(self):
        chain = ip.parse_op_chain("gamma:0.5|mean3|sigmoid:c=0.1,th=128")
        assert chain == [("gamma", {"gamma": 0.5}), ("mean3", {}),
                         ("sigmoid", {"c": 0.1, "th": 128.0})]

    def test_apply_matches_direct_calls(self):
        img = random_image(14)
        out = ip.apply_op_chain(img, "gamma:2|brightness:alpha=1.2,beta=-5")
        expected = ip.linear_brightness(ip.gamma_correct(img, 2.0), 1.2, -5.0)
        assert np.array_equal(out, expected)

    def test_unknown_op_rejected(self):
        with pytest.raises(ValidationError):
            ip.parse_op_chain("sharpen:1")

    def test_empty_chain_rejected(self):
        with pytest.raises(ValidationError):
            ip.parse_op_chain("  |  ")

    def test_warp_ops_in_chain(self):
        img = random_image(15)
        out = ip.apply_op_chain(img, "translate:2,1,interp=nearest")
        assert np.array_equal(out, ip.warp(img, ip.affine_translate(2, 1),
                                           "nearest"))
