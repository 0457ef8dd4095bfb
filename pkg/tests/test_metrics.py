import numpy as np
import pytest
from skimage.metrics import structural_similarity

from lrrfuse import (
    MetricsReport,
    average_gradient,
    evaluate_pair,
    gaussian_blur,
    psnr,
    ssim,
)

import oracles


def test_average_gradient_constant_is_zero():
    assert average_gradient(np.full((9, 13), 0.4)) == 0.0


def test_average_gradient_ramp_closed_form():
    h = 0.004
    img = np.tile(np.arange(30) * h, (20, 1))
    assert np.isclose(average_gradient(img), h / np.sqrt(2.0), atol=1e-15)


def test_average_gradient_matches_double_loop():
    rng = np.random.default_rng(111)
    img = rng.random((6, 6))
    total = 0.0
    for r in range(5):
        for c in range(5):
            dx = img[r, c + 1] - img[r, c]
            dy = img[r + 1, c] - img[r, c]
            total += np.sqrt((dx * dx + dy * dy) / 2.0)
    assert np.isclose(average_gradient(img), total / 25.0, atol=1e-12)


def test_average_gradient_rejects_thin_images():
    with pytest.raises(ValueError):
        average_gradient(np.zeros((1, 5)))
    with pytest.raises(ValueError):
        average_gradient(np.zeros((5, 1)))


def test_average_gradient_transpose_invariant():
    # forward differences swap roles under transposition, so the per-cell
    # magnitudes are identical and only the summation order changes
    rng = np.random.default_rng(112)
    img = rng.random((12, 15))
    base = average_gradient(img)
    assert np.isclose(average_gradient(img.T.copy()), base, atol=1e-12)


def test_blur_reduces_average_gradient():
    img = oracles.textured_image(113, shape=(48, 48))
    assert average_gradient(gaussian_blur(img, 3, 7.0)) < average_gradient(img)


def test_psnr_identical_is_infinite():
    img = np.random.default_rng(114).random((8, 8))
    assert psnr(img, img) == np.inf


def test_psnr_uniform_error_closed_form():
    ref = np.full((10, 10), 0.3)
    img = np.full((10, 10), 0.4)
    assert np.isclose(psnr(img, ref), 20.0, atol=1e-10)


def test_psnr_matches_brute_force_mse():
    rng = np.random.default_rng(115)
    img = rng.random((7, 9))
    ref = rng.random((7, 9))
    mse = sum(
        (img[r, c] - ref[r, c]) ** 2 for r in range(7) for c in range(9)
    ) / 63.0
    assert np.isclose(psnr(img, ref), -10.0 * np.log10(mse), atol=1e-10)


def test_psnr_decreases_with_error_amplitude():
    rng = np.random.default_rng(116)
    ref = np.full((16, 16), 0.5)
    signs = np.where(rng.random((16, 16)) < 0.5, -1.0, 1.0)
    values = [psnr(ref + amp * signs, ref) for amp in (0.01, 0.02, 0.05, 0.1)]
    assert all(a > b for a, b in zip(values, values[1:]))


def test_psnr_shape_mismatch_rejected():
    with pytest.raises(ValueError):
        psnr(np.zeros((4, 4)), np.zeros((4, 5)))


def test_ssim_identical_is_exactly_one():
    img = np.random.default_rng(117).random((16, 16))
    assert ssim(img, img) == 1.0


def test_ssim_constant_offset_closed_form():
    x = np.full((16, 16), 0.5)
    y = np.full((16, 16), 0.6)
    c1, c2 = 0.01 ** 2, 0.03 ** 2
    expected = ((2 * 0.5 * 0.6 + c1) * c2) / ((0.25 + 0.36 + c1) * c2)
    assert np.isclose(ssim(x, y), expected, atol=1e-10)


def test_ssim_anticorrelated_patterns_are_negative():
    rr, cc = np.mgrid[0:16, 0:16]
    checker = np.where((rr + cc) % 2 == 0, 1.0, -1.0)
    x = 0.5 + 0.45 * checker
    y = 0.5 - 0.45 * checker
    assert ssim(x, y) < 0.0


def test_ssim_matches_reference_implementation():
    rng = np.random.default_rng(118)
    for shape in ((32, 40), (11, 11), (25, 13)):
        x = rng.random(shape)
        y = np.clip(x + 0.1 * rng.standard_normal(shape), 0.0, 1.0)
        ref = structural_similarity(
            x,
            y,
            win_size=11,
            gaussian_weights=True,
            sigma=1.5,
            use_sample_covariance=False,
            data_range=1.0,
        )
        assert abs(ssim(x, y) - ref) <= 1e-10


def test_ssim_is_symmetric_and_flip_invariant():
    rng = np.random.default_rng(119)
    x = rng.random((20, 24))
    y = rng.random((20, 24))
    assert np.isclose(ssim(x, y), ssim(y, x), atol=1e-12)
    assert np.isclose(
        ssim(x[::-1, ::-1].copy(), y[::-1, ::-1].copy()), ssim(x, y), atol=1e-12
    )


def test_ssim_rejects_images_below_window_size():
    with pytest.raises(ValueError):
        ssim(np.zeros((10, 12)), np.zeros((10, 12)))


def test_ssim_shape_mismatch_rejected():
    with pytest.raises(ValueError):
        ssim(np.zeros((12, 12)), np.zeros((12, 13)))


def test_evaluate_pair_wraps_all_three():
    rng = np.random.default_rng(120)
    ref = rng.random((16, 16))
    img = np.clip(ref + 0.05 * rng.standard_normal((16, 16)), 0.0, 1.0)
    report = evaluate_pair(img, ref)
    assert isinstance(report, MetricsReport)
    assert report.ag == average_gradient(img)
    assert report.psnr == psnr(img, ref)
    assert report.ssim == ssim(img, ref)
    assert report.ag >= 0.0
    assert report.ssim <= 1.0
