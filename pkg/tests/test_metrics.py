# tests/test_metrics.py
import math

import numpy as np
import pytest

from src.errors import DimensionError
from src.metrics.image_metrics import gaussian_window, mae, mse, psnr, psnr_from_mse, psnr255, ssim
from tests.helpers import blob_images

def test_error_examples():
	x = np.array([[0.0, 1.0], [0.5, 0.5]])
	y = np.array([[0.0, 0.0], [1.0, 0.5]])
	assert mse(x, y) == pytest.approx((1.0 + 0.25) / 4)
	assert mae(x, y) == pytest.approx(1.5 / 4)
	assert mse(x, x) == 0.0 and mae(x, x) == 0.0
	with pytest.raises(DimensionError):
		mse(x, np.zeros((3, 3)))

def test_psnr_examples():
	assert psnr_from_mse(6.5025, peak=255.0) == pytest.approx(40.0)
	assert psnr_from_mse(0.01) == pytest.approx(20.0)
	x = np.zeros((4, 4))
	assert psnr(x, x) == math.inf
	y = np.full((4, 4), 0.1)
	assert psnr(x, y) == pytest.approx(20.0)
	assert psnr255(x, y) == pytest.approx(20.0 + 20.0 * math.log10(255.0))

def test_ssim_properties():
	imgs = blob_images(3, 32, 0)
	for a in imgs:
		assert ssim(a, a) == pytest.approx(1.0, abs=1e-12)
	a, b = imgs[0], imgs[1]
	assert ssim(a, b) == pytest.approx(ssim(b, a), abs=1e-12)
	assert -1.0 <= ssim(a, b) < 1.0

	noisy = np.clip(a + np.random.default_rng(1).normal(0.0, 0.2, a.shape), 0.0, 1.0)
	assert ssim(a, noisy) < ssim(a, np.clip(a + 0.02, 0.0, 1.0))

	flat = np.full((16, 16), 0.5)
	close = np.full((16, 16), 0.52)
	assert 0.9 < ssim(flat, close) < 1.0

	# 4x4 images fall back to a 3x3 window
	small = np.random.default_rng(2).uniform(size=(4, 4))
	assert ssim(small, small) == pytest.approx(1.0)

def test_gaussian_window():
	w = gaussian_window()
	assert w.shape == (11, 11) and w.sum() == pytest.approx(1.0)
	assert np.argmax(w) == 5 * 11 + 5 and np.allclose(w, w.T)

if __name__ == "__main__":
	test_error_examples()
	test_psnr_examples()
	test_ssim_properties()
	test_gaussian_window()
	print("OK: metrics tests passed")
