from __future__ import annotations
import math

import numpy as np
from scipy import signal

from src.errors import shape_mismatch

K1 = 0.01
K2 = 0.03
SSIM_WINDOW = 11
SSIM_SIGMA = 1.5

def _pair(x, y):
	x = np.asarray(x, dtype=np.float64)
	y = np.asarray(y, dtype=np.float64)
	if x.shape != y.shape:
		raise shape_mismatch("metric: reference vs estimate", x.shape, y.shape)
	return x, y

def mse(x, y) -> float:
	x, y = _pair(x, y)
	return float(np.mean((x - y) ** 2))

def mae(x, y) -> float:
	x, y = _pair(x, y)
	return float(np.mean(np.abs(x - y)))

# 10 log10(peak^2 / MSE); +inf for identical images
def psnr(x, y, peak: float = 1.0) -> float:
	err = mse(x, y)
	if err == 0.0:
		return math.inf
	return 10.0 * math.log10(peak * peak / err)

def psnr_from_mse(err: float, peak: float = 1.0) -> float:
	return math.inf if err == 0.0 else 10.0 * math.log10(peak * peak / err)

# 10 log10(255^2 / MSE) with MSE taken on [0, 1] pixels, the convention of the published tables
def psnr255(x, y) -> float:
	return psnr_from_mse(mse(x, y), peak=255.0)

def gaussian_window(size: int = SSIM_WINDOW, sigma: float = SSIM_SIGMA) -> np.ndarray:
	r = np.arange(size, dtype=np.float64) - (size - 1) / 2.0
	g = np.exp(-(r * r) / (2.0 * sigma * sigma))
	w = np.outer(g, g)
	return w / w.sum()

def ssim(x, y, peak: float = 1.0) -> float:
	"""
	Single-scale SSIM of two 2-D images, averaged over valid window positions.
	Images smaller than the 11x11 window use the largest odd window that fits.
	"""
	x, y = _pair(x, y)
	x = np.squeeze(x)
	y = np.squeeze(y)
	if x.ndim != 2:
		raise shape_mismatch("ssim: expected 2-D images", x.shape, ("H", "W"))
	size = min(SSIM_WINDOW, min(x.shape))
	if size % 2 == 0:
		size -= 1
	w = gaussian_window(size)
	c1 = (K1 * peak) ** 2
	c2 = (K2 * peak) ** 2

	def filt(a):
		return signal.convolve2d(a, w, mode="valid")

	mu_x, mu_y = filt(x), filt(y)
	sxx = filt(x * x) - mu_x * mu_x
	syy = filt(y * y) - mu_y * mu_y
	sxy = filt(x * y) - mu_x * mu_y
	num = (2.0 * mu_x * mu_y + c1) * (2.0 * sxy + c2)
	den = (mu_x * mu_x + mu_y * mu_y + c1) * (sxx + syy + c2)
	return float(np.mean(num / den))
