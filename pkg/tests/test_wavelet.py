# tests/test_wavelet.py
import numpy as np
import pytest

from src.autodiff import ops
from src.autodiff.tensor import Tensor
from src.errors import DimensionError
from src.wavelet.haar import (PacketCoeffs, active_fraction, analyze, frame_bounds_estimate, haar_analysis, haar_forward,
	haar_inverse, haar_level, haar_level_inv, packet_analysis, packet_forward, packet_inverse, packet_synthesis,
	sparsity_l1, synthesize)
from tests.helpers import gradcheck, piecewise_constant

def test_haar_level_examples():
	LL, LH, HL, HH = haar_level(np.array([[1.0, 2.0], [3.0, 4.0]]))
	assert (LL[0, 0], LH[0, 0], HL[0, 0], HH[0, 0]) == (5.0, -1.0, -2.0, 0.0)
	assert LL[0, 0] ** 2 + LH[0, 0] ** 2 + HL[0, 0] ** 2 + HH[0, 0] ** 2 == 1 + 4 + 9 + 16

	LL, LH, HL, HH = haar_level(np.full((2, 2), 0.75))
	assert LL[0, 0] == 1.5 and LH[0, 0] == HL[0, 0] == HH[0, 0] == 0.0

	LL, LH, HL, HH = haar_level(np.array([[1.0, -1.0], [-1.0, 1.0]]))
	assert LL[0, 0] == LH[0, 0] == HL[0, 0] == 0.0 and HH[0, 0] != 0.0

	with pytest.raises(DimensionError):
		haar_level(np.zeros((3, 4)))

def test_haar_level_inverse():
	one = np.ones((1, 1))
	assert np.array_equal(haar_level_inv(5 * one, -1 * one, -2 * one, 0 * one), [[1.0, 2.0], [3.0, 4.0]])
	assert np.allclose(haar_level_inv(2 * 0.4 * one, 0 * one, 0 * one, 0 * one), 0.4)
	x = np.random.default_rng(0).standard_normal((6, 8))
	assert np.max(np.abs(haar_level_inv(*haar_level(x)) - x)) <= 1e-12

def test_packet_depth_one_is_haar_level():
	x = np.random.default_rng(1).standard_normal((8, 8))
	c = packet_analysis(x, 1)
	LL, LH, HL, HH = haar_level(x)
	assert np.array_equal(c.data[:4, :4], LL) and np.array_equal(c.data[:4, 4:], LH)
	assert np.array_equal(c.data[4:, :4], HL) and np.array_equal(c.data[4:, 4:], HH)
	assert len(c.blocks()) == 4 and c.block_size == 4

def test_constant_image_full_depth():
	n, c = 16, 0.3
	coeffs = packet_analysis(np.full((n, n), c))
	assert coeffs.depth == 4
	assert coeffs.blocks()[0].shape == (1, 1)
	assert coeffs.data[0, 0] == pytest.approx(n * c, abs=1e-12)
	rest = coeffs.data.copy()
	rest[0, 0] = 0.0
	assert np.max(np.abs(rest)) <= 1e-12

def test_perfect_reconstruction_and_parseval():
	rng = np.random.default_rng(2)
	x = rng.standard_normal((1000, 32, 32))
	norms = np.linalg.norm(x.reshape(1000, -1), axis=1)
	for depth in range(1, 6):
		c = packet_forward(x, depth)
		assert np.max(np.abs(packet_inverse(c, depth) - x)) <= 1e-10
		assert np.max(np.abs(np.linalg.norm(c.reshape(1000, -1), axis=1) - norms)) <= 1e-9
		h = haar_forward(x, depth)
		assert np.max(np.abs(haar_inverse(h, depth) - x)) <= 1e-10
		assert np.max(np.abs(np.linalg.norm(h.reshape(1000, -1), axis=1) - norms)) <= 1e-9

def test_synthesis_mirrors_analysis():
	x = np.random.default_rng(3).standard_normal((16, 16))
	for depth in (1, 2, 4):
		assert np.max(np.abs(packet_synthesis(packet_analysis(x, depth)) - x)) <= 1e-10
		assert np.max(np.abs(packet_synthesis(haar_analysis(x, depth)) - x)) <= 1e-10
	c = PacketCoeffs(depth=4, data=np.zeros((16, 16)))
	c.data[0, 0] = 16 * 0.25
	assert np.allclose(packet_synthesis(c), 0.25)

def test_linearity():
	rng = np.random.default_rng(4)
	x, y = rng.standard_normal((2, 16, 16))
	a, b = 1.7, -0.4
	lhs = packet_forward(a * x + b * y)
	rhs = a * packet_forward(x) + b * packet_forward(y)
	assert np.max(np.abs(lhs - rhs)) <= 1e-12

def test_piecewise_constant_images_are_sparse():
	for seed in range(5):
		x = piecewise_constant(32, 4, seed)
		c = packet_analysis(x)
		nonzero = np.mean(np.abs(c.data) > 1e-9)
		assert nonzero <= 0.10, nonzero

def test_frame_bounds():
	# default draw count: 1000 random coefficient vectors on a 32x32 grid
	A, B = frame_bounds_estimate(lambda a: packet_inverse(a), (32, 32))
	assert abs(A - 1.0) <= 1e-9 and abs(B - 1.0) <= 1e-9
	A, B = frame_bounds_estimate(lambda a: haar_inverse(a), (32, 32))
	assert abs(A - 1.0) <= 1e-9 and abs(B - 1.0) <= 1e-9
	A, B = frame_bounds_estimate(lambda a: 2.0 * packet_inverse(a), (32, 32), samples=1200)
	assert abs(A - 4.0) <= 1e-9 and abs(B - 4.0) <= 1e-9

def test_sparsity_measures():
	assert sparsity_l1(np.zeros((4, 4))) == 0.0
	c = np.zeros((4, 4))
	c[1, 2] = -3.5
	assert sparsity_l1(c) == 3.5
	x = np.random.default_rng(5).standard_normal((8, 8))
	assert sparsity_l1(2 * x) == pytest.approx(2 * sparsity_l1(x))
	assert sparsity_l1(packet_analysis(x)) == pytest.approx(np.sum(np.abs(packet_forward(x))))
	assert active_fraction(c) == 1.0 / 16
	assert active_fraction(np.zeros((2, 4, 4))) == 0.0

def test_differentiable_wrappers():
	x = np.random.default_rng(6).standard_normal((8, 8))
	assert np.allclose(analyze(x, 2).data, packet_forward(x, 2))
	assert np.allclose(synthesize(analyze(x), kind="packet").data, x, atol=1e-12)
	assert np.allclose(synthesize(haar_forward(x), kind="haar").data, x, atol=1e-12)

	w = Tensor(np.random.default_rng(7).standard_normal((8, 8)))
	gradcheck(lambda u: ops.sum_(ops.mul(synthesize(u, 2), w)), [x])
	gradcheck(lambda u: ops.sum_(ops.mul(analyze(u, kind="haar"), w)), [x])

def test_invalid_grids():
	with pytest.raises(DimensionError):
		packet_forward(np.zeros((12, 12)))
	with pytest.raises(DimensionError):
		packet_forward(np.zeros((8, 8)), depth=4)
	with pytest.raises(DimensionError):
		packet_forward(np.zeros((8, 4)))

if __name__ == "__main__":
	test_haar_level_examples()
	test_haar_level_inverse()
	test_packet_depth_one_is_haar_level()
	test_constant_image_full_depth()
	test_perfect_reconstruction_and_parseval()
	test_synthesis_mirrors_analysis()
	test_linearity()
	test_piecewise_constant_images_are_sparse()
	test_frame_bounds()
	test_sparsity_measures()
	test_differentiable_wrappers()
	test_invalid_grids()
	print("OK: wavelet tests passed")
