from __future__ import annotations
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np

from src.autodiff import ops
from src.autodiff.tensor import Tensor, as_tensor
from src.errors import DimensionError, shape_mismatch

# Orthonormal Haar analysis/synthesis on the last two axes.
# Level layout inside a 2m x 2m block: [[LL, LH], [HL, HH]], first letter = column (vertical) band.

def is_power_of_two(x: int) -> bool:
	return x > 0 and (x & (x - 1)) == 0

def haar_level(x: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
	x = np.asarray(x)
	if x.shape[-1] % 2 or x.shape[-2] % 2:
		raise DimensionError(f"haar_level: extents must be even, got shape {x.shape}")
	a = x[..., 0::2, 0::2]
	b = x[..., 0::2, 1::2]
	c = x[..., 1::2, 0::2]
	d = x[..., 1::2, 1::2]
	LL = (a + b + c + d) * 0.5
	LH = (a - b + c - d) * 0.5
	HL = (a + b - c - d) * 0.5
	HH = (a - b - c + d) * 0.5
	return LL, LH, HL, HH

def haar_level_inv(LL: np.ndarray, LH: np.ndarray, HL: np.ndarray, HH: np.ndarray) -> np.ndarray:
	shapes = {np.shape(LL), np.shape(LH), np.shape(HL), np.shape(HH)}
	if len(shapes) != 1:
		raise shape_mismatch("haar_level_inv: subbands", np.shape(LL), np.shape(HH))
	LL, LH, HL, HH = (np.asarray(v) for v in (LL, LH, HL, HH))
	out = np.empty(LL.shape[:-2] + (2 * LL.shape[-2], 2 * LL.shape[-1]), dtype=np.result_type(LL, 1.0))
	out[..., 0::2, 0::2] = (LL + LH + HL + HH) * 0.5
	out[..., 0::2, 1::2] = (LL - LH + HL - HH) * 0.5
	out[..., 1::2, 0::2] = (LL + LH - HL - HH) * 0.5
	out[..., 1::2, 1::2] = (LL - LH - HL + HH) * 0.5
	return out

def _split(x: np.ndarray) -> np.ndarray:
	LL, LH, HL, HH = haar_level(x)
	top = np.concatenate([LL, LH], axis=-1)
	bottom = np.concatenate([HL, HH], axis=-1)
	return np.concatenate([top, bottom], axis=-2)

def _merge(c: np.ndarray) -> np.ndarray:
	m = c.shape[-1] // 2
	return haar_level_inv(c[..., :m, :m], c[..., :m, m:], c[..., m:, :m], c[..., m:, m:])

# Applies fn to every size x size block of the n x n grid (blocks stay in place)
def _per_block(x: np.ndarray, size: int, fn) -> np.ndarray:
	n = x.shape[-1]
	g = n // size
	lead = x.shape[:-2]
	blocks = x.reshape(lead + (g, size, g, size))
	k = len(lead)
	blocks = np.moveaxis(blocks, k + 2, k + 1)  # [..., g, g, size, size]
	blocks = fn(blocks)
	blocks = np.moveaxis(blocks, k + 1, k + 2)
	return blocks.reshape(lead + (n, n))

def check_grid(x: np.ndarray, depth: Optional[int]) -> Tuple[int, int]:
	if x.ndim < 2 or x.shape[-1] != x.shape[-2]:
		raise DimensionError(f"wavelet: expected square images on the last two axes, got shape {x.shape}")
	n = x.shape[-1]
	if not is_power_of_two(n):
		raise DimensionError(f"wavelet: image size must be a power of two, got {n}")
	p = n.bit_length() - 1
	d = p if depth is None else int(depth)
	if not (1 <= d <= p):
		raise DimensionError(f"wavelet: depth must be in [1, {p}] for n={n}, got {d}")
	return n, d

@dataclass(frozen=True)
class PacketCoeffs:
	depth: int
	data: np.ndarray
	kind: str = "packet"   # "packet": every subband split; "haar": only LL split

	@property
	def n(self) -> int:
		return self.data.shape[-1]

	@property
	def block_size(self) -> int:
		return self.n >> self.depth

	# Leaf blocks in depth-first (LL, LH, HL, HH) order; only meaningful for the packet layout
	def blocks(self) -> List[np.ndarray]:
		out: List[np.ndarray] = []
		def walk(r: int, c: int, size: int, level: int) -> None:
			if level == self.depth:
				out.append(self.data[..., r:r + size, c:c + size])
				return
			h = size // 2
			for dr, dc in ((0, 0), (0, h), (h, 0), (h, h)):
				walk(r + dr, c + dc, h, level + 1)
		walk(0, 0, self.n, 0)
		return out

def packet_forward(x: np.ndarray, depth: Optional[int] = None) -> np.ndarray:
	x = np.asarray(x, dtype=np.result_type(x, 1.0))
	n, d = check_grid(x, depth)
	out = x
	for level in range(d):
		out = _per_block(out, n >> level, _split)
	return out

def packet_inverse(c: np.ndarray, depth: Optional[int] = None) -> np.ndarray:
	c = np.asarray(c, dtype=np.result_type(c, 1.0))
	n, d = check_grid(c, depth)
	out = c
	for level in reversed(range(d)):
		out = _per_block(out, n >> level, _merge)
	return out

# Mallat pyramid: only the top-left (LL) block is decomposed again
def haar_forward(x: np.ndarray, levels: Optional[int] = None) -> np.ndarray:
	x = np.asarray(x, dtype=np.result_type(x, 1.0))
	n, d = check_grid(x, levels)
	out = x.copy()
	size = n
	for _ in range(d):
		out[..., :size, :size] = _split(out[..., :size, :size])
		size //= 2
	return out

def haar_inverse(c: np.ndarray, levels: Optional[int] = None) -> np.ndarray:
	c = np.asarray(c, dtype=np.result_type(c, 1.0))
	n, d = check_grid(c, levels)
	out = c.copy()
	for level in reversed(range(d)):
		size = n >> level
		out[..., :size, :size] = _merge(out[..., :size, :size])
	return out

def packet_analysis(x: np.ndarray, depth: Optional[int] = None) -> PacketCoeffs:
	x = np.asarray(x)
	_, d = check_grid(x, depth)
	return PacketCoeffs(depth=d, data=packet_forward(x, d), kind="packet")

def packet_synthesis(c: PacketCoeffs) -> np.ndarray:
	if c.kind == "haar":
		return haar_inverse(c.data, c.depth)
	return packet_inverse(c.data, c.depth)

def haar_analysis(x: np.ndarray, levels: Optional[int] = None) -> PacketCoeffs:
	x = np.asarray(x)
	_, d = check_grid(x, levels)
	return PacketCoeffs(depth=d, data=haar_forward(x, d), kind="haar")

# ---------- differentiable wrappers (orthonormal: adjoint == inverse) ----------

def synthesize(coeffs: Union[Tensor, np.ndarray], depth: Optional[int] = None, kind: str = "packet") -> Tensor:
	inv, fwd = (haar_inverse, haar_forward) if kind == "haar" else (packet_inverse, packet_forward)
	return ops.linear_map(as_tensor(coeffs), lambda a: inv(a, depth), lambda g: fwd(g, depth), kind=f"{kind}_synthesis")

def analyze(x: Union[Tensor, np.ndarray], depth: Optional[int] = None, kind: str = "packet") -> Tensor:
	inv, fwd = (haar_inverse, haar_forward) if kind == "haar" else (packet_inverse, packet_forward)
	return ops.linear_map(as_tensor(x), lambda a: fwd(a, depth), lambda g: inv(g, depth), kind=f"{kind}_analysis")

# ---------- diagnostics ----------

# Empirical min/max of ||T^-1 a||^2 / ||a||^2 over random coefficient vectors
def frame_bounds_estimate(
	synthesis: Callable[[np.ndarray], np.ndarray],
	coeff_shape: Sequence[int],
	samples: int = 1000,
	seed: int = 0,
	batch: int = 250,
) -> Tuple[float, float]:
	rng = np.random.default_rng(seed)
	ratios: List[np.ndarray] = []
	remaining = samples
	while remaining > 0:
		k = min(batch, remaining)
		alpha = rng.standard_normal((k,) + tuple(coeff_shape))
		recon = np.asarray(synthesis(alpha)).reshape(k, -1)
		num = np.sum(recon * recon, axis=1)
		den = np.sum(alpha.reshape(k, -1) ** 2, axis=1)
		ratios.append(num / den)
		remaining -= k
	r = np.concatenate(ratios)
	return float(r.min()), float(r.max())

def _values(c) -> np.ndarray:
	if isinstance(c, PacketCoeffs):
		return c.data
	if isinstance(c, Tensor):
		return c.data
	return np.asarray(c)

def sparsity_l1(c) -> float:
	return float(np.sum(np.abs(_values(c))))

# Fraction of entries with |a| > rel * max|a|, averaged over the leading (sample) axis
def active_fraction(c, rel: float = 0.1) -> float:
	v = _values(c)
	v = v.reshape(1, -1) if v.ndim <= 2 else v.reshape(v.shape[0], -1)
	peak = np.abs(v).max(axis=1, keepdims=True)
	active = np.abs(v) > rel * np.where(peak > 0, peak, np.inf)
	return float(active.mean())
