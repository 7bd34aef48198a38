from __future__ import annotations
from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np

from src.autodiff import ops
from src.autodiff.tensor import Tensor, as_tensor, record
from src.errors import ContractError, shape_mismatch

ZERO_MAG = 1e-12
ArrayLike = Union[Tensor, np.ndarray]

@dataclass(frozen=True)
class ComplexSpectrum:
	real: Tensor
	imag: Tensor

	def __post_init__(self):
		if self.real.shape != self.imag.shape:
			raise shape_mismatch("ComplexSpectrum: real vs imag", self.real.shape, self.imag.shape)

	@property
	def shape(self) -> Tuple[int, ...]:
		return self.real.shape

	def to_complex(self) -> np.ndarray:
		return self.real.data + 1j * self.imag.data

	@classmethod
	def from_complex(cls, z: np.ndarray) -> "ComplexSpectrum":
		return cls(real=Tensor(np.real(z).copy()), imag=Tensor(np.imag(z).copy()))

# numpy-level transforms on the last two axes (no tape)
def fft2(x: np.ndarray) -> np.ndarray:
	return np.fft.fft2(x, axes=(-2, -1))

def ifft2(z: np.ndarray) -> np.ndarray:
	return np.fft.ifft2(z, axes=(-2, -1))

# Differentiable transform of (re, im); output stacked as [2, ...]. Backward applies the adjoint operator.
def _spectral(re: Tensor, im: Tensor, inverse: bool) -> Tensor:
	z = re.data + 1j * im.data
	y = ifft2(z) if inverse else fft2(z)
	hw = z.shape[-2] * z.shape[-1]

	def back(g):
		gc = g[0] + 1j * g[1]
		adj = fft2(gc) / hw if inverse else ifft2(gc) * hw
		return (np.real(adj).astype(re.dtype, copy=False), np.imag(adj).astype(im.dtype, copy=False))

	out = np.stack([np.real(y), np.imag(y)]).astype(re.dtype, copy=False)
	return record("idft2" if inverse else "dft2", (re, im), out, back)

def dft2(x: ArrayLike) -> ComplexSpectrum:
	x = as_tensor(x)
	stacked = _spectral(x, Tensor(np.zeros_like(x.data)), inverse=False)
	return ComplexSpectrum(real=ops.select(stacked, 0), imag=ops.select(stacked, 1))

# Inverse with 1/(HW) normalization; the real part is returned
def idft2(S: ComplexSpectrum) -> Tensor:
	stacked = _spectral(S.real, S.imag, inverse=True)
	return ops.select(stacked, 0)

def magnitude(S: ComplexSpectrum) -> Tensor:
	re, im = S.real, S.imag
	mag = np.sqrt(re.data * re.data + im.data * im.data)
	safe = mag >= ZERO_MAG
	denom = np.where(safe, mag, 1.0)

	def back(g):
		scale = np.where(safe, g / denom, 0.0)
		return (scale * re.data, scale * im.data)

	return record("magnitude", (re, im), mag, back)

# Angle in [-pi, pi]; bins with |z| < 1e-12 get 0. Not differentiable.
def phase(S: ComplexSpectrum) -> Tensor:
	re, im = S.real.data, S.imag.data
	ang = np.arctan2(im, re)
	ang[np.hypot(re, im) < ZERO_MAG] = 0.0
	return Tensor(ang)

@dataclass(frozen=True)
class PaddingSpec:
	fraction: float = 0.0
	mode: str = "total"          # "total": m = n + 2*round(rho*n/2); "per_side": m = n + 2*round(rho*n)
	placement: str = "center"    # "center" | "corner"

	def __post_init__(self):
		if self.fraction < 0:
			raise ContractError(f"zero_pad: padding fraction must be >= 0, got {self.fraction}")
		if self.mode not in ("total", "per_side"):
			raise ContractError(f"zero_pad: unknown mode {self.mode!r}")
		if self.placement not in ("center", "corner"):
			raise ContractError(f"zero_pad: unknown placement {self.placement!r}")

	def per_side(self, n: int) -> int:
		base = self.fraction * n / 2.0 if self.mode == "total" else self.fraction * n
		return int(np.floor(base + 0.5))

	def padded_size(self, n: int) -> int:
		return n + 2 * self.per_side(n)

	# (row, col) offset of the image inside the padded grid
	def offset(self, n: int) -> int:
		return self.per_side(n) if self.placement == "center" else 0

def _as_padding(rho: Union[float, PaddingSpec]) -> PaddingSpec:
	return rho if isinstance(rho, PaddingSpec) else PaddingSpec(fraction=float(rho))

def zero_pad(x: ArrayLike, rho: Union[float, PaddingSpec]) -> Tensor:
	spec = _as_padding(rho)
	x = as_tensor(x)
	n = x.shape[-1]
	p = spec.per_side(n)
	if p == 0:
		return x
	before = spec.offset(n)
	after = 2 * p - before
	return ops.pad2d(x, (before, before), (after, after))

# Boolean mask of the image region inside the padded grid
def support_mask(n: int, rho: Union[float, PaddingSpec]) -> np.ndarray:
	spec = _as_padding(rho)
	m = spec.padded_size(n)
	off = spec.offset(n)
	mask = np.zeros((m, m), dtype=bool)
	mask[off:off + n, off:off + n] = True
	return mask

def forward_model(x: ArrayLike, rho: Union[float, PaddingSpec]) -> Tensor:
	return magnitude(dft2(zero_pad(x, rho)))
