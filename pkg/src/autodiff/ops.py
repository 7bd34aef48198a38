from __future__ import annotations
from typing import Callable, Optional, Sequence, Tuple, Union

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from src.autodiff.tensor import Parameter, Tensor, as_tensor, record
from src.errors import DegenerateBatchError, DimensionError, shape_mismatch

Scalar = Union[int, float]

def _unbroadcast(g: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
	while g.ndim > len(shape):
		g = g.sum(axis=0)
	for axis, n in enumerate(shape):
		if n == 1 and g.shape[axis] != 1:
			g = g.sum(axis=axis, keepdims=True)
	return g

def _need(t: Tensor) -> bool:
	return t.requires_grad

# ---------- elementwise ----------

def add(a, b) -> Tensor:
	a, b = as_tensor(a), as_tensor(b)
	def back(g):
		return (_unbroadcast(g, a.shape) if _need(a) else None, _unbroadcast(g, b.shape) if _need(b) else None)
	return record("add", (a, b), a.data + b.data, back)

def sub(a, b) -> Tensor:
	a, b = as_tensor(a), as_tensor(b)
	def back(g):
		return (_unbroadcast(g, a.shape) if _need(a) else None, _unbroadcast(-g, b.shape) if _need(b) else None)
	return record("sub", (a, b), a.data - b.data, back)

def mul(a, b) -> Tensor:
	a, b = as_tensor(a), as_tensor(b)
	def back(g):
		ga = _unbroadcast(g * b.data, a.shape) if _need(a) else None
		gb = _unbroadcast(g * a.data, b.shape) if _need(b) else None
		return (ga, gb)
	return record("mul", (a, b), a.data * b.data, back)

def scale(a: Tensor, c: Scalar) -> Tensor:
	c = float(c)
	return record("scale", (a,), a.data * c, lambda g: (g * c,))

def neg(a: Tensor) -> Tensor:
	return scale(a, -1.0)

def square(a: Tensor) -> Tensor:
	return record("square", (a,), a.data * a.data, lambda g: (2.0 * a.data * g,))

def abs_(a: Tensor) -> Tensor:
	return record("abs", (a,), np.abs(a.data), lambda g: (np.sign(a.data) * g,))

def log1p(a: Tensor) -> Tensor:
	return record("log1p", (a,), np.log1p(a.data), lambda g: (g / (1.0 + a.data),))

# out = a where mask else b; mask is a constant
def where(mask: np.ndarray, a: Tensor, b: Tensor) -> Tensor:
	mask = np.asarray(mask, dtype=bool)
	def back(g):
		ga = _unbroadcast(np.where(mask, g, 0.0), a.shape) if _need(a) else None
		gb = _unbroadcast(np.where(mask, 0.0, g), b.shape) if _need(b) else None
		return (ga, gb)
	return record("where", (a, b), np.where(mask, a.data, b.data), back)

# ---------- reductions / shape ----------

def sum_(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:
	out = a.data.sum(axis=axis, keepdims=keepdims)
	def back(g):
		if axis is not None and not keepdims:
			g = np.expand_dims(g, axis)
		return (np.broadcast_to(g, a.shape).copy(),)
	return record("sum", (a,), np.asarray(out), back)

def mean(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:
	count = a.data.size if axis is None else int(np.prod([a.shape[i] for i in np.atleast_1d(axis)]))
	return scale(sum_(a, axis=axis, keepdims=keepdims), 1.0 / count)

def reshape(a: Tensor, shape: Sequence[int]) -> Tensor:
	src = a.shape
	return record("reshape", (a,), a.data.reshape(shape), lambda g: (g.reshape(src),))

def flip(a: Tensor, axes: Sequence[int]) -> Tensor:
	axes = tuple(axes)
	return record("flip", (a,), np.flip(a.data, axis=axes).copy(), lambda g: (np.flip(g, axis=axes).copy(),))

def select(a: Tensor, index: int) -> Tensor:
	def back(g):
		full = np.zeros_like(a.data)
		full[index] = g
		return (full,)
	return record("select", (a,), a.data[index].copy(), back)

# Zero padding on the last two axes
def pad2d(a: Tensor, before: Tuple[int, int], after: Tuple[int, int]) -> Tensor:
	widths = [(0, 0)] * (a.ndim - 2) + [(before[0], after[0]), (before[1], after[1])]
	h, w = a.shape[-2:]
	def back(g):
		return (g[..., before[0]:before[0] + h, before[1]:before[1] + w].copy(),)
	return record("pad2d", (a,), np.pad(a.data, widths), back)

# Fixed linear operator with a known adjoint (transforms, rotations)
def linear_map(a: Tensor, forward: Callable[[np.ndarray], np.ndarray], adjoint: Callable[[np.ndarray], np.ndarray], kind: str = "linear") -> Tensor:
	return record(kind, (a,), forward(a.data), lambda g: (adjoint(g),))

# ---------- layers ----------

def affine(x: Tensor, W: Tensor, b: Tensor) -> Tensor:
	if x.ndim != 2 or W.ndim != 2 or x.shape[1] != W.shape[1]:
		raise shape_mismatch("affine: input vs weight", x.shape, W.shape)
	if b.shape != (W.shape[0],):
		raise shape_mismatch("affine: bias vs weight rows", b.shape, W.shape)
	def back(g):
		gx = g @ W.data if _need(x) else None
		gW = g.T @ x.data if _need(W) else None
		gb = g.sum(axis=0) if _need(b) else None
		return (gx, gW, gb)
	return record("affine", (x, W, b), x.data @ W.data.T + b.data, back)

def _correlate3x3(x: np.ndarray, k: np.ndarray) -> np.ndarray:
	xp = np.pad(x, ((0, 0), (0, 0), (1, 1), (1, 1)))
	win = sliding_window_view(xp, (3, 3), axis=(2, 3))  # [B,C,H,W,3,3]
	out = np.tensordot(win, k, axes=([1, 4, 5], [1, 2, 3]))  # [B,H,W,O]
	return np.ascontiguousarray(out.transpose(0, 3, 1, 2))

# 3x3 cross-correlation, stride 1, zero padding 1
def conv2d(x: Tensor, K: Tensor, b: Tensor) -> Tensor:
	if x.ndim != 4 or K.ndim != 4 or K.shape[2:] != (3, 3):
		raise shape_mismatch("conv2d: input vs kernel", x.shape, K.shape)
	if x.shape[1] != K.shape[1]:
		raise shape_mismatch("conv2d: input channels vs kernel", x.shape, K.shape)
	if b.shape != (K.shape[0],):
		raise shape_mismatch("conv2d: bias vs kernel", b.shape, K.shape)

	def back(g):
		gx = gK = gb = None
		if _need(x):
			k_adj = np.flip(K.data, axis=(2, 3)).transpose(1, 0, 2, 3)
			gx = _correlate3x3(g, np.ascontiguousarray(k_adj))
		if _need(K):
			xp = np.pad(x.data, ((0, 0), (0, 0), (1, 1), (1, 1)))
			win = sliding_window_view(xp, (3, 3), axis=(2, 3))
			gK = np.tensordot(g, win, axes=([0, 2, 3], [0, 2, 3]))
		if _need(b):
			gb = g.sum(axis=(0, 2, 3))
		return (gx, gK, gb)

	out = _correlate3x3(x.data, K.data) + b.data[None, :, None, None]
	return record("conv2d", (x, K, b), out, back)

# Parametric rectifier with one learned slope per layer; slope a is used at z == 0
def prelu(x: Tensor, a: Tensor) -> Tensor:
	slope = a.data.reshape(-1)[0]
	pos = x.data > 0
	def back(g):
		gx = np.where(pos, g, slope * g) if _need(x) else None
		ga = np.asarray(np.sum(np.where(pos, 0.0, g * x.data))).reshape(a.shape) if _need(a) else None
		return (gx, ga)
	return record("prelu", (x, a), np.where(pos, x.data, slope * x.data), back)

def relu(x: Tensor) -> Tensor:
	pos = x.data > 0
	return record("relu", (x,), np.where(pos, x.data, 0.0), lambda g: (np.where(pos, g, 0.0),))

class BatchNormState:
	def __init__(self, channels: int, momentum: float = 0.1, eps: float = 1e-5, dtype=np.float64):
		self.running_mean = np.zeros(channels, dtype=dtype)
		self.running_var = np.ones(channels, dtype=dtype)
		self.momentum = momentum
		self.eps = eps

def batchnorm2d(x: Tensor, gamma: Tensor, beta: Tensor, state: BatchNormState, training: bool) -> Tensor:
	if x.ndim != 4 or gamma.shape != (x.shape[1],) or beta.shape != (x.shape[1],):
		raise shape_mismatch("batchnorm2d: input vs affine params", x.shape, gamma.shape)
	axes = (0, 2, 3)
	n = x.shape[0] * x.shape[2] * x.shape[3]
	shape = (1, -1, 1, 1)

	if training:
		if n < 2:
			raise DegenerateBatchError(f"batchnorm2d: B*H*W = {n} < 2 in train mode (shape {x.shape})")
		mu = x.data.mean(axis=axes)
		var = x.data.var(axis=axes)
		m = state.momentum
		state.running_mean = (1.0 - m) * state.running_mean + m * mu
		state.running_var = (1.0 - m) * state.running_var + m * var * (n / (n - 1))
	else:
		mu = state.running_mean
		var = state.running_var

	inv_std = 1.0 / np.sqrt(var + state.eps)
	xhat = (x.data - mu.reshape(shape)) * inv_std.reshape(shape)
	out = xhat * gamma.data.reshape(shape) + beta.data.reshape(shape)

	def back(g):
		gx = None
		if _need(x):
			dxhat = g * gamma.data.reshape(shape)
			if training:
				gx = (inv_std.reshape(shape) / n) * (
					n * dxhat
					- dxhat.sum(axis=axes, keepdims=True)
					- xhat * (dxhat * xhat).sum(axis=axes, keepdims=True)
				)
			else:
				gx = dxhat * inv_std.reshape(shape)
		gg = (g * xhat).sum(axis=axes) if _need(gamma) else None
		gb = g.sum(axis=axes) if _need(beta) else None
		return (gx, gg, gb)

	return record("batchnorm2d", (x, gamma, beta), out, back)

def avgpool2(x: Tensor) -> Tensor:
	if x.ndim != 4 or x.shape[2] % 2 or x.shape[3] % 2:
		raise DimensionError(f"avgpool2: spatial extents must be even, got shape {x.shape}")
	B, C, H, W = x.shape
	out = x.data.reshape(B, C, H // 2, 2, W // 2, 2).mean(axis=(3, 5))
	def back(g):
		return (np.repeat(np.repeat(g, 2, axis=2), 2, axis=3) * 0.25,)
	return record("avgpool2", (x,), out, back)

# Interpolation matrix for x2 bilinear upsampling, align_corners=False, edge-clamped
def _upsample_matrix(n: int, dtype) -> np.ndarray:
	U = np.zeros((2 * n, n), dtype=dtype)
	for o in range(2 * n):
		src = (o + 0.5) / 2.0 - 0.5
		i0 = int(np.floor(src))
		frac = src - i0
		U[o, min(max(i0, 0), n - 1)] += 1.0 - frac
		U[o, min(max(i0 + 1, 0), n - 1)] += frac
	return U

def upsample_bilinear2(x: Tensor) -> Tensor:
	if x.ndim != 4:
		raise DimensionError(f"upsample_bilinear2: expected [B,C,H,W], got shape {x.shape}")
	Uh = _upsample_matrix(x.shape[2], x.dtype)
	Uw = _upsample_matrix(x.shape[3], x.dtype)
	out = Uh @ x.data @ Uw.T
	return record("upsample_bilinear2", (x,), out, lambda g: (Uh.T @ g @ Uw,))

# ---------- operator sugar ----------

def _rsub(a, b):
	return sub(b, a)

def _div(a, b):
	if isinstance(b, (int, float)):
		return scale(a, 1.0 / b)
	b = as_tensor(b)
	inv = record("reciprocal", (b,), 1.0 / b.data, lambda g: (-g / (b.data * b.data),))
	return mul(a, inv)

Tensor.__add__ = add
Tensor.__radd__ = add
Tensor.__sub__ = sub
Tensor.__rsub__ = _rsub
Tensor.__mul__ = lambda a, b: scale(a, b) if isinstance(b, (int, float)) else mul(a, b)
Tensor.__rmul__ = Tensor.__mul__
Tensor.__truediv__ = _div
Tensor.__neg__ = neg
