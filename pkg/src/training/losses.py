from __future__ import annotations
from dataclasses import dataclass
from typing import Callable, Dict, Optional, Tuple, Union

import numpy as np

from src.autodiff import ops
from src.autodiff.tensor import Tensor, as_tensor
from src.errors import ConfigError, shape_mismatch
from src.fourier.dft import PaddingSpec, forward_model

LOSS_NAMES = ("mse", "mag", "sparse", "encode")

@dataclass(frozen=True)
class LossWeights:
	mse: float = 1.0
	mag: float = 0.1
	sparse: float = 1e-4
	encode: float = 1.0

	def __post_init__(self):
		vals = self.as_dict()
		neg = [k for k, v in vals.items() if v < 0]
		if neg:
			raise ConfigError(f"loss weights must be >= 0, got negative {', '.join(neg)}")
		if not any(v > 0 for v in vals.values()):
			raise ConfigError("at least one loss weight must be > 0")

	def as_dict(self) -> Dict[str, float]:
		return {"mse": self.mse, "mag": self.mag, "sparse": self.sparse, "encode": self.encode}

def rotate_pi(x: Union[Tensor, np.ndarray]) -> Tensor:
	return ops.flip(as_tensor(x), (-2, -1))

def _per_sample_sq(a: Tensor, b: Tensor) -> Tensor:
	axes = tuple(range(1, a.ndim))
	return ops.mean(ops.square(a - b), axis=axes)

# Per-sample min of two squared distances, then the batch mean
def _min_branch(direct: Tensor, rotated: Tensor) -> Tensor:
	return ops.mean(ops.where(direct.data <= rotated.data, direct, rotated))

def _same_shape(what: str, a: Tensor, b: Tensor) -> None:
	if a.shape != b.shape:
		raise shape_mismatch(what, a.shape, b.shape)

def loss_mse_rot(x, x_hat) -> Tensor:
	x, x_hat = as_tensor(x), as_tensor(x_hat)
	_same_shape("loss_mse_rot: target vs prediction", x, x_hat)
	return _min_branch(_per_sample_sq(x, x_hat), _per_sample_sq(x, rotate_pi(x_hat)))

# Magnitude cycle loss; omega, when given, is the already padded magnitude of x
def loss_mag_cycle(x, x_hat, rho: Union[float, PaddingSpec], omega: Optional[np.ndarray] = None) -> Tensor:
	x, x_hat = as_tensor(x), as_tensor(x_hat)
	_same_shape("loss_mag_cycle: target vs prediction", x, x_hat)
	w_hat = forward_model(x_hat, rho)
	w = forward_model(Tensor(x.data), rho).data if omega is None else np.asarray(omega).reshape(w_hat.shape)
	return ops.mean(_per_sample_sq(Tensor(w), w_hat))

def loss_sparse(t_hat) -> Tensor:
	return ops.mean(ops.abs_(as_tensor(t_hat)))

def loss_encode_rot(t, t_hat, rotate_repr: Callable[[Tensor], Tensor]) -> Tensor:
	t, t_hat = as_tensor(t), as_tensor(t_hat)
	_same_shape("loss_encode_rot: target vs predicted representation", t, t_hat)
	return _min_branch(_per_sample_sq(t, t_hat), _per_sample_sq(t, rotate_repr(t_hat)))

def total_loss(
	batch,
	t_hat: Tensor,
	x_hat: Tensor,
	weights: LossWeights,
	rotate_repr: Callable[[Tensor], Tensor],
	rho: Union[float, PaddingSpec],
) -> Tuple[Tensor, Dict[str, Tensor]]:
	"""
	Weighted sum of the four losses for one batch (omega, x, target).
	All components are evaluated for logging; zero-weighted ones stay out of the returned sum.
	"""
	parts = {
		"mse": loss_mse_rot(batch.x, x_hat),
		"mag": loss_mag_cycle(batch.x, x_hat, rho, omega=batch.omega),
		"sparse": loss_sparse(t_hat),
		"encode": loss_encode_rot(batch.target, t_hat, rotate_repr),
	}
	total = None
	for name, w in weights.as_dict().items():
		if w == 0:
			continue
		term = parts[name] * w
		total = term if total is None else total + term
	return total, parts
