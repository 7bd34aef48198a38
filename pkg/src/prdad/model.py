from __future__ import annotations
import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from src.autodiff import ops
from src.autodiff.nn import BatchNorm2d, Conv3x3, Identity, Module, PReLU, Sequential
from src.autodiff.tensor import Parameter, Tensor, as_tensor
from src.errors import ConfigError, DimensionError, shape_mismatch

log = logging.getLogger(__name__)

@dataclass(frozen=True)
class PRDADConfig:
	m: int = 48                                       # padded magnitude side
	n: int = 32                                       # image side
	repr_shape: Tuple[int, int, int] = (1, 32, 32)    # (C, s, s); (1, n, n) for transform codecs
	mlp_hidden: Tuple[int, int, int] = (2048, 4096, 4096)
	enhancement_blocks: int = 3
	decoder_finetune: float = 0.0                     # fraction of final epochs with a trainable decoder
	log_magnitude: bool = False
	dtype: str = "float64"

	def __post_init__(self):
		if len(self.mlp_hidden) != 3 or min(self.mlp_hidden) <= 0:
			raise ConfigError(f"prdad.mlp_hidden needs three positive widths, got {self.mlp_hidden}")
		if len(self.repr_shape) != 3 or min(self.repr_shape) <= 0:
			raise ConfigError(f"prdad.repr_shape must be (C, s, s), got {self.repr_shape}")
		if self.enhancement_blocks < 0:
			raise ConfigError("prdad.enhancement_blocks must be >= 0")
		if not (0.0 <= self.decoder_finetune <= 1.0):
			raise ConfigError(f"prdad.decoder_finetune must be in [0, 1], got {self.decoder_finetune}")
		if self.m < self.n:
			raise ConfigError(f"prdad.m ({self.m}) must be >= prdad.n ({self.n})")

	@property
	def repr_size(self) -> int:
		return int(np.prod(self.repr_shape))

	@property
	def mlp_dims(self) -> Tuple[int, ...]:
		return (self.m * self.m,) + tuple(self.mlp_hidden) + (self.repr_size,)

# One fully connected layer followed by its own PReLU
class MLPLayer(Module):
	def __init__(self, n_in: int, n_out: int, rng: np.random.Generator, dtype):
		bound = 1.0 / np.sqrt(n_in)
		self.weight = Parameter(rng.uniform(-bound, bound, size=(n_out, n_in)).astype(dtype))
		self.bias = Parameter(rng.uniform(-bound, bound, size=(n_out,)).astype(dtype))
		self.slope = Parameter(np.array([0.25], dtype=dtype))

	def forward(self, x: Tensor) -> Tensor:
		return ops.prelu(ops.affine(x, self.weight, self.bias), self.slope)

class MLP(Sequential):
	def __init__(self, cfg: PRDADConfig, rng: np.random.Generator):
		dims = cfg.mlp_dims
		dt = np.dtype(cfg.dtype)
		super().__init__([(f"layer{i + 1}", MLPLayer(dims[i], dims[i + 1], rng, dt)) for i in range(len(dims) - 1)])
		self.cfg = cfg

	def forward(self, omega: Tensor) -> Tensor:
		B = omega.shape[0]
		h = ops.reshape(omega, (B, -1))
		for layer in self:
			h = layer(h)
		return ops.reshape(h, (B,) + self.cfg.repr_shape)

def build_mlp(cfg: PRDADConfig, rng: np.random.Generator) -> MLP:
	mlp = MLP(cfg, rng)
	log.info("mlp: dims %s, %d parameters", "->".join(map(str, cfg.mlp_dims)), mlp.parameter_count())
	return mlp

# Channel-preserving [conv -> batchnorm -> PReLU] x2 blocks on the representation maps
def build_enhancement(cfg: PRDADConfig, rng: np.random.Generator) -> Module:
	if cfg.enhancement_blocks == 0:
		return Identity()
	C = cfg.repr_shape[0]
	dt = np.dtype(cfg.dtype)
	blocks = []
	for b in range(cfg.enhancement_blocks):
		blocks.append((f"block{b + 1}", Sequential([
			("conv1", Conv3x3(C, C, rng, dt)), ("bn1", BatchNorm2d(C, dtype=dt)), ("act1", PReLU(dtype=dt)),
			("conv2", Conv3x3(C, C, rng, dt)), ("bn2", BatchNorm2d(C, dtype=dt)), ("act2", PReLU(dtype=dt)),
		])))
	return Sequential(blocks)

class PRDAD(Module):
	"""
	Magnitude -> representation -> image network.
	mlp and enhance learn the map from the padded Fourier magnitude to the codec's representation;
	the codec's decoder turns that representation into the image and stays frozen unless fine-tuning is on.
	"""

	def __init__(self, cfg: PRDADConfig, codec, seed: int = 0):
		if tuple(codec.layout) != tuple(cfg.repr_shape):
			raise ConfigError(f"prdad.repr_shape {cfg.repr_shape} does not match the {codec.kind} codec layout {codec.layout}")
		rng = np.random.default_rng(seed)
		self.cfg = cfg
		self.codec = codec
		self.mlp = build_mlp(cfg, rng)
		self.enhance = build_enhancement(cfg, rng)
		self.decoder = codec.decoder
		self.decoder_trainable = False
		self.assign_names()
		set_decoder_finetune(self, False)

	def train(self, mode: bool = True) -> "PRDAD":
		super().train(mode)
		if not self.decoder_trainable:
			self.decoder.train(False)
		return self

	def _check_input(self, omega: Tensor) -> Tensor:
		m = self.cfg.m
		if omega.ndim == 4 and omega.shape[1] == 1:
			omega = ops.reshape(omega, (omega.shape[0],) + omega.shape[2:])
		if omega.ndim != 3 or omega.shape[1:] != (m, m):
			raise shape_mismatch("prdad: magnitude input vs configured grid", omega.shape, (omega.shape[0], m, m))
		return omega

	def represent(self, omega) -> Tensor:
		omega = self._check_input(as_tensor(omega))
		if self.cfg.log_magnitude:
			omega = ops.log1p(omega)
		return self.enhance(self.mlp(omega))

	def forward(self, omega) -> Tuple[Tensor, Tensor]:
		t_hat = self.represent(omega)
		x_hat = self.decoder(t_hat)
		if x_hat.shape[1:] != (1, self.cfg.n, self.cfg.n):
			raise DimensionError(f"prdad: decoder produced {x_hat.shape}, expected [B,1,{self.cfg.n},{self.cfg.n}]")
		return t_hat, x_hat

def set_decoder_finetune(model: PRDAD, enabled: bool) -> None:
	model.decoder_trainable = bool(enabled)
	model.decoder.set_trainable(enabled)
	model.decoder.train(model.training and enabled)
	log.debug("decoder fine-tuning %s", "on" if enabled else "off")
