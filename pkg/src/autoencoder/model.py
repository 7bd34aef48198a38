from __future__ import annotations
import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from src.autodiff.nn import AvgPool2, BatchNorm2d, Conv3x3, Identity, Module, Sequential, Upsample2, make_activation
from src.autodiff.tensor import Tensor
from src.errors import ConfigError, DimensionError

log = logging.getLogger(__name__)

@dataclass(frozen=True)
class EncoderConfig:
	n: int = 32
	widths: Tuple[int, int] = (32, 64)   # channels of the first two blocks; the third block emits N maps
	N: int = 128
	activation: str = "prelu"
	pool: Tuple[bool, bool, bool] = (True, True, False)
	dtype: str = "float64"

	def __post_init__(self):
		if self.activation not in ("relu", "prelu"):
			raise ConfigError(f"autoencoder.activation must be 'relu' or 'prelu', got {self.activation!r}")
		if len(self.widths) != 2 or len(self.pool) != 3:
			raise ConfigError("autoencoder: widths needs 2 entries and pool needs 3")
		if self.N <= 0 or min(self.widths) <= 0:
			raise ConfigError("autoencoder: channel widths must be positive")
		if self.n % (2 ** sum(self.pool)):
			raise ConfigError(f"autoencoder: n={self.n} is not divisible by the pooling factor {2 ** sum(self.pool)}")

	@property
	def side(self) -> int:
		return self.n >> sum(self.pool)

	@property
	def repr_shape(self) -> Tuple[int, int, int]:
		return (self.N, self.side, self.side)

	@property
	def np_dtype(self):
		return np.dtype(self.dtype)

def _conv_bn_act(c_in: int, c_out: int, cfg: EncoderConfig, rng: np.random.Generator, tag: str):
	dt = cfg.np_dtype
	return [
		(f"conv{tag}", Conv3x3(c_in, c_out, rng, dt)),
		(f"bn{tag}", BatchNorm2d(c_out, dtype=dt)),
		(f"act{tag}", make_activation(cfg.activation, dt)),
	]

# [conv3x3 -> batchnorm -> activation] x2, then optional 2x2 average pooling
class DownConv(Sequential):
	def __init__(self, c_in: int, c_out: int, pool: bool, cfg: EncoderConfig, rng: np.random.Generator):
		layers = _conv_bn_act(c_in, c_out, cfg, rng, "1") + _conv_bn_act(c_out, c_out, cfg, rng, "2")
		layers.append(("pool", AvgPool2() if pool else Identity()))
		super().__init__(layers)

# optional x2 bilinear upsampling, then [conv3x3 -> batchnorm -> activation] x2
class UpConv(Sequential):
	def __init__(self, c_in: int, c_out: int, upsample: bool, cfg: EncoderConfig, rng: np.random.Generator):
		layers = [("up", Upsample2() if upsample else Identity())]
		layers += _conv_bn_act(c_in, c_out, cfg, rng, "1") + _conv_bn_act(c_out, c_out, cfg, rng, "2")
		super().__init__(layers)

class Encoder(Module):
	def __init__(self, cfg: EncoderConfig, rng: np.random.Generator):
		self.cfg = cfg
		w1, w2 = cfg.widths
		self.block1 = DownConv(1, w1, cfg.pool[0], cfg, rng)
		self.block2 = DownConv(w1, w2, cfg.pool[1], cfg, rng)
		self.block3 = DownConv(w2, cfg.N, cfg.pool[2], cfg, rng)

	def forward(self, x: Tensor) -> Tensor:
		if x.ndim != 4 or x.shape[1:] != (1, self.cfg.n, self.cfg.n):
			raise DimensionError(f"encoder: expected [B,1,{self.cfg.n},{self.cfg.n}], got {x.shape}")
		return self.block3(self.block2(self.block1(x)))

# Mirror of the encoder; the last conv maps to one channel with no activation
class Decoder(Module):
	def __init__(self, cfg: EncoderConfig, rng: np.random.Generator):
		self.cfg = cfg
		w1, w2 = cfg.widths
		up = tuple(reversed(cfg.pool))
		self.block1 = UpConv(cfg.N, w2, up[0], cfg, rng)
		self.block2 = UpConv(w2, w1, up[1], cfg, rng)
		self.block3 = UpConv(w1, w1, up[2], cfg, rng)
		self.out = Conv3x3(w1, 1, rng, cfg.np_dtype)

	def forward(self, t: Tensor) -> Tensor:
		if t.ndim != 4 or t.shape[1:] != self.cfg.repr_shape:
			raise DimensionError(f"decoder: expected [B,{','.join(map(str, self.cfg.repr_shape))}], got {t.shape}")
		return self.out(self.block3(self.block2(self.block1(t))))

def build_encoder(cfg: EncoderConfig, rng: Optional[np.random.Generator] = None) -> Encoder:
	enc = Encoder(cfg, rng if rng is not None else np.random.default_rng(0))
	enc.assign_names()
	log.info("encoder: %d parameters, representation %s", enc.parameter_count(), cfg.repr_shape)
	return enc

def build_decoder(cfg: EncoderConfig, rng: Optional[np.random.Generator] = None) -> Decoder:
	dec = Decoder(cfg, rng if rng is not None else np.random.default_rng(1))
	dec.assign_names()
	log.info("decoder: %d parameters, output 1x%dx%d", dec.parameter_count(), cfg.n, cfg.n)
	return dec

class AutoEncoder(Module):
	def __init__(self, cfg: EncoderConfig, seed: int = 0):
		rng = np.random.default_rng(seed)
		self.cfg = cfg
		self.encoder = build_encoder(cfg, rng)
		self.decoder = build_decoder(cfg, rng)
		self.assign_names()

	def forward(self, x: Tensor) -> Tensor:
		return self.decoder(self.encoder(x))
