from __future__ import annotations
import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from src.autodiff import ops
from src.autodiff.nn import Module
from src.autodiff.tensor import Tensor, as_tensor
from src.errors import ConfigError, DimensionError
from src.wavelet.haar import check_grid, analyze, haar_forward, packet_forward, synthesize

log = logging.getLogger(__name__)

@dataclass(frozen=True)
class EncoderSpec:
	kind: str = "packet"          # "haar" | "packet" | "trained"
	depth: Optional[int] = None   # transform depth; None means full depth log2(n)
	path: Optional[str] = None    # autoencoder checkpoint for kind="trained"

	def __post_init__(self):
		if self.kind not in ("haar", "packet", "trained"):
			raise ConfigError(f"encoder.kind must be 'haar', 'packet' or 'trained', got {self.kind!r}")
		if self.kind == "trained" and not self.path:
			raise ConfigError("encoder.path is required when encoder.kind is 'trained'")
		if self.depth is not None and self.depth < 1:
			raise ConfigError(f"encoder.depth must be >= 1, got {self.depth}")

# Fixed orthonormal synthesis as a parameter-free decoder module
class TransformDecoder(Module):
	def __init__(self, kind: str, depth: int):
		self.kind = kind
		self.depth = depth

	def forward(self, t: Tensor) -> Tensor:
		return synthesize(t, self.depth, self.kind)

class TransformCodec:
	"""Haar or wavelet-packet coefficients laid out on a single n x n plane."""

	def __init__(self, n: int, kind: str = "packet", depth: Optional[int] = None):
		_, d = check_grid(np.zeros((n, n)), depth)
		self.n = n
		self.kind = kind
		self.depth = d
		self.decoder = TransformDecoder(kind, d)

	@property
	def layout(self) -> Tuple[int, int, int]:
		return (1, self.n, self.n)

	def encode(self, x: np.ndarray) -> np.ndarray:
		fwd = haar_forward if self.kind == "haar" else packet_forward
		return fwd(np.asarray(x), self.depth)

	# decode, point-reflect the image, encode again
	def rotate(self, t: Tensor) -> Tensor:
		img = synthesize(as_tensor(t), self.depth, self.kind)
		return analyze(ops.flip(img, (-2, -1)), self.depth, self.kind)

class PacketCodec(TransformCodec):
	def __init__(self, n: int, depth: Optional[int] = None):
		super().__init__(n, "packet", depth)

class HaarCodec(TransformCodec):
	def __init__(self, n: int, levels: Optional[int] = None):
		super().__init__(n, "haar", levels)

class TrainedCodec:
	"""Frozen convolutional encoder for targets, its decoder plugged into the inference network."""

	kind = "trained"

	def __init__(self, autoencoder):
		self.autoencoder = autoencoder
		self.encoder = autoencoder.encoder
		self.decoder = autoencoder.decoder
		self.n = autoencoder.cfg.n
		self.encoder.set_trainable(False)
		self.encoder.eval()
		self.decoder.set_trainable(False)
		self.decoder.eval()

	@property
	def layout(self) -> Tuple[int, int, int]:
		return self.autoencoder.cfg.repr_shape

	def encode(self, x: np.ndarray) -> np.ndarray:
		x = np.asarray(x)
		if x.ndim != 4 or x.shape[1] != 1:
			raise DimensionError(f"trained codec: expected [B,1,n,n] images, got {x.shape}")
		return self.encoder(Tensor(x)).data

	# every feature map is rotated by pi on its own
	def rotate(self, t: Tensor) -> Tensor:
		return ops.flip(as_tensor(t), (-2, -1))

def make_codec(spec: EncoderSpec, n: int, autoencoder=None):
	if spec.kind == "packet":
		codec = PacketCodec(n, spec.depth)
	elif spec.kind == "haar":
		codec = HaarCodec(n, spec.depth)
	else:
		if autoencoder is None:
			raise ConfigError("make_codec: kind 'trained' needs a loaded autoencoder")
		if autoencoder.cfg.n != n:
			raise ConfigError(f"trained autoencoder expects {autoencoder.cfg.n}x{autoencoder.cfg.n} images, data is {n}x{n}")
		codec = TrainedCodec(autoencoder)
	log.info("codec: %s, representation layout %s", spec.kind, codec.layout)
	return codec
