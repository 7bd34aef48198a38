from __future__ import annotations
import logging
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Iterator, List, Optional, Sequence, Union

import numpy as np

from src.autodiff.tensor import Tensor
from src.data.transforms import AugmentationSpec, augment, normalize
from src.errors import ConfigError, DimensionError
from src.fourier.dft import PaddingSpec, forward_model

log = logging.getLogger(__name__)

@dataclass(frozen=True)
class Sample:
	omega: np.ndarray                 # padded Fourier magnitude [m, m]
	x: np.ndarray                     # normalized image [n, n]
	target: Optional[np.ndarray]      # representation T(x), or None without an encoder

@dataclass(frozen=True)
class Batch:
	omega: np.ndarray                 # [B, m, m]
	x: np.ndarray                     # [B, 1, n, n]
	target: Optional[np.ndarray]      # [B, *layout]
	index: np.ndarray                 # dataset indices of the rows

	def __len__(self) -> int:
		return self.x.shape[0]

	def astype(self, dtype) -> "Batch":
		dt = np.dtype(dtype)
		if self.omega.dtype == dt and self.x.dtype == dt and (self.target is None or self.target.dtype == dt):
			return self
		target = None if self.target is None else self.target.astype(dt)
		return replace(self, omega=self.omega.astype(dt), x=self.x.astype(dt), target=target)

# Computed in float64, returned in dtype
def magnitudes(x: np.ndarray, rho: Union[float, PaddingSpec], dtype=np.float64) -> np.ndarray:
	return forward_model(Tensor(np.asarray(x, dtype=np.float64)), rho).data.astype(dtype, copy=False)

def make_sample(x: np.ndarray, rho: Union[float, PaddingSpec], encoder=None) -> Sample:
	x = np.asarray(x, dtype=np.float64)
	if x.ndim != 2:
		raise DimensionError(f"make_sample: expected one [n, n] image, got {x.shape}")
	target = None if encoder is None else encoder.encode(x[None, None])[0]
	return Sample(omega=magnitudes(x, rho), x=x, target=target)

class SampleSource:
	"""
	Deterministic stream of (omega, x, T(x)) training triples over a fixed image array.
	Every image is augmented with its own generator seeded by (seed, epoch, index), so the stream does not
	depend on batch size, worker count or iteration order.
	"""

	def __init__(
		self,
		images: np.ndarray,
		spec: AugmentationSpec,
		codec=None,
		seed: int = 0,
		train: bool = True,
		workers: int = 1,
		padding: Optional[PaddingSpec] = None,
		dtype=np.float64,
	):
		images = np.asarray(images, dtype=np.float64)
		if images.ndim != 3 or images.shape[1:] != (spec.resize, spec.resize):
			raise DimensionError(f"SampleSource: images {images.shape} do not match [count, {spec.resize}, {spec.resize}]")
		if workers < 1:
			raise ConfigError(f"workers must be >= 1, got {workers}")
		self.images = images
		self.spec = spec
		self.codec = codec
		self.seed = seed
		self.train = train
		self.workers = workers
		self.padding = padding if padding is not None else spec.padding
		self.dtype = np.dtype(dtype)

	def __len__(self) -> int:
		return self.images.shape[0]

	@property
	def n(self) -> int:
		return self.spec.resize

	@property
	def m(self) -> int:
		return self.padding.padded_size(self.n)

	def prepare(self, idx: int, epoch: int) -> np.ndarray:
		x = self.images[idx]
		if self.train:
			x = augment(x, self.spec, np.random.default_rng([self.seed, epoch, int(idx)]))
		return normalize(x, self.spec.mean, self.spec.std)

	def order(self, epoch: int, shuffle: bool) -> np.ndarray:
		if not shuffle:
			return np.arange(len(self))
		return np.random.default_rng([self.seed, epoch]).permutation(len(self))

	def _index_chunks(self, epoch: int, batch_size: int, shuffle: bool) -> List[np.ndarray]:
		if not (1 <= batch_size <= max(len(self), 1)):
			raise ConfigError(f"batch_size must be in [1, {len(self)}], got {batch_size}")
		idx = self.order(epoch, shuffle)
		return [idx[i:i + batch_size] for i in range(0, len(idx), batch_size)]

	def _images(self, chunk: np.ndarray, epoch: int) -> np.ndarray:
		return np.stack([self.prepare(i, epoch) for i in chunk])[:, None]

	def _assemble(self, chunk: np.ndarray, epoch: int) -> Batch:
		x = self._images(chunk, epoch)
		omega = magnitudes(x[:, 0], self.padding, self.dtype)
		target = None if self.codec is None else self.codec.encode(x)
		return Batch(omega=omega, x=x, target=target, index=chunk).astype(self.dtype)

	# Ordered prefetch: at most 2*workers batches are in flight
	def _run(self, fn, chunks: Sequence[np.ndarray], epoch: int) -> Iterator:
		if self.workers == 1:
			for c in chunks:
				yield fn(c, epoch)
			return
		with ThreadPoolExecutor(max_workers=self.workers) as pool:
			pending = deque()
			it = iter(chunks)
			for c in it:
				pending.append(pool.submit(fn, c, epoch))
				if len(pending) >= 2 * self.workers:
					break
			for c in it:
				yield pending.popleft().result()
				pending.append(pool.submit(fn, c, epoch))
			while pending:
				yield pending.popleft().result()

	def batches(self, epoch: int, batch_size: int, shuffle: Optional[bool] = None) -> Iterator[Batch]:
		chunks = self._index_chunks(epoch, batch_size, self.train if shuffle is None else shuffle)
		return self._run(self._assemble, chunks, epoch)

	# Normalized image batches only, for autoencoder training
	def image_batches(self, epoch: int, batch_size: int, shuffle: Optional[bool] = None) -> Iterator[np.ndarray]:
		chunks = self._index_chunks(epoch, batch_size, self.train if shuffle is None else shuffle)
		return self._run(self._images, chunks, epoch)

	def subset(self, indices: np.ndarray, train: Optional[bool] = None) -> "SampleSource":
		return SampleSource(self.images[np.asarray(indices)], self.spec, self.codec, self.seed,
			self.train if train is None else train, self.workers, self.padding, self.dtype)
