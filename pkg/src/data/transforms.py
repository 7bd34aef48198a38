from __future__ import annotations
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from PIL import Image
from scipy import ndimage

from src.errors import ConfigError, DimensionError
from src.fourier.dft import PaddingSpec

Range = Optional[Tuple[float, float]]

RESIZE_METHODS = {
	"nearest": Image.Resampling.NEAREST,
	"box": Image.Resampling.BOX,
	"bilinear": Image.Resampling.BILINEAR,
	"bicubic": Image.Resampling.BICUBIC,
	"lanczos": Image.Resampling.LANCZOS,
}

@dataclass(frozen=True)
class AugmentationSpec:
	resize: int = 32
	resize_method: str = "bilinear"
	center_crop: bool = False
	mean: float = 0.1307
	std: float = 0.3081
	pad_fraction: float = 0.5
	pad_mode: str = "total"         # "total" | "per_side"
	pad_placement: str = "center"   # "center" | "corner"
	p: float = 0.25                 # Bernoulli firing probability of every enabled transform
	hflip: bool = False
	rotation: Range = None          # degrees (lo, hi); the sign is drawn uniformly
	translation: Range = None       # max shift as a fraction of (width, height)
	scaling: Range = None
	blur_sigma: Range = None
	blur_kernel: int = 3
	gamma: Range = None

	def __post_init__(self):
		if self.resize <= 0:
			raise ConfigError(f"augmentation.resize must be > 0, got {self.resize}")
		if self.std <= 0:
			raise ConfigError(f"augmentation.std must be > 0, got {self.std}")
		if self.pad_fraction < 0:
			raise ConfigError(f"augmentation.pad_fraction must be >= 0, got {self.pad_fraction}")
		if self.pad_mode not in ("total", "per_side"):
			raise ConfigError(f"augmentation.pad_mode must be total or per_side, got {self.pad_mode!r}")
		if self.pad_placement not in ("center", "corner"):
			raise ConfigError(f"augmentation.pad_placement must be center or corner, got {self.pad_placement!r}")
		if self.resize_method not in RESIZE_METHODS:
			raise ConfigError(f"augmentation.resize_method must be one of {', '.join(RESIZE_METHODS)}, got {self.resize_method!r}")
		if not (0.0 <= self.p <= 1.0):
			raise ConfigError(f"augmentation.p must be in [0, 1], got {self.p}")
		for name in ("rotation", "scaling", "blur_sigma", "gamma"):
			r = getattr(self, name)
			if r is not None and (len(r) != 2 or r[0] > r[1]):
				raise ConfigError(f"augmentation.{name} must be an ordered pair (lo, hi), got {r}")
		if self.scaling is not None and self.scaling[0] <= 0:
			raise ConfigError("augmentation.scaling must be positive")
		if self.gamma is not None and self.gamma[0] <= 0:
			raise ConfigError("augmentation.gamma must be positive")
		if self.blur_sigma is not None and self.blur_sigma[0] <= 0:
			raise ConfigError("augmentation.blur_sigma must be positive")
		if self.translation is not None and (len(self.translation) != 2 or min(self.translation) < 0 or max(self.translation) >= 0.5):
			raise ConfigError(f"augmentation.translation must be two fractions in [0, 0.5), got {self.translation}")
		if self.blur_kernel < 1 or self.blur_kernel % 2 == 0:
			raise ConfigError(f"augmentation.blur_kernel must be a positive odd integer, got {self.blur_kernel}")

	@property
	def padding(self) -> PaddingSpec:
		return PaddingSpec(self.pad_fraction, mode=self.pad_mode, placement=self.pad_placement)

	def disabled(self) -> "AugmentationSpec":
		return AugmentationSpec(resize=self.resize, resize_method=self.resize_method, center_crop=self.center_crop,
			mean=self.mean, std=self.std, pad_fraction=self.pad_fraction, pad_mode=self.pad_mode,
			pad_placement=self.pad_placement, p=0.0)

# ---------- deterministic preprocessing ----------

def center_crop(x: np.ndarray) -> np.ndarray:
	h, w = x.shape[-2:]
	s = min(h, w)
	r0, c0 = (h - s) // 2, (w - s) // 2
	return x[..., r0:r0 + s, c0:c0 + s]

def resize(x: np.ndarray, target: int, method: str = "bilinear") -> np.ndarray:
	x = np.asarray(x, dtype=np.float64)
	if x.shape[-2:] == (target, target):
		return x.copy()
	if x.ndim != 2:
		return np.stack([resize(xi, target, method) for xi in x.reshape((-1,) + x.shape[-2:])]).reshape(x.shape[:-2] + (target, target))
	if method not in RESIZE_METHODS:
		raise ConfigError(f"unknown resize method {method!r}")
	img = Image.fromarray(x.astype(np.float32))
	return np.asarray(img.resize((target, target), RESIZE_METHODS[method]), dtype=np.float64)

def preprocess(x: np.ndarray, spec: AugmentationSpec) -> np.ndarray:
	if spec.center_crop:
		x = center_crop(x)
	return resize(x, spec.resize, spec.resize_method)

def normalize(x, mean: float, std: float):
	return (x - mean) / std

def denormalize(x, mean: float, std: float):
	return x * std + mean

# ---------- random augmentation on [0, 1] images ----------

def _hflip(x: np.ndarray, rng: np.random.Generator, spec: AugmentationSpec) -> np.ndarray:
	return x[:, ::-1].copy()

def _rotate(x: np.ndarray, rng: np.random.Generator, spec: AugmentationSpec) -> np.ndarray:
	lo, hi = spec.rotation
	angle = rng.uniform(lo, hi) * rng.choice((-1.0, 1.0))
	return ndimage.rotate(x, angle, reshape=False, order=1, mode="constant", cval=0.0)

def _translate(x: np.ndarray, rng: np.random.Generator, spec: AugmentationSpec) -> np.ndarray:
	h, w = x.shape
	tx, ty = spec.translation
	dx = rng.uniform(-tx * w, tx * w)
	dy = rng.uniform(-ty * h, ty * h)
	return ndimage.shift(x, (dy, dx), order=1, mode="constant", cval=0.0)

# zoom by r about the image centre, output keeps its size
def _scale(x: np.ndarray, rng: np.random.Generator, spec: AugmentationSpec) -> np.ndarray:
	r = rng.uniform(*spec.scaling)
	c = (np.array(x.shape, dtype=np.float64) - 1.0) / 2.0
	return ndimage.affine_transform(x, np.array([1.0 / r, 1.0 / r]), offset=c - c / r, order=1, mode="constant", cval=0.0)

def _blur(x: np.ndarray, rng: np.random.Generator, spec: AugmentationSpec) -> np.ndarray:
	sigma = rng.uniform(*spec.blur_sigma)
	radius = (spec.blur_kernel - 1) / 2.0
	return ndimage.gaussian_filter(x, sigma, mode="nearest", truncate=radius / sigma)

def _gamma(x: np.ndarray, rng: np.random.Generator, spec: AugmentationSpec) -> np.ndarray:
	g = rng.uniform(*spec.gamma)
	return np.clip(x, 0.0, 1.0) ** g

def _enabled(spec: AugmentationSpec):
	out = []
	if spec.hflip:
		out.append(_hflip)
	if spec.rotation is not None:
		out.append(_rotate)
	if spec.translation is not None:
		out.append(_translate)
	if spec.scaling is not None:
		out.append(_scale)
	if spec.blur_sigma is not None:
		out.append(_blur)
	if spec.gamma is not None:
		out.append(_gamma)
	return out

def augment(x: np.ndarray, spec: AugmentationSpec, rng: np.random.Generator) -> np.ndarray:
	"""
	Applies every enabled transform independently with probability spec.p.
	Order: flip, rotation, translation, scaling, blur, gamma. One coin is drawn per enabled transform
	even when p is 0 or 1, so the random stream does not depend on the outcome of earlier coins.
	"""
	x = np.asarray(x, dtype=np.float64)
	if x.shape != (spec.resize, spec.resize):
		raise DimensionError(f"augment: image {x.shape} does not match augmentation size {spec.resize}x{spec.resize}")
	for fn in _enabled(spec):
		if rng.random() < spec.p:
			x = fn(x, rng, spec)
	return x

# ---------- built-in dataset presets ----------

_MNIST_LIKE = dict(resize=32, center_crop=False, mean=0.1307, std=0.3081)

DATASET_SPECS = {
	"mnist": AugmentationSpec(**_MNIST_LIKE, pad_fraction=0.5, p=0.25, translation=(0.025, 0.025), scaling=(0.9, 1.2)),
	"emnist": AugmentationSpec(**_MNIST_LIKE, pad_fraction=0.5, p=0.25, translation=(0.025, 0.025), scaling=(0.9, 1.2)),
	# blur and gamma are listed as 0.0 for KMNIST, read as disabled
	"kmnist": AugmentationSpec(**_MNIST_LIKE, pad_fraction=0.5, p=0.5, translation=(0.025, 0.025), scaling=(0.9, 1.2)),
	"fashion_mnist": AugmentationSpec(**_MNIST_LIKE, pad_fraction=0.25, p=0.25, rotation=(1.0, 2.5),
		translation=(0.0125, 0.025), scaling=(0.95, 1.1)),
	"celeba": AugmentationSpec(resize=64, center_crop=True, mean=0.5, std=0.5, pad_fraction=0.0, p=0.5, hflip=True,
		translation=(0.025, 0.025), scaling=(0.9, 1.2), blur_sigma=(0.5, 1.5), blur_kernel=3, gamma=(0.85, 1.125)),
}

def dataset_spec(name: str) -> AugmentationSpec:
	try:
		return DATASET_SPECS[name]
	except KeyError:
		raise ConfigError(f"unknown dataset {name!r}; known: {', '.join(sorted(DATASET_SPECS))}") from None
