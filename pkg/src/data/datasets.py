from __future__ import annotations
import logging
import os
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np

from src.data.idx import load_idx, load_pgm_folder
from src.errors import ConfigError

log = logging.getLogger(__name__)

@dataclass(frozen=True)
class DatasetInfo:
	name: str
	train: str
	test: str
	fmt: str = "idx"          # "idx" | "pgm"
	transposed: bool = False   # EMNIST stores every image transposed

_MNIST_FILES = ("train-images-idx3-ubyte", "t10k-images-idx3-ubyte")

DATASETS: Dict[str, DatasetInfo] = {
	"mnist": DatasetInfo("mnist", *_MNIST_FILES),
	"fashion_mnist": DatasetInfo("fashion_mnist", *_MNIST_FILES),
	"kmnist": DatasetInfo("kmnist", *_MNIST_FILES),
	"emnist": DatasetInfo("emnist", "emnist-balanced-train-images-idx3-ubyte", "emnist-balanced-test-images-idx3-ubyte", transposed=True),
	"celeba": DatasetInfo("celeba", "train", "test", fmt="pgm"),
}

def dataset_info(name: str) -> DatasetInfo:
	if name not in DATASETS:
		raise ConfigError(f"unknown dataset {name!r}; known: {', '.join(sorted(DATASETS))}")
	return DATASETS[name]

def _resolve(root: str, stem: str) -> str:
	for cand in (stem, stem + ".gz"):
		p = os.path.join(root, cand)
		if os.path.exists(p):
			return p
	raise FileNotFoundError(f"dataset file {stem}[.gz] not found under {root}")

def load_split(name: str, root: str, split: str, limit: Optional[int] = None) -> np.ndarray:
	"""Raw [count, H, W] images in [0, 1] for split 'train' or 'test' of a registered dataset."""
	info = dataset_info(name)
	stem = info.train if split == "train" else info.test
	if info.fmt == "pgm":
		images = load_pgm_folder(os.path.join(root, stem), limit)
	else:
		images = load_idx(_resolve(root, stem), limit=limit, transpose=info.transposed)
	log.info("%s/%s: loaded %d images of %dx%d", name, split, *images.shape)
	return images

# Validation indices are carved from the training set with a fixed seed
def train_val_split(count: int, val_fraction: float = 0.1, seed: int = 0) -> Tuple[np.ndarray, np.ndarray]:
	if not (0.0 <= val_fraction < 1.0):
		raise ConfigError(f"data.val_fraction must be in [0, 1), got {val_fraction}")
	order = np.random.default_rng(seed).permutation(count)
	n_val = int(round(count * val_fraction))
	return np.sort(order[n_val:]), np.sort(order[:n_val])
