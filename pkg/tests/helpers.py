# tests/helpers.py
import json
import os
from typing import Callable, Dict, List, Sequence

import numpy as np

from src.autodiff.tensor import Tape, Tensor, backward
from src.data.idx import write_idx

def gradcheck(fn: Callable[..., Tensor], arrays: Sequence[np.ndarray], eps: float = 1e-5, tol: float = 1e-4) -> List[float]:
	"""
	Central finite differences against the tape gradient of the scalar fn(*tensors), for every input entry.
	Returns the relative error per input; asserts each is <= tol.
	"""
	arrays = [np.array(a, dtype=np.float64) for a in arrays]
	xs = [Tensor(a.copy()) for a in arrays]
	with Tape() as tape:
		for x in xs:
			tape.watch(x)
		loss = fn(*xs)
	backward(tape, loss)

	errors = []
	for k, a in enumerate(arrays):
		analytic = xs[k].grad
		numeric = np.zeros_like(a)
		for idx in np.ndindex(a.shape):
			plus = [b.copy() for b in arrays]
			minus = [b.copy() for b in arrays]
			plus[k][idx] += eps
			minus[k][idx] -= eps
			fp = fn(*[Tensor(b) for b in plus]).item()
			fm = fn(*[Tensor(b) for b in minus]).item()
			numeric[idx] = (fp - fm) / (2.0 * eps)
		scale = max(np.linalg.norm(numeric), np.linalg.norm(analytic), 1e-8)
		err = float(np.linalg.norm(analytic - numeric) / scale)
		assert err <= tol, f"input {k}: relative gradient error {err:.3e} > {tol}"
		errors.append(err)
	return errors

# Values bounded away from 0 so no rectifier kink sits inside the finite-difference stencil
def away_from_zero(rng: np.random.Generator, shape, margin: float = 0.05) -> np.ndarray:
	v = rng.uniform(margin, 1.0, size=shape)
	return v * rng.choice((-1.0, 1.0), size=shape)

def blob_images(count: int, n: int = 28, seed: int = 0) -> np.ndarray:
	"""Digit-like [count, n, n] images in [0, 1]: a few soft strokes on a dark background."""
	rng = np.random.default_rng(seed)
	yy, xx = np.mgrid[0:n, 0:n].astype(np.float64)
	out = np.zeros((count, n, n))
	for i in range(count):
		img = np.zeros((n, n))
		for _ in range(rng.integers(2, 5)):
			cy, cx = rng.uniform(0.3 * n, 0.7 * n, size=2)
			sy, sx = rng.uniform(0.05 * n, 0.15 * n, size=2)
			img += np.exp(-((yy - cy) ** 2 / (2 * sy * sy) + (xx - cx) ** 2 / (2 * sx * sx)))
		out[i] = np.clip(img / img.max(), 0.0, 1.0)
	return out

def piecewise_constant(n: int, blocks: int, seed: int = 0) -> np.ndarray:
	rng = np.random.default_rng(seed)
	coarse = rng.uniform(0.0, 1.0, size=(blocks, blocks))
	return np.kron(coarse, np.ones((n // blocks, n // blocks)))

def brute_force_dft(x: np.ndarray) -> np.ndarray:
	H, W = x.shape
	out = np.zeros((H, W), dtype=np.complex128)
	for u in range(H):
		for v in range(W):
			acc = 0j
			for r in range(H):
				for c in range(W):
					acc += x[r, c] * np.exp(-2j * np.pi * (u * r / H + v * c / W))
			out[u, v] = acc
	return out

def write_mnist_fixture(root: str, train: int = 40, test: int = 10, seed: int = 0) -> str:
	"""MNIST-named IDX files of synthetic 28x28 images."""
	os.makedirs(root, exist_ok=True)
	write_idx(os.path.join(root, "train-images-idx3-ubyte"), blob_images(train, 28, seed))
	write_idx(os.path.join(root, "t10k-images-idx3-ubyte"), blob_images(test, 28, seed + 1))
	return root

def smoke_config(data_root: str, out_dir: str, **sections: Dict) -> Dict:
	"""A config small enough for a few seconds of training; section keys override the defaults."""
	cfg = {
		"run_name": "smoke_test",
		"run": {"seed": 0, "output_dir": out_dir, "workers": 1, "progress": False},
		"data": {"dataset": "mnist", "root": data_root, "train_limit": 40, "test_limit": 10, "val_fraction": 0.1},
		"encoder": {"kind": "packet"},
		"autoencoder": {"widths": [2, 4], "N": 4},
		"autoencoder_train": {"epochs": 2, "batch_size": 8},
		"prdad": {"mlp_hidden": [16, 16, 16], "enhancement_blocks": 1},
		"train": {"epochs": 2, "batch_size": 8},
		"checkpoint": {"every": 1},
		"eval": {"batch_size": 5, "grid_count": 4},
		"baseline": {"iters": 20, "limit": 3},
	}
	for key, val in sections.items():
		if isinstance(val, dict) and isinstance(cfg.get(key), dict):
			cfg[key] = {**cfg[key], **val}
		else:
			cfg[key] = val
	return cfg

def write_config(path: str, cfg: Dict) -> str:
	with open(path, "w", encoding="utf-8") as f:
		json.dump(cfg, f, indent=2)
	return path
