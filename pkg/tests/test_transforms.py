# tests/test_transforms.py
import numpy as np
import pytest

from src.data.transforms import (DATASET_SPECS, RESIZE_METHODS, AugmentationSpec, augment, center_crop, dataset_spec, denormalize,
	normalize, preprocess, resize)
from src.errors import ConfigError, DimensionError
from tests.helpers import blob_images

def test_dataset_presets():
	mnist = dataset_spec("mnist")
	assert (mnist.resize, mnist.mean, mnist.std, mnist.pad_fraction, mnist.p) == (32, 0.1307, 0.3081, 0.5, 0.25)
	assert mnist.translation == (0.025, 0.025) and mnist.scaling == (0.9, 1.2)
	assert mnist.rotation is None and mnist.blur_sigma is None and mnist.gamma is None and not mnist.hflip
	assert dataset_spec("emnist") == mnist

	kmnist = dataset_spec("kmnist")
	assert kmnist.p == 0.5 and kmnist.pad_fraction == 0.5 and kmnist.blur_sigma is None

	fashion = dataset_spec("fashion_mnist")
	assert fashion.pad_fraction == 0.25 and fashion.rotation == (1.0, 2.5)
	assert fashion.translation == (0.0125, 0.025) and fashion.scaling == (0.95, 1.1)

	celeba = dataset_spec("celeba")
	assert (celeba.resize, celeba.center_crop, celeba.mean, celeba.std, celeba.pad_fraction) == (64, True, 0.5, 0.5, 0.0)
	assert celeba.p == 0.5 and celeba.hflip and celeba.blur_kernel == 3
	assert celeba.blur_sigma == (0.5, 1.5) and celeba.gamma == (0.85, 1.125)

	assert set(DATASET_SPECS) == {"mnist", "emnist", "kmnist", "fashion_mnist", "celeba"}
	with pytest.raises(ConfigError):
		dataset_spec("svhn")

def test_spec_validation():
	for bad in ({"p": 1.5}, {"std": 0.0}, {"rotation": (3.0, 1.0)}, {"translation": (0.6, 0.1)}, {"blur_kernel": 4},
			{"gamma": (0.0, 1.0)}, {"pad_fraction": -0.5}, {"pad_mode": "half"}, {"pad_placement": "top"},
			{"resize_method": "area"}):
		with pytest.raises(ConfigError):
			AugmentationSpec(**bad)

def test_resize_and_crop():
	x = np.full((28, 28), 0.4)
	assert np.allclose(resize(x, 32), 0.4, atol=1e-6)
	assert resize(x, 28) is not x and np.array_equal(resize(x, 28), x)
	assert resize(np.zeros((3, 28, 28)), 32).shape == (3, 32, 32)

	tall = np.arange(6 * 4, dtype=np.float64).reshape(6, 4)
	assert np.array_equal(center_crop(tall), tall[1:5])
	assert preprocess(np.ones((70, 64)), dataset_spec("celeba")).shape == (64, 64)

def test_resize_methods():
	small = np.array([[0.0, 1.0], [0.5, 0.25]])
	assert np.array_equal(resize(small, 4, "nearest"), np.kron(small, np.ones((2, 2))))
	flat = np.full((28, 28), 0.4)
	for method in RESIZE_METHODS:
		assert np.allclose(resize(flat, 32, method), 0.4, atol=1e-5), method
	with pytest.raises(ConfigError):
		resize(flat, 32, "area")

	x = blob_images(1, 28, 2)[0]
	spec = AugmentationSpec(resize=32, resize_method="nearest")
	assert np.array_equal(preprocess(x, spec), resize(x, 32, "nearest"))
	assert not np.array_equal(preprocess(x, spec), preprocess(x, AugmentationSpec(resize=32)))
	assert spec.disabled().resize_method == "nearest"

def test_normalize_round_trip():
	x = np.random.default_rng(0).uniform(0.0, 1.0, size=(4, 4))
	assert np.allclose(denormalize(normalize(x, 0.1307, 0.3081), 0.1307, 0.3081), x, atol=1e-15)
	assert normalize(np.array([0.1307]), 0.1307, 0.3081)[0] == 0.0

def test_augment_is_seeded():
	x = blob_images(1, 32, 1)[0]
	spec = dataset_spec("mnist")
	a = augment(x, spec, np.random.default_rng([5, 0, 3]))
	b = augment(x, spec, np.random.default_rng([5, 0, 3]))
	assert np.array_equal(a, b)
	outs = [augment(x, spec, np.random.default_rng([5, e, 3])) for e in range(30)]
	assert any(not np.array_equal(o, x) for o in outs)

	with pytest.raises(DimensionError):
		augment(np.zeros((28, 28)), spec, np.random.default_rng(0))

def test_augment_edge_probabilities():
	x = blob_images(1, 16, 2)[0]
	off = AugmentationSpec(resize=16, p=0.0, hflip=True, rotation=(1.0, 2.0), translation=(0.1, 0.1), scaling=(0.9, 1.1))
	assert np.array_equal(augment(x, off, np.random.default_rng(0)), x)

	flip = AugmentationSpec(resize=16, p=1.0, hflip=True)
	once = augment(x, flip, np.random.default_rng(1))
	assert np.array_equal(once, x[:, ::-1])
	assert np.array_equal(augment(once, flip, np.random.default_rng(2)), x)

	gamma = AugmentationSpec(resize=16, p=1.0, gamma=(1.0, 1.0))
	assert np.allclose(augment(x, gamma, np.random.default_rng(3)), x)

	disabled = dataset_spec("celeba").disabled()
	assert disabled.p == 0.0 and disabled.resize == 64 and disabled.mean == 0.5

if __name__ == "__main__":
	test_dataset_presets()
	test_spec_validation()
	test_resize_and_crop()
	test_resize_methods()
	test_normalize_round_trip()
	test_augment_is_seeded()
	test_augment_edge_probabilities()
	print("OK: transforms tests passed")
