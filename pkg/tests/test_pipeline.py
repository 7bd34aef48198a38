# tests/test_pipeline.py
import numpy as np
import pytest

from src.data.pipeline import SampleSource, magnitudes, make_sample
from src.data.transforms import AugmentationSpec, dataset_spec, normalize
from src.errors import ConfigError, DimensionError
from src.fourier.dft import PaddingSpec
from src.prdad.codecs import PacketCodec
from tests.helpers import blob_images

def test_make_sample():
	x = blob_images(1, 8, 0)[0]
	s = make_sample(x, 0.5, PacketCodec(8))
	assert s.omega.shape == (12, 12) and np.all(s.omega >= 0)
	assert s.omega[0, 0] == pytest.approx(np.sum(x))
	assert s.target.shape == (1, 8, 8)
	assert np.sum(s.target ** 2) == pytest.approx(np.sum(x ** 2))
	assert make_sample(x, 0.0).target is None
	assert np.allclose(magnitudes(x[None], 0.5)[0], s.omega)
	with pytest.raises(DimensionError):
		make_sample(np.zeros((2, 8, 8)), 0.5)

def _source(workers: int, train: bool = True) -> SampleSource:
	spec = AugmentationSpec(resize=32, pad_fraction=0.5, p=0.5, translation=(0.025, 0.025), scaling=(0.9, 1.2))
	return SampleSource(blob_images(20, 32, 1), spec, codec=PacketCodec(32), seed=11, train=train, workers=workers)

def test_stream_is_identical_across_worker_counts():
	one = list(_source(1).batches(epoch=2, batch_size=6))
	two = list(_source(2).batches(epoch=2, batch_size=6))
	assert [len(b) for b in one] == [6, 6, 6, 2]
	for a, b in zip(one, two):
		assert np.array_equal(a.index, b.index)
		assert np.array_equal(a.x, b.x) and np.array_equal(a.omega, b.omega) and np.array_equal(a.target, b.target)

def test_samples_do_not_depend_on_batch_size():
	src = _source(1)
	by_index = {}
	for b in src.batches(epoch=1, batch_size=7):
		for k, i in enumerate(b.index):
			by_index[int(i)] = b.x[k]
	for b in src.batches(epoch=1, batch_size=3):
		for k, i in enumerate(b.index):
			assert np.array_equal(by_index[int(i)], b.x[k])

def test_epoch_order_and_eval_stream():
	src = _source(1)
	first = np.concatenate([b.index for b in src.batches(0, 5)])
	second = np.concatenate([b.index for b in src.batches(1, 5)])
	assert sorted(first) == list(range(20)) and not np.array_equal(first, second)

	ev = _source(1, train=False)
	b = next(ev.batches(0, 4))
	assert np.array_equal(b.index, [0, 1, 2, 3])
	assert np.array_equal(b.x[:, 0], normalize(ev.images[:4], ev.spec.mean, ev.spec.std))
	assert b.omega.shape == (4, 48, 48) and b.target.shape == (4, 1, 32, 32)

def test_source_geometry_and_subset():
	src = _source(1)
	assert (src.n, src.m, len(src)) == (32, 48, 20)
	assert SampleSource(blob_images(2, 32), dataset_spec("fashion_mnist")).m == 40
	assert SampleSource(blob_images(2, 32), dataset_spec("mnist"), padding=PaddingSpec(0.5, mode="per_side")).m == 64

	sub = src.subset(np.array([3, 5]), train=False)
	assert len(sub) == 2 and not sub.train and sub.codec is src.codec
	assert np.array_equal(sub.images[1], src.images[5])
	imgs = list(sub.image_batches(0, 2))
	assert imgs[0].shape == (2, 1, 32, 32)

	with pytest.raises(ConfigError):
		list(src.batches(0, 0))
	with pytest.raises(ConfigError):
		_source(0)
	with pytest.raises(DimensionError):
		SampleSource(blob_images(2, 28), dataset_spec("mnist"))

if __name__ == "__main__":
	test_make_sample()
	test_stream_is_identical_across_worker_counts()
	test_samples_do_not_depend_on_batch_size()
	test_epoch_order_and_eval_stream()
	test_source_geometry_and_subset()
	print("OK: pipeline tests passed")
