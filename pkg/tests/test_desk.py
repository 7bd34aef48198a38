# tests/test_desk.py
# Desk-scale training runs on real MNIST; set PRDAD_DATA_DIR to the folder holding the IDX files.
# Each takes minutes to tens of minutes on one CPU.
import os

import numpy as np
import pytest

from src.autoencoder.model import AutoEncoder, EncoderConfig
from src.autoencoder.train import AETrainConfig, evaluate_reconstruction, train_autoencoder
from src.classical.projections import Constraints, error_reduction, random_phase_init
from src.data.datasets import load_split
from src.data.pipeline import SampleSource
from src.data.transforms import dataset_spec, denormalize, preprocess
from src.fourier.dft import fft2, support_mask
from src.metrics.report import evaluate, score_image
from src.prdad.codecs import PacketCodec
from src.prdad.model import PRDAD, PRDADConfig
from src.training.adam import AdamState
from src.training.losses import LossWeights
from src.training.trainer import TrainConfig, predictor, train_prdad

DATA_DIR = os.environ.get("PRDAD_DATA_DIR")
needs_data = pytest.mark.skipif(not DATA_DIR, reason="PRDAD_DATA_DIR is not set")

def _mnist(split: str, limit: int) -> np.ndarray:
	spec = dataset_spec("mnist")
	return np.stack([preprocess(x, spec) for x in load_split("mnist", DATA_DIR, split, limit)])

@pytest.mark.slow
@needs_data
def test_autoencoder_beats_mean_image():
	spec = dataset_spec("mnist")
	train = SampleSource(_mnist("train", 10_000), spec, seed=0)
	test = SampleSource(_mnist("test", 1_000), spec, seed=0, train=False)
	model = AutoEncoder(EncoderConfig(), seed=0)
	train_autoencoder(model, train, AETrainConfig(), AdamState())
	mean_img = (train.images.mean(axis=0) - spec.mean) / spec.std
	rr = evaluate_reconstruction(model, test, mean_img, batch_size=64)
	assert rr["mse"] * 5.0 <= rr["baseline_mse"], rr
	assert rr["active_fraction"] <= 0.25, rr

@pytest.mark.slow
@needs_data
def test_packet_prdad_beats_error_reduction():
	spec = dataset_spec("mnist")
	codec = PacketCodec(32)
	train = SampleSource(_mnist("train", 10_000), spec, codec=codec, seed=0)
	test_imgs = _mnist("test", 200)
	test = SampleSource(test_imgs, spec, seed=0, train=False)
	model = PRDAD(PRDADConfig(m=train.m, n=32, repr_shape=codec.layout), codec, seed=0)
	train_prdad(model, train, LossWeights(), AdamState(), TrainConfig(epochs=20, batch_size=32, validate=False))

	model.eval()
	report = evaluate(predictor(model), test.batches(0, 50), lambda a: denormalize(a, spec.mean, spec.std))
	agg = report.aggregates()
	assert agg["mse"] <= 0.03 and agg["ssim"] >= 0.75, agg

	pad = spec.padding
	mask = support_mask(32, pad)
	off = pad.offset(32)
	er_ssim = []
	for i, x in enumerate(test_imgs):
		padded = np.zeros(mask.shape)
		padded[mask] = x.reshape(-1)
		omega = np.abs(fft2(padded))
		state = error_reduction(omega, random_phase_init(omega, seed=[0, i]), 500, Constraints(support=mask))
		er_ssim.append(score_image(i, x, state.x[off:off + 32, off:off + 32]).ssim)
	assert agg["ssim"] >= float(np.mean(er_ssim)) + 0.2, (agg["ssim"], float(np.mean(er_ssim)))

if __name__ == "__main__":
	if DATA_DIR:
		test_autoencoder_beats_mean_image()
		test_packet_prdad_beats_error_reduction()
		print("OK: desk tests passed")
	else:
		print("skipped: PRDAD_DATA_DIR is not set")
