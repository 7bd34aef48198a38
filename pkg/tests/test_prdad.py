# tests/test_prdad.py
import numpy as np
import pytest

from src.autodiff import ops
from src.autodiff.tensor import Tape, Tensor, backward
from src.autoencoder.model import AutoEncoder, EncoderConfig
from src.errors import ConfigError, DimensionError
from src.prdad.codecs import EncoderSpec, HaarCodec, PacketCodec, TrainedCodec, make_codec
from src.prdad.model import PRDAD, PRDADConfig, build_enhancement, build_mlp, set_decoder_finetune
from src.training.losses import rotate_pi
from src.wavelet.haar import packet_analysis, packet_forward

def _packet_model(n: int = 8, m: int = 12, blocks: int = 1, seed: int = 0) -> PRDAD:
	cfg = PRDADConfig(m=m, n=n, repr_shape=(1, n, n), mlp_hidden=(6, 6, 6), enhancement_blocks=blocks)
	return PRDAD(cfg, PacketCodec(n), seed=seed)

def _trained_model(seed: int = 0) -> PRDAD:
	ae = AutoEncoder(EncoderConfig(n=8, widths=(2, 2), N=3), seed=seed)
	cfg = PRDADConfig(m=12, n=8, repr_shape=(3, 2, 2), mlp_hidden=(6, 6, 6), enhancement_blocks=1)
	return PRDAD(cfg, TrainedCodec(ae), seed=seed)

def test_mlp_dims_and_negative_outputs():
	cfg = PRDADConfig(m=48, n=32, repr_shape=(128, 8, 8))
	assert cfg.mlp_dims == (2304, 2048, 4096, 4096, 8192)

	small = PRDADConfig(m=12, n=8, repr_shape=(1, 8, 8), mlp_hidden=(5, 7, 9))
	mlp = build_mlp(small, np.random.default_rng(0))
	assert [l.weight.shape for l in mlp] == [(5, 144), (7, 5), (9, 7), (64, 9)]
	out = mlp(Tensor(np.random.default_rng(1).uniform(0, 3, size=(4, 12, 12))))
	assert out.shape == (4, 1, 8, 8)
	assert np.any(out.data < 0)

	zero_a = mlp(Tensor(np.zeros((2, 12, 12)))).data
	zero_b = mlp(Tensor(np.zeros((2, 12, 12)))).data
	assert np.array_equal(zero_a, zero_b) and np.array_equal(zero_a[0], zero_a[1])

def test_enhancement_structure():
	cfg = PRDADConfig(m=12, n=8, repr_shape=(3, 4, 4), mlp_hidden=(4, 4, 4), enhancement_blocks=2)
	enh = build_enhancement(cfg, np.random.default_rng(0))
	convs = [p for n, p in enh.named_parameters() if n.endswith("weight")]
	assert len(convs) == 4 and all(p.shape == (3, 3, 3, 3) for p in convs)
	x = Tensor(np.random.default_rng(1).standard_normal((2, 3, 4, 4)))
	assert enh(x).shape == x.shape

	off = build_enhancement(PRDADConfig(m=12, n=8, repr_shape=(3, 4, 4), mlp_hidden=(4, 4, 4), enhancement_blocks=0),
		np.random.default_rng(0))
	assert off(x) is x

def test_forward_shapes_and_input_contract():
	model = _packet_model(n=32, m=48)
	omega = np.random.default_rng(0).uniform(0, 2, size=(4, 48, 48))
	t_hat, x_hat = model(omega)
	assert t_hat.shape == (4, 1, 32, 32) and x_hat.shape == (4, 1, 32, 32)
	t4, _ = model(omega[:, None])
	assert t4.shape == t_hat.shape

	with pytest.raises(DimensionError):
		model(np.zeros((2, 40, 40)))
	with pytest.raises(ConfigError):
		PRDAD(PRDADConfig(m=12, n=8, repr_shape=(2, 8, 8), mlp_hidden=(4, 4, 4)), PacketCodec(8))

def test_packet_decoder_is_exact():
	model = _packet_model()
	x = np.random.default_rng(2).standard_normal((3, 1, 8, 8))
	t = Tensor(packet_forward(x))
	assert np.max(np.abs(model.decoder(t).data - x)) <= 1e-9

	haar = HaarCodec(8)
	assert np.max(np.abs(haar.decoder(Tensor(haar.encode(x))).data - x)) <= 1e-9

def test_packet_rotation_is_consistent():
	codec = PacketCodec(16, depth=3)
	x = np.random.default_rng(3).standard_normal((2, 1, 16, 16))
	lhs = codec.rotate(Tensor(codec.encode(x))).data
	rhs = codec.encode(rotate_pi(x).data)
	assert np.max(np.abs(lhs - rhs)) <= 1e-10
	assert np.allclose(packet_analysis(x[0, 0], 3).data, codec.encode(x)[0, 0])

def test_magnitude_to_representation_has_no_inverse_fourier():
	model = _packet_model()
	omega = Tensor(np.random.default_rng(4).uniform(0, 2, size=(2, 12, 12)))
	with Tape() as tape:
		tape.watch(omega)
		t_hat = model.represent(omega)
	kinds = set(tape.kinds_between(omega, t_hat))
	assert kinds <= {"reshape", "affine", "prelu", "conv2d", "batchnorm2d"}
	assert {"affine", "prelu", "conv2d"} <= kinds

def test_frozen_decoder_gets_zero_gradients():
	model = _trained_model()
	omega = Tensor(np.random.default_rng(5).uniform(0, 2, size=(2, 12, 12)))
	dec_names = {n for n, _ in model.decoder.named_parameters("decoder.")}

	def grads():
		with Tape() as tape:
			_, x_hat = model(omega)
			loss = ops.mean(ops.square(x_hat))
		return backward(tape, loss, model.parameters())

	g = grads()
	assert dec_names and all(not np.any(g[n]) for n in dec_names)
	assert any(np.any(g[n]) for n in g if n.startswith("mlp."))
	assert not model.decoder.training

	set_decoder_finetune(model, True)
	set_decoder_finetune(model, True)
	g = grads()
	assert any(np.any(g[n]) for n in dec_names)
	assert model.decoder.training

	set_decoder_finetune(model, False)
	g = grads()
	assert all(not np.any(g[n]) for n in dec_names)

def test_model_train_keeps_frozen_decoder_in_eval_mode():
	model = _trained_model()
	model.train()
	assert model.training and model.mlp.training and not model.decoder.training
	model.eval()
	assert not model.enhance.training

def test_eval_forward_is_deterministic():
	model = _trained_model().eval()
	omega = np.random.default_rng(6).uniform(0, 2, size=(2, 12, 12))
	a = model(omega)[1].data
	b = model(omega)[1].data
	assert np.array_equal(a, b)

def test_trained_codec_rotation_flips_each_map():
	codec = _trained_model().codec
	t = np.random.default_rng(7).standard_normal((2, 3, 2, 2))
	assert np.array_equal(codec.rotate(Tensor(t)).data, t[..., ::-1, ::-1])
	with pytest.raises(DimensionError):
		codec.encode(np.zeros((8, 8)))

def test_make_codec():
	assert make_codec(EncoderSpec("packet", depth=2), 8).depth == 2
	assert make_codec(EncoderSpec("haar"), 8).kind == "haar"
	with pytest.raises(ConfigError):
		EncoderSpec("trained")
	with pytest.raises(ConfigError):
		make_codec(EncoderSpec("trained", path="x.ckpt"), 8)
	ae = AutoEncoder(EncoderConfig(n=16, widths=(2, 2), N=2))
	with pytest.raises(ConfigError):
		make_codec(EncoderSpec("trained", path="x.ckpt"), 8, autoencoder=ae)

if __name__ == "__main__":
	test_mlp_dims_and_negative_outputs()
	test_enhancement_structure()
	test_forward_shapes_and_input_contract()
	test_packet_decoder_is_exact()
	test_packet_rotation_is_consistent()
	test_magnitude_to_representation_has_no_inverse_fourier()
	test_frozen_decoder_gets_zero_gradients()
	test_model_train_keeps_frozen_decoder_in_eval_mode()
	test_eval_forward_is_deterministic()
	test_trained_codec_rotation_flips_each_map()
	test_make_codec()
	print("OK: prdad tests passed")
