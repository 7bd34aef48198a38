from __future__ import annotations
import logging
import math
import time
from dataclasses import asdict, dataclass, field
from typing import Callable, Dict, List, Optional

import numpy as np
from tqdm import tqdm

from src.autodiff.tensor import Tape, Tensor, backward
from src.data.transforms import denormalize
from src.errors import ConfigError, ContractError, DivergenceError, NonFiniteError
from src.metrics.report import EvalReport, evaluate
from src.prdad.model import PRDAD, set_decoder_finetune
from src.training.adam import AdamState, adam_step
from src.training.losses import LOSS_NAMES, LossWeights, total_loss

log = logging.getLogger(__name__)

@dataclass(frozen=True)
class TrainConfig:
	epochs: int = 20
	batch_size: int = 32
	validate: bool = True

	def __post_init__(self):
		if self.epochs <= 0:
			raise ConfigError(f"train.epochs must be > 0, got {self.epochs}")
		if self.batch_size <= 0:
			raise ConfigError(f"train.batch_size must be > 0, got {self.batch_size}")

@dataclass
class EpochRecord:
	epoch: int
	step: int
	loss_mse: float
	loss_mag: float
	loss_sparse: float
	loss_encode: float
	total: float
	val_mse: float = float("nan")
	val_mae: float = float("nan")
	val_ssim: float = float("nan")
	val_psnr: float = float("nan")

	def row(self) -> Dict[str, float]:
		return asdict(self)

@dataclass
class TrainResult:
	model: PRDAD
	records: List[EpochRecord] = field(default_factory=list)
	last_checkpoint: Optional[str] = None

def finetune_start(epochs: int, fraction: float) -> int:
	"""First epoch (0-based) with a trainable decoder; == epochs when fine-tuning is off."""
	if fraction <= 0:
		return epochs
	return epochs - max(1, int(math.ceil(fraction * epochs)))

def predictor(model: PRDAD) -> Callable[[object], np.ndarray]:
	dt = np.dtype(model.cfg.dtype)

	def predict(batch) -> np.ndarray:
		return model(Tensor(batch.omega.astype(dt, copy=False)))[1].data
	return predict

def validate(model: PRDAD, source, batch_size: int, progress: bool = False) -> EvalReport:
	spec = source.spec
	was_training = model.training
	model.eval()
	try:
		return evaluate(predictor(model), source.batches(0, min(batch_size, len(source)), shuffle=False),
			lambda a: denormalize(a, spec.mean, spec.std), model_name="validation", progress=progress)
	finally:
		model.train(was_training)

def train_prdad(
	model: PRDAD,
	source,
	weights: LossWeights,
	optim: AdamState,
	cfg: TrainConfig,
	val_source=None,
	start_epoch: int = 0,
	on_epoch: Optional[Callable[[EpochRecord, float], None]] = None,
	on_checkpoint: Optional[Callable[[int, AdamState, bool], Optional[str]]] = None,
	progress: bool = False,
) -> TrainResult:
	"""
	Trains mlp + enhancement (and the decoder in the fine-tuning window) on the four-term loss.
	on_epoch receives the deterministic epoch record and the epoch's wall time separately.
	"""
	if len(source) == 0:
		raise ContractError("train_prdad: empty dataset")
	if not (1 <= cfg.batch_size <= len(source)):
		raise ConfigError(f"train.batch_size must be in [1, {len(source)}], got {cfg.batch_size}")
	if source.codec is None:
		raise ContractError("train_prdad: the sample source needs a codec to produce representation targets")

	params = model.parameters()
	result = TrainResult(model=model)
	ft_epoch = finetune_start(cfg.epochs, model.cfg.decoder_finetune)
	rotate_repr = model.codec.rotate
	dt = np.dtype(model.cfg.dtype)
	model.train()

	for epoch in range(start_epoch, cfg.epochs):
		if epoch >= ft_epoch and not model.decoder_trainable:
			set_decoder_finetune(model, True)
			log.info("epoch %d: decoder fine-tuning enabled", epoch + 1)
		optim.lr = optim.config.lr_at(epoch)
		t0 = time.perf_counter()
		sums = dict.fromkeys(LOSS_NAMES + ("total",), 0.0)
		steps = 0

		bar = tqdm(source.batches(epoch, cfg.batch_size), desc=f"epoch {epoch + 1}/{cfg.epochs}",
			disable=not progress, leave=False)
		for batch in bar:
			batch = batch.astype(dt)
			try:
				with Tape() as tape:
					t_hat, x_hat = model(Tensor(batch.omega))
					loss, parts = total_loss(batch, t_hat, x_hat, weights, rotate_repr, source.padding)
			except NonFiniteError as e:
				raise DivergenceError(f"training diverged at epoch {epoch + 1}, step {optim.step}: {e}",
					last_checkpoint=result.last_checkpoint) from e
			value = loss.item()
			if not math.isfinite(value):
				raise DivergenceError(f"loss became non-finite at epoch {epoch + 1}, step {optim.step}",
					last_checkpoint=result.last_checkpoint)
			grads = backward(tape, loss, params)
			adam_step(params, grads, optim)
			for name in LOSS_NAMES:
				sums[name] += parts[name].item()
			sums["total"] += value
			steps += 1
			if progress:
				bar.set_postfix(loss=f"{value:.4g}")

		rec = EpochRecord(epoch=epoch + 1, step=optim.step, loss_mse=sums["mse"] / steps, loss_mag=sums["mag"] / steps,
			loss_sparse=sums["sparse"] / steps, loss_encode=sums["encode"] / steps, total=sums["total"] / steps)
		if cfg.validate and val_source is not None and len(val_source):
			agg = validate(model, val_source, cfg.batch_size).aggregates()
			rec.val_mse, rec.val_mae, rec.val_ssim, rec.val_psnr = agg["mse"], agg["mae"], agg["ssim"], agg["psnr"]
		wall = time.perf_counter() - t0
		result.records.append(rec)
		log.info("epoch %d: total=%.5f mse=%.5f mag=%.5f sparse=%.5f encode=%.5f val_mse=%.5f val_ssim=%.4f (%.1fs)",
			rec.epoch, rec.total, rec.loss_mse, rec.loss_mag, rec.loss_sparse, rec.loss_encode, rec.val_mse, rec.val_ssim, wall)
		if on_epoch is not None:
			on_epoch(rec, wall)
		if on_checkpoint is not None:
			path = on_checkpoint(epoch + 1, optim, epoch + 1 == cfg.epochs)
			if path:
				result.last_checkpoint = path

	return result
