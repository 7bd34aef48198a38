from __future__ import annotations
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
from tqdm import tqdm

from src.autodiff import ops
from src.autodiff.tensor import Tape, Tensor, backward
from src.autoencoder.model import AutoEncoder
from src.errors import ConfigError, ContractError, DivergenceError, NonFiniteError
from src.training.adam import AdamState, adam_step
from src.wavelet.haar import active_fraction

log = logging.getLogger(__name__)

@dataclass(frozen=True)
class AETrainConfig:
	epochs: int = 10
	batch_size: int = 64
	lambda_sparse: float = 1e-3

	def __post_init__(self):
		if self.epochs <= 0:
			raise ConfigError(f"autoencoder_train.epochs must be > 0, got {self.epochs}")
		if self.lambda_sparse < 0:
			raise ConfigError(f"autoencoder_train.lambda_sparse must be >= 0, got {self.lambda_sparse}")

@dataclass
class AETrainResult:
	model: AutoEncoder
	records: List[Dict[str, float]] = field(default_factory=list)
	last_checkpoint: Optional[str] = None

# Per-pixel reconstruction MSE plus lambda * per-coefficient mean |E(x)|, averaged over the batch
def ae_loss(model: AutoEncoder, x: Tensor, lambda_sparse: float) -> Tuple[Tensor, Dict[str, Tensor]]:
	code = model.encoder(x)
	recon = model.decoder(code)
	mse = ops.mean(ops.square(recon - x))
	l1 = ops.mean(ops.abs_(code))
	loss = mse + l1 * lambda_sparse if lambda_sparse > 0 else mse
	return loss, {"mse": mse, "l1": l1, "code": code}

def train_autoencoder(
	model: AutoEncoder,
	source,
	cfg: AETrainConfig,
	optim: AdamState,
	start_epoch: int = 0,
	on_epoch: Optional[Callable[[Dict[str, float]], None]] = None,
	on_checkpoint: Optional[Callable[[int, AdamState, bool], Optional[str]]] = None,
	progress: bool = False,
) -> AETrainResult:
	"""
	source must provide len() and image_batches(epoch, batch_size) yielding normalized [B,1,n,n] arrays.
	Epochs are counted from start_epoch so a resumed run continues the step count and the log.
	"""
	if len(source) == 0:
		raise ContractError("train_autoencoder: empty dataset")
	if not (1 <= cfg.batch_size <= len(source)):
		raise ConfigError(f"batch_size must be in [1, {len(source)}], got {cfg.batch_size}")

	params = model.parameters()
	result = AETrainResult(model=model)
	model.train()

	for epoch in range(start_epoch, cfg.epochs):
		optim.lr = optim.config.lr_at(epoch)
		sums = {"loss": 0.0, "mse": 0.0, "l1": 0.0, "active": 0.0}
		batches = 0
		bar = tqdm(source.image_batches(epoch, cfg.batch_size), desc=f"ae epoch {epoch + 1}/{cfg.epochs}",
			disable=not progress, leave=False)
		for xb in bar:
			try:
				with Tape() as tape:
					loss, parts = ae_loss(model, Tensor(xb), cfg.lambda_sparse)
			except NonFiniteError as e:
				raise DivergenceError(f"autoencoder diverged at epoch {epoch + 1}, step {optim.step}: {e}",
					last_checkpoint=result.last_checkpoint) from e
			if not math.isfinite(loss.item()):
				raise DivergenceError(
					f"autoencoder loss became non-finite at epoch {epoch + 1}, step {optim.step}",
					last_checkpoint=result.last_checkpoint,
				)
			grads = backward(tape, loss, params)
			adam_step(params, grads, optim)
			sums["loss"] += loss.item()
			sums["mse"] += parts["mse"].item()
			sums["l1"] += parts["l1"].item()
			sums["active"] += active_fraction(parts["code"].data)
			batches += 1

		rec = {k: v / max(batches, 1) for k, v in sums.items()}
		rec = {"epoch": epoch + 1, "step": optim.step, **rec}
		result.records.append(rec)
		log.info("ae epoch %d: loss=%.6f mse=%.6f l1=%.6f", epoch + 1, rec["loss"], rec["mse"], rec["l1"])
		if on_epoch is not None:
			on_epoch(rec)
		if on_checkpoint is not None:
			path = on_checkpoint(epoch + 1, optim, epoch + 1 == cfg.epochs)
			if path:
				result.last_checkpoint = path

	return result

def evaluate_reconstruction(model: AutoEncoder, source, mean_image: np.ndarray, batch_size: int = 64) -> Dict[str, float]:
	"""
	Eval-mode reconstruction MSE on normalized pixels next to the MSE of always predicting mean_image,
	plus the mean active fraction of the representation.
	"""
	was_training = model.training
	model.eval()
	sse = base = active = 0.0
	count = pixels = 0
	for xb in source.image_batches(0, min(batch_size, len(source)), shuffle=False):
		code = model.encoder(Tensor(xb))
		recon = model.decoder(code).data
		sse += float(np.sum((recon - xb) ** 2))
		base += float(np.sum((xb - mean_image) ** 2))
		active += active_fraction(code.data) * xb.shape[0]
		count += xb.shape[0]
		pixels += xb.size
	model.train(was_training)
	return {"mse": sse / pixels, "baseline_mse": base / pixels, "active_fraction": active / count}
