from __future__ import annotations
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from tqdm import tqdm

from src.metrics.image_metrics import mae, mse, psnr, psnr255, ssim

log = logging.getLogger(__name__)

METRIC_COLUMNS = ("mse", "mae", "ssim", "psnr", "psnr255")

@dataclass(frozen=True)
class ImageScore:
	index: int
	mse: float
	mae: float
	ssim: float
	psnr: float
	psnr255: float
	rotated: bool = False

@dataclass
class EvalReport:
	model: str
	scores: List[ImageScore] = field(default_factory=list)
	orientation_resolve: bool = True
	runtime_s: float = 0.0

	def __len__(self) -> int:
		return len(self.scores)

	# compensated mean so the aggregate does not depend on summation order
	def mean(self, metric: str) -> float:
		if not self.scores:
			return float("nan")
		vals = [getattr(s, metric) for s in self.scores]
		if any(math.isinf(v) for v in vals):
			return math.inf
		return math.fsum(vals) / len(vals)

	def aggregates(self) -> Dict[str, float]:
		return {m: self.mean(m) for m in METRIC_COLUMNS}

	@property
	def rotated_fraction(self) -> float:
		return sum(s.rotated for s in self.scores) / max(len(self.scores), 1)

# Published comparison rows: (model, mse, mae, ssim, psnr); None where no value was reported
REFERENCE_ROWS: Dict[str, List[Tuple[str, Optional[float], Optional[float], Optional[float], Optional[float]]]] = {
	"mnist": [
		("PRCGAN", 0.0168, 0.0399, 0.8449, None),
		("CPR", 0.0123, 0.037, 0.8756, None),
		("PR-DAD Haar Packet", 0.0106, 0.0381, 0.8815, 39.4861),
		("PR-DAD auto encoder-decoder", 0.0100, 0.0398, 0.8799, 40.0208),
	],
	"emnist": [
		("PRCGAN", 0.0239, 0.0601, 0.8082, None),
		("CPR", 0.0144, 0.0501, 0.8700, None),
		("PR-DAD Haar Packet", 0.0119, 0.0475, 0.8710, 38.4744),
		("PR-DAD auto encoder-decoder", 0.0108, 0.0422, 0.8879, 39.2972),
	],
	"kmnist": [
		("PRCGAN", 0.0651, 0.1166, 0.5711, None),
		("CPR", 0.0433, 0.1034, 0.6624, None),
		("PR-DAD Haar Packet", 0.0383, 0.1027, 0.6365, 28.3249),
		("PR-DAD auto encoder-decoder", 0.0380, 0.0957, 0.6605, 28.4031),
	],
	"fashion_mnist": [
		("PRCGAN", 0.0151, 0.0572, 0.7749, None),
		("CPR", 0.0113, 0.0497, 0.8092, None),
		("PR-DAD Haar Packet", 0.0078, 0.0471, 0.8186, 42.1862),
		("PR-DAD auto encoder-decoder", 0.0081, 0.0442, 0.8242, 41.811),
	],
	"celeba": [
		("PRCGAN", 0.0138, 0.0804, 0.6779, None),
		("HIO", None, None, 0.472, 19.573),
		("PhaseCut", None, None, 0.7600, 25.3600),
		("On-RED", None, None, 0.4940, 19.7960),
		("prDeep", None, None, 0.7380, 26.0579),
		("DeepPhaseCut", None, None, 0.8540, 27.1190),
		("PR-DAD", 0.0025, 0.0340, 0.8815, 51.9661),
	],
}

def score_image(index: int, x: np.ndarray, x_hat: np.ndarray, orientation_resolve: bool = True, peak: float = 1.0) -> ImageScore:
	"""Scores one [0, 1]-scale prediction; with orientation_resolve the point reflection is used when it has lower MSE."""
	x = np.squeeze(np.asarray(x, dtype=np.float64))
	x_hat = np.squeeze(np.asarray(x_hat, dtype=np.float64))
	rotated = False
	if orientation_resolve:
		flipped = x_hat[::-1, ::-1]
		if mse(x, flipped) < mse(x, x_hat):
			x_hat = flipped
			rotated = True
	return ImageScore(
		index=int(index),
		mse=mse(x, x_hat),
		mae=mae(x, x_hat),
		ssim=ssim(x, x_hat, peak=peak),
		psnr=psnr(x, x_hat, peak=peak),
		psnr255=psnr255(x, x_hat),
		rotated=rotated,
	)

def evaluate(
	predict: Callable[[object], np.ndarray],
	batches: Iterable,
	denorm: Callable[[np.ndarray], np.ndarray],
	model_name: str = "PR-DAD",
	orientation_resolve: bool = True,
	workers: int = 1,
	progress: bool = False,
) -> EvalReport:
	"""
	predict maps a Batch to normalized predictions [B,1,n,n]; denorm brings both sides back to [0, 1].
	Per-image scoring may run on a thread pool; results keep dataset order.
	"""
	report = EvalReport(model=model_name, orientation_resolve=orientation_resolve)
	t0 = time.perf_counter()
	pool = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None
	try:
		for batch in tqdm(batches, desc="eval", disable=not progress, leave=False):
			x = denorm(np.asarray(batch.x))
			x_hat = denorm(np.asarray(predict(batch)))
			jobs = [(int(i), x[k], x_hat[k], orientation_resolve) for k, i in enumerate(batch.index)]
			if pool is None:
				report.scores.extend(score_image(*j) for j in jobs)
			else:
				report.scores.extend(pool.map(lambda j: score_image(*j), jobs))
	finally:
		if pool is not None:
			pool.shutdown()
	report.runtime_s = time.perf_counter() - t0
	agg = report.aggregates()
	log.info("%s: %d images, mse=%.5f mae=%.5f ssim=%.4f psnr=%.2f dB (rotated %.0f%%)", model_name, len(report),
		agg["mse"], agg["mae"], agg["ssim"], agg["psnr"], 100.0 * report.rotated_fraction)
	return report

def _fmt(v: Optional[float], digits: int) -> str:
	if v is None:
		return "n/a"
	if math.isinf(v):
		return "inf"
	return f"{v:.{digits}f}"

def format_table(reports: Sequence[EvalReport], dataset: Optional[str] = None) -> str:
	header = f"{'Model':<32} {'MSE':>8} {'MAE':>8} {'SSIM':>8} {'PSNR':>9} {'PSNR255':>9}"
	lines = [header, "-" * len(header)]
	for r in reports:
		a = r.aggregates()
		lines.append(f"{r.model:<32} {_fmt(a['mse'], 4):>8} {_fmt(a['mae'], 4):>8} {_fmt(a['ssim'], 4):>8} "
			f"{_fmt(a['psnr'], 2):>9} {_fmt(a['psnr255'], 2):>9}")
	if dataset in REFERENCE_ROWS:
		lines.append("")
		lines.append(f"published ({dataset}):")
		for name, m, e, s, p in REFERENCE_ROWS[dataset]:
			lines.append(f"{name:<32} {_fmt(m, 4):>8} {_fmt(e, 4):>8} {_fmt(s, 4):>8} {'':>9} {_fmt(p, 2):>9}")
	return "\n".join(lines) + "\n"

def report_rows(report: EvalReport) -> List[Dict[str, object]]:
	return [asdict(s) for s in report.scores]

def summary_row(report: EvalReport) -> Dict[str, object]:
	return {"model": report.model, "images": len(report), "orientation_resolve": report.orientation_resolve,
		"rotated_fraction": report.rotated_fraction, **report.aggregates(), "runtime_s": round(report.runtime_s, 3)}
