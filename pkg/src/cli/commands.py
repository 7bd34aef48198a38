from __future__ import annotations
import dataclasses
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from tqdm import tqdm

from src.autoencoder.model import AutoEncoder, EncoderConfig
from src.autoencoder.train import AETrainResult, evaluate_reconstruction, train_autoencoder
from src.classical.projections import Constraints, IterState, error_reduction, hio, random_phase_init
from src.cli.checkpoint import Checkpoint, check_resume, from_model, load_checkpoint, restore_model, save_checkpoint
from src.cli.config import ExperimentConfig, config_hash, to_dict
from src.cli.io_utils import (append_csv_row, ensure_dir, pair_grid, read_csv, read_pgm, save_pgm, save_png,
	version_stamp, write_csv, write_json, write_text)
from src.cli.plotting import plot_loss_curves, plot_residuals, plot_val_metrics
from src.data.datasets import load_split, train_val_split
from src.data.pipeline import SampleSource
from src.data.transforms import denormalize, preprocess
from src.errors import CheckpointError, ConfigError
from src.fourier.dft import PaddingSpec, fft2, support_mask
from src.metrics.report import EvalReport, evaluate, format_table, report_rows, score_image, summary_row
from src.prdad.codecs import EncoderSpec, make_codec
from src.prdad.model import PRDAD, PRDADConfig
from src.training.adam import AdamState
from src.training.trainer import TrainResult, predictor, train_prdad

log = logging.getLogger(__name__)

# ---------- shared plumbing ----------

def prepare_output(cfg: ExperimentConfig) -> str:
	out = cfg.output_dir
	for sub in ("", "checkpoints", "results", "plots"):
		ensure_dir(os.path.join(out, sub))
	write_json(os.path.join(out, "config_snapshot.json"), to_dict(cfg))
	write_text(os.path.join(out, "version.txt"), version_stamp())
	return out

def load_images(cfg: ExperimentConfig, split: str, limit: Optional[int] = None) -> np.ndarray:
	d = cfg.data
	if limit is None:
		limit = d.train_limit if split == "train" else d.test_limit
	raw = load_split(d.dataset, d.root, split, limit)
	return np.stack([preprocess(x, cfg.augmentation) for x in raw])

def _train_val(cfg: ExperimentConfig) -> Tuple[np.ndarray, np.ndarray]:
	images = load_images(cfg, "train")
	tr, va = train_val_split(len(images), cfg.data.val_fraction, seed=cfg.run.seed)
	return images[tr], images[va]

def padding_of(cfg: ExperimentConfig) -> PaddingSpec:
	return cfg.augmentation.padding

def _ae_topology(ec: EncoderConfig) -> Dict[str, Any]:
	return json_ready(dataclasses.asdict(ec))

def json_ready(d: Dict[str, Any]) -> Dict[str, Any]:
	return {k: list(v) if isinstance(v, tuple) else v for k, v in d.items()}

def _tupled(d: Dict[str, Any]) -> Dict[str, Any]:
	return {k: tuple(v) if isinstance(v, list) else v for k, v in d.items()}

def autoencoder_from_checkpoint(ck: Checkpoint) -> AutoEncoder:
	if ck.kind != "autoencoder":
		raise CheckpointError(f"expected an autoencoder checkpoint, got {ck.kind!r}")
	model = AutoEncoder(EncoderConfig(**_tupled(ck.topology)))
	restore_model(ck, model)
	return model.eval()

def build_codec(cfg: ExperimentConfig, spec: Optional[EncoderSpec] = None):
	spec = spec or cfg.encoder
	ae = autoencoder_from_checkpoint(load_checkpoint(spec.path)) if spec.kind == "trained" else None
	return make_codec(spec, cfg.augmentation.resize, autoencoder=ae)

def _checkpointer(cfg: ExperimentConfig, out: str, model, kind: str, topology: Dict[str, Any], final_name: str):
	chash = config_hash(cfg)

	def save(epoch: int, optim: AdamState, final: bool) -> Optional[str]:
		if not cfg.checkpoint.is_due(epoch, final):
			return None
		ck = from_model(model, kind, chash, epoch, topology, optim)
		path = save_checkpoint(os.path.join(out, "checkpoints", f"{kind}_epoch{epoch:04d}.ckpt"), ck)
		if final:
			save_checkpoint(os.path.join(out, final_name), ck)
		return path
	return save

def _resume(cfg: ExperimentConfig, checkpoint: Optional[str], kind: str, model) -> Tuple[AdamState, int]:
	if not checkpoint:
		return AdamState(config=cfg.optim), 0
	ck = load_checkpoint(checkpoint)
	check_resume(ck, kind, config_hash(cfg))
	restore_model(ck, model)
	log.info("resuming %s from %s at epoch %d, step %d", kind, checkpoint, ck.epoch, ck.optim_step)
	return ck.adam_state(cfg.optim), ck.epoch

# ---------- train-ae ----------

def cmd_train_ae(cfg: ExperimentConfig, checkpoint: Optional[str] = None) -> AETrainResult:
	out = prepare_output(cfg)
	train_imgs, val_imgs = _train_val(cfg)
	spec = cfg.augmentation
	source = SampleSource(train_imgs, spec, seed=cfg.run.seed, train=True, workers=cfg.run.workers)
	ec = cfg.encoder_config()
	model = AutoEncoder(ec, seed=cfg.run.seed)
	optim, start = _resume(cfg, checkpoint, "autoencoder", model)
	log_path = os.path.join(out, "ae_log.csv")
	if start == 0 and os.path.exists(log_path):
		os.remove(log_path)

	result = train_autoencoder(
		model, source, cfg.autoencoder_train, optim, start_epoch=start,
		on_epoch=lambda rec: append_csv_row(log_path, rec),
		on_checkpoint=_checkpointer(cfg, out, model, "autoencoder", _ae_topology(ec), "autoencoder.ckpt"),
		progress=cfg.run.progress,
	)

	lines = [f"run: {cfg.run_name}", f"epochs: {cfg.autoencoder_train.epochs}", f"steps: {optim.step}",
		f"parameters: {model.parameter_count()}", f"representation: {ec.repr_shape}"]
	if len(val_imgs):
		mean_img = source.images.mean(axis=0)
		mean_img = (mean_img - spec.mean) / spec.std
		held = SampleSource(val_imgs, spec, seed=cfg.run.seed, train=False)
		rr = evaluate_reconstruction(model, held, mean_img, cfg.autoencoder_train.batch_size)
		lines += [f"heldout_mse: {rr['mse']:.6g}", f"mean_image_mse: {rr['baseline_mse']:.6g}",
			f"active_fraction: {rr['active_fraction']:.4f}"]
		log.info("autoencoder held-out mse %.5f vs mean-image %.5f", rr["mse"], rr["baseline_mse"])
	write_text(os.path.join(out, "summary.txt"), "\n".join(lines) + "\n")
	return result

# ---------- train-prdad ----------

def build_prdad(cfg: ExperimentConfig, codec) -> PRDAD:
	pcfg = cfg.prdad_config(codec.layout, padding_of(cfg).padded_size(cfg.augmentation.resize))
	return PRDAD(pcfg, codec, seed=cfg.run.seed)

def _prdad_topology(cfg: ExperimentConfig, model: PRDAD) -> Dict[str, Any]:
	topo = {"prdad": json_ready(dataclasses.asdict(model.cfg)), "encoder": dataclasses.asdict(cfg.encoder),
		"padding": dataclasses.asdict(padding_of(cfg))}
	if cfg.encoder.kind == "trained":
		topo["autoencoder"] = _ae_topology(model.codec.autoencoder.cfg)
	return topo

def prdad_from_checkpoint(ck: Checkpoint) -> Tuple[PRDAD, PaddingSpec]:
	topo = ck.topology
	pcfg = PRDADConfig(**_tupled(topo["prdad"]))
	spec = EncoderSpec(**topo["encoder"])
	if spec.kind == "trained":
		codec = make_codec(spec, pcfg.n, autoencoder=AutoEncoder(EncoderConfig(**_tupled(topo["autoencoder"]))))
	else:
		codec = make_codec(spec, pcfg.n)
	model = PRDAD(pcfg, codec)
	restore_model(ck, model)
	return model, PaddingSpec(**topo["padding"])

def cmd_train_prdad(cfg: ExperimentConfig, checkpoint: Optional[str] = None) -> TrainResult:
	out = prepare_output(cfg)
	codec = build_codec(cfg)
	train_imgs, val_imgs = _train_val(cfg)
	spec = cfg.augmentation
	source = SampleSource(train_imgs, spec, codec=codec, seed=cfg.run.seed, train=True, workers=cfg.run.workers,
		dtype=cfg.run.precision)
	val_source = SampleSource(val_imgs, spec, seed=cfg.run.seed, train=False, dtype=cfg.run.precision) if len(val_imgs) else None
	model = build_prdad(cfg, codec)
	optim, start = _resume(cfg, checkpoint, "prdad", model)

	log_path = os.path.join(out, "train_log.csv")
	timing_path = os.path.join(out, "timing.csv")
	if start == 0:
		for p in (log_path, timing_path):
			if os.path.exists(p):
				os.remove(p)

	def on_epoch(rec, wall: float) -> None:
		append_csv_row(log_path, rec.row())
		append_csv_row(timing_path, {"epoch": rec.epoch, "step": rec.step, "wall_time": round(wall, 3)})

	result = train_prdad(
		model, source, cfg.loss, optim, cfg.train, val_source=val_source, start_epoch=start, on_epoch=on_epoch,
		on_checkpoint=_checkpointer(cfg, out, model, "prdad", _prdad_topology(cfg, model), "model.ckpt"),
		progress=cfg.run.progress,
	)

	last = result.records[-1] if result.records else None
	lines = [f"run: {cfg.run_name}", f"encoder: {cfg.encoder.kind}", f"epochs: {cfg.train.epochs}", f"steps: {optim.step}",
		f"parameters: {model.parameter_count()}", f"config_hash: {config_hash(cfg)}"]
	if last is not None:
		lines += [f"final_total_loss: {last.total:.6g}", f"final_val_mse: {last.val_mse:.6g}", f"final_val_ssim: {last.val_ssim:.6g}"]
	write_text(os.path.join(out, "summary.txt"), "\n".join(lines) + "\n")
	return result

# ---------- eval ----------

def write_report(report: EvalReport, out: str, stem: str, dataset: Optional[str] = None) -> str:
	res = os.path.join(out, "results")
	ensure_dir(res)
	write_csv(os.path.join(res, f"{stem}_per_image.csv"), report_rows(report))
	write_csv(os.path.join(res, f"{stem}_summary.csv"), [summary_row(report)])
	table = format_table([report], dataset)
	write_text(os.path.join(res, f"{stem}_table.txt"), table)
	return table

def _orient(img: np.ndarray, rotated: bool) -> np.ndarray:
	img = np.squeeze(img)
	return img[::-1, ::-1] if rotated else img

def write_grid(out: str, originals: List[np.ndarray], recovered: List[np.ndarray], stem: str = "grid", png: bool = True) -> str:
	grid = np.clip(pair_grid(originals, recovered), 0.0, 1.0)
	path = os.path.join(out, "results", f"{stem}.pgm")
	save_pgm(path, grid)
	if png:
		save_png(os.path.join(out, "plots", f"{stem}.png"), grid)
	return path

def cmd_eval(cfg: ExperimentConfig, checkpoint: Optional[str], oracle: bool = False) -> EvalReport:
	"""
	Scores a trained checkpoint on the test split. oracle=True replaces the network with the ground truth,
	which exercises the whole reporting path with a known perfect score.
	"""
	ck_path = checkpoint or os.path.join(cfg.output_dir, "model.ckpt")
	ck = load_checkpoint(ck_path)
	model, padding = prdad_from_checkpoint(ck)
	model.eval()
	out = prepare_output(cfg)
	spec = cfg.augmentation
	source = SampleSource(load_images(cfg, "test"), spec, seed=cfg.run.seed, train=False, workers=cfg.run.workers, padding=padding,
		dtype=cfg.run.precision)
	if source.m != model.cfg.m:
		raise ConfigError(f"test magnitudes are {source.m}x{source.m} but the checkpoint expects {model.cfg.m}x{model.cfg.m}")

	predict = (lambda b: b.x) if oracle else predictor(model)
	name = "oracle" if oracle else f"PR-DAD ({ck.topology['encoder']['kind']})"
	captured: List[Tuple[np.ndarray, np.ndarray]] = []

	def predict_and_keep(batch):
		y = predict(batch)
		if len(captured) < cfg.eval.grid_count:
			for k in range(min(len(batch), cfg.eval.grid_count - len(captured))):
				captured.append((batch.x[k], y[k]))
		return y

	denorm = lambda a: denormalize(a, spec.mean, spec.std)
	report = evaluate(predict_and_keep, source.batches(0, min(cfg.eval.batch_size, len(source)), shuffle=False), denorm,
		model_name=name, orientation_resolve=cfg.eval.orientation_resolve, workers=cfg.run.workers, progress=cfg.run.progress)
	table = write_report(report, out, "eval", cfg.data.dataset)
	log.info("evaluation table:\n%s", table)

	if captured:
		originals = [denorm(np.squeeze(x)) for x, _ in captured]
		recovered = [_orient(denorm(y), s.rotated) for (_, y), s in zip(captured, report.scores)]
		write_grid(out, originals, recovered, png=cfg.eval.png)
	return report

# ---------- baseline ----------

def _solve_one(args) -> Tuple[np.ndarray, IterState]:
	x, spec_pad, bl, seed, i = args
	n = x.shape[-1]
	p = spec_pad.per_side(n)
	off = spec_pad.offset(n)
	m = spec_pad.padded_size(n)
	padded = np.zeros((m, m))
	padded[off:off + n, off:off + n] = x
	omega = np.abs(fft2(padded))
	mask = support_mask(n, spec_pad) if p > 0 else None
	x0 = random_phase_init(omega, seed=[seed, i])
	if bl.method == "er":
		state = error_reduction(omega, x0, bl.iters, Constraints(real=True, nonneg=bl.nonneg, support=mask))
		est = state.x
	else:
		state = hio(omega, x0, beta=bl.beta, iters=bl.iters, support=mask, nonneg=bl.nonneg)
		est = Constraints(real=True, nonneg=bl.nonneg, support=mask).project(state.x)
	return est[off:off + n, off:off + n], state

def cmd_baseline(cfg: ExperimentConfig) -> EvalReport:
	"""Error reduction or HIO from a random phase on each test image, scored like the network."""
	out = prepare_output(cfg)
	bl = cfg.baseline
	images = load_images(cfg, "test", limit=bl.limit)
	pad = padding_of(cfg)
	jobs = [(images[i], pad, bl, cfg.run.seed, i) for i in range(len(images))]

	if cfg.run.workers > 1:
		with ThreadPoolExecutor(max_workers=cfg.run.workers) as pool:
			solved = list(tqdm(pool.map(_solve_one, jobs), total=len(jobs), desc=bl.method, disable=not cfg.run.progress))
	else:
		solved = [_solve_one(j) for j in tqdm(jobs, desc=bl.method, disable=not cfg.run.progress)]

	name = "HIO" if bl.method == "hio" else "ER"
	report = EvalReport(model=f"{name} ({bl.iters} it)", orientation_resolve=cfg.eval.orientation_resolve)
	for i, (est, _) in enumerate(solved):
		report.scores.append(score_image(i, images[i], est, cfg.eval.orientation_resolve))
	if bl.method == "er":
		bad = sum(not st.is_monotone() for _, st in solved)
		log.info("error reduction: %d/%d residual traces non-increasing", len(solved) - bad, len(solved))

	table = write_report(report, out, f"baseline_{bl.method}", cfg.data.dataset)
	log.info("baseline table:\n%s", table)
	write_csv(os.path.join(out, "results", f"baseline_{bl.method}_residuals.csv"),
		[{"image": i, "final_residual": st.residuals[-1], "monotone": st.is_monotone()} for i, (_, st) in enumerate(solved)])
	if solved:
		plot_residuals(solved[0][1].residuals, f"{name}: residual, test image 0",
			os.path.join(out, "plots", f"baseline_{bl.method}_residuals.png"))
		k = min(cfg.eval.grid_count, len(solved))
		recovered = [_orient(solved[i][0], report.scores[i].rotated) for i in range(k)]
		write_grid(out, [images[i] for i in range(k)], recovered, stem=f"baseline_{bl.method}_grid", png=cfg.eval.png)
	return report

# ---------- export-figures ----------

def cmd_export_figures(run_dir: str) -> List[str]:
	"""Re-plots loss curves and validation metrics from a run directory's logs; converts saved PGM grids to PNG."""
	if not os.path.isdir(run_dir):
		raise FileNotFoundError(f"run directory not found: {run_dir}")
	plots = os.path.join(run_dir, "plots")
	ensure_dir(plots)
	written: List[str] = []

	log_path = os.path.join(run_dir, "train_log.csv")
	if os.path.exists(log_path):
		rows = read_csv(log_path)
		p = os.path.join(plots, "loss_curves.png")
		plot_loss_curves(rows, "PR-DAD training losses", p)
		written.append(p)
		if any(r.get("val_mse", "nan") != "nan" for r in rows):
			p = os.path.join(plots, "val_metrics.png")
			plot_val_metrics(rows, "validation", p)
			written.append(p)

	ae_path = os.path.join(run_dir, "ae_log.csv")
	if os.path.exists(ae_path):
		p = os.path.join(plots, "ae_loss_curves.png")
		plot_loss_curves(read_csv(ae_path), "autoencoder training", p, series=("loss", "mse", "l1"))
		written.append(p)

	results = os.path.join(run_dir, "results")
	if os.path.isdir(results):
		for fname in sorted(os.listdir(results)):
			if fname.endswith(".pgm"):
				p = os.path.join(plots, fname[:-4] + ".png")
				save_png(p, read_pgm(os.path.join(results, fname)) / 255.0)
				written.append(p)

	if not written:
		log.warning("%s: nothing to export (no logs or grids found)", run_dir)
	for p in written:
		log.info("wrote %s", p)
	return written
