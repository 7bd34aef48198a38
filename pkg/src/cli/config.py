from __future__ import annotations
import dataclasses
import hashlib
import json
import os
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Tuple

from src.autoencoder.model import EncoderConfig
from src.autoencoder.train import AETrainConfig
from src.data.transforms import AugmentationSpec, dataset_spec
from src.errors import ConfigError
from src.prdad.codecs import EncoderSpec
from src.prdad.model import PRDADConfig
from src.training.adam import OptimConfig
from src.training.losses import LossWeights
from src.training.trainer import TrainConfig

@dataclass(frozen=True)
class RunConfig:
	seed: int = 0
	output_dir: Optional[str] = None     # default out/<run_name>
	workers: int = 1
	progress: bool = True
	precision: str = "float64"

	def __post_init__(self):
		if self.workers < 1:
			raise ConfigError(f"run.workers must be >= 1, got {self.workers}")
		if self.precision not in ("float32", "float64"):
			raise ConfigError(f"run.precision must be 'float32' or 'float64', got {self.precision!r}")

@dataclass(frozen=True)
class DataConfig:
	dataset: str = "mnist"
	root: str = "data/mnist"
	train_limit: Optional[int] = None
	test_limit: Optional[int] = None
	val_fraction: float = 0.1

@dataclass(frozen=True)
class ModelSection:
	mlp_hidden: Tuple[int, int, int] = (2048, 4096, 4096)
	enhancement_blocks: int = 3
	decoder_finetune: float = 0.0
	log_magnitude: bool = False

@dataclass(frozen=True)
class AutoencoderSection:
	widths: Tuple[int, int] = (32, 64)
	N: int = 128
	activation: str = "prelu"
	pool: Tuple[bool, bool, bool] = (True, True, False)

@dataclass(frozen=True)
class CheckpointSpec:
	every: int = 1                 # epochs between periodic checkpoints; 0 disables them
	points: Tuple[int, ...] = ()   # extra epochs that always get a checkpoint

	def __post_init__(self):
		if self.every < 0:
			raise ConfigError(f"checkpoint.every must be >= 0, got {self.every}")

	def is_due(self, epoch: int, final: bool) -> bool:
		return final or epoch in self.points or (self.every > 0 and epoch % self.every == 0)

@dataclass(frozen=True)
class EvalConfig:
	orientation_resolve: bool = True
	batch_size: int = 64
	grid_count: int = 8
	png: bool = True

@dataclass(frozen=True)
class BaselineConfig:
	method: str = "er"        # "er" | "hio"
	iters: int = 500
	beta: float = 0.9
	limit: int = 50
	nonneg: bool = True

	def __post_init__(self):
		if self.method not in ("er", "hio"):
			raise ConfigError(f"baseline.method must be 'er' or 'hio', got {self.method!r}")
		if self.iters <= 0 or self.limit <= 0:
			raise ConfigError("baseline.iters and baseline.limit must be > 0")

@dataclass(frozen=True)
class ExperimentConfig:
	run_name: str = "run"
	run: RunConfig = field(default_factory=RunConfig)
	data: DataConfig = field(default_factory=DataConfig)
	augmentation: AugmentationSpec = field(default_factory=AugmentationSpec)
	encoder: EncoderSpec = field(default_factory=EncoderSpec)
	autoencoder: AutoencoderSection = field(default_factory=AutoencoderSection)
	autoencoder_train: AETrainConfig = field(default_factory=AETrainConfig)
	prdad: ModelSection = field(default_factory=ModelSection)
	loss: LossWeights = field(default_factory=LossWeights)
	optim: OptimConfig = field(default_factory=OptimConfig)
	train: TrainConfig = field(default_factory=TrainConfig)
	checkpoint: CheckpointSpec = field(default_factory=CheckpointSpec)
	eval: EvalConfig = field(default_factory=EvalConfig)
	baseline: BaselineConfig = field(default_factory=BaselineConfig)

	@property
	def output_dir(self) -> str:
		return self.run.output_dir or os.path.join("out", self.run_name)

	def encoder_config(self) -> EncoderConfig:
		a = self.autoencoder
		return EncoderConfig(n=self.augmentation.resize, widths=a.widths, N=a.N, activation=a.activation, pool=a.pool,
			dtype=self.run.precision)

	def prdad_config(self, layout: Tuple[int, int, int], m: int) -> PRDADConfig:
		p = self.prdad
		return PRDADConfig(m=m, n=self.augmentation.resize, repr_shape=tuple(layout), mlp_hidden=p.mlp_hidden,
			enhancement_blocks=p.enhancement_blocks, decoder_finetune=p.decoder_finetune, log_magnitude=p.log_magnitude,
			dtype=self.run.precision)

# ---------- parsing ----------

def _check_scalar(value: Any, default: Any, path: str) -> None:
	if isinstance(default, bool):
		if not isinstance(value, bool):
			raise ConfigError(f"{path}: expected true/false, got {value!r}")
	elif isinstance(default, (int, float)) and value is not None:
		if isinstance(value, bool) or not isinstance(value, (int, float)):
			raise ConfigError(f"{path}: expected a number, got {value!r}")
		if isinstance(default, int) and not isinstance(default, bool) and isinstance(value, float) and not value.is_integer():
			raise ConfigError(f"{path}: expected an integer, got {value!r}")
	elif isinstance(default, str) and not isinstance(value, str):
		raise ConfigError(f"{path}: expected a string, got {value!r}")

def _freeze(value: Any) -> Any:
	if isinstance(value, list):
		return tuple(_freeze(v) for v in value)
	return value

def _build(cls, data: Any, path: str, base=None):
	if not isinstance(data, dict):
		raise ConfigError(f"{path}: expected a table of key/value pairs, got {type(data).__name__}")
	base = base if base is not None else cls()
	known = {f.name: f for f in dataclasses.fields(cls)}
	unknown = sorted(set(data) - set(known))
	if unknown:
		raise ConfigError(f"unknown key {path}.{unknown[0]}" if path else f"unknown key {unknown[0]}")
	kwargs: Dict[str, Any] = {}
	for key, value in data.items():
		default = getattr(base, key)
		where = f"{path}.{key}" if path else key
		if dataclasses.is_dataclass(default):
			kwargs[key] = _build(type(default), value, where, base=default)
			continue
		_check_scalar(value, default, where)
		if isinstance(default, int) and not isinstance(default, bool) and isinstance(value, float):
			value = int(value)
		kwargs[key] = _freeze(value)
	try:
		return dataclasses.replace(base, **kwargs)
	except ConfigError as e:
		raise ConfigError(f"{path}: {e}" if path else str(e)) from None
	except (TypeError, ValueError) as e:
		raise ConfigError(f"{path}: {e}" if path else str(e)) from None

def parse_config(raw: Dict[str, Any]) -> ExperimentConfig:
	"""Builds the config; augmentation keys override the dataset's built-in preset."""
	if not isinstance(raw, dict):
		raise ConfigError("config root must be a JSON object")
	raw = dict(raw)
	data = _build(DataConfig, raw.get("data", {}), "data")
	aug = _build(AugmentationSpec, raw.pop("augmentation", {}), "augmentation", base=dataset_spec(data.dataset))
	cfg = _build(ExperimentConfig, raw, "")
	return dataclasses.replace(cfg, augmentation=aug)

def load_config(path: str, seed: Optional[int] = None, out: Optional[str] = None, workers: Optional[int] = None) -> ExperimentConfig:
	with open(path, "r", encoding="utf-8") as f:
		try:
			raw = json.load(f)
		except json.JSONDecodeError as e:
			raise ConfigError(f"{path}: invalid JSON ({e})") from None
	cfg = parse_config(raw)
	return apply_overrides(cfg, seed=seed, out=out, workers=workers)

def apply_overrides(cfg: ExperimentConfig, seed: Optional[int] = None, out: Optional[str] = None, workers: Optional[int] = None) -> ExperimentConfig:
	run = cfg.run
	if seed is not None:
		run = dataclasses.replace(run, seed=seed)
	if out is not None:
		run = dataclasses.replace(run, output_dir=out)
	if workers is not None:
		run = dataclasses.replace(run, workers=workers)
	return dataclasses.replace(cfg, run=run)

def to_dict(cfg: ExperimentConfig) -> Dict[str, Any]:
	return json.loads(json.dumps(dataclasses.asdict(cfg)))

_HASH_EXCLUDE = {("run", "output_dir"), ("run", "workers"), ("run", "progress"), ("train", "epochs"),
	("autoencoder_train", "epochs"), ("checkpoint", "every"), ("checkpoint", "points"), ("eval",), ("baseline",)}

# md5 over the settings that shape the trained weights; run length, output location and eval-only sections are excluded
def config_hash(cfg: ExperimentConfig) -> str:
	d = to_dict(cfg)
	d.pop("run_name", None)
	for key in _HASH_EXCLUDE:
		if len(key) == 1:
			d.pop(key[0], None)
		else:
			d.get(key[0], {}).pop(key[1], None)
	blob = json.dumps(d, sort_keys=True, separators=(",", ":"))
	return hashlib.md5(blob.encode("utf-8")).hexdigest()
