from __future__ import annotations
import json
import logging
import os
import struct
from dataclasses import dataclass, field
from typing import Any, Dict, Optional

import numpy as np

from src.autodiff.nn import Module
from src.errors import CheckpointError
from src.training.adam import AdamState, OptimConfig

log = logging.getLogger(__name__)

# Layout: MAGIC | u32 version | u64 manifest length | manifest (UTF-8 JSON) | raw little-endian blobs.
# The manifest lists every blob as {name, dtype, shape, offset, nbytes}; offsets count from the first blob byte.
MAGIC = b"PRDADCKP"
VERSION = 1
_HEAD = struct.Struct("<8sIQ")

@dataclass
class Checkpoint:
	kind: str                                   # "prdad" | "autoencoder"
	config_hash: str
	epoch: int
	topology: Dict[str, Any] = field(default_factory=dict)
	params: Dict[str, np.ndarray] = field(default_factory=dict)
	buffers: Dict[str, np.ndarray] = field(default_factory=dict)
	optim_step: int = 0
	optim_lr: Optional[float] = None
	optim_arrays: Dict[str, np.ndarray] = field(default_factory=dict)
	meta: Dict[str, Any] = field(default_factory=dict)

	def adam_state(self, config: OptimConfig) -> AdamState:
		return AdamState.from_arrays(config, self.optim_step, self.optim_arrays, lr=self.optim_lr)

def from_model(model: Module, kind: str, config_hash: str, epoch: int, topology: Dict[str, Any],
		optim: Optional[AdamState] = None, meta: Optional[Dict[str, Any]] = None) -> Checkpoint:
	ck = Checkpoint(kind=kind, config_hash=config_hash, epoch=epoch, topology=topology, meta=dict(meta or {}))
	ck.params = {name: p.data for name, p in model.named_parameters()}
	ck.buffers = dict(model.named_buffers())
	if optim is not None:
		ck.optim_step = optim.step
		ck.optim_lr = optim.current_lr()
		ck.optim_arrays = optim.arrays()
	return ck

def _le(arr: np.ndarray) -> np.ndarray:
	arr = np.ascontiguousarray(arr)
	if arr.dtype.kind != "f" or arr.dtype.itemsize not in (4, 8):
		arr = arr.astype(np.float64)
	return arr.astype(arr.dtype.newbyteorder("<"), copy=False)

def save_checkpoint(path: str, ck: Checkpoint) -> str:
	entries = []
	blobs = []
	offset = 0
	groups = (("param", ck.params), ("buffer", ck.buffers), ("optim", ck.optim_arrays))
	for prefix, arrays in groups:
		for name in sorted(arrays) if prefix == "optim" else arrays:
			arr = _le(arrays[name])
			raw = arr.tobytes()
			entries.append({"name": f"{prefix}/{name}", "dtype": arr.dtype.str, "shape": list(arr.shape),
				"offset": offset, "nbytes": len(raw)})
			blobs.append(raw)
			offset += len(raw)

	manifest = {
		"kind": ck.kind,
		"config_hash": ck.config_hash,
		"epoch": ck.epoch,
		"topology": ck.topology,
		"optimizer": {"step": ck.optim_step, "lr": ck.optim_lr},
		"meta": ck.meta,
		"tensors": entries,
	}
	head = json.dumps(manifest, sort_keys=True).encode("utf-8")

	d = os.path.dirname(path)
	if d:
		os.makedirs(d, exist_ok=True)
	tmp = path + ".tmp"
	with open(tmp, "wb") as f:
		f.write(_HEAD.pack(MAGIC, VERSION, len(head)))
		f.write(head)
		for raw in blobs:
			f.write(raw)
	os.replace(tmp, path)
	log.debug("checkpoint %s: %d tensors, %d bytes", path, len(entries), offset)
	return path

def load_checkpoint(path: str) -> Checkpoint:
	if not os.path.exists(path):
		raise CheckpointError(f"checkpoint not found: {path}")
	with open(path, "rb") as f:
		raw = f.read()
	if len(raw) < _HEAD.size:
		raise CheckpointError(f"{path}: file too short for a checkpoint header")
	magic, version, mlen = _HEAD.unpack_from(raw, 0)
	if magic != MAGIC:
		raise CheckpointError(f"{path}: bad magic {magic!r}")
	if version != VERSION:
		raise CheckpointError(f"{path}: unsupported checkpoint version {version} (expected {VERSION})")
	start = _HEAD.size + mlen
	try:
		manifest = json.loads(raw[_HEAD.size:start].decode("utf-8"))
	except (UnicodeDecodeError, json.JSONDecodeError) as e:
		raise CheckpointError(f"{path}: corrupt manifest ({e})") from None

	ck = Checkpoint(kind=manifest["kind"], config_hash=manifest["config_hash"], epoch=int(manifest["epoch"]),
		topology=manifest.get("topology", {}), meta=manifest.get("meta", {}))
	opt = manifest.get("optimizer") or {}
	ck.optim_step = int(opt.get("step", 0))
	ck.optim_lr = opt.get("lr")
	for e in manifest["tensors"]:
		lo = start + e["offset"]
		hi = lo + e["nbytes"]
		if hi > len(raw):
			raise CheckpointError(f"{path}: tensor {e['name']} runs past the end of the file")
		arr = np.frombuffer(raw[lo:hi], dtype=np.dtype(e["dtype"])).reshape(e["shape"])
		arr = arr.astype(arr.dtype.newbyteorder("="))
		prefix, name = e["name"].split("/", 1)
		{"param": ck.params, "buffer": ck.buffers, "optim": ck.optim_arrays}[prefix][name] = arr
	return ck

def restore_model(ck: Checkpoint, model: Module) -> Module:
	named = dict(model.named_parameters())
	missing = sorted(set(named) - set(ck.params))
	extra = sorted(set(ck.params) - set(named))
	if missing or extra:
		raise CheckpointError(f"checkpoint/model parameter mismatch: missing {missing[:3]}, unexpected {extra[:3]}")
	for name, p in named.items():
		arr = ck.params[name]
		if arr.shape != p.shape:
			raise CheckpointError(f"parameter {name}: checkpoint shape {arr.shape} vs model {p.shape}")
		p.data = arr.astype(p.dtype, copy=True)
	model.load_buffers(ck.buffers)
	return model

def check_resume(ck: Checkpoint, kind: str, config_hash: str) -> None:
	if ck.kind != kind:
		raise CheckpointError(f"cannot resume a {kind} run from a {ck.kind} checkpoint")
	if ck.config_hash != config_hash:
		raise CheckpointError(f"config hash mismatch on resume: checkpoint {ck.config_hash}, config {config_hash}")
