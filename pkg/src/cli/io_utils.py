from __future__ import annotations
import csv
import json
import math
import os
import subprocess
from dataclasses import asdict, is_dataclass
from typing import Any, Dict, List, Sequence

import numpy as np
from PIL import Image

import src

def ensure_dir(path: str) -> None:
	os.makedirs(path, exist_ok=True)

def write_json(path: str, obj: Any) -> None:
	def default(o):
		if is_dataclass(o):
			return asdict(o)
		if isinstance(o, np.generic):
			return o.item()
		raise TypeError(f"Not JSON serializable: {type(o)}")
	with open(path, "w", encoding="utf-8") as f:
		json.dump(obj, f, indent=2, default=default)

def write_text(path: str, text: str) -> None:
	with open(path, "w", encoding="utf-8") as f:
		f.write(text)

def _cell(v: Any) -> str:
	if isinstance(v, float):
		return "nan" if math.isnan(v) else repr(v)
	return str(v)

def write_csv(path: str, rows: List[Dict[str, Any]]) -> None:
	if not rows:
		with open(path, "w", encoding="utf-8") as f:
			f.write("")
		return

	headers = list(rows[0].keys())
	with open(path, "w", encoding="utf-8", newline="") as f:
		w = csv.writer(f, lineterminator="\n")
		w.writerow(headers)
		for r in rows:
			w.writerow([_cell(r.get(h, "")) for h in headers])

# Append-only log; the header is written when the file is created
def append_csv_row(path: str, row: Dict[str, Any]) -> None:
	new = not os.path.exists(path) or os.path.getsize(path) == 0
	with open(path, "a", encoding="utf-8", newline="") as f:
		w = csv.writer(f, lineterminator="\n")
		if new:
			w.writerow(list(row.keys()))
		w.writerow([_cell(v) for v in row.values()])

def read_csv(path: str) -> List[Dict[str, str]]:
	with open(path, "r", encoding="utf-8", newline="") as f:
		return list(csv.DictReader(f))

def version_stamp() -> str:
	stamp = f"prdad {src.__version__}"
	try:
		rev = subprocess.run(["git", "rev-parse", "--short", "HEAD"], capture_output=True, text=True, timeout=5,
			cwd=os.path.dirname(os.path.abspath(src.__file__)))
		if rev.returncode == 0 and rev.stdout.strip():
			stamp += f" (git {rev.stdout.strip()})"
	except (OSError, subprocess.SubprocessError):
		pass
	return stamp + "\n"

def to_uint8(img: np.ndarray) -> np.ndarray:
	return np.clip(np.rint(np.asarray(img, dtype=np.float64) * 255.0), 0, 255).astype(np.uint8)

# Binary P5 PGM, 8-bit
def save_pgm(path: str, img: np.ndarray) -> None:
	arr = to_uint8(img)
	if arr.ndim != 2:
		raise ValueError(f"save_pgm: expected a 2-D image, got shape {arr.shape}")
	h, w = arr.shape
	with open(path, "wb") as f:
		f.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
		f.write(arr.tobytes())

def read_pgm(path: str) -> np.ndarray:
	with Image.open(path) as im:
		return np.asarray(im.convert("L"), dtype=np.uint8)

def save_png(path: str, img: np.ndarray) -> None:
	Image.fromarray(to_uint8(img)).save(path)

# Tiles [k, n, n] images into one row with a 1-pixel gap of value `fill`
def tile_row(images: Sequence[np.ndarray], gap: int = 1, fill: float = 1.0) -> np.ndarray:
	images = [np.squeeze(np.asarray(im, dtype=np.float64)) for im in images]
	h = images[0].shape[0]
	parts: List[np.ndarray] = []
	for i, im in enumerate(images):
		if i:
			parts.append(np.full((h, gap), fill))
		parts.append(im)
	return np.concatenate(parts, axis=1)

# Two rows: originals on top, recoveries below
def pair_grid(originals: Sequence[np.ndarray], recovered: Sequence[np.ndarray], gap: int = 1) -> np.ndarray:
	top = tile_row(originals, gap)
	bottom = tile_row(recovered, gap)
	return np.concatenate([top, np.ones((gap, top.shape[1])), bottom], axis=0)
