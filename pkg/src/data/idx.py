from __future__ import annotations
import glob
import gzip
import logging
import os
import struct
from typing import Optional

import numpy as np
from PIL import Image

from src.errors import IdxFormatError

log = logging.getLogger(__name__)

IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801
MAX_ITEMS = 10_000_000
MAX_SIDE = 4096

def _read_bytes(path: str) -> bytes:
	opener = gzip.open if path.endswith(".gz") else open
	with opener(path, "rb") as f:
		return f.read()

def _header(raw: bytes, path: str, expected: int, ndims: int):
	need = 4 * (1 + ndims)
	if len(raw) < need:
		raise IdxFormatError(f"{path}: file too short for an IDX header ({len(raw)} bytes)")
	magic = struct.unpack(">I", raw[:4])[0]
	if magic != expected:
		kind = {IMAGE_MAGIC: "image", LABEL_MAGIC: "label"}.get(magic, "unknown")
		raise IdxFormatError(f"{path}: bad magic 0x{magic:08x} ({kind} file), expected 0x{expected:08x}")
	dims = struct.unpack(">" + "I" * ndims, raw[4:need])
	return dims, need

# Big-endian IDX3 image file (optionally gzip-compressed) -> float64 [count, H, W] in [0, 1]
def load_idx(path: str, limit: Optional[int] = None, transpose: bool = False) -> np.ndarray:
	raw = _read_bytes(path)
	(count, rows, cols), off = _header(raw, path, IMAGE_MAGIC, 3)
	if count > MAX_ITEMS or rows > MAX_SIDE or cols > MAX_SIDE:
		raise IdxFormatError(f"{path}: dimensions ({count}, {rows}, {cols}) exceed the supported range")
	payload = count * rows * cols
	if len(raw) - off < payload:
		raise IdxFormatError(f"{path}: truncated payload, expected {payload} bytes, found {len(raw) - off}")
	n = count if limit is None else min(count, int(limit))
	pixels = np.frombuffer(raw, dtype=np.uint8, count=n * rows * cols, offset=off).reshape(n, rows, cols)
	images = pixels.astype(np.float64) / 255.0
	if transpose:
		images = np.ascontiguousarray(images.transpose(0, 2, 1))
	log.debug("%s: %d images of %dx%d", path, n, rows, cols)
	return images

def load_idx_labels(path: str, limit: Optional[int] = None) -> np.ndarray:
	raw = _read_bytes(path)
	(count,), off = _header(raw, path, LABEL_MAGIC, 1)
	if count > MAX_ITEMS:
		raise IdxFormatError(f"{path}: label count {count} exceeds the supported range")
	if len(raw) - off < count:
		raise IdxFormatError(f"{path}: truncated payload, expected {count} bytes, found {len(raw) - off}")
	n = count if limit is None else min(count, int(limit))
	return np.frombuffer(raw, dtype=np.uint8, count=n, offset=off).astype(np.int64)

# Folder of grayscale PGM rasters (pre-cropped faces); sorted by file name
def load_pgm_folder(folder: str, limit: Optional[int] = None) -> np.ndarray:
	paths = sorted(glob.glob(os.path.join(folder, "*.pgm")))
	if limit is not None:
		paths = paths[:limit]
	if not paths:
		raise FileNotFoundError(f"no .pgm files in {folder}")
	images = []
	for p in paths:
		with Image.open(p) as im:
			arr = np.asarray(im.convert("L"), dtype=np.float64) / 255.0
		images.append(arr)
	shapes = {a.shape for a in images}
	if len(shapes) != 1:
		raise IdxFormatError(f"{folder}: images have different sizes {sorted(shapes)}")
	return np.stack(images)

def write_idx(path: str, images: np.ndarray) -> None:
	"""Writes uint8 images as an IDX3 file; used to build fixtures and small dataset subsets."""
	arr = np.clip(np.rint(np.asarray(images) * 255.0), 0, 255).astype(np.uint8)
	header = struct.pack(">IIII", IMAGE_MAGIC, *arr.shape)
	opener = gzip.open if path.endswith(".gz") else open
	with opener(path, "wb") as f:
		f.write(header + arr.tobytes())
