from __future__ import annotations
import itertools
import threading
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Set, Tuple

import numpy as np

from src.errors import ContractError, NonFiniteError

_node_ids = itertools.count()
_local = threading.local()

def _tape_stack() -> List["Tape"]:
	if not hasattr(_local, "stack"):
		_local.stack = []
	return _local.stack

# Dense real array node; row-major numpy storage
class Tensor:
	__slots__ = ("data", "requires_grad", "node_id", "grad")

	def __init__(self, data, requires_grad: bool = False, dtype=None):
		arr = np.asarray(data, dtype=dtype)
		if arr.dtype.kind != "f":
			arr = arr.astype(np.float64)
		self.data: np.ndarray = arr
		self.requires_grad = requires_grad
		self.node_id = next(_node_ids)
		self.grad: Optional[np.ndarray] = None

	@property
	def shape(self) -> Tuple[int, ...]:
		return self.data.shape

	@property
	def ndim(self) -> int:
		return self.data.ndim

	@property
	def dtype(self):
		return self.data.dtype

	@property
	def size(self) -> int:
		return int(self.data.size)

	def item(self) -> float:
		return float(self.data.reshape(-1)[0]) if self.data.size == 1 else float("nan")

	def numpy(self) -> np.ndarray:
		return self.data

	def detach(self) -> "Tensor":
		return Tensor(self.data)

	def __len__(self) -> int:
		return self.data.shape[0]

	def __repr__(self) -> str:
		return f"Tensor(shape={self.shape}, dtype={self.dtype}, requires_grad={self.requires_grad})"

# Learned weight; name is the dotted path inside its model
class Parameter(Tensor):
	__slots__ = ("name", "trainable")

	def __init__(self, data, name: str = "", trainable: bool = True, dtype=None):
		super().__init__(data, requires_grad=trainable, dtype=dtype)
		self.name = name
		self.trainable = trainable
		self.grad = np.zeros_like(self.data)

	def set_trainable(self, flag: bool) -> None:
		self.trainable = flag
		self.requires_grad = flag

	def zero_grad(self) -> None:
		self.grad = np.zeros_like(self.data)

	def __repr__(self) -> str:
		return f"Parameter({self.name!r}, shape={self.shape}, trainable={self.trainable})"

@dataclass
class TapeEntry:
	kind: str
	inputs: Tuple[int, ...]
	output: int
	backward: Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]

# Ordered record of primitive ops; entries are appended in execution order so the list is topological
@dataclass
class Tape:
	entries: List[TapeEntry] = field(default_factory=list)
	leaves: Dict[int, Tensor] = field(default_factory=dict)
	produced: Set[int] = field(default_factory=set)

	def __enter__(self) -> "Tape":
		_tape_stack().append(self)
		return self

	def __exit__(self, *exc) -> None:
		_tape_stack().remove(self)

	def kinds_between(self, start: Tensor, end: Tensor) -> List[str]:
		# Kinds of the entries on some path start -> end
		forward_reach = {start.node_id}
		for e in self.entries:
			if any(i in forward_reach for i in e.inputs):
				forward_reach.add(e.output)
		backward_reach = {end.node_id}
		on_path: List[str] = []
		for e in reversed(self.entries):
			if e.output in backward_reach:
				backward_reach.update(e.inputs)
				if e.output in forward_reach:
					on_path.append(e.kind)
		return list(reversed(on_path))

	def watch(self, t: Tensor) -> Tensor:
		t.requires_grad = True
		self.leaves[t.node_id] = t
		return t

def active_tape() -> Optional[Tape]:
	stack = _tape_stack()
	return stack[-1] if stack else None

def as_tensor(x, dtype=None) -> Tensor:
	if isinstance(x, Tensor):
		return x
	return Tensor(np.asarray(x, dtype=dtype))

# Wraps a primitive's result; records it only when a tape is active and some input needs a gradient
def record(kind: str, inputs: Sequence[Tensor], out: np.ndarray, backward) -> Tensor:
	if not np.all(np.isfinite(out)):
		if all(np.all(np.isfinite(t.data)) for t in inputs):
			raise NonFiniteError(f"{kind}: produced non-finite values from finite inputs")
	result = Tensor(out)
	tape = active_tape()
	if tape is None or not any(t.requires_grad for t in inputs):
		return result
	for t in inputs:
		if t.requires_grad and t.node_id not in tape.produced:
			tape.leaves[t.node_id] = t
	result.requires_grad = True
	tape.entries.append(TapeEntry(kind, tuple(t.node_id for t in inputs), result.node_id, backward))
	tape.produced.add(result.node_id)
	return result

# Reverse sweep over the tape; fills .grad of every leaf and returns parameter gradients by name
def backward(tape: Tape, loss: Tensor, params: Optional[Iterable[Parameter]] = None) -> Dict[str, np.ndarray]:
	if loss.data.size != 1:
		raise ContractError(f"backward: loss must be scalar, got shape {loss.shape}")

	grads: Dict[int, np.ndarray] = {loss.node_id: np.ones_like(loss.data)}
	for entry in reversed(tape.entries):
		g = grads.pop(entry.output, None)
		if g is None:
			continue
		for nid, gi in zip(entry.inputs, entry.backward(g)):
			if gi is None:
				continue
			prev = grads.get(nid)
			grads[nid] = gi if prev is None else prev + gi

	for nid, leaf in tape.leaves.items():
		g = grads.get(nid)
		leaf.grad = np.zeros_like(leaf.data) if g is None else np.asarray(g, dtype=leaf.data.dtype).reshape(leaf.shape)

	out: Dict[str, np.ndarray] = {}
	if params is None:
		params = [t for t in tape.leaves.values() if isinstance(t, Parameter)]
	for p in params:
		if p.node_id not in tape.leaves:
			p.grad = np.zeros_like(p.data)
		out[p.name] = p.grad
	return out
