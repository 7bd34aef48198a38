from __future__ import annotations
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from src.autodiff import ops
from src.autodiff.tensor import Parameter, Tensor

# Minimal module tree: parameters, buffers and children are discovered from attributes in definition order
class Module:
	training: bool = True

	def forward(self, x):
		raise NotImplementedError

	def __call__(self, *args, **kwargs):
		return self.forward(*args, **kwargs)

	def children(self) -> Iterator[Tuple[str, "Module"]]:
		for key, val in vars(self).items():
			if isinstance(val, Module):
				yield key, val

	def named_parameters(self, prefix: str = "") -> List[Tuple[str, Parameter]]:
		out: List[Tuple[str, Parameter]] = []
		for key, val in vars(self).items():
			if isinstance(val, Parameter):
				out.append((prefix + key, val))
			elif isinstance(val, Module):
				out.extend(val.named_parameters(prefix + key + "."))
		return out

	def parameters(self) -> List[Parameter]:
		return [p for _, p in self.named_parameters()]

	def named_buffers(self, prefix: str = "") -> List[Tuple[str, np.ndarray]]:
		out: List[Tuple[str, np.ndarray]] = []
		for key, val in self.children():
			out.extend(val.named_buffers(prefix + key + "."))
		return out

	def load_buffers(self, buffers: Dict[str, np.ndarray], prefix: str = "") -> None:
		for key, val in self.children():
			val.load_buffers(buffers, prefix + key + ".")

	# Writes the dotted path into every Parameter.name
	def assign_names(self, prefix: str = "") -> "Module":
		for name, p in self.named_parameters(prefix):
			p.name = name
		return self

	def train(self, mode: bool = True) -> "Module":
		self.training = mode
		for _, child in self.children():
			child.train(mode)
		return self

	def eval(self) -> "Module":
		return self.train(False)

	def set_trainable(self, flag: bool) -> None:
		for p in self.parameters():
			p.set_trainable(flag)

	def parameter_count(self) -> int:
		return int(sum(p.size for p in self.parameters()))

class Sequential(Module):
	def __init__(self, layers: Sequence[Tuple[str, Module]] = ()):
		self._order: List[str] = []
		for name, layer in layers:
			setattr(self, name, layer)
			self._order.append(name)

	def __len__(self) -> int:
		return len(self._order)

	def __iter__(self):
		return (getattr(self, n) for n in self._order)

	def forward(self, x):
		for layer in self:
			x = layer(x)
		return x

class Identity(Module):
	def forward(self, x):
		return x

def _uniform(rng: np.random.Generator, bound: float, shape, dtype) -> np.ndarray:
	return rng.uniform(-bound, bound, size=shape).astype(dtype)

class Affine(Module):
	def __init__(self, n_in: int, n_out: int, rng: np.random.Generator, dtype=np.float64):
		bound = 1.0 / np.sqrt(n_in)
		self.weight = Parameter(_uniform(rng, bound, (n_out, n_in), dtype))
		self.bias = Parameter(_uniform(rng, bound, (n_out,), dtype))

	def forward(self, x: Tensor) -> Tensor:
		return ops.affine(x, self.weight, self.bias)

class Conv3x3(Module):
	def __init__(self, c_in: int, c_out: int, rng: np.random.Generator, dtype=np.float64):
		bound = 1.0 / np.sqrt(c_in * 9)
		self.weight = Parameter(_uniform(rng, bound, (c_out, c_in, 3, 3), dtype))
		self.bias = Parameter(_uniform(rng, bound, (c_out,), dtype))

	def forward(self, x: Tensor) -> Tensor:
		return ops.conv2d(x, self.weight, self.bias)

class PReLU(Module):
	def __init__(self, init: float = 0.25, dtype=np.float64):
		self.slope = Parameter(np.array([init], dtype=dtype))

	def forward(self, x: Tensor) -> Tensor:
		return ops.prelu(x, self.slope)

class ReLU(Module):
	def forward(self, x: Tensor) -> Tensor:
		return ops.relu(x)

class BatchNorm2d(Module):
	def __init__(self, channels: int, dtype=np.float64, momentum: float = 0.1, eps: float = 1e-5):
		self.gamma = Parameter(np.ones(channels, dtype=dtype))
		self.beta = Parameter(np.zeros(channels, dtype=dtype))
		self.state = ops.BatchNormState(channels, momentum=momentum, eps=eps, dtype=dtype)

	def forward(self, x: Tensor) -> Tensor:
		return ops.batchnorm2d(x, self.gamma, self.beta, self.state, self.training)

	def named_buffers(self, prefix: str = "") -> List[Tuple[str, np.ndarray]]:
		return [(prefix + "running_mean", self.state.running_mean), (prefix + "running_var", self.state.running_var)]

	def load_buffers(self, buffers: Dict[str, np.ndarray], prefix: str = "") -> None:
		self.state.running_mean = np.array(buffers[prefix + "running_mean"], dtype=self.gamma.dtype)
		self.state.running_var = np.array(buffers[prefix + "running_var"], dtype=self.gamma.dtype)

class AvgPool2(Module):
	def forward(self, x: Tensor) -> Tensor:
		return ops.avgpool2(x)

class Upsample2(Module):
	def forward(self, x: Tensor) -> Tensor:
		return ops.upsample_bilinear2(x)

def make_activation(kind: str, dtype=np.float64) -> Module:
	if kind == "prelu":
		return PReLU(dtype=dtype)
	if kind == "relu":
		return ReLU()
	raise ValueError(f"unknown activation {kind!r} (expected 'relu' or 'prelu')")
