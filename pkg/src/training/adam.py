from __future__ import annotations
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional

import numpy as np

from src.autodiff.tensor import Parameter
from src.errors import ConfigError, shape_mismatch

@dataclass(frozen=True)
class OptimConfig:
	lr: float = 1e-3
	beta1: float = 0.9
	beta2: float = 0.999
	eps: float = 1e-8
	lr_decay: float = 1.0   # multiplicative factor applied after every epoch

	def __post_init__(self):
		if self.lr <= 0:
			raise ConfigError(f"optim.lr must be > 0, got {self.lr}")
		if not (0.0 <= self.beta1 < 1.0) or not (0.0 <= self.beta2 < 1.0):
			raise ConfigError(f"optim.beta1/beta2 must be in [0, 1), got {self.beta1}, {self.beta2}")
		if self.eps <= 0:
			raise ConfigError(f"optim.eps must be > 0, got {self.eps}")
		if not (0.0 < self.lr_decay <= 1.0):
			raise ConfigError(f"optim.lr_decay must be in (0, 1], got {self.lr_decay}")

	def lr_at(self, epoch: int) -> float:
		return self.lr * (self.lr_decay ** epoch)

@dataclass
class AdamState:
	config: OptimConfig = field(default_factory=OptimConfig)
	step: int = 0
	m: Dict[str, np.ndarray] = field(default_factory=dict)
	v: Dict[str, np.ndarray] = field(default_factory=dict)
	lr: Optional[float] = None   # current learning rate; None means config.lr

	def current_lr(self) -> float:
		return self.config.lr if self.lr is None else self.lr

	# Flat name -> array view used by the checkpoint writer
	def arrays(self) -> Dict[str, np.ndarray]:
		out: Dict[str, np.ndarray] = {}
		for name in sorted(self.m):
			out[f"m.{name}"] = self.m[name]
			out[f"v.{name}"] = self.v[name]
		return out

	@classmethod
	def from_arrays(cls, config: OptimConfig, step: int, arrays: Dict[str, np.ndarray], lr: Optional[float] = None) -> "AdamState":
		st = cls(config=config, step=step, lr=lr)
		for key, arr in arrays.items():
			slot, name = key.split(".", 1)
			(st.m if slot == "m" else st.v)[name] = np.array(arr)
		return st

def adam_step(params: Iterable[Parameter], grads: Dict[str, np.ndarray], state: AdamState) -> AdamState:
	"""
	Bias-corrected Adam update, in place on every trainable parameter that has a gradient.
	The step counter advances once per call even when all gradients are zero.
	"""
	cfg = state.config
	state.step += 1
	t = state.step
	lr = state.current_lr()
	c1 = 1.0 - cfg.beta1 ** t
	c2 = 1.0 - cfg.beta2 ** t

	for p in params:
		if not p.trainable or p.name not in grads:
			continue
		g = grads[p.name]
		if g.shape != p.shape:
			raise shape_mismatch(f"adam_step: gradient for {p.name}", g.shape, p.shape)
		m = state.m.get(p.name)
		v = state.v.get(p.name)
		if m is None:
			m = np.zeros_like(p.data)
			v = np.zeros_like(p.data)
		m = cfg.beta1 * m + (1.0 - cfg.beta1) * g
		v = cfg.beta2 * v + (1.0 - cfg.beta2) * (g * g)
		state.m[p.name] = m
		state.v[p.name] = v
		m_hat = m / c1
		v_hat = v / c2
		p.data -= (lr * m_hat / (np.sqrt(v_hat) + cfg.eps)).astype(p.dtype, copy=False)
	return state

def zero_grads(params: List[Parameter]) -> None:
	for p in params:
		p.zero_grad()
