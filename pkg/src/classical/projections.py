from __future__ import annotations
import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Union

import numpy as np
from tqdm import tqdm

from src.errors import ContractError, shape_mismatch
from src.fourier.dft import ZERO_MAG, fft2, ifft2

log = logging.getLogger(__name__)

@dataclass(frozen=True, eq=False)
class Constraints:
	real: bool = True
	nonneg: bool = True
	support: Optional[np.ndarray] = None

	@classmethod
	def none(cls) -> "Constraints":
		return cls(real=False, nonneg=False, support=None)

	def project(self, z: np.ndarray) -> np.ndarray:
		out = np.real(z).copy() if (self.real or self.nonneg) else z.copy()
		if self.nonneg:
			out[out < 0] = 0.0
		if self.support is not None:
			out[~self.support] = 0.0
		return out

	# True where a real estimate already satisfies the object-domain constraints
	def satisfied(self, x: np.ndarray) -> np.ndarray:
		ok = np.ones(x.shape, dtype=bool)
		if self.nonneg:
			ok &= x >= 0
		if self.support is not None:
			ok &= self.support
		return ok

@dataclass
class IterState:
	x: np.ndarray
	iteration: int = 0
	residuals: List[float] = field(default_factory=list)

	def is_monotone(self, tol: float = 1e-9) -> bool:
		r = self.residuals
		return all(r[i + 1] <= r[i] + tol for i in range(len(r) - 1))

def magnitude_residual(x: np.ndarray, omega: np.ndarray) -> float:
	return float(np.linalg.norm(np.abs(fft2(x)) - omega))

# Steps (i)-(iii): transform, keep phase, impose the measured magnitude, transform back
def substitute_magnitude(x: np.ndarray, omega: np.ndarray) -> np.ndarray:
	F = fft2(x)
	mag = np.abs(F)
	unit = np.where(mag >= ZERO_MAG, F / np.where(mag >= ZERO_MAG, mag, 1.0), 1.0)
	return ifft2(omega * unit)

def random_phase_init(omega: np.ndarray, seed: Union[int, Sequence[int]] = 0) -> np.ndarray:
	rng = np.random.default_rng(seed)
	phi = rng.uniform(-np.pi, np.pi, size=omega.shape)
	return np.real(ifft2(omega * np.exp(1j * phi)))

def _validate(omega: np.ndarray, x0: np.ndarray, iters: int) -> None:
	if iters <= 0:
		raise ContractError(f"iters must be positive, got {iters}")
	if np.any(omega < 0):
		raise ContractError("measured magnitude must be elementwise non-negative")
	if omega.shape != x0.shape:
		raise shape_mismatch("initial estimate vs measurement grid", x0.shape, omega.shape)

def error_reduction(
	omega: np.ndarray,
	x0: np.ndarray,
	iters: int,
	constraints: Constraints = Constraints(),
	progress: bool = False,
) -> IterState:
	omega = np.asarray(omega, dtype=np.float64)
	x0 = np.asarray(x0)
	_validate(omega, x0, iters)

	state = IterState(x=x0.copy())
	for _ in tqdm(range(iters), desc="error-reduction", disable=not progress, leave=False):
		x_tilde = substitute_magnitude(state.x, omega)
		state.x = constraints.project(x_tilde)
		state.iteration += 1
		state.residuals.append(magnitude_residual(state.x, omega))
	return state

# Hybrid input-output: inside the constraint set take the new estimate, outside feed back x_k - beta * x_tilde.
# Residuals are not guaranteed to decrease.
def hio(
	omega: np.ndarray,
	x0: np.ndarray,
	beta: float = 0.9,
	iters: int = 500,
	support: Optional[np.ndarray] = None,
	nonneg: bool = True,
	progress: bool = False,
) -> IterState:
	if not (0.0 < beta <= 1.0):
		raise ContractError(f"hio: beta must be in (0, 1], got {beta}")
	omega = np.asarray(omega, dtype=np.float64)
	x0 = np.asarray(x0, dtype=np.float64)
	_validate(omega, x0, iters)
	constraints = Constraints(real=True, nonneg=nonneg, support=support)

	state = IterState(x=x0.copy())
	for _ in tqdm(range(iters), desc="hio", disable=not progress, leave=False):
		x_tilde = np.real(substitute_magnitude(state.x, omega))
		ok = constraints.satisfied(x_tilde)
		state.x = np.where(ok, x_tilde, state.x - beta * x_tilde)
		state.iteration += 1
		state.residuals.append(magnitude_residual(state.x, omega))
	return state

# ||F(x) - omega * phi||^2 for unit-modulus phi
def phasecut_objective(x: np.ndarray, phi: np.ndarray, omega: np.ndarray) -> float:
	phi = np.asarray(phi)
	if np.max(np.abs(np.abs(phi) - 1.0)) > 1e-9:
		raise ContractError("phasecut_objective: phi must have unit modulus elementwise")
	r = fft2(np.asarray(x)) - np.asarray(omega) * phi
	return float(np.sum(np.abs(r) ** 2))
