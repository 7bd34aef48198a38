# Exception types shared across the packages; all derive from the built-ins the code raised before
from __future__ import annotations
from typing import Optional

class DimensionError(ValueError):
	pass

class DegenerateBatchError(DimensionError):
	pass

class ContractError(ValueError):
	pass

class NonFiniteError(ArithmeticError):
	pass

class ConfigError(ValueError):
	pass

class IdxFormatError(ValueError):
	pass

class CheckpointError(ValueError):
	pass

class DivergenceError(RuntimeError):
	def __init__(self, message: str, last_checkpoint: Optional[str] = None):
		super().__init__(message)
		self.last_checkpoint = last_checkpoint

def shape_mismatch(what: str, a, b) -> DimensionError:
	return DimensionError(f"{what}: shapes {tuple(a)} and {tuple(b)} do not agree")
