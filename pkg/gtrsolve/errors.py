"""
Exception hierarchy for the GTRS solver.

Every error carries a human readable message and, when raised from inside
the driver, the name of the phase that failed.
"""

from typing import Any, Dict, Optional


class GtrsError(Exception):
	"""Base class for all solver errors."""
	def __init__(self, message: str, phase: Optional[str] = None):
		self.message = message
		self.phase = phase
		super().__init__(self._format())

	def _format(self) -> str:
		if self.phase:
			return f"[{self.phase}] {self.message}"
		return self.message

	def with_phase(self, phase: str) -> 'GtrsError':
		"""Attach a driver phase if none is set yet."""
		if self.phase is None:
			self.phase = phase
			self.args = (self._format(),)
		return self


class UsageError(GtrsError, ValueError):
	"""Dimension mismatch or invalid parameter."""


class InputError(GtrsError):
	"""The problem data violates a precondition of the solver."""


class BundleError(InputError):
	"""A problem bundle file is missing or cannot be parsed."""
	def __init__(self, message: str, path: Optional[str] = None):
		self.path = path
		super().__init__(f"{path}: {message}" if path else message)


class OutsideIntervalError(GtrsError):
	"""CG met a non-positive curvature direction: lambda is outside the definiteness interval."""
	def __init__(self, lam: float, message: str = "lambda outside definiteness interval"):
		self.lam = lam
		super().__init__(f"{message} (lambda={lam:.17g})")


class InconsistencyError(GtrsError):
	"""A numerical certificate computed earlier in the solve was contradicted."""


class EigenSolverError(GtrsError):
	"""The generalized eigensolver did not reach the requested tolerance."""
	def __init__(self, message: str, best: Any = None):
		self.best = best
		super().__init__(message)


class EndpointNotSingularError(GtrsError):
	"""No eigenvalue of the endpoint pencil fell below the rank cut-off."""
	def __init__(self, endpoint: Optional[float] = None, smallest: Optional[float] = None):
		self.endpoint = endpoint
		self.smallest = smallest
		super().__init__(f"endpoint not numerically singular (endpoint={endpoint}, smallest eigenvalue={smallest})")


class SecularMaxIterError(GtrsError):
	"""The secular iteration ran out of iterations. Carries the best pair found."""
	def __init__(self, message: str, lam: float, x: Any, trace: Any):
		self.lam = lam
		self.x = x
		self.trace = trace
		super().__init__(message)


class ConstantPhiError(GtrsError):
	"""phi takes the same value at two well separated points."""
	def __init__(self, value: float):
		self.value = value
		super().__init__(f"phi is constant on the interval (phi={value:.6g})")


class GenerationError(GtrsError):
	"""The problem generator exhausted its retry budget."""
	def __init__(self, message: str, diagnostics: Optional[Dict[str, Any]] = None):
		self.diagnostics = diagnostics or {}
		super().__init__(message)


class OracleSizeError(UsageError):
	"""The dense oracle refuses problems above its size threshold."""
