import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional

import numpy as np

from .errors import InputError, UsageError
from .sparse import CgStats, NullBasis, SparseSymmetric

logger = logging.getLogger(__name__)


class CaseKind(Enum):
	"""Classification of a solved instance."""
	INTERIOR = "Interior"
	BOUNDARY_EASY = "BoundaryEasy"
	HARD_CASE_1 = "HardCase1"
	HARD_CASE_2_LOWER = "HardCase2-lower"
	HARD_CASE_2_UPPER = "HardCase2-upper"
	EXACT_AT_LAMBDA_HAT = "ExactAtLambdaHat"

	@property
	def is_hard_case_2(self) -> bool:
		return self in (CaseKind.HARD_CASE_2_LOWER, CaseKind.HARD_CASE_2_UPPER)


class Direction(Enum):
	LOWER = "lower"
	UPPER = "upper"


@dataclass(frozen=True)
class GtrsProblem:
	"""
	min x^T A x + 2 a^T x  s.t.  x^T B x + 2 b^T x + beta <= 0,
	with lambda_hat >= 0 such that A + lambda_hat*B is positive definite.
	"""
	A: SparseSymmetric
	B: SparseSymmetric
	a: np.ndarray
	b: np.ndarray
	beta: float
	lambda_hat: float

	def __post_init__(self):
		a = np.asarray(self.a, dtype=float).ravel()
		b = np.asarray(self.b, dtype=float).ravel()
		object.__setattr__(self, 'a', a)
		object.__setattr__(self, 'b', b)
		object.__setattr__(self, 'beta', float(self.beta))
		object.__setattr__(self, 'lambda_hat', float(self.lambda_hat))

		n = self.A.n
		if self.B.n != n or a.shape[0] != n or b.shape[0] != n:
			raise UsageError(f"dimension mismatch: A={n}, B={self.B.n}, a={a.shape[0]}, b={b.shape[0]}")
		if not (math.isfinite(self.beta) and math.isfinite(self.lambda_hat)):
			raise InputError("beta and lambda_hat must be finite")
		if self.lambda_hat < 0:
			raise InputError(f"lambda_hat must be non-negative, got {self.lambda_hat}")

	@property
	def n(self) -> int:
		return self.A.n

	def _check(self, x) -> np.ndarray:
		x = np.asarray(x, dtype=float).ravel()
		if x.shape[0] != self.n:
			raise UsageError(f"dimension mismatch: problem is {self.n}, vector has length {x.shape[0]}")
		return x

	def q(self, x) -> float:
		"""Objective x^T A x + 2 a^T x."""
		x = self._check(x)
		return float(x @ self.A.matvec(x) + 2.0 * (self.a @ x))

	def g(self, x) -> float:
		"""Constraint x^T B x + 2 b^T x + beta."""
		x = self._check(x)
		return float(x @ self.B.matvec(x) + 2.0 * (self.b @ x) + self.beta)

	def gradient_residual(self, x, lam: float) -> np.ndarray:
		"""(A + lam*B) x + (a + lam*b)."""
		x = self._check(x)
		return self.A.matvec(x) + lam * self.B.matvec(x) + self.a + lam * self.b

	def stationarity(self, x, lam: float) -> float:
		return float(np.linalg.norm(self.gradient_residual(x, lam)))


@dataclass
class MultiplierInterval:
	"""
	Interior of {lam : A + lam*B is PSD}. Endpoints are None until computed,
	and +-inf when the pencil has no eigenvalue on that side.
	"""
	lower: Optional[float] = None
	upper: Optional[float] = None
	eig_low: Optional[float] = None  # lambda_min(-B, A + lambda_hat*B)
	eig_up: Optional[float] = None  # lambda_min(B, A + lambda_hat*B)

	def contains(self, lam: float, tol: float = 0.0) -> bool:
		"""Membership in [lower - tol, upper + tol]; unknown sides are not checked."""
		if self.lower is not None and lam < self.lower - tol:
			return False
		if self.upper is not None and lam > self.upper + tol:
			return False
		return True

	def to_dict(self) -> dict:
		return {
			"lower": _finite_or_str(self.lower),
			"upper": _finite_or_str(self.upper),
			"eig_low": self.eig_low,
			"eig_up": self.eig_up,
		}


def _finite_or_str(v: Optional[float]):
	if v is None or math.isfinite(v):
		return v
	return "inf" if v > 0 else "-inf"


@dataclass(frozen=True)
class KktReport:
	"""Residuals of the global optimality conditions at (x, lam)."""
	stationarity: float
	feasibility: float  # g(x)
	complementarity: float  # |lam * g(x)|
	multiplier_in_interval: bool
	boundary: bool = True

	def criterion(self) -> float:
		"""max{|g(x)|, stationarity} on the boundary; violation of g <= 0 replaces |g| inside."""
		g_part = abs(self.feasibility) if self.boundary else max(self.feasibility, 0.0)
		return max(g_part, self.stationarity)

	def satisfied(self, tol: float) -> bool:
		return self.criterion() < tol and self.multiplier_in_interval

	def to_dict(self) -> dict:
		return {
			"stationarity": self.stationarity,
			"feasibility": self.feasibility,
			"complementarity": self.complementarity,
			"multiplier_in_interval": self.multiplier_in_interval,
			"boundary": self.boundary,
		}


@dataclass
class HardCase2Report:
	"""Outcome of the endpoint test that decides whether lambda* sits at a singular endpoint."""
	endpoint: float
	direction: Direction
	Z: np.ndarray  # Euclidean-orthonormal null basis of A + endpoint*B
	in_range: bool  # a + endpoint*b in Range(A + endpoint*B)
	range_residual: float
	range_tolerance: float
	x_particular: Optional[np.ndarray] = None
	y_star: Optional[np.ndarray] = None
	p_star: Optional[float] = None
	is_hard_case_2: bool = False
	naive_g: Optional[float] = None  # g(x_particular), the verdict of the pseudo-inverse-only test
	null: Optional[NullBasis] = None
	borderline: bool = False

	@property
	def x_extremal(self) -> Optional[np.ndarray]:
		"""x_particular + Z y*, the point where g attains p*."""
		if self.x_particular is None or self.y_star is None:
			return None
		return self.x_particular + self.Z @ self.y_star

	@property
	def naive_verdict(self) -> Optional[bool]:
		"""What testing g(x_particular) alone would conclude."""
		if self.naive_g is None:
			return None
		if self.direction is Direction.LOWER:
			return self.naive_g <= 0
		return self.naive_g >= 0

	def to_dict(self) -> dict:
		return {
			"endpoint": self.endpoint,
			"direction": self.direction.value,
			"rank": int(self.Z.shape[1]),
			"in_range": self.in_range,
			"range_residual": self.range_residual,
			"p_star": self.p_star,
			"naive_g": self.naive_g,
			"is_hard_case_2": self.is_hard_case_2,
			"borderline": self.borderline,
		}


@dataclass(frozen=True)
class PhiEvaluation:
	"""One evaluation of the secular function."""
	lam: float
	phi: float
	x: np.ndarray
	stats: CgStats
	regularized: bool = False


@dataclass
class TraceEntry:
	lam: float
	phi: float
	kind: str  # "lambda_hat", "interior", "double", "bisect", "interp", "refine"
	cg_iterations: int = 0
	regularized: bool = False
	lo: Optional[float] = None
	hi: Optional[float] = None
	incumbent_q: Optional[float] = None

	def to_dict(self) -> dict:
		return {
			"lam": self.lam,
			"phi": self.phi,
			"kind": self.kind,
			"cg_iterations": self.cg_iterations,
			"regularized": self.regularized,
			"lo": self.lo,
			"hi": self.hi,
			"incumbent_q": self.incumbent_q,
		}


@dataclass
class WorkCounter:
	"""Running totals of linear algebra work."""
	matvecs: int = 0
	cg_runs: int = 0
	cg_iterations: int = 0

	def add_cg(self, stats: CgStats):
		self.cg_runs += 1
		self.cg_iterations += stats.iterations
		self.matvecs += stats.matvecs

	def add_matvecs(self, count: int):
		self.matvecs += count


@dataclass
class GtrsOutcome:
	x_star: np.ndarray
	lambda_star: float
	case: CaseKind
	kkt: KktReport
	best_objective: float
	success: bool = False
	trace: List[TraceEntry] = field(default_factory=list)
	interval: Optional[MultiplierInterval] = None
	hard_case: Optional[HardCase2Report] = None
	timings: Dict[str, float] = field(default_factory=dict)
	work: WorkCounter = field(default_factory=WorkCounter)
	secular_iterations: int = 0
	flags: List[str] = field(default_factory=list)
	warnings: List[str] = field(default_factory=list)

	def add_flag(self, flag: str, message: Optional[str] = None):
		if flag not in self.flags:
			self.flags.append(flag)
		if message:
			self.add_warning(message)

	def add_warning(self, warn: str):
		logger.warning(warn)
		self.warnings.append(warn)
