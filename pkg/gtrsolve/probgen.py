"""
Random GTRS instances.

Class 1: A positive definite with a prescribed condition number, B indefinite, lambda_hat = 0.
Class 2: C positive definite, B indefinite, A = C - B, lambda_hat = 1.

Each class comes in three flavours. Easy plants a = -(A + lam*B) x0 with lam inside the
definiteness interval; the hard flavours plant lam at the upper endpoint, and the second
hard flavour also puts x0 on the constraint boundary.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Union

import numpy as np

from .config import SolverConfig
from .core import multiplier_interval
from .errors import GenerationError, UsageError
from .models import CaseKind, GtrsProblem, MultiplierInterval
from .sparse import SparseSymmetric, cg_solve

logger = logging.getLogger(__name__)

MAX_RETRIES = 50

SeedLike = Union[int, np.random.SeedSequence]


class GenCase(Enum):
	EASY = "easy"
	HARD1 = "hard1"
	HARD2 = "hard2"


class GenClass(Enum):
	CLASS1 = 1
	CLASS2 = 2


EXPECTED_CASE = {
	GenCase.EASY: CaseKind.BOUNDARY_EASY,
	GenCase.HARD1: CaseKind.HARD_CASE_1,
	GenCase.HARD2: CaseKind.HARD_CASE_2_UPPER,
}


@dataclass(frozen=True)
class GenSpec:
	n: int
	density: float
	cond: float
	case_kind: GenCase = GenCase.EASY
	class_kind: GenClass = GenClass.CLASS1
	seed: int = 0
	identity_b: bool = False  # replace B by I (trust-region special case)

	def validate(self):
		if self.n < 2:
			raise UsageError(f"n must be at least 2, got {self.n}")
		if not 0 <= self.density <= 1:
			raise UsageError(f"density must lie in [0, 1], got {self.density}")
		if not self.cond >= 1:
			raise UsageError(f"cond must be >= 1, got {self.cond}")

	def to_dict(self) -> dict:
		return {
			"n": self.n,
			"density": self.density,
			"cond": self.cond,
			"case": self.case_kind.value,
			"class": self.class_kind.value,
			"seed": self.seed,
			"identity_b": self.identity_b,
		}


@dataclass
class GenArtifact:
	problem: GtrsProblem
	planted_lambda: Optional[float]
	x0: np.ndarray
	expected_case: CaseKind
	spec: Optional[GenSpec] = None
	interval: Optional[MultiplierInterval] = None
	retries: int = 0
	warnings: List[str] = field(default_factory=list)

	def metadata(self) -> Dict:
		meta = {
			"planted_lambda": self.planted_lambda,
			"expected_case": self.expected_case.value,
			"retries": self.retries,
			"warnings": list(self.warnings),
		}
		if self.spec is not None:
			meta.update({f"gen_{k}": v for k, v in self.spec.to_dict().items()})
		return meta


def _effective_density(n: int, density: float, warnings: Optional[List[str]]) -> float:
	if density < 0 or density > 1:
		raise UsageError(f"density must lie in [0, 1], got {density}")
	if density * n * n < n:
		msg = f"density {density:g} gives fewer than n={n} nonzeros; raised to {1.0 / n:g}"
		logger.warning(msg)
		if warnings is not None:
			warnings.append(msg)
		return 1.0 / n
	return density


def _rotate(rows: List[Dict[int, float]], i: int, j: int, c: float, s: float) -> int:
	"""rows <- G rows G^T for the plane rotation G acting on coordinates i, j. Returns the change in nnz."""
	ri, rj = rows[i], rows[j]
	before = len(ri) + len(rj)
	mii, mjj, mij = ri.get(i, 0.0), rj.get(j, 0.0), ri.get(j, 0.0)
	others = (set(ri) | set(rj)) - {i, j}

	new_i: Dict[int, float] = {}
	new_j: Dict[int, float] = {}
	for k in others:
		vi, vj = ri.get(k, 0.0), rj.get(k, 0.0)
		new_i[k] = c * vi - s * vj
		new_j[k] = s * vi + c * vj

	new_i[i] = c * c * mii - 2 * c * s * mij + s * s * mjj
	new_j[j] = s * s * mii + 2 * c * s * mij + c * c * mjj
	off = c * s * (mii - mjj) + (c * c - s * s) * mij
	new_i[j] = off
	new_j[i] = off

	mirrored = 0
	for k in others:
		row = rows[k]
		mirrored -= (i in row) + (j in row)
		for col, new in ((i, new_i[k]), (j, new_j[k])):
			if new != 0.0:
				row[col] = new
			else:
				row.pop(col, None)
		mirrored += (i in row) + (j in row)
	rows[i] = {k: v for k, v in new_i.items() if v != 0.0}
	rows[j] = {k: v for k, v in new_j.items() if v != 0.0}
	return len(rows[i]) + len(rows[j]) - before + mirrored


def _rows_to_matrix(n: int, rows: List[Dict[int, float]]) -> SparseSymmetric:
	r, c, v = [], [], []
	for i, row in enumerate(rows):
		for k in sorted(row):
			if k >= i:
				r.append(i)
				c.append(k)
				v.append(row[k])
	return SparseSymmetric(n, r, c, v)


def rand_sparse_sym(
	n: int,
	density: float,
	cond: Optional[float] = None,
	seed: SeedLike = 0,
	warnings: Optional[List[str]] = None,
) -> SparseSymmetric:
	"""
	Random sparse symmetric matrix.

	With cond: positive definite, eigenvalues log-uniform in [1/cond, 1] with both
	extremes present, spread by up to ceil(n*density*n/2) random plane rotations of
	the diagonal, stopping once the pattern holds density*n*n entries. Without cond:
	indefinite, full random diagonal plus random off-diagonal pairs, values uniform
	in [-1, 1].
	"""
	if n < 1:
		raise UsageError(f"n must be positive, got {n}")
	density = _effective_density(n, density, warnings)
	rng = np.random.default_rng(seed)

	if cond is not None:
		if cond < 1:
			raise UsageError(f"cond must be >= 1, got {cond}")
		spectrum = np.exp(rng.uniform(math.log(1.0 / cond), 0.0, n))
		spectrum[0] = 1.0 / cond
		if n > 1:
			spectrum[1] = 1.0
		spectrum = rng.permutation(spectrum)
		rows: List[Dict[int, float]] = [{i: float(spectrum[i])} for i in range(n)]
		if n > 1:
			rotations = int(math.ceil(n * density * n / 2))
			pairs = rng.integers(0, n, size=(rotations, 2))
			angles = rng.uniform(0.0, 2.0 * math.pi, rotations)
			# rotations merge row patterns, so fill grows faster than one pair per step
			target, nnz = density * n * n, n
			for (i, j), theta in zip(pairs, angles):
				if nnz >= target:
					break
				if i == j:
					continue
				nnz += _rotate(rows, int(i), int(j), math.cos(theta), math.sin(theta))
		return _rows_to_matrix(n, rows)

	diag = rng.uniform(-1.0, 1.0, n)
	target = int(math.ceil((density * n * n - n) / 2))
	target = min(target, n * (n - 1) // 2)
	keys = np.zeros(0, dtype=np.int64)
	while keys.size < target:
		draw = rng.integers(0, n, size=(2 * (target - keys.size) + 8, 2))
		draw = draw[draw[:, 0] != draw[:, 1]]
		lo = np.minimum(draw[:, 0], draw[:, 1])
		hi = np.maximum(draw[:, 0], draw[:, 1])
		keys = np.concatenate([keys, lo * n + hi])
		_, first = np.unique(keys, return_index=True)
		keys = keys[np.sort(first)]
	keys = keys[:target]
	off = rng.uniform(-1.0, 1.0, keys.size)
	idx = np.arange(n)
	return SparseSymmetric(
		n,
		np.concatenate([idx, keys // n]),
		np.concatenate([idx, keys % n]),
		np.concatenate([diag, off]),
	)


def _interval_of(A: SparseSymmetric, B: SparseSymmetric, lam_hat: float, lower: bool, cfg: SolverConfig) -> MultiplierInterval:
	zeros = np.zeros(A.n)
	return multiplier_interval(GtrsProblem(A, B, zeros, zeros, 0.0, lam_hat), cfg, lower=lower, upper=True)


def generate(spec: GenSpec, cfg: Optional[SolverConfig] = None, max_retries: int = MAX_RETRIES) -> GenArtifact:
	"""Build one instance; identical specs give bitwise identical artifacts."""
	spec.validate()
	cfg = cfg or SolverConfig()
	n = spec.n
	warnings: List[str] = []
	seq_a, seq_b, seq_x, seq_s = np.random.SeedSequence(spec.seed).spawn(4)

	M = rand_sparse_sym(n, spec.density, spec.cond, seq_a, warnings)
	if spec.identity_b:
		B = SparseSymmetric.identity(n)
	else:
		B = rand_sparse_sym(n, spec.density, None, seq_b, warnings)

	if spec.class_kind is GenClass.CLASS1:
		A, lam_hat = M, 0.0
	else:
		A, lam_hat = M.combine(B, -1.0), 1.0

	interval = _interval_of(A, B, lam_hat, spec.class_kind is GenClass.CLASS2, cfg)
	hard = spec.case_kind is not GenCase.EASY
	if hard and math.isinf(interval.upper):
		raise GenerationError(
			"hard instances need a finite upper endpoint", {"spec": spec.to_dict(), "upper": "inf"}
		)

	rng_x = np.random.default_rng(seq_x)
	rng_s = np.random.default_rng(seq_s)
	# x_c solves M x = -a: A for class 1, C for class 2
	solve_op = M.as_operator()

	retries = 0
	last: Dict = {}
	for attempt in range(max_retries):
		x0 = rng_x.standard_normal(n) / 10
		if hard:
			lam = interval.upper
		elif spec.class_kind is GenClass.CLASS1:
			lam = rng_s.uniform(0.0, interval.upper if math.isfinite(interval.upper) else 1.0)
		else:
			lo = max(interval.lower, 0.0)
			hi = interval.upper if math.isfinite(interval.upper) else lam_hat + 1.0
			lam = rng_s.uniform(lo, hi)

		a = -((A.csr + lam * B.csr) @ x0)
		x_c, stats = cg_solve(solve_op, -a, tol=1e-13, max_iter=20 * n)
		s = float(x_c @ B.matvec(x_c))
		ell = float(x0 @ B.matvec(x0))
		last = {"attempt": attempt, "lambda": lam, "s": s, "ell": ell, "cg_converged": stats.converged}

		if spec.class_kind is GenClass.CLASS1 or spec.case_kind is GenCase.HARD2:
			ok = s > ell
		else:
			ok = s != ell
		if not ok:
			retries += 1
			logger.debug(f"empty beta interval (s={s:.6g}, ell={ell:.6g}), retrying")
			continue

		if spec.case_kind is GenCase.HARD2:
			beta = -ell
		else:
			beta = rng_s.uniform(*sorted((-s, -ell)))

		problem = GtrsProblem(A, B, a, np.zeros(n), beta, lam_hat)
		if retries:
			warnings.append(f"{retries} retries for a non-empty beta interval")
		return GenArtifact(
			problem=problem,
			planted_lambda=float(lam),
			x0=x0,
			expected_case=EXPECTED_CASE[spec.case_kind],
			spec=spec,
			interval=interval,
			retries=retries,
			warnings=warnings,
		)

	raise GenerationError(f"no valid instance after {max_retries} attempts", {"spec": spec.to_dict(), **last})


def verify_artifact(artifact: GenArtifact, dense_limit: int = 200) -> List[str]:
	"""Structural checks on a generated instance; returns the list of problems found."""
	problems: List[str] = []
	prob = artifact.problem
	S = prob.A.combine(prob.B, prob.lambda_hat)
	if prob.n <= dense_limit:
		if np.linalg.eigvalsh(S.to_dense())[0] <= 0:
			problems.append("A + lambda_hat*B is not positive definite")
	else:
		probe = np.random.default_rng(0).standard_normal(prob.n)
		_, stats = cg_solve(S.as_operator(), probe, tol=1e-8)
		if stats.breakdown:
			problems.append("CG probe found non-positive curvature on A + lambda_hat*B")
	if np.any(prob.b != 0):
		problems.append("b is not zero")
	if artifact.planted_lambda is not None and artifact.interval is not None:
		tol = 1e-8 * max(1.0, abs(artifact.planted_lambda))
		if not artifact.interval.contains(artifact.planted_lambda, tol):
			problems.append("planted lambda lies outside the definiteness interval")
	return problems
