"""
Dense reference solver for small instances.

With S = A + lambda_hat*B positive definite, Q = S^{-1/2} U diagonalizes both
matrices: Q^T B Q = diag(e), Q^T A Q = diag(d) with d = 1 - lambda_hat*e. In these
coordinates phi is an explicit sum, so the multiplier can be found by plain
bisection to near machine precision and the endpoint tests become exact
coordinate checks.
"""

import logging
import math
from dataclasses import dataclass
from typing import NamedTuple, Optional, Tuple

import numpy as np
import scipy.linalg

from .config import SolverConfig
from .core import kkt_residual
from .errors import InputError, OracleSizeError
from .models import CaseKind, Direction, GtrsOutcome, GtrsProblem, MultiplierInterval

logger = logging.getLogger(__name__)

BISECTION_WIDTH = 1e-14


@dataclass
class SimDiag:
	Q: np.ndarray
	d: np.ndarray
	e: np.ndarray

	def reconstruct(self) -> Tuple[np.ndarray, np.ndarray]:
		"""(A, B) rebuilt as Q^{-T} diag(d) Q^{-1} and Q^{-T} diag(e) Q^{-1}."""
		Qinv = np.linalg.inv(self.Q)
		return Qinv.T @ np.diag(self.d) @ Qinv, Qinv.T @ np.diag(self.e) @ Qinv


def simdiag(A: np.ndarray, B: np.ndarray, lambda_hat: float) -> SimDiag:
	"""Simultaneous diagonalization through S = A + lambda_hat*B."""
	A = np.asarray(A, dtype=float)
	B = np.asarray(B, dtype=float)
	S = A + lambda_hat * B
	s, V = scipy.linalg.eigh(0.5 * (S + S.T))
	if s.size and s[0] <= 0:
		raise InputError(f"A + lambda_hat*B is not positive definite (smallest eigenvalue {s[0]:.3e})")
	S_inv_half = (V / np.sqrt(s)) @ V.T
	M = S_inv_half @ B @ S_inv_half
	e, U = scipy.linalg.eigh(0.5 * (M + M.T))
	Q = S_inv_half @ U
	return SimDiag(Q, 1.0 - lambda_hat * e, e)


class Accuracy(NamedTuple):
	value: float
	absolute: bool  # |q_best| too small for a relative difference


def accuracy(q_x_star: float, q_x_best: float) -> Accuracy:
	"""(q(x*) - q(x_best)) / |q(x_best)|, or the plain difference when q(x_best) is ~0."""
	diff = q_x_star - q_x_best
	if abs(q_x_best) < 1e-300:
		return Accuracy(diff, True)
	return Accuracy(diff / abs(q_x_best), False)


class _Coordinates:
	"""The problem in simultaneous-diagonalization coordinates x = Q y."""

	def __init__(self, prob: GtrsProblem, sd: SimDiag):
		self.prob = prob
		self.sd = sd
		self.alpha = sd.Q.T @ prob.a
		self.bq = sd.Q.T @ prob.b
		self.scale = max(1.0, float(np.max(np.abs(sd.d))), float(np.max(np.abs(sd.e))))

	def y(self, lam: float) -> np.ndarray:
		return -(self.alpha + lam * self.bq) / (self.sd.d + lam * self.sd.e)

	def g(self, y: np.ndarray) -> float:
		return float(np.sum(self.sd.e * y * y) + 2.0 * (self.bq @ y) + self.prob.beta)

	def phi(self, lam: float) -> float:
		return self.g(self.y(lam))

	def x(self, y: np.ndarray) -> np.ndarray:
		return self.sd.Q @ y

	def singular(self, lam: float) -> np.ndarray:
		return np.abs(self.sd.d + lam * self.sd.e) <= 1e-12 * self.scale * max(1.0, abs(lam))

	def endpoint_extremum(self, lam: float) -> Tuple[bool, Optional[np.ndarray]]:
		"""Range test at a singular lam and, if consistent, the y extremizing g over the solution set."""
		J = self.singular(lam)
		rhs = self.alpha + lam * self.bq
		tol = 1e-10 * (1.0 + float(np.linalg.norm(rhs)))
		if np.any(np.abs(rhs[J]) > tol):
			return False, None
		y = np.zeros_like(rhs)
		free = ~J
		y[free] = -rhs[free] / (self.sd.d[free] + lam * self.sd.e[free])
		y[J] = -self.bq[J] / self.sd.e[J]
		return True, y


def interval_from_simdiag(sd: SimDiag) -> MultiplierInterval:
	pos = sd.e > 0
	neg = sd.e < 0
	lower = float(np.max(-sd.d[pos] / sd.e[pos])) if np.any(pos) else -math.inf
	upper = float(np.min(-sd.d[neg] / sd.e[neg])) if np.any(neg) else math.inf
	return MultiplierInterval(lower=lower, upper=upper)


def _bisect(coords: _Coordinates, lo: float, hi: float) -> float:
	"""Root of the non-increasing phi on (lo, hi)."""
	for _ in range(400):
		if hi - lo <= BISECTION_WIDTH * max(abs(lo) + abs(hi), 1e-300):
			break
		mid = 0.5 * (lo + hi)
		if mid <= lo or mid >= hi:
			break
		val = coords.phi(mid)
		if val > 0:
			lo = mid
		elif val < 0:
			hi = mid
		else:
			return mid
	return 0.5 * (lo + hi)


def dense_solve(
	prob: GtrsProblem,
	cfg: Optional[SolverConfig] = None,
	max_n: Optional[int] = None,
) -> GtrsOutcome:
	"""Globally optimal solution by simultaneous diagonalization."""
	cfg = cfg or SolverConfig()
	max_n = cfg.dense_threshold if max_n is None else max_n
	if prob.n > max_n:
		raise OracleSizeError(f"dense oracle refuses n={prob.n} > {max_n}")

	sd = simdiag(prob.A.to_dense(), prob.B.to_dense(), prob.lambda_hat)
	coords = _Coordinates(prob, sd)
	interval = interval_from_simdiag(sd)
	lam_hat = prob.lambda_hat

	def finish(y: np.ndarray, lam: float, case: CaseKind) -> GtrsOutcome:
		x = coords.x(y)
		kkt = kkt_residual(prob, x, lam, interval, cfg.kkt_tol)
		outcome = GtrsOutcome(x, lam, case, kkt, prob.q(x), interval=interval)
		outcome.success = kkt.satisfied(cfg.kkt_tol)
		logger.debug(f"oracle: case {case.value}, lambda*={lam:.17g}, q*={outcome.best_objective:.17g}")
		return outcome

	phi_hat = coords.phi(lam_hat)
	if abs(phi_hat) <= cfg.phi_tol * (1.0 + abs(prob.beta)):
		return finish(coords.y(lam_hat), lam_hat, CaseKind.EXACT_AT_LAMBDA_HAT)

	if phi_hat < 0 and interval.lower < 0:
		y0 = coords.y(0.0)
		if coords.g(y0) <= 0:
			return finish(y0, 0.0, CaseKind.INTERIOR)
		lam = _bisect(coords, 0.0, lam_hat)
		return finish(coords.y(lam), lam, CaseKind.BOUNDARY_EASY)

	direction = Direction.UPPER if phi_hat > 0 else Direction.LOWER
	endpoint = interval.upper if direction is Direction.UPPER else interval.lower

	in_range = False
	if math.isfinite(endpoint):
		in_range, y_ext = coords.endpoint_extremum(endpoint)
		if in_range:
			p_star = coords.g(y_ext)
			tol = cfg.p_star_tol * (1.0 + abs(prob.beta))
			hard2 = p_star <= tol if direction is Direction.LOWER else p_star >= -tol
			if hard2:
				case = CaseKind.HARD_CASE_2_LOWER if direction is Direction.LOWER else CaseKind.HARD_CASE_2_UPPER
				return finish(_boundary_coordinates(coords, y_ext, endpoint, p_star), endpoint, case)

	case = CaseKind.HARD_CASE_1 if in_range else CaseKind.BOUNDARY_EASY
	if direction is Direction.UPPER:
		lo = lam_hat
		hi = endpoint
		if math.isinf(hi):
			hi = lam_hat + max(1.0, abs(lam_hat))
			for _ in range(cfg.doubling_cap):
				if coords.phi(hi) <= 0:
					break
				lo, hi = hi, lam_hat + 2.0 * (hi - lam_hat)
	else:
		lo, hi = endpoint, lam_hat
	lam = _bisect(coords, lo, hi)
	return finish(coords.y(lam), lam, case)


def _boundary_coordinates(coords: _Coordinates, y_ext: np.ndarray, endpoint: float, p_star: float) -> np.ndarray:
	"""Move along a singular coordinate until g = 0; both signs give the same q, keep the smaller norm."""
	J = np.flatnonzero(coords.singular(endpoint))
	j = J[0]
	e_j = coords.sd.e[j]
	t = math.sqrt(max(-p_star / e_j, 0.0))
	candidates = []
	for sign in (1.0, -1.0):
		y = y_ext.copy()
		y[j] += sign * t
		candidates.append((float(np.linalg.norm(coords.x(y))), sign, y))
	return min(candidates, key=lambda c: (c[0], -c[1]))[2]


def classify(prob: GtrsProblem, cfg: Optional[SolverConfig] = None) -> CaseKind:
	return dense_solve(prob, cfg).case
