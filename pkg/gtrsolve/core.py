"""
The GTRS solver: definiteness interval, case dispatch on phi(lambda_hat),
hard-case-2 detection with the boundary step, regularized solves near a
singular endpoint, KKT certification and Newton refinement.
"""

import logging
import math
import time
from contextlib import contextmanager
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from .config import SolverConfig
from .errors import (
	ConstantPhiError, GtrsError, InconsistencyError, InputError,
	OutsideIntervalError, SecularMaxIterError,
)
from .models import (
	CaseKind, Direction, GtrsOutcome, GtrsProblem, HardCase2Report, KktReport,
	MultiplierInterval, PhiEvaluation, TraceEntry, WorkCounter,
)
from .secular import Bracket, solve_secular
from .sparse import (
	CgStats, as_operator, cg_solve, complement_projector, estimate_norm,
	low_rank_update, min_gen_eig, nullspace_basis, pencil_operator,
)

logger = logging.getLogger(__name__)


# --- Quadratic forms ---

def eval_g(prob: GtrsProblem, x: np.ndarray) -> float:
	return prob.g(x)


def eval_q(prob: GtrsProblem, x: np.ndarray) -> float:
	return prob.q(x)


# --- Definiteness interval ---

def _eig_kwargs(cfg: SolverConfig) -> dict:
	return dict(
		tol=cfg.eig_tol, max_iter=cfg.eig_max_iter, krylov_dim=cfg.eig_krylov_dim,
		seed=cfg.seed, norm_iters=cfg.eig_norm_iters, dense_limit=cfg.eig_dense_limit,
	)


def multiplier_interval(
	prob: GtrsProblem,
	cfg: Optional[SolverConfig] = None,
	lower: bool = True,
	upper: bool = True,
	interval: Optional[MultiplierInterval] = None,
	counter: Optional[WorkCounter] = None,
) -> MultiplierInterval:
	"""
	Endpoints of the definiteness interval from the smallest eigenvalues of the pencils
	(-B, S) and (B, S), S = A + lambda_hat*B. Only the requested sides are computed;
	pass an existing interval to fill in a missing side.
	"""
	cfg = cfg or SolverConfig()
	interval = interval or MultiplierInterval()
	S = pencil_operator(prob.A, prob.B, prob.lambda_hat)
	lam_hat = prob.lambda_hat

	# pencil eigenvalues carry units of ||B|| / ||S||
	b_norm = estimate_norm(prob.B, cfg.eig_norm_iters, cfg.seed)
	s_norm = estimate_norm(S, cfg.eig_norm_iters, cfg.seed)
	threshold = cfg.eig_tol * (b_norm / s_norm if s_norm > 0 else b_norm)

	if lower and interval.lower is None:
		eig = min_gen_eig(as_operator(-prob.B.csr), S, k=1, **_eig_kwargs(cfg))
		if counter is not None:
			counter.add_matvecs(eig.matvecs)
		mu = float(eig.values[0])
		interval.eig_low = mu
		interval.lower = lam_hat + 1.0 / mu if mu < -threshold else -math.inf
		logger.debug(f"lambda_min(-B, S) = {mu:.17g} -> lower = {interval.lower}")

	if upper and interval.upper is None:
		eig = min_gen_eig(prob.B.as_operator(), S, k=1, **_eig_kwargs(cfg))
		if counter is not None:
			counter.add_matvecs(eig.matvecs)
		mu = float(eig.values[0])
		interval.eig_up = mu
		interval.upper = lam_hat - 1.0 / mu if mu < -threshold else math.inf
		logger.debug(f"lambda_min(B, S) = {mu:.17g} -> upper = {interval.upper}")

	return interval


# --- phi evaluation ---

def eval_phi(
	prob: GtrsProblem,
	lam: float,
	cfg: Optional[SolverConfig] = None,
	x0: Optional[np.ndarray] = None,
) -> Tuple[float, np.ndarray, CgStats]:
	"""
	phi(lam) = g(x(lam)) with x(lam) solving (A + lam*B) x = -(a + lam*b) by CG.
	Raises OutsideIntervalError when CG meets non-positive curvature.
	"""
	cfg = cfg or SolverConfig()
	op = pencil_operator(prob.A, prob.B, lam)
	rhs = -(prob.a + lam * prob.b)
	x, stats = cg_solve(op, rhs, cfg.cg_tol, cfg.cg_iterations(prob.n), x0)
	if stats.breakdown:
		raise OutsideIntervalError(lam)
	if not stats.converged:
		logger.warning(f"CG did not converge at lambda={lam:.17g} (residual {stats.final_residual_norm:.3e})")
	return prob.g(x), x, stats


def phi_derivative(
	prob: GtrsProblem,
	lam: float,
	x: np.ndarray,
	cfg: Optional[SolverConfig] = None,
) -> Tuple[float, CgStats]:
	"""phi'(lam) = -2 w^T (A + lam*B)^{-1} w with w = B x(lam) + b."""
	cfg = cfg or SolverConfig()
	w = prob.B.matvec(x) + prob.b
	u, stats = cg_solve(pencil_operator(prob.A, prob.B, lam), w, cfg.cg_tol, cfg.cg_iterations(prob.n))
	if stats.breakdown:
		raise OutsideIntervalError(lam)
	return -2.0 * float(w @ u), stats


# --- KKT ---

def kkt_residual(
	prob: GtrsProblem,
	x: np.ndarray,
	lam: float,
	interval: Optional[MultiplierInterval] = None,
	tol: float = 1e-8,
) -> KktReport:
	"""Residuals of the optimality conditions at (x, lam)."""
	g = prob.g(x)
	stationarity = prob.stationarity(x, lam)
	in_interval = lam >= -tol
	if interval is not None:
		in_interval = in_interval and interval.contains(lam, tol * max(1.0, abs(lam)))
	boundary = not (lam == 0.0 and g < 0.0)
	return KktReport(stationarity, g, abs(lam * g), in_interval, boundary)


# --- Interior solutions ---

def check_interior(prob: GtrsProblem, cfg: Optional[SolverConfig] = None) -> Tuple[Optional[GtrsOutcome], np.ndarray, CgStats]:
	"""
	Solve A x = -a; if g(x) <= 0 the unconstrained minimizer is optimal.
	Only meaningful once A has been certified positive definite (lower endpoint < 0).
	Also returns x and the CG stats so the caller can reuse phi(0) = g(x).
	"""
	cfg = cfg or SolverConfig()
	x, stats = cg_solve(prob.A, -prob.a, cfg.cg_tol, cfg.cg_iterations(prob.n))
	if stats.breakdown:
		raise InconsistencyError("CG breakdown on A although the interval certified A positive definite")
	g = prob.g(x)
	if g <= 0:
		kkt = kkt_residual(prob, x, 0.0)
		return GtrsOutcome(x, 0.0, CaseKind.INTERIOR, kkt, prob.q(x)), x, stats
	return None, x, stats


# --- Hard case 2 ---

def detect_hard_case2(
	prob: GtrsProblem,
	endpoint: float,
	direction: Direction,
	cfg: Optional[SolverConfig] = None,
	counter: Optional[WorkCounter] = None,
) -> HardCase2Report:
	"""
	Decide whether lambda* equals a finite endpoint of the definiteness interval.

	The endpoint system (A + lam_e*B) x = -(a + lam_e*b) must be consistent; then
	p* is the extremal value of g over its solution set, a minimum at the lower
	endpoint and a maximum at the upper one. Hard case 2 holds iff p* <= 0 at the
	lower endpoint, resp. p* >= 0 at the upper one.
	"""
	cfg = cfg or SolverConfig()
	P = pencil_operator(prob.A, prob.B, endpoint)
	S = pencil_operator(prob.A, prob.B, prob.lambda_hat)
	null = nullspace_basis(
		P, S, tol=cfg.null_rank_tol, max_dim=cfg.null_max_dim, eig_tol=cfg.eig_tol,
		max_iter=cfg.eig_max_iter, krylov_dim=cfg.eig_krylov_dim, seed=cfg.seed,
		norm_iters=cfg.eig_norm_iters, dense_limit=cfg.eig_dense_limit,
	)
	Z = null.orthonormal
	c = prob.a + endpoint * prob.b
	range_residual = float(np.linalg.norm(Z.T @ c))
	range_tol = cfg.range_tol * (1.0 + float(np.linalg.norm(c)))
	in_range = range_residual <= range_tol
	borderline = 0.1 * range_tol <= range_residual <= 10.0 * range_tol
	report = HardCase2Report(endpoint, direction, Z, in_range, range_residual, range_tol, null=null, borderline=borderline)
	logger.info(f"endpoint {direction.value}={endpoint:.17g}: null rank {Z.shape[1]}, range residual {range_residual:.3e} (tol {range_tol:.3e})")
	if borderline:
		logger.warning(f"range test at {direction.value} endpoint is borderline ({range_residual:.3e} vs {range_tol:.3e})")
	if not in_range:
		return report

	# pseudo-inverse solution by CG deflated against the null space
	x_p, stats = cg_solve(P, -c, cfg.cg_tol, cfg.cg_iterations(prob.n), projector=complement_projector(Z))
	if counter is not None:
		counter.add_cg(stats)
	if stats.breakdown:
		raise InconsistencyError("deflated CG met non-positive curvature at the endpoint")
	if not stats.converged:
		logger.warning(f"deflated CG did not converge (residual {stats.final_residual_norm:.3e})")
	report.x_particular = x_p
	report.naive_g = prob.g(x_p)

	BZ = np.column_stack([prob.B.matvec(z) for z in Z.T])
	ZBZ = Z.T @ BZ
	ZBZ = 0.5 * (ZBZ + ZBZ.T)
	ev = np.linalg.eigvalsh(ZBZ)
	sign = 1.0 if direction is Direction.LOWER else -1.0
	if np.any(sign * ev <= 0):
		raise InconsistencyError(
			f"endpoint eigenstructure inconsistent: Z^T B Z eigenvalues {ev} at the {direction.value} endpoint"
		)

	y = np.linalg.solve(ZBZ, -(Z.T @ (prob.B.matvec(x_p) + prob.b)))
	report.y_star = y
	report.p_star = prob.g(x_p + Z @ y)
	tol = cfg.p_star_tol * (1.0 + abs(prob.beta))
	if direction is Direction.LOWER:
		report.is_hard_case_2 = report.p_star <= tol
	else:
		report.is_hard_case_2 = report.p_star >= -tol
	logger.info(f"p* = {report.p_star:.17g}, naive g = {report.naive_g:.17g}, hard case 2: {report.is_hard_case_2}")
	return report


def boundary_step(
	prob: GtrsProblem,
	x_base: np.ndarray,
	v: np.ndarray,
	p_star: Optional[float] = None,
	p_tol: float = 0.0,
) -> np.ndarray:
	"""
	x_base + alpha*v with g = 0, alpha a root of
	(v^T B v) alpha^2 + 2 alpha v^T (B x_base + b) + p* = 0.
	The root with smaller q wins; ties go to the smaller norm.
	"""
	x_base = np.asarray(x_base, dtype=float)
	v = np.asarray(v, dtype=float)
	p = prob.g(x_base) if p_star is None else float(p_star)
	c2 = float(v @ prob.B.matvec(v))
	c1 = float(v @ (prob.B.matvec(x_base) + prob.b))

	if abs(c2) <= 1e-14 * max(1.0, abs(c1), abs(p)):
		if c1 == 0.0:
			if abs(p) <= p_tol:
				return x_base.copy()
			raise InconsistencyError("boundary step direction does not move g")
		roots = [-p / (2.0 * c1)]
	else:
		disc = c1 * c1 - c2 * p
		tol = abs(c2) * p_tol + 1e-12 * max(c1 * c1, abs(c2 * p))
		if disc < -tol:
			raise InconsistencyError(f"boundary step discriminant {disc:.3e} is negative")
		sq = math.sqrt(max(disc, 0.0))
		roots = [(-c1 + sq) / c2, (-c1 - sq) / c2]

	candidates = []
	for alpha in roots:
		x = x_base + alpha * v
		candidates.append((prob.q(x), float(np.linalg.norm(x)), x))
	q_best = min(c[0] for c in candidates)
	tie = 1e-10 * (1.0 + abs(q_best))
	close = [c for c in candidates if c[0] <= q_best + tie]
	return min(close, key=lambda c: c[1])[2]


# --- Regularized solves near a singular endpoint ---

@dataclass
class RegularizationContext:
	"""Data for solving (A + lam*B) x = -(a + lam*b) near an endpoint with a consistent singular system."""
	endpoint: float
	W: np.ndarray  # S V with V S-orthonormal null vectors, S = A + lambda_hat*B
	z: np.ndarray  # S^{-1} (a + lambda_hat*b)
	Bz_minus_b: np.ndarray


def build_regularization(
	prob: GtrsProblem,
	report: HardCase2Report,
	cfg: Optional[SolverConfig] = None,
	counter: Optional[WorkCounter] = None,
) -> RegularizationContext:
	cfg = cfg or SolverConfig()
	S = pencil_operator(prob.A, prob.B, prob.lambda_hat)
	V = report.null.s_orthonormal
	W = np.column_stack([S.matvec(v) for v in V.T]) if V.shape[1] else np.zeros((prob.n, 0))
	z, stats = cg_solve(S, prob.a + prob.lambda_hat * prob.b, cfg.cg_tol, cfg.cg_iterations(prob.n))
	if counter is not None:
		counter.add_cg(stats)
	if stats.breakdown:
		raise InputError("A + lambda_hat*B is not positive definite")
	return RegularizationContext(report.endpoint, W, z, prob.B.matvec(z) - prob.b)


def regularized_solve(
	prob: GtrsProblem,
	lam: float,
	ctx: RegularizationContext,
	cfg: Optional[SolverConfig] = None,
) -> Tuple[np.ndarray, CgStats]:
	"""
	x(lam) via the positive definite system
	[A + lam*B + alpha W W^T] y = (lam - lambda_hat)(B z - b), x = y - z.
	"""
	cfg = cfg or SolverConfig()
	op = low_rank_update(pencil_operator(prob.A, prob.B, lam), ctx.W, cfg.reg_alpha)
	rhs = (lam - prob.lambda_hat) * ctx.Bz_minus_b
	y, stats = cg_solve(op, rhs, cfg.cg_tol, cfg.cg_iterations(prob.n))
	if stats.breakdown:
		raise InconsistencyError(f"regularized operator not positive definite at lambda={lam:.17g}")
	return y - ctx.z, stats


class PhiEvaluator:
	"""
	phi evaluation that switches to the regularized solve within endpoint_guard
	of an endpoint whose system passed the range test.
	"""

	def __init__(self, prob: GtrsProblem, cfg: SolverConfig, counter: Optional[WorkCounter] = None):
		self.prob = prob
		self.cfg = cfg
		self.counter = counter if counter is not None else WorkCounter()
		self.contexts: List[RegularizationContext] = []

	def add_endpoint(self, ctx: RegularizationContext):
		self.contexts.append(ctx)

	def _near(self, lam: float) -> Optional[RegularizationContext]:
		for ctx in self.contexts:
			if abs(lam - ctx.endpoint) < self.cfg.endpoint_guard * max(1.0, abs(ctx.endpoint)):
				return ctx
		return None

	def __call__(self, lam: float) -> PhiEvaluation:
		ctx = self._near(lam)
		if ctx is not None and lam != self.prob.lambda_hat:
			x, stats = regularized_solve(self.prob, lam, ctx, self.cfg)
			regularized = True
		else:
			_, x, stats = eval_phi(self.prob, lam, self.cfg)
			regularized = False
		self.counter.add_cg(stats)
		return PhiEvaluation(lam, self.prob.g(x), x, stats, regularized)


# --- Refinement ---

def refine(
	prob: GtrsProblem,
	x: np.ndarray,
	lam: float,
	cfg: Optional[SolverConfig] = None,
	interval: Optional[MultiplierInterval] = None,
	evaluator: Optional[PhiEvaluator] = None,
	trace: Optional[List[TraceEntry]] = None,
) -> Tuple[np.ndarray, float]:
	"""
	Up to refine_steps Newton steps on phi. A step is kept only if it stays inside
	the interval and lowers the KKT criterion; otherwise the input pair is returned.
	"""
	cfg = cfg or SolverConfig()
	evaluator = evaluator or PhiEvaluator(prob, cfg)
	best_x, best_lam = x, lam
	best_crit = max(abs(prob.g(x)), prob.stationarity(x, lam))

	for _ in range(cfg.refine_steps):
		phi = prob.g(best_x)
		if phi == 0.0:
			break
		try:
			dphi, stats = phi_derivative(prob, best_lam, best_x, cfg)
		except OutsideIntervalError:
			break
		evaluator.counter.add_cg(stats)
		if dphi >= 0 or not math.isfinite(dphi):
			break
		lam_new = best_lam - phi / dphi
		if lam_new < 0 or (interval is not None and not _strictly_inside(interval, lam_new)):
			logger.debug(f"refine step to {lam_new:.17g} leaves the interval, rejected")
			break
		try:
			ev = evaluator(lam_new)
		except GtrsError:
			break
		crit = max(abs(ev.phi), prob.stationarity(ev.x, ev.lam))
		if trace is not None:
			trace.append(TraceEntry(ev.lam, ev.phi, "refine", ev.stats.iterations, ev.regularized))
		if crit >= best_crit:
			break
		best_x, best_lam, best_crit = ev.x, ev.lam, crit
	return best_x, best_lam


def _strictly_inside(interval: MultiplierInterval, lam: float) -> bool:
	lo = interval.lower if interval.lower is not None else -math.inf
	hi = interval.upper if interval.upper is not None else math.inf
	return lo < lam < hi


# --- Driver ---

class GtrsSolver:
	"""Runs one solve and keeps its timings, work counters and trace."""

	def __init__(self, prob: GtrsProblem, cfg: Optional[SolverConfig] = None):
		self.prob = prob
		self.cfg = cfg or SolverConfig()
		if not self.cfg.validate():
			raise InputError("invalid solver configuration")
		self.counter = WorkCounter()
		self.evaluator = PhiEvaluator(prob, self.cfg, self.counter)
		self.interval = MultiplierInterval()
		self.timings: Dict[str, float] = {}
		self.trace: List[TraceEntry] = []
		self.flags: List[str] = []
		self.warnings: List[str] = []
		self.secular_iterations = 0

	@contextmanager
	def _phase(self, name: str):
		start = time.perf_counter()
		try:
			yield
		except GtrsError as e:
			raise e.with_phase(name)
		finally:
			self.timings[name] = self.timings.get(name, 0.0) + time.perf_counter() - start

	def _warn(self, flag: str, message: str):
		logger.warning(message)
		if flag not in self.flags:
			self.flags.append(flag)
		self.warnings.append(message)

	def solve(self) -> GtrsOutcome:
		start = time.perf_counter()
		prob, cfg = self.prob, self.cfg
		for key in ("interval", "hard_case", "secular", "refine"):
			self.timings.setdefault(key, 0.0)

		with self._phase("lambda_hat"):
			try:
				ev_hat = self.evaluator(prob.lambda_hat)
			except OutsideIntervalError:
				raise InputError(f"A + lambda_hat*B is not positive definite (lambda_hat={prob.lambda_hat})")
		self.trace.append(TraceEntry(ev_hat.lam, ev_hat.phi, "lambda_hat", ev_hat.stats.iterations))
		logger.info(f"phi(lambda_hat={prob.lambda_hat:.6g}) = {ev_hat.phi:.6e}")

		if abs(ev_hat.phi) <= cfg.phi_tol * (1.0 + abs(prob.beta)):
			outcome = self._finish(ev_hat.x, prob.lambda_hat, CaseKind.EXACT_AT_LAMBDA_HAT, None, refine_ok=False)
		elif ev_hat.phi > 0:
			outcome = self._solve_upper(ev_hat)
		else:
			outcome = self._solve_lower(ev_hat)

		self.timings["total"] = time.perf_counter() - start
		outcome.timings = dict(self.timings)
		return outcome

	def _solve_upper(self, ev_hat: PhiEvaluation) -> GtrsOutcome:
		"""lambda* in (lambda_hat, upper]."""
		prob, cfg = self.prob, self.cfg
		with self._phase("interval"):
			multiplier_interval(prob, cfg, lower=False, upper=True, interval=self.interval, counter=self.counter)

		if math.isinf(self.interval.upper):
			with self._phase("secular"):
				bracket = self._double_upward(ev_hat)
			if isinstance(bracket, PhiEvaluation):
				return self._finish(bracket.x, bracket.lam, CaseKind.BOUNDARY_EASY, None)
			return self._secular(bracket, CaseKind.BOUNDARY_EASY, None)

		with self._phase("hard_case"):
			report = detect_hard_case2(prob, self.interval.upper, Direction.UPPER, cfg, self.counter)
		self._note_borderline(report)
		if report.is_hard_case_2:
			return self._hard_case_2(report, CaseKind.HARD_CASE_2_UPPER)

		case = self._register_endpoint(report)
		bracket = Bracket(prob.lambda_hat, self.interval.upper, phi_lo=ev_hat.phi, x_lo=ev_hat.x)
		return self._secular(bracket, case, report)

	def _solve_lower(self, ev_hat: PhiEvaluation) -> GtrsOutcome:
		"""lambda* in [max(0, lower), lambda_hat)."""
		prob, cfg = self.prob, self.cfg
		if prob.lambda_hat == 0.0:
			# A itself is positive definite and x(0) is feasible
			return self._finish(ev_hat.x, 0.0, CaseKind.INTERIOR, None, refine_ok=False)

		with self._phase("interval"):
			multiplier_interval(prob, cfg, lower=True, upper=False, interval=self.interval, counter=self.counter)

		if self.interval.lower < 0:
			with self._phase("hard_case"):
				interior, x0, stats = check_interior(prob, cfg)
				self.counter.add_cg(stats)
			if interior is not None:
				logger.info("unconstrained minimizer is feasible")
				return self._finish(interior.x_star, 0.0, CaseKind.INTERIOR, None, refine_ok=False)
			phi0 = prob.g(x0)
			self.trace.append(TraceEntry(0.0, phi0, "interior", stats.iterations))
			bracket = Bracket(0.0, prob.lambda_hat, phi_lo=phi0, phi_hi=ev_hat.phi, x_lo=x0, x_hi=ev_hat.x)
			return self._secular(bracket, CaseKind.BOUNDARY_EASY, None)

		with self._phase("hard_case"):
			report = detect_hard_case2(prob, self.interval.lower, Direction.LOWER, cfg, self.counter)
		self._note_borderline(report)
		if report.is_hard_case_2:
			return self._hard_case_2(report, CaseKind.HARD_CASE_2_LOWER)

		case = self._register_endpoint(report)
		bracket = Bracket(self.interval.lower, prob.lambda_hat, phi_hi=ev_hat.phi, x_hi=ev_hat.x)
		return self._secular(bracket, case, report)

	def _note_borderline(self, report: HardCase2Report):
		if report.borderline:
			self._warn("borderline-range-test", f"range test at lambda={report.endpoint:.17g} is borderline")

	def _register_endpoint(self, report: HardCase2Report) -> CaseKind:
		if not report.in_range:
			return CaseKind.BOUNDARY_EASY
		with self._phase("hard_case"):
			self.evaluator.add_endpoint(build_regularization(self.prob, report, self.cfg, self.counter))
		return CaseKind.HARD_CASE_1

	def _double_upward(self, ev_hat: PhiEvaluation):
		"""Bracket lambda* on (lambda_hat, inf) by doubling steps."""
		prob, cfg = self.prob, self.cfg
		lo_ev = ev_hat
		step = max(1.0, abs(prob.lambda_hat))
		for k in range(cfg.doubling_cap + 1):
			ev = self.evaluator(prob.lambda_hat + (2.0 ** k) * step)
			self.trace.append(TraceEntry(ev.lam, ev.phi, "double", ev.stats.iterations, ev.regularized))
			if ev.phi == 0.0:
				return ev
			if ev.phi < 0:
				return Bracket(lo_ev.lam, ev.lam, lo_ev.phi, ev.phi, lo_ev.x, ev.x)
			lo_ev = ev
		raise InconsistencyError(f"phi stayed positive up to lambda={lo_ev.lam:.6g}")

	def _hard_case_2(self, report: HardCase2Report, case: CaseKind) -> GtrsOutcome:
		tol = self.cfg.p_star_tol * (1.0 + abs(self.prob.beta))
		with self._phase("hard_case"):
			x = boundary_step(self.prob, report.x_extremal, report.Z[:, 0], report.p_star, tol)
		return self._finish(x, report.endpoint, case, report, refine_ok=False)

	def _secular(self, bracket: Bracket, case: CaseKind, report: Optional[HardCase2Report]) -> GtrsOutcome:
		prob, cfg = self.prob, self.cfg
		try:
			with self._phase("secular"):
				result = solve_secular(prob, bracket, self.evaluator, cfg.secular_config())
		except ConstantPhiError as e:
			if report is None or report.p_star is None:
				raise
			self._warn("constant-phi", f"phi is constant on the bracket ({e.value:.6g}); taking the endpoint solution")
			direction_case = CaseKind.HARD_CASE_2_UPPER if report.direction is Direction.UPPER else CaseKind.HARD_CASE_2_LOWER
			return self._hard_case_2(report, direction_case)
		except SecularMaxIterError as e:
			self._warn("secular-max-iter", e.message)
			self.trace.extend(e.trace)
			self.secular_iterations = len(e.trace)
			return self._finish(e.x, e.lam, case, report)

		self.trace.extend(result.trace)
		self.secular_iterations = result.iterations
		logger.info(f"secular solve: lambda={result.lam:.17g} ({result.source}, {result.stop_reason}) after {result.iterations} evaluations")
		return self._finish(result.x, result.lam, case, report, refine_ok=result.source == "iterate")

	def _finish(
		self,
		x: np.ndarray,
		lam: float,
		case: CaseKind,
		report: Optional[HardCase2Report],
		refine_ok: bool = True,
	) -> GtrsOutcome:
		prob, cfg = self.prob, self.cfg
		if refine_ok and cfg.refine_steps > 0 and lam > 0:
			with self._phase("refine"):
				x, lam = refine(prob, x, lam, cfg, self.interval, self.evaluator, self.trace)
		if cfg.full_interval:
			with self._phase("interval"):
				multiplier_interval(prob, cfg, interval=self.interval, counter=self.counter)

		kkt = kkt_residual(prob, x, lam, self.interval, cfg.kkt_tol)
		outcome = GtrsOutcome(
			x_star=x,
			lambda_star=lam,
			case=case,
			kkt=kkt,
			best_objective=prob.q(x),
			trace=self.trace,
			interval=self.interval,
			hard_case=report,
			work=self.counter,
			secular_iterations=self.secular_iterations,
			flags=list(self.flags),
			warnings=list(self.warnings),
		)
		outcome.success = kkt.satisfied(cfg.kkt_tol) and lam >= 0
		if not outcome.success:
			outcome.add_flag("kkt-not-met", f"KKT criterion {kkt.criterion():.3e} above {cfg.kkt_tol:.1e}")
		logger.info(f"case {case.value}, lambda*={lam:.17g}, q*={outcome.best_objective:.17g}, kkt={kkt.criterion():.3e}")
		return outcome


def solve(prob: GtrsProblem, cfg: Optional[SolverConfig] = None) -> GtrsOutcome:
	"""Solve a GTRS instance."""
	return GtrsSolver(prob, cfg).solve()
