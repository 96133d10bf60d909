"""
Root finding for the secular function phi(lam) = g(x(lam)) on a bracket.

Safeguarded bisection, accelerated by inverse linear interpolation, with a
primal step to the constraint boundary that maintains a feasible incumbent.
phi is non-increasing on the definiteness interval, so the positive side of a
bracket is always its left end.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Tuple

import numpy as np

from .config import SecularConfig
from .errors import ConstantPhiError, SecularMaxIterError, UsageError
from .models import GtrsProblem, PhiEvaluation, TraceEntry

logger = logging.getLogger(__name__)

Evaluator = Callable[[float], PhiEvaluation]


@dataclass
class Bracket:
	"""[lo, hi] containing lambda*. phi_lo > 0 > phi_hi when both are known."""
	lo: float
	hi: float
	phi_lo: Optional[float] = None
	phi_hi: Optional[float] = None
	x_lo: Optional[np.ndarray] = None
	x_hi: Optional[np.ndarray] = None

	def __post_init__(self):
		if not self.lo < self.hi:
			raise UsageError(f"invalid bracket: lo={self.lo} must be < hi={self.hi}")
		if self.phi_lo is not None and self.phi_lo <= 0:
			raise UsageError(f"bracket needs phi > 0 at lo, got {self.phi_lo}")
		if self.phi_hi is not None and self.phi_hi >= 0:
			raise UsageError(f"bracket needs phi < 0 at hi, got {self.phi_hi}")

	@property
	def width(self) -> float:
		return self.hi - self.lo

	@property
	def midpoint(self) -> float:
		return 0.5 * (self.lo + self.hi)

	@property
	def both_signs(self) -> bool:
		return self.phi_lo is not None and self.phi_hi is not None

	def relative_width(self) -> float:
		denom = abs(self.hi) + abs(self.lo)
		return self.width / denom if denom > 0 else self.width

	def update(self, ev: PhiEvaluation):
		"""Shrink the bracket with a fresh evaluation strictly inside it."""
		if ev.phi > 0:
			self.lo, self.phi_lo, self.x_lo = ev.lam, ev.phi, ev.x
		elif ev.phi < 0:
			self.hi, self.phi_hi, self.x_hi = ev.lam, ev.phi, ev.x


@dataclass
class SecularResult:
	lam: float
	x: np.ndarray
	criterion: float
	source: str  # "iterate" or "incumbent"
	stop_reason: str  # "kkt", "width", "exact"
	iterations: int
	trace: List[TraceEntry] = field(default_factory=list)
	incumbent_q: Optional[float] = None


def inverse_interp(
	pt_pos: Tuple[float, float],
	pt_neg: Tuple[float, float],
	guard: float = 1e-14,
	bounds: Optional[Tuple[float, float]] = None,
) -> Optional[float]:
	"""
	Zero of the line through (phi_pos, lam_pos) and (phi_neg, lam_neg) in the (phi, lam) plane.
	Returns None when the phi values are too close or the result leaves the open bounds.
	"""
	lam_pos, phi_pos = pt_pos
	lam_neg, phi_neg = pt_neg
	denom = phi_neg - phi_pos
	scale = max(abs(phi_pos), abs(phi_neg))
	if scale == 0.0 or abs(denom) < guard * scale:
		return None
	lam_new = lam_pos + (0.0 - phi_pos) * (lam_neg - lam_pos) / denom
	if not math.isfinite(lam_new):
		return None
	lo, hi = bounds if bounds is not None else sorted((lam_pos, lam_neg))
	if not lo < lam_new < hi:
		return None
	return lam_new


def _roots_of_quadratic(c2: float, c1: float, c0: float, scale: float) -> List[float]:
	"""Real roots of c2 t^2 + 2 c1 t + c0, degrading to the linear case when c2 is negligible."""
	if abs(c2) <= 1e-14 * scale:
		if c1 == 0.0:
			return []
		return [-c0 / (2.0 * c1)]
	disc = c1 * c1 - c2 * c0
	if disc < 0:
		if disc < -1e-12 * max(c1 * c1, abs(c2 * c0)):
			return []
		disc = 0.0
	sq = math.sqrt(disc)
	# cancellation-free pair
	qq = -(c1 + math.copysign(sq, c1))
	if qq == 0.0:
		return [0.0, 0.0]
	return [qq / c2, c0 / qq]


def primal_boundary_point(
	prob: GtrsProblem,
	x_pos: np.ndarray,
	x_neg: np.ndarray,
	tol: float = 1e-10,
) -> Optional[Tuple[np.ndarray, float]]:
	"""
	Point on the segment between an infeasible x_pos and a feasible x_neg where g = 0.
	Returns (x, q(x)) or None if the quadratic has no usable root.
	"""
	d = x_pos - x_neg
	g_neg = prob.g(x_neg)
	Bd = prob.B.matvec(d)
	c2 = float(d @ Bd)
	c1 = float(d @ (prob.B.matvec(x_neg) + prob.b))
	scale = max(abs(c2), abs(c1), abs(g_neg), 1.0)

	candidates = []
	for t in _roots_of_quadratic(c2, c1, g_neg, scale):
		if -tol <= t <= 1.0 + tol:
			t = min(max(t, 0.0), 1.0)
			x = x_neg + t * d
			candidates.append((prob.q(x), t, x))
	if not candidates:
		return None
	candidates.sort(key=lambda c: (c[0], c[1]))
	q_val, _, x = candidates[0]
	return x, q_val


def _least_squares_multiplier(prob: GtrsProblem, x: np.ndarray, lo: float, hi: float) -> float:
	"""argmin over lam in [lo, hi], lam >= 0, of ||(A x + a) + lam (B x + b)||."""
	u = prob.A.matvec(x) + prob.a
	w = prob.B.matvec(x) + prob.b
	ww = float(w @ w)
	lam = -float(u @ w) / ww if ww > 0 else lo
	return min(max(lam, lo, 0.0), hi)


def solve_secular(
	prob: GtrsProblem,
	bracket: Bracket,
	evaluator: Evaluator,
	cfg: Optional[SecularConfig] = None,
) -> SecularResult:
	"""
	Find lam with phi(lam) = 0 inside bracket.

	Each step evaluates the midpoint, or the inverse interpolation point when both
	bracket signs are known and it lands inside. Whenever both sides carry an x,
	the boundary point between them updates the feasible incumbent. Stops when the
	KKT criterion holds at the iterate or the incumbent, or when the relative width
	drops below width_tol; the pair with the smaller criterion is returned.
	"""
	if cfg is None:
		cfg = SecularConfig()

	trace: List[TraceEntry] = []
	history: List[Tuple[float, float]] = []
	for lam, phi in ((bracket.lo, bracket.phi_lo), (bracket.hi, bracket.phi_hi)):
		if phi is not None:
			history.append((lam, phi))

	best: Optional[SecularResult] = None
	incumbent_x: Optional[np.ndarray] = None
	incumbent_q = math.inf
	last_moved: List[str] = []

	def consider(lam, x, crit, source, reason, iterations):
		nonlocal best
		if best is None or crit < best.criterion:
			best = SecularResult(lam, x, crit, source, reason, iterations, trace, None)

	iterations = 0
	while iterations < cfg.max_iters:
		if bracket.relative_width() < cfg.width_tol:
			if best is None:
				ev = evaluator(bracket.midpoint)
				iterations += 1
				trace.append(TraceEntry(ev.lam, ev.phi, "bisect", ev.stats.iterations, ev.regularized, bracket.lo, bracket.hi))
				crit = max(abs(ev.phi), prob.stationarity(ev.x, ev.lam))
				consider(ev.lam, ev.x, crit, "iterate", "width", iterations)
			best.stop_reason = "width"
			best.iterations = iterations
			best.incumbent_q = incumbent_q if incumbent_x is not None else None
			logger.debug(f"secular stop on width after {iterations} evaluations")
			return best

		lam_new, kind = bracket.midpoint, "bisect"
		# two interpolation steps in a row that keep one end fixed force a bisection step
		stalled = len(last_moved) >= 2 and last_moved[-1] == last_moved[-2]
		if cfg.use_interpolation and bracket.both_signs and not stalled:
			t = inverse_interp(
				(bracket.lo, bracket.phi_lo), (bracket.hi, bracket.phi_hi),
				cfg.interp_guard, (bracket.lo, bracket.hi),
			)
			if t is not None:
				lam_new, kind = t, "interp"

		ev = evaluator(lam_new)
		iterations += 1

		for lam_old, phi_old in history:
			if abs(ev.lam - lam_old) > 1e-6 * (1.0 + abs(ev.lam)):
				scale = max(abs(ev.phi), abs(phi_old))
				if ev.phi != 0.0 and abs(ev.phi - phi_old) < cfg.constant_phi_tol * scale:
					raise ConstantPhiError(ev.phi)
		history.append((ev.lam, ev.phi))

		crit = max(abs(ev.phi), prob.stationarity(ev.x, ev.lam))
		consider(ev.lam, ev.x, crit, "iterate", "kkt", iterations)

		if ev.phi == 0.0:
			trace.append(TraceEntry(ev.lam, ev.phi, kind, ev.stats.iterations, ev.regularized, bracket.lo, bracket.hi))
			best = SecularResult(ev.lam, ev.x, crit, "iterate", "exact", iterations, trace, None)
			return best

		bracket.update(ev)
		if kind == "interp":
			last_moved.append("lo" if ev.phi > 0 else "hi")
		else:
			last_moved.clear()

		if cfg.use_boundary_step and bracket.x_lo is not None and bracket.x_hi is not None:
			found = primal_boundary_point(prob, bracket.x_lo, bracket.x_hi)
			if found is not None and found[1] < incumbent_q:
				incumbent_x, incumbent_q = found
				lam_bd = _least_squares_multiplier(prob, incumbent_x, bracket.lo, bracket.hi)
				crit_bd = max(abs(prob.g(incumbent_x)), prob.stationarity(incumbent_x, lam_bd))
				consider(lam_bd, incumbent_x, crit_bd, "incumbent", "kkt", iterations)

		trace.append(TraceEntry(
			ev.lam, ev.phi, kind, ev.stats.iterations, ev.regularized, bracket.lo, bracket.hi,
			incumbent_q if incumbent_x is not None else None,
		))
		logger.debug(f"secular {iterations}: lam={ev.lam:.17g} phi={ev.phi:.3e} ({kind}) width={bracket.width:.3e}")

		if best.criterion < cfg.kkt_tol:
			best.iterations = iterations
			best.incumbent_q = incumbent_q if incumbent_x is not None else None
			return best

	raise SecularMaxIterError(
		f"secular iteration did not converge in {cfg.max_iters} evaluations (best criterion {best.criterion:.3e})",
		lam=best.lam, x=best.x, trace=trace,
	)


def bisection_bound(width: float, scale: float, width_tol: float) -> int:
	"""Evaluations plain bisection needs to shrink width below width_tol * scale."""
	target = width_tol * scale
	if width <= target:
		return 0
	return int(math.ceil(math.log2(width / target)))


def check_monotone(entries: List[TraceEntry], rel_tol: float = 1e-6, skip_regularized: bool = False) -> bool:
	"""phi non-increasing in lam across the evaluations, within rel_tol * scale."""
	pts = sorted((e.lam, e.phi) for e in entries if not (skip_regularized and e.regularized))
	if len(pts) < 2:
		return True
	scale = max(1.0, max(abs(p) for _, p in pts))
	for (_, p0), (_, p1) in zip(pts, pts[1:]):
		if p1 > p0 + rel_tol * scale:
			return False
	return True
