import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from gtrsolve.config import SecularConfig, SolverConfig
from gtrsolve.core import PhiEvaluator
from gtrsolve.errors import ConstantPhiError, SecularMaxIterError, UsageError
from gtrsolve.models import PhiEvaluation, TraceEntry
from gtrsolve.oracle import dense_solve
from gtrsolve.secular import (
	Bracket, _roots_of_quadratic, bisection_bound, check_monotone,
	inverse_interp, primal_boundary_point, solve_secular,
)
from gtrsolve.sparse import CgStats

from .conftest import dense_problem


def _bracket_for(prob, lo, hi):
	evaluator = PhiEvaluator(prob, SolverConfig())
	ev_lo, ev_hi = evaluator(lo), evaluator(hi)
	return Bracket(lo, hi, ev_lo.phi, ev_hi.phi, ev_lo.x, ev_hi.x), evaluator


@pytest.fixture
def ball_problem():
	# lambda* sits strictly inside (0, 20)
	return dense_problem(np.diag([1.0, 2.0, 3.0]), np.eye(3), [-10.0, -10.0, -10.0], np.zeros(3), -1.0, 0.0)


def test_inverse_interp():
	assert inverse_interp((0.0, 1.0), (1.0, -1.0)) == pytest.approx(0.5)
	assert inverse_interp((0.0, 3.0), (1.0, -1.0)) == pytest.approx(0.75)
	# flat secant
	assert inverse_interp((0.0, 1.0), (1.0, 1.0)) is None
	# outside the open bounds
	assert inverse_interp((0.0, 1.0), (1.0, -1.0), bounds=(0.6, 1.0)) is None


def test_roots_of_quadratic():
	assert sorted(_roots_of_quadratic(1.0, -1.5, 2.0, 1.0)) == pytest.approx([1.0, 2.0])
	# c2 negligible: linear root of 2 c1 t + c0
	assert _roots_of_quadratic(0.0, 1.0, -4.0, 1.0) == pytest.approx([2.0])
	assert _roots_of_quadratic(1.0, 0.0, 1.0, 1.0) == []


def test_primal_boundary_point():
	prob = dense_problem(np.eye(2), np.eye(2), [0.0, 0.0], [0.0, 0.0], -1.0, 0.0)
	x, q = primal_boundary_point(prob, np.array([2.0, 0.0]), np.array([0.0, 0.0]))
	assert_allclose(x, [1.0, 0.0])
	assert q == pytest.approx(1.0)
	assert prob.g(x) == pytest.approx(0.0, abs=1e-14)


class TestBracket:

	def test_rejects_inverted(self):
		with pytest.raises(UsageError):
			Bracket(1.0, 1.0)

	def test_rejects_wrong_signs(self):
		with pytest.raises(UsageError):
			Bracket(0.0, 1.0, phi_lo=-1.0)
		with pytest.raises(UsageError):
			Bracket(0.0, 1.0, phi_hi=1.0)

	def test_update(self):
		br = Bracket(0.0, 4.0)
		stats = CgStats(0, 0.0, True, False)
		br.update(PhiEvaluation(1.0, 2.0, np.zeros(1), stats))
		br.update(PhiEvaluation(3.0, -2.0, np.zeros(1), stats))
		assert (br.lo, br.hi) == (1.0, 3.0)
		assert br.both_signs
		assert br.midpoint == 2.0


class TestSolveSecular:

	def test_converges_to_oracle(self, ball_problem):
		bracket, evaluator = _bracket_for(ball_problem, 0.0, 20.0)
		result = solve_secular(ball_problem, bracket, evaluator, SecularConfig())
		ref = dense_solve(ball_problem)
		assert result.criterion < 1e-8
		assert result.stop_reason in ("kkt", "exact")
		assert result.lam == pytest.approx(ref.lambda_star, rel=1e-6)
		assert ball_problem.q(result.x) == pytest.approx(ref.best_objective, rel=1e-7)

	def test_plain_bisection_count(self, ball_problem):
		cfg = SecularConfig(kkt_tol=1e-300, use_interpolation=False, use_boundary_step=False)
		bracket, evaluator = _bracket_for(ball_problem, 0.0, 20.0)
		result = solve_secular(ball_problem, bracket, evaluator, cfg)
		assert result.stop_reason == "width"
		assert all(e.kind == "bisect" for e in result.trace)
		expected = bisection_bound(20.0, 2.0 * result.lam, cfg.width_tol)
		assert abs(result.iterations - expected) <= 1

	def test_interpolation_needs_fewer_evaluations(self, ball_problem):
		counts = []
		for interp in (False, True):
			cfg = SecularConfig(use_interpolation=interp)
			bracket, evaluator = _bracket_for(ball_problem, 0.0, 20.0)
			counts.append(solve_secular(ball_problem, bracket, evaluator, cfg).iterations)
		assert counts[1] <= counts[0]

	def test_boundary_incumbent_is_feasible(self, ball_problem):
		cfg = SecularConfig(max_iters=4, kkt_tol=1e-300)
		bracket, evaluator = _bracket_for(ball_problem, 0.0, 20.0)
		with pytest.raises(SecularMaxIterError) as info:
			solve_secular(ball_problem, bracket, evaluator, cfg)
		err = info.value
		assert len(err.trace) == 4
		assert any(e.incumbent_q is not None for e in err.trace)
		assert err.x.shape == (3,)

	def test_constant_phi(self, ball_problem):
		stats = CgStats(0, 0.0, True, False)

		def flat(lam):
			return PhiEvaluation(lam, -1.0, np.zeros(3), stats)

		with pytest.raises(ConstantPhiError):
			solve_secular(ball_problem, Bracket(0.0, 1.0, phi_hi=-1.0), flat, SecularConfig())

	def test_trace_is_monotone(self, ball_problem):
		bracket, evaluator = _bracket_for(ball_problem, 0.0, 20.0)
		result = solve_secular(ball_problem, bracket, evaluator, SecularConfig(use_interpolation=False))
		assert check_monotone(result.trace)


def test_bisection_bound():
	assert bisection_bound(1.0, 1.0, 0.25) == 2
	assert bisection_bound(1.0, 1.0, 2.0) == 0
	assert bisection_bound(20.0, 10.0, 1e-11) == math.ceil(math.log2(2.0 / 1e-11))


def test_check_monotone():
	up = [TraceEntry(0.0, 1.0, "bisect"), TraceEntry(1.0, 2.0, "bisect")]
	down = [TraceEntry(0.0, 1.0, "bisect"), TraceEntry(1.0, -2.0, "bisect")]
	assert not check_monotone(up)
	assert check_monotone(down)
	up[1].regularized = True
	assert check_monotone(up, skip_regularized=True)
