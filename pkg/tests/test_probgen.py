import math

import numpy as np
import pytest

from gtrsolve.errors import GenerationError, UsageError
from gtrsolve.models import CaseKind
from gtrsolve.probgen import (
	GenCase, GenClass, GenSpec, generate, rand_sparse_sym, verify_artifact,
)


class TestRandSparseSym:

	def test_two_by_two_condition(self):
		A = rand_sparse_sym(2, 1.0, 10.0, seed=4).to_dense()
		ev = np.linalg.eigvalsh(A)
		assert ev[0] > 0
		assert 5.0 <= ev[-1] / ev[0] <= 20.0

	def test_positive_definite_sparse(self):
		n, density = 100, 1e-2
		A = rand_sparse_sym(n, density, 10.0, seed=1)
		dense = A.to_dense()
		assert np.array_equal(dense, dense.T)
		ev = np.linalg.eigvalsh(dense)
		assert ev[0] > 0
		assert ev[-1] / ev[0] == pytest.approx(10.0, rel=1e-8)
		assert A.nnz <= 2 * max(density * n * n, n)

	def test_indefinite(self):
		B = rand_sparse_sym(50, 0.1, None, seed=2).to_dense()
		ev = np.linalg.eigvalsh(B)
		assert ev[0] < 0 < ev[-1]
		assert np.abs(B).max() <= 1.0

	def test_min_density_warning(self):
		warnings = []
		A = rand_sparse_sym(10, 0.0, 10.0, seed=0, warnings=warnings)
		assert len(warnings) == 1
		assert A.n == 10

	def test_deterministic(self):
		first = rand_sparse_sym(30, 0.1, None, seed=9)
		second = rand_sparse_sym(30, 0.1, None, seed=9)
		assert first.entries() == second.entries()


class TestGenerate:

	def test_spec_validation(self):
		with pytest.raises(UsageError):
			generate(GenSpec(1, 0.5, 10.0))
		with pytest.raises(UsageError):
			generate(GenSpec(10, 0.5, 0.5))

	def test_deterministic(self):
		spec = GenSpec(25, 0.2, 10.0, GenCase.HARD1, GenClass.CLASS1, seed=11)
		first, second = generate(spec), generate(spec)
		assert np.array_equal(first.problem.a, second.problem.a)
		assert first.problem.beta == second.problem.beta
		assert first.problem.A.entries() == second.problem.A.entries()
		assert first.problem.B.entries() == second.problem.B.entries()
		assert first.metadata() == second.metadata()

	@pytest.mark.parametrize("cls", [GenClass.CLASS1, GenClass.CLASS2])
	@pytest.mark.parametrize("case", [GenCase.EASY, GenCase.HARD1, GenCase.HARD2])
	def test_planted_structure(self, case, cls):
		art = generate(GenSpec(20, 0.2, 10.0, case, cls, seed=3))
		prob = art.problem
		lam = art.planted_lambda
		assert np.array_equal(prob.a, -((prob.A.csr + lam * prob.B.csr) @ art.x0))
		assert not np.any(prob.b)
		assert prob.lambda_hat == (0.0 if cls is GenClass.CLASS1 else 1.0)
		assert art.expected_case is {
			GenCase.EASY: CaseKind.BOUNDARY_EASY,
			GenCase.HARD1: CaseKind.HARD_CASE_1,
			GenCase.HARD2: CaseKind.HARD_CASE_2_UPPER,
		}[case]
		assert verify_artifact(art) == []
		if case is not GenCase.EASY:
			assert lam == art.interval.upper

	def test_hard2_puts_x0_on_the_boundary(self):
		art = generate(GenSpec(20, 0.2, 10.0, GenCase.HARD2, GenClass.CLASS1, seed=7))
		prob = art.problem
		assert abs(prob.g(art.x0)) <= 1e-12 * max(1.0, abs(prob.beta))

	def test_hard_planted_system_is_consistent(self):
		art = generate(GenSpec(20, 0.2, 10.0, GenCase.HARD2, GenClass.CLASS1, seed=5))
		prob = art.problem
		P = prob.A.to_dense() + art.planted_lambda * prob.B.to_dense()
		w, V = np.linalg.eigh(P)
		z = V[:, np.argmin(np.abs(w))]
		assert abs(z @ prob.a) <= 1e-10 * max(1.0, np.linalg.norm(prob.a))

	def test_trust_region_hook(self):
		art = generate(GenSpec(15, 0.2, 10.0, GenCase.EASY, GenClass.CLASS1, seed=1, identity_b=True))
		assert math.isinf(art.interval.upper)
		assert np.array_equal(art.problem.B.to_dense(), np.eye(15))
		assert 0.0 <= art.planted_lambda <= 1.0

	def test_hard_case_needs_finite_endpoint(self):
		with pytest.raises(GenerationError) as info:
			generate(GenSpec(15, 0.2, 10.0, GenCase.HARD1, GenClass.CLASS1, seed=1, identity_b=True))
		assert info.value.diagnostics["upper"] == "inf"

	def test_retry_budget(self):
		with pytest.raises(GenerationError) as info:
			generate(GenSpec(15, 0.2, 10.0, GenCase.HARD2, GenClass.CLASS1, seed=2), max_retries=0)
		assert info.value.diagnostics["spec"]["n"] == 15

	@pytest.mark.parametrize("seed", [8, 9, 10, 11])
	def test_class2_easy_lambda_range(self, seed):
		# planted multiplier stays non-negative even when the interval reaches below zero
		art = generate(GenSpec(20, 0.2, 10.0, GenCase.EASY, GenClass.CLASS2, seed=seed))
		lo = max(art.interval.lower, 0.0)
		hi = art.interval.upper if math.isfinite(art.interval.upper) else 2.0
		assert art.planted_lambda >= 0.0
		assert lo <= art.planted_lambda <= hi
