import math
from pathlib import Path

import numpy as np
import pytest

from gtrsolve.models import GtrsProblem
from gtrsolve.probgen import GenCase, GenClass, GenSpec, generate
from gtrsolve.sparse import SparseSymmetric

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"

EXAMPLE1_X_STAR = np.array([-25.0 + math.sqrt(457.0), 8.0])


def dense_problem(A, B, a, b, beta, lambda_hat) -> GtrsProblem:
	return GtrsProblem(
		SparseSymmetric.from_matrix(np.asarray(A, dtype=float)),
		SparseSymmetric.from_matrix(np.asarray(B, dtype=float)),
		np.asarray(a, dtype=float),
		np.asarray(b, dtype=float),
		beta,
		lambda_hat,
	)


def make_instance(n=20, case=GenCase.EASY, cls=GenClass.CLASS1, seed=0, cond=10.0, density=0.2):
	return generate(GenSpec(n, density, cond, case, cls, seed))


def hard_case_1_instance(seed: int, n: int = 6) -> GtrsProblem:
	"""
	Trust-region instance with a rotated spectrum: lower endpoint 1 (singular, consistent),
	lambda_hat = 2 and p* > 0 at the endpoint, so lambda* lies strictly inside (1, 2).
	"""
	rng = np.random.default_rng(seed)
	Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
	d = np.concatenate([[-1.0], np.linspace(0.5, 4.0, n - 1)])
	A = Q @ np.diag(d) @ Q.T
	A = 0.5 * (A + A.T)
	c = np.concatenate([[0.0], rng.uniform(0.5, 1.5, n - 1)])
	a = -(Q @ c)
	# beta halfway between -||x(1)||^2 and -||x(2)||^2: p* > 0 and phi(lambda_hat) < 0
	x_p = c[1:] / (d[1:] + 1.0)
	x_hat = c[1:] / (d[1:] + 2.0)
	beta = -0.5 * (float(x_p @ x_p) + float(x_hat @ x_hat))
	return dense_problem(A, np.eye(n), a, np.zeros(n), beta, 2.0)


@pytest.fixture
def example1():
	return dense_problem(
		np.diag([-1.0, 1.0]),
		np.diag([2.0, -1.0]),
		[-25.0, -16.5],
		[50.0, 25.0],
		0.0,
		0.75,
	)


@pytest.fixture
def unit_ball_interior():
	return dense_problem(np.eye(2), np.eye(2), [0.0, 0.0], [0.0, 0.0], -1.0, 0.0)


@pytest.fixture
def trust_region_easy():
	"""B = I, A positive definite, unconstrained minimizer outside the unit ball."""
	return dense_problem(np.diag([1.0, 2.0, 3.0]), np.eye(3), [-10.0, -10.0, -10.0], np.zeros(3), -1.0, 0.0)


@pytest.fixture
def example1_dir():
	return FIXTURES / "example1"


@pytest.fixture
def interior_dir():
	return FIXTURES / "interior"
