import json

import numpy as np
import pytest
from numpy.testing import assert_array_equal

from gtrsolve.bundle import (
	MANIFEST_NAME, ProblemBundle, load_problem, read_matrix, read_vector,
	write_bundle, write_matrix, write_vector,
)
from gtrsolve.errors import BundleError
from gtrsolve.probgen import GenCase, GenSpec, generate
from gtrsolve.sparse import SparseSymmetric


def test_load_example1(example1_dir, example1):
	bundle = ProblemBundle.load(example1_dir)
	assert bundle.beta == 0.0
	assert bundle.lambda_hat == 0.75
	assert bundle.metadata["expected_case"] == "HardCase2-lower"
	prob = bundle.problem()
	assert_array_equal(prob.A.to_dense(), example1.A.to_dense())
	assert_array_equal(prob.B.to_dense(), example1.B.to_dense())
	assert_array_equal(prob.a, example1.a)
	assert_array_equal(prob.b, example1.b)


def test_load_from_manifest_path(example1_dir):
	prob = load_problem(example1_dir / MANIFEST_NAME)
	assert prob.n == 2


def test_interior_fixture(interior_dir):
	prob = load_problem(interior_dir)
	assert prob.beta == -1.0
	assert prob.lambda_hat == 0.0


def test_round_trip_is_bit_exact(tmp_path):
	art = generate(GenSpec(30, 0.2, 100.0, GenCase.EASY, seed=6))
	write_bundle(tmp_path / "gen", art.problem, art.metadata())
	bundle = ProblemBundle.load(tmp_path / "gen")
	prob = bundle.problem()
	assert prob.A.entries() == art.problem.A.entries()
	assert prob.B.entries() == art.problem.B.entries()
	assert_array_equal(prob.a, art.problem.a)
	assert prob.beta == art.problem.beta
	assert bundle.metadata["planted_lambda"] == art.planted_lambda


def test_matrix_file_holds_each_pair_once(tmp_path):
	M = SparseSymmetric.from_matrix(np.array([[1.0, 2.0], [2.0, 3.0]]))
	write_matrix(tmp_path / "M.mtx", M)
	assert_array_equal(read_matrix(tmp_path / "M.mtx").to_dense(), M.to_dense())


def test_missing_manifest(tmp_path):
	with pytest.raises(BundleError):
		ProblemBundle.load(tmp_path)


def test_missing_file(tmp_path):
	with pytest.raises(BundleError) as info:
		read_matrix(tmp_path / "nope.mtx")
	assert info.value.path.endswith("nope.mtx")


def test_unparsable_file(tmp_path):
	path = tmp_path / "bad.mtx"
	path.write_text("this is not matrix market\n")
	with pytest.raises(BundleError):
		read_matrix(path)


def test_vector_must_be_a_column(tmp_path):
	write_matrix(tmp_path / "M.mtx", SparseSymmetric.identity(2))
	with pytest.raises(BundleError):
		read_vector(tmp_path / "M.mtx")


def test_scalars_from_command_line(tmp_path, example1):
	bundle = write_bundle(tmp_path / "b", example1)
	bundle.beta = None
	bundle.save_manifest()
	loaded = ProblemBundle.load(tmp_path / "b")
	with pytest.raises(BundleError):
		loaded.problem()
	assert loaded.problem(beta=-3.0).beta == -3.0


def test_manifest_wins_on_conflict(example1_dir):
	warnings = []
	prob = ProblemBundle.load(example1_dir).problem(beta=5.0, warnings=warnings)
	assert prob.beta == 0.0
	assert len(warnings) == 1
	assert "beta" in warnings[0]


def test_dimension_mismatch(tmp_path, example1):
	write_bundle(tmp_path / "b", example1)
	write_vector(tmp_path / "b" / "a.mtx", np.ones(3))
	with pytest.raises(BundleError):
		load_problem(tmp_path / "b")


def test_manifest_is_sorted_json(tmp_path, example1):
	write_bundle(tmp_path / "b", example1, {"seed": 1})
	data = json.loads((tmp_path / "b" / MANIFEST_NAME).read_text())
	assert list(data) == sorted(data)
	assert data["files"]["A"] == "A.mtx"
