import json
import logging

import pytest
from numpy.testing import assert_allclose

from gtrsolve.bundle import read_vector, write_bundle
from gtrsolve.cli import EXIT_INPUT, EXIT_OK, EXIT_TOLERANCE, build_parser, main

from .conftest import EXAMPLE1_X_STAR


@pytest.fixture(autouse=True)
def _drop_cli_log_handler():
	yield
	root = logging.getLogger()
	for h in [h for h in root.handlers if getattr(h, "_gtrs_handler", False)]:
		root.removeHandler(h)


def _strip_timings(path):
	data = json.loads(path.read_text())
	return {k: v for k, v in data.items() if not k.startswith("time_")}


def test_solve_example1(tmp_path, example1_dir, capsys):
	out = tmp_path / "report.json"
	x_out = tmp_path / "x.mtx"
	code = main(["solve", str(example1_dir), "--full-interval", "--trace", "--out", str(out), "--x-out", str(x_out)])
	assert code == EXIT_OK
	stdout = capsys.readouterr().out
	assert "HardCase2-lower" in stdout
	assert "lambda_hat" in stdout
	data = json.loads(out.read_text())
	assert data["case"] == "HardCase2-lower"
	assert data["interval_lower"] == pytest.approx(0.5, abs=1e-10)
	assert data["interval_upper"] == pytest.approx(1.0, abs=1e-10)
	assert data["naive_g"] == pytest.approx(336.0, abs=1e-8)
	assert data["trace"]
	assert_allclose(read_vector(x_out), EXAMPLE1_X_STAR, atol=1e-8)


def test_reports_are_deterministic(tmp_path, example1_dir):
	paths = [tmp_path / "r1.json", tmp_path / "r2.json"]
	for p in paths:
		assert main(["solve", str(example1_dir), "--full-interval", "--out", str(p)]) == EXIT_OK
	assert _strip_timings(paths[0]) == _strip_timings(paths[1])


def test_oracle(tmp_path, interior_dir, capsys):
	out = tmp_path / "oracle.json"
	assert main(["oracle", str(interior_dir), "--out", str(out)]) == EXIT_OK
	data = json.loads(out.read_text())
	assert data["solver"] == "oracle"
	assert data["case"] == "Interior"


def test_oracle_size_limit(example1_dir):
	assert main(["oracle", str(example1_dir), "--max-n", "1"]) == EXIT_INPUT


def test_missing_bundle(tmp_path):
	assert main(["solve", str(tmp_path / "nothing")]) == EXIT_INPUT


def test_invalid_tolerance(example1_dir):
	assert main(["solve", str(example1_dir), "--tol-kkt", "-1"]) == EXIT_INPUT


def test_unmet_tolerance(tmp_path, trust_region_easy):
	write_bundle(tmp_path / "trs", trust_region_easy)
	code = main(["solve", str(tmp_path / "trs"), "--tol-kkt", "1e-300", "--max-iter", "5"])
	assert code == EXIT_TOLERANCE


def test_config_file(tmp_path, example1_dir):
	cfg = tmp_path / "cfg.json"
	cfg.write_text(json.dumps({"kkt_tol": 1e-9, "full_interval": True}))
	out = tmp_path / "r.json"
	assert main(["solve", str(example1_dir), "--config", str(cfg), "--out", str(out)]) == EXIT_OK
	assert json.loads(out.read_text())["interval_upper"] == pytest.approx(1.0, abs=1e-10)


def test_generate_then_solve(tmp_path, capsys):
	target = tmp_path / "gen"
	code = main(["generate", "--n", "20", "--density", "0.2", "--case", "hard2", "--class", "2", "--seed", "3", "--out-dir", str(target)])
	assert code == EXIT_OK
	assert "HardCase2-upper" in capsys.readouterr().out
	manifest = json.loads((target / "manifest.json").read_text())
	assert manifest["metadata"]["gen_class"] == 2
	out = tmp_path / "r.json"
	assert main(["solve", str(target), "--out", str(out)]) == EXIT_OK
	assert json.loads(out.read_text())["case"] == "HardCase2-upper"


def test_bench(tmp_path, capsys):
	out = tmp_path / "bench.json"
	code = main([
		"bench", "--sizes", "12", "--cases", "hard2", "easy", "--classes", "1",
		"--reps", "2", "--density", "0.25", "--out", str(out),
	])
	assert code == EXIT_OK
	rows = json.loads(out.read_text())
	assert [r["case_kind"] for r in rows] == ["hard2", "easy"]
	assert all(r["instances"] == 2 for r in rows)
	assert all(r["reference"] == "oracle" for r in rows)
	assert "accuracy" in capsys.readouterr().out


def test_parser_requires_command():
	with pytest.raises(SystemExit):
		build_parser().parse_args([])
