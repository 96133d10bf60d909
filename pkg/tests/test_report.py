import json

import pytest

from gtrsolve.config import SolverConfig
from gtrsolve.core import solve
from gtrsolve.report import RunReport


@pytest.fixture
def example1_report(example1):
	outcome = solve(example1, SolverConfig(full_interval=True))
	return RunReport.from_outcome(outcome, example1)


def test_from_outcome(example1_report):
	r = example1_report
	assert r.case == "HardCase2-lower"
	assert r.success
	assert r.n == 2
	assert r.lambda_star == pytest.approx(0.5, abs=1e-10)
	assert r.p_star == pytest.approx(-914.0, abs=1e-8)
	assert r.naive_g == pytest.approx(336.0, abs=1e-8)
	assert r.interval_upper == pytest.approx(1.0, abs=1e-10)
	assert r.trace is None


def test_timings_can_be_stripped(example1_report):
	data = example1_report.to_dict(timings=False)
	assert not any(k.startswith("time_") for k in data)
	assert "time_total_s" in example1_report.to_dict()
	assert "trace" not in data


def test_json_is_sorted_and_finite(trust_region_easy):
	outcome = solve(trust_region_easy, SolverConfig(full_interval=True))
	report = RunReport.from_outcome(outcome, trust_region_easy, include_trace=True)
	text = report.to_json()
	data = json.loads(text)
	assert list(data) == sorted(data)
	assert data["interval_upper"] == "inf"
	assert len(data["trace"]) == len(outcome.trace)


def test_save_and_load(tmp_path, example1_report):
	path = tmp_path / "out" / "report.json"
	example1_report.save(path)
	loaded = RunReport.load(path)
	assert loaded == example1_report


def test_format_table(example1_report):
	table = example1_report.format_table()
	assert "HardCase2-lower" in table
	assert "g(x_particular)" in table
	assert "p*" in table


def test_format_trace(example1):
	report = RunReport.from_outcome(solve(example1), example1, include_trace=True)
	assert "lambda_hat" in report.format_trace()
	assert RunReport.from_outcome(solve(example1), example1).format_trace() == "(no trace)"
