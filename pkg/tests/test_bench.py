from gtrsolve.bench import BenchSweep, format_bench_table, run_bench
from gtrsolve.probgen import GenCase, GenClass


def _stable(row):
	data = row.to_dict()
	data.pop("mean_time_s")
	return data


def test_rows_follow_sweep_order():
	sweep = BenchSweep(
		sizes=(10, 14), conds=(10.0,), cases=(GenCase.EASY, GenCase.HARD2),
		classes=(GenClass.CLASS1,), repetitions=2, density=0.3,
	)
	rows = run_bench(sweep)
	assert [(r.case_kind, r.n) for r in rows] == [("easy", 10), ("easy", 14), ("hard2", 10), ("hard2", 14)]
	assert all(r.failures == 0 for r in rows)
	assert all(r.case_matches == 2 for r in rows)
	assert all(r.max_accuracy < 1e-6 for r in rows)


def test_threaded_run_matches_sequential():
	sweep = BenchSweep(sizes=(12,), conds=(10.0, 100.0), cases=(GenCase.HARD1,), repetitions=3, density=0.25)
	assert [_stable(r) for r in run_bench(sweep, jobs=3)] == [_stable(r) for r in run_bench(sweep)]


def test_best_of_variants_reference():
	sweep = BenchSweep(
		sizes=(16,), conds=(10.0,), cases=(GenCase.EASY,), repetitions=2, density=0.25, oracle_max_n=0,
	)
	(row,) = run_bench(sweep)
	assert row.reference == "best-of-variants"
	assert row.failures == 0
	assert row.max_accuracy <= 1e-6
	assert "best-of-variants" in format_bench_table([row])


def test_empty_sweep():
	assert run_bench(BenchSweep()) == []
