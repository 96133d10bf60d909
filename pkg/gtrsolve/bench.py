"""
Benchmark sweeps: for every (class, case, n, cond) cell, generate instances,
solve them, and report mean time and accuracy against a reference objective.
"""

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from itertools import product
from typing import Dict, List, Optional, Sequence

import numpy as np

from .config import SolverConfig
from .core import solve
from .errors import GtrsError
from .oracle import accuracy, dense_solve
from .probgen import GenCase, GenClass, GenSpec, generate

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class BenchSweep:
	sizes: Sequence[int] = ()
	conds: Sequence[float] = ()
	cases: Sequence[GenCase] = (GenCase.EASY, GenCase.HARD1, GenCase.HARD2)
	classes: Sequence[GenClass] = (GenClass.CLASS1,)
	repetitions: int = 10
	density: float = 0.01
	oracle_max_n: int = 200
	seed: int = 0

	def cells(self):
		return list(product(self.classes, self.cases, self.sizes, self.conds))


@dataclass
class InstanceResult:
	seed: int
	time_s: float = 0.0
	accuracy: Optional[float] = None
	absolute_accuracy: bool = False
	case: Optional[str] = None
	expected_case: Optional[str] = None
	success: bool = False
	error: Optional[str] = None


@dataclass
class BenchRow:
	class_kind: int
	case_kind: str
	n: int
	cond: float
	instances: int = 0
	failures: int = 0
	mean_time_s: Optional[float] = None
	mean_accuracy: Optional[float] = None
	max_accuracy: Optional[float] = None
	reference: str = "oracle"
	case_matches: int = 0
	errors: List[str] = field(default_factory=list)

	def to_dict(self) -> Dict:
		return asdict(self)


def _reference_objective(prob, cfg: SolverConfig, q_main: float, use_oracle: bool) -> float:
	if use_oracle:
		return dense_solve(prob, cfg, max_n=max(cfg.dense_threshold, prob.n)).best_objective
	# the other secular variant; the smaller objective is the reference
	variant = replace(cfg, use_interpolation=not cfg.use_interpolation)
	try:
		other = solve(prob, variant)
	except GtrsError as e:
		logger.debug(f"variant solve failed: {e}")
		return q_main
	if not other.success:
		return q_main
	return min(q_main, other.best_objective)


def run_instance(spec: GenSpec, cfg: SolverConfig, oracle_max_n: int) -> InstanceResult:
	result = InstanceResult(seed=spec.seed)
	try:
		artifact = generate(spec, cfg)
		result.expected_case = artifact.expected_case.value
		start = time.perf_counter()
		outcome = solve(artifact.problem, cfg)
		result.time_s = time.perf_counter() - start
		result.case = outcome.case.value
		result.success = outcome.success
		q_best = _reference_objective(artifact.problem, cfg, outcome.best_objective, spec.n <= oracle_max_n)
		acc = accuracy(outcome.best_objective, q_best)
		result.accuracy, result.absolute_accuracy = acc.value, acc.absolute
		if not outcome.success:
			result.error = f"KKT criterion {outcome.kkt.criterion():.3e} not met"
	except GtrsError as e:
		result.error = str(e)
		logger.error(f"instance seed={spec.seed} failed: {e}")
	return result


def _aggregate(cell, results: List[InstanceResult], oracle_max_n: int) -> BenchRow:
	class_kind, case_kind, n, cond = cell
	row = BenchRow(class_kind.value, case_kind.value, n, cond, instances=len(results))
	row.reference = "oracle" if n <= oracle_max_n else "best-of-variants"
	ok = [r for r in results if r.error is None]
	row.failures = len(results) - len(ok)
	row.errors = [f"seed {r.seed}: {r.error}" for r in results if r.error is not None]
	if ok:
		row.mean_time_s = float(np.mean([r.time_s for r in ok]))
		accs = [r.accuracy for r in ok if r.accuracy is not None]
		if accs:
			row.mean_accuracy = float(np.mean(accs))
			row.max_accuracy = float(np.max(accs))
	row.case_matches = sum(1 for r in results if r.case is not None and r.case == r.expected_case)
	return row


def run_bench(sweep: BenchSweep, cfg: Optional[SolverConfig] = None, jobs: int = 1) -> List[BenchRow]:
	"""One row per (class, case, n, cond); rows come out in sweep order whatever the job count."""
	cfg = cfg or SolverConfig()
	cells = sweep.cells()
	specs = []
	for ci, (class_kind, case_kind, n, cond) in enumerate(cells):
		for rep in range(sweep.repetitions):
			seed = sweep.seed * 1_000_003 + ci * 1009 + rep
			specs.append(GenSpec(n, sweep.density, cond, case_kind, class_kind, seed))
	if not specs:
		return []

	logger.info(f"Running {len(specs)} instances in {len(cells)} cells with {jobs} job(s)")
	if jobs > 1:
		with ThreadPoolExecutor(max_workers=jobs) as pool:
			results = list(pool.map(lambda s: run_instance(s, cfg, sweep.oracle_max_n), specs))
	else:
		results = [run_instance(s, cfg, sweep.oracle_max_n) for s in specs]

	rows = []
	per = sweep.repetitions
	for ci, cell in enumerate(cells):
		rows.append(_aggregate(cell, results[ci * per:(ci + 1) * per], sweep.oracle_max_n))
	return rows


def format_bench_table(rows: List[BenchRow]) -> str:
	header = f"{'class':>5} {'case':>6} {'n':>7} {'cond':>8} {'inst':>5} {'fail':>5} {'time(s)':>10} {'accuracy':>11} {'max acc':>11} {'match':>6}  ref"
	lines = [header]
	for r in rows:
		t = f"{r.mean_time_s:.4f}" if r.mean_time_s is not None else "-"
		a = f"{r.mean_accuracy:.2e}" if r.mean_accuracy is not None else "-"
		m = f"{r.max_accuracy:.2e}" if r.max_accuracy is not None else "-"
		lines.append(
			f"{r.class_kind:>5} {r.case_kind:>6} {r.n:>7} {r.cond:>8g} {r.instances:>5} {r.failures:>5} "
			f"{t:>10} {a:>11} {m:>11} {r.case_matches:>6}  {r.reference}"
		)
	return "\n".join(lines)
