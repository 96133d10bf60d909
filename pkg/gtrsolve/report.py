import json
import logging
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, List, Optional

from .models import GtrsOutcome, GtrsProblem

logger = logging.getLogger(__name__)

TIMING_PREFIX = "time_"


def _json_float(v: Optional[float]):
	"""JSON has no infinities; encode them as strings."""
	if v is None or math.isfinite(v):
		return v
	return "inf" if v > 0 else "-inf"


@dataclass
class RunReport:
	"""Flat, serializable summary of one solve."""
	solver: str
	n: int
	case: str
	success: bool
	lambda_star: float
	q_star: float
	kkt_stationarity: float
	kkt_feasibility: float
	kkt_complementarity: float
	kkt_criterion: float
	multiplier_in_interval: bool
	interval_lower: Any = None
	interval_upper: Any = None
	p_star: Optional[float] = None
	naive_g: Optional[float] = None
	time_total_s: float = 0.0
	time_interval_s: float = 0.0
	time_hard_case_s: float = 0.0
	time_secular_s: float = 0.0
	time_refine_s: float = 0.0
	matvecs: int = 0
	cg_runs: int = 0
	cg_iterations: int = 0
	secular_iterations: int = 0
	flags: List[str] = field(default_factory=list)
	warnings: List[str] = field(default_factory=list)
	trace: Optional[List[Dict[str, Any]]] = None

	@classmethod
	def from_outcome(cls, outcome: GtrsOutcome, prob: GtrsProblem, solver: str = "gtrs", include_trace: bool = False) -> 'RunReport':
		interval = outcome.interval
		hc = outcome.hard_case
		t = outcome.timings
		return cls(
			solver=solver,
			n=prob.n,
			case=outcome.case.value,
			success=bool(outcome.success),
			lambda_star=float(outcome.lambda_star),
			q_star=float(outcome.best_objective),
			kkt_stationarity=outcome.kkt.stationarity,
			kkt_feasibility=outcome.kkt.feasibility,
			kkt_complementarity=outcome.kkt.complementarity,
			kkt_criterion=outcome.kkt.criterion(),
			multiplier_in_interval=bool(outcome.kkt.multiplier_in_interval),
			interval_lower=_json_float(interval.lower) if interval else None,
			interval_upper=_json_float(interval.upper) if interval else None,
			p_star=hc.p_star if hc else None,
			naive_g=hc.naive_g if hc else None,
			time_total_s=t.get("total", 0.0),
			time_interval_s=t.get("interval", 0.0),
			time_hard_case_s=t.get("hard_case", 0.0),
			time_secular_s=t.get("secular", 0.0),
			time_refine_s=t.get("refine", 0.0),
			matvecs=outcome.work.matvecs,
			cg_runs=outcome.work.cg_runs,
			cg_iterations=outcome.work.cg_iterations,
			secular_iterations=outcome.secular_iterations,
			flags=list(outcome.flags),
			warnings=list(outcome.warnings),
			trace=[e.to_dict() for e in outcome.trace] if include_trace else None,
		)

	def to_dict(self, timings: bool = True) -> Dict[str, Any]:
		data = asdict(self)
		if self.trace is None:
			data.pop("trace")
		if not timings:
			data = {k: v for k, v in data.items() if not k.startswith(TIMING_PREFIX)}
		return data

	def to_json(self, timings: bool = True) -> str:
		return json.dumps(self.to_dict(timings), indent=2, sort_keys=True)

	@classmethod
	def from_dict(cls, data: Dict[str, Any]) -> 'RunReport':
		known = {f.name for f in fields(cls)}
		return cls(**{k: v for k, v in data.items() if k in known})

	def save(self, path: Path):
		path = Path(path)
		path.parent.mkdir(parents=True, exist_ok=True)
		with open(path, 'w', encoding='utf-8') as f:
			f.write(self.to_json())
			f.write("\n")
		logger.debug(f"Saved report to {path}")

	@classmethod
	def load(cls, path: Path) -> 'RunReport':
		with open(path, 'r', encoding='utf-8') as f:
			return cls.from_dict(json.load(f))

	def format_table(self) -> str:
		rows = [
			("solver", self.solver),
			("n", str(self.n)),
			("case", self.case),
			("success", "yes" if self.success else "no"),
			("lambda*", f"{self.lambda_star:.17g}"),
			("q(x*)", f"{self.q_star:.17g}"),
			("interval", f"[{self.interval_lower}, {self.interval_upper}]"),
			("stationarity", f"{self.kkt_stationarity:.3e}"),
			("g(x*)", f"{self.kkt_feasibility:.3e}"),
			("complementarity", f"{self.kkt_complementarity:.3e}"),
		]
		if self.p_star is not None:
			rows.append(("p*", f"{self.p_star:.17g}"))
		if self.naive_g is not None:
			rows.append(("g(x_particular)", f"{self.naive_g:.17g}"))
		rows += [
			("time (s)", f"{self.time_total_s:.3f}"),
			("matvecs", str(self.matvecs)),
			("CG iterations", str(self.cg_iterations)),
			("secular evals", str(self.secular_iterations)),
		]
		if self.flags:
			rows.append(("flags", ", ".join(self.flags)))
		width = max(len(k) for k, _ in rows)
		return "\n".join(f"{k.ljust(width)}  {v}" for k, v in rows)

	def format_trace(self) -> str:
		if not self.trace:
			return "(no trace)"
		lines = [f"{'#':>4}  {'kind':<10} {'lambda':>24} {'phi':>12} {'cg':>6} reg"]
		for i, e in enumerate(self.trace):
			lines.append(
				f"{i:>4}  {e['kind']:<10} {e['lam']:>24.17g} {e['phi']:>12.4e} {e['cg_iterations']:>6} "
				f"{'y' if e['regularized'] else ''}"
			)
		return "\n".join(lines)
