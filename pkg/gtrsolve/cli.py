import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional

from .bench import BenchSweep, format_bench_table, run_bench
from .bundle import ProblemBundle, write_bundle, write_vector
from .config import SolverConfig
from .core import GtrsSolver
from .errors import BundleError, GtrsError, InputError, UsageError
from .logger import setup_logging
from .oracle import dense_solve
from .probgen import GenCase, GenClass, GenSpec, generate
from .report import RunReport

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_TOLERANCE = 2


def _build_config(args) -> SolverConfig:
	cfg = SolverConfig.load(Path(args.config)) if getattr(args, "config", None) else SolverConfig()
	cfg = cfg.with_overrides(
		kkt_tol=getattr(args, "tol_kkt", None),
		width_tol=getattr(args, "tol_width", None),
		secular_max_iters=getattr(args, "max_iter", None),
		seed=getattr(args, "seed", None),
	)
	if getattr(args, "no_interp", False):
		cfg = cfg.with_overrides(use_interpolation=False)
	if getattr(args, "no_boundary_step", False):
		cfg = cfg.with_overrides(use_boundary_step=False)
	if getattr(args, "full_interval", False):
		cfg = cfg.with_overrides(full_interval=True)
	if not cfg.validate():
		raise UsageError("invalid solver configuration")
	return cfg


def _emit(report: RunReport, args, show_trace: bool = False):
	print(report.format_table())
	if show_trace:
		print()
		print(report.format_trace())
	if getattr(args, "out", None):
		report.save(Path(args.out))


def cmd_solve(args) -> int:
	cfg = _build_config(args)
	warnings: List[str] = []
	bundle = ProblemBundle.load(args.bundle)
	prob = bundle.problem(args.beta, args.lambda_hat, warnings)

	outcome = GtrsSolver(prob, cfg).solve()
	outcome.warnings = warnings + outcome.warnings
	report = RunReport.from_outcome(outcome, prob, "gtrs", include_trace=args.trace)
	_emit(report, args, args.trace)
	if args.x_out:
		write_vector(Path(args.x_out), outcome.x_star)
	return EXIT_OK if outcome.success else EXIT_TOLERANCE


def cmd_oracle(args) -> int:
	cfg = _build_config(args)
	warnings: List[str] = []
	prob = ProblemBundle.load(args.bundle).problem(args.beta, args.lambda_hat, warnings)
	outcome = dense_solve(prob, cfg, max_n=args.max_n)
	outcome.warnings = warnings
	report = RunReport.from_outcome(outcome, prob, "oracle")
	_emit(report, args)
	if args.x_out:
		write_vector(Path(args.x_out), outcome.x_star)
	return EXIT_OK if outcome.success else EXIT_TOLERANCE


def cmd_generate(args) -> int:
	spec = GenSpec(
		n=args.n,
		density=args.density,
		cond=args.cond,
		case_kind=GenCase(args.case),
		class_kind=GenClass(args.cls),
		seed=args.seed,
		identity_b=args.identity_b,
	)
	artifact = generate(spec, SolverConfig())
	bundle = write_bundle(args.out_dir, artifact.problem, artifact.metadata())
	print(f"wrote {bundle.directory} (n={spec.n}, expected case {artifact.expected_case.value}, planted lambda {artifact.planted_lambda:.17g})")
	for warn in artifact.warnings:
		print(f"warning: {warn}")
	return EXIT_OK


def cmd_bench(args) -> int:
	sweep = BenchSweep(
		sizes=args.sizes,
		conds=args.conds,
		cases=[GenCase(c) for c in args.cases],
		classes=[GenClass(c) for c in args.classes],
		repetitions=args.reps,
		density=args.density,
		oracle_max_n=args.oracle_max_n,
		seed=args.seed or 0,
	)
	rows = run_bench(sweep, _build_config(args), jobs=args.jobs)
	print(format_bench_table(rows))
	if args.out:
		path = Path(args.out)
		path.parent.mkdir(parents=True, exist_ok=True)
		with open(path, 'w', encoding='utf-8') as f:
			json.dump([r.to_dict() for r in rows], f, indent=2, sort_keys=True)
			f.write("\n")
	return EXIT_OK


def _add_solver_flags(p: argparse.ArgumentParser):
	p.add_argument("--config", help="JSON file with SolverConfig fields")
	p.add_argument("--tol-kkt", type=float, help="KKT success tolerance (default: 1e-8)")
	p.add_argument("--tol-width", type=float, help="Relative bracket width stop (default: 1e-11)")
	p.add_argument("--max-iter", type=int, help="Secular iteration cap (default: 200)")
	p.add_argument("--seed", type=int, help="Eigensolver start seed (default: 0)")


def _add_bundle_flags(p: argparse.ArgumentParser):
	p.add_argument("bundle", help="Bundle directory or manifest.json")
	p.add_argument("--beta", type=float, help="Constraint constant, if not in the manifest")
	p.add_argument("--lambda-hat", type=float, help="Multiplier with A + lambda_hat*B positive definite, if not in the manifest")
	p.add_argument("--out", help="Write the machine-readable report here")
	p.add_argument("--x-out", help="Write x* as a Matrix Market vector here")


def build_parser() -> argparse.ArgumentParser:
	parser = argparse.ArgumentParser(prog="gtrs", description="Large-scale GTRS / single-constraint QCQP solver")
	parser.add_argument("--debug", action="store_true", help="Enable debug logging")
	sub = parser.add_subparsers(dest="command", required=True)

	p = sub.add_parser("solve", help="Solve a problem bundle")
	_add_bundle_flags(p)
	_add_solver_flags(p)
	p.add_argument("--trace", action="store_true", help="Print and record the secular iteration log")
	p.add_argument("--no-interp", action="store_true", help="Disable inverse interpolation")
	p.add_argument("--no-boundary-step", action="store_true", help="Disable the primal boundary incumbent")
	p.add_argument("--full-interval", action="store_true", help="Compute both interval endpoints")
	p.set_defaults(func=cmd_solve)

	p = sub.add_parser("oracle", help="Solve a small bundle with the dense reference solver")
	_add_bundle_flags(p)
	_add_solver_flags(p)
	p.add_argument("--max-n", type=int, default=500, help="Refuse larger problems (default: 500)")
	p.set_defaults(func=cmd_oracle)

	p = sub.add_parser("generate", help="Generate a random problem bundle")
	p.add_argument("--n", type=int, required=True)
	p.add_argument("--density", type=float, default=0.01)
	p.add_argument("--cond", type=float, default=10.0)
	p.add_argument("--case", choices=[c.value for c in GenCase], default=GenCase.EASY.value)
	p.add_argument("--class", dest="cls", type=int, choices=[c.value for c in GenClass], default=1)
	p.add_argument("--seed", type=int, default=0)
	p.add_argument("--identity-b", action="store_true", help="Use B = I (trust-region subproblem)")
	p.add_argument("--out-dir", required=True)
	p.set_defaults(func=cmd_generate)

	p = sub.add_parser("bench", help="Run a benchmark sweep")
	p.add_argument("--sizes", type=int, nargs="*", default=[])
	p.add_argument("--conds", type=float, nargs="*", default=[10.0])
	p.add_argument("--cases", nargs="*", choices=[c.value for c in GenCase], default=[c.value for c in GenCase])
	p.add_argument("--classes", type=int, nargs="*", choices=[c.value for c in GenClass], default=[1])
	p.add_argument("--reps", type=int, default=10)
	p.add_argument("--density", type=float, default=0.01)
	p.add_argument("--oracle-max-n", type=int, default=200)
	p.add_argument("--jobs", type=int, default=1)
	p.add_argument("--out", help="Write the rows as JSON here")
	_add_solver_flags(p)
	p.set_defaults(func=cmd_bench)
	return parser


def main(argv: Optional[List[str]] = None) -> int:
	parser = build_parser()
	args = parser.parse_args(argv)
	setup_logging(level=logging.DEBUG if args.debug else logging.INFO)
	try:
		return args.func(args)
	except (BundleError, InputError, UsageError) as e:
		logger.error(str(e))
		print(f"error: {e}", file=sys.stderr)
		return EXIT_INPUT
	except GtrsError as e:
		logger.error(f"solve failed: {e}")
		print(f"error: {e}", file=sys.stderr)
		return EXIT_TOLERANCE


if __name__ == "__main__":
	sys.exit(main())
