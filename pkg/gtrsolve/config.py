import json
import logging
from dataclasses import dataclass, asdict, replace
from pathlib import Path
from typing import Optional

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SecularConfig:
	"""Stopping rules and switches of the secular root finder."""
	kkt_tol: float = 1e-8
	width_tol: float = 1e-11
	max_iters: int = 200
	interp_guard: float = 1e-14
	use_interpolation: bool = True
	use_boundary_step: bool = True
	constant_phi_tol: float = 1e-12

	def validate(self) -> bool:
		for name in ("kkt_tol", "width_tol", "max_iters", "interp_guard"):
			if getattr(self, name) <= 0:
				logger.error(f"SecularConfig.{name} must be positive")
				return False
		return True


@dataclass(frozen=True)
class SolverConfig:
	"""Tolerances, iteration caps and seeds used by a solve."""
	# Conjugate gradient
	cg_tol: float = 1e-10
	cg_max_iter: Optional[int] = None  # None = 10 * n

	# Generalized eigensolver
	eig_tol: float = 1e-10
	eig_max_iter: int = 300
	eig_krylov_dim: int = 8
	eig_norm_iters: int = 12
	eig_dense_limit: int = 200  # pencils up to this size are solved densely

	# Endpoint analysis
	null_rank_tol: float = 1e-8
	null_max_dim: int = 4
	range_tol: float = 1e-8
	p_star_tol: float = 1e-8

	# Near-singular regularization
	endpoint_guard: float = 1e-5
	reg_alpha: float = 1.0

	# Acceptance
	phi_tol: float = 1e-10
	kkt_tol: float = 1e-8

	# Secular iteration
	width_tol: float = 1e-11
	secular_max_iters: int = 200
	interp_guard: float = 1e-14
	use_interpolation: bool = True
	use_boundary_step: bool = True
	constant_phi_tol: float = 1e-12

	refine_steps: int = 2
	full_interval: bool = False  # also compute the endpoint the case dispatch does not need
	doubling_cap: int = 60
	dense_threshold: int = 500
	seed: int = 0

	def to_dict(self) -> dict:
		return asdict(self)

	@classmethod
	def from_dict(cls, data: dict) -> 'SolverConfig':
		# Only use known fields
		known = {k: v for k, v in data.items() if k in cls.__dataclass_fields__}
		unknown = sorted(set(data) - set(known))
		if unknown:
			logger.warning(f"Ignoring unknown config keys: {', '.join(unknown)}")
		return cls(**known)

	def save(self, path: Path):
		"""Save config to JSON file."""
		path = Path(path)
		path.parent.mkdir(parents=True, exist_ok=True)
		with open(path, 'w', encoding='utf-8') as f:
			json.dump(self.to_dict(), f, indent=2, sort_keys=True)
		logger.debug(f"Saved solver config to {path}")

	@classmethod
	def load(cls, path: Path) -> 'SolverConfig':
		"""Load config from JSON file, or return defaults if not found."""
		path = Path(path)
		if not path.exists():
			logger.debug(f"No config found at {path}, using defaults")
			return cls()

		try:
			with open(path, 'r', encoding='utf-8') as f:
				data = json.load(f)
			return cls.from_dict(data)
		except (json.JSONDecodeError, IOError) as e:
			logger.warning(f"Failed to load config: {e}, using defaults")
			return cls()

	def with_overrides(self, **changes) -> 'SolverConfig':
		"""Copy with the given fields replaced; None values are skipped."""
		return replace(self, **{k: v for k, v in changes.items() if v is not None})

	def validate(self) -> bool:
		"""Validate config consistency."""
		positive = (
			"cg_tol", "eig_tol", "eig_max_iter", "eig_krylov_dim", "null_rank_tol",
			"null_max_dim", "range_tol", "endpoint_guard", "reg_alpha", "phi_tol",
			"kkt_tol", "width_tol", "secular_max_iters", "interp_guard",
		)
		for name in positive:
			if getattr(self, name) <= 0:
				logger.error(f"SolverConfig.{name} must be positive")
				return False
		if self.cg_max_iter is not None and self.cg_max_iter <= 0:
			logger.error("cg_max_iter must be positive")
			return False
		if self.refine_steps < 0 or self.doubling_cap < 1:
			logger.error("refine_steps must be >= 0 and doubling_cap >= 1")
			return False
		return True

	def cg_iterations(self, n: int) -> int:
		return self.cg_max_iter if self.cg_max_iter is not None else 10 * max(n, 1)

	def secular_config(self) -> SecularConfig:
		return SecularConfig(
			kkt_tol=self.kkt_tol,
			width_tol=self.width_tol,
			max_iters=self.secular_max_iters,
			interp_guard=self.interp_guard,
			use_interpolation=self.use_interpolation,
			use_boundary_step=self.use_boundary_step,
			constant_phi_tol=self.constant_phi_tol,
		)
