"""
Problem bundles on disk.

A bundle is a directory holding manifest.json next to four Matrix Market files:
A and B in coordinate format with the symmetric qualifier, a and b in array format.
The manifest names the files and carries beta, lambda_hat and free-form metadata.
"""

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np
import scipy.io
import scipy.sparse as sp

from .errors import BundleError, GtrsError
from .models import GtrsProblem
from .sparse import SparseSymmetric

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"
DEFAULT_FILES = {"A": "A.mtx", "B": "B.mtx", "a": "a.mtx", "b": "b.mtx"}

PathLike = Union[str, Path]


def read_matrix(path: PathLike) -> SparseSymmetric:
	path = Path(path)
	if not path.exists():
		raise BundleError("file not found", str(path))
	try:
		data = scipy.io.mmread(str(path))
	except Exception as e:
		raise BundleError(f"cannot parse Matrix Market data: {e}", str(path))
	try:
		return SparseSymmetric.from_matrix(data)
	except GtrsError as e:
		raise BundleError(e.message, str(path))


def write_matrix(path: PathLike, M: SparseSymmetric):
	# symmetric Matrix Market files hold the lower triangle only
	lower = sp.coo_matrix(sp.tril(M.csr))
	scipy.io.mmwrite(str(path), lower, field="real", symmetry="symmetric", precision=17)


def read_vector(path: PathLike) -> np.ndarray:
	path = Path(path)
	if not path.exists():
		raise BundleError("file not found", str(path))
	try:
		data = scipy.io.mmread(str(path))
	except Exception as e:
		raise BundleError(f"cannot parse Matrix Market data: {e}", str(path))
	if sp.issparse(data):
		data = data.toarray()
	data = np.asarray(data, dtype=float)
	if data.ndim != 2 or 1 not in data.shape:
		raise BundleError(f"expected a column vector, got shape {data.shape}", str(path))
	return data.ravel()


def write_vector(path: PathLike, v: np.ndarray):
	scipy.io.mmwrite(str(path), np.asarray(v, dtype=float).reshape(-1, 1), field="real", precision=17)


@dataclass
class ProblemBundle:
	directory: Path
	files: Dict[str, str] = field(default_factory=lambda: dict(DEFAULT_FILES))
	beta: Optional[float] = None
	lambda_hat: Optional[float] = None
	metadata: Dict[str, Any] = field(default_factory=dict)

	@property
	def manifest_path(self) -> Path:
		return self.directory / MANIFEST_NAME

	def path(self, key: str) -> Path:
		return self.directory / self.files[key]

	@classmethod
	def load(cls, location: PathLike) -> 'ProblemBundle':
		"""Read a bundle from its directory or its manifest file."""
		location = Path(location)
		manifest = location if location.is_file() else location / MANIFEST_NAME
		if not manifest.exists():
			raise BundleError("manifest not found", str(manifest))
		try:
			with open(manifest, 'r', encoding='utf-8') as f:
				data = json.load(f)
		except (json.JSONDecodeError, IOError) as e:
			raise BundleError(f"cannot read manifest: {e}", str(manifest))
		if not isinstance(data, dict):
			raise BundleError("manifest must be a JSON object", str(manifest))

		files = dict(DEFAULT_FILES)
		files.update({k: v for k, v in data.get("files", {}).items() if k in DEFAULT_FILES})
		return cls(
			directory=manifest.parent,
			files=files,
			beta=_optional_float(data.get("beta"), "beta", manifest),
			lambda_hat=_optional_float(data.get("lambda_hat"), "lambda_hat", manifest),
			metadata=data.get("metadata", {}),
		)

	def resolve_scalars(
		self,
		beta: Optional[float] = None,
		lambda_hat: Optional[float] = None,
		warnings: Optional[List[str]] = None,
	) -> Tuple[float, float]:
		"""Combine manifest scalars with command-line values; the manifest wins on conflict."""
		resolved = []
		for name, from_manifest, from_flag in (("beta", self.beta, beta), ("lambda_hat", self.lambda_hat, lambda_hat)):
			if from_manifest is not None and from_flag is not None and from_manifest != from_flag:
				msg = f"{name}={from_flag!r} from the command line conflicts with the manifest ({from_manifest!r}); using the manifest"
				logger.warning(msg)
				if warnings is not None:
					warnings.append(msg)
			value = from_manifest if from_manifest is not None else from_flag
			if value is None:
				raise BundleError(f"{name} is given neither in the manifest nor on the command line", str(self.manifest_path))
			resolved.append(value)
		return resolved[0], resolved[1]

	def problem(
		self,
		beta: Optional[float] = None,
		lambda_hat: Optional[float] = None,
		warnings: Optional[List[str]] = None,
	) -> GtrsProblem:
		A = read_matrix(self.path("A"))
		B = read_matrix(self.path("B"))
		a = read_vector(self.path("a"))
		b = read_vector(self.path("b"))
		for key, size in (("B", B.n), ("a", a.shape[0]), ("b", b.shape[0])):
			if size != A.n:
				raise BundleError(f"dimension {size} does not match A ({A.n})", str(self.path(key)))
		beta_v, lam_v = self.resolve_scalars(beta, lambda_hat, warnings)
		try:
			return GtrsProblem(A, B, a, b, beta_v, lam_v)
		except GtrsError as e:
			raise BundleError(e.message, str(self.manifest_path))

	def save_manifest(self):
		data = {
			"files": self.files,
			"beta": self.beta,
			"lambda_hat": self.lambda_hat,
			"metadata": self.metadata,
		}
		with open(self.manifest_path, 'w', encoding='utf-8') as f:
			json.dump(data, f, indent=2, sort_keys=True)
			f.write("\n")


def _optional_float(value, name: str, path: Path) -> Optional[float]:
	if value is None:
		return None
	try:
		value = float(value)
	except (TypeError, ValueError):
		raise BundleError(f"{name} must be a number, got {value!r}", str(path))
	if not math.isfinite(value):
		raise BundleError(f"{name} must be finite", str(path))
	return value


def write_bundle(directory: PathLike, prob: GtrsProblem, metadata: Optional[Dict[str, Any]] = None) -> ProblemBundle:
	"""Write prob as a bundle under directory (created if needed)."""
	directory = Path(directory)
	directory.mkdir(parents=True, exist_ok=True)
	bundle = ProblemBundle(directory, dict(DEFAULT_FILES), prob.beta, prob.lambda_hat, dict(metadata or {}))
	write_matrix(bundle.path("A"), prob.A)
	write_matrix(bundle.path("B"), prob.B)
	write_vector(bundle.path("a"), prob.a)
	write_vector(bundle.path("b"), prob.b)
	bundle.save_manifest()
	logger.info(f"Wrote bundle (n={prob.n}) to {directory}")
	return bundle


def load_problem(location: PathLike, beta: Optional[float] = None, lambda_hat: Optional[float] = None) -> GtrsProblem:
	return ProblemBundle.load(location).problem(beta, lambda_hat)
