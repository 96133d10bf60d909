"""
Matrix-free sparse symmetric linear algebra.

Provides the sparse symmetric container used for A and B, conjugate gradients
with curvature breakdown detection, a restarted block Krylov Rayleigh-Ritz
eigensolver for the smallest eigenpairs of a symmetric pencil with positive
definite metric, and numerical null-space bases of singular pencil points.
"""

import logging
from dataclasses import dataclass
from typing import Callable, Iterable, List, Optional, Tuple, Union

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.sparse.linalg import LinearOperator, aslinearoperator

from .errors import EigenSolverError, EndpointNotSingularError, UsageError

logger = logging.getLogger(__name__)

Vector = np.ndarray


class SparseSymmetric:
	"""
	Symmetric sparse matrix. Each off-diagonal pair is stored once with row <= col;
	duplicate entries are summed and explicit zeros dropped at construction.
	Instances are never mutated after construction.
	"""

	def __init__(self, n: int, rows: Iterable[int], cols: Iterable[int], values: Iterable[float]):
		n = int(n)
		if n < 0:
			raise UsageError(f"dimension must be non-negative, got {n}")

		rows = np.asarray(list(rows) if not isinstance(rows, np.ndarray) else rows, dtype=np.int64).ravel()
		cols = np.asarray(list(cols) if not isinstance(cols, np.ndarray) else cols, dtype=np.int64).ravel()
		values = np.asarray(list(values) if not isinstance(values, np.ndarray) else values, dtype=float).ravel()
		if not (rows.size == cols.size == values.size):
			raise UsageError("rows, cols and values must have equal length")
		if rows.size and (min(rows.min(), cols.min()) < 0 or max(rows.max(), cols.max()) >= n):
			raise UsageError(f"entry index out of range for dimension {n}")

		lo = np.minimum(rows, cols)
		hi = np.maximum(rows, cols)
		upper = sp.coo_matrix((values, (lo, hi)), shape=(n, n)).tocsr()
		upper.sum_duplicates()
		upper.eliminate_zeros()
		upper.sort_indices()

		full = (upper + upper.T - sp.diags(upper.diagonal(), format="csr")).tocsr()
		full.sum_duplicates()
		full.eliminate_zeros()
		full.sort_indices()

		self._n = n
		self._upper = upper
		self._full = full

	# --- Constructors ---

	@classmethod
	def from_matrix(cls, matrix, sym_tol: float = 1e-12) -> 'SparseSymmetric':
		"""
		Build from a dense array or scipy sparse matrix.
		Only the upper triangle is kept; the input must be symmetric to sym_tol (relative).
		"""
		m = sp.coo_matrix(matrix)
		if m.shape[0] != m.shape[1]:
			raise UsageError(f"matrix must be square, got shape {m.shape}")
		csr = m.tocsr()
		asym = abs(csr - csr.T)
		scale = max(abs(csr).max() if csr.nnz else 0.0, 1.0)
		if asym.nnz and asym.max() > sym_tol * scale:
			raise UsageError(f"matrix is not symmetric (max asymmetry {asym.max():.3e})")
		keep = m.row <= m.col
		return cls(m.shape[0], m.row[keep], m.col[keep], m.data[keep])

	@classmethod
	def identity(cls, n: int, scale: float = 1.0) -> 'SparseSymmetric':
		idx = np.arange(n)
		return cls(n, idx, idx, np.full(n, float(scale)))

	# --- Accessors ---

	@property
	def n(self) -> int:
		return self._n

	@property
	def nnz(self) -> int:
		"""Number of stored (row <= col) entries."""
		return int(self._upper.nnz)

	@property
	def csr(self) -> sp.csr_matrix:
		"""Full symmetric expansion in CSR form. Treat as read-only."""
		return self._full

	def entries(self) -> List[Tuple[int, int, float]]:
		"""Stored entries as (row, col, value) with row <= col, in row-major order."""
		coo = self._upper.tocoo()
		return [(int(r), int(c), float(v)) for r, c, v in zip(coo.row, coo.col, coo.data)]

	def to_dense(self) -> np.ndarray:
		return self._full.toarray()

	def diagonal(self) -> Vector:
		return self._full.diagonal()

	def matvec(self, x: Vector) -> Vector:
		x = np.asarray(x, dtype=float)
		if x.shape[0] != self._n:
			raise UsageError(f"dimension mismatch: matrix is {self._n}x{self._n}, vector has length {x.shape[0]}")
		# CSR traversal order is fixed, so the result is bit-reproducible
		return self._full @ x

	def __matmul__(self, x):
		return self.matvec(x)

	def combine(self, other: 'SparseSymmetric', alpha: float = 1.0) -> 'SparseSymmetric':
		"""Return self + alpha * other."""
		if other.n != self._n:
			raise UsageError("dimension mismatch in combine")
		summed = (self._upper + alpha * other._upper).tocoo()
		return SparseSymmetric(self._n, summed.row, summed.col, summed.data)

	def as_operator(self) -> LinearOperator:
		return aslinearoperator(self._full)

	def __repr__(self) -> str:
		return f"SparseSymmetric(n={self._n}, nnz={self.nnz})"


def matvec(M: SparseSymmetric, x: Vector) -> Vector:
	"""Symmetric sparse matrix-vector product."""
	return M.matvec(x)


# --- Linear operators ---

OperatorLike = Union[SparseSymmetric, LinearOperator, np.ndarray, sp.spmatrix]


def as_operator(obj: OperatorLike) -> LinearOperator:
	"""Wrap matrices, sparse matrices and SparseSymmetric instances as a LinearOperator."""
	if isinstance(obj, SparseSymmetric):
		return obj.as_operator()
	if isinstance(obj, LinearOperator):
		return obj
	return aslinearoperator(obj)


def pencil_operator(A: SparseSymmetric, B: SparseSymmetric, lam: float) -> LinearOperator:
	"""The operator A + lam*B, summed once in sparse form."""
	if A.n != B.n:
		raise UsageError(f"dimension mismatch: A is {A.n}, B is {B.n}")
	return aslinearoperator((A.csr + lam * B.csr).tocsr())


def low_rank_update(op: OperatorLike, W: np.ndarray, alpha: float) -> LinearOperator:
	"""The operator x -> op(x) + alpha * W (W^T x)."""
	base = as_operator(op)
	W = np.asarray(W, dtype=float)
	if W.ndim == 1:
		W = W[:, None]
	if W.shape[1] == 0:
		return base

	def _mv(x):
		x = np.ravel(x)
		return base.matvec(x) + alpha * (W @ (W.T @ x))

	return LinearOperator(base.shape, matvec=_mv, rmatvec=_mv, dtype=float)


def complement_projector(Z: np.ndarray) -> Callable[[Vector], Vector]:
	"""x -> (I - Z Z^T) x for Z with orthonormal columns."""
	Z = np.asarray(Z, dtype=float)

	def _proj(x):
		x = np.ravel(x)
		if Z.shape[1] == 0:
			return x
		return x - Z @ (Z.T @ x)

	return _proj


def estimate_norm(op: OperatorLike, iters: int = 12, seed: int = 0) -> float:
	"""Spectral norm estimate of a symmetric operator by power iteration."""
	op = as_operator(op)
	n = op.shape[0]
	if n == 0:
		return 0.0
	rng = np.random.default_rng(seed)
	v = rng.standard_normal(n)
	v /= np.linalg.norm(v)
	est = 0.0
	for _ in range(max(iters, 1)):
		w = op.matvec(v)
		nrm = float(np.linalg.norm(w))
		est = max(est, nrm)
		if nrm == 0.0:
			break
		v = w / nrm
	return est


# --- Conjugate gradient ---

@dataclass(frozen=True)
class CgStats:
	"""Diagnostics of one conjugate gradient run."""
	iterations: int
	final_residual_norm: float
	converged: bool
	breakdown: bool  # p^T op p <= 0 met: operator is not positive definite
	tolerance: float = 0.0  # absolute residual target
	matvecs: int = 0


def cg_solve(
	op: OperatorLike,
	rhs: Vector,
	tol: float = 1e-10,
	max_iter: Optional[int] = None,
	x0: Optional[Vector] = None,
	projector: Optional[Callable[[Vector], Vector]] = None,
) -> Tuple[Vector, CgStats]:
	"""
	Plain conjugate gradients for op x = rhs.

	Converged means ||rhs - op(x)|| <= tol * max(1, ||rhs||), checked on the true residual.
	When a direction with p^T op p <= 0 shows up the run stops with breakdown=True and the
	best iterate seen so far is returned. With a projector every residual and update is
	kept in the projector's range (deflated CG on a singular consistent system).
	"""
	op = as_operator(op)
	n = op.shape[0]
	rhs = np.asarray(rhs, dtype=float).ravel()
	if rhs.shape[0] != n:
		raise UsageError(f"dimension mismatch: operator is {n}x{n}, rhs has length {rhs.shape[0]}")
	if tol <= 0:
		raise UsageError("cg tolerance must be positive")
	if max_iter is None:
		max_iter = 10 * max(n, 1)

	proj = projector if projector is not None else (lambda v: v)
	rhs = proj(rhs)
	target = tol * max(1.0, float(np.linalg.norm(rhs)))
	matvecs = 0

	if x0 is None:
		x = np.zeros(n)
		r = rhs.copy()
	else:
		x = proj(np.asarray(x0, dtype=float).ravel().copy())
		r = proj(rhs - op.matvec(x))
		matvecs += 1

	rr = float(r @ r)
	best_x, best_res = x.copy(), np.sqrt(rr)
	if best_res <= target:
		return x, CgStats(0, best_res, True, False, target, matvecs)

	p = r.copy()
	iterations = 0
	while iterations < max_iter:
		iterations += 1
		q = proj(op.matvec(p))
		matvecs += 1
		curv = float(p @ q)
		if not np.isfinite(curv) or curv <= 0.0:
			logger.debug(f"CG breakdown at iteration {iterations}: curvature {curv:.3e}")
			return best_x, CgStats(iterations, best_res, False, True, target, matvecs)

		alpha = rr / curv
		x += alpha * p
		if iterations % 50 == 0:
			r = proj(rhs - op.matvec(x))
			matvecs += 1
		else:
			r -= alpha * q
		rr_new = float(r @ r)
		res = np.sqrt(rr_new)

		if res <= target:
			# confirm on the true residual before declaring convergence
			r_true = proj(rhs - op.matvec(x))
			matvecs += 1
			res_true = float(np.linalg.norm(r_true))
			if res_true <= target:
				return x, CgStats(iterations, res_true, True, False, target, matvecs)
			r = r_true
			rr_new = res_true ** 2
			res = res_true
			p = r.copy()
			rr = rr_new
			if res < best_res:
				best_x, best_res = x.copy(), res
			continue

		if res < best_res:
			best_x, best_res = x.copy(), res
		beta = rr_new / rr
		p = r + beta * p
		rr = rr_new

	logger.debug(f"CG stopped after {iterations} iterations, residual {best_res:.3e} > {target:.3e}")
	return best_x, CgStats(iterations, best_res, False, False, target, matvecs)


# --- Generalized eigenproblems ---

@dataclass
class EigResult:
	"""Smallest eigenpairs of a pencil (M, S)."""
	values: np.ndarray
	vectors: np.ndarray  # columns, S-orthonormal
	residuals: np.ndarray  # ||M v - theta S v|| / ||v||
	iterations: int = 0
	matvecs: int = 0
	converged: bool = True


class _SBasis:
	"""Growing S-orthonormal basis that also keeps S V and M V."""

	def __init__(self, M: LinearOperator, S: LinearOperator):
		self.M = M
		self.S = S
		self.V: List[Vector] = []
		self.SV: List[Vector] = []
		self.MV: List[Vector] = []
		self.matvecs = 0

	@property
	def size(self) -> int:
		return len(self.V)

	def add(self, w: Vector) -> Optional[Vector]:
		"""S-orthogonalize w against the basis; returns the accepted vector or None."""
		w = np.array(w, dtype=float)
		Sw = self.S.matvec(w)
		self.matvecs += 1
		start = np.sqrt(max(float(w @ Sw), 0.0))
		if start == 0.0 or not np.isfinite(start):
			return None
		if self.V:
			V = np.column_stack(self.V)
			SV = np.column_stack(self.SV)
			for _ in range(2):
				c = V.T @ Sw
				w -= V @ c
				Sw -= SV @ c
		nrm = np.sqrt(max(float(w @ Sw), 0.0))
		if nrm <= 1e-10 * start:
			return None
		w /= nrm
		Sw /= nrm
		self.V.append(w)
		self.SV.append(Sw)
		self.MV.append(self.M.matvec(w))
		self.matvecs += 1
		return w

	def arrays(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
		return np.column_stack(self.V), np.column_stack(self.SV), np.column_stack(self.MV)


def _dense_of(op: LinearOperator) -> np.ndarray:
	n = op.shape[0]
	D = np.column_stack([op.matvec(e) for e in np.eye(n)]) if n else np.zeros((0, 0))
	return 0.5 * (D + D.T)


def _pair_residuals(MX: np.ndarray, SX: np.ndarray, X: np.ndarray, theta: np.ndarray) -> np.ndarray:
	R = MX - SX * theta[None, :]
	norms = np.linalg.norm(X, axis=0)
	norms[norms == 0.0] = 1.0
	return np.linalg.norm(R, axis=0) / norms


def min_gen_eig(
	M: OperatorLike,
	S: OperatorLike,
	k: int = 1,
	tol: float = 1e-10,
	max_iter: int = 300,
	krylov_dim: int = 8,
	cg_tol: float = 1e-12,
	seed: int = 0,
	norm_iters: int = 12,
	dense_limit: int = 200,
) -> EigResult:
	"""
	The k algebraically smallest eigenpairs of M v = theta S v, S positive definite.

	Each restart builds the block Krylov space [X, R, K R, ..., K^m R] of K = S^{-1} M, where
	R = S^{-1}(M X - S X Theta) holds the preconditioned Ritz residuals (S solves by CG),
	S-orthonormalizes it and extracts Ritz pairs by Rayleigh-Ritz.
	A pair is accepted when ||M v - theta S v|| / ||v|| <= tol * (||M|| + |theta| ||S||).
	Small problems, where the search space would cover the whole space anyway, are
	solved densely.
	"""
	Mop = as_operator(M)
	Sop = as_operator(S)
	n = Mop.shape[0]
	if Sop.shape[0] != n:
		raise UsageError(f"dimension mismatch: M is {n}, S is {Sop.shape[0]}")
	if k < 1:
		raise UsageError("k must be at least 1")
	k = min(k, n)
	block = min(n, k + 1)

	m_norm = estimate_norm(Mop, norm_iters, seed)
	s_norm = estimate_norm(Sop, norm_iters, seed)

	if n <= max(dense_limit, block * (krylov_dim + 1)):
		Md = _dense_of(Mop)
		Sd = _dense_of(Sop)
		try:
			theta, X = scipy.linalg.eigh(Md, Sd)
		except np.linalg.LinAlgError as e:
			raise UsageError(f"metric of the pencil is not positive definite: {e}")
		theta, X = theta[:k], X[:, :k]
		res = _pair_residuals(Md @ X, Sd @ X, X, theta)
		return EigResult(theta, X, res, iterations=1, matvecs=2 * n, converged=True)

	matvecs = 0

	def solve_S(v: Vector) -> Vector:
		nonlocal matvecs
		x, stats = cg_solve(Sop, v, tol=cg_tol)
		matvecs += stats.matvecs
		if stats.breakdown:
			raise UsageError("metric of the pencil is not positive definite (CG breakdown)")
		return x

	def apply_K(v: Vector) -> Vector:
		nonlocal matvecs
		matvecs += 1
		return solve_S(Mop.matvec(v))

	rng = np.random.default_rng(seed)
	X = rng.standard_normal((n, block))
	R: Optional[np.ndarray] = None
	best: Optional[EigResult] = None

	for it in range(1, max_iter + 1):
		basis = _SBasis(Mop, Sop)
		for col in X.T:
			basis.add(col)

		if R is None:
			fresh = [apply_K(v) for v in basis.V]
		else:
			fresh = list(R.T)
		for _ in range(krylov_dim):
			added = [v for v in (basis.add(w) for w in fresh) if v is not None]
			if not added or basis.size >= n:
				break
			fresh = [apply_K(v) for v in added]

		V, SV, MV = basis.arrays()
		matvecs += basis.matvecs
		H = V.T @ MV
		G = V.T @ SV
		theta_all, Y = scipy.linalg.eigh(0.5 * (H + H.T), 0.5 * (G + G.T))
		Y = Y[:, :block]
		theta = theta_all[:block]
		X = V @ Y
		SX = SV @ Y
		MX = MV @ Y
		res = _pair_residuals(MX, SX, X, theta)

		scale = tol * (m_norm + np.abs(theta) * s_norm)
		best = EigResult(theta[:k].copy(), X[:, :k].copy(), res[:k].copy(), it, matvecs, False)
		logger.debug(f"eig restart {it}: theta={theta[:k]} residuals={res[:k]}")
		if np.all(res[:k] <= scale[:k]):
			best.converged = True
			return best

		# preconditioned residuals S^{-1}(M x - theta S x) extend the next search space
		R = np.column_stack([solve_S(r) for r in (MX - SX * theta[None, :]).T])

	raise EigenSolverError(
		f"eigensolver did not converge in {max_iter} restarts (residuals {best.residuals})", best=best
	)


@dataclass
class NullBasis:
	"""Numerical null space of a singular PSD pencil point."""
	s_orthonormal: np.ndarray  # columns with z_i^T S z_j = delta_ij
	orthonormal: np.ndarray  # Euclidean orthonormal columns spanning the same space
	values: np.ndarray  # pencil eigenvalues accepted as zero
	cutoff: float = 0.0
	saturated: bool = False  # r == max_dim: the null space may be larger

	@property
	def rank(self) -> int:
		return int(self.s_orthonormal.shape[1])


def nullspace_basis(
	P: OperatorLike,
	S: OperatorLike,
	tol: float = 1e-8,
	max_dim: int = 4,
	eig_tol: float = 1e-10,
	max_iter: int = 300,
	krylov_dim: int = 8,
	seed: int = 0,
	norm_iters: int = 12,
	dense_limit: int = 200,
) -> NullBasis:
	"""
	Basis of the numerical null space of P (PSD, singular) from the smallest
	eigenpairs of (P, S). An eigenvalue counts as zero when it is at most
	tol * ||P|| / ||S|| (norm estimates by power iteration).
	"""
	Pop = as_operator(P)
	Sop = as_operator(S)
	n = Pop.shape[0]
	k = min(max(max_dim, 1), n)

	eig = min_gen_eig(
		Pop, Sop, k=k, tol=eig_tol, max_iter=max_iter, krylov_dim=krylov_dim,
		seed=seed, norm_iters=norm_iters, dense_limit=dense_limit,
	)
	p_norm = estimate_norm(Pop, norm_iters, seed)
	s_norm = estimate_norm(Sop, norm_iters, seed)
	cutoff = tol * (p_norm / s_norm if s_norm > 0 else p_norm)

	keep = eig.values <= cutoff
	r = int(np.count_nonzero(keep))
	if r == 0:
		raise EndpointNotSingularError(smallest=float(eig.values[0]) if eig.values.size else None)

	Zs = eig.vectors[:, keep]
	Z, _ = np.linalg.qr(Zs)
	saturated = r == k and k < n
	if saturated:
		logger.warning(f"null space search saturated at {k} vectors; raise null_max_dim if the kernel is larger")
	return NullBasis(Zs, Z, eig.values[keep], cutoff, saturated)
