"""Dense real matrix kernels: products, norms, factorizations, least squares.

Matrices are plain ``numpy.ndarray`` objects with ``dtype=float64``, two
dimensions, and C (row-major) memory order; :func:`as_matrix` is the
validating constructor every public entry point runs its arguments
through.  All operations are pure functions and every returned factor is
freshly allocated, so results can be shared across threads freely.

Conventions fixed here and relied on elsewhere:

* ``pivoted_qr`` returns factors with a nonnegative ``R`` diagonal and a
  permutation ``perm`` such that ``a[:, perm] == q @ r_factor`` up to
  roundoff.  The permutation matrix ``P`` with ``P[j, perm[j]] = 1``
  satisfies ``a == q @ r_factor @ P``.
* rank cutoffs everywhere follow the same rule: singular values (or
  ``R`` diagonal magnitudes) at most ``rank_tol`` times the largest one
  are treated as zero.  The default ``rank_tol`` is
  ``max(rows, cols) * machine epsilon``.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import qr as _scipy_qr
from scipy.linalg import svd as _scipy_svd
from scipy.linalg import svdvals as _svdvals

from .errors import ContractViolation, ConvergenceError

__all__ = [
    "PivotedQRFactors",
    "SVDFactors",
    "WhiteningOperator",
    "as_matrix",
    "default_rank_tol",
    "matmul",
    "spectral_norm",
    "pivoted_qr",
    "svd",
    "pseudoinverse",
    "least_squares_solve",
    "whitening_operator",
    "seminorm_A",
]

# below this min(rows, cols), spectral_norm just takes the full set of
# singular values instead of iterating
_SVD_FALLBACK_DIM = 256

_POWER_ITERATION_CAP = 5000


def as_matrix(x, name="matrix"):
    """Validate and return ``x`` as a 2-D float64 C-ordered array.

    Rejects empty matrices, wrong dimensionality and non-finite entries.
    """
    a = np.ascontiguousarray(x, dtype=np.float64)
    if a.ndim != 2:
        raise ContractViolation(f"{name} must be 2-D, got shape {a.shape}")
    if a.shape[0] < 1 or a.shape[1] < 1:
        raise ContractViolation(f"{name} must have positive dimensions, got {a.shape}")
    if not np.isfinite(a).all():
        raise ContractViolation(f"{name} contains non-finite entries")
    return a


def default_rank_tol(a):
    """Default relative rank cutoff for a matrix of this shape."""
    return max(a.shape) * float(np.finfo(np.float64).eps)


def _resolve_rank_tol(a, rank_tol):
    if rank_tol is None:
        return default_rank_tol(a)
    rank_tol = float(rank_tol)
    if rank_tol < 0:
        raise ContractViolation(f"rank_tol must be >= 0, got {rank_tol}")
    return rank_tol


def matmul(a, b):
    """Matrix product ``a @ b`` with shape checking."""
    a = as_matrix(a, "a")
    b = as_matrix(b, "b")
    if a.shape[1] != b.shape[0]:
        raise ContractViolation(
            f"cannot multiply {a.shape[0]}x{a.shape[1]} by {b.shape[0]}x{b.shape[1]}:"
            " inner dimensions differ"
        )
    return a @ b


def spectral_norm(m, tol=1e-8):
    """Largest singular value of ``m`` to relative accuracy ``tol``.

    Small matrices (min dimension <= 256) go straight to LAPACK singular
    values.  Larger ones use power iteration on the smaller Gram matrix,
    applied as two matrix-vector products per step, with a deterministic
    all-ones start vector, so repeated runs give identical output.

    Raises ConvergenceError carrying the best estimate if the iteration
    cap is reached before the residual drops below tolerance.
    """
    m = as_matrix(m)
    tol = float(tol)
    if tol <= 0:
        raise ContractViolation(f"tol must be > 0, got {tol}")
    if not m.any():
        return 0.0
    if min(m.shape) <= _SVD_FALLBACK_DIM:
        return float(_svdvals(m)[0])

    if m.shape[1] <= m.shape[0]:
        dim = m.shape[1]

        def gram(v):
            return m.T @ (m @ v)
    else:
        dim = m.shape[0]

        def gram(v):
            return m @ (m.T @ v)

    v = np.full(dim, 1.0 / np.sqrt(dim))
    restarted = False
    lam = 0.0
    resid = np.inf
    for _ in range(_POWER_ITERATION_CAP):
        w = gram(v)
        norm_w = float(np.linalg.norm(w))
        if norm_w == 0.0:
            if not restarted:
                # start vector happened to lie in the null space; retry
                # from a ramp before giving up on iteration
                v = np.arange(1.0, dim + 1.0)
                v /= np.linalg.norm(v)
                restarted = True
                continue
            return float(_svdvals(m)[0])
        lam = float(v @ w)
        resid = float(np.linalg.norm(w - lam * v))
        if resid <= tol * lam:
            return float(np.sqrt(lam))
        v = w / norm_w
    best = float(np.sqrt(max(lam, 0.0)))
    raise ConvergenceError(
        f"power iteration did not converge in {_POWER_ITERATION_CAP} steps"
        f" (estimate {best:.6e}, residual {resid:.3e})",
        estimate=best,
        residual=resid,
    )


@dataclass(frozen=True)
class PivotedQRFactors:
    """Column-pivoted QR with the numerically negligible tail dropped.

    ``q`` is m x r with orthonormal columns, ``r_factor`` is r x n upper
    trapezoidal with positive nonincreasing diagonal, ``perm`` holds the
    pivot order: ``a[:, perm[j]]`` is the column reduced at step ``j``.
    """

    q: np.ndarray
    r_factor: np.ndarray
    perm: np.ndarray
    rank: int

    def permutation_matrix(self):
        n = self.perm.size
        p = np.zeros((n, n))
        p[np.arange(n), self.perm] = 1.0
        return p

    def reconstruct(self):
        """Return ``q @ r_factor`` with columns moved back to input order."""
        prod = self.q @ self.r_factor
        out = np.empty_like(prod)
        out[:, self.perm] = prod
        return out


def pivoted_qr(a, rank_tol=None):
    """Householder QR with greedy column pivoting, truncated at ``rank_tol``.

    The retained rank is the number of diagonal entries of R exceeding
    ``rank_tol`` times the first (largest) one; at least one column is
    always retained.  Signs are normalized so the retained diagonal of R
    is positive.
    """
    a = as_matrix(a, "a")
    rank_tol = _resolve_rank_tol(a, rank_tol)
    if not a.any():
        raise ContractViolation("zero matrix has no pivoted QR with nonzero diagonal")
    q, r, piv = _scipy_qr(a, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    rank = max(int(np.sum(diag > rank_tol * diag[0])), 1)
    signs = np.where(np.diag(r)[:rank] < 0, -1.0, 1.0)
    q = q[:, :rank] * signs
    r = r[:rank, :] * signs[:, None]
    return PivotedQRFactors(q=q, r_factor=r, perm=piv, rank=rank)


@dataclass(frozen=True)
class SVDFactors:
    """Thin SVD ``m = u @ diag(sigma) @ v.T`` with orthonormal u, v columns."""

    u: np.ndarray
    sigma: np.ndarray
    v: np.ndarray

    def truncate(self, rank):
        return SVDFactors(
            u=self.u[:, :rank], sigma=self.sigma[:rank], v=self.v[:, :rank]
        )


def svd(m):
    """Thin SVD of ``m`` (LAPACK bidiagonalization).

    Falls back from the divide-and-conquer driver to the classical one if
    the former fails to converge; raises ConvergenceError if both do.
    """
    m = as_matrix(m)
    try:
        u, s, vh = np.linalg.svd(m, full_matrices=False)
    except np.linalg.LinAlgError:
        try:
            u, s, vh = _scipy_svd(m, full_matrices=False, lapack_driver="gesvd")
        except Exception as exc:
            raise ConvergenceError(
                f"SVD failed to converge on a {m.shape[0]}x{m.shape[1]} matrix"
                f" with both LAPACK drivers: {exc}"
            ) from exc
    return SVDFactors(u=u, sigma=s, v=vh.T)


def _truncated_svd_rank(sigma, rank_tol):
    """Count of singular values above the relative cutoff (0 for a zero matrix)."""
    if sigma.size == 0 or sigma[0] == 0.0:
        return 0
    return int(np.sum(sigma > rank_tol * sigma[0]))


def pseudoinverse(m, rank_tol=None):
    """Moore-Penrose pseudoinverse with the shared rank cutoff rule."""
    m = as_matrix(m)
    rank_tol = _resolve_rank_tol(m, rank_tol)
    if not m.any():
        return np.zeros((m.shape[1], m.shape[0]))
    f = svd(m)
    r = _truncated_svd_rank(f.sigma, rank_tol)
    if r == 0:
        return np.zeros((m.shape[1], m.shape[0]))
    return (f.v[:, :r] / f.sigma[:r]) @ f.u[:, :r].T


def least_squares_solve(a, b, rank_tol=None):
    """Minimum-norm least squares solution ``x`` of ``a @ x ~ b``.

    Computed through the thin SVD of ``a`` without materializing the
    pseudoinverse, so a wide ``b`` costs two tall-thin products.
    """
    a = as_matrix(a, "a")
    b = as_matrix(b, "b")
    if a.shape[0] != b.shape[0]:
        raise ContractViolation(
            f"a has {a.shape[0]} rows but b has {b.shape[0]}; row counts must match"
        )
    rank_tol = _resolve_rank_tol(a, rank_tol)
    if not a.any():
        return np.zeros((a.shape[1], b.shape[1]))
    f = svd(a)
    r = _truncated_svd_rank(f.sigma, rank_tol)
    if r == 0:
        return np.zeros((a.shape[1], b.shape[1]))
    return f.v[:, :r] @ ((f.u[:, :r].T @ b) / f.sigma[:r, None])


@dataclass(frozen=True)
class WhiteningOperator:
    """The operator ``s = v_r @ u_r.T`` kept in factored form.

    Built from the thin SVD of a design matrix ``a`` restricted to
    singular values above the rank cutoff; every singular value of the
    represented operator is exactly 1.  Applying ``s`` then its adjoint
    reproduces the orthogonal projection onto the range of ``a``.  The
    factored form is used so tall design matrices never require an
    n x m product.
    """

    v_r: np.ndarray
    u_r: np.ndarray

    @property
    def rank(self):
        return self.v_r.shape[1]

    def apply(self, b):
        """Return ``s @ b``."""
        b = as_matrix(b, "b")
        if b.shape[0] != self.u_r.shape[0]:
            raise ContractViolation(
                f"operator acts on {self.u_r.shape[0]} rows, got {b.shape[0]}"
            )
        return self.v_r @ (self.u_r.T @ b)

    def apply_adjoint(self, y):
        """Return ``s.T @ y``."""
        y = as_matrix(y, "y")
        if y.shape[0] != self.v_r.shape[0]:
            raise ContractViolation(
                f"adjoint acts on {self.v_r.shape[0]} rows, got {y.shape[0]}"
            )
        return self.u_r @ (self.v_r.T @ y)

    def as_explicit(self):
        """Materialize ``s``; only allowed for moderate row counts."""
        if self.u_r.shape[0] > 2048:
            raise ContractViolation(
                "refusing to materialize the whitening operator for more than"
                f" 2048 rows (got {self.u_r.shape[0]}); use apply() instead"
            )
        return self.v_r @ self.u_r.T


def whitening_operator(a, rank_tol=None):
    """Factored whitening operator of the design matrix ``a``."""
    a = as_matrix(a, "a")
    rank_tol = _resolve_rank_tol(a, rank_tol)
    if not a.any():
        raise ContractViolation("whitening undefined for zero design matrix")
    f = svd(a)
    r = _truncated_svd_rank(f.sigma, rank_tol)
    return WhiteningOperator(v_r=f.v[:, :r].copy(), u_r=f.u[:, :r].copy())


def seminorm_A(a, d, norm="spectral"):
    """Seminorm ``‖a @ d‖`` in the spectral or Frobenius norm."""
    if norm not in ("spectral", "frobenius"):
        raise ContractViolation(f"norm must be 'spectral' or 'frobenius', got {norm!r}")
    prod = matmul(a, d)
    if norm == "frobenius":
        return float(np.linalg.norm(prod, "fro"))
    if not prod.any():
        return 0.0
    return spectral_norm(prod)
