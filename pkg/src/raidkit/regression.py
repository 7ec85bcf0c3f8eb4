"""Regression-aware column selection and PCA.

Given a design matrix ``a`` and targets ``b`` with the same row count,
the least-squares solutions ``x = a^+ b`` only see the part of ``b``
lying in the range of ``a``.  The operations here therefore work on a
projection of ``b`` onto that range, expressed in an orthonormal basis:

* ``raid``: an interpolative decomposition of the projected matrix, so
  the selected columns of ``b`` interpolate the least-squares solutions
  accurately in residual norm (``‖ax - ayp‖`` equals the ID error on
  the projection, by unitary invariance).
* ``rapca``: truncated SVD of the projected matrix, returned as a
  factor ``t`` with ``a @ t`` having orthonormal columns, so
  ``a @ t @ diag(sigma) @ v.T`` reconstructs the projection of ``b``.
* ``raid_solution_space``: the ID of ``a^+ b`` itself.  Exposed for
  comparison only; measuring errors between solutions (rather than
  residuals) blows up on ill-conditioned designs, which is easy to
  demonstrate and the reason the residual-space operations exist.
* ``cca_spectrum`` / ``rapca_spectrum``: singular values of
  ``q_a.T @ q_b`` and of ``q_a.T @ b``, the two diagnostic spectra for
  how much of ``b`` the design can explain.

Two equivalent projections are available: ``method="qr"`` uses the
orthonormal factor of a pivoted QR of ``a`` (the default, one
factorization); ``method="whitened"`` uses the operator
``v_r @ u_r.T`` from the SVD of ``a``.  The projected matrices differ
by a left unitary factor, so error metrics agree between methods while
selected indices may legitimately differ.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular
from scipy.linalg import svdvals as _svdvals

from .errors import ContractViolation
from .ids import IDResult, id_fixed_precision, id_fixed_rank, id_result_to_dict
from .linalg import (
    as_matrix,
    least_squares_solve,
    pivoted_qr,
    spectral_norm,
    svd,
    whitening_operator,
    _resolve_rank_tol,
    _truncated_svd_rank,
)

__all__ = [
    "RAIDResult",
    "RAPCAResult",
    "CCASpectrum",
    "raid",
    "raid_solution_space",
    "rapca",
    "cca_spectrum",
    "rapca_spectrum",
    "float_entry",
    "raid_result_to_dict",
    "rapca_result_to_dict",
]


@dataclass(frozen=True)
class RAIDResult:
    """ID of the projected target matrix plus the regression quantities.

    ``id.selected`` indexes columns of ``b``; ``y`` holds the
    least-squares solutions for the selected columns; ``raid_error`` is
    the spectral error of the ID in the projected space (equal to
    ``‖ax - ayp‖₂``), with the Frobenius counterpart alongside;
    ``min_residual`` is ``min over x of ‖ax - b‖₂``.  For results of
    :func:`raid_solution_space`, ``solution_space`` is True and
    ``raid_error`` instead measures ``‖x - yp‖₂``.
    """

    id: IDResult
    y: np.ndarray
    raid_error: float
    raid_error_frobenius: float
    min_residual: float
    method: str
    solution_space: bool = False


@dataclass(frozen=True)
class RAPCAResult:
    """Rank-k regression-aware PCA factors.

    ``a @ t`` has orthonormal columns and ``a @ t @ diag(sigma) @ v.T``
    reconstructs the projection of ``b`` with spectral error
    ``rapca_error`` (the (k+1)-th singular value of the projection).
    """

    t: np.ndarray
    sigma: np.ndarray
    v: np.ndarray
    rapca_error: float
    method: str


@dataclass(frozen=True)
class CCASpectrum:
    """Singular values of ``q_a.T @ q_b``, clamped to [0, 1]."""

    sigma: np.ndarray


def _check_rows(a, b):
    if a.shape[0] != b.shape[0]:
        raise ContractViolation(
            f"a has {a.shape[0]} rows but b has {b.shape[0]}; row counts must match"
        )


def _check_method(method):
    if method not in ("qr", "whitened"):
        raise ContractViolation(f"method must be 'qr' or 'whitened', got {method!r}")


def _check_k(k, r, n):
    k = int(k)
    if not 1 <= k <= min(r, n):
        raise ContractViolation(
            f"k must satisfy 1 <= k <= min(retained rank {r}, cols {n}), got {k}"
        )
    return k


def _project(a, b, method, rank_tol):
    """Projected matrix, its retained rank, and the residual ``b`` minus
    its projection back in the original row space."""
    if method == "qr":
        f = pivoted_qr(a, rank_tol)
        proj = f.q.T @ b
        return proj, f.rank, b - f.q @ proj
    w = whitening_operator(a, rank_tol)
    ub = w.u_r.T @ b
    return w.v_r @ ub, w.rank, b - w.u_r @ ub


def raid(a, b, k=None, method="qr", rank_tol=None, eps=None):
    """Regression-aware interpolative decomposition of ``b`` for ``a``.

    Set exactly one of ``k`` (rank) and ``eps`` (target error in the
    projected space; the smallest sufficient rank is used).
    """
    a = as_matrix(a, "a")
    b = as_matrix(b, "b")
    _check_rows(a, b)
    _check_method(method)
    if (k is None) == (eps is None):
        raise ContractViolation("set exactly one of k and eps")
    rank_tol = _resolve_rank_tol(a, rank_tol)
    proj, r, minres_mat = _project(a, b, method, rank_tol)
    if eps is not None:
        idr = id_fixed_precision(proj, eps)
    else:
        k = _check_k(k, r, b.shape[1])
        idr = id_fixed_rank(proj, k)
    c = b[:, idr.selected]
    y = least_squares_solve(a, c, rank_tol)
    fro = float(np.linalg.norm(proj - proj[:, idr.selected] @ idr.p, "fro"))
    return RAIDResult(
        id=idr,
        y=y,
        raid_error=idr.certificate.achieved_error,
        raid_error_frobenius=fro,
        min_residual=spectral_norm(minres_mat) if minres_mat.any() else 0.0,
        method=method,
    )


def raid_solution_space(a, b, k, rank_tol=None):
    """ID of the least-squares solution matrix ``a^+ b`` itself.

    The error field measures ``‖x - yp‖₂`` between solutions, which is
    meaningful only for well-conditioned designs; compare against
    :func:`raid` on the same inputs to see it inflate.
    """
    a = as_matrix(a, "a")
    b = as_matrix(b, "b")
    _check_rows(a, b)
    rank_tol = _resolve_rank_tol(a, rank_tol)
    if not a.any():
        raise ContractViolation("whitening undefined for zero design matrix")
    f = svd(a)
    r = _truncated_svd_rank(f.sigma, rank_tol)
    k = _check_k(k, r, b.shape[1])
    ub = f.u[:, :r].T @ b
    x = f.v[:, :r] @ (ub / f.sigma[:r, None])
    idr = id_fixed_rank(x, k)
    y = x[:, idr.selected].copy()
    fro = float(np.linalg.norm(x - y @ idr.p, "fro"))
    minres_mat = b - f.u[:, :r] @ ub
    return RAIDResult(
        id=idr,
        y=y,
        raid_error=idr.certificate.achieved_error,
        raid_error_frobenius=fro,
        min_residual=spectral_norm(minres_mat) if minres_mat.any() else 0.0,
        method="solution-space",
        solution_space=True,
    )


def rapca(a, b, k=None, method="qr", rank_tol=None, eps=None):
    """Regression-aware principal component analysis of ``b`` for ``a``.

    Set exactly one of ``k`` (rank) and ``eps`` (the smallest rank whose
    truncation error in the projected space is at most ``eps`` is used).
    """
    a = as_matrix(a, "a")
    b = as_matrix(b, "b")
    _check_rows(a, b)
    _check_method(method)
    if (k is None) == (eps is None):
        raise ContractViolation("set exactly one of k and eps")
    rank_tol = _resolve_rank_tol(a, rank_tol)
    if method == "qr":
        f = pivoted_qr(a, rank_tol)
        r = f.rank
        proj = f.q.T @ b
    else:
        fa = svd(a)
        r = _truncated_svd_rank(fa.sigma, rank_tol)
        if r == 0:
            raise ContractViolation("whitening undefined for zero design matrix")
        proj = fa.v[:, :r] @ (fa.u[:, :r].T @ b)
    sf = svd(proj)
    if eps is not None:
        if float(eps) <= 0:
            raise ContractViolation(f"eps must be > 0, got {eps}")
        k = max(int(np.sum(sf.sigma > float(eps))), 1)
    k = _check_k(k, r, b.shape[1])
    u_k = sf.u[:, :k]
    sigma = sf.sigma[:k].copy()
    v = sf.v[:, :k].copy()
    rapca_error = float(sf.sigma[k]) if k < sf.sigma.size else 0.0
    if method == "qr":
        # t carries [r11^{-1} u_k; 0] back through the pivot permutation,
        # so a @ t = q @ u_k exactly (up to the triangular solve)
        w_top = solve_triangular(f.r_factor[:, :r], u_k, lower=False)
        t = np.zeros((a.shape[1], k))
        t[f.perm[:r], :] = w_top
    else:
        # t = v_r sigma_r^{-1} v_r.T u_k; u_k lies in the span of v_r
        t = fa.v[:, :r] @ ((fa.v[:, :r].T @ u_k) / fa.sigma[:r, None])
    return RAPCAResult(t=t, sigma=sigma, v=v, rapca_error=rapca_error, method=method)


def cca_spectrum(a, b, rank_tol=None):
    """Canonical correlations: singular values of ``q_a.T @ q_b`` in [0, 1]."""
    a = as_matrix(a, "a")
    b = as_matrix(b, "b")
    _check_rows(a, b)
    fa = pivoted_qr(a, rank_tol)
    fb = pivoted_qr(b, rank_tol)
    s = _svdvals(fa.q.T @ fb.q)
    return CCASpectrum(sigma=np.clip(s, 0.0, 1.0))


def rapca_spectrum(a, b, rank_tol=None):
    """Full singular value sequence of the projected matrix ``q_a.T @ b``.

    These values bound the accuracy attainable by any rank-k
    regression-aware reconstruction of ``b``, including the RAID.
    """
    a = as_matrix(a, "a")
    b = as_matrix(b, "b")
    _check_rows(a, b)
    fa = pivoted_qr(a, rank_tol)
    return np.asarray(_svdvals(fa.q.T @ b))


def float_entry(x):
    """Serialize one scalar metric: 6 significant digits plus exact hex."""
    x = float(x)
    return {"value": float(f"{x:.6g}"), "hex": x.hex()}


def raid_result_to_dict(result, p_file, y_file):
    return {
        "method": result.method,
        "solution_space": result.solution_space,
        "raid_error": float_entry(result.raid_error),
        "raid_error_frobenius": float_entry(result.raid_error_frobenius),
        "min_residual": float_entry(result.min_residual),
        "y_file": str(y_file),
        "id": id_result_to_dict(result.id, p_file),
    }


def rapca_result_to_dict(result, t_file, v_file):
    return {
        "method": result.method,
        "rapca_error": float_entry(result.rapca_error),
        "sigma": [float(s) for s in result.sigma],
        "t_file": str(t_file),
        "v_file": str(v_file),
    }
