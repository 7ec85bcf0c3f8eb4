"""Interpolative decompositions with machine-checkable quality certificates.

An interpolative decomposition (ID) of rank k approximates ``b`` by
``c @ p`` where ``c`` collects k actual columns of ``b`` and the k x n
interpolation matrix ``p`` contains the k x k identity (bitwise) at the
selected positions.  Construction is greedy column-pivoted QR; the
certificate attached to every result records the entry bound, the norms
of ``p``, the achieved spectral error and the reference bound
``sqrt(4k(n-k)+1) * sigma_{k+1}``, so callers can see rather than trust
how good the selection is.

Greedy pivoting keeps all interpolation entries at magnitude 2 or less
in practice but not provably; ``strengthen=True`` enables a pairwise
column-swap pass that enforces the entry bound at extra cost (each swap
refactors, and the pass is capped at n^2 swaps).
"""

import json
from dataclasses import asdict, dataclass

import numpy as np
from scipy.linalg import qr as _scipy_qr
from scipy.linalg import solve_triangular
from scipy.linalg import svdvals as _svdvals

from .errors import ContractViolation, ConvergenceError
from .linalg import as_matrix, spectral_norm

__all__ = [
    "IDCertificate",
    "IDResult",
    "id_fixed_rank",
    "id_fixed_precision",
    "check_certificate",
    "id_result_to_dict",
    "id_result_to_json",
]

# up to this min(rows, cols), certificate spectral quantities come from
# exact LAPACK singular values; above it they are power-iteration
# estimates and the certificate says so
EXACT_SIGMA_DIM = 2048

ENTRY_BOUND = 2.0


@dataclass(frozen=True)
class IDCertificate:
    """Quality numbers for one ID, all recomputable from (b, result).

    ``bound`` is ``sqrt(4k(n-k)+1) * sigma_kplus1``; when
    ``entry_condition_met`` and the singular value is exact, the achieved
    error is guaranteed not to exceed it.  ``is_estimate`` marks
    ``sigma_kplus1`` (and the achieved error) as power-iteration
    estimates rather than exact singular values.
    """

    max_abs_entry: float
    p_spectral_norm: float
    p_min_singular: float
    achieved_error: float
    bound: float
    entry_condition_met: bool
    sigma_kplus1: float
    is_estimate: bool


@dataclass(frozen=True)
class IDResult:
    """Selected column indices (in pivot order), interpolation matrix, certificate."""

    selected: np.ndarray
    p: np.ndarray
    certificate: IDCertificate

    @property
    def k(self):
        return int(self.selected.size)


def _qr_full(b):
    """Unrestricted pivoted QR (no rank truncation), economic size."""
    return _scipy_qr(b, mode="economic", pivoting=True)


def _interp_rows(r, k, n):
    """Solve for the non-identity block z of the interpolation matrix.

    Rows of ``r`` past the last nonzero diagonal entry carry no
    information; the corresponding rows of z are zero.
    """
    diag = np.abs(np.diag(r))
    rr = min(k, int(np.count_nonzero(diag)))
    if n == k:
        return np.zeros((k, 0))
    z_top = solve_triangular(r[:rr, :rr], r[:rr, k:], lower=False)
    if rr < k:
        z_top = np.vstack([z_top, np.zeros((k - rr, n - k))])
    return z_top


def _assemble(b, piv, k, z):
    n = b.shape[1]
    selected = piv[:k].astype(np.intp).copy()
    p = np.zeros((k, n))
    p[np.arange(k), selected] = 1.0
    p[:, piv[k:]] = z
    return selected, p


def _residual_norm(b, selected, p):
    """Spectral norm of ``b - b[:, selected] @ p``, exact or estimated.

    Returns (value, is_estimate).
    """
    resid = b - b[:, selected] @ p
    if min(b.shape) <= EXACT_SIGMA_DIM:
        if not resid.any():
            return 0.0, False
        return float(_svdvals(resid)[0]), False
    try:
        return spectral_norm(resid), True
    except ConvergenceError as exc:
        return float(exc.estimate), True


def _sigma_kplus1(b, k, achieved, sigma=None):
    """(k+1)-th singular value of b, exact below the size threshold.

    Above the threshold the spectral norm of the residual serves as the
    estimate (it upper-bounds the true value).  Returns
    (value, is_estimate).
    """
    if min(b.shape) <= EXACT_SIGMA_DIM:
        if sigma is None:
            sigma = _svdvals(b)
        value = float(sigma[k]) if k < sigma.size else 0.0
        return value, False
    return achieved, True


def _certificate(b, selected, p, sigma=None):
    k, n = p.shape
    achieved, est_err = _residual_norm(b, selected, p)
    sig_next, est_sig = _sigma_kplus1(b, k, achieved, sigma)
    p_sv = _svdvals(p)
    max_abs = float(np.abs(p).max())
    bound = float(np.sqrt(4.0 * k * (n - k) + 1.0) * sig_next)
    return IDCertificate(
        max_abs_entry=max_abs,
        p_spectral_norm=float(p_sv[0]),
        p_min_singular=float(p_sv[-1]),
        achieved_error=achieved,
        bound=bound,
        entry_condition_met=bool(max_abs <= ENTRY_BOUND),
        sigma_kplus1=sig_next,
        is_estimate=bool(est_err or est_sig),
    )


def _strengthen_perm(b, piv, k, r=None):
    """Swap selected/unselected columns until all interpolation entries
    have magnitude <= 2, refactoring after each swap.

    Each swap strictly grows the volume of the selected block, so the
    pass terminates; it is capped at n^2 swaps regardless and returns
    the permutation reached, converged or not.
    """
    n = b.shape[1]
    perm = np.asarray(piv, dtype=np.intp).copy()
    cap = n * n
    swapped = False
    for _ in range(cap):
        if r is None:
            r = np.linalg.qr(b[:, perm], mode="r")
        z = _interp_rows(r, k, n)
        r = None
        if z.size == 0 or np.abs(z).max() <= ENTRY_BOUND:
            break
        i, j = np.unravel_index(np.argmax(np.abs(z)), z.shape)
        perm[i], perm[k + j] = perm[k + j], perm[i]
        swapped = True
    return perm, swapped


def id_fixed_rank(b, k, strengthen=False):
    """Rank-k interpolative decomposition of ``b`` by greedy pivoted QR.

    ``selected`` lists the chosen columns in pivot order and row i of
    ``p`` carries an exact 1 at ``selected[i]``.  With k equal to the
    row or column count the reconstruction is exact up to roundoff.
    """
    b = as_matrix(b, "b")
    m, n = b.shape
    k = int(k)
    if not 1 <= k <= min(m, n):
        raise ContractViolation(
            f"k must satisfy 1 <= k <= min(rows, cols) = {min(m, n)}, got {k}"
        )
    _, r, piv = _qr_full(b)
    sigma = _svdvals(b) if min(m, n) <= EXACT_SIGMA_DIM else None
    if strengthen:
        piv, swapped = _strengthen_perm(b, piv, k, r=r)
        if swapped:
            r = np.linalg.qr(b[:, piv], mode="r")
    z = _interp_rows(r, k, n)
    selected, p = _assemble(b, piv, k, z)
    return IDResult(selected=selected, p=p, certificate=_certificate(b, selected, p, sigma))


def id_fixed_precision(b, eps):
    """Smallest-rank ID with achieved spectral error at most ``eps``.

    The pivoted-QR diagonal gives a lower bound for the rank, which is
    then verified against the true residual norm and incremented until
    the error is within ``eps`` or the decomposition is exact.  The rank
    is always at least 1, even for ``eps >= ‖b‖``.
    """
    b = as_matrix(b, "b")
    eps = float(eps)
    if eps <= 0:
        raise ContractViolation(f"eps must be > 0, got {eps}")
    m, n = b.shape
    _, r, piv = _qr_full(b)
    diag = np.abs(np.diag(r))
    k = max(int(np.sum(diag > eps)), 1)
    sigma = _svdvals(b) if min(m, n) <= EXACT_SIGMA_DIM else None
    while True:
        z = _interp_rows(r, k, n)
        selected, p = _assemble(b, piv, k, z)
        cert = _certificate(b, selected, p, sigma)
        if cert.achieved_error <= eps or k == min(m, n):
            return IDResult(selected=selected, p=p, certificate=cert)
        k += 1


def check_certificate(b, result):
    """Recompute the certificate of ``result`` from scratch against ``b``.

    Independent of how the result was produced: validates the index set,
    then measures the interpolation matrix and residual directly.
    """
    b = as_matrix(b, "b")
    n = b.shape[1]
    selected = np.asarray(result.selected, dtype=np.intp)
    if selected.ndim != 1 or selected.size < 1:
        raise ContractViolation("selected indices must form a nonempty 1-D list")
    if selected.min() < 0 or selected.max() >= n:
        raise ContractViolation(
            f"selected indices must lie in [0, {n}), got range"
            f" [{selected.min()}, {selected.max()}]"
        )
    if np.unique(selected).size != selected.size:
        raise ContractViolation("selected indices must be distinct")
    p = as_matrix(result.p, "p")
    if p.shape != (selected.size, n):
        raise ContractViolation(
            f"interpolation matrix must be {selected.size}x{n}, got {p.shape}"
        )
    return _certificate(b, selected, p)


def id_result_to_dict(result, p_file):
    """JSON-ready dict with the interpolation matrix stored by reference."""
    cert = asdict(result.certificate)
    return {
        "k": result.k,
        "selected": [int(i) for i in result.selected],
        "p_file": str(p_file),
        "certificate": cert,
    }


def id_result_to_json(result, p_file):
    return json.dumps(id_result_to_dict(result, p_file), indent=2, sort_keys=False)
