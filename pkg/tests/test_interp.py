import json

import numpy as np
import pytest
import scipy.linalg

from conftest import kahan_matrix, spectrum_matrix
from raidkit import (
    ContractViolation,
    check_certificate,
    id_fixed_precision,
    id_fixed_rank,
)
from raidkit import ids as ids_mod
from raidkit.ids import id_result_to_dict, id_result_to_json


def test_identity_submatrix_is_bitwise(rng):
    b = rng.standard_normal((20, 12))
    for k in (1, 4, 12):
        r = id_fixed_rank(b, k)
        assert np.array_equal(r.p[:, r.selected], np.eye(k))
        assert np.unique(r.selected).size == k
        assert r.selected.min() >= 0 and r.selected.max() < 12


def test_selection_follows_pivot_order(rng):
    b = rng.standard_normal((18, 10))
    piv = scipy.linalg.qr(b, mode="economic", pivoting=True)[2]
    r = id_fixed_rank(b, 5)
    assert np.array_equal(r.selected, piv[:5])


def test_error_equals_trailing_r_block(rng):
    b = rng.standard_normal((25, 14))
    _, rfac, _ = scipy.linalg.qr(b, mode="economic", pivoting=True)
    for k in (3, 7, 11):
        got = id_fixed_rank(b, k).certificate.achieved_error
        ref = scipy.linalg.svdvals(rfac[k:, k:])[0]
        assert got == pytest.approx(ref, abs=1e-10 * np.linalg.norm(b, 2))


def test_duplicated_column(rng):
    col = rng.standard_normal((9, 1))
    b = np.hstack([col, col])
    r = id_fixed_rank(b, 1)
    assert r.selected.size == 1
    np.testing.assert_allclose(r.p, [[1.0, 1.0]], atol=1e-14)
    assert r.certificate.achieved_error <= 1e-14


def test_planted_rank_three(rng):
    b = sum(np.outer(rng.standard_normal(8), rng.standard_normal(6)) for _ in range(3))
    r = id_fixed_rank(b, 3)
    assert r.certificate.achieved_error <= 1e-10 * np.linalg.norm(b, 2)


def test_full_rank_reconstruction_is_exact(rng):
    # selecting every column makes c @ p a bitwise copy of b
    b = rng.standard_normal((10, 6))
    r = id_fixed_rank(b, 6)
    assert r.certificate.achieved_error == 0.0
    assert np.array_equal(b[:, r.selected] @ r.p, b)


def test_wide_matrix_full_rank_reconstruction(rng):
    b = rng.standard_normal((5, 12))
    r = id_fixed_rank(b, 5)
    assert r.certificate.achieved_error <= 1e-12 * np.linalg.norm(b, 2)


@pytest.mark.parametrize("k", [0, -2, 7])
def test_fixed_rank_rejects_bad_k(rng, k):
    b = rng.standard_normal((9, 6))
    with pytest.raises(ContractViolation, match="k must satisfy"):
        id_fixed_rank(b, k)


def test_certificate_bound_formula(rng):
    b = rng.standard_normal((30, 16))
    sigma = np.linalg.svd(b, compute_uv=False)
    r = id_fixed_rank(b, 5)
    cert = r.certificate
    assert cert.sigma_kplus1 == pytest.approx(sigma[5], rel=1e-12)
    assert cert.bound == pytest.approx(
        np.sqrt(4.0 * 5 * (16 - 5) + 1.0) * sigma[5], rel=1e-12
    )
    assert not cert.is_estimate
    assert cert.max_abs_entry == np.abs(r.p).max()
    assert cert.entry_condition_met == (cert.max_abs_entry <= 2.0)


def test_certificate_p_norms(rng):
    b = rng.standard_normal((40, 20))
    cert = id_fixed_rank(b, 5).certificate
    ps = np.linalg.svd(id_fixed_rank(b, 5).p, compute_uv=False)
    assert cert.p_spectral_norm == pytest.approx(ps[0], rel=1e-12)
    assert cert.p_min_singular == pytest.approx(ps[-1], rel=1e-12)
    # identity submatrix forces sigma_min(p) >= 1
    assert cert.p_min_singular >= 1.0 - 1e-10


def test_determinism(rng):
    b = rng.standard_normal((22, 13))
    r1 = id_fixed_rank(b.copy(), 6)
    r2 = id_fixed_rank(b.copy(), 6)
    assert np.array_equal(r1.selected, r2.selected)
    assert np.array_equal(r1.p, r2.p)
    assert r1.certificate == r2.certificate


def test_fixed_precision_coarsest(rng):
    b = rng.standard_normal((12, 8))
    r = id_fixed_precision(b, 2.0 * np.linalg.norm(b, 2))
    assert r.k == 1


def test_fixed_precision_planted_rank_two(rng):
    b = np.outer(rng.standard_normal(10), rng.standard_normal(7))
    b += 0.5 * np.outer(rng.standard_normal(10), rng.standard_normal(7))
    r = id_fixed_precision(b, 1e-8 * np.linalg.norm(b, 2))
    assert r.k == 2


def test_fixed_precision_diagonal():
    r = id_fixed_precision(np.diag([1.0, 0.1, 0.01]), 0.05)
    assert r.k == 2
    assert r.certificate.achieved_error <= 0.05


def test_fixed_precision_meets_eps_minimally(rng):
    u = np.linalg.qr(rng.standard_normal((30, 12)))[0]
    v = np.linalg.qr(rng.standard_normal((12, 12)))[0]
    b = (u * np.logspace(0, -9, 12)) @ v.T
    for eps in (1e-2, 1e-4, 1e-7):
        r = id_fixed_precision(b, eps)
        assert r.certificate.achieved_error <= eps
        if r.k > 1:
            worse = id_fixed_rank(b, r.k - 1)
            assert worse.certificate.achieved_error > eps


def test_fixed_precision_rejects_nonpositive_eps(rng):
    with pytest.raises(ContractViolation, match="eps must be > 0"):
        id_fixed_precision(rng.standard_normal((5, 5)), 0.0)


def test_check_certificate_reproduces_construction(rng):
    b = rng.standard_normal((26, 15))
    r = id_fixed_rank(b, 6)
    cert = check_certificate(b, r)
    assert cert.achieved_error == pytest.approx(r.certificate.achieved_error, rel=1e-12)
    assert cert.entry_condition_met == r.certificate.entry_condition_met
    assert cert.bound == pytest.approx(r.certificate.bound, rel=1e-12)


def test_check_certificate_identity_selection(rng):
    b = rng.standard_normal((9, 5))
    r = id_fixed_rank(b, 5)
    cert = check_certificate(b, r)
    assert cert.achieved_error == 0.0
    assert cert.p_spectral_norm == pytest.approx(1.0, abs=1e-12)


def test_check_certificate_min_singular_at_least_one(rng):
    b = rng.standard_normal((40, 20))
    assert check_certificate(b, id_fixed_rank(b, 5)).p_min_singular >= 1.0 - 1e-10


def test_check_certificate_rejects_bad_indices(rng):
    b = rng.standard_normal((10, 6))
    r = id_fixed_rank(b, 3)
    wrong = type(r)(selected=np.array([0, 1, 6]), p=r.p, certificate=r.certificate)
    with pytest.raises(ContractViolation, match=r"\[0, 6\)"):
        check_certificate(b, wrong)
    dupe = type(r)(selected=np.array([2, 2, 1]), p=r.p, certificate=r.certificate)
    with pytest.raises(ContractViolation, match="distinct"):
        check_certificate(b, dupe)
    short = type(r)(selected=r.selected, p=r.p[:, :4], certificate=r.certificate)
    with pytest.raises(ContractViolation, match="interpolation matrix must be"):
        check_certificate(b, short)


def test_kahan_matrix_reported_honestly():
    # greedy pivoting is known to blow the entry bound on this family;
    # the certificate must say so rather than pass silently
    k64 = kahan_matrix(64)
    r = id_fixed_rank(k64, 32)
    cert = check_certificate(k64, r)
    assert cert.max_abs_entry == pytest.approx(np.abs(r.p).max(), rel=1e-12)
    assert cert.entry_condition_met == (np.abs(r.p).max() <= 2.0)
    if not cert.entry_condition_met:
        assert cert.max_abs_entry > 2.0


def test_strengthen_enforces_entry_bound():
    k64 = kahan_matrix(64)
    plain = id_fixed_rank(k64, 32)
    assert plain.certificate.max_abs_entry > 2.0  # the case worth strengthening
    hard = id_fixed_rank(k64, 32, strengthen=True)
    assert hard.certificate.max_abs_entry <= 2.0 + 1e-12
    assert hard.certificate.entry_condition_met
    assert np.array_equal(hard.p[:, hard.selected], np.eye(32))
    assert np.unique(hard.selected).size == 32
    # with the entry condition in force the bound is a real guarantee
    assert hard.certificate.achieved_error <= hard.certificate.bound * (1 + 1e-10)


def test_strengthen_is_noop_when_bound_already_met(rng):
    b = rng.standard_normal((20, 10))
    plain = id_fixed_rank(b, 4)
    if plain.certificate.entry_condition_met:
        hard = id_fixed_rank(b, 4, strengthen=True)
        assert np.array_equal(hard.selected, plain.selected)
        assert np.array_equal(hard.p, plain.p)


def test_estimate_path_flags_and_approximates(rng, monkeypatch):
    monkeypatch.setattr(ids_mod, "EXACT_SIGMA_DIM", 4)
    b = spectrum_matrix(rng, 30, 12, "geometric")
    r = id_fixed_rank(b, 5)
    assert r.certificate.is_estimate
    resid = b - b[:, r.selected] @ r.p
    ref = np.linalg.norm(resid, 2)
    assert r.certificate.achieved_error == pytest.approx(ref, rel=1e-6)


def test_bound_scan_over_varied_spectra(rng):
    # spot version of the full acceptance scan: no silent bound violations
    for kind in ("flat", "geometric", "step"):
        b = spectrum_matrix(rng, 40, 25, kind)
        for k in range(1, 25):
            cert = id_fixed_rank(b, k).certificate
            if cert.entry_condition_met:
                assert cert.achieved_error <= cert.bound * (1 + 1e-8)


def test_result_serialization_round_trips(rng):
    b = rng.standard_normal((10, 7))
    r = id_fixed_rank(b, 3)
    d = id_result_to_dict(r, "p.csv")
    assert d["k"] == 3
    assert d["p_file"] == "p.csv"
    assert all(isinstance(i, int) for i in d["selected"])
    assert set(d["certificate"]) == {
        "max_abs_entry",
        "p_spectral_norm",
        "p_min_singular",
        "achieved_error",
        "bound",
        "entry_condition_met",
        "sigma_kplus1",
        "is_estimate",
    }
    assert json.loads(id_result_to_json(r, "p.csv")) == d
