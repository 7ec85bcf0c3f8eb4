import os
from pathlib import Path

import numpy as np
import pytest


def data_dir():
    d = os.environ.get("RAIDKIT_DATA_DIR")
    return Path(d) if d else None


def electricity_available():
    d = data_dir()
    return d is not None and (d / "LD2011_2014.txt").is_file()


def motion_available():
    d = data_dir()
    if d is None:
        return False
    listing = d / "motion_files.txt"
    if not listing.is_file():
        return False
    names = [
        ln.strip()
        for ln in listing.read_text(encoding="utf-8").splitlines()
        if ln.strip() and not ln.strip().startswith("#")
    ]
    return bool(names) and all((d / n).is_file() for n in names)


def spectrum_matrix(rng, m, n, kind):
    """Random matrix with orthogonal factors and a planted singular value profile."""
    r = min(m, n)
    if kind == "flat":
        sigma = np.ones(r)
    elif kind == "geometric":
        sigma = 10.0 ** (-8.0 * np.arange(r) / max(r - 1, 1))
    elif kind == "step":
        sigma = np.where(np.arange(r) < max(r // 3, 1), 1.0, 1e-6)
    else:
        raise ValueError(kind)
    u = np.linalg.qr(rng.standard_normal((m, r)))[0]
    v = np.linalg.qr(rng.standard_normal((n, r)))[0]
    return (u * sigma) @ v.T


def kahan_matrix(n, c=0.285):
    """Upper triangular matrix that defeats greedy column pivoting."""
    s = np.sqrt(1.0 - c * c)
    m = np.triu(-c * np.ones((n, n)), k=1) + np.eye(n)
    return (s ** np.arange(n))[:, None] * m


@pytest.fixture
def rng():
    return np.random.default_rng(20260814)
