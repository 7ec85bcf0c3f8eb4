"""Deterministic experiment inputs: generators, dataset loaders, lagging.

Every operation here produces an :class:`ExperimentPair` — a design
matrix ``a`` and target matrix ``b`` with equal row counts, jointly
divided by one scale factor so the spectral norm of ``b`` is 1, plus a
provenance dict recording exactly how the pair was built.

The synthetic generators are bit-reproducible: ``gen_potential`` uses
no randomness at all, and ``gen_timeseries`` draws from numpy's Philox
generator, a 64-bit counter-based PRNG keyed by the seed, which is
fixed here permanently so a (rows, seed) pair always yields the same
matrix.

The two dataset loaders read user-supplied local files; nothing in the
library touches the network (the CLI has an optional download helper).
Expected locations under the data directory (``RAIDKIT_DATA_DIR`` or
``--data-dir``):

* ``LD2011_2014.txt`` — semicolon-delimited electricity consumption
  with decimal commas, one timestamp column and 370 client columns.
* ``motion_files.txt`` — one relative path per line naming the numeric
  CSV files to concatenate (in order) into the 1743 x 50 motion matrix.
"""

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd
from scipy.linalg import svdvals as _svdvals

from .errors import ContractViolation, DataFormatError
from .linalg import as_matrix, spectral_norm
from .matrixio import read_matrix_binary, write_matrix_binary

__all__ = [
    "ChargeConfig",
    "LagSpec",
    "ExperimentPair",
    "PresetSpec",
    "PRESETS",
    "DATA_DIR_ENV",
    "gen_potential",
    "gen_timeseries",
    "load_electricity",
    "load_motion",
    "make_lagged_pair",
    "resolve_data_dir",
    "build_preset_pairs",
    "save_pair",
    "load_pair",
]

DATA_DIR_ENV = "RAIDKIT_DATA_DIR"
ELECTRICITY_FILE = "LD2011_2014.txt"
MOTION_LIST_FILE = "motion_files.txt"
ELECTRICITY_SHAPE = (140256, 370)
MOTION_SHAPE = (1743, 50)
TRANSPOSED_TARGET_ROWS = 100000

DATASET_URLS = {
    "electricity": "https://archive.ics.uci.edu/static/public/321/electricityloaddiagrams20112014.zip",
    "motion": "https://archive.ics.uci.edu/static/public/302/gesture+phase+segmentation.zip",
}


@dataclass(frozen=True)
class ChargeConfig:
    """Point-charge layout on three concentric circles.

    ``radii`` is (original, test, supervisory).  Test charges sit evenly
    around the full middle circle starting at angle 0; original charges
    cover the top-left quadrant arc and supervisory charges the
    bottom-left quadrant arc, both at arc midpoints.
    """

    n_test: int = 80
    n_original: int = 20
    n_supervisory: int = 20
    radii: tuple = (0.9, 1.0, 1.1)


@dataclass(frozen=True)
class LagSpec:
    """How to slice a source matrix into a lagged (a, b) pair.

    ``column_normalize`` is one of:

    * ``"none"`` — use the source entries as they are;
    * ``"unit_columns"`` — rescale each column of the source to unit
      Euclidean norm before slicing;
    * ``"unit_columns_ab"`` — slice first, then rescale each column of
      ``a`` and of ``b`` to unit norm.

    ``orientation="direct"`` takes ``a`` as all rows but the last
    ``l`` and ``b`` as all rows but the first ``l``.
    ``orientation="transposed"`` takes ``b`` as the transpose of the
    last 100000 rows and ``a`` as the transpose of the ``l`` rows just
    before them (column normalization is not defined in this mode).
    """

    l: int
    column_normalize: str = "none"
    orientation: str = "direct"


@dataclass(frozen=True)
class ExperimentPair:
    """Design/target pair scaled so the spectral norm of ``b`` is 1."""

    a: np.ndarray
    b: np.ndarray
    scale_factor: float
    provenance: dict = field(default_factory=dict)


def gen_potential(cfg=ChargeConfig()):
    """Logarithmic interaction matrices between charges on circles.

    ``b[i, j]`` is the log distance from test charge i to original
    charge j; ``a[i, j]`` likewise to supervisory charge j.  Both are
    divided by the spectral norm ``b`` had before the division.
    """
    if min(cfg.n_test, cfg.n_original, cfg.n_supervisory) < 1:
        raise ContractViolation("charge counts must be positive")
    if len(cfg.radii) != 3 or min(cfg.radii) <= 0:
        raise ContractViolation("need three positive radii")
    r_orig, r_test, r_sup = cfg.radii

    theta_test = 2.0 * np.pi * np.arange(cfg.n_test) / cfg.n_test
    theta_orig = np.pi / 2 + (np.arange(cfg.n_original) + 0.5) * (
        np.pi / 2
    ) / cfg.n_original
    theta_sup = np.pi + (np.arange(cfg.n_supervisory) + 0.5) * (
        np.pi / 2
    ) / cfg.n_supervisory

    test = r_test * np.column_stack([np.cos(theta_test), np.sin(theta_test)])
    orig = r_orig * np.column_stack([np.cos(theta_orig), np.sin(theta_orig)])
    sup = r_sup * np.column_stack([np.cos(theta_sup), np.sin(theta_sup)])

    dist_b = np.linalg.norm(test[:, None, :] - orig[None, :, :], axis=2)
    dist_a = np.linalg.norm(test[:, None, :] - sup[None, :, :], axis=2)
    if (dist_b == 0).any() or (dist_a == 0).any():
        raise ContractViolation("coincident charge locations give log(0)")
    b = np.log(dist_b)
    a = np.log(dist_a)
    scale = spectral_norm(b)
    return ExperimentPair(
        a=a / scale,
        b=b / scale,
        scale_factor=float(scale),
        provenance={
            "generator": "potential",
            "n_test": cfg.n_test,
            "n_original": cfg.n_original,
            "n_supervisory": cfg.n_supervisory,
            "radii": list(cfg.radii),
        },
    )


def gen_timeseries(rows=100001, seed=3):
    """Synthetic step-ahead prediction pair with planted structure.

    Draws a ``rows x 10`` standard normal matrix from Philox keyed by
    ``seed``, multiplies columns 1-5 (1-based) by 1e6, overwrites each
    of columns 6-10 with that column's last-row draw (making them
    constant), then adds ``0.01 * i * j`` with 1-based row and column
    indices.  ``a`` is all rows but the last, ``b`` all rows but the
    first, jointly scaled.

    The first five columns end up as high-variance noise; the last five
    are a shared rank-1 ramp plus a constant, which is exactly the part
    a one-step regression on ``a`` can predict.
    """
    rows = int(rows)
    if rows < 3:
        raise ContractViolation(f"rows must be >= 3, got {rows}")
    rng = np.random.Generator(np.random.Philox(key=int(seed)))
    c = rng.standard_normal((rows, 10))
    c[:, :5] *= 1.0e6
    c[:, 5:] = c[-1, 5:]
    i = np.arange(1, rows + 1, dtype=np.float64)
    for j in range(10):
        c[:, j] += 0.01 * (j + 1) * i
    scale = float(_svdvals(c[1:])[0])
    c /= scale
    return ExperimentPair(
        a=c[:-1],
        b=c[1:],
        scale_factor=scale,
        provenance={
            "generator": "timeseries",
            "rows": rows,
            "seed": int(seed),
            "prng": "philox",
        },
    )


def load_electricity(path):
    """Parse a semicolon-delimited, decimal-comma consumption table.

    The first line is a header and the first field of each row is a
    timestamp, which is dropped.  Field counts are taken from the
    header; a row that disagrees, or a field that does not parse as a
    number, raises DataFormatError with its line number.
    """
    path = Path(path)
    if not path.is_file():
        raise DataFormatError(f"{path}: no such file")
    with open(path, encoding="utf-8") as fh:
        header = fh.readline()
    if not header.strip():
        raise DataFormatError(f"{path}: empty or headerless file")
    n_fields = header.count(";") + 1
    try:
        df = pd.read_csv(
            path, sep=";", decimal=",", header=0, index_col=0, engine="c"
        )
    except pd.errors.ParserError as exc:
        detail = str(exc)
        marker = "in line "
        line_no = None
        if marker in detail:
            tail = detail.split(marker, 1)[1]
            digits = "".join(ch for ch in tail if ch.isdigit() or ch == " ").split()
            if digits:
                line_no = digits[0]
        where = f"line {line_no}: " if line_no else ""
        raise DataFormatError(
            f"{path}: {where}expected {n_fields} fields per row"
        ) from exc
    for col in df.columns:
        if df[col].dtype == object:
            series = df[col].astype(str).str.replace(",", ".", regex=False)
            parsed = pd.to_numeric(series, errors="coerce")
            bad = np.flatnonzero(parsed.isna().to_numpy())
            if bad.size:
                raise DataFormatError(
                    f"{path}: line {bad[0] + 2}: malformed numeric field"
                    f" {df[col].iloc[bad[0]]!r}"
                )
            df[col] = parsed
    m = df.to_numpy(dtype=np.float64)
    if m.size == 0:
        raise DataFormatError(f"{path}: no data rows")
    if not np.isfinite(m).all():
        rows_bad = np.flatnonzero(~np.isfinite(m).all(axis=1))
        raise DataFormatError(
            f"{path}: line {rows_bad[0] + 2}: missing or non-finite value"
        )
    return m


def _read_numeric_csv(path):
    path = Path(path)
    if not path.is_file():
        raise DataFormatError(f"{path}: no such file")
    rows = []
    width = None
    with open(path, encoding="utf-8") as fh:
        for ln, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            fields = line.split(",")
            try:
                vals = [float(f) for f in fields]
            except ValueError:
                try:
                    # a single trailing non-numeric field is a label column
                    vals = [float(f) for f in fields[:-1]]
                except ValueError:
                    if ln == 1:
                        continue
                    raise DataFormatError(
                        f"{path}: line {ln}: non-numeric field"
                    ) from None
            if width is None:
                width = len(vals)
            elif len(vals) != width:
                raise DataFormatError(
                    f"{path}: line {ln}: expected {width} fields, got {len(vals)}"
                )
            rows.append(vals)
    if not rows:
        raise DataFormatError(f"{path}: no numeric rows")
    return np.array(rows, dtype=np.float64)


def load_motion(paths, expected_shape=None):
    """Row-concatenate numeric CSV files into one motion feature matrix.

    ``paths`` is an ordered list (a single path is accepted too).  A
    leading header line and a trailing label column per file are
    tolerated and dropped.  If ``expected_shape`` is given, the final
    shape must match it exactly.
    """
    if isinstance(paths, (str, os.PathLike)):
        paths = [paths]
    paths = list(paths)
    if not paths:
        raise ContractViolation("need at least one motion file")
    blocks = [_read_numeric_csv(p) for p in paths]
    widths = sorted({b.shape[1] for b in blocks})
    if len(widths) != 1:
        raise DataFormatError(f"files disagree on column count: {widths}")
    m = np.vstack(blocks)
    if expected_shape is not None and m.shape != tuple(expected_shape):
        raise DataFormatError(
            f"expected a {expected_shape[0]}x{expected_shape[1]} matrix,"
            f" got {m.shape[0]}x{m.shape[1]}"
        )
    if not np.isfinite(m).all():
        raise DataFormatError("non-finite entries in motion data")
    return m


def _unit_columns(m, what):
    norms = np.linalg.norm(m, axis=0)
    if (norms == 0).any():
        raise ContractViolation(f"{what} has a zero column; cannot normalize")
    return m / norms


def make_lagged_pair(c, spec):
    """Slice a source matrix into a lagged design/target pair.

    See :class:`LagSpec` for the slicing and normalization modes.  The
    joint scale factor is always the spectral norm ``b`` had after
    normalization but before scaling.
    """
    c = as_matrix(c, "c")
    if spec.orientation not in ("direct", "transposed"):
        raise ContractViolation(
            f"orientation must be 'direct' or 'transposed', got {spec.orientation!r}"
        )
    if spec.column_normalize not in ("none", "unit_columns", "unit_columns_ab"):
        raise ContractViolation(
            "column_normalize must be 'none', 'unit_columns' or"
            f" 'unit_columns_ab', got {spec.column_normalize!r}"
        )
    rows = c.shape[0]
    l = int(spec.l)
    if spec.orientation == "direct":
        if not 1 <= l < rows:
            raise ContractViolation(f"lag must satisfy 1 <= l < rows = {rows}, got {l}")
        work = c
        if spec.column_normalize == "unit_columns":
            work = _unit_columns(c, "source matrix")
        a = work[: rows - l]
        b = work[l:]
        if spec.column_normalize == "unit_columns_ab":
            a = _unit_columns(a, "a")
            b = _unit_columns(b, "b")
    else:
        if spec.column_normalize != "none":
            raise ContractViolation(
                "column normalization is not defined for transposed orientation"
            )
        target = TRANSPOSED_TARGET_ROWS
        if l < 1 or rows < l + target:
            raise ContractViolation(
                f"transposed slicing needs rows >= l + {target}"
                f" with l >= 1, got rows = {rows}, l = {l}"
            )
        b = np.ascontiguousarray(c[rows - target :].T)
        a = np.ascontiguousarray(c[rows - target - l : rows - target].T)
    scale = float(_svdvals(b)[0])
    if scale == 0.0:
        raise ContractViolation("target block is identically zero; cannot scale")
    return ExperimentPair(
        a=a / scale,
        b=b / scale,
        scale_factor=scale,
        provenance={
            "transform": "lagged_pair",
            "l": l,
            "orientation": spec.orientation,
            "column_normalize": spec.column_normalize,
        },
    )


@dataclass(frozen=True)
class PresetSpec:
    """Default parameters of one named experiment."""

    name: str
    k: int
    l_values: tuple = ()
    needs_dataset: bool = False
    default_rows: int = 0
    default_seed: int = 0


PRESETS = {
    "potential": PresetSpec(name="potential", k=10),
    "timeseries": PresetSpec(
        name="timeseries", k=4, default_rows=100001, default_seed=3
    ),
    "electricity": PresetSpec(
        name="electricity", k=200, l_values=(100, 200, 300), needs_dataset=True
    ),
    "electricity-t": PresetSpec(
        name="electricity-t", k=3, l_values=(300,), needs_dataset=True
    ),
    "motion": PresetSpec(
        name="motion", k=2, l_values=(20, 40, 60), needs_dataset=True
    ),
}


def resolve_data_dir(data_dir=None):
    """The dataset directory: explicit argument, else the environment."""
    if data_dir:
        return Path(data_dir)
    env = os.environ.get(DATA_DIR_ENV)
    if env:
        return Path(env)
    return None


def _require_data_dir(data_dir, preset):
    d = resolve_data_dir(data_dir)
    if d is None:
        raise DataFormatError(
            f"preset {preset!r} needs a dataset; pass --data-dir or set"
            f" {DATA_DIR_ENV}"
        )
    if not d.is_dir():
        raise DataFormatError(f"data directory {d} does not exist")
    return d


def motion_file_list(data_dir):
    """Read the ordered motion file list from ``motion_files.txt``."""
    listing = Path(data_dir) / MOTION_LIST_FILE
    if not listing.is_file():
        raise DataFormatError(
            f"{listing} not found; create it with one CSV path per line"
            " (relative to the data directory) naming the motion files in order"
        )
    paths = []
    for line in listing.read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            paths.append(Path(data_dir) / line)
    if not paths:
        raise DataFormatError(f"{listing} lists no files")
    return paths


def build_preset_pairs(name, data_dir=None, rows=None, seed=None, l_values=None):
    """Instantiate a preset: yields ``(params, ExperimentPair)`` per run.

    Multi-lag presets yield one pair per lag value; the source matrix is
    loaded once.  ``rows`` and ``seed`` apply to the timeseries preset,
    ``l_values`` overrides the preset's lag list.
    """
    if name not in PRESETS:
        raise ContractViolation(
            f"unknown preset {name!r}; choose from {sorted(PRESETS)}"
        )
    spec = PRESETS[name]
    if name == "potential":
        yield {}, gen_potential()
        return
    if name == "timeseries":
        rows = spec.default_rows if rows is None else int(rows)
        seed = spec.default_seed if seed is None else int(seed)
        yield {"rows": rows, "seed": seed}, gen_timeseries(rows=rows, seed=seed)
        return
    d = _require_data_dir(data_dir, name)
    lags = tuple(int(x) for x in (l_values or spec.l_values))
    if name in ("electricity", "electricity-t"):
        source = load_electricity(d / ELECTRICITY_FILE)
        if source.shape != ELECTRICITY_SHAPE:
            raise DataFormatError(
                f"{ELECTRICITY_FILE}: expected"
                f" {ELECTRICITY_SHAPE[0]}x{ELECTRICITY_SHAPE[1]},"
                f" got {source.shape[0]}x{source.shape[1]}"
            )
        if name == "electricity":
            for l in lags:
                pair = make_lagged_pair(
                    source, LagSpec(l=l, column_normalize="unit_columns")
                )
                yield {"l": l}, pair
        else:
            for l in lags:
                pair = make_lagged_pair(source, LagSpec(l=l, orientation="transposed"))
                yield {"l": l}, pair
        return
    source = load_motion(motion_file_list(d), expected_shape=MOTION_SHAPE)
    for l in lags:
        pair = make_lagged_pair(
            source, LagSpec(l=l, column_normalize="unit_columns_ab")
        )
        yield {"l": l}, pair


def download_dataset(name, data_dir):
    """Fetch and unpack one of the public datasets into ``data_dir``.

    Purely a convenience: the library itself never goes online.  On any
    failure the error names the URL so the file can be fetched by hand.
    """
    import io
    import urllib.request
    import zipfile

    if name not in DATASET_URLS:
        raise ContractViolation(
            f"no download known for {name!r}; choose from {sorted(DATASET_URLS)}"
        )
    d = Path(data_dir)
    d.mkdir(parents=True, exist_ok=True)
    url = DATASET_URLS[name]
    try:
        with urllib.request.urlopen(url, timeout=120) as resp:
            blob = resp.read()
        with zipfile.ZipFile(io.BytesIO(blob)) as zf:
            zf.extractall(d)
    except Exception as exc:
        raise DataFormatError(
            f"download of {url} failed ({exc}); fetch it manually and unpack"
            f" into {d}"
        ) from exc
    return d


def save_pair(pair, out_dir, stem="pair"):
    """Persist a pair as two binary matrices plus a JSON sidecar."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    a_path = out / f"{stem}_a.radm"
    b_path = out / f"{stem}_b.radm"
    write_matrix_binary(pair.a, a_path)
    write_matrix_binary(pair.b, b_path)
    sidecar = {
        "a_file": a_path.name,
        "b_file": b_path.name,
        "scale_factor": pair.scale_factor,
        "scale_factor_hex": float(pair.scale_factor).hex(),
        "provenance": pair.provenance,
    }
    with open(out / f"{stem}.json", "w", encoding="utf-8") as fh:
        json.dump(sidecar, fh, indent=2)
        fh.write("\n")
    return out / f"{stem}.json"


def load_pair(sidecar_path):
    """Read back a pair persisted by :func:`save_pair`."""
    sidecar_path = Path(sidecar_path)
    with open(sidecar_path, encoding="utf-8") as fh:
        sidecar = json.load(fh)
    base = sidecar_path.parent
    return ExperimentPair(
        a=read_matrix_binary(base / sidecar["a_file"]),
        b=read_matrix_binary(base / sidecar["b_file"]),
        scale_factor=float(sidecar["scale_factor"]),
        provenance=sidecar.get("provenance", {}),
    )
