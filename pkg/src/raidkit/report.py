"""Run configurations, experiment reports, and output writing.

A :class:`RunConfig` describes one CLI invocation; :func:`run` executes
it and writes everything into the output directory:

* ``report.json`` (one per lag value for multi-lag presets) with all
  scalar metrics serialized both to 6 significant digits and as exact
  hex floats;
* ``metrics.csv`` or ``metrics.json`` — the per-lag metric table;
* matrix files (interpolation matrix, solution block, PCA factors) in
  CSV form;
* SVG figures: the singular value spectra and, when at least two
  components exist, the score/loading biplot.

Nothing written here contains timestamps or machine-specific state, so
two runs with the same configuration produce byte-identical files.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.linalg import svdvals as _svdvals

from .errors import ContractViolation, DataFormatError
from .experiments import (
    PRESETS,
    build_preset_pairs,
    download_dataset,
    resolve_data_dir,
    save_pair,
)
from .ids import id_fixed_precision, id_fixed_rank, id_result_to_dict
from .linalg import pivoted_qr
from .matrixio import read_matrix, write_matrix_csv
from .plots import emit_biplot, emit_svplot
from .regression import (
    cca_spectrum,
    float_entry,
    raid,
    raid_result_to_dict,
    rapca,
    rapca_result_to_dict,
    rapca_spectrum,
)

__all__ = ["RunConfig", "ExperimentReport", "run", "report_to_dict"]

_COMMANDS = ("id", "raid", "rapca", "cca", "preset")


@dataclass
class RunConfig:
    """Validated description of one run."""

    command: str
    a_path: str = None
    b_path: str = None
    preset: str = None
    k: int = None
    eps: float = None
    method: str = "qr"
    norm: str = "spectral"
    rank_tol: float = None
    seed: int = None
    rows: int = None
    l_values: tuple = None
    data_dir: str = None
    out_dir: str = "."
    fmt: str = "csv"
    strengthen: bool = False
    save_pairs: bool = False
    download: bool = False

    def validate(self):
        if self.command not in _COMMANDS:
            raise ContractViolation(
                f"command must be one of {_COMMANDS}, got {self.command!r}"
            )
        if self.fmt not in ("csv", "json"):
            raise ContractViolation(f"format must be 'csv' or 'json', got {self.fmt!r}")
        if self.method not in ("qr", "whitened"):
            raise ContractViolation(
                f"method must be 'qr' or 'whitened', got {self.method!r}"
            )
        if self.norm not in ("spectral", "frobenius"):
            raise ContractViolation(
                f"norm must be 'spectral' or 'frobenius', got {self.norm!r}"
            )
        if self.k is not None and self.k < 1:
            raise ContractViolation("k must be >= 1")
        if self.eps is not None and self.eps <= 0:
            raise ContractViolation("eps must be > 0")
        if self.command == "preset":
            if not self.preset:
                raise ContractViolation("preset command needs a preset name")
            if self.preset not in PRESETS:
                raise ContractViolation(
                    f"unknown preset {self.preset!r}; choose from {sorted(PRESETS)}"
                )
            if self.a_path or self.b_path:
                raise ContractViolation(
                    "preset runs build their own matrices; drop --a/--b"
                )
            if self.eps is not None:
                raise ContractViolation("presets run at fixed k; drop --eps")
            return
        if self.preset:
            raise ContractViolation(
                f"{self.command} takes explicit matrices; drop the preset name"
            )
        if not self.b_path:
            raise ContractViolation(f"{self.command} needs --b pointing to a matrix file")
        if self.command == "id":
            if self.a_path:
                raise ContractViolation("id decomposes --b alone; drop --a")
        elif not self.a_path:
            raise ContractViolation(f"{self.command} needs --a pointing to a matrix file")
        if self.command == "cca":
            if self.k is not None or self.eps is not None:
                raise ContractViolation("cca has no rank parameter; drop --k/--eps")
        else:
            if (self.k is None) == (self.eps is None):
                raise ContractViolation("set exactly one of --k and --eps")
        if self.strengthen and self.command not in ("id", "preset"):
            raise ContractViolation("--strengthen applies to id and preset runs only")
        if self.strengthen and self.eps is not None:
            raise ContractViolation("--strengthen requires --k")


@dataclass
class ExperimentReport:
    """Everything one run measured, ready for serialization."""

    preset: str
    params: dict
    metrics: dict
    spectra: dict = field(default_factory=dict)
    selected_columns: dict = field(default_factory=dict)
    biplot: dict = field(default_factory=dict)


def report_to_dict(report):
    return {
        "preset": report.preset,
        "params": report.params,
        "metrics": {k: float_entry(v) for k, v in report.metrics.items()},
        "spectra": {k: [float(x) for x in v] for k, v in report.spectra.items()},
        "selected_columns": {
            k: [int(i) for i in v] for k, v in report.selected_columns.items()
        },
        "biplot": {
            k: [[float(x), float(y)] for x, y in v] for k, v in report.biplot.items()
        },
    }


def _write_json(payload, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def _write_report(report, extra, path):
    payload = report_to_dict(report)
    if extra:
        payload["results"] = extra
    _write_json(payload, path)


def _load(path, name):
    path = Path(path)
    if not path.is_file():
        raise DataFormatError(f"{name}: {path} is not a file")
    return read_matrix(path)


def _analyze_pair(pair, k, method, rank_tol, strengthen, norm):
    """All metrics, spectra, selections and biplot coordinates for one pair."""
    a, b = pair.a, pair.b
    idr = id_fixed_rank(b, k, strengthen=strengthen)
    rr = raid(a, b, k, method=method, rank_tol=rank_tol)
    rp = rapca(a, b, k, method=method, rank_tol=rank_tol)
    cca = cca_spectrum(a, b, rank_tol)
    proj_sigma = rapca_spectrum(a, b, rank_tol)

    if norm == "spectral":
        metrics = {
            "min_residual": rr.min_residual,
            "id_error": idr.certificate.achieved_error,
            "raid_error": rr.raid_error,
            "rapca_error": rp.rapca_error,
        }
    else:
        resid_id = b - b[:, idr.selected] @ idr.p
        f = pivoted_qr(a, rank_tol)
        resid_min = b - f.q @ (f.q.T @ b)
        tail = proj_sigma[k:] if k < proj_sigma.size else np.zeros(0)
        metrics = {
            "min_residual": float(np.linalg.norm(resid_min, "fro")),
            "id_error": float(np.linalg.norm(resid_id, "fro")),
            "raid_error": rr.raid_error_frobenius,
            "rapca_error": float(np.sqrt((tail**2).sum())),
        }

    biplot = {}
    if rp.sigma.size >= 2:
        scores = (a @ rp.t[:, :2]) * rp.sigma[:2]
        biplot = {
            "scores": [list(row) for row in scores],
            "loadings": [list(row) for row in rp.v[:, :2]],
        }
    return {
        "id": idr,
        "raid": rr,
        "rapca": rp,
        "metrics": metrics,
        "spectra": {
            "cca": [float(x) for x in cca.sigma],
            "rapca": [float(x) for x in proj_sigma],
        },
        "biplot": biplot,
    }


def _emit_pair_outputs(out, suffix, analysis, report):
    _write_report(
        report,
        {
            "raid": raid_result_to_dict(
                analysis["raid"], f"raid_p{suffix}.csv", f"raid_y{suffix}.csv"
            ),
            "id": id_result_to_dict(analysis["id"], f"id_p{suffix}.csv"),
            "rapca": rapca_result_to_dict(
                analysis["rapca"], f"rapca_t{suffix}.csv", f"rapca_v{suffix}.csv"
            ),
        },
        out / f"report{suffix}.json",
    )
    write_matrix_csv(analysis["id"].p, out / f"id_p{suffix}.csv")
    write_matrix_csv(analysis["raid"].id.p, out / f"raid_p{suffix}.csv")
    write_matrix_csv(analysis["raid"].y, out / f"raid_y{suffix}.csv")
    write_matrix_csv(analysis["rapca"].t, out / f"rapca_t{suffix}.csv")
    write_matrix_csv(analysis["rapca"].v, out / f"rapca_v{suffix}.csv")
    emit_svplot(
        {"cca": analysis["spectra"]["cca"], "rapca": analysis["spectra"]["rapca"]},
        out / f"sv{suffix}.svg",
    )
    if analysis["biplot"]:
        emit_biplot(
            analysis["biplot"]["scores"],
            analysis["biplot"]["loadings"],
            out / f"biplot{suffix}.svg",
        )


def _write_metrics_table(rows, out, fmt):
    """One row per run; columns are the run parameters then the metrics."""
    if fmt == "json":
        payload = [
            {**{k: v for k, v in params.items()},
             **{k: float_entry(v) for k, v in metrics.items()}}
            for params, metrics in rows
        ]
        _write_json(payload, out / "metrics.json")
        return out / "metrics.json"
    param_keys = sorted({k for params, _ in rows for k in params})
    metric_keys = list(rows[0][1])
    lines = [",".join(param_keys + metric_keys)]
    for params, metrics in rows:
        cells = [str(params.get(k, "")) for k in param_keys]
        cells += [f"{metrics[k]:.6g}" for k in metric_keys]
        lines.append(",".join(cells))
    path = out / "metrics.csv"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def _run_preset(config, out):
    spec = PRESETS[config.preset]
    k = spec.k if config.k is None else int(config.k)
    if config.download and spec.needs_dataset:
        dataset = "motion" if config.preset == "motion" else "electricity"
        target = resolve_data_dir(config.data_dir)
        if target is None:
            raise ContractViolation("--download needs --data-dir (or the env default)")
        download_dataset(dataset, target)
    reports = []
    table_rows = []
    for params, pair in build_preset_pairs(
        config.preset,
        data_dir=config.data_dir,
        rows=config.rows,
        seed=config.seed,
        l_values=config.l_values,
    ):
        suffix = f"_l{params['l']}" if "l" in params else ""
        analysis = _analyze_pair(
            pair, k, config.method, config.rank_tol, config.strengthen, config.norm
        )
        all_params = {"k": k, **params, "method": config.method, "norm": config.norm}
        report = ExperimentReport(
            preset=config.preset,
            params=all_params,
            metrics=analysis["metrics"],
            spectra=analysis["spectra"],
            selected_columns={
                "id": [int(i) for i in analysis["id"].selected],
                "raid": [int(i) for i in analysis["raid"].id.selected],
            },
            biplot=analysis["biplot"],
        )
        _emit_pair_outputs(out, suffix, analysis, report)
        if config.save_pairs:
            save_pair(pair, out, stem=f"pair{suffix}")
        table_rows.append((params, analysis["metrics"]))
        reports.append(report)
    _write_metrics_table(table_rows, out, config.fmt)
    return reports


def _run_id(config, out):
    b = _load(config.b_path, "--b")
    if config.k is not None:
        if config.k > min(b.shape):
            raise ContractViolation(
                f"k must be <= min(rows, cols) = {min(b.shape)}, got {config.k}"
            )
        result = id_fixed_rank(b, config.k, strengthen=config.strengthen)
    else:
        result = id_fixed_precision(b, config.eps)
    write_matrix_csv(result.p, out / "id_p.csv")
    report = ExperimentReport(
        preset=None,
        params={"command": "id", "k": result.k, "norm": config.norm},
        metrics={"id_error": result.certificate.achieved_error},
        selected_columns={"id": [int(i) for i in result.selected]},
    )
    if min(b.shape) <= 2048:
        report.spectra = {"b": [float(x) for x in _svdvals(b)]}
        emit_svplot(report.spectra, out / "sv.svg")
    _write_report(report, {"id": id_result_to_dict(result, "id_p.csv")}, out / "report.json")
    _write_metrics_table([(dict(k=result.k), report.metrics)], out, config.fmt)
    return [report]


def _run_raid(config, out):
    a = _load(config.a_path, "--a")
    b = _load(config.b_path, "--b")
    result = raid(
        a, b, k=config.k, eps=config.eps, method=config.method, rank_tol=config.rank_tol
    )
    write_matrix_csv(result.id.p, out / "raid_p.csv")
    write_matrix_csv(result.y, out / "raid_y.csv")
    proj_sigma = rapca_spectrum(a, b, config.rank_tol)
    metrics = {
        "min_residual": result.min_residual,
        "raid_error": result.raid_error,
        "raid_error_frobenius": result.raid_error_frobenius,
    }
    report = ExperimentReport(
        preset=None,
        params={
            "command": "raid",
            "k": result.id.k,
            "method": config.method,
            "norm": config.norm,
        },
        metrics=metrics,
        spectra={"rapca": [float(x) for x in proj_sigma]},
        selected_columns={"raid": [int(i) for i in result.id.selected]},
    )
    emit_svplot(report.spectra, out / "sv.svg")
    _write_report(
        report,
        {"raid": raid_result_to_dict(result, "raid_p.csv", "raid_y.csv")},
        out / "report.json",
    )
    _write_metrics_table([(dict(k=result.id.k), metrics)], out, config.fmt)
    return [report]


def _run_rapca(config, out):
    a = _load(config.a_path, "--a")
    b = _load(config.b_path, "--b")
    result = rapca(
        a, b, k=config.k, eps=config.eps, method=config.method, rank_tol=config.rank_tol
    )
    write_matrix_csv(result.t, out / "rapca_t.csv")
    write_matrix_csv(result.v, out / "rapca_v.csv")
    write_matrix_csv(result.sigma.reshape(1, -1), out / "rapca_sigma.csv")
    proj_sigma = rapca_spectrum(a, b, config.rank_tol)
    report = ExperimentReport(
        preset=None,
        params={
            "command": "rapca",
            "k": int(result.sigma.size),
            "method": config.method,
            "norm": config.norm,
        },
        metrics={"rapca_error": result.rapca_error},
        spectra={"rapca": [float(x) for x in proj_sigma]},
    )
    if result.sigma.size >= 2:
        scores = (a @ result.t[:, :2]) * result.sigma[:2]
        report.biplot = {
            "scores": [list(map(float, row)) for row in scores],
            "loadings": [list(map(float, row)) for row in result.v[:, :2]],
        }
        emit_biplot(report.biplot["scores"], report.biplot["loadings"], out / "biplot.svg")
    emit_svplot(report.spectra, out / "sv.svg")
    _write_report(
        report,
        {"rapca": rapca_result_to_dict(result, "rapca_t.csv", "rapca_v.csv")},
        out / "report.json",
    )
    _write_metrics_table([(dict(k=int(result.sigma.size)), report.metrics)], out, config.fmt)
    return [report]


def _run_cca(config, out):
    a = _load(config.a_path, "--a")
    b = _load(config.b_path, "--b")
    spectrum = cca_spectrum(a, b, config.rank_tol)
    values = [float(x) for x in spectrum.sigma]
    write_matrix_csv(np.asarray(values).reshape(1, -1), out / "cca_sigma.csv")
    report = ExperimentReport(
        preset=None,
        params={"command": "cca"},
        metrics={"cca_top": values[0]},
        spectra={"cca": values},
    )
    emit_svplot(report.spectra, out / "sv.svg")
    _write_report(report, None, out / "report.json")
    return [report]


def run(config):
    """Execute a validated configuration; returns the reports produced."""
    config.validate()
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if config.command == "preset":
        return _run_preset(config, out)
    if config.command == "id":
        return _run_id(config, out)
    if config.command == "raid":
        return _run_raid(config, out)
    if config.command == "rapca":
        return _run_rapca(config, out)
    return _run_cca(config, out)
