import json

import numpy as np
import pytest

import raidkit.cli as cli
from raidkit import ConvergenceError, write_matrix_binary, write_matrix_csv
from raidkit.report import RunConfig, run
from raidkit.errors import ContractViolation


@pytest.fixture
def pair_files(rng, tmp_path):
    a = rng.standard_normal((30, 6))
    b = rng.standard_normal((30, 12))
    a_path = tmp_path / "a.csv"
    b_path = tmp_path / "b.csv"
    write_matrix_csv(a, a_path)
    write_matrix_csv(b, b_path)
    return a_path, b_path


def test_id_run_writes_report_and_matrix(pair_files, tmp_path, capsys):
    _, b_path = pair_files
    out = tmp_path / "out"
    assert cli.main(["id", "--b", str(b_path), "--k", "3", "--out", str(out)]) == 0
    report = json.loads((out / "report.json").read_text())
    assert report["params"]["k"] == 3
    assert set(report["metrics"]) == {"id_error"}
    assert "hex" in report["metrics"]["id_error"]
    assert len(report["selected_columns"]["id"]) == 3
    cert = report["results"]["id"]["certificate"]
    assert cert["p_min_singular"] >= 1.0 - 1e-10
    p = np.loadtxt(out / "id_p.csv", delimiter=",", ndmin=2)
    sel = report["selected_columns"]["id"]
    assert np.array_equal(p[:, sel], np.eye(3))
    assert (out / "sv.svg").is_file()
    assert (out / "metrics.csv").is_file()
    assert "outputs written to" in capsys.readouterr().out


def test_id_accepts_binary_input(rng, tmp_path):
    b_path = tmp_path / "b.radm"
    write_matrix_binary(rng.standard_normal((8, 5)), b_path)
    assert cli.main(["id", "--b", str(b_path), "--k", "2", "--out", str(tmp_path / "o")]) == 0


def test_id_eps_flag(pair_files, tmp_path):
    _, b_path = pair_files
    out = tmp_path / "out"
    assert cli.main(["id", "--b", str(b_path), "--eps", "0.5", "--out", str(out)]) == 0
    report = json.loads((out / "report.json").read_text())
    err = float.fromhex(report["metrics"]["id_error"]["hex"])
    assert err <= 0.5


def test_raid_run_outputs(pair_files, tmp_path):
    a_path, b_path = pair_files
    out = tmp_path / "out"
    rc = cli.main(
        ["raid", "--a", str(a_path), "--b", str(b_path), "--k", "4", "--out", str(out)]
    )
    assert rc == 0
    for name in ("report.json", "raid_p.csv", "raid_y.csv", "sv.svg", "metrics.csv"):
        assert (out / name).is_file()
    report = json.loads((out / "report.json").read_text())
    assert set(report["metrics"]) == {"min_residual", "raid_error", "raid_error_frobenius"}


def test_raid_methods_agree_via_cli(pair_files, tmp_path):
    a_path, b_path = pair_files
    errs = {}
    for method in ("qr", "whitened"):
        out = tmp_path / method
        rc = cli.main(
            ["raid", "--a", str(a_path), "--b", str(b_path), "--k", "4",
             "--method", method, "--out", str(out)]
        )
        assert rc == 0
        report = json.loads((out / "report.json").read_text())
        errs[method] = float.fromhex(report["metrics"]["raid_error"]["hex"])
    assert abs(errs["qr"] - errs["whitened"]) <= 1e-8


def test_rapca_run_outputs(pair_files, tmp_path):
    a_path, b_path = pair_files
    out = tmp_path / "out"
    rc = cli.main(
        ["rapca", "--a", str(a_path), "--b", str(b_path), "--k", "3", "--out", str(out)]
    )
    assert rc == 0
    for name in ("rapca_t.csv", "rapca_v.csv", "rapca_sigma.csv", "biplot.svg"):
        assert (out / name).is_file()
    sigma = np.loadtxt(out / "rapca_sigma.csv", delimiter=",", ndmin=2)
    assert sigma.shape == (1, 3)


def test_cca_run_outputs(pair_files, tmp_path):
    a_path, b_path = pair_files
    out = tmp_path / "out"
    rc = cli.main(["cca", "--a", str(a_path), "--b", str(b_path), "--out", str(out)])
    assert rc == 0
    report = json.loads((out / "report.json").read_text())
    assert len(report["spectra"]["cca"]) == 6
    assert (out / "cca_sigma.csv").is_file()


def test_metrics_json_format(pair_files, tmp_path):
    _, b_path = pair_files
    out = tmp_path / "out"
    rc = cli.main(
        ["id", "--b", str(b_path), "--k", "2", "--format", "json", "--out", str(out)]
    )
    assert rc == 0
    rows = json.loads((out / "metrics.json").read_text())
    assert rows[0]["k"] == 2
    assert "hex" in rows[0]["id_error"]
    assert not (out / "metrics.csv").exists()


def test_preset_timeseries_quick_run(tmp_path):
    out = tmp_path / "out"
    rc = cli.main(
        ["preset", "timeseries", "--rows", "501", "--seed", "7", "--out", str(out)]
    )
    assert rc == 0
    report = json.loads((out / "report.json").read_text())
    assert report["preset"] == "timeseries"
    assert report["params"]["rows"] == 501
    header = (out / "metrics.csv").read_text().splitlines()[0]
    assert header == "rows,seed,min_residual,id_error,raid_error,rapca_error"


def test_preset_k_override(tmp_path):
    out = tmp_path / "out"
    rc = cli.main(
        ["preset", "timeseries", "--rows", "301", "--k", "2", "--out", str(out)]
    )
    assert rc == 0
    report = json.loads((out / "report.json").read_text())
    assert report["params"]["k"] == 2
    assert len(report["selected_columns"]["raid"]) == 2


def test_preset_save_pairs(tmp_path):
    out = tmp_path / "out"
    rc = cli.main(
        ["preset", "timeseries", "--rows", "201", "--save-pairs", "--out", str(out)]
    )
    assert rc == 0
    assert (out / "pair.json").is_file()
    assert (out / "pair_a.radm").is_file()
    assert (out / "pair_b.radm").is_file()


@pytest.mark.parametrize(
    "argv,fragment",
    [
        (["id", "--b", "/nonexistent/b.csv", "--k", "2"], "is not a file"),
        (["id", "--k", "2"], "required: --b"),
        (["id", "--b", "b.csv", "--k", "0"], "k must be >= 1"),
        (["id", "--b", "b.csv", "--k", "2", "--eps", "0.1"], "exactly one of --k and --eps"),
        (["id", "--b", "b.csv"], "exactly one of --k and --eps"),
        (["id", "--b", "b.csv", "--eps", "-1"], "eps must be > 0"),
        (["raid", "--b", "b.csv", "--k", "2"], "required: --a"),
        (["cca", "--a", "a.csv", "--b", "b.csv", "--k", "2"], "unrecognized arguments: --k"),
        (["raid", "--a", "a.csv", "--b", "b.csv", "--k", "2", "--strengthen"],
         "unrecognized arguments: --strengthen"),
        (["preset", "potential", "--eps", "0.1"], "unrecognized arguments: --eps"),
    ],
)
def test_validation_failures_exit_2(argv, fragment, tmp_path, capsys):
    rc = cli.main(argv + ["--out", str(tmp_path / "out")])
    assert rc == 2
    assert fragment in capsys.readouterr().err


def test_unknown_preset_exits_2(tmp_path, capsys):
    rc = cli.main(["preset", "fourier", "--out", str(tmp_path / "o")])
    assert rc == 2


def test_unknown_flag_exits_2(capsys):
    assert cli.main(["id", "--banana"]) == 2


def test_help_exits_0(capsys):
    assert cli.main(["--help"]) == 0
    assert "preset" in capsys.readouterr().out


def test_numerical_failure_exits_3(pair_files, tmp_path, monkeypatch, capsys):
    _, b_path = pair_files

    def explode(config):
        raise ConvergenceError("iteration stalled", estimate=1.0, residual=0.5)

    monkeypatch.setattr(cli, "run", explode)
    rc = cli.main(["id", "--b", str(b_path), "--k", "2", "--out", str(tmp_path / "o")])
    assert rc == 3
    assert "numerical failure" in capsys.readouterr().err


def test_linalg_error_exits_3(pair_files, tmp_path, monkeypatch):
    _, b_path = pair_files
    monkeypatch.setattr(
        cli, "run", lambda config: (_ for _ in ()).throw(np.linalg.LinAlgError("no"))
    )
    assert cli.main(["id", "--b", str(b_path), "--k", "2", "--out", str(tmp_path / "o")]) == 3


def test_k_larger_than_matrix_exits_2(pair_files, tmp_path, capsys):
    _, b_path = pair_files
    rc = cli.main(["id", "--b", str(b_path), "--k", "99", "--out", str(tmp_path / "o")])
    assert rc == 2
    assert "k must be <=" in capsys.readouterr().err


def test_run_config_direct_validation():
    with pytest.raises(ContractViolation, match="command"):
        RunConfig(command="teleport").validate()
    with pytest.raises(ContractViolation, match="format"):
        RunConfig(command="id", b_path="b.csv", k=2, fmt="yaml").validate()
    with pytest.raises(ContractViolation, match="drop --a"):
        RunConfig(command="id", a_path="a.csv", b_path="b.csv", k=2).validate()
    with pytest.raises(ContractViolation, match="drop the preset"):
        RunConfig(command="raid", preset="potential", k=2).validate()
    with pytest.raises(ContractViolation, match="--strengthen requires --k"):
        RunConfig(command="id", b_path="b.csv", eps=0.1, strengthen=True).validate()


def test_run_returns_reports(rng, tmp_path):
    b_path = tmp_path / "b.csv"
    write_matrix_csv(rng.standard_normal((10, 6)), b_path)
    config = RunConfig(command="id", b_path=str(b_path), k=2, out_dir=str(tmp_path / "o"))
    reports = run(config)
    assert len(reports) == 1
    assert reports[0].params["command"] == "id"
    assert "id_error" in reports[0].metrics
