"""Command-line interface.

Subcommands:

* ``id`` — interpolative decomposition of one matrix (``--b``).
* ``raid`` — regression-aware ID of ``--b`` for the design ``--a``.
* ``rapca`` — regression-aware PCA of ``--b`` for ``--a``.
* ``cca`` — canonical correlation singular values of ``--a``, ``--b``.
* ``preset`` — run a named experiment end to end.

Exit status: 0 on success, 2 on a validation or input-format problem,
3 on a numerical failure.
"""

import argparse
import sys

import numpy as np

from .errors import ContractViolation, ConvergenceError, DataFormatError
from .experiments import DATA_DIR_ENV, PRESETS
from .report import RunConfig, run

__all__ = ["main", "build_parser"]


def _add_output_flags(sp):
    sp.add_argument("--out", default=".", help="output directory (created if absent)")
    sp.add_argument(
        "--format",
        choices=("csv", "json"),
        default="csv",
        help="format of the metrics table (report.json is always written)",
    )
    sp.add_argument(
        "--norm",
        choices=("spectral", "frobenius"),
        default="spectral",
        help="norm used for the reported error metrics",
    )
    sp.add_argument(
        "--rank-tol",
        type=float,
        default=None,
        help="relative rank cutoff (default: max(rows, cols) * machine epsilon)",
    )


def _add_rank_flags(sp):
    sp.add_argument("--k", type=int, default=None, help="decomposition rank")
    sp.add_argument(
        "--eps", type=float, default=None, help="target error (picks the smallest rank)"
    )


def build_parser():
    p = argparse.ArgumentParser(
        prog="raidkit",
        description="Interpolative decompositions and regression-aware"
        " column selection, PCA and CCA for dense matrices.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("id", help="interpolative decomposition of --b")
    sp.add_argument("--b", required=True, help="matrix file (CSV or RADM binary)")
    _add_rank_flags(sp)
    sp.add_argument(
        "--strengthen",
        action="store_true",
        help="swap columns until no interpolation entry exceeds 2 in magnitude",
    )
    _add_output_flags(sp)

    for name, blurb in (
        ("raid", "regression-aware interpolative decomposition of --b for --a"),
        ("rapca", "regression-aware principal component analysis of --b for --a"),
    ):
        sp = sub.add_parser(name, help=blurb)
        sp.add_argument("--a", required=True, help="design matrix file")
        sp.add_argument("--b", required=True, help="target matrix file")
        _add_rank_flags(sp)
        sp.add_argument("--method", choices=("qr", "whitened"), default="qr")
        _add_output_flags(sp)

    sp = sub.add_parser("cca", help="canonical correlation singular values")
    sp.add_argument("--a", required=True, help="first matrix file")
    sp.add_argument("--b", required=True, help="second matrix file")
    _add_output_flags(sp)

    sp = sub.add_parser("preset", help="run a named experiment end to end")
    sp.add_argument("name", choices=sorted(PRESETS), help="experiment name")
    sp.add_argument("--k", type=int, default=None, help="rank override")
    sp.add_argument(
        "--l",
        type=int,
        action="append",
        default=None,
        help="lag value; repeat the flag for several lags",
    )
    sp.add_argument("--rows", type=int, default=None, help="row count (timeseries)")
    sp.add_argument("--seed", type=int, default=None, help="generator seed (timeseries)")
    sp.add_argument("--method", choices=("qr", "whitened"), default="qr")
    sp.add_argument(
        "--data-dir",
        default=None,
        help=f"dataset directory (default: ${DATA_DIR_ENV})",
    )
    sp.add_argument(
        "--download",
        action="store_true",
        help="fetch the preset's dataset into the data directory first",
    )
    sp.add_argument(
        "--save-pairs",
        action="store_true",
        help="persist the generated matrix pair(s) in binary form",
    )
    sp.add_argument("--strengthen", action="store_true", help=argparse.SUPPRESS)
    _add_output_flags(sp)
    return p


def _config_from(args):
    l_values = getattr(args, "l", None)
    return RunConfig(
        command=args.command,
        a_path=getattr(args, "a", None),
        b_path=getattr(args, "b", None),
        preset=getattr(args, "name", None),
        k=getattr(args, "k", None),
        eps=getattr(args, "eps", None),
        method=getattr(args, "method", "qr"),
        norm=args.norm,
        rank_tol=args.rank_tol,
        seed=getattr(args, "seed", None),
        rows=getattr(args, "rows", None),
        l_values=tuple(l_values) if l_values else None,
        data_dir=getattr(args, "data_dir", None),
        out_dir=args.out,
        fmt=args.format,
        strengthen=getattr(args, "strengthen", False),
        save_pairs=getattr(args, "save_pairs", False),
        download=getattr(args, "download", False),
    )


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 2
    try:
        reports = run(_config_from(args))
    except (ContractViolation, DataFormatError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ConvergenceError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    for rep in reports:
        bits = []
        if rep.preset:
            bits.append(rep.preset)
        bits += [f"{key}={value}" for key, value in rep.params.items()]
        bits += [f"{key}={value:.6g}" for key, value in rep.metrics.items()]
        print(" ".join(bits))
    print(f"outputs written to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
