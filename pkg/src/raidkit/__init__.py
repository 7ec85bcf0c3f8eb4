"""Dense interpolative decompositions, regression-aware variants, and
the experiment harness around them."""

from .errors import ContractViolation, ConvergenceError, DataFormatError
from .linalg import (
    PivotedQRFactors,
    SVDFactors,
    WhiteningOperator,
    as_matrix,
    default_rank_tol,
    least_squares_solve,
    matmul,
    pivoted_qr,
    pseudoinverse,
    seminorm_A,
    spectral_norm,
    svd,
    whitening_operator,
)
from .ids import (
    IDCertificate,
    IDResult,
    check_certificate,
    id_fixed_precision,
    id_fixed_rank,
)
from .regression import (
    CCASpectrum,
    RAIDResult,
    RAPCAResult,
    cca_spectrum,
    raid,
    raid_solution_space,
    rapca,
    rapca_spectrum,
)
from .experiments import (
    ChargeConfig,
    ExperimentPair,
    LagSpec,
    PRESETS,
    gen_potential,
    gen_timeseries,
    load_electricity,
    load_motion,
    make_lagged_pair,
)
from .matrixio import (
    read_matrix,
    read_matrix_binary,
    read_matrix_csv,
    write_matrix_binary,
    write_matrix_csv,
)
from .plots import emit_biplot, emit_svplot
from .report import ExperimentReport, RunConfig, report_to_dict, run

__version__ = "0.1.0"

__all__ = [
    "ContractViolation",
    "ConvergenceError",
    "DataFormatError",
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
    "IDCertificate",
    "IDResult",
    "id_fixed_rank",
    "id_fixed_precision",
    "check_certificate",
    "CCASpectrum",
    "RAIDResult",
    "RAPCAResult",
    "raid",
    "raid_solution_space",
    "rapca",
    "cca_spectrum",
    "rapca_spectrum",
    "ChargeConfig",
    "LagSpec",
    "ExperimentPair",
    "PRESETS",
    "gen_potential",
    "gen_timeseries",
    "load_electricity",
    "load_motion",
    "make_lagged_pair",
    "read_matrix",
    "read_matrix_csv",
    "read_matrix_binary",
    "write_matrix_csv",
    "write_matrix_binary",
    "emit_svplot",
    "emit_biplot",
    "ExperimentReport",
    "RunConfig",
    "run",
    "report_to_dict",
    "__version__",
]
