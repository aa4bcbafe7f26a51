"""Linear inverse modeling under white or OU colored noise, with
Liang-Kleeman information-flow causality."""

from .colored import (
    ColoredModel,
    colored_correlation,
    colored_diffusion,
    colored_objective,
    fit_colored,
    memory_factor,
    tau_bounds,
)
from .errors import (
    BranchCutError,
    CsvParseError,
    DegenerateVarianceError,
    FitFailureError,
    InsufficientDataError,
    LimflowError,
    SingularMatrixError,
    SingularSolveError,
)
from .infoflow import (
    InfoFlowMatrix,
    classify_flows,
    cofactor_matrix,
    info_flow_from_model,
    info_flow_liang,
    liang_dynamics,
)
from .linalg import (
    expm,
    is_spd,
    logm_principal,
    solve_two_sided,
    spectral_abscissa,
    symmetric_sqrt,
)
from .pipeline import (
    AnalysisConfig,
    CorrelationPanels,
    GridScanResult,
    MethodResult,
    PairRecord,
    apply_display_mask,
    correlation_panels,
    export_correlation_panels,
    grid_scan,
    preprocess,
    run_pair_analysis,
)
from .simulate import SimSpec, simulate, stationary_covariance
from .timeseries import (
    LaggedCorrelation,
    TimeSeriesMatrix,
    forward_diff_covariances,
    lagged_correlation,
    read_series_csv,
    remove_climatology,
    running_mean,
    write_series_csv,
)
from .white import (
    FitConfig,
    OptimizerOptions,
    WhiteModel,
    fit_white,
    single_lag_dynamics,
    white_correlation,
    white_diffusion,
    white_objective,
)

__version__ = "0.1.0"

__all__ = [
    "AnalysisConfig",
    "BranchCutError",
    "ColoredModel",
    "CorrelationPanels",
    "CsvParseError",
    "DegenerateVarianceError",
    "FitConfig",
    "FitFailureError",
    "GridScanResult",
    "InfoFlowMatrix",
    "InsufficientDataError",
    "LaggedCorrelation",
    "LimflowError",
    "MethodResult",
    "OptimizerOptions",
    "PairRecord",
    "SimSpec",
    "SingularMatrixError",
    "SingularSolveError",
    "TimeSeriesMatrix",
    "WhiteModel",
    "apply_display_mask",
    "classify_flows",
    "cofactor_matrix",
    "colored_correlation",
    "colored_diffusion",
    "colored_objective",
    "correlation_panels",
    "expm",
    "export_correlation_panels",
    "fit_colored",
    "fit_white",
    "forward_diff_covariances",
    "grid_scan",
    "info_flow_from_model",
    "info_flow_liang",
    "is_spd",
    "lagged_correlation",
    "liang_dynamics",
    "logm_principal",
    "memory_factor",
    "preprocess",
    "read_series_csv",
    "remove_climatology",
    "run_pair_analysis",
    "running_mean",
    "simulate",
    "single_lag_dynamics",
    "solve_two_sided",
    "spectral_abscissa",
    "stationary_covariance",
    "symmetric_sqrt",
    "tau_bounds",
    "white_correlation",
    "white_diffusion",
    "white_objective",
    "write_series_csv",
]
