"""Time-varying mean-group estimation for heterogeneous panels."""

from tvmg.aggregate import mbb_bands, normal_bands, tv_ols_series
from tvmg.bandwidth import loo_cv_bandwidth
from tvmg.errors import (
    DataError, DomainError, EmptyPanelError, EstimationError, NumericError,
    ParameterError, SelectionError, SingularMatrixError, TvmgError,
)
from tvmg.kernels import KernelSpec, bandwidth_from_alpha, kernel_eval, weights_for_time
from tvmg.local_wls import fit_unit_path, solve_weighted_ls
from tvmg.macro import apply_tcode, extract_pcs, transform_and_annualize
from tvmg.mean_group import (
    duration_filter, significance_periods, static_mg_ols, tvmg_estimate,
)
from tvmg.panel import Panel, build_panel, lag_ratio, symmetric_pct_change
from tvmg.robustness import lofo, shift_test

__version__ = "0.1.0"
