"""Mean-group aggregation of unit paths, inference bands and significance periods."""

from __future__ import annotations

from dataclasses import dataclass, field
from statistics import NormalDist

import numpy as np

from tvmg.errors import EstimationError, ParameterError
from tvmg.kernels import KernelSpec
from tvmg.local_wls import PanelFit, add_intercept, fit_panel, reciprocal_condition, RCOND_TOL
from tvmg.panel import Panel

INTERCEPT = "const"


def z_value(level: float) -> float:
    """Two-sided normal critical value for confidence ``level``."""
    if not 0 < level < 1:
        raise ParameterError(f"level must lie in (0, 1), got {level!r}")
    return NormalDist().inv_cdf((1.0 + level) / 2.0)


@dataclass(frozen=True)
class CoefficientPath:
    """Mean-group coefficient paths with cross-sectional inference.

    Column 0 of every (T, q) array is the intercept; columns 1..p follow
    ``var_names[1:]``.
    """

    time_labels: np.ndarray
    var_names: tuple
    beta_mg: np.ndarray
    sigma_e: np.ndarray
    n_eff: np.ndarray
    level: float
    se: np.ndarray
    ci_lo: np.ndarray
    ci_hi: np.ndarray
    bands_defined: np.ndarray
    spec: KernelSpec | None = None

    @property
    def T(self) -> int:
        return self.beta_mg.shape[0]

    def column(self, var: str | int) -> int:
        if isinstance(var, (int, np.integer)):
            return int(var)
        return self.var_names.index(var)


def aggregate_mean_group(beta: np.ndarray, ok: np.ndarray, level: float,
                         time_labels=None, var_names=None,
                         spec: KernelSpec | None = None) -> CoefficientPath:
    """Average unit paths ``beta`` (N, T, q) over units flagged ``ok`` (N, T).

    The cross-sectional covariance divides by the number of contributing
    units at each t, and band half-widths use ``sqrt(diag / n_eff)``.
    """
    z = z_value(level)
    N, T, q = beta.shape
    if time_labels is None:
        time_labels = np.arange(1, T + 1)
    if var_names is None:
        var_names = [INTERCEPT] + [f"x{k}" for k in range(1, q)]
    n_eff = ok.sum(axis=0)
    empty = np.flatnonzero(n_eff == 0)
    if empty.size:
        raise EstimationError(
            f"no unit has a nonsingular local fit at time {time_labels[empty[0]]}")

    contrib = np.where(ok[..., None], beta, 0.0)
    beta_mg = contrib.sum(axis=0) / n_eff[:, None]
    dev = np.where(ok[..., None], beta - beta_mg, 0.0)
    sigma_e = np.einsum("ntk,ntl->tkl", dev, dev) / n_eff[:, None, None]
    var = np.clip(np.diagonal(sigma_e, axis1=1, axis2=2), 0.0, None)
    se = np.sqrt(var / n_eff[:, None])

    bands_defined = n_eff >= 2
    ci_lo = np.where(bands_defined[:, None], beta_mg - z * se, np.nan)
    ci_hi = np.where(bands_defined[:, None], beta_mg + z * se, np.nan)
    return CoefficientPath(
        time_labels=np.asarray(time_labels),
        var_names=tuple(var_names),
        beta_mg=beta_mg,
        sigma_e=sigma_e,
        n_eff=n_eff,
        level=level,
        se=np.where(bands_defined[:, None], se, np.nan),
        ci_lo=ci_lo,
        ci_hi=ci_hi,
        bands_defined=bands_defined,
        spec=spec,
    )


def path_from_fit(panel: Panel, fit: PanelFit, level: float = 0.90) -> CoefficientPath:
    return aggregate_mean_group(fit.beta, fit.ok, level, panel.time_labels,
                                (INTERCEPT,) + panel.var_names, fit.spec)


def tvmg_estimate(panel: Panel, spec: KernelSpec, level: float = 0.90) -> CoefficientPath:
    """Time-varying mean-group estimate of the coefficient paths of ``panel``."""
    z_value(level)
    return path_from_fit(panel, fit_panel(panel, spec), level)


@dataclass(frozen=True)
class StaticMGResult:
    var_names: tuple
    coef: np.ndarray
    se: np.ndarray
    tvalue: np.ndarray
    n_used: int
    n_excluded: int
    # True where the t-value is infinite or undefined (zero dispersion, N=1).
    degenerate: np.ndarray


def static_mg_ols(panel: Panel) -> StaticMGResult:
    """Full-sample OLS per unit, averaged across units.

    The t-value divides the mean coefficient by ``s / sqrt(N)`` where ``s`` is
    the cross-unit standard deviation of the unit coefficients. Units whose
    design is singular are excluded and counted.
    """
    Z = add_intercept(panel.X)
    G = np.einsum("ntk,ntl->nkl", Z, Z)
    b = np.einsum("ntk,nt->nk", Z, panel.y)
    ok = reciprocal_condition(G) >= RCOND_TOL
    n_used = int(ok.sum())
    if n_used == 0:
        raise EstimationError("every unit has a singular full-sample design")
    coefs = np.linalg.solve(G[ok], b[ok][..., None])[..., 0]
    coef = coefs.mean(axis=0)
    if n_used >= 2:
        s = coefs.std(axis=0, ddof=1)
        # Dispersion at round-off level is zero dispersion.
        scale = np.abs(coefs).max(axis=0)
        s = np.where(s <= 64 * np.finfo(float).eps * scale, 0.0, s)
        se = s / np.sqrt(n_used)
    else:
        se = np.full_like(coef, np.nan)
    with np.errstate(divide="ignore", invalid="ignore"):
        tvalue = coef / se
    degenerate = ~np.isfinite(tvalue)
    return StaticMGResult(
        var_names=(INTERCEPT,) + panel.var_names,
        coef=coef,
        se=se,
        tvalue=tvalue,
        n_used=n_used,
        n_excluded=panel.N - n_used,
        degenerate=degenerate,
    )


@dataclass(frozen=True)
class Interval:
    """Closed run of significant periods; indices are 0-based positions."""

    start: int
    end: int
    direction: int
    start_idx: int
    end_idx: int

    @property
    def length(self) -> int:
        return self.end_idx - self.start_idx + 1


@dataclass
class SignificanceReport:
    intervals: dict = field(default_factory=dict)

    def __getitem__(self, var):
        return self.intervals[var]

    def rows(self):
        for var, ivs in self.intervals.items():
            for iv in ivs:
                yield var, iv


def _runs(signs: np.ndarray) -> list[tuple[int, int, int]]:
    runs = []
    i, n = 0, len(signs)
    while i < n:
        j = i
        while j + 1 < n and signs[j + 1] == signs[i]:
            j += 1
        if signs[i] != 0:
            runs.append((i, j, int(signs[i])))
        i = j + 1
    return runs


def significance_periods(path: CoefficientPath,
                         include_intercept: bool = False) -> SignificanceReport:
    """Maximal runs of times at which the band excludes zero, split by sign."""
    report = SignificanceReport()
    first = 0 if include_intercept else 1
    for k in range(first, len(path.var_names)):
        lo, hi = path.ci_lo[:, k], path.ci_hi[:, k]
        sig = np.where(lo > 0, 1, np.where(hi < 0, -1, 0))
        report.intervals[path.var_names[k]] = [
            Interval(int(path.time_labels[a]), int(path.time_labels[b]), d, a, b)
            for a, b, d in _runs(sig)
        ]
    return report


def duration_filter(report: SignificanceReport, min_len: int) -> SignificanceReport:
    """Keep only intervals spanning at least ``min_len`` consecutive periods."""
    if min_len < 1:
        raise ParameterError(f"min_len must be >= 1, got {min_len}")
    return SignificanceReport({
        var: [iv for iv in ivs if iv.length >= min_len]
        for var, ivs in report.intervals.items()
    })
