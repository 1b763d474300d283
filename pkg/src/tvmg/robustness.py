"""Leave-one-group-out influence diagnostics and the before/after coefficient-shift test."""

from __future__ import annotations

from dataclasses import dataclass
from statistics import NormalDist

import numpy as np

from tvmg.errors import DataError, EstimationError, ParameterError
from tvmg.kernels import KernelSpec
from tvmg.local_wls import RCOND_TOL, PanelFit, add_intercept, fit_panel, reciprocal_condition
from tvmg.mean_group import CoefficientPath, z_value
from tvmg.panel import Panel, group_index


@dataclass(frozen=True)
class LofoReport:
    """Per-time maximum deviation ratio (mdr) and sign-flip ratio (sfr).

    ``deviations[f, t]`` is the excluded-group path minus the full path for
    group ``groups[f]``; NaN where excluding f leaves no unit at t.
    """

    time_labels: np.ndarray
    var: str
    mdr: np.ndarray
    sfr: np.ndarray
    groups: tuple
    deviations: np.ndarray
    n_groups: np.ndarray


def group_excluded_paths(fit: PanelFit, codes: np.ndarray, n_groups: int):
    """Mean-group paths with each group removed, from per-group partial sums.

    Returns ``(paths, valid)`` with shapes (F, T, q) and (F, T).
    """
    contrib = np.where(fit.ok[..., None], fit.beta, 0.0)
    T, q = contrib.shape[1:]
    sums = np.zeros((n_groups, T, q))
    counts = np.zeros((n_groups, T), dtype=np.int64)
    np.add.at(sums, codes, contrib)
    np.add.at(counts, codes, fit.ok.astype(np.int64))
    total = contrib.sum(axis=0)
    remaining = fit.ok.sum(axis=0)[None, :] - counts
    valid = remaining > 0
    with np.errstate(invalid="ignore", divide="ignore"):
        paths = (total[None] - sums) / remaining[..., None]
    paths[~valid] = np.nan
    return paths, valid


def lofo(panel: Panel, path: CoefficientPath, spec: KernelSpec,
         var: str | None = None, fit: PanelFit | None = None) -> LofoReport:
    """Leave-one-group-out diagnostics for one slope coefficient.

    ``mdr_t = max_f |b^(-f)_t - b_t| / SE(b_t)`` and ``sfr_t`` is the share
    of groups whose exclusion changes the sign of the slope at t. A zero on
    either side counts as a flip. Groups whose exclusion leaves no usable
    unit at t are left out of both the max and the share.
    """
    groups, codes = group_index(panel)
    if len(groups) < 2:
        raise DataError("LOFO needs at least two distinct groups")
    var = panel.var_names[0] if var is None else var
    if var not in panel.var_names:
        raise DataError(f"unknown regressor {var!r}")
    k = path.column(var)
    if fit is None:
        fit = fit_panel(panel, spec)

    paths, valid = group_excluded_paths(fit, codes, len(groups))
    full = path.beta_mg[:, k]
    dev = paths[:, :, k] - full[None, :]
    # Deviations at round-off level are no deviation.
    scale = np.maximum(np.abs(paths[:, :, k]), np.abs(full)[None, :])
    dev = np.where(np.abs(dev) <= 64 * np.finfo(float).eps * scale, 0.0, dev)
    absdev = np.where(valid, np.abs(dev), -np.inf)
    maxdev = absdev.max(axis=0)
    se = path.se[:, k]
    with np.errstate(invalid="ignore", divide="ignore"):
        mdr = np.where(maxdev == 0, 0.0, maxdev / se)
    n_used = valid.sum(axis=0)
    mdr = np.where(n_used > 0, mdr, np.nan)

    flips = ~(np.sign(paths[:, :, k]) * np.sign(full)[None, :] > 0) & valid
    with np.errstate(invalid="ignore", divide="ignore"):
        sfr = flips.sum(axis=0) / n_used
    return LofoReport(
        time_labels=panel.time_labels,
        var=var,
        mdr=mdr,
        sfr=sfr,
        groups=tuple(groups),
        deviations=np.where(valid, dev, np.nan),
        n_groups=n_used,
    )


@dataclass(frozen=True)
class ShiftTestResult:
    var: str
    pre: float
    post: float
    delta: float
    se: float
    ci_lo: float
    ci_hi: float
    p_value: float
    n_used: int
    level: float
    # False when fewer than two units are identifiable and se is undefined.
    se_defined: bool


def unit_shift_coefficients(y: np.ndarray, x: np.ndarray, post: np.ndarray):
    """Per-unit OLS of y on (1, x, x*post).

    Returns ``(coefs, ok)``; coefs has shape (N, 3) = (alpha_i, beta_pre_i, delta_i)
    and is NaN for units whose design is not full rank.
    """
    Z = np.stack([np.ones_like(x), x, x * post[None, :]], axis=-1)
    G = np.einsum("ntk,ntl->nkl", Z, Z)
    b = np.einsum("ntk,nt->nk", Z, y)
    ok = reciprocal_condition(G) >= RCOND_TOL
    G_safe = np.where(ok[:, None, None], G, np.eye(3))
    coefs = np.linalg.solve(G_safe, b[..., None])[..., 0]
    coefs[~ok] = np.nan
    return coefs, ok


def shift_test(panel: Panel, break_time: int, level: float = 0.90,
               var: str | None = None) -> list[ShiftTestResult]:
    """Mean-group coefficient-shift test at ``break_time``, one regressor at a time.

    The post indicator is 1 from ``break_time`` onwards (inclusive). Each unit
    is fitted separately with its own intercept; the shift is averaged over
    the identifiable units and its standard error is the cross-unit standard
    deviation over ``sqrt(N_X)``. p-values are two-sided normal.
    """
    z = z_value(level)
    times = panel.time_labels
    if not times[0] < break_time <= times[-1]:
        raise ParameterError(
            f"break time {break_time} must fall strictly inside {times[0]}..{times[-1]}")
    post = (times >= break_time).astype(np.float64)
    names = panel.var_names if var is None else (var,)
    results = []
    for name in names:
        if name not in panel.var_names:
            raise DataError(f"unknown regressor {name!r}")
        x = panel.X[:, :, panel.var_names.index(name)]
        coefs, ok = unit_shift_coefficients(panel.y, x, post)
        n_x = int(ok.sum())
        if n_x == 0:
            raise EstimationError(f"interaction model not identifiable for any unit ({name})")
        pre = float(coefs[ok, 1].mean())
        delta = float(coefs[ok, 2].mean())
        if n_x >= 2:
            se = float(coefs[ok, 2].std(ddof=1) / np.sqrt(n_x))
            if se > 0:
                p = 2.0 * NormalDist().cdf(-abs(delta) / se)
            else:
                p = 0.0 if delta != 0 else np.nan
            ci = (delta - z * se, delta + z * se)
        else:
            se, p, ci = np.nan, np.nan, (np.nan, np.nan)
        results.append(ShiftTestResult(
            var=name, pre=pre, post=pre + delta, delta=delta, se=se,
            ci_lo=ci[0], ci_hi=ci[1], p_value=p, n_used=n_x, level=level,
            se_defined=n_x >= 2,
        ))
    return results
