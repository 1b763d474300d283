"""Bandwidth choice: fixed ``H = T**alpha`` or leave-one-unit-out cross-validation.

Cross-validation reading used here: for each alpha, every unit i is
predicted from the mean-group path of the other units,
``yhat_it = z_it' beta_MG,t^(-i)`` with ``z_it = (1, x_it)``, and the score
is the total squared prediction error over all (i, t). The held-out unit's
own intercept is not used, so a unit-level shift adds the same amount to
every alpha's score.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from tvmg.errors import ParameterError, SelectionError
from tvmg.kernels import DEFAULT_ALPHA_GRID, KernelSpec, bandwidth_from_alpha
from tvmg.local_wls import add_intercept, fit_panel
from tvmg.panel import Panel


@dataclass(frozen=True)
class CvResult:
    grid: tuple
    scores: np.ndarray
    best_alpha: float
    best_H: float
    kind: str
    T: int

    @property
    def H_values(self) -> np.ndarray:
        return np.array([bandwidth_from_alpha(self.T, a) for a in self.grid])


def leave_one_out_paths(beta: np.ndarray, ok: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Mean-group paths excluding each unit in turn.

    Returns ``(loo, valid)`` with ``loo`` of shape (N, T, q); ``valid`` is
    False where no other unit has an ok fit at t.
    """
    contrib = np.where(ok[..., None], beta, 0.0)
    total = contrib.sum(axis=0)
    count = ok.sum(axis=0)
    rest = count[None, :] - ok.astype(np.int64)
    valid = rest > 0
    with np.errstate(invalid="ignore", divide="ignore"):
        loo = (total[None] - contrib) / rest[..., None]
    loo[~valid] = np.nan
    return loo, valid


def cv_score(panel: Panel, spec: KernelSpec) -> float:
    """Total leave-one-unit-out squared prediction error for one bandwidth."""
    fit = fit_panel(panel, spec)
    loo, valid = leave_one_out_paths(fit.beta, fit.ok)
    if not valid.any():
        return np.inf
    Z = add_intercept(panel.X)
    pred = np.einsum("ntk,ntk->nt", Z, np.where(valid[..., None], loo, 0.0))
    resid = np.where(valid, panel.y - pred, 0.0)
    return float(np.sum(resid**2))


def loo_cv_bandwidth(panel: Panel, grid=DEFAULT_ALPHA_GRID,
                     kind: str = "gaussian") -> CvResult:
    """Pick alpha from ``grid`` minimising the leave-one-unit-out score.

    Ties go to the smallest alpha. Alphas whose held-out fits all fail score
    ``inf`` and are skipped.
    """
    grid = tuple(float(a) for a in grid)
    if not grid:
        raise ParameterError("alpha grid is empty")
    if panel.N < 2:
        raise ParameterError("cross-validation needs at least two units")
    scores = np.array([
        cv_score(panel, KernelSpec(kind, bandwidth_from_alpha(panel.T, a)))
        for a in grid
    ])
    finite = np.isfinite(scores)
    if not finite.any():
        raise SelectionError("no alpha in the grid yields a finite CV score")
    order = sorted(np.flatnonzero(finite), key=lambda k: (scores[k], grid[k]))
    best = grid[order[0]]
    return CvResult(grid=grid, scores=scores, best_alpha=best,
                    best_H=bandwidth_from_alpha(panel.T, best), kind=kind,
                    T=panel.T)
