"""Kernel-weighted local least squares for single units and whole panels.

Every routine here works on stacks of problems: leading axes of ``y`` and
``Z`` index independent series (units, bootstrap replications), and the
T x T weight matrix from :func:`tvmg.kernels.weight_matrix` is shared.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from tvmg.errors import DataError, SingularMatrixError
from tvmg.kernels import KernelSpec, weight_matrix
from tvmg.panel import Panel

# Local systems whose reciprocal condition number falls below this are singular.
RCOND_TOL = 1e-12


def add_intercept(X: np.ndarray) -> np.ndarray:
    """Prepend a column of ones along the last axis."""
    X = np.asarray(X, dtype=np.float64)
    ones = np.ones(X.shape[:-1] + (1,))
    return np.concatenate([ones, X], axis=-1)


def reciprocal_condition(G: np.ndarray) -> np.ndarray:
    """lambda_min / lambda_max of symmetric PSD matrices (last two axes)."""
    ev = np.linalg.eigvalsh(G)
    lo, hi = ev[..., 0], ev[..., -1]
    with np.errstate(invalid="ignore", divide="ignore"):
        r = np.where(hi > 0, lo / hi, 0.0)
    return np.nan_to_num(r, nan=0.0)


def solve_weighted_ls(X, y, w) -> np.ndarray:
    """Minimise ``sum_j w_j (y_j - x_j' b)^2`` via the weighted normal equations.

    Raises
    ------
    SingularMatrixError
        If ``X' W X`` has reciprocal condition number below ``RCOND_TOL``.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    if X.shape[0] != y.shape[0] or w.shape != y.shape:
        raise DataError("X, y and w must have matching row counts")
    if np.any(w < 0):
        raise DataError("weights must be nonnegative")
    G = X.T @ (w[:, None] * X)
    b = X.T @ (w * y)
    rc = reciprocal_condition(G)
    if not rc >= RCOND_TOL:
        raise SingularMatrixError(f"weighted Gram matrix singular (rcond={rc:.3g})")
    return np.linalg.solve(G, b)


def local_gram(Z: np.ndarray, W: np.ndarray) -> np.ndarray:
    """``G[..., t] = sum_j W[t, j] z_j z_j'`` for every target time t."""
    T, q = Z.shape[-2:]
    outer = Z[..., :, :, None] * Z[..., :, None, :]
    G = W @ outer.reshape(outer.shape[:-2] + (q * q,))
    return G.reshape(G.shape[:-1] + (q, q))


def local_fits(y: np.ndarray, Z: np.ndarray, W: np.ndarray):
    """Local WLS coefficients at every target time.

    Parameters
    ----------
    y : ndarray, shape (..., T)
    Z : ndarray, shape (..., T, q)
        Full design, intercept included if wanted.
    W : ndarray, shape (T, T)

    Returns
    -------
    beta : ndarray, shape (..., T, q)
        NaN where the local system is singular.
    ok : ndarray of bool, shape (..., T)
    """
    q = Z.shape[-1]
    G = local_gram(Z, W)
    b = W @ (Z * y[..., None])
    ok = reciprocal_condition(G) >= RCOND_TOL
    G_safe = np.where(ok[..., None, None], G, np.eye(q))
    beta = np.linalg.solve(G_safe, b[..., None])[..., 0]
    beta[~ok] = np.nan
    return beta, ok


@dataclass(frozen=True)
class UnitFit:
    """Coefficient path of one unit; column 0 is the time-varying intercept."""

    beta: np.ndarray
    ok: np.ndarray

    @property
    def status(self) -> list[str]:
        return ["ok" if s else "singular" for s in self.ok]


def fit_unit_path(y_i, X_i, spec: KernelSpec) -> UnitFit:
    """Local WLS path for one unit: T x (p+1) coefficients, intercept first.

    Singular local systems are flagged per t instead of aborting the path.
    """
    y_i = np.asarray(y_i, dtype=np.float64)
    X_i = np.asarray(X_i, dtype=np.float64)
    if X_i.ndim == 1:
        X_i = X_i[:, None]
    T = y_i.shape[0]
    W = weight_matrix(T, spec)
    beta, ok = local_fits(y_i, add_intercept(X_i), W)
    return UnitFit(beta=beta, ok=ok)


@dataclass(frozen=True)
class PanelFit:
    """Unit-level paths for a whole panel.

    beta has shape (N, T, p+1), ok has shape (N, T).
    """

    beta: np.ndarray
    ok: np.ndarray
    spec: KernelSpec


def fit_panel(panel: Panel, spec: KernelSpec) -> PanelFit:
    W = weight_matrix(panel.T, spec)
    beta, ok = local_fits(panel.y, add_intercept(panel.X), W)
    return PanelFit(beta=beta, ok=ok, spec=spec)
