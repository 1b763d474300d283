"""Time-varying regression on a single aggregate series.

There is no cross-section to average over, so inference comes either from a
moving-block bootstrap (percentile bands) or from a local normal
approximation kept as a benchmark.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from tvmg.errors import DataError, ParameterError
from tvmg.kernels import KernelSpec, weight_matrix
from tvmg.local_wls import UnitFit, add_intercept, fit_unit_path, local_fits, local_gram
from tvmg.mean_group import z_value

PRNG_ALGORITHM = "numpy PCG64 via SeedSequence.spawn (one child stream per replication)"


def _design(y, X):
    y = np.asarray(y, dtype=np.float64)
    T = y.shape[0]
    if X is None:
        X = np.empty((T, 0))
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    if X.shape[0] != T:
        raise DataError("y and X must have the same number of periods")
    if T < X.shape[1] + 2:
        raise DataError(f"need T >= q + 2, got T={T}, q={X.shape[1]}")
    if not (np.all(np.isfinite(y)) and np.all(np.isfinite(X))):
        raise DataError("series must be finite")
    return y, X


def tv_ols_series(y, X, spec: KernelSpec) -> UnitFit:
    """Local WLS path of one series; column 0 is the time-varying intercept."""
    y, X = _design(y, X)
    return fit_unit_path(y, X, spec)


def block_length(T: int, c: float = 1.0) -> int:
    """Block length ``floor(c * T**(1/3))``."""
    if c <= 0:
        raise ParameterError(f"block scale c must be positive, got {c}")
    # Guard against cube roots like 27**(1/3) = 2.9999999999999996.
    ell = math.floor(c * T ** (1.0 / 3.0) + 1e-9)
    return ell


def mbb_indices(T: int, ell: int, B: int, rngs) -> np.ndarray:
    """Resampled time indices, shape (B, T).

    Each replication draws ``floor(T / ell)`` overlapping blocks with
    replacement; if they fall short of T one extra block is drawn and the
    concatenation is truncated to exactly T.
    """
    m = T // ell
    n_blocks = m + (1 if m * ell < T else 0)
    n_starts = T - ell + 1
    starts = np.stack([rng.integers(0, n_starts, size=n_blocks) for rng in rngs])
    idx = (starts[:, :, None] + np.arange(ell)).reshape(B, n_blocks * ell)
    return idx[:, :T]


@dataclass(frozen=True)
class BootstrapBands:
    beta_hat: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    B: int
    block_len: int
    level: float
    seed: int
    # Replications excluded from the quantiles at each (t, coefficient).
    n_failed: np.ndarray
    algorithm: str = PRNG_ALGORITHM


def mbb_bands(y, X, spec: KernelSpec, c: float = 1.0, B: int = 999,
              level: float = 0.90, seed: int = 0,
              block_len: int | None = None) -> BootstrapBands:
    """Pointwise percentile bands from a moving-block bootstrap of (y, x) pairs.

    The point path may fall outside its band; nothing is clamped.
    """
    y, X = _design(y, X)
    z_value(level)
    T = y.shape[0]
    if B < 100:
        raise ParameterError(f"B must be at least 100, got {B}")
    ell = block_length(T, c) if block_len is None else int(block_len)
    if ell < 1:
        raise ParameterError(f"block length must be >= 1, got {ell}")
    if ell > T:
        raise ParameterError(f"block length {ell} exceeds T={T}")

    rngs = [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(B)]
    idx = mbb_indices(T, ell, B, rngs)
    # Row 0 is the original sample so the point path shares the batch code path.
    idx = np.vstack([np.arange(T)[None, :], idx])
    Z = add_intercept(X)
    W = weight_matrix(T, spec)
    beta, ok = local_fits(y[idx], Z[idx], W)
    beta_hat, draws = beta[0], beta[1:]

    alpha = 1.0 - level
    failed = (~ok[1:]).sum(axis=0)
    n_failed = np.broadcast_to(failed[:, None], beta_hat.shape).copy()
    all_failed = n_failed == B
    safe = np.where(all_failed[None], 0.0, draws)
    lo, hi = np.nanquantile(safe, [alpha / 2.0, 1.0 - alpha / 2.0], axis=0)
    lo[all_failed] = np.nan
    hi[all_failed] = np.nan
    return BootstrapBands(beta_hat=beta_hat, lo=lo, hi=hi, B=B, block_len=ell,
                          level=level, seed=seed, n_failed=n_failed)


@dataclass(frozen=True)
class NormalBands:
    beta_hat: np.ndarray
    se: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    level: float


def local_sandwich_se(y, Z, W, beta):
    """Standard errors of local WLS under local homoskedasticity.

    ``V_t = s2_t * A_t^{-1} (sum_j w_tj^2 z_j z_j') A_t^{-1}`` with
    ``A_t = sum_j w_tj z_j z_j'`` and ``s2_t`` the kernel-weighted mean of the
    squared residuals of the fit at t. Works on stacked series like
    :func:`tvmg.local_wls.local_fits`.
    """
    A = local_gram(Z, W)
    M = local_gram(Z, W**2)
    fitted = np.einsum("...jk,...tk->...tj", Z, beta)
    resid2 = (y[..., None, :] - fitted) ** 2
    s2 = np.sum(W * resid2, axis=-1) / W.sum(axis=-1)
    Ainv = np.linalg.inv(np.where(np.isfinite(beta)[..., :1, None], A, np.eye(A.shape[-1])))
    V = s2[..., None, None] * (Ainv @ M @ Ainv)
    se = np.sqrt(np.clip(np.diagonal(V, axis1=-2, axis2=-1), 0.0, None))
    return np.where(np.isfinite(beta), se, np.nan)


def normal_bands(y, X, spec: KernelSpec, level: float = 0.90) -> NormalBands:
    """Benchmark bands ``beta_t +/- z * SE(beta_t)`` ignoring serial dependence."""
    y, X = _design(y, X)
    z = z_value(level)
    Z = add_intercept(X)
    W = weight_matrix(y.shape[0], spec)
    beta, _ = local_fits(y, Z, W)
    se = local_sandwich_se(y, Z, W, beta)
    return NormalBands(beta_hat=beta, se=se, lo=beta - z * se, hi=beta + z * se,
                       level=level)
