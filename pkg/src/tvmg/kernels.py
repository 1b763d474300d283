"""Kernel functions, bandwidth rules and time-weight matrices."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from tvmg.errors import DomainError, ParameterError

KERNELS = ("gaussian", "epanechnikov", "uniform")

# Grid of bandwidth exponents searched by cross-validation, H = T**alpha.
DEFAULT_ALPHA_GRID = tuple(round(0.3 + 0.05 * k, 2) for k in range(12))


@dataclass(frozen=True)
class KernelSpec:
    kind: str = "gaussian"
    H: float = 1.0

    def __post_init__(self):
        if self.kind not in KERNELS:
            raise ParameterError(f"unknown kernel {self.kind!r}; expected one of {KERNELS}")
        if not (np.isfinite(self.H) and self.H > 0):
            raise ParameterError(f"bandwidth H must be positive, got {self.H!r}")

    @classmethod
    def from_alpha(cls, kind: str, T: int, alpha: float) -> "KernelSpec":
        return cls(kind, bandwidth_from_alpha(T, alpha))


def kernel_eval(kind: str, u):
    """Evaluate the kernel at nonnegative scaled distance(s) ``u``.

    gaussian: exp(-u^2/2); epanechnikov: 0.75 (1 - u^2) on [0, 1];
    uniform: 1 on [0, 1]. Weights are left unnormalised since the
    weighted least-squares fit is invariant to a common scale.
    """
    arr = np.asarray(u, dtype=np.float64)
    if np.any(np.isnan(arr)) or np.any(arr < 0):
        raise DomainError("kernel argument must be nonnegative")
    if kind == "gaussian":
        out = np.exp(-0.5 * arr**2)
    elif kind == "epanechnikov":
        out = np.where(arr <= 1.0, 0.75 * (1.0 - arr**2), 0.0)
    elif kind == "uniform":
        out = np.where(arr <= 1.0, 1.0, 0.0)
    else:
        raise ParameterError(f"unknown kernel {kind!r}")
    return float(out) if np.ndim(out) == 0 else out


def bandwidth_from_alpha(T: int, alpha: float) -> float:
    """Bandwidth rule ``H = T**alpha``."""
    if int(T) != T or T < 2:
        raise ParameterError(f"T must be an integer >= 2, got {T!r}")
    if not 0 < alpha < 1:
        raise ParameterError(f"alpha must lie in (0, 1), got {alpha!r}")
    return float(T) ** float(alpha)


def weights_for_time(T: int, t: int, spec: KernelSpec) -> np.ndarray:
    """Kernel weights ``K(|j - t| / H)`` for j = 1..T (``t`` is 1-based)."""
    if not 1 <= t <= T:
        raise ParameterError(f"t must lie in 1..{T}, got {t}")
    j = np.arange(1, T + 1)
    return kernel_eval(spec.kind, np.abs(j - t) / spec.H)


def weight_matrix(T: int, spec: KernelSpec) -> np.ndarray:
    """T x T matrix whose row t holds the weights used to estimate at time t."""
    idx = np.arange(T)
    return kernel_eval(spec.kind, np.abs(idx[:, None] - idx[None, :]) / spec.H)
