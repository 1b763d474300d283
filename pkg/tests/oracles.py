"""Slow, independent reference implementations used to cross-check the library."""

from fractions import Fraction

import numpy as np


def exact_wls(X, y, w):
    """Weighted least squares in exact rational arithmetic (Gauss-Jordan)."""
    X = [[Fraction(float(v)) for v in row] for row in np.atleast_2d(X)]
    y = [Fraction(float(v)) for v in y]
    w = [Fraction(float(v)) for v in w]
    n, q = len(X), len(X[0])
    A = [[sum(w[j] * X[j][a] * X[j][b] for j in range(n)) for b in range(q)]
         + [sum(w[j] * X[j][a] * y[j] for j in range(n))] for a in range(q)]
    for col in range(q):
        piv = next(r for r in range(col, q) if A[r][col] != 0)
        A[col], A[piv] = A[piv], A[col]
        pv = A[col][col]
        A[col] = [v / pv for v in A[col]]
        for r in range(q):
            if r != col and A[r][col] != 0:
                f = A[r][col]
                A[r] = [a - f * b for a, b in zip(A[r], A[col])]
    return np.array([float(A[r][q]) for r in range(q)])


def loop_unit_path(y, X, kind, H):
    """Per-t weighted solve with explicitly built weights, no batching."""
    T = len(y)
    Z = np.column_stack([np.ones(T), np.asarray(X).reshape(T, -1)])
    out = np.empty((T, Z.shape[1]))
    for t in range(T):
        u = np.abs(np.arange(T) - t) / H
        if kind == "gaussian":
            w = np.exp(-0.5 * u**2)
        elif kind == "epanechnikov":
            w = np.where(u <= 1, 0.75 * (1 - u**2), 0.0)
        else:
            w = (u <= 1).astype(float)
        G = Z.T @ np.diag(w) @ Z
        out[t] = np.linalg.solve(G, Z.T @ np.diag(w) @ y)
    return out


def loop_mean_group(y, X, kind, H):
    paths = np.stack([loop_unit_path(y[i], X[i], kind, H) for i in range(len(y))])
    return paths.mean(axis=0), paths
