"""Balanced panel container, long-format ingestion and outcome transforms."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Hashable, Mapping, Sequence

import numpy as np
import pandas as pd

from tvmg.errors import DataError, DomainError, EmptyPanelError

logger = logging.getLogger(__name__)

ID_COLUMNS = ("unit", "group", "time")


def symmetric_pct_change(prev: float, curr: float) -> float:
    """Symmetric percentage change ``(curr - prev) / ((curr + prev) / 2)``.

    Bounded in [-2, 2]. A change from 0 to 0 is coded as 0.
    """
    for name, v in (("prev", prev), ("curr", curr)):
        if not math.isfinite(v) or v < 0:
            raise DomainError(f"{name} must be finite and nonnegative, got {v!r}")
    total = curr + prev
    if total == 0:
        return 0.0
    return (curr - prev) / (total / 2.0)


def symmetric_pct_change_series(levels) -> np.ndarray:
    """Vectorised symmetric percentage change of a level series (length T-1)."""
    a = np.asarray(levels, dtype=np.float64)
    if not np.all(np.isfinite(a)) or np.any(a < 0):
        raise DomainError("levels must be finite and nonnegative")
    prev, curr = a[..., :-1], a[..., 1:]
    total = prev + curr
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(total == 0, 0.0, (curr - prev) / (total / 2.0))
    return out


def lag_ratio(numerator, denominator) -> np.ndarray:
    """Ratio of a series to the lagged value of another, e.g. capex / lagged PP&E.

    ``out[k] = numerator[k + 1] / denominator[k]``; cells with a zero or missing
    lagged denominator come back as NaN so that :func:`build_panel` drops them.
    """
    num = np.asarray(numerator, dtype=np.float64)
    den = np.asarray(denominator, dtype=np.float64)
    if num.shape != den.shape:
        raise DataError("numerator and denominator must be aligned on time")
    lagged = den[:-1]
    with np.errstate(invalid="ignore", divide="ignore"):
        out = num[1:] / lagged
    out[~np.isfinite(lagged) | (lagged == 0)] = np.nan
    return out


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.float64, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Panel:
    """Balanced unit x time panel.

    Attributes
    ----------
    unit_ids : tuple
        Unit identifiers, length N.
    group_labels : tuple
        Group (e.g. parent firm) of each unit, aligned with ``unit_ids``.
    time_labels : ndarray of int, shape (T,)
        Strictly increasing calendar labels.
    y : ndarray, shape (N, T)
        Outcome.
    X : ndarray, shape (N, T, p)
        Regressors, intercept excluded.
    var_names : tuple of str, length p
    """

    unit_ids: tuple
    group_labels: tuple
    time_labels: np.ndarray
    y: np.ndarray
    X: np.ndarray
    var_names: tuple

    def __post_init__(self):
        object.__setattr__(self, "unit_ids", tuple(self.unit_ids))
        object.__setattr__(self, "group_labels", tuple(self.group_labels))
        object.__setattr__(self, "var_names", tuple(str(v) for v in self.var_names))
        times = np.array(self.time_labels, dtype=np.int64, copy=True)
        times.setflags(write=False)
        object.__setattr__(self, "time_labels", times)
        y = _frozen(self.y)
        X = _frozen(self.X)
        if X.ndim == 2:
            X = _frozen(X[:, :, None])
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "X", X)

        N, T = y.shape if y.ndim == 2 else (None, None)
        if y.ndim != 2 or X.ndim != 3 or X.shape[:2] != y.shape:
            raise DataError(f"inconsistent shapes y{y.shape} X{X.shape}")
        p = X.shape[2]
        if N < 1 or T < 3 or p < 1:
            raise DataError(f"panel needs N>=1, T>=3, p>=1; got N={N}, T={T}, p={p}")
        if len(self.unit_ids) != N or len(set(self.unit_ids)) != N:
            raise DataError("unit_ids must be unique and of length N")
        if len(self.group_labels) != N:
            raise DataError("group_labels must have length N")
        if len(times) != T or np.any(np.diff(times) <= 0):
            raise DataError("time_labels must be strictly increasing with length T")
        if len(self.var_names) != p:
            raise DataError("var_names must have length p")
        if not (np.all(np.isfinite(y)) and np.all(np.isfinite(X))):
            raise DataError("panel must be balanced with finite cells")

    @property
    def N(self) -> int:
        return self.y.shape[0]

    @property
    def T(self) -> int:
        return self.y.shape[1]

    @property
    def p(self) -> int:
        return self.X.shape[2]

    @property
    def groups(self) -> list:
        """Distinct group labels in order of first appearance."""
        return list(dict.fromkeys(self.group_labels))

    def subset(self, mask) -> "Panel":
        """Panel restricted to the units where ``mask`` is true."""
        mask = np.asarray(mask, dtype=bool)
        idx = np.flatnonzero(mask)
        if idx.size == 0:
            raise EmptyPanelError("subset leaves no units")
        return Panel(
            unit_ids=[self.unit_ids[i] for i in idx],
            group_labels=[self.group_labels[i] for i in idx],
            time_labels=self.time_labels,
            y=self.y[idx],
            X=self.X[idx],
            var_names=self.var_names,
        )

    def select(self, names: Sequence[str]) -> "Panel":
        """Panel keeping only the named regressors, in the given order."""
        cols = [self.var_names.index(n) for n in names]
        return Panel(self.unit_ids, self.group_labels, self.time_labels,
                     self.y, self.X[:, :, cols], list(names))

    def to_records(self, outcome: str = "y") -> pd.DataFrame:
        """Long-format frame with columns ``unit, group, time, outcome, *var_names``."""
        N, T = self.N, self.T
        data = {
            "unit": np.repeat(np.array(self.unit_ids, dtype=object), T),
            "group": np.repeat(np.array(self.group_labels, dtype=object), T),
            "time": np.tile(self.time_labels, N),
            outcome: self.y.reshape(-1),
        }
        for k, name in enumerate(self.var_names):
            data[name] = self.X[:, :, k].reshape(-1)
        return pd.DataFrame(data)


@dataclass
class BuildReport:
    n_retained: int
    dropped_units: list = field(default_factory=list)

    @property
    def n_dropped(self) -> int:
        return len(self.dropped_units)


def validate_records(records: pd.DataFrame) -> pd.DataFrame:
    """Check the long-format invariants and return a normalised copy."""
    missing = [c for c in ID_COLUMNS if c not in records.columns]
    if missing:
        raise DataError(f"records lack required columns: {', '.join(missing)}")
    if len(records) == 0:
        raise DataError("records are empty")
    df = records.copy()
    if df["time"].isna().any():
        raise DataError("time column has missing entries")
    try:
        df["time"] = df["time"].astype(np.int64)
    except (TypeError, ValueError) as exc:
        raise DataError(f"time labels must be integers: {exc}") from None
    dup = df.duplicated(subset=["unit", "time"])
    if dup.any():
        row = df.loc[dup].iloc[0]
        raise DataError(f"duplicate (unit, time) pair: ({row['unit']}, {row['time']})")
    return df


def read_records(path: str | Path) -> pd.DataFrame:
    """Read long-format CSV records (``unit,group,time`` + numeric columns)."""
    df = pd.read_csv(path, dtype={"unit": str, "group": str}, encoding="utf-8")
    df = validate_records(df)
    for col in df.columns:
        if col in ID_COLUMNS:
            continue
        try:
            df[col] = pd.to_numeric(df[col], errors="raise").astype(np.float64)
        except (TypeError, ValueError):
            raise DataError(f"column {col!r} is not numeric") from None
    return df


def build_panel(records: pd.DataFrame, outcome: str,
                regressors: Sequence[str]) -> tuple[Panel, BuildReport]:
    """Variable-specific balanced panel from long-format records.

    A unit is kept only if ``outcome`` and every requested regressor are
    present and finite at every time label that occurs in ``records``.
    Incomplete units are dropped whole; nothing is imputed.

    Returns
    -------
    panel : Panel
    report : BuildReport
        Retained count and the identifiers of dropped units.
    """
    df = validate_records(records)
    regressors = list(regressors)
    if not regressors:
        raise DataError("at least one regressor is required")
    cols = [outcome] + regressors
    absent = [c for c in cols if c not in df.columns]
    if absent:
        raise DataError(f"unknown column(s): {', '.join(absent)}")

    times = np.sort(df["time"].unique())
    unit_order = list(dict.fromkeys(df["unit"]))
    groups = df.groupby("unit", sort=False)["group"].first()

    values = df.set_index(["unit", "time"])[cols].astype(np.float64)
    full = pd.MultiIndex.from_product([unit_order, times], names=["unit", "time"])
    cube = values.reindex(full).to_numpy().reshape(len(unit_order), len(times), len(cols))

    complete = np.isfinite(cube).all(axis=(1, 2))
    kept = [u for u, ok in zip(unit_order, complete) if ok]
    dropped = [u for u, ok in zip(unit_order, complete) if not ok]
    if not kept:
        raise EmptyPanelError(
            f"no unit has complete observations of {', '.join(cols)}")
    if dropped:
        logger.info("build_panel: kept %d units, dropped %d", len(kept), len(dropped))

    cube = cube[complete]
    panel = Panel(
        unit_ids=kept,
        group_labels=[groups[u] for u in kept],
        time_labels=times,
        y=cube[:, :, 0],
        X=cube[:, :, 1:],
        var_names=regressors,
    )
    return panel, BuildReport(n_retained=len(kept), dropped_units=dropped)


def panel_from_arrays(y, X, var_names=None, unit_ids=None, group_labels=None,
                      time_labels=None) -> Panel:
    """Convenience constructor with default identifiers."""
    y = np.asarray(y, dtype=np.float64)
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 2:
        X = X[:, :, None]
    N, T = y.shape
    p = X.shape[2]
    return Panel(
        unit_ids=list(range(N)) if unit_ids is None else unit_ids,
        group_labels=list(range(N)) if group_labels is None else group_labels,
        time_labels=np.arange(1, T + 1) if time_labels is None else time_labels,
        y=y,
        X=X,
        var_names=[f"x{k + 1}" for k in range(p)] if var_names is None else var_names,
    )


def group_index(panel: Panel) -> tuple[list[Hashable], np.ndarray]:
    """Distinct groups and the integer group code of each unit."""
    groups = panel.groups
    code: Mapping[Hashable, int] = {g: k for k, g in enumerate(groups)}
    return groups, np.array([code[g] for g in panel.group_labels], dtype=np.int64)
