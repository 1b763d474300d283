"""Stationarity transforms, quarterly-to-annual averaging and principal components.

Pipeline order is fixed: transform each quarterly series by its t-code,
average the four quarters of each year, drop series with any missing annual
value, then standardise and extract components.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from tvmg.errors import DataError, DomainError, ParameterError

PIPELINE_ORDER = "tcode -> annualize -> standardize"

# Number of leading observations lost by each t-code.
TCODE_LAG = {1: 0, 2: 1, 3: 2, 4: 0, 5: 1, 6: 2, 7: 2}


def _check_code(code) -> int:
    if int(code) != code or code not in TCODE_LAG:
        raise ParameterError(f"t-code must be an integer in 1..7, got {code!r}")
    return int(code)


def _log(x: np.ndarray) -> np.ndarray:
    bad = np.flatnonzero(np.isfinite(x) & (x <= 0))
    if bad.size:
        raise DomainError(f"log transform needs positive values; index {bad[0]} is {x[bad[0]]!r}")
    return np.log(x)


def apply_tcode(series, code: int) -> np.ndarray:
    """Transform a series by its t-code; the result is shorter by ``TCODE_LAG[code]``.

    1 level, 2 first difference, 3 second difference, 4 log, 5 log
    difference, 6 second log difference, 7 first difference of the growth
    rate ``x_t / x_{t-1} - 1``. Missing values (NaN) propagate.
    """
    code = _check_code(code)
    x = np.asarray(series, dtype=np.float64)
    if x.ndim != 1:
        raise DataError("series must be one-dimensional")
    if x.size <= TCODE_LAG[code]:
        raise DataError(f"t-code {code} needs more than {TCODE_LAG[code]} observations")
    if code == 1:
        return x.copy()
    if code == 2:
        return np.diff(x)
    if code == 3:
        return np.diff(x, n=2)
    if code == 4:
        return _log(x)
    if code == 5:
        return np.diff(_log(x))
    if code == 6:
        return np.diff(_log(x), n=2)
    prev = x[:-1]
    bad = np.flatnonzero(prev == 0)
    if bad.size:
        raise DomainError(f"growth rate undefined: index {bad[0]} is zero")
    return np.diff(x[1:] / prev - 1.0)


def annualize_quarterly(values, years) -> tuple[np.ndarray, np.ndarray]:
    """Average the four quarters of each year.

    Returns ``(unique_years, annual_means)``. Every year present must have
    exactly four observations; a missing quarter (NaN) makes the year NaN.
    """
    values = np.asarray(values, dtype=np.float64)
    years = np.asarray(years, dtype=np.int64)
    if values.shape != years.shape:
        raise DataError("values and year labels must align")
    uniq, counts = np.unique(years, return_counts=True)
    short = uniq[counts != 4]
    if short.size:
        raise DataError(f"year {short[0]} does not have exactly 4 quarters")
    means = np.array([values[years == yr].mean() for yr in uniq])
    return uniq, means


@dataclass(frozen=True)
class FactorSet:
    names: tuple
    means: np.ndarray
    sds: np.ndarray
    loadings: np.ndarray
    scores: np.ndarray
    explained: np.ndarray
    eigenvalues: np.ndarray


def standardize(data: np.ndarray, names=None):
    data = np.asarray(data, dtype=np.float64)
    means = data.mean(axis=0)
    sds = data.std(axis=0, ddof=1)
    flat = np.flatnonzero(~(sds > 0))
    if flat.size:
        label = names[flat[0]] if names is not None else flat[0]
        raise DataError(f"column {label} has zero variance and cannot be standardised")
    return (data - means) / sds, means, sds


def extract_pcs(data, k: int, names=None) -> FactorSet:
    """Principal components of the correlation matrix of ``data`` (T x p).

    Loadings are unit-norm eigenvectors with the largest-magnitude entry of
    each made positive; ``explained[i] = lambda_i / p``.
    """
    data = np.asarray(data, dtype=np.float64)
    if data.ndim != 2:
        raise DataError("data must be a T x p matrix")
    T, p = data.shape
    if not 1 <= k <= p:
        raise ParameterError(f"need 1 <= k <= p={p}, got k={k}")
    if T < 2:
        raise DataError("need at least two time points")
    if not np.all(np.isfinite(data)):
        raise DataError("data contain missing or non-finite values")
    names = tuple(names) if names is not None else tuple(f"s{j + 1}" for j in range(p))
    Z, means, sds = standardize(data, names)
    corr = Z.T @ Z / (T - 1)
    evals, evecs = np.linalg.eigh((corr + corr.T) / 2.0)
    order = np.argsort(evals)[::-1]
    evals = np.clip(evals[order], 0.0, None)
    evecs = evecs[:, order]
    pivot = np.argmax(np.abs(evecs), axis=0)
    signs = np.sign(evecs[pivot, np.arange(p)])
    evecs = evecs * np.where(signs == 0, 1.0, signs)
    loadings = evecs[:, :k]
    explained = evals[:k] / np.trace(corr)
    return FactorSet(
        names=names,
        means=means,
        sds=sds,
        loadings=loadings,
        scores=Z @ loadings,
        explained=np.clip(explained, 0.0, 1.0),
        eigenvalues=evals,
    )


_QUARTER_RE = re.compile(r"^\s*(\d{4})\s*[-:.\s]?\s*[Qq]?([1-4])\s*$")


def parse_quarter(label) -> tuple[int, int]:
    """(year, quarter) from labels like ``1992Q1``, ``1992:Q3`` or ``3/1/1992``."""
    s = str(label)
    m = _QUARTER_RE.match(s)
    if m:
        return int(m.group(1)), int(m.group(2))
    try:
        ts = pd.Timestamp(s)
    except (ValueError, TypeError):
        raise DataError(f"cannot parse quarter label {label!r}") from None
    return ts.year, (ts.month - 1) // 3 + 1


@dataclass
class AnnualPanel:
    """Annual transformed series ready for PCA, plus what was dropped."""

    years: np.ndarray
    data: pd.DataFrame
    dropped: list = field(default_factory=list)
    order: str = PIPELINE_ORDER


def read_quarterly(path) -> tuple[pd.DataFrame, dict]:
    """Wide quarterly CSV: first column is the period label, one column per series.

    FRED-QD style files carry ``factors``/``transform`` rows before the data;
    a ``transform`` row is returned as a t-code mapping.
    """
    raw = pd.read_csv(path, dtype=str)
    label_col = raw.columns[0]
    meta_mask = raw[label_col].str.strip().str.lower().isin(["factors", "transform"])
    tcodes = {}
    tr = raw[raw[label_col].str.strip().str.lower() == "transform"]
    if len(tr):
        row = tr.iloc[0]
        tcodes = {c: int(float(row[c])) for c in raw.columns[1:] if pd.notna(row[c])}
    body = raw[~meta_mask & raw[label_col].notna()].reset_index(drop=True)
    if body.empty:
        raise DataError("quarterly file has no data rows")
    values = body.iloc[:, 1:].apply(pd.to_numeric, errors="coerce")
    values.index = pd.MultiIndex.from_tuples(
        [parse_quarter(v) for v in body[label_col]], names=["year", "quarter"])
    return values, tcodes


def read_tcodes(path) -> dict:
    """Two-column CSV mapping series name to t-code."""
    df = pd.read_csv(path)
    if df.shape[1] < 2:
        raise DataError("t-code file needs columns series,tcode")
    return {str(s): _check_code(int(c)) for s, c in zip(df.iloc[:, 0], df.iloc[:, 1])}


def transform_and_annualize(quarterly: pd.DataFrame, tcodes: dict,
                            start_year: int | None = None,
                            end_year: int | None = None) -> AnnualPanel:
    """Apply t-codes, average to years and drop incomplete series.

    ``quarterly`` is indexed by (year, quarter). Only complete years are
    used. Unless ``start_year`` is given, the first complete year is skipped
    whenever some t-code differences the data, since its first quarters are
    lost to differencing.
    """
    names = [c for c in quarterly.columns if c in tcodes]
    missing = [c for c in quarterly.columns if c not in tcodes]
    if not names:
        raise DataError("no series has a t-code")
    years_all = quarterly.index.get_level_values("year").to_numpy()
    quarters = quarterly.index.get_level_values("quarter").to_numpy()
    order = np.lexsort((quarters, years_all))
    quarterly = quarterly.iloc[order]
    years_all = years_all[order]

    uniq, counts = np.unique(years_all, return_counts=True)
    full_years = set(uniq[counts == 4].tolist())
    keep_rows = np.isin(years_all, list(full_years))

    annual = {}
    rejected = []
    for name in names:
        x = quarterly[name].to_numpy(dtype=np.float64)
        code = tcodes[name]
        tx = np.full_like(x, np.nan)
        try:
            tx[TCODE_LAG[code]:] = apply_tcode(x, code)
        except DomainError:
            rejected.append(name)
            continue
        yrs, means = annualize_quarterly(tx[keep_rows], years_all[keep_rows])
        annual[name] = means
    yrs = np.array(sorted(full_years), dtype=np.int64)
    if not annual:
        raise DataError("every series failed its t-code transform")
    frame = pd.DataFrame(annual, index=yrs)

    if start_year is None:
        start_year = int(yrs[0]) + (1 if any(TCODE_LAG[tcodes[n]] for n in names) else 0)
    if end_year is None:
        end_year = int(yrs[-1])
    frame = frame.loc[(frame.index >= start_year) & (frame.index <= end_year)]
    incomplete = [c for c in frame.columns if frame[c].isna().any()]
    frame = frame.drop(columns=incomplete)
    return AnnualPanel(years=frame.index.to_numpy(), data=frame,
                       dropped=missing + rejected + incomplete)
