"""Synthetic data: random-coefficient panels, single series and a firm emissions model.

Panels follow ``y_it = a_it + x_it' beta_it + u_it`` with
``beta_it = beta0(t/T) + e_it``. Regressors and errors are stationary AR(1)
processes and every unit draws from its own child stream of the master seed,
so a panel is reproducible from ``seed`` alone.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from tvmg.errors import DomainError, ParameterError
from tvmg.panel import Panel, symmetric_pct_change_series

PATH_KINDS = ("constant", "linear", "sine")


@dataclass(frozen=True)
class PathSpec:
    """Smooth deterministic path on s in (0, 1].

    constant: ``level``; linear: from ``level`` at s=0 to ``end`` at s=1;
    sine: ``level + amplitude * sin(2 pi frequency s + phase)``.
    """

    kind: str = "constant"
    level: float = 0.0
    end: float = 0.0
    amplitude: float = 0.0
    frequency: float = 1.0
    phase: float = 0.0

    def __post_init__(self):
        if self.kind not in PATH_KINDS:
            raise ParameterError(f"unknown path kind {self.kind!r}")

    def __call__(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=np.float64)
        if self.kind == "constant":
            return np.full_like(s, self.level)
        if self.kind == "linear":
            return self.level + (self.end - self.level) * s
        return self.level + self.amplitude * np.sin(2 * np.pi * self.frequency * s + self.phase)


@dataclass(frozen=True)
class AR1:
    phi: float = 0.0
    sd: float = 1.0
    mean: float = 0.0

    def __post_init__(self):
        if not -1 < self.phi < 1:
            raise ParameterError(f"AR coefficient must lie in (-1, 1), got {self.phi}")
        if self.sd < 0:
            raise ParameterError(f"innovation sd must be >= 0, got {self.sd}")


def ar1_paths(proc: AR1, shocks: np.ndarray) -> np.ndarray:
    """Stationary AR(1) driven by standard normal ``shocks`` (time on axis 0)."""
    out = np.empty_like(shocks)
    out[0] = proc.mean + proc.sd / np.sqrt(1 - proc.phi**2) * shocks[0]
    for t in range(1, shocks.shape[0]):
        out[t] = proc.mean + proc.phi * (out[t - 1] - proc.mean) + proc.sd * shocks[t]
    return out


@dataclass(frozen=True)
class PanelDgpSpec:
    """Random-coefficient panel design.

    ``e_sd`` scales the unit deviations from ``beta0``; ``e_smooth`` mixes a
    slowly varying sine component into them (0 = deviations constant over
    time) while keeping their variance at ``e_sd**2``.
    """

    N: int
    T: int
    beta0: tuple = (PathSpec("constant", 1.0),)
    intercept: PathSpec = PathSpec()
    intercept_sd: float = 0.0
    e_sd: float = 0.0
    e_smooth: float = 0.0
    x_process: tuple = (AR1(),)
    u_process: AR1 = AR1(sd=1.0)
    n_groups: int | None = None
    start_time: int = 1
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "beta0", tuple(self.beta0))
        object.__setattr__(self, "x_process", tuple(self.x_process))
        if self.N < 1 or self.T < 3:
            raise ParameterError("need N >= 1 and T >= 3")
        if len(self.beta0) < 1 or len(self.beta0) != len(self.x_process):
            raise ParameterError("beta0 and x_process must both have one entry per regressor")
        if self.e_sd < 0 or self.intercept_sd < 0 or self.e_smooth < 0:
            raise ParameterError("standard deviations must be >= 0")
        if self.n_groups is not None and not 1 <= self.n_groups <= self.N:
            raise ParameterError("n_groups must lie in 1..N")

    @property
    def p(self) -> int:
        return len(self.beta0)

    def with_seed(self, seed: int) -> "PanelDgpSpec":
        d = {f: getattr(self, f) for f in self.__dataclass_fields__}
        d["seed"] = seed
        return PanelDgpSpec(**d)


def true_beta0(spec: PanelDgpSpec) -> np.ndarray:
    """Mean coefficient paths, shape (T, p)."""
    s = np.arange(1, spec.T + 1) / spec.T
    return np.column_stack([b(s) for b in spec.beta0])


def simulate_panel(spec: PanelDgpSpec) -> tuple[Panel, np.ndarray]:
    """Draw a balanced panel and return it with the true (T, p) mean path."""
    N, T, p = spec.N, spec.T, spec.p
    s = np.arange(1, T + 1) / T
    beta0 = true_beta0(spec)
    norm = np.sqrt(1.0 + spec.e_smooth**2 / 2.0)

    X = np.empty((N, T, p))
    y = np.empty((N, T))
    children = np.random.SeedSequence(spec.seed).spawn(N)
    for i, child in enumerate(children):
        rng = np.random.default_rng(child)
        xs = rng.standard_normal((T, p))
        us = rng.standard_normal(T)
        a, b = rng.standard_normal(p), rng.standard_normal(p)
        phase = rng.uniform(0.0, 2 * np.pi, p)
        c = rng.standard_normal()
        for k, proc in enumerate(spec.x_process):
            X[i, :, k] = ar1_paths(proc, xs[:, k])
        e = spec.e_sd * (a + spec.e_smooth * b * np.sin(2 * np.pi * s[:, None] + phase)) / norm
        u = ar1_paths(spec.u_process, us)
        alpha = spec.intercept(s) + spec.intercept_sd * c
        y[i] = alpha + np.sum(X[i] * (beta0 + e), axis=1) + u

    if spec.n_groups is None:
        groups = [f"g{i}" for i in range(N)]
    else:
        groups = [f"g{i % spec.n_groups}" for i in range(N)]
    panel = Panel(
        unit_ids=[f"u{i}" for i in range(N)],
        group_labels=groups,
        time_labels=spec.start_time + np.arange(T),
        y=y,
        X=X,
        var_names=[f"x{k + 1}" for k in range(p)],
    )
    return panel, beta0


def simulate_series(T: int, beta0=(PathSpec("constant", 1.0),), intercept=PathSpec(),
                    x_process=(AR1(),), u_process=AR1(), seed: int = 0):
    """One aggregate series; returns ``(y, X, truth)`` with truth (T, q+1), intercept first."""
    spec = PanelDgpSpec(N=1, T=T, beta0=beta0, intercept=intercept,
                        x_process=x_process, u_process=u_process, seed=seed)
    panel, b0 = simulate_panel(spec)
    s = np.arange(1, T + 1) / T
    truth = np.column_stack([intercept(s), b0])
    return panel.y[0], panel.X[0], truth


def spec_from_dict(d: dict) -> PanelDgpSpec:
    """Build a spec from the JSON configuration schema (see README)."""
    d = dict(d)
    known = set(PanelDgpSpec.__dataclass_fields__)
    unknown = set(d) - known
    if unknown:
        raise ParameterError(f"unknown simulation keys: {', '.join(sorted(unknown))}")
    if "beta0" in d:
        d["beta0"] = tuple(PathSpec(**b) for b in d["beta0"])
    if "intercept" in d:
        d["intercept"] = PathSpec(**d["intercept"])
    if "x_process" in d:
        d["x_process"] = tuple(AR1(**x) for x in d["x_process"])
    elif "beta0" in d:
        d["x_process"] = tuple(AR1() for _ in d["beta0"])
    if "u_process" in d:
        d["u_process"] = AR1(**d["u_process"])
    try:
        return PanelDgpSpec(**d)
    except TypeError as exc:
        raise ParameterError(str(exc)) from None


def spec_to_dict(spec: PanelDgpSpec) -> dict:
    return asdict(spec)


def load_spec(path: str | Path) -> PanelDgpSpec:
    with open(path, encoding="utf-8") as fh:
        return spec_from_dict(json.load(fh))


# Firm emissions framework ---------------------------------------------------

@dataclass(frozen=True)
class FirmFrameworkParams:
    """Structural constants and exogenous state paths of the firm model.

    ``Vm`` is the expected marginal continuation value of emissions
    intensity, held fixed and negative. Paths have length T; ``eps[t]`` is
    the intensity shock entering ``m[t]`` (``eps[0]`` is unused).
    """

    rho: float = 0.1
    chi: float = 0.5
    kappa: float = 1.0
    psi0: float = 0.0
    psi_d: float = 1.0
    psi_xi: float = 1.0
    mu: float = 1.0
    delta: float = 0.95
    Vm: float = -1.0
    m0: float = 1.0
    A: tuple = ()
    lam: tuple = ()
    c: tuple = ()
    d: tuple = ()
    xi: tuple = ()
    omega: tuple = ()
    q: tuple = ()
    eps: tuple = ()

    def __post_init__(self):
        if not 0 < self.rho < 1:
            raise DomainError("rho must lie in (0, 1)")
        if not 0 < self.delta < 1:
            raise DomainError("delta must lie in (0, 1)")
        for name in ("chi", "kappa", "psi_d", "psi_xi", "mu"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be positive")
        if not self.Vm < 0:
            raise DomainError("Vm must be negative")
        if self.m0 < 0:
            raise DomainError("m0 must be nonnegative")
        om = np.asarray(self.omega, dtype=np.float64)
        if om.size and (np.any(om < 0) or np.any(om > 1)):
            raise DomainError("omega must lie in [0, 1]")


@dataclass(frozen=True)
class FirmPath:
    m: np.ndarray
    q: np.ndarray
    G: np.ndarray
    psi: np.ndarray
    emissions: np.ndarray
    dlog_emissions: np.ndarray
    dlog_m: np.ndarray
    dlog_q: np.ndarray
    investment: np.ndarray


def _path(value, T, default, name):
    arr = np.asarray(value, dtype=np.float64)
    if arr.size == 0:
        return np.full(T, default)
    if arr.size == 1:
        return np.full(T, float(arr.reshape(-1)[0]))
    if arr.shape != (T,):
        raise ParameterError(f"path {name} must have length {T}")
    return arr


def green_investment(c, d, xi, params: FirmFrameworkParams) -> np.ndarray:
    """Investment solving ``(kappa + psi) G = mu c - delta chi Vm``, truncated at 0."""
    psi = params.psi0 + params.psi_d * np.asarray(d) + params.psi_xi * np.asarray(xi)
    cost = params.kappa + psi
    if np.any(cost <= 0):
        raise DomainError("kappa + psi must stay positive")
    return np.maximum(0.0, (params.mu * np.asarray(c) - params.delta * params.chi * params.Vm) / cost)


def _dlog(a: np.ndarray) -> np.ndarray:
    out = np.full(a.shape, np.nan)
    with np.errstate(divide="ignore", invalid="ignore"):
        la = np.where(a > 0, np.log(np.where(a > 0, a, 1.0)), np.nan)
    out[1:] = la[1:] - la[:-1]
    return out


def simulate_firm(params: FirmFrameworkParams, T: int) -> FirmPath:
    """Simulate one firm for T periods under exogenous activity and state paths.

    Intensity follows ``m[t+1] = max(0, (1 - rho) m[t] - chi G[t] + eps[t+1])``
    and emissions are ``m * q``.
    """
    if T < 2:
        raise ParameterError("T must be at least 2")
    c = _path(params.c, T, 1.0, "c")
    d = _path(params.d, T, 0.0, "d")
    xi = _path(params.xi, T, 0.0, "xi")
    q = _path(params.q, T, 1.0, "q")
    omega = _path(params.omega, T, 1.0, "omega")
    eps = _path(params.eps, T, 0.0, "eps")
    if np.any(q < 0):
        raise DomainError("activity q must be nonnegative")

    psi = params.psi0 + params.psi_d * d + params.psi_xi * xi
    G = green_investment(c, d, xi, params)
    m = np.empty(T)
    m[0] = params.m0
    for t in range(T - 1):
        m[t + 1] = max(0.0, (1 - params.rho) * m[t] - params.chi * G[t] + eps[t + 1])
    emissions = m * q
    with np.errstate(divide="ignore", invalid="ignore"):
        investment = np.where(omega > 0, G / omega, np.nan)
    return FirmPath(m=m, q=q, G=G, psi=psi, emissions=emissions,
                    dlog_emissions=_dlog(emissions), dlog_m=_dlog(m), dlog_q=_dlog(q),
                    investment=investment)


def simulate_green_share_panel(N: int, T: int, omega, *, rho: float = 0.3,
                               chi: float = 0.5, m_bar: float = 1.0, eta: float = 0.5,
                               capital: float = 1.0, invint_mean: float = 0.2,
                               invint_sd: float = 0.1, shock_sd: float = 0.01,
                               seed: int = 0, start_time: int = 1) -> Panel:
    """Firm panel where a share ``omega[t]`` of investment cuts emissions intensity.

    Green investment is ``omega * capital * invint`` and lowers next period's
    intensity; the remaining share expands activity by ``eta`` per unit of
    investment intensity. Intensity reverts to ``m_bar`` at rate ``rho``.
    The outcome is the symmetric percentage change of emissions and the
    regressor is the previous period's investment intensity.
    """
    omega = _path(omega, T, 0.0, "omega")
    if np.any(omega < 0) or np.any(omega > 1):
        raise DomainError("omega must lie in [0, 1]")
    y = np.empty((N, T))
    X = np.empty((N, T, 1))
    for i, child in enumerate(np.random.SeedSequence(seed).spawn(N)):
        rng = np.random.default_rng(child)
        inv = np.maximum(0.0, invint_mean + invint_sd * rng.standard_normal(T))
        shocks = shock_sd * rng.standard_normal((T, 2))
        m = np.empty(T + 1)
        q = np.empty(T + 1)
        m[0], q[0] = m_bar, 1.0
        for t in range(T):
            green = omega[t] * capital * inv[t]
            m[t + 1] = max(0.0, (1 - rho) * m[t] + rho * m_bar - chi * green + shocks[t, 0])
            q[t + 1] = q[t] * np.exp(eta * (1 - omega[t]) * inv[t] + shocks[t, 1])
        y[i] = symmetric_pct_change_series(m * q)
        X[i, :, 0] = inv
    return Panel(
        unit_ids=[f"f{i}" for i in range(N)],
        group_labels=[f"f{i}" for i in range(N)],
        time_labels=start_time + np.arange(T),
        y=y,
        X=X,
        var_names=["invint"],
    )


def simulate_shift_panel(N: int, T: int, break_time: int, *, beta_pre: float = 0.0,
                         delta: float = 0.0, beta_sd: float = 0.0, delta_sd: float = 0.0,
                         x_process: AR1 = AR1(), u_process: AR1 = AR1(),
                         intercept_sd: float = 0.0, start_time: int = 1,
                         seed: int = 0) -> Panel:
    """Panel whose slope jumps by ``delta_i`` from ``break_time`` onwards.

    ``y_it = a_i + beta_pre_i x_it + delta_i x_it 1(t >= break_time) + u_it``
    with ``beta_pre_i ~ N(beta_pre, beta_sd^2)`` and
    ``delta_i ~ N(delta, delta_sd^2)``.
    """
    times = start_time + np.arange(T)
    post = (times >= break_time).astype(np.float64)
    y = np.empty((N, T))
    X = np.empty((N, T, 1))
    for i, child in enumerate(np.random.SeedSequence(seed).spawn(N)):
        rng = np.random.default_rng(child)
        x = ar1_paths(x_process, rng.standard_normal(T))
        u = ar1_paths(u_process, rng.standard_normal(T))
        b, d, a = rng.standard_normal(3)
        slope = beta_pre + beta_sd * b + (delta + delta_sd * d) * post
        y[i] = intercept_sd * a + slope * x + u
        X[i, :, 0] = x
    return Panel(
        unit_ids=[f"u{i}" for i in range(N)],
        group_labels=[f"u{i}" for i in range(N)],
        time_labels=times,
        y=y,
        X=X,
        var_names=["x"],
    )
