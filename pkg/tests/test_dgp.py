import json

import numpy as np
import pytest

from tvmg.dgp import (
    AR1, FirmFrameworkParams, PanelDgpSpec, PathSpec, ar1_paths, green_investment,
    load_spec, simulate_firm, simulate_green_share_panel, simulate_panel,
    simulate_series, simulate_shift_panel, spec_from_dict, spec_to_dict,
)
from tvmg.errors import DomainError, ParameterError
from tvmg.kernels import KERNELS, KernelSpec
from tvmg.mean_group import tvmg_estimate
from tvmg.panel import Panel


def test_path_specs():
    s = np.array([0.0, 0.25, 1.0])
    np.testing.assert_allclose(PathSpec("constant", 2.0)(s), 2.0)
    np.testing.assert_allclose(PathSpec("linear", 1.0, end=3.0)(s), [1.0, 1.5, 3.0])
    np.testing.assert_allclose(PathSpec("sine", 0.0, amplitude=2.0)(s), [0.0, 2.0, 0.0], atol=1e-12)
    with pytest.raises(ParameterError):
        PathSpec("step")


def test_ar1_stationary_moments():
    proc = AR1(0.6, 1.0, 2.0)
    x = ar1_paths(proc, np.random.default_rng(0).standard_normal((4000, 50)))
    assert abs(x.mean() - 2.0) < 0.05
    assert abs(x.var() - 1 / (1 - 0.36)) < 0.05
    with pytest.raises(ParameterError):
        AR1(1.0)


@pytest.mark.parametrize("kind", KERNELS)
def test_noiseless_panel_recovered(kind):
    spec = PanelDgpSpec(N=10, T=20, beta0=(PathSpec("constant", 0.7),),
                        intercept=PathSpec("constant", -1.0), u_process=AR1(sd=0.0), seed=3)
    panel, beta0 = simulate_panel(spec)
    path = tvmg_estimate(panel, KernelSpec(kind, 4.0))
    np.testing.assert_allclose(path.beta_mg[:, 1], beta0[:, 0], atol=1e-10)
    np.testing.assert_allclose(path.beta_mg[:, 0], -1.0, atol=1e-10)


def test_seed_determinism():
    spec = PanelDgpSpec(N=5, T=8, e_sd=0.3, seed=11)
    a, _ = simulate_panel(spec)
    b, _ = simulate_panel(spec)
    c, _ = simulate_panel(spec.with_seed(12))
    np.testing.assert_array_equal(a.y, b.y)
    np.testing.assert_array_equal(a.X, b.X)
    assert not np.array_equal(a.y, c.y)


def test_unit_streams_do_not_depend_on_N():
    a, _ = simulate_panel(PanelDgpSpec(N=3, T=8, e_sd=0.3, seed=5))
    b, _ = simulate_panel(PanelDgpSpec(N=6, T=8, e_sd=0.3, seed=5))
    np.testing.assert_array_equal(a.y, b.y[:3])


def test_deviations_have_requested_spread():
    spec = PanelDgpSpec(N=4000, T=10, e_sd=0.5, e_smooth=1.0, u_process=AR1(sd=0.0),
                        x_process=(AR1(0.0, 1.0, 3.0),), seed=1)
    panel, _ = simulate_panel(spec)
    # y / x recovers each unit's slope exactly in a noiseless intercept-free panel.
    slopes = panel.y / panel.X[..., 0]
    assert abs(slopes.std() - 0.5) < 0.02


def test_sine_panel_tracks_noiseless_target():
    # The MG estimate stays within 0.2 of the path the same smoother yields on
    # noiseless data built from the same regressors; what is left against
    # the true sine is smoothing bias.
    T = 60
    base = dict(N=200, T=T, beta0=(PathSpec("sine", 0.0, amplitude=1.0),), seed=8)
    noisy, _ = simulate_panel(PanelDgpSpec(e_sd=0.3, e_smooth=0.5, **base))
    clean, _ = simulate_panel(PanelDgpSpec(u_process=AR1(sd=0.0), **base))
    np.testing.assert_array_equal(noisy.X, clean.X)
    spec = KernelSpec("gaussian", np.sqrt(T))
    gap = tvmg_estimate(noisy, spec).beta_mg[:, 1] - tvmg_estimate(clean, spec).beta_mg[:, 1]
    assert np.max(np.abs(gap)) < 0.2


def test_groups_and_labels():
    panel, _ = simulate_panel(PanelDgpSpec(N=7, T=5, n_groups=3, start_time=1993))
    assert isinstance(panel, Panel)
    assert panel.groups == ["g0", "g1", "g2"]
    assert panel.time_labels[0] == 1993 and panel.time_labels[-1] == 1997


def test_spec_validation():
    with pytest.raises(ParameterError):
        PanelDgpSpec(N=0, T=10)
    with pytest.raises(ParameterError):
        PanelDgpSpec(N=2, T=10, beta0=(PathSpec(), PathSpec()))
    with pytest.raises(ParameterError):
        spec_from_dict({"N": 2, "T": 5, "colour": "red"})


def test_spec_json_roundtrip(tmp_path):
    spec = PanelDgpSpec(N=4, T=9, beta0=(PathSpec("sine", 1, amplitude=0.5),),
                        x_process=(AR1(0.3, 2.0),), u_process=AR1(0.2), e_sd=0.1, seed=2)
    path = tmp_path / "spec.json"
    path.write_text(json.dumps(spec_to_dict(spec)))
    assert load_spec(path) == spec


def test_simulate_series_truth_layout():
    y, X, truth = simulate_series(12, (PathSpec("linear", 0, end=1),),
                                  PathSpec("constant", 2.0), seed=1)
    assert y.shape == (12,) and X.shape == (12, 1) and truth.shape == (12, 2)
    np.testing.assert_allclose(truth[:, 0], 2.0)


def test_shift_panel():
    panel = simulate_shift_panel(3, 10, 2005, beta_pre=1.0, delta=2.0,
                                 u_process=AR1(sd=0.0), start_time=2000, seed=0)
    x = panel.X[..., 0]
    post = panel.time_labels >= 2005
    np.testing.assert_allclose(panel.y, np.where(post, 3.0, 1.0) * x)


# Firm framework --------------------------------------------------------------

def test_green_investment_closed_form():
    p = FirmFrameworkParams(kappa=2.0, psi0=0.5, psi_d=1.0, psi_xi=2.0, mu=1.5,
                            delta=0.9, chi=0.4, Vm=-2.0)
    G = green_investment(1.0, 0.2, 0.1, p)
    assert G == pytest.approx((1.5 * 1.0 + 0.9 * 0.4 * 2.0) / (2.0 + 0.5 + 0.2 + 0.2))


def test_liquidity_raises_investment():
    p = FirmFrameworkParams()
    assert green_investment(2.0, 0.1, 0.1, p) > green_investment(1.0, 0.1, 0.1, p)


def test_leverage_and_tightness_lower_investment():
    p = FirmFrameworkParams()
    assert green_investment(1.0, 0.5, 0.1, p) <= green_investment(1.0, 0.1, 0.1, p)
    assert green_investment(1.0, 0.1, 0.5, p) <= green_investment(1.0, 0.1, 0.1, p)


def test_geometric_decay_without_investment():
    T = 10
    # Liquidity low enough that the investment condition truncates at zero.
    p = FirmFrameworkParams(rho=0.2, c=tuple([-5.0] * T), m0=3.0)
    path = simulate_firm(p, T)
    np.testing.assert_array_equal(path.G, 0.0)
    np.testing.assert_allclose(path.m, 3.0 * 0.8 ** np.arange(T), rtol=1e-14)


def test_intensity_truncated_at_zero():
    path = simulate_firm(FirmFrameworkParams(chi=5.0, m0=0.1, c=(10.0,)), 5)
    assert np.all(path.m >= 0) and path.m[-1] == 0.0


def test_growth_decomposition():
    rng = np.random.default_rng(0)
    T = 30
    p = FirmFrameworkParams(q=tuple(np.exp(rng.normal(size=T).cumsum() * 0.1)),
                            eps=tuple(0.5 + 0.05 * rng.normal(size=T)), c=tuple(rng.uniform(0, 0.5, T)),
                            m0=5.0)
    path = simulate_firm(p, T)
    ok = np.isfinite(path.dlog_emissions)
    assert ok[1:].all()
    np.testing.assert_allclose(path.dlog_emissions[ok], (path.dlog_m + path.dlog_q)[ok],
                               atol=1e-12)


def test_params_validated():
    with pytest.raises(DomainError):
        FirmFrameworkParams(Vm=0.5)
    with pytest.raises(DomainError):
        FirmFrameworkParams(rho=1.5)
    with pytest.raises(DomainError):
        FirmFrameworkParams(omega=(1.2,))


def test_green_share_panel_sign_tracks_share():
    # Investment cuts emissions when most of it is green and expands activity
    # otherwise, so the slope on lagged investment intensity changes sign
    # where the green share crosses one half.
    T = 31
    omega = np.linspace(0.1, 0.9, T)
    panel = simulate_green_share_panel(100, T, omega, seed=4)
    b = tvmg_estimate(panel, KernelSpec("gaussian", np.sqrt(T))).beta_mg[:, 1]
    far = np.abs(omega - 0.5) > 0.15
    np.testing.assert_array_equal(np.sign(b[far]), np.sign(0.5 - omega[far]))
    assert np.all(np.abs(panel.y) <= 2)
