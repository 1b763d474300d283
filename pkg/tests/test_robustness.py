import numpy as np
import pytest

from tvmg.dgp import AR1, PanelDgpSpec, PathSpec, simulate_panel, simulate_shift_panel
from tvmg.errors import DataError, EstimationError, ParameterError
from tvmg.kernels import KernelSpec
from tvmg.mean_group import tvmg_estimate
from tvmg.panel import Panel
from tvmg.robustness import lofo, shift_test

SPEC = KernelSpec("gaussian", 4.0)


def _lines(slopes, groups, T=10, seed=0, intercepts=None):
    rng = np.random.default_rng(seed)
    N = len(slopes)
    X = rng.normal(size=(N, T, 1))
    a = np.zeros(N) if intercepts is None else np.asarray(intercepts, float)
    y = a[:, None] + np.asarray(slopes, float)[:, None] * X[..., 0]
    return Panel([f"u{i}" for i in range(N)], groups, np.arange(2000, 2000 + T), y, X, ["x"])


def test_identical_units_give_zero_diagnostics():
    x = np.random.default_rng(1).normal(size=9)
    y = 0.2 + 0.8 * x + np.cos(np.arange(9))
    panel = Panel(list("abcd"), ["f1", "f1", "f2", "f3"], np.arange(9),
                  np.tile(y, (4, 1)), np.tile(x, (4, 1))[..., None], ["x"])
    rep = lofo(panel, tvmg_estimate(panel, SPEC), SPEC)
    np.testing.assert_array_equal(rep.mdr, 0.0)
    np.testing.assert_array_equal(rep.sfr, 0.0)


def test_two_group_arithmetic():
    panel = _lines([1.0, 3.0], ["A", "B"])
    rep = lofo(panel, tvmg_estimate(panel, SPEC), SPEC)
    np.testing.assert_allclose(np.abs(rep.deviations), 1.0, atol=1e-12)
    np.testing.assert_allclose(rep.mdr, np.sqrt(2), atol=1e-12)
    np.testing.assert_array_equal(rep.sfr, 0.0)


def test_sign_flip_counted_and_intercept_ignored():
    # Group B flips the slope sign when excluded; intercepts all share one sign.
    panel = _lines([1.0, 1.0, -5.0], ["A", "A", "B"], intercepts=[5, 5, 5])
    path = tvmg_estimate(panel, SPEC)
    rep = lofo(panel, path, SPEC)
    assert np.all(path.beta_mg[:, 1] < 0)
    np.testing.assert_allclose(rep.sfr, 0.5)


def test_exact_zero_counts_as_flip():
    x = np.random.default_rng(4).normal(size=10)
    y = np.outer([1.0, -1.0, 0.0], x)
    panel = Panel(list("abc"), ["A", "B", "C"], np.arange(10), y,
                  np.tile(x, (3, 1))[..., None], ["x"])
    rep = lofo(panel, tvmg_estimate(panel, SPEC), SPEC)
    # Full slope is 0, so every exclusion counts as a flip.
    np.testing.assert_allclose(rep.sfr, 1.0)


def test_single_group_rejected():
    panel = _lines([1.0, 2.0], ["A", "A"])
    with pytest.raises(DataError):
        lofo(panel, tvmg_estimate(panel, SPEC), SPEC)


def test_unknown_variable_rejected():
    panel = _lines([1.0, 2.0], ["A", "B"])
    with pytest.raises(DataError):
        lofo(panel, tvmg_estimate(panel, SPEC), SPEC, var="z")


def test_matches_rebuilt_panels():
    spec = PanelDgpSpec(N=60, T=25, beta0=(PathSpec("sine", 0.2, amplitude=0.5),),
                        e_sd=0.5, e_smooth=0.5, n_groups=6, seed=17)
    panel, _ = simulate_panel(spec)
    path = tvmg_estimate(panel, SPEC)
    rep = lofo(panel, path, SPEC)
    groups = np.array(panel.group_labels)
    devs = []
    flips = []
    for g in rep.groups:
        reduced = tvmg_estimate(panel.subset(groups != g), SPEC)
        d = reduced.beta_mg[:, 1] - path.beta_mg[:, 1]
        devs.append(d)
        flips.append(np.sign(reduced.beta_mg[:, 1]) != np.sign(path.beta_mg[:, 1]))
    devs = np.array(devs)
    np.testing.assert_allclose(rep.deviations, devs, atol=1e-12)
    np.testing.assert_allclose(rep.mdr, np.abs(devs).max(axis=0) / path.se[:, 1], rtol=1e-10)
    np.testing.assert_allclose(rep.sfr, np.mean(flips, axis=0), atol=1e-12)


def test_shift_single_unit_exact_lines():
    T = 12
    times = np.arange(2000, 2012)
    x = np.random.default_rng(2).normal(size=T)
    post = times >= 2006
    y = 0.5 + np.where(post, 2.5, 1.0) * x
    panel = Panel(["a"], ["a"], times, y[None], x[None, :, None], ["x"])
    (res,) = shift_test(panel, 2006)
    assert res.delta == pytest.approx(1.5, abs=1e-10)
    assert res.pre == pytest.approx(1.0, abs=1e-10)
    assert res.n_used == 1 and not res.se_defined and np.isnan(res.se)


def test_post_equals_pre_plus_delta():
    for seed in range(5):
        panel = simulate_shift_panel(20, 15, 2008, beta_pre=0.3, delta=-0.2, beta_sd=0.1,
                                     delta_sd=0.1, start_time=2000, seed=seed)
        (res,) = shift_test(panel, 2008)
        assert abs(res.post - (res.pre + res.delta)) <= 1e-12


def test_break_year_belongs_to_post_period():
    T = 10
    times = np.arange(2000, 2010)
    x = np.random.default_rng(3).normal(size=(3, T))
    y = np.where(times >= 2005, 2.0, 1.0) * x
    panel = Panel(list("abc"), list("abc"), times, y, x[..., None], ["x"])
    assert shift_test(panel, 2005)[0].delta == pytest.approx(1.0, abs=1e-10)
    assert abs(shift_test(panel, 2006)[0].delta - 1.0) > 1e-3


def test_shift_break_must_be_inside_sample():
    panel = simulate_shift_panel(5, 10, 2005, start_time=2000)
    for b in (2000, 1999, 2010):
        with pytest.raises(ParameterError):
            shift_test(panel, b)


def test_shift_no_identifiable_unit():
    times = np.arange(2000, 2008)
    x = np.where(times >= 2004, 1.0, 0.0)  # x*post equals x: collinear
    panel = Panel(["a", "b"], ["a", "b"], times, np.random.default_rng(0).normal(size=(2, 8)),
                  np.tile(x, (2, 1))[..., None], ["x"])
    with pytest.raises(EstimationError):
        shift_test(panel, 2004)


def test_shift_p_value_and_ci():
    panel = simulate_shift_panel(50, 20, 2010, beta_pre=1.0, delta=0.5, delta_sd=0.2,
                                 start_time=2000, seed=1)
    (res,) = shift_test(panel, 2010, level=0.9)
    assert res.p_value < 0.01
    assert res.ci_lo < res.delta < res.ci_hi
    assert res.ci_hi - res.ci_lo == pytest.approx(2 * 1.6448536 * res.se, rel=1e-6)
