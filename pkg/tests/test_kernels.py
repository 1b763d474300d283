import numpy as np
import pytest
from hypothesis import given, strategies as st

from tvmg.errors import DomainError, ParameterError
from tvmg.kernels import (
    DEFAULT_ALPHA_GRID, KERNELS, KernelSpec, bandwidth_from_alpha, kernel_eval,
    weight_matrix, weights_for_time,
)


def test_kernel_values():
    assert kernel_eval("epanechnikov", 0.0) == 0.75
    assert kernel_eval("epanechnikov", 1.0) == 0.0
    assert kernel_eval("gaussian", 0.0) == 1.0
    assert kernel_eval("uniform", 0.99) == 1.0
    assert kernel_eval("uniform", 1.01) == 0.0


def test_negative_argument_rejected():
    with pytest.raises(DomainError):
        kernel_eval("gaussian", -0.1)


@pytest.mark.parametrize("T, alpha, H", [(31, 0.5, 5.5678), (31, 0.85, 18.52), (31, 0.45, 4.69)])
def test_bandwidth_from_alpha(T, alpha, H):
    assert bandwidth_from_alpha(T, alpha) == pytest.approx(H, abs=0.01)


def test_bandwidth_rejects_bad_alpha():
    for a in (0.0, 1.0, -0.2):
        with pytest.raises(ParameterError):
            bandwidth_from_alpha(31, a)


def test_default_grid():
    np.testing.assert_allclose(DEFAULT_ALPHA_GRID, np.arange(0.30, 0.851, 0.05))
    assert len(DEFAULT_ALPHA_GRID) == 12


def test_weights_examples():
    np.testing.assert_array_equal(weights_for_time(5, 3, KernelSpec("uniform", 1.0)),
                                  [0, 1, 1, 1, 0])
    np.testing.assert_allclose(weights_for_time(3, 1, KernelSpec("gaussian", 1.0)),
                               [1, np.exp(-0.5), np.exp(-2)])


@pytest.mark.parametrize("kind", KERNELS)
def test_weights_symmetric_in_distance(kind):
    T, t = 15, 7
    w = weights_for_time(T, t, KernelSpec(kind, 3.3))
    for d in range(1, 7):
        assert w[t - 1 - d] == w[t - 1 + d]


@pytest.mark.parametrize("kind", KERNELS)
@given(st.lists(st.floats(0, 5, allow_nan=False), min_size=2, max_size=20))
def test_kernels_non_increasing(kind, us):
    u = np.sort(np.array(us))
    assert np.all(np.diff(kernel_eval(kind, u)) <= 0)


def test_support():
    u = np.linspace(1.0001, 10, 50)
    assert np.all(kernel_eval("epanechnikov", u) == 0)
    assert np.all(kernel_eval("uniform", u) == 0)
    assert np.all(kernel_eval("gaussian", np.linspace(0, 30, 50)) > 0)


def test_wider_gaussian_is_flatter():
    a = weights_for_time(20, 5, KernelSpec("gaussian", 2.0))
    b = weights_for_time(20, 5, KernelSpec("gaussian", 4.0))
    assert np.all(b >= a)


def test_weight_matrix_rows_match_weights_for_time():
    spec = KernelSpec("epanechnikov", 2.5)
    W = weight_matrix(9, spec)
    for t in range(1, 10):
        np.testing.assert_array_equal(W[t - 1], weights_for_time(9, t, spec))


def test_kernel_spec_validation():
    with pytest.raises(ParameterError):
        KernelSpec("cosine", 1.0)
    with pytest.raises(ParameterError):
        KernelSpec("gaussian", 0.0)
