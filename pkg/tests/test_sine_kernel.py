import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sinelab.sine_kernel import (
    C0, PalmKernel, SineKernel, derivative_bound_check, dirichlet_approx, dirichlet_kernel,
    eval_kernel, kernel_matrix, palm_eval, palm_eval_iterated, palm_matrix,
)
from sinelab.spectral_core import DomainError

pts = st.floats(-20.0, 20.0)


def test_values():
    assert eval_kernel(0.0, 0.0) == 1.0
    assert eval_kernel(0.0, 0.5) == pytest.approx(2 / math.pi, rel=1e-15)
    assert abs(eval_kernel(0.0, 1.0)) < 1e-15
    assert SineKernel()(1.5, 1.0) == eval_kernel(1.5, 1.0)
    assert C0 == math.pi


@settings(max_examples=200, deadline=None)
@given(pts, st.floats(-1e-2, 1e-2))
def test_against_numpy_sinc(x, h):
    # np.sinc(d) = sin(pi d)/(pi d) is an independent implementation
    for y in (x + h, x + 3.7):
        assert eval_kernel(x, y) == pytest.approx(float(np.sinc(x - y)), rel=1e-13, abs=1e-15)


def test_symmetry_and_translation():
    x = np.linspace(-3, 3, 13)
    K = kernel_matrix(x)
    assert np.array_equal(K, K.T)
    assert np.allclose(kernel_matrix(x + 0.37), K, atol=1e-15)


@settings(max_examples=30, deadline=None)
@given(st.lists(pts, min_size=2, max_size=12, unique=True))
def test_kernel_matrix_psd(xs):
    xs = np.array(xs)
    if np.min(np.diff(np.sort(xs))) < 1e-6:
        return
    assert np.linalg.eigvalsh(kernel_matrix(xs)).min() > -1e-10


def test_reproducing_property():
    # int S(x, z) S(z, y) dz = S(x, y); truncation error of the window is O(1/M)
    x, y, M = 0.3, -1.1, 4000.0
    z = np.linspace(-M, M, 1_600_001)
    val = np.trapezoid(eval_kernel(x, z) * eval_kernel(z, y), z)
    assert val == pytest.approx(eval_kernel(x, y), abs=1e-3)


def test_palm_single_anchor_closed_form():
    k = PalmKernel((0.0,))
    x = np.linspace(0.1, 3, 7)
    assert np.allclose(palm_eval(k, x, x), 1 - np.sinc(x) ** 2, atol=1e-14)
    assert palm_eval(k, 0.0, 0.0) == 0.0


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=1, max_size=4, unique=True), pts, pts)
def test_palm_matches_iterated_recursion(anchors, x, y):
    a = np.sort(anchors)
    if len(a) > 1 and np.min(np.diff(a)) < 0.2:
        return
    k = PalmKernel(tuple(anchors))
    assert palm_eval(k, x, y) == pytest.approx(palm_eval_iterated(k, x, y), abs=1e-9)


def test_palm_diagonal_is_determinant_ratio():
    q = np.array([-1.3, 0.0, 0.8])
    k = PalmKernel(tuple(q))
    for x in (-2.2, 0.4, 3.1):
        full = np.linalg.det(kernel_matrix(np.append(q, x)))
        assert palm_eval(k, x, x) == pytest.approx(full / np.linalg.det(kernel_matrix(q)), rel=1e-10)


def test_palm_matrix_psd_and_zero_rows():
    k = PalmKernel((0.0, 1.5))
    p = np.array([-2.0, -0.5, 0.0, 0.7, 1.5, 3.3])
    M = palm_matrix(k, p)
    assert np.linalg.eigvalsh(M).min() > -1e-12
    assert np.all(M[2] == 0) and np.all(M[:, 4] == 0)


def test_palm_rejects_duplicate_anchors():
    with pytest.raises(DomainError):
        PalmKernel((1.0, 1.0))


def test_dirichlet_diagonal_and_limit():
    for n in (1, 7, 64):
        assert dirichlet_approx(n, 0.25, 0.25) == pytest.approx((n + 1) / n)
    assert abs(dirichlet_approx(10_000, 0.0, 0.5) - 2 / math.pi) < 1e-3
    assert dirichlet_approx(10, 100.0, 0.0) == 0.0
    with pytest.raises(DomainError):
        dirichlet_approx(0, 0.0, 0.0)


def test_dirichlet_scaling_identity_and_sum():
    n = 12
    th = np.linspace(-3, 3, 25)
    direct = np.real(sum(np.exp(1j * (j - n / 2) * th) for j in range(n + 1)))
    assert np.allclose(dirichlet_kernel(n, th, 0.0), direct, atol=1e-12)
    t = np.linspace(-5, 5, 11)
    assert np.allclose(n * dirichlet_approx(n, t, 0.0), dirichlet_kernel(n, 2 * np.pi * t / n, 0.0))


def test_dirichlet_converges_to_sine_kernel():
    t = np.linspace(-4, 4, 17)
    errs = [np.max(np.abs(dirichlet_approx(n, t, 0.3) - eval_kernel(t, 0.3))) for n in (100, 1000)]
    assert errs[1] < errs[0] / 5


def test_derivative_bound():
    res = derivative_bound_check(8)
    assert res["max_ratio"] <= 1.0
    assert res["sup"][0] == pytest.approx(1.0, abs=1e-12)
    # the even derivatives peak at 0 with value pi^k/(k+1)
    for k in (2, 4, 6, 8):
        assert res["sup"][k] == pytest.approx(res["spectral_bound"][k], rel=1e-10)
    with pytest.raises(DomainError):
        derivative_bound_check(13)
