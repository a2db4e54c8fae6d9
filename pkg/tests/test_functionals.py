import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from sinelab.functionals import (
    Bump, PairFunction, SpectralSums, VPProduct, additive, gx, gx_many, jacobian_xi,
    multiplicative, pair_additive, pair_multiplicative, rho2, variance_predict,
    variance_spectral,
)
from sinelab.sampler import Configuration, sample_configuration
from sinelab.spectral_core import DomainError, LogBand, ScaledTest, closed_form_time, time_eval

VP = VPProduct("window", (2.0, 5.0, 10.0))


def test_vp_validation():
    assert VPProduct.paper_n4(100).cutoff_sequence == (1.0, 16.0, 81.0)
    with pytest.raises(DomainError):
        VPProduct("paper_n4", (1.0, 8.0))
    with pytest.raises(DomainError):
        VPProduct("window", (3.0, 2.0))
    w = VPProduct.window(64)
    assert w.final >= 64 and len(w.cutoff_sequence) == 4


def test_additive_matches_naive(rng):
    x = np.sort(rng.uniform(-10, 10, 40))
    f = lambda t: np.cos(t) / (1 + t * t)
    res = additive(f, x, VP)
    for R, p in zip(VP.cutoff_sequence, res.partials):
        assert p == pytest.approx(sum(f(v) for v in x if abs(v) < R))
    g = ScaledTest("gauss", 2.0)
    assert additive(g, x, VP).value == pytest.approx(float(np.sum(time_eval(g, x))))


def test_multiplicative_edge_cases(rng):
    x = np.sort(rng.uniform(-9, 9, 20))
    g = lambda t: 1 + 0.5 * np.sin(t)
    assert multiplicative(g, x, VP).value == pytest.approx(float(np.prod(g(x))))
    assert multiplicative(lambda t: np.where(t == x[3], 0.0, 1.0), x, VP).value == 0.0
    assert multiplicative(lambda t: np.where(t == x[3], np.inf, 1.0), x, VP).value == math.inf
    with pytest.raises(DomainError):
        multiplicative(lambda t: -np.ones_like(t), x, VP)
    c = multiplicative(lambda t: np.exp(1j * t), x, VP, real_positive=False).value
    assert c == pytest.approx(np.exp(1j * x.sum()))


def test_pair_additive_matches_double_loop(rng):
    x = np.sort(rng.uniform(-9, 9, 15))
    q = PairFunction.from_callable(lambda a, b: np.exp(-(a - b) ** 2))
    want = sum(math.exp(-(x[i] - x[j]) ** 2) for i in range(15) for j in range(i + 1, 15))
    assert pair_additive(q, x, VP).value == pytest.approx(want)


def test_rho2_against_dblquad():
    q = PairFunction.from_callable(lambda a, b: np.exp(-(a * a + b * b)))
    res = rho2(q, 4.0, h_range=12.0, pts_per_unit=8)
    integrand = lambda y, x: math.exp(-(x * x + y * y)) * (1 - np.sinc(x - y) ** 2)
    want = 0.5 * integrate.dblquad(integrand, -8, 8, -8, 8, epsabs=1e-11)[0]
    assert res["value"] == pytest.approx(want, rel=1e-7)


def test_rho2_vanishes_for_divided_differences():
    q = PairFunction.divided_difference(Bump(0.3, 2.0))
    assert abs(rho2(q, 4.0, h_range=16.0)["value"]) < 1e-10


def test_regularized_pair_product_equals_plain(rng):
    x = np.sort(rng.uniform(-9, 9, 12))
    q = PairFunction.from_callable(lambda a, b: 0.5 * np.exp(-(a - b) ** 2))
    plain = pair_multiplicative(lambda a, b: 1 + q(a, b), x, VP).value
    reg = pair_multiplicative(None, x, VP, regularized=True, q=q, rho=0.37).value
    assert reg == pytest.approx(plain, rel=1e-12)
    with pytest.raises(DomainError):
        pair_multiplicative(None, x, VP, regularized=True,
                            q=PairFunction.from_callable(lambda a, b: 2 + 0 * a), rho=0.0)


def test_gx_on_the_integer_lattice():
    N = 4000
    X = Configuration(np.array([k for k in range(-N, N + 1) if k != 0], float), N + 0.5)
    vp = VPProduct("window", (N / 2, N + 0.25))
    for t in (0.3, 1.7, -2.4):
        r = gx(X, t, vp=vp)
        assert r.value.real == pytest.approx(math.sin(math.pi * t) / (math.pi * t), abs=2e-3)
        assert r.log_abs == pytest.approx(float(gx_many(X, np.array([t]))[0]), abs=1e-9)
    assert gx(X, 3.0, vp=vp).value == 0


def test_gx_removal_identity():
    X = sample_configuration(64, 5)
    p = X.particles[np.argsort(np.abs(X.particles))[3]]
    t = 0.77
    vp = VPProduct.window(X.L)
    a, b = gx(X, t, vp=vp), gx(X, t, removed=(p,), vp=vp)
    assert b.log_abs == pytest.approx(a.log_abs - math.log(abs(1 - t / p)), abs=1e-9)
    with pytest.raises(DomainError):
        gx(X, t, removed=(1e6,))


def test_bump():
    b = Bump(0.3, 2.0, 1.0)
    assert float(b(1.0)) == pytest.approx(0.3)
    assert b(3.5) == 0
    x, h = 1.8, 1e-6
    assert float(b.deriv(x)) == pytest.approx(float((b(x + h) - b(x - h)) / (2 * h)), rel=1e-6)
    assert b.sup_deriv() < 1


def test_jacobian_xi_naive(rng):
    x = np.sort(rng.uniform(-6, 6, 14))
    b = Bump(0.3, 2.0)
    y = x + b(x)
    want = np.prod(1 + b.deriv(x))
    for i in range(len(x)):
        for j in range(i + 1, len(x)):
            want *= ((y[i] - y[j]) / (x[i] - x[j])) ** 2
    vp = VPProduct("window", (8.0,))
    assert jacobian_xi(b, x, vp).value == pytest.approx(want, rel=1e-10)
    assert jacobian_xi(Bump(0.0), x, vp).value == 1.0
    with pytest.raises(DomainError):
        jacobian_xi(Bump(3.0, 1.0), x, vp)


def test_variance_forms_agree():
    g = ScaledTest("gauss", 2.0)
    a = variance_predict(lambda t: closed_form_time(g, t), support=(-20, 20))["value"]
    assert a == pytest.approx(variance_spectral(g), rel=1e-8)


def test_variance_of_interval_count():
    s = 4.0
    want = s - 2 * integrate.quad(lambda u: (s - u) * np.sinc(u) ** 2, 0, s, limit=200)[0]
    ind = lambda t: ((t >= 0) & (t < s)).astype(float)
    got = variance_predict(ind, support=(0, s), breaks=(0, s), H=256)["value"]
    assert got == pytest.approx(want, rel=1e-6)


def test_logband_variance_grows_like_log():
    v1, v2 = variance_spectral(LogBand(64)), variance_spectral(LogBand(128))
    assert v2 - v1 == pytest.approx(2 * math.log(2), rel=1e-10)


def test_spectral_sums_match_direct(rng):
    fs = [ScaledTest("gauss", 1.5), ScaledTest.gauss_band(2.0, 0.25, 1.0)]
    x = np.sort(rng.uniform(-30, 30, 50))
    ss = SpectralSums(fs, 40.0)
    want = [np.sum(closed_form_time(f, x)) for f in fs]
    assert np.allclose(ss(x), want, atol=1e-10)
    cen = SpectralSums(fs, 40.0, center=True).multi(x, (20.0, 40.0))
    for row, c in zip(cen, (20.0, 40.0)):
        inside = x[np.abs(x) < c]
        mean = [integrate.quad(lambda t: float(closed_form_time(f, np.array([t]))[0]), -c, c,
                               limit=400)[0] for f in fs]
        assert np.allclose(row, np.array([np.sum(closed_form_time(f, inside)) for f in fs]) - mean,
                           atol=1e-8)
    assert np.allclose(ss(np.zeros(0)), 0.0)
    with pytest.raises(DomainError):
        ss.multi(x, (50.0,))


@settings(max_examples=20, deadline=None)
@given(st.lists(st.floats(-30, 30), min_size=1, max_size=30), st.randoms())
def test_spectral_sums_permutation_invariant(xs, r):
    ss = SpectralSums([ScaledTest("cauchy", 2.0)], 40.0)
    ys = list(xs)
    r.shuffle(ys)
    assert np.allclose(ss(np.array(xs)), ss(np.array(ys)), atol=1e-10)
