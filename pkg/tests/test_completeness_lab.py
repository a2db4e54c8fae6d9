import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from sinelab import completeness_lab as cl
from sinelab.sampler import Configuration, bank_configurations
from sinelab.spectral_core import DomainError


@pytest.fixture(scope="module")
def confs(bank128):
    return bank_configurations(bank128[:8], 2024)


@pytest.mark.parametrize("t,L,A", [(0.5, 30.0, 0.0), (7.0, 30.0, 0.0), (3.0, 40.0, 2.0)])
def test_tail_log_mean_quadrature(t, L, A):
    f = lambda x: math.log(abs(x - t)) + math.log(abs(x + t)) - math.log(x * x + A * A)
    want = integrate.quad(f, L, np.inf, limit=400)[0]
    assert float(cl.tail_log_mean(t, L, A)) == pytest.approx(want, abs=1e-9)
    with pytest.raises(DomainError):
        cl.tail_log_mean(L, L)


def test_completed_lattice_product_is_sinc():
    X = cl.lattice(64, (0.0,))
    t = np.array([0.3, 1.7, -4.2])
    got = cl.log_abs_g(X, t)
    assert np.allclose(got, np.log(np.abs(np.sinc(t))), atol=1e-4)
    raw = cl.log_abs_g(X, t, complete_tail=False)
    assert np.max(np.abs(raw - np.log(np.abs(np.sinc(t))))) > 1e-3


def test_literal_shift_is_constant_factor(confs):
    X = confs[0]
    t = np.linspace(-10, 10, 21)
    d = cl.log_abs_g(X, t, A=2.0, complete_tail=False) - cl.log_abs_g(X, t, complete_tail=False)
    assert np.ptp(d) < 1e-9


def test_smoothed_form_vanishes_at_zero(confs):
    assert abs(float(cl.smoothed_log_abs(confs[0], np.array([0.0]), 2.0)[0])) < 1e-9
    with pytest.raises(DomainError):
        cl.smoothed_log_abs(confs[0], 0.0, 0.0)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 7), st.floats(-10, 10))
def test_reflection_invariance(confs, k, t):
    X = confs[k]
    p = cl.nearest_particles(X, 1)
    a = cl.log_abs_g(X, np.array([t]), p)
    b = cl.log_abs_g(cl.reflect(X), np.array([-t]), tuple(-v for v in p))
    assert a[0] == pytest.approx(b[0], abs=1e-8)


def test_trend_partials_nondecreasing(confs):
    for X in confs[:4]:
        for k, p in ((1, 1), (2, 2)):
            tr = cl.l2_trend(X, cl.nearest_particles(X, k), p)
            assert np.all(np.diff(tr.partial_integrals) >= 0)
            assert tr.verdict in ("growing", "plateauing", "indeterminate")
            json.dumps(tr.to_json())


def test_lattice_trends():
    # |sinc|^2/(1+t^2)^0 plateaus; removing one lattice point at power 1 also plateaus
    assert cl.l2_trend(cl.lattice(64, (0.0,)), (), 1).verdict == "plateauing"
    assert cl.l2_trend(cl.lattice(64), (0.0,), 1).verdict == "plateauing"
    assert cl.l2_trend(cl.lattice(64), (0.0, 1.0), 2).verdict == "plateauing"


def test_trend_domain():
    X = cl.lattice(64)
    with pytest.raises(DomainError):
        cl.l2_trend(X, (), 3)
    with pytest.raises(DomainError):
        cl.l2_trend(X, (0.0, 1.0, 2.0), 2)
    with pytest.raises(DomainError):
        cl.l2_trend(X, (), 1, R_max=40.0)


def test_verdicts():
    assert cl.verdict_from_slope(0.2) == "growing"
    assert cl.verdict_from_slope(0.001) == "plateauing"
    assert cl.verdict_from_slope(0.03) == "indeterminate"
    assert cl.verdict_from_slope(float("nan")) == "indeterminate"


def test_removal_consistency():
    g = cl.TrendResult([], [], "growing", 0.1, 64, 0.0, (1.0,), 1, [])
    p = cl.TrendResult([], [], "plateauing", 0.0, 64, 0.0, (1.0, 2.0), 1, [])
    assert not cl.removal_consistency(g, p)
    assert cl.removal_consistency(p, g)


@pytest.mark.parametrize("k", [0, 1, 2])
def test_lattice_codim_exact(k):
    rm = tuple(float(v) for v in range(k))
    I = (-0.5, k - 0.5) if k else (0.25, 0.75)
    r = cl.codim_gram(cl.lattice(32, rm), I, exterior_window=32)
    assert r.codim == k
    assert set(r.sweep.values()) == {k}
    json.dumps(r.to_json())


def test_codim_sweep_monotone_in_tolerance(confs):
    for X in confs[:4]:
        I = cl.interval_with_count(X, 2)
        r = cl.codim_gram(X, I)
        assert r.sweep["0.0001"] >= r.sweep["1e-06"] >= r.sweep["1e-08"]
        assert r.interior_count == 2
        assert r.codim is not None and 0 <= r.codim <= r.frame_dim


def test_interval_with_count(confs):
    for k in (1, 2, 3):
        a, b = cl.interval_with_count(confs[1], k)
        assert confs[1].count(a, b) == k
    with pytest.raises(DomainError):
        cl.codim_gram(confs[1], (-100.0, 0.0))


def test_growth_exponents(confs):
    X = confs[2]
    r0 = cl.lp_growth(X, 2.0, 0.0, [4, 8, 16])
    assert np.allclose(r0.exponents, 1.0)
    g = cl.max_growth(X, 2.0, [4, 8, 16])
    assert len(g.exponents) == 3 and g.target == pytest.approx(math.sqrt(2))
    assert cl.lp_target(1) == 1.5 and cl.lp_target(2) == pytest.approx(2 * math.sqrt(2))
    with pytest.raises(DomainError):
        cl.max_growth(X, 2.0, [128])
    with pytest.raises(DomainError):
        cl.lp_growth(X, 2.0, -1.0, [4])
    with pytest.raises(DomainError):
        cl.max_growth(X, 2.0, [4], form="other")


def test_synthetic_configuration_input():
    X = np.array([-3.2, -1.1, 0.4, 2.5])
    assert np.isfinite(cl.log_abs_g(X, np.array([0.1]))[0])
    assert isinstance(cl.reflect(X), Configuration)
