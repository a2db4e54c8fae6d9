import csv
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, special, stats

from sinelab import deviation_lab as dl
from sinelab.spectral_core import DomainError


@pytest.fixture(scope="module")
def bs():
    return dl.BandSums(dl.DeviationSpec())


def logband_time(t, T):
    # F^T(t) = 2 (Ci(|t|) - Ci(|t|/T)), an independent closed form
    t = np.abs(np.asarray(t, float))
    return 2 * (special.sici(t)[1] - special.sici(t / T)[1])


def test_gaussian_tail():
    assert dl.gaussian_tail(2.0, 4.0) == pytest.approx(stats.norm.sf(1.0), rel=1e-14)
    assert float(dl.gaussian_tail(2.0, 4.0)) == pytest.approx(0.158655, abs=1e-6)
    with pytest.raises(DomainError):
        dl.gaussian_tail(1.0, 0.0)


def test_paley_zygmund():
    assert dl.paley_zygmund_bound(1.0, 1.0, 0.0) == 1.0
    assert dl.paley_zygmund_bound(1.0, 2.0, 0.5) == pytest.approx(1 / 8)
    with pytest.raises(DomainError):
        dl.paley_zygmund_bound(1.0, 0.5, 0.0)
    with pytest.raises(DomainError):
        dl.paley_zygmund_bound(1.0, 2.0, 1.0)


@pytest.mark.parametrize("kw", [dict(theta=3.0), dict(m=2), dict(A=1.0), dict(cutoff=20.0),
                                dict(T=16.5), dict(inner_ratio=1.0)])
def test_spec_validation(kw):
    with pytest.raises(DomainError):
        dl.DeviationSpec(**kw)


def test_levels():
    sp = dl.DeviationSpec(T=16, m=3, theta=1.0)
    lt = math.log(16)
    assert (sp.level_low, sp.level_band, sp.level_w) == pytest.approx((lt / 2, lt / 4, 1.5 * lt))
    assert list(sp.d_range) == list(range(16, 33))


def test_sums_match_direct_logband(bs, rng):
    x = np.sort(rng.uniform(-127, 127, 250))
    S, _ = bs(x)
    c = bs.spec.cutoff
    inside = x[np.abs(x) < c]
    mean = 2 * integrate.quad(lambda t: float(logband_time(t, 16)), 0, c, limit=500)[0]
    assert S[0] == pytest.approx(float(np.sum(logband_time(inside, 16))) - mean, abs=1e-8)


def test_empty_configuration(bs):
    S, _ = bs(np.zeros(0))
    c = bs.spec.cutoff
    mean = 2 * integrate.quad(lambda t: float(logband_time(t, 16)), 0, c, limit=500)[0]
    assert S[0] == pytest.approx(-mean, abs=1e-8)


def test_permutation_invariance(bs, rng):
    x = rng.uniform(-127, 127, 200)
    a, oka = bs(x)
    b, okb = bs(rng.permutation(x))
    assert np.allclose(a, b, atol=1e-10) and oka == okb


def test_batch_window_guard(bs):
    with pytest.raises(DomainError):
        bs.batch(np.zeros((2, 5)))


@settings(max_examples=40, deadline=None)
@given(st.floats(0.05, 2.8), st.floats(0.05, 2.8), st.integers(0, 2**31))
def test_theta_monotone(t1, t2, seed):
    lo, hi = sorted((t1, t2))
    bs_ = _SYNTH
    S = np.random.default_rng(seed).normal(scale=2.0, size=(64, len(bs_.descriptors)))
    for d in bs_.spec.d_range:
        v_hi = dl._events_from_sums(S, bs_, d, theta=hi)
        v_lo = dl._events_from_sums(S, bs_, d, theta=lo)
        assert np.all(v_lo | ~v_hi)


_SYNTH = dl.BandSums(dl.DeviationSpec())


def test_count_exceedances_synthetic(bs):
    sp = bs.spec
    S = np.zeros((5, len(bs.descriptors)))
    S[0, 0] = 10.0
    for l in range(1, sp.m):
        S[0, bs.column(sp.T, l)] = 10.0
    S[1, bs.column(sp.T + 3, sp.m)] = 100.0  # breaks W
    ok = np.array([True, True, True, True, False])
    res = dl.count_exceedances(S, ok, bs)
    assert res.counts[sp.T] == 1 and res.counts[sp.T + 1] == 0
    assert res.p_w == pytest.approx(3 / 4)
    assert res.exclusion_rate == pytest.approx(1 / 5)
    assert list(res.joint) == [1, 0, 0, 0]
    assert len(res.rows) == 4 * len(sp.d_range)


def test_pair_band_choice(bs):
    S = np.zeros((3, len(bs.descriptors)))
    pairs = dl.pair_probabilities(S, np.ones(3, bool), bs)
    by_gap = {p["d2"] - p["d1"]: p["l"] for p in pairs}
    assert 1 not in by_gap and 2 not in by_gap
    assert by_gap[3] == 1 and by_gap[6] == 1 and by_gap[7] == 2


def test_exp_moment_ratio_gaussian(bs):
    # S_{F^T} ~ N(0, 2 log T) has E exp(lam S) = exp(lam^2 log T)
    rng = np.random.default_rng(0)
    S = np.zeros((200_000, len(bs.descriptors)))
    S[:, 0] = rng.normal(scale=math.sqrt(2 * math.log(16)), size=len(S))
    r = dl.exp_moment_ratio(S, np.ones(len(S), bool), bs, 0.5)
    assert r["ratio"] == pytest.approx(1.0, abs=0.03)
    assert not r["flagged"]
    with pytest.raises(DomainError):
        dl.exp_moment_ratio(S, np.ones(len(S), bool), bs, 2.5)


def test_tail_counts_and_alpha():
    bank = np.tile(np.array([[0.1, 0.2, 5.0]]), (1000, 1))
    bank[:100, 1] = 5.5  # 10% of rows have one particle in [0, 1)
    r = dl.tail_counts(bank, (0.0, 1.0), kmax=4)
    assert r["p_eq"][1] == pytest.approx(0.1) and r["p_eq"][2] == pytest.approx(0.9)
    assert r["alpha_admissible"] == pytest.approx(min(-math.log(0.1), -math.log(0.9) / 4))
    assert r["exp_square"]["empirical"] <= r["exp_square"]["bound"]
    with pytest.raises(DomainError):
        dl.tail_counts(bank[:10], (0.0, 1.0))


def test_superexponential():
    k = np.arange(9)
    assert dl.superexponential(np.exp(-0.5 * k**2))
    assert dl.superexponential(0.5**k)
    assert not dl.superexponential([1, 0.5, 0.4, 0.39, 0.385, 0.38])
    assert not dl.superexponential([1, 0.5, 0.6, 0.1, 0.01, 0.001])


def test_tail_bound_helpers():
    tb = dl.TailBound(0.5, math.pi, 0.1)
    base = (1 + 2 * math.pi) * 0.1
    assert tb.small_interval_curve([1, 2]) == pytest.approx([base, base**3])
    assert dl.TailBound(0.5, math.pi, 0.5).small_interval_curve([1]) is None
    assert dl.exp_square_bound(0.0, 1.0) == 1.0
    with pytest.raises(DomainError):
        dl.TailBound(0.0, math.pi, 1.0)
    with pytest.raises(DomainError):
        dl.exp_square_bound(1.0, 1.0)


def test_band_seminorm_constant():
    r = dl.band_seminorm_constant(16, 3, d_points=3)
    assert r["reference"] == pytest.approx(2 * math.log(16) / 3)
    assert r["C"] == pytest.approx(max(row["ratio"] for row in r["rows"]))
    assert len(r["rows"]) == 3 * 2 and 0 < r["C"] < 10


def test_rows_csv(tmp_path):
    p = tmp_path / "rows.csv"
    dl.write_rows_csv([(1, 16, 0, 1), (1, 17, 1, 1)], p)
    rows = list(csv.reader(open(p)))
    assert rows[0] == ["seed", "d", "in_Vd", "in_W"] and rows[2] == ["1", "17", "1", "1"]
