import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from sinelab.sampler import (
    ConfigParseError, Configuration, bank_configurations, cached_bank, export_csv,
    haar_unitary, load, palm_density, persist, sample_bank, sample_configuration,
    sample_cue, sample_palm, stream, sub_seed, to_sine_window,
)
from sinelab.spectral_core import DomainError


def test_cue_determinism_and_range():
    a = sample_cue(32, 11, 3)
    assert np.array_equal(a, sample_cue(32, 11, 3))
    assert not np.array_equal(a, sample_cue(32, 11, 4))
    assert a.size == 32 and np.all(np.diff(a) > 0)
    assert a[0] >= -math.pi and a[-1] < math.pi


def test_eigenangles_match_general_solver():
    U = haar_unitary(24, stream(5, 0))
    ref = np.sort(np.angle(np.linalg.eigvals(U)))
    assert np.allclose(np.sort(sample_cue(24, 5, 0)), ref, atol=1e-10)
    assert np.allclose(U.conj().T @ U, np.eye(24), atol=1e-12)


def test_haar_trace_moment():
    # E |tr U|^2 = 1 for Haar unitaries of any size
    tr = np.array([abs(np.trace(haar_unitary(8, stream(9, k)))) ** 2 for k in range(2000)])
    se = tr.std() / math.sqrt(tr.size)
    assert abs(tr.mean() - 1.0) < 4 * se


def test_bank_independent_of_jobs_and_cached(tmp_path, monkeypatch):
    b1 = sample_bank(16, 80, 3, jobs=1)
    b2 = sample_bank(16, 80, 3, jobs=2)
    assert np.array_equal(b1, b2)
    assert np.array_equal(b1[7], 16 * sample_cue(16, 3, 7) / (2 * math.pi))
    monkeypatch.setenv("SINELAB_CACHE", str(tmp_path))
    c = cached_bank(16, 80, 3)
    assert np.array_equal(c, b1)
    assert np.array_equal(cached_bank(16, 40, 3), b1[:40])
    assert len(list(tmp_path.glob("*.npy"))) == 1


def test_configuration_wrapping(bank256):
    cfgs = bank_configurations(bank256[:3], seed=2024)
    assert cfgs[0].L == 128 and cfgs[0].n == 256
    assert cfgs[1].seed == sub_seed(2024, 1)
    c = sample_configuration(64, 1, 2)
    assert c.L == 32 and len(c) == 64
    assert len(to_sine_window(sample_cue(64, 1, 2), 64, bulk_only=True)) < 64


def test_unit_density(bank256):
    counts = np.sum((bank256 >= -2) & (bank256 < 2), axis=1)
    se = counts.std() / math.sqrt(counts.size)
    assert abs(counts.mean() - 4.0) < 4 * se


def test_number_variance_matches_sine_kernel(bank256):
    # Var #[0, s) = s - int int_{[0,s]^2} S(x,y)^2 = s - 2 int_0^s (s-u) sinc(u)^2 du
    s = 1.0
    want = s - 2 * integrate.quad(lambda u: (s - u) * np.sinc(u) ** 2, 0, s)[0]
    counts = np.sum((bank256 >= 0) & (bank256 < s), axis=1).astype(float)
    c = counts - counts.mean()
    var = c.var()
    se = math.sqrt(np.mean(c**4) - var**2) / math.sqrt(counts.size)
    assert abs(var - want) < 4 * se


def test_palm_sample():
    c = sample_palm(32, 4, 0)
    assert c.palm_anchor == 0.0
    assert c.same_as(sample_palm(32, 4, 0))
    assert 0.0 not in c.particles
    # repulsion: expected count near the anchor is far below 1
    counts = [sample_palm(32, 4, k).count(-0.5, 0.5) for k in range(150)]
    xs = np.linspace(-0.5, 0.5, 2001)
    want = np.trapezoid(palm_density(32, xs), xs)
    se = max(np.std(counts), 0.05) / math.sqrt(len(counts))
    assert want < 0.3
    assert abs(np.mean(counts) - want) < 4 * se + 0.02


def test_persist_roundtrip(tmp_path):
    for c in (sample_configuration(16, 2), sample_palm(16, 2)):
        p = tmp_path / "c.bin"
        persist(c, p)
        assert load(p).same_as(c)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-50, 50), max_size=30, unique=True), st.integers(0, 2**64 - 1))
def test_persist_roundtrip_property(tmp_path_factory, xs, seed):
    c = Configuration(np.array(xs, float), 50.0, n=7, seed=seed)
    p = tmp_path_factory.mktemp("cfg") / "c.bin"
    persist(c, p)
    assert load(p).same_as(c)


def test_load_errors_report_offsets(tmp_path):
    c = sample_configuration(8, 0)
    p = tmp_path / "c.bin"
    persist(c, p)
    good = p.read_bytes()
    cases = {b"XXXXXXXX" + good[8:]: 0, good[:20]: 20, good[:-4]: len(good) - 4,
             good + b"junk": len(good)}
    for data, off in cases.items():
        p.write_bytes(data)
        with pytest.raises(ConfigParseError) as exc:
            load(p)
        assert exc.value.offset == off
        assert str(off) in str(exc.value)


def test_export_csv_exact(tmp_path):
    c = sample_configuration(16, 8)
    p = tmp_path / "c.csv"
    export_csv(c, p)
    back = np.array([float(line) for line in p.read_text().split()])
    assert np.array_equal(back, c.particles)


def test_configuration_validation():
    with pytest.raises(DomainError):
        Configuration(np.array([0.0, 0.0]), 5.0)
    with pytest.raises(DomainError):
        Configuration(np.array([6.0]), 5.0)
    c = Configuration(np.array([1.0, -1.0, 0.5]), 5.0)
    assert np.array_equal(c.particles, [-1.0, 0.5, 1.0])
    assert c.count(-1.0, 1.0) == 2
    with pytest.raises(DomainError):
        sample_cue(0, 1)
