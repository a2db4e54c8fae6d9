"""Large-deviation events for band statistics and particle-number tails.

For a configuration X the events are

    V_d = {S_{F^T} >= theta log T / 2, S_{f^{d,A,l}} >= theta log T / (2(m-1)), l < m},
    W   = {S_{f^{d,A,m}} <= 3 log T / (m-1) for all d in [T, 2T]}.

All band sums for one configuration come from one evaluation of the
empirical characteristic function (see :class:`functionals.SpectralSums`).
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from . import spectral_core as sc
from .functionals import SpectralSums
from .spectral_core import DomainError


def gaussian_tail(t, sigma2):
    """P(N(0, sigma2) > t) = erfc(t / sqrt(2 sigma2)) / 2."""
    if np.any(np.asarray(sigma2) <= 0):
        raise DomainError("variance must be positive")
    return 0.5 * special.erfc(np.asarray(t, float) / np.sqrt(2 * np.asarray(sigma2, float)))


@dataclass(frozen=True)
class DeviationSpec:
    """Parameters of the events V_d and W.

    Parameters
    ----------
    T : int
        Scale; d runs over T..2T.
    m : int
        Number of bands (m >= 3).
    A : float
        Damping (A > 1).
    theta : float
        Level in (0, 2 sqrt 2).
    cutoff : float
        Particles with |x| < cutoff enter the sums.
    conv_tol : float
        Largest allowed change of any sum between cutoff * inner_ratio and
        cutoff; above it the sample is indeterminate.
    """
    T: int = 16
    m: int = 3
    A: float = 2.0
    theta: float = 1.0
    cutoff: float = 112.0
    conv_tol: float = 2.0
    inner_ratio: float = 6 / 7

    def __post_init__(self):
        if int(self.T) != self.T or self.T < 2:
            raise DomainError(f"T must be an integer >= 2, got {self.T}")
        if self.m < 3:
            raise DomainError(f"m must be >= 3, got {self.m}")
        if not self.A > 1:
            raise DomainError(f"A must exceed 1, got {self.A}")
        if not 0 < self.theta < 2 * math.sqrt(2):
            raise DomainError(f"theta must lie in (0, 2 sqrt 2), got {self.theta}")
        if not 0 < self.inner_ratio < 1:
            raise DomainError("inner_ratio must lie in (0, 1)")
        if self.cutoff < 2 * self.T:
            raise DomainError("cutoff must be at least 2T")

    @property
    def d_range(self) -> range:
        return range(int(self.T), 2 * int(self.T) + 1)

    @property
    def level_low(self) -> float:
        """Threshold for S_{F^T}."""
        return self.theta * math.log(self.T) / 2

    @property
    def level_band(self) -> float:
        """Threshold for each band l < m."""
        return self.theta * math.log(self.T) / (2 * (self.m - 1))

    @property
    def level_w(self) -> float:
        """Upper bound for the remainder band in W."""
        return 3 * math.log(self.T) / (self.m - 1)

    def with_theta(self, theta: float) -> "DeviationSpec":
        return DeviationSpec(self.T, self.m, self.A, theta, self.cutoff, self.conv_tol,
                             self.inner_ratio)


class BandSums:
    """All sums needed for the events, for one spec.

    Column 0 is S_{F^T}; column 1 + (d - T) * m + (l - 1) is S_{f^{d,A,l}}.
    Sums are centred by their unit-density window mean, which is what the
    full-line sums (mean 2 pi fhat(0) = 0) would have.
    """

    def __init__(self, spec: DeviationSpec):
        self.spec = spec
        self.descriptors = [sc.LogBand(spec.T)]
        for d in spec.d_range:
            for l in range(1, spec.m + 1):
                self.descriptors.append(sc.Band(float(d), spec.A, float(spec.T), spec.m, l))
        self._sums = SpectralSums(self.descriptors, spec.cutoff, center=True)

    def column(self, d: int, l: int) -> int:
        return 1 + (d - self.spec.T) * self.spec.m + (l - 1)

    def __call__(self, particles) -> tuple[np.ndarray, bool]:
        """Sums at the cutoff and whether they are settled."""
        sp = self.spec
        inner, full = self._sums.multi(particles, (sp.cutoff * sp.inner_ratio, sp.cutoff))
        return full, bool(np.max(np.abs(full - inner)) <= self.spec.conv_tol)

    def batch(self, bank) -> tuple[np.ndarray, np.ndarray]:
        bank = np.asarray(bank, float)
        if bank.size and np.max(np.abs(bank)) < self.spec.cutoff:
            raise DomainError("sample window is smaller than the cutoff")
        rows, ok = zip(*(self(r) for r in bank))
        return np.stack(rows), np.array(ok)


@dataclass
class EventRecord:
    in_Vd: bool
    in_W: bool
    band_values: list
    remainder_value: float
    low_value: float
    determinate: bool = True


def _events_from_sums(S: np.ndarray, bs: BandSums, d: int, theta=None):
    sp = bs.spec if theta is None else bs.spec.with_theta(theta)
    low = S[..., 0]
    bands = np.stack([S[..., bs.column(d, l)] for l in range(1, sp.m)], axis=-1)
    inv = (low >= sp.level_low) & np.all(bands >= sp.level_band, axis=-1)
    return inv


def _w_from_sums(S: np.ndarray, bs: BandSums):
    sp = bs.spec
    rem = np.stack([S[..., bs.column(d, sp.m)] for d in sp.d_range], axis=-1)
    return np.all(rem <= sp.level_w, axis=-1)


def event_indicators(X, spec: DeviationSpec, d: int, sums: BandSums | None = None) -> EventRecord:
    """Membership of one configuration in V_d and W."""
    if d not in spec.d_range:
        raise DomainError(f"d must lie in [{spec.T}, {2 * spec.T}]")
    bs = sums or BandSums(spec)
    x = X.particles if hasattr(X, "particles") else np.asarray(X, float)
    S, ok = bs(x)
    return EventRecord(bool(_events_from_sums(S, bs, d)), bool(_w_from_sums(S, bs)),
                       [float(S[bs.column(d, l)]) for l in range(1, spec.m)],
                       float(S[bs.column(d, spec.m)]), float(S[0]), ok)


def prediction(spec: DeviationSpec, pair_l: int | None = None) -> float:
    """Gaussian-product comparison value for P(V_d) (or P(V_d1 & V_d2))."""
    lt = math.log(spec.T)
    power = spec.m - 1 + (pair_l or 0)
    return float(gaussian_tail(spec.level_low, 2 * lt)
                 * gaussian_tail(spec.level_band, 2 * lt / (spec.m - 1)) ** power)


@dataclass
class ExceedanceSummary:
    counts: dict
    joint: np.ndarray
    p_w: float
    excluded: int
    n_samples: int
    ratio: dict
    prediction: float
    rows: list = field(default_factory=list)

    @property
    def exclusion_rate(self) -> float:
        return self.excluded / self.n_samples if self.n_samples else 0.0


def count_exceedances(sums: np.ndarray, ok: np.ndarray, bs: BandSums,
                      seeds=None) -> ExceedanceSummary:
    """Counts of V_d, W and the statistic sum_d 1(V_d & W) over samples.

    Parameters
    ----------
    sums, ok : ndarray
        Output of :meth:`BandSums.batch`.
    seeds : sequence, optional
        Sample identifiers for the CSV rows.
    """
    sp = bs.spec
    keep = np.asarray(ok, bool)
    S = sums[keep]
    w = _w_from_sums(S, bs)
    counts, ratio, joint = {}, {}, np.zeros(len(S), int)
    pred = prediction(sp)
    ids = np.arange(len(sums)) if seeds is None else np.asarray(seeds)
    rows = []
    for d in sp.d_range:
        v = _events_from_sums(S, bs, d)
        counts[d] = int(v.sum())
        ratio[d] = (v.mean() / pred) if len(S) else math.nan
        joint += (v & w).astype(int)
        for sid, vi, wi in zip(ids[keep], v, w):
            rows.append((int(sid), d, int(vi), int(wi)))
    return ExceedanceSummary(counts, joint, float(w.mean()) if len(S) else math.nan,
                             int((~keep).sum()), len(sums), ratio, pred, rows)


def pair_probabilities(sums: np.ndarray, ok: np.ndarray, bs: BandSums) -> list[dict]:
    """Empirical P(V_d1 & V_d2) with the Gaussian comparison per distance.

    For each pair the largest admissible l with T^{l/m} <= |d1 - d2| is used.
    """
    sp = bs.spec
    S = sums[np.asarray(ok, bool)]
    ev = {d: _events_from_sums(S, bs, d) for d in sp.d_range}
    out = []
    ds = list(sp.d_range)
    for i, d1 in enumerate(ds):
        for d2 in ds[i + 1:]:
            gap = d2 - d1
            ls = [l for l in range(1, sp.m) if sp.T ** (l / sp.m) <= gap]
            if not ls:
                continue
            l = max(ls)
            p = float(np.mean(ev[d1] & ev[d2]))
            out.append({"d1": d1, "d2": d2, "l": l, "p": p, "prediction": prediction(sp, l)})
    return out


def exp_moment_ratio(sums: np.ndarray, ok: np.ndarray, bs: BandSums, lam: float,
                     d: int | None = None, bands: tuple = ()) -> dict:
    """MC ratio E exp(lam S_{F^T} + sum lam_r S_{f^r}) / Gaussian value.

    The Gaussian value is exp(lam^2 log T + (log T/m) sum lam_r^2), the moment
    generating function of independent centred Gaussians with variances
    2 log T and 2 log T/m.  ``bands`` lists (l, lam_l) pairs for bands at ``d``.
    """
    if abs(lam) > 2 or any(abs(v) > 2 for _, v in bands):
        raise DomainError("|lambda| <= 2 (Monte Carlo reliability cap)")
    sp = bs.spec
    S = sums[np.asarray(ok, bool)]
    expo = lam * S[:, 0]
    quad = lam**2 * math.log(sp.T)
    for l, v in bands:
        expo = expo + v * S[:, bs.column(d, l)]
        quad += math.log(sp.T) / sp.m * v**2
    if lam == 0 and not bands:
        return {"ratio": 1.0, "ess": float(len(S)), "flagged": False}
    e = np.exp(expo - expo.max())
    ess = float(e.sum() ** 2 / np.sum(e**2))
    mean = float(np.mean(e)) * math.exp(expo.max())
    return {"ratio": mean * math.exp(-quad), "ess": ess, "flagged": ess < 100}


def paley_zygmund_bound(first: float, second: float, gamma: float) -> float:
    """(1 - gamma)^2 first^2 / second, a lower bound for P(Z > gamma E Z)."""
    if not (0 <= gamma < 1):
        raise DomainError("gamma must lie in [0, 1)")
    if first <= 0 or second < first**2 * (1 - 1e-12):
        raise DomainError("need second >= first^2 > 0")
    return (1 - gamma) ** 2 * first**2 / second


# ---------------------------------------------------------------- number tails

@dataclass(frozen=True)
class TailBound:
    """Exponent alpha in P(#_I >= k) <= exp(-alpha k^2) and the base C0."""
    alpha: float
    C0: float
    interval_length: float

    def __post_init__(self):
        if not self.alpha > 0:
            raise DomainError("alpha must be positive")

    def small_interval_curve(self, k) -> np.ndarray | None:
        """((1 + 2 C0)|I|)^{k(k+1)/2}, only for |I| < 1/(1 + 2 C0)."""
        base = (1 + 2 * self.C0) * self.interval_length
        if base >= 1:
            return None
        k = np.asarray(k, float)
        return base ** (k * (k + 1) / 2)


def exp_square_bound(gamma: float, alpha: float) -> float:
    """exp(gamma / ((1 - e^{gamma - alpha})(1 - e^{-alpha}))) for gamma < alpha."""
    if not gamma < alpha:
        raise DomainError("need gamma < alpha")
    return math.exp(gamma / ((1 - math.exp(gamma - alpha)) * (1 - math.exp(-alpha))))


def tail_counts(bank: np.ndarray, interval: tuple, kmax: int = 8, C0: float = math.pi,
                min_samples: int = 1000) -> dict:
    """Empirical P(#_I >= k), fitted exponents and bound curves.

    ``alpha_admissible`` is the largest alpha with P(#_I = k) <= exp(-alpha k^2)
    for every k >= 1 on the empirical law, so the exponential-square bound
    applies to that law; ``alpha_ls`` is a least-squares fit of
    -log P(#_I >= k) = alpha k^2 over observed k.
    """
    if len(bank) < min_samples:
        raise DomainError(f"need at least {min_samples} samples")
    a, b = interval
    counts = np.sum((bank >= a) & (bank < b), axis=1)
    ks = np.arange(kmax + 1)
    ge = np.array([np.mean(counts >= k) for k in ks])
    eq = np.array([np.mean(counts == k) for k in ks])
    nz = [k for k in range(1, kmax + 1) if eq[k] > 0]
    alpha_adm = min((-math.log(eq[k]) / k**2 for k in nz), default=math.inf)
    if counts.max() > kmax:
        extra = np.bincount(counts)[kmax + 1:] / len(counts)
        for k, p in enumerate(extra, start=kmax + 1):
            if p > 0:
                alpha_adm = min(alpha_adm, -math.log(p) / k**2)
    obs = [k for k in range(1, kmax + 1) if 0 < ge[k] < 1]
    if obs:
        kk = np.array(obs, float)
        alpha_ls = float(np.sum(kk**2 * -np.log(ge[obs])) / np.sum(kk**4))
    else:
        alpha_ls = math.nan
    L = b - a
    base = (1 + 2 * C0) * L
    curve = base ** (ks * (ks + 1) / 2) if base < 1 else None
    out = {"k": ks.tolist(), "p_ge": ge.tolist(), "p_eq": eq.tolist(),
           "alpha_admissible": float(alpha_adm), "alpha_ls": alpha_ls,
           "small_interval_curve": None if curve is None else curve.tolist(),
           "mean": float(counts.mean())}
    if math.isfinite(alpha_adm) and alpha_adm > 0:
        gamma = alpha_adm / 2
        out["exp_square"] = {"gamma": gamma, "empirical": float(np.mean(np.exp(gamma * counts**2))),
                             "bound": exp_square_bound(gamma, alpha_adm)}
    return out


def superexponential(p_ge, kmax: int = 5) -> bool:
    """-log P(# >= k) has nondecreasing increments and P decreases, k = 1..kmax."""
    p = np.asarray(p_ge[1:kmax + 1], float)
    if np.any(np.diff(p) > 0):
        return False
    with np.errstate(divide="ignore"):
        r = -np.log(p)
    r = r[np.isfinite(r)]
    return bool(np.all(np.diff(np.diff(r)) >= -1e-12)) if len(r) >= 3 else True


def write_rows_csv(rows, path) -> None:
    """CSV with one row per (seed, d, in_Vd, in_W)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["seed", "d", "in_Vd", "in_W"])
        w.writerows(rows)


def band_seminorm_constant(T: float, m: int, A: float = 2.0, d_points: int = 5) -> dict:
    """Fitted C with ||f^{d,A,l}||^2_{H_1/2} <= C * 2 log T / m over d in [T, 2T], l < m.

    Returns C together with the ratios seminorm / (2 log T / m) per (d, l).
    """
    if m < 3:
        raise DomainError(f"m must be >= 3, got {m}")
    ref = 2 * math.log(T) / m
    rows = []
    for d in np.linspace(T, 2 * T, d_points):
        for l in range(1, m):
            v = sc.sobolev_seminorm(sc.Band(float(d), A, float(T), m, l), 0.5)
            rows.append({"d": float(d), "l": l, "seminorm": v, "ratio": v / ref})
    return {"C": max(r["ratio"] for r in rows), "reference": ref, "rows": rows}
