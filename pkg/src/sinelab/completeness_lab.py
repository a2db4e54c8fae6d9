"""Removed-particle L2 trends, Gram codimension and growth of shifted products.

All products are truncated at the configuration window |x| < L.  By default
the missing part is replaced by its mean under unit density, i.e. the log of
the product over |x| > L is replaced by int_{|x|>L} log|...| dx.  For the
integer lattice this turns the truncated product into sinc up to O(t^4/L^3).
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .functionals import gx_many
from .sampler import Configuration
from .sine_kernel import kernel_matrix
from .spectral_core import DomainError

GROWING_SLOPE = 0.05
PLATEAU_SLOPE = 0.01
RANK_TOLS = (1e-4, 1e-6, 1e-8)


def _xs(X) -> tuple[np.ndarray, float]:
    if isinstance(X, Configuration):
        return X.particles, float(X.L)
    x = np.asarray(X, float)
    return x, float(np.max(np.abs(x))) + 0.5


def tail_log_mean(t, L: float, A: float = 0.0):
    """int_{|x|>L} log|(x - t)/(x + iA)| dx for real |t| < L.

    This is the mean of the log-modulus of the missing factors under unit
    density; for A = 0 it is the log of the lattice tail product up to
    O(t^4/L^3).
    """
    t = np.asarray(t, float)
    if np.any(np.abs(t) >= L):
        raise DomainError("tail completion needs |t| < L")
    val = -(L * np.log1p(-(t / L) ** 2) + t * np.log((L + t) / (L - t)))
    if A:
        val = val - (math.pi * A - L * math.log1p((A / L) ** 2) - 2 * A * math.atan(L / A))
    return val


def log_abs_g(X, t, removed=(), A: float = 0.0, cutoff: float | None = None,
              complete_tail: bool = True):
    """log|G_{X+iA}(t+iA)| with removed particles, truncated at ``cutoff``.

    ``A = 0`` gives log|G_{X minus removed}(t)|.
    """
    x, L = _xs(X)
    c = L if cutoff is None else float(cutoff)
    t = np.asarray(t, float)
    shift = 1j * A
    if A:
        # log|1 - (t+iA)/(x+iA)| = log|x - t| - log|x + iA|
        xs = x[np.abs(x) < c]
        for p in removed:
            hit = np.flatnonzero(np.abs(xs - p) < 1e-12)
            if hit.size == 0:
                raise DomainError(f"removed particle {p} is not in the configuration")
            xs = np.delete(xs, hit[0])
        out = np.empty(t.shape, float)
        ft, fo = t.ravel(), out.ravel()
        for k in range(0, ft.size, 2048):
            tt = ft[k:k + 2048, None]
            with np.errstate(divide="ignore"):
                fo[k:k + 2048] = np.sum(np.log(np.abs(xs - tt)) - 0.5 * np.log(xs**2 + A * A),
                                        axis=1)
        out = fo.reshape(t.shape)
    else:
        out = gx_many(X, t, removed, cutoff=c, shift=shift)
    if complete_tail:
        out = out + tail_log_mean(t, c, A)
    return out


def _H(u, A):
    # antiderivative of log(u^2 + A^2)
    return u * np.log(u * u + A * A) - 2 * u + 2 * A * np.arctan(u / A)


def smoothed_log_abs(X, t, A: float, cutoff: float | None = None, complete_tail: bool = True):
    """log|G_{X+iA}(t)| for real t: sum of 0.5 log(((x-t)^2 + A^2)/(x^2 + A^2)).

    Zero-free on the real line; its mean under unit density is 0, and the
    tail completion is 0.5 (2H(L) - H(L-t) - H(L+t)) with H the
    antiderivative of log(u^2 + A^2).
    """
    if A <= 0:
        raise DomainError("smoothed form needs A > 0")
    x, L = _xs(X)
    c = L if cutoff is None else float(cutoff)
    xs = x[np.abs(x) < c]
    t = np.asarray(t, float)
    ft = t.ravel()
    out = np.empty(ft.shape, float)
    den = np.log(xs**2 + A * A)
    for k in range(0, ft.size, 2048):
        tt = ft[k:k + 2048, None]
        out[k:k + 2048] = 0.5 * np.sum(np.log((xs - tt) ** 2 + A * A) - den, axis=1)
    out = out.reshape(t.shape)
    if complete_tail:
        out = out + 0.5 * (2 * _H(c, A) - _H(c - t, A) - _H(c + t, A))
    return out


# ---------------------------------------------------------------- L2 trends

@dataclass
class TrendResult:
    """Partial integrals of a removed-particle product over [-R, R].

    Attributes
    ----------
    R_grid, partial_integrals : list of float
    verdict : str
        'growing', 'plateauing' or 'indeterminate'.
    slope : float
        Least-squares slope of log I against log R over the last quartile.
    window : float
    max_cutoff_shift : float
        Largest change of log|G| on the grid between cutoffs 3L/4 and L.
    notes : list of str
    """
    R_grid: list
    partial_integrals: list
    verdict: str
    slope: float
    window: float
    max_cutoff_shift: float
    removed: tuple = ()
    weight_power: int = 1
    notes: list = field(default_factory=list)

    def to_json(self) -> dict:
        return asdict(self)


def last_quartile_slope(R, I) -> float:
    R = np.asarray(R, float)
    I = np.asarray(I, float)
    k = max(2, int(math.ceil(len(R) / 4)))
    return float(np.polyfit(np.log(R[-k:]), np.log(I[-k:]), 1)[0])


def verdict_from_slope(slope: float) -> str:
    if not np.isfinite(slope):
        return "indeterminate"
    if slope > GROWING_SLOPE:
        return "growing"
    if slope < PLATEAU_SLOPE:
        return "plateauing"
    return "indeterminate"


def nearest_particles(X, k: int, center: float = 0.0) -> tuple:
    """The k particles closest to ``center`` (the default removal choice)."""
    x, _ = _xs(X)
    idx = np.argsort(np.abs(x - center), kind="stable")[:k]
    return tuple(float(v) for v in np.sort(x[idx]))


def l2_trend(X, removed=(), weight_power: int = 1, R_max: float | None = None,
             n_R: int = 32, panel: float = 0.25, order: int = 8,
             conv_tol: float = 1.5, complete_tail: bool = True) -> TrendResult:
    """Partial integrals of |G_{X minus R}(t)|^2 (1+t^2)^{|R| - p} over [-R, R].

    The weight compensates the |R| removed linear factors, so (R={p}, p=1)
    tracks |G_X|^2/(1+t^2) and (R={p,q}, p=2) tracks |G_X|^2/(1+t^2)^2 while
    the integrand stays an entire function times a rational weight.

    Parameters
    ----------
    removed : tuple of float
        0, 1 or 2 particles of X.
    weight_power : {1, 2}
    R_max : float, optional
        Defaults to window/4.  Larger values are refused (window-dominated).
    conv_tol : float
        A change of log|G| by more than this between cutoffs 3L/4 and L at
        any |t| <= R_max makes the verdict indeterminate.
    """
    if weight_power not in (1, 2):
        raise DomainError("weight_power must be 1 or 2")
    if len(removed) > 2:
        raise DomainError("at most two particles may be removed")
    _, L = _xs(X)
    notes = []
    if R_max is None:
        R_max = L / 4
    if R_max > L / 4 + 1e-12:
        raise DomainError(f"R_max={R_max} exceeds window/4={L / 4}; integrand is window-dominated")
    n_pan = int(round(R_max / panel))
    if n_pan < 8:
        raise DomainError("R_max too small for a trend")
    g, w = np.polynomial.legendre.leggauss(order)
    edges = np.arange(n_pan + 1) * (R_max / n_pan)
    h = edges[1] - edges[0]
    tp = (edges[:-1, None] + h * (g[None, :] + 1) / 2).ravel()
    wt = np.tile(h * w / 2, n_pan)
    t = np.concatenate([tp, -tp])
    lg = log_abs_g(X, t, removed, cutoff=L, complete_tail=complete_tail)
    e = len(removed) - weight_power
    vals = np.exp(2 * lg) * (1 + t * t) ** e
    cell = (vals[:tp.size] * wt + vals[tp.size:] * wt).reshape(n_pan, order).sum(axis=1)
    cum = np.cumsum(cell)
    step = max(1, n_pan // n_R)
    pick = np.arange(step - 1, n_pan, step)
    R_grid = edges[pick + 1]
    I = cum[pick]

    probe = np.linspace(-R_max, R_max, 65)
    a = log_abs_g(X, probe, removed, cutoff=L, complete_tail=complete_tail)
    b = log_abs_g(X, probe, removed, cutoff=0.75 * L, complete_tail=complete_tail)
    shift = float(np.max(np.abs(a - b)))
    slope = last_quartile_slope(R_grid, I) if np.all(I > 0) else float("nan")
    verdict = verdict_from_slope(slope)
    if shift > conv_tol:
        notes.append(f"cutoff shift {shift:.3g} > {conv_tol}")
        verdict = "indeterminate"
    return TrendResult([float(r) for r in R_grid], [float(v) for v in I], verdict, slope,
                       L, shift, tuple(removed), weight_power, notes)


def removal_consistency(single: TrendResult, double: TrendResult) -> bool:
    """Data-level implication: single-removal growing => double-removal growing (power 1).

    Returns False for a counterexample, which callers flag for review.
    """
    if single.weight_power != 1 or double.weight_power != 1:
        raise DomainError("removal consistency compares power-1 trends")
    return not (single.verdict == "growing" and double.verdict != "growing")


def lattice(W: int, remove=()) -> Configuration:
    """Integer lattice on [-W, W] minus ``remove``, as a Configuration of half-width W+0.5."""
    k = np.arange(-W, W + 1, dtype=float)
    k = k[~np.isin(k, np.asarray(remove, float))]
    return Configuration(k, W + 0.5)


# ---------------------------------------------------------------- codimension

@dataclass
class CodimResult:
    """Numerical codimension of exterior reproducing kernels in a PW frame.

    Attributes
    ----------
    codim : int or None
        None when indeterminate.
    frame_dim : int
    exterior_count, interior_count : int
    sweep : dict
        codim per rank tolerance.
    singular_values : list of float
        Relative singular values of the projected exterior family (ascending,
        the smallest 8).
    interior_residuals : list of float
        Norms of the interior kernels after projection onto the exterior span,
        within the frame (ascending).
    condition : float
        Condition number of the exterior Gram S(x_i, x_j).
    notes : list of str
    """
    codim: int | None
    frame_dim: int
    exterior_count: int
    interior_count: int
    sweep: dict
    singular_values: list
    interior_residuals: list
    condition: float
    notes: list = field(default_factory=list)

    def to_json(self) -> dict:
        return asdict(self)


def _frame(W: float, spacing: float, rank_tol: float):
    """Orthonormal coordinates of the frame span.

    Returns nodes y and a map Q such that the coordinates of S(., x) in an
    orthonormal basis of span{S(., y)} are Q.T @ S(y, x).  For unit spacing
    the lattice sincs are already orthonormal and Q is the identity.
    """
    n = int(math.floor(W / spacing + 1e-9))
    y = spacing * np.arange(-n, n + 1)
    if abs(spacing - 1.0) < 1e-12:
        return y, None
    G = kernel_matrix(y)
    lam, V = np.linalg.eigh(G)
    keep = lam > rank_tol * lam[-1]
    return y, V[:, keep] / np.sqrt(lam[keep])


def _coords(x, y, Q):
    A = kernel_matrix(y, x)
    return A if Q is None else Q.T @ A


def codim_gram(X, I: tuple, exterior_window: float | None = None, rank_tol: float = 1e-6,
               spacing: float = 1.0, sweep=RANK_TOLS) -> CodimResult:
    """Codimension of span{S(., x): x in X, |x| <= W, x not in I} in the frame.

    The frame is span{S(., y): y in spacing*Z, |y| <= W}.  The exterior
    kernels are projected onto the frame and the codimension is the frame
    dimension minus the numerical rank (singular values above rank_tol times
    the largest).

    Parameters
    ----------
    I : (a, b)
        Open interval, strictly inside the window.
    exterior_window : float, optional
        W; defaults to the configuration half-width rounded down.
    spacing : float
        Frame spacing.  Unit spacing gives the orthonormal integer-sinc basis;
        finer spacings are orthonormalised with the same rank tolerance, which
        makes the frame dimension itself tolerance dependent.
    """
    x, L = _xs(X)
    W = math.floor(L) if exterior_window is None else float(exterior_window)
    a, b = map(float, I)
    if not (-W < a < b < W):
        raise DomainError("I must lie strictly inside the window")
    notes = []
    inside_w = np.abs(x) <= W
    interior = x[(x > a) & (x < b)]
    ext = x[inside_w & ~((x > a) & (x < b))]
    y, Q = _frame(W, spacing, rank_tol)
    dim = y.size if Q is None else Q.shape[1]
    E = _coords(ext, y, Q)
    s = np.linalg.svd(E, compute_uv=False) if ext.size else np.zeros(0)
    smax = s[0] if s.size else 1.0
    cond = float(np.linalg.cond(kernel_matrix(ext))) if ext.size else 1.0

    def count(tol):
        return int(dim - np.sum(s > tol * smax))

    res = {f"{t:g}": count(t) for t in sweep}
    codim = count(rank_tol)
    if cond > 1e14:
        notes.append(f"ill-conditioned exterior Gram (condition {cond:.3g})")
        codim = None

    # interior residuals after projection onto the exterior span
    resid = []
    if interior.size and ext.size:
        U, sv, _ = np.linalg.svd(E, full_matrices=False)
        U = U[:, sv > rank_tol * smax]
        C = _coords(interior, y, Q)
        R = C - U @ (U.T @ C)
        resid = sorted(float(v) for v in np.linalg.norm(R, axis=0))
    return CodimResult(codim, int(dim), int(ext.size), int(interior.size), res,
                       [float(v) for v in np.sort(s / smax)[:8]], resid, cond, notes)


def interval_with_count(X, k: int, center: float = 0.0) -> tuple:
    """Open interval around ``center`` holding exactly k consecutive particles.

    The endpoints are midpoints to the neighbouring particles.
    """
    x, _ = _xs(X)
    j = int(np.argmin(np.abs(x - center)))
    lo = max(1, min(j - (k - 1) // 2, x.size - k - 1))
    a = 0.5 * (x[lo - 1] + x[lo])
    b = 0.5 * (x[lo + k - 1] + x[lo + k])
    return float(a), float(b)


def codim_window_trend(X, I, windows) -> list[dict]:
    """Codim and smallest interior residual along increasing exterior windows."""
    out = []
    for W in windows:
        r = codim_gram(X, I, exterior_window=W)
        out.append({"W": float(W), "codim": r.codim, "interior_count": r.interior_count,
                    "min_residual": r.interior_residuals[0] if r.interior_residuals else None})
    return out


# ---------------------------------------------------------------- growth

@dataclass
class GrowthResult:
    """Growth exponents per T with the asymptotic benchmark."""
    T_grid: list
    exponents: list
    target: float
    increasing: bool
    notes: list = field(default_factory=list)

    def to_json(self) -> dict:
        return asdict(self)


def _check_T(X, T_grid):
    _, L = _xs(X)
    if max(T_grid) > L:
        raise DomainError(f"max T={max(T_grid)} exceeds the window {L}")
    return L


def _growth_log(X, t, A, form, complete_tail):
    if form == "literal":
        return log_abs_g(X, t, (), A=A, complete_tail=complete_tail)
    if form == "smoothed":
        return smoothed_log_abs(X, t, A, complete_tail=complete_tail)
    raise DomainError(f"unknown form {form!r}")


def max_growth(X, A: float, T_grid, pts_per_unit: int = 16,
               complete_tail: bool = True, form: str = "literal") -> GrowthResult:
    """max_{|t|<T} log|G_{X+iA}(t+iA)| / log T for each T.

    ``form="literal"`` evaluates G_{X+iA} at t+iA, which equals G_X(t) times
    the t-independent factor prod x/(x+iA) (mean log about -pi A).
    ``form="smoothed"`` evaluates G_{X+iA}(t) on the real line instead.
    """
    L = _check_T(X, T_grid)
    Tm = max(T_grid)
    if complete_tail and Tm >= L:
        Tm = L * (1 - 1e-9)
    t = np.linspace(-Tm, Tm, int(2 * Tm * pts_per_unit) + 1)
    lg = _growth_log(X, t, A, form, complete_tail)
    ex = []
    for T in T_grid:
        ex.append(float(np.max(lg[np.abs(t) <= T]) / math.log(T)))
    return GrowthResult(list(map(float, T_grid)), ex, math.sqrt(2),
                        bool(np.all(np.diff(ex) >= 0)))


def lp_target(p: float) -> float:
    """Asymptotic L_p growth exponent: 1 + p^2/2 below sqrt 2, sqrt(2) p above."""
    return 1 + p * p / 2 if p < math.sqrt(2) else math.sqrt(2) * p


def lp_growth(X, A: float, p: float, T_grid, pts_per_unit: int = 16,
              complete_tail: bool = True, form: str = "literal") -> GrowthResult:
    """log int_0^T |G_{X+iA}(t+iA)|^p dt / log T for each T (p = 0 allowed)."""
    if p < 0:
        raise DomainError("p must be >= 0")
    L = _check_T(X, T_grid)
    Tm = min(max(T_grid), L * (1 - 1e-9))
    n = int(Tm * pts_per_unit)
    edges = np.linspace(0, Tm, n + 1)
    g, w = np.polynomial.legendre.leggauss(4)
    h = edges[1] - edges[0]
    t = (edges[:-1, None] + h * (g + 1) / 2).ravel()
    wt = np.tile(h * w / 2, n)
    if p == 0:
        vals = np.ones_like(t)
    else:
        vals = np.exp(p * _growth_log(X, t, A, form, complete_tail))
    cum = np.cumsum(vals * wt)
    ex = []
    for T in T_grid:
        k = int(np.searchsorted(t, min(T, Tm), side="right"))
        ex.append(float(math.log(cum[k - 1]) / math.log(T)))
    return GrowthResult(list(map(float, T_grid)), ex, lp_target(p),
                        bool(np.all(np.diff(ex) >= 0)))


def reflect(X) -> Configuration:
    x, L = _xs(X)
    return Configuration(-x[::-1], L)


# ---------------------------------------------------------------- output

def write_trend_csv(rows, path) -> None:
    """rows: iterable of (seed, TrendResult)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["seed", "R", "integral", "verdict"])
        for seed, tr in rows:
            for R, v in zip(tr.R_grid, tr.partial_integrals):
                w.writerow([seed, repr(R), repr(v), tr.verdict])


def write_json(obj, path) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=float)
