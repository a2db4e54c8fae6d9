"""Additive and multiplicative functionals over particles and pairs.

All sums and products run over particles inside a symmetric cutoff |x| < R.
Partial values for each cutoff of a :class:`VPProduct` are returned so that
convergence can be inspected; non-convergence is reported, never raised.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import special

from . import spectral_core as sc
from .sampler import Configuration
from .sine_kernel import eval_kernel
from .spectral_core import DomainError


@dataclass(frozen=True)
class VPProduct:
    """Symmetric cutoff family for principal-value sums and products.

    Parameters
    ----------
    cutoff_mode : {"paper_n4", "window"}
    cutoff_sequence : tuple of float
        Strictly increasing bounds R_1 < R_2 < ...
    convergence_tol : float
        Relative change between the last two partials accepted as converged.
    """
    cutoff_mode: str = "paper_n4"
    cutoff_sequence: tuple = (1.0, 16.0, 81.0)
    convergence_tol: float = 1e-2

    def __post_init__(self):
        b = self.cutoff_sequence
        if len(b) == 0 or any(q <= p for p, q in zip(b[:-1], b[1:])):
            raise DomainError("cutoff bounds must be non-empty and strictly increasing")
        if self.cutoff_mode == "paper_n4":
            want = tuple(float(k**4) for k in range(1, len(b) + 1))
            if tuple(float(x) for x in b) != want:
                raise DomainError("paper_n4 bounds must be 1, 16, 81, ... (n^4)")
        elif self.cutoff_mode != "window":
            raise DomainError(f"unknown cutoff mode {self.cutoff_mode!r}")

    @classmethod
    def paper_n4(cls, L: float, tol: float = 1e-2) -> "VPProduct":
        """Bounds n^4 for n = 1..floor(L^{1/4})."""
        kmax = max(1, int(math.floor(L ** 0.25 + 1e-12)))
        return cls("paper_n4", tuple(float(k**4) for k in range(1, kmax + 1)), tol)

    @classmethod
    def window(cls, L: float, steps: int = 4, tol: float = 1e-2) -> "VPProduct":
        """Bounds L/2^{steps-1}, ..., L/2, L (plus a hair to include the edge)."""
        b = tuple(float(L) / 2**k * (1 + 1e-12) for k in range(steps - 1, -1, -1))
        return cls("window", b, tol)

    @property
    def final(self) -> float:
        return float(self.cutoff_sequence[-1])


@dataclass
class FunctionalResult:
    """Value at the final cutoff with partials per cutoff."""
    value: complex | float
    partials: list
    cutoffs: list
    converged: bool
    notes: list = field(default_factory=list)


def _converged(partials, tol, log_domain=False) -> bool:
    if len(partials) < 2:
        return True
    a, b = partials[-2], partials[-1]
    if log_domain:
        return abs(b - a) <= tol
    scale = max(abs(b), 1.0)
    return abs(b - a) <= tol * scale


def _particles(X) -> np.ndarray:
    return X.particles if isinstance(X, Configuration) else np.asarray(X, float)


def _evaluate(f, x):
    if isinstance(f, sc.SpectralFunction):
        return sc.time_eval(f, x) if len(x) else np.zeros(0)
    return np.asarray(f(x), dtype=complex if np.iscomplexobj(f(x[:1])) else float) \
        if len(x) else np.zeros(0)


def additive(f, X, vp: VPProduct | None = None) -> FunctionalResult:
    """S_f(X) = sum of f over particles with |x| < R for each cutoff R.

    Parameters
    ----------
    f : SpectralFunction or callable
    X : Configuration or array_like
    vp : VPProduct, optional
        Defaults to the n^4 family for the configuration window.
    """
    x = _particles(X)
    if vp is None:
        vp = VPProduct.paper_n4(X.L if isinstance(X, Configuration) else np.max(np.abs(x)) + 1)
    inside = np.abs(x) < vp.final
    vals = np.zeros(x.shape, dtype=complex)
    if np.any(inside):
        vals[inside] = _evaluate(f, x[inside])
    partials = []
    for R in vp.cutoff_sequence:
        s = vals[np.abs(x) < R].sum()
        partials.append(float(s.real) if not np.iscomplexobj(s) or s.imag == 0 else complex(s))
    return FunctionalResult(partials[-1], partials, list(vp.cutoff_sequence),
                            _converged(partials, vp.convergence_tol))


def multiplicative(g, X, vp: VPProduct | None = None, real_positive: bool = True):
    """Psi_g(X) = product of g over particles, accumulated in log domain.

    A zero factor gives 0 and an infinite factor gives inf.  With
    ``real_positive`` a negative factor raises :class:`DomainError`;
    otherwise complex factors are multiplied with principal logs.
    """
    x = _particles(X)
    if vp is None:
        vp = VPProduct.paper_n4(X.L if isinstance(X, Configuration) else np.max(np.abs(x)) + 1)
    inside = np.abs(x) < vp.final
    vals = np.ones(x.shape, dtype=complex)
    if np.any(inside):
        vals[inside] = _evaluate(g, x[inside])
    if real_positive:
        if np.any(np.abs(vals.imag) > 0) or np.any(vals.real < 0):
            raise DomainError("negative or complex factor in a real-positive product")
        vals = vals.real
    partials = []
    for R in vp.cutoff_sequence:
        v = vals[np.abs(x) < R]
        if np.any(v == 0):
            partials.append(0.0)
            continue
        if np.any(np.isinf(v)):
            partials.append(math.inf)
            continue
        lg = np.sum(np.log(v.astype(complex) if not real_positive else v))
        partials.append(float(np.exp(lg)) if real_positive else complex(np.exp(lg)))
    return FunctionalResult(partials[-1], partials, list(vp.cutoff_sequence),
                            _converged(partials, vp.convergence_tol))


# ---------------------------------------------------------------- pairs

@dataclass(frozen=True)
class PairFunction:
    """Symmetric function of two variables vanishing on the diagonal.

    ``divided_difference`` wraps omega into omega[2](x, y) = (omega(x) -
    omega(y))/(x - y); ``grid_sampled`` wraps an arbitrary symmetric callable.
    """
    kind: str
    omega: Callable | None = None
    func: Callable | None = None

    @classmethod
    def divided_difference(cls, omega) -> "PairFunction":
        return cls("divided_difference", omega=omega)

    @classmethod
    def from_callable(cls, func) -> "PairFunction":
        return cls("grid_sampled", func=func)

    def __call__(self, x, y):
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        if self.kind == "divided_difference":
            wx, wy = _omega_value(self.omega, x), _omega_value(self.omega, y)
            dx = x - y
            with np.errstate(divide="ignore", invalid="ignore"):
                q = np.where(dx == 0, 0.0, (wx - wy) / np.where(dx == 0, 1.0, dx))
            return q
        q = np.asarray(self.func(x, y), float)
        return np.where(x == y, 0.0, q)


def _omega_value(omega, x):
    if hasattr(omega, "value"):
        return omega.value(x)
    if isinstance(omega, sc.SpectralFunction):
        return sc.time_eval(omega, np.atleast_1d(x)).reshape(np.shape(x))
    return omega(x)


def _omega_deriv(omega, x):
    if hasattr(omega, "deriv"):
        return omega.deriv(x)
    if isinstance(omega, sc.SpectralFunction):
        return sc.time_derivative(omega, np.atleast_1d(x)).reshape(np.shape(x))
    h = 1e-5
    return (omega(x + h) - omega(x - h)) / (2 * h)


def _pair_values(q, x):
    i, j = np.triu_indices(len(x), 1)
    return i, j, q(x[i], x[j])


def pair_additive(q, X, vp: VPProduct | None = None) -> FunctionalResult:
    """S_q(X) = sum over unordered pairs inside each cutoff."""
    x = _particles(X)
    if vp is None:
        vp = VPProduct.paper_n4(X.L if isinstance(X, Configuration) else np.max(np.abs(x)) + 1)
    x = x[np.abs(x) < vp.final]
    i, j, v = _pair_values(q, x)
    partials = []
    for R in vp.cutoff_sequence:
        keep = (np.abs(x[i]) < R) & (np.abs(x[j]) < R)
        partials.append(float(np.sum(v[keep])))
    return FunctionalResult(partials[-1], partials, list(vp.cutoff_sequence),
                            _converged(partials, vp.convergence_tol))


def rho2(q, x_range: float, h_range: float = 64.0, pts_per_unit: int = 8) -> dict:
    """Expected pair sum (1/2) int int q(x, y) (1 - S(x, y)^2) dx dy.

    The integral is taken in the coordinates (x, h = x - y) over
    |x| <= x_range + h_range, |h| <= h_range with composite Gauss-Legendre
    panels; for divided differences of integrable omega each h-slice vanishes
    identically, which is what makes the value a principal-value limit.

    Returns
    -------
    dict
        ``value`` and a crude ``tail_estimate``.
    """
    X = x_range + h_range
    xs, wx = _gl_grid(-X, X, pts_per_unit)
    hs, wh = _gl_grid(-h_range, h_range, pts_per_unit)
    Q = q(xs[None, :], xs[None, :] - hs[:, None])
    slices = Q @ wx
    kern = 1.0 - eval_kernel(hs, 0.0) ** 2
    val = 0.5 * float(np.sum(wh * kern * slices))
    edge = np.abs(slices[[0, -1]]).max() * h_range
    return {"value": val, "tail_estimate": float(edge)}


def _gl_grid(a, b, pts_per_unit, order=16):
    x, w = sc.gauss_legendre(order)
    npan = max(1, int(math.ceil((b - a) * pts_per_unit / order)))
    edges = np.linspace(a, b, npan + 1)
    nodes = (0.5 * (edges[1:] - edges[:-1])[:, None] * x[None, :]
             + 0.5 * (edges[1:] + edges[:-1])[:, None]).ravel()
    weights = (0.5 * (edges[1:] - edges[:-1])[:, None] * w[None, :]).ravel()
    return nodes, weights


def pair_multiplicative(g2, X, vp: VPProduct | None = None, regularized: bool = False,
                        q=None, rho=None) -> FunctionalResult:
    """Product of g2 over unordered pairs.

    Parameters
    ----------
    g2 : callable
        Pair multiplier; ignored in regularized mode where g2 = 1 + q.
    regularized : bool
        Use exp(rho2(q) + Sbar_q) * prod (1+q) e^{-q}, with Sbar_q = S_q - rho2(q).
    q : PairFunction
        Required in regularized mode; sup |q| <= 1.
    rho : float, optional
        Precomputed rho2(q); computed by quadrature when omitted (requires
        ``q`` supported near the cutoff window).
    """
    x = _particles(X)
    if vp is None:
        vp = VPProduct.paper_n4(X.L if isinstance(X, Configuration) else np.max(np.abs(x)) + 1)
    x = x[np.abs(x) < vp.final]
    i, j = np.triu_indices(len(x), 1)
    partials = []
    if regularized:
        if q is None:
            raise DomainError("regularized mode needs the pair function q")
        qv = q(x[i], x[j])
        if np.any(np.abs(qv) > 1):
            raise DomainError("regularized pair product requires sup|q| <= 1")
        if rho is None:
            rho = rho2(q, vp.final)["value"]
        for R in vp.cutoff_sequence:
            keep = (np.abs(x[i]) < R) & (np.abs(x[j]) < R)
            S = np.sum(qv[keep])
            sbar = S - rho
            rest = np.sum(np.log1p(qv[keep]) - qv[keep])
            partials.append(float(np.exp(rho + sbar + rest)))
    else:
        gv = np.asarray(g2(x[i], x[j]))
        for R in vp.cutoff_sequence:
            keep = (np.abs(x[i]) < R) & (np.abs(x[j]) < R)
            v = gv[keep]
            if np.any(v == 0):
                partials.append(0.0)
            elif np.iscomplexobj(v) or np.any(v < 0):
                partials.append(complex(np.exp(np.sum(np.log(v.astype(complex))))))
            else:
                partials.append(float(np.exp(np.sum(np.log(v)))))
    return FunctionalResult(partials[-1], partials, list(vp.cutoff_sequence),
                            _converged(partials, vp.convergence_tol))


# ---------------------------------------------------------------- entire functions

@dataclass
class GXResult:
    """G_X(t) with log-modulus and convergence diagnostics."""
    value: complex
    log_abs: float
    partials: list
    converged: bool
    notes: list = field(default_factory=list)


def _prepare(X, removed, shift_zero=True):
    x = _particles(X).astype(float).copy()
    notes = []
    if shift_zero and np.any(np.abs(x) < 1e-9):
        x[np.abs(x) < 1e-9] += 1e-6
        notes.append("particle at 0 shifted by 1e-6")
    keep = np.ones(x.shape, bool)
    for p in removed or ():
        hit = np.flatnonzero(np.abs(_particles(X) - p) < 1e-12)
        if hit.size == 0:
            raise DomainError(f"removed particle {p} is not in the configuration")
        keep[hit[0]] = False
    return x[keep], notes


def gx(X, t, removed=(), vp: VPProduct | None = None, shift: complex = 0.0) -> GXResult:
    """G_X(t) = v.p. product of (1 - t/(x + shift)) over X minus ``removed``.

    Parameters
    ----------
    X : Configuration or array_like
    t : float or complex
    removed : iterable of float
        Particles of X to leave out.
    shift : complex
        Particles are moved to x + shift (e.g. ``1j*A``) before the product.

    Notes
    -----
    The product is accumulated as a sum of principal logarithms; exp of the
    sum gives the product exactly whatever the branches.  If t coincides with
    a remaining particle the value is exactly 0 and ``log_abs`` is -inf.
    """
    x, notes = _prepare(X, removed)
    if vp is None:
        vp = VPProduct.paper_n4(X.L if isinstance(X, Configuration) else np.max(np.abs(x)) + 1)
    xs = x + shift
    partials = []
    logs = None
    zero = np.any(xs == t)
    with np.errstate(divide="ignore"):
        terms = np.log((1 - t / xs).astype(complex)) if not zero else None
    for R in vp.cutoff_sequence:
        inside = np.abs(x) < R
        if zero and np.any((xs == t) & inside):
            partials.append(-np.inf + 0j)
            continue
        if zero:
            tt = np.log((1 - t / xs[inside & (xs != t)]).astype(complex))
            partials.append(complex(np.sum(tt)))
        else:
            partials.append(complex(np.sum(terms[inside])))
    logs = partials[-1]
    if np.isneginf(logs.real):
        return GXResult(0j, -np.inf, partials, True, notes)
    conv = _converged([p.real for p in partials], vp.convergence_tol, log_domain=True)
    return GXResult(complex(np.exp(logs)), float(logs.real), partials, conv, notes)


def gx_many(X, t, removed=(), cutoff: float | None = None, shift: complex = 0.0):
    """Vectorised log|G_X| and phase for many t at one cutoff.

    Returns
    -------
    log_abs : ndarray
        log|G_X(t)| (-inf at particles).
    """
    x, _ = _prepare(X, removed)
    if cutoff is not None:
        x = x[np.abs(x) < cutoff]
    xs = x + shift
    t = np.asarray(t)
    out = np.zeros(t.shape, float)
    flat_t = t.ravel()
    res = np.empty(flat_t.shape, float)
    for k in range(0, flat_t.size, 2048):
        tt = flat_t[k:k + 2048]
        with np.errstate(divide="ignore"):
            res[k:k + 2048] = np.sum(np.log(np.abs(1 - tt[:, None] / xs[None, :])), axis=1)
    out = res.reshape(t.shape)
    return out


# ---------------------------------------------------------------- quasi-invariance

@dataclass(frozen=True)
class Bump:
    """Smooth compactly supported displacement eps * b((x - c)/w).

    b(u) = exp(1 - 1/(1 - u^2)) on |u| < 1, so sup b = 1 at u = 0.
    """
    eps: float
    width: float = 1.0
    center: float = 0.0

    def value(self, x):
        u = (np.asarray(x, float) - self.center) / self.width
        out = np.zeros_like(u)
        m = np.abs(u) < 1
        out[m] = np.exp(1 - 1 / (1 - u[m] ** 2))
        return self.eps * out

    def deriv(self, x):
        u = (np.asarray(x, float) - self.center) / self.width
        out = np.zeros_like(u)
        m = np.abs(u) < 1
        um = u[m]
        out[m] = np.exp(1 - 1 / (1 - um**2)) * (-2 * um / (1 - um**2) ** 2)
        return self.eps * out / self.width

    def __call__(self, x):
        return self.value(x)

    def sup_deriv(self) -> float:
        u = np.linspace(-1, 1, 20001)
        return float(np.max(np.abs(self.deriv(self.center + self.width * u))))


def jacobian_xi(omega, X, vp: VPProduct | None = None, period: float | None = None,
                sup_deriv: float | None = None) -> FunctionalResult:
    """Xi(F_omega; X) = prod_pairs (1 + omega[2])^2 * prod (1 + omega').

    Parameters
    ----------
    omega : Bump, SpectralFunction or callable
        Displacement; sup |omega'| < 1 is required.
    period : float, optional
        If given, divided differences use the chord (n/pi) sin(pi d / n) of a
        circle of this length instead of d.  This is the exact Jacobian for
        the rescaled CUE(n) with ``period = n``.

    Notes
    -----
    The pair product is evaluated through the regularised split
    exp(2 (rho2 + Sbar_q)) prod ((1+q) e^{-q})^2; for divided differences
    rho2 vanishes and Sbar_q = S_q, so the split equals the plain product.
    """
    sd = sup_deriv if sup_deriv is not None else (
        omega.sup_deriv() if hasattr(omega, "sup_deriv") else None)
    if sd is not None and sd >= 1:
        raise DomainError(f"jacobian_xi requires sup|omega'| < 1, got {sd:.4g}")
    x = _particles(X)
    if vp is None:
        vp = VPProduct.window(X.L if isinstance(X, Configuration) else np.max(np.abs(x)) + 1)
    x = x[np.abs(x) < vp.final]
    w = _omega_value(omega, x)
    dw = _omega_deriv(omega, x)
    if sd is None and np.any(np.abs(dw) >= 1):
        raise DomainError("jacobian_xi requires sup|omega'| < 1")
    moved = np.flatnonzero(w != 0)
    partials = []
    for R in vp.cutoff_sequence:
        inside = np.abs(x) < R
        lg = float(np.sum(np.log1p(dw[inside])))
        # only pairs with at least one displaced particle contribute
        mv = moved[inside[moved]]
        xi = x[inside]
        wi = w[inside]
        for k in mv:
            dx = x[k] - xi
            dw2 = w[k] - wi
            if period is None:
                num, den = dx + dw2, dx
            else:
                c = period / math.pi
                num, den = c * np.sin((dx + dw2) / c), c * np.sin(dx / c)
            m = dx != 0
            r = np.abs(num[m] / den[m])
            # pairs with both particles displaced are visited twice
            both = (wi[m] != 0)
            lg += 2 * float(np.sum(np.log(r[~both]))) + float(np.sum(np.log(r[both])))
        partials.append(float(np.exp(lg)))
    return FunctionalResult(partials[-1], partials, list(vp.cutoff_sequence),
                            _converged(partials, vp.convergence_tol))


# ---------------------------------------------------------------- variance

def _time_callable(phi):
    if not isinstance(phi, sc.SpectralFunction):
        return phi
    try:
        sc.closed_form_time(phi, np.zeros(1))
        return lambda t: sc.closed_form_time(phi, t)
    except (TypeError, NotImplementedError, ValueError):
        return lambda t: sc.time_eval(phi, t)


def _sine_sq_tail(H: float) -> float:
    """int_H^inf S(h)^2 dh."""
    a = math.pi
    si = special.sici(2 * a * H)[0]
    return (math.sin(a * H) ** 2 / H + a * (math.pi / 2 - si)) / math.pi**2


def variance_predict(phi, support=(-8.0, 8.0), breaks=(), H: float = 64.0,
                     pts_per_unit: int = 16) -> dict:
    """(1/2) int int |phi(t) - phi(s)|^2 S(s, t)^2 ds dt.

    The double integral is taken in (t, h = t - s): for each h the inner
    integral int |phi(t) - phi(t-h)|^2 dt is computed on ``support`` widened
    by |h| with panels broken at ``breaks`` and their shifts; the outer
    h-integral uses panels on [-H, H] plus the analytic tail, in which the
    inner integral equals 2 int phi^2.

    Parameters
    ----------
    phi : callable or SpectralFunction
        Bounded; essentially supported in ``support``.
    """
    f = _time_callable(phi)
    a, b = support
    hs, wh = _gl_grid(-H, H, pts_per_unit)
    # pair h with -h: the inner integral is even in h
    pos = hs > 0
    hs_p, wh_p = hs[pos], wh[pos]
    inner = np.empty(hs_p.shape)
    x0, w0 = sc.gauss_legendre(24)
    for k, h in enumerate(hs_p):
        bp = sorted({a, b + h} | set(breaks) | {c + h for c in breaks})
        bp = [p for p in bp if a <= p <= b + h]
        nodes, weights = [], []
        for p, q in zip(bp[:-1], bp[1:]):
            npan = max(1, int(math.ceil((q - p) * 2)))
            e = np.linspace(p, q, npan + 1)
            nodes.append((0.5 * (e[1:] - e[:-1])[:, None] * x0 + 0.5 * (e[1:] + e[:-1])[:, None]).ravel())
            weights.append((0.5 * (e[1:] - e[:-1])[:, None] * w0).ravel())
        t = np.concatenate(nodes)
        wt = np.concatenate(weights)
        inner[k] = float(np.sum(wt * np.abs(f(t) - f(t - h)) ** 2))
    s2 = eval_kernel(hs_p, 0.0) ** 2
    body = 2 * float(np.sum(wh_p * s2 * inner))
    # inner -> 2 int phi^2 for |h| > H
    xs, ws = _gl_grid(a, b, pts_per_unit * 2)
    bp = sorted({a, b} | set(breaks))
    if len(bp) > 2:
        nodes, weights = [], []
        for p, q in zip(bp[:-1], bp[1:]):
            nn, ww = _gl_grid(p, q, pts_per_unit * 2)
            nodes.append(nn)
            weights.append(ww)
        xs, ws = np.concatenate(nodes), np.concatenate(weights)
    l2 = float(np.sum(ws * np.abs(f(xs)) ** 2))
    tail = 2 * (2 * l2) * _sine_sq_tail(H)
    return {"value": 0.5 * (body + tail), "tail": 0.5 * tail}


def variance_spectral(f) -> float:
    """Spectral form int |fhat|^2 min(|lam|, 2 pi) dlam of the variance (real f)."""
    def w(lam):
        return np.minimum(lam, 2 * math.pi) * np.abs(sc.fourier_eval(f, lam)) ** 2
    br = sorted(set(sc.positive_breaks(f)) | {2 * math.pi})
    val = sc.integrate_transform(f, w, br, 1e-13, width0=0.25)
    return float(2 * val)


# ---------------------------------------------------------------- batch sums

class SpectralSums:
    """Fast S_f(X) for many descriptors over many configurations.

    S_f(X) = sum_x int fhat(lam) e^{i lam x} dlam = 2 Re int_0^inf fhat(lam)
    E_X(lam) dlam with E_X(lam) = sum_x e^{i lam x}.  One shared composite
    Gauss-Legendre grid (broken at every band edge) serves all descriptors,
    so the cost per configuration is one evaluation of E_X on the grid.

    Parameters
    ----------
    xmax : float
        Particles with |x| < xmax enter the sums.
    center : bool
        Subtract the unit-density window mean int_{-xmax}^{xmax} f, i.e.
        replace E_X by E_X - 2 sin(xmax lam)/lam.  For slowly decaying f
        this removes the oscillating deterministic part of a truncated sum.
    osc_per_panel : float
        Phase budget per panel, in turns of (xmax + oscillation of fhat).
    """

    def __init__(self, descriptors, xmax: float, order: int = 32, center: bool = False,
                 osc_per_panel: float = 4.0):
        self.descriptors = list(descriptors)
        br = set()
        osc = 0.0
        for f in self.descriptors:
            br |= set(sc.positive_breaks(f))
            osc = max(osc, sc._oscillation(f))
        br = sorted(br)
        width = min(0.25, 2 * math.pi * osc_per_panel / (xmax + osc + 1))
        self.lam, self.w = sc._panel_nodes(br, width, order)
        F = np.stack([sc.fourier_eval(f, self.lam) for f in self.descriptors])
        self.coef = F * self.w[None, :]
        self.xmax = xmax
        self.center = center

    def _window_mean(self, c):
        lam = self.lam
        with np.errstate(invalid="ignore", divide="ignore"):
            k = np.where(lam > 0, 2 * np.sin(c * lam) / lam, 2 * c)
        return k

    def multi(self, particles, cutoffs) -> np.ndarray:
        """Sums at several cutoffs <= xmax from one exponential evaluation.

        Returns an array (len(cutoffs), n_descriptors).
        """
        x = np.asarray(particles, float)
        x = x[np.abs(x) < self.xmax]
        P = np.exp(1j * np.outer(self.lam, x))
        out = []
        for c in cutoffs:
            if c > self.xmax:
                raise DomainError("cutoff exceeds the grid design xmax")
            E = P[:, np.abs(x) < c].sum(axis=1)
            if self.center:
                E = E - self._window_mean(c)
            out.append(2 * np.real(self.coef @ E))
        return np.stack(out)

    def __call__(self, particles) -> np.ndarray:
        """Vector of S_f for one configuration (particles with |x| < xmax)."""
        return self.multi(particles, (self.xmax,))[0]

    def batch(self, bank: np.ndarray) -> np.ndarray:
        """(n_configs, n_descriptors) array of sums."""
        return np.stack([self(row) for row in bank])
