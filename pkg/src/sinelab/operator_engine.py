"""Nystrom discretisation of continual Toeplitz, Hankel and sine operators.

Convention: with fhat(lam) = (1/2pi) int f(t) e^{-i lam t} dt,

    T(f) psi(s) = int_0^inf fhat(s - t) psi(t) dt,
    H(h) psi(s) = int_0^inf hhat(s + t) psi(t) dt,   H(1) = 0.

Composing half-line compressions gives
T(g1 g2) = T(g1) T(g2) + H(g1) H(g2~), where g~ has transform ghat(-lam).

Determinants are taken of I + W^{1/2} K W^{1/2} with LU (partial pivoting).
The symbols used by the identity checks are

    phi = phi_+ + phi_-,  phi_- = conj(phi_+) (on the real line),
    g = exp(phi),  h = exp(phi_- - phi_+),

so g is real and h is unimodular.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg, stats

from . import spectral_core as sc
from .sine_kernel import kernel_matrix
from .spectral_core import DomainError, Hardy, ScaledTest, Zero

ORDER = 32  # Gauss-Legendre nodes per panel


# ---------------------------------------------------------------- grids

@dataclass(frozen=True)
class OperatorGrid:
    """Quadrature nodes and positive weights on an interval or half-line.

    ``interval`` is (lo, hi) for finite panels and (d, inf) for the half-line
    map u = d - log(1 - tau)/beta with tau on Gauss-Legendre panels in [0, 1).
    """
    interval: tuple
    nodes: np.ndarray
    weights: np.ndarray
    scheme: str
    beta: float | None = None

    @classmethod
    def panels(cls, lo: float, hi: float, n_panels: int, order: int = ORDER) -> "OperatorGrid":
        if hi < lo:
            raise DomainError(f"empty interval ({lo}, {hi})")
        if hi == lo:
            return cls((lo, hi), np.zeros(0), np.zeros(0), "gauss_legendre_panels")
        x, w = sc.gauss_legendre(order)
        e = np.linspace(lo, hi, n_panels + 1)
        h = 0.5 * (e[1:] - e[:-1])
        nodes = (h[:, None] * x + 0.5 * (e[1:] + e[:-1])[:, None]).ravel()
        weights = (h[:, None] * w).ravel()
        return cls((lo, hi), nodes, weights, "gauss_legendre_panels")

    @classmethod
    def halfline(cls, d: float, beta: float, n_panels: int, order: int = ORDER) -> "OperatorGrid":
        """Exp map of [0, 1) panels onto [d, inf); panels grade toward tau = 1."""
        if beta <= 0:
            raise DomainError("half-line map needs beta > 0")
        x, w = sc.gauss_legendre(order)
        # geometric grading: panel edges 1 - 2^{-k} for the last half of the panels
        k = np.arange(n_panels + 1)
        e = 1 - 2.0 ** (-k * 40.0 / n_panels)
        e[0] = 0.0
        h = 0.5 * (e[1:] - e[:-1])
        tau = (h[:, None] * x + 0.5 * (e[1:] + e[:-1])[:, None]).ravel()
        wt = (h[:, None] * w).ravel()
        nodes = d - np.log1p(-tau) / beta
        weights = wt / (beta * (1 - tau))
        return cls((d, math.inf), nodes, weights, "exp_map_halfline", beta)

    @property
    def size(self) -> int:
        return len(self.nodes)

    def refined(self, factor: int = 2) -> "OperatorGrid":
        """Same scheme with ``factor`` times as many panels."""
        n = max(1, self.size // ORDER)
        if self.scheme == "exp_map_halfline":
            return OperatorGrid.halfline(self.interval[0], self.beta, n * factor)
        return OperatorGrid.panels(*self.interval, n * factor)


@dataclass
class DiscretizedOperator:
    """Symmetrised matrix W^{1/2} K W^{1/2} of a kernel on a grid.

    ``identity_part`` marks operators of the form 1 + K (Toeplitz of 1 + f).
    """
    matrix: np.ndarray
    grid: OperatorGrid
    identity_part: bool = False
    symmetrized: bool = True
    warnings: list = field(default_factory=list)

    def dense(self) -> np.ndarray:
        """Full matrix including the identity part."""
        if self.identity_part:
            return np.eye(self.grid.size) + self.matrix
        return self.matrix


def _sym(K, w):
    r = np.sqrt(w)
    return r[:, None] * K * r[None, :]


# ---------------------------------------------------------------- transforms of symbols

def ft_trapezoid(u, x, L: float, dt: float) -> np.ndarray:
    """(1/2pi) int u(t) e^{-i x t} dt by the trapezoid rule on [-L, L].

    Exponentially accurate when u is analytic in a strip and negligible at
    +-L, with 2 pi/dt above the spectral support of interest.
    """
    t = np.arange(-L, L + dt / 2, dt)
    ut = np.asarray(u(t), complex)
    x = np.asarray(x, float)
    out = np.empty(x.shape, complex)
    flat = x.ravel()
    res = np.empty(flat.shape, complex)
    for k in range(0, flat.size, 512):
        res[k:k + 512] = np.exp(-1j * np.outer(flat[k:k + 512], t)) @ ut
    out = res.reshape(x.shape)
    return out * dt / (2 * math.pi)


def ft_contour(u, x, center: complex, radius: float, n: int = 256) -> np.ndarray:
    """(1/2pi) int_R u(t) e^{-i x t} dt for x > 0 by residues.

    ``u`` must be analytic in the lower half-plane except inside the circle
    |t - center| = radius and o(1) at infinity there; the line integral then
    equals minus the counter-clockwise circle integral.
    """
    th = 2 * math.pi * np.arange(n) / n
    z = center + radius * np.exp(1j * th)
    dz = 1j * radius * np.exp(1j * th) * (2 * math.pi / n)
    uz = u(z) * dz
    x = np.asarray(x, float)
    if np.any(x <= 0):
        raise DomainError("contour transform is for x > 0")
    res = np.exp(-1j * np.outer(x.ravel(), z)) @ uz
    return (-res / (2 * math.pi)).reshape(x.shape)


@dataclass(frozen=True)
class Symbol:
    """Time-domain pieces for a Hardy-split phi_+ and the derived g, h.

    Attributes
    ----------
    phi_plus : callable
        phi_+ on complex arguments (analytic continuation).
    kind : {"contour", "trapezoid", "zero"}
    center, radius : float
        Circle enclosing the lower singularity (contour kind).
    L, dt : float
        Trapezoid parameters.
    """
    descriptor: object
    phi_plus: object
    kind: str
    center: complex = 0j
    radius: float = 0.0
    L: float = 0.0
    dt: float = 0.0
    decay: float = 1.0

    def phi_minus(self, t):
        return np.conj(self.phi_plus(np.conj(t)))

    def h_minus_1(self, t):
        return np.expm1(self.phi_minus(t) - self.phi_plus(t))

    def hinv_minus_1(self, t):
        return np.expm1(self.phi_plus(t) - self.phi_minus(t))

    def g_minus_1(self, t):
        return np.expm1(self.phi_plus(t) + self.phi_minus(t))

    def _exp_sum(self, which):
        """Nodes z_k and coefficients c_k with transform(x) = sum c_k e^{-i x z_k}."""
        if self.kind == "contour":
            n = 256
            th = 2 * math.pi * np.arange(n) / n
            z = self.center + self.radius * np.exp(1j * th)
            dz = 1j * self.radius * np.exp(1j * th) * (2 * math.pi / n)
            return z, -which(z) * dz / (2 * math.pi)
        t = np.arange(-self.L, self.L + self.dt / 2, self.dt)
        return t.astype(complex), which(t) * self.dt / (2 * math.pi)

    def hhat(self, x):
        """Transform of h - 1 at x > 0."""
        if self.kind == "zero":
            return np.zeros(np.shape(x), complex)
        if self.kind == "contour":
            return ft_contour(self.h_minus_1, x, self.center, self.radius)
        return ft_trapezoid(self.h_minus_1, x, self.L, self.dt)

    def hinv_hat_reflected(self, x):
        """Transform of h^{-1} - 1 at -x, i.e. the kernel of H(h^{-1}~)."""
        # h^{-1} - 1 = conj(h - 1) on the real line
        return np.conj(self.hhat(x))

    def hankel_matrix(self, s, u):
        """[hhat(s_i + u_j)] through the factorised exponential sum."""
        if self.kind == "zero":
            return np.zeros((len(s), len(u)), complex)
        z, c = self._exp_sum(self.h_minus_1)
        return (np.exp(-1j * np.outer(s, z)) * c) @ np.exp(-1j * np.outer(z, u))

    def ghat(self, y):
        """Transform of g - 1 at real y (trapezoid; g - 1 decays fast)."""
        if self.kind == "zero":
            return np.zeros(np.shape(y), complex)
        if self.kind == "contour":
            raise DomainError("Toeplitz symbol of the Cauchy family has a kink; "
                              "use a Gaussian-band descriptor")
        return ft_trapezoid(self.g_minus_1, y, self.L, self.dt)

    def toeplitz_matrix(self, s):
        """[(g-1)^(s_i - s_j)] through the factorised trapezoid sum."""
        if self.kind == "zero":
            return np.zeros((len(s), len(s)), complex)
        if self.kind == "contour":
            raise DomainError("Toeplitz symbol of the Cauchy family has a kink; "
                              "use a Gaussian-band descriptor")
        t, c = self._exp_sum(self.g_minus_1)
        t = t.real
        return (np.exp(-1j * np.outer(s, t)) * c) @ np.exp(1j * np.outer(t, s))


def make_symbol(phi_plus) -> Symbol:
    """Build a :class:`Symbol` from a one-sided descriptor.

    Supported: ``Zero()``, ``Hardy(ScaledTest("cauchy"|"gauss_band"), +1)``.
    """
    if isinstance(phi_plus, Zero):
        return Symbol(phi_plus, lambda t: np.zeros(np.shape(t), complex), "zero")
    if not (isinstance(phi_plus, Hardy) and phi_plus.sign > 0
            and isinstance(phi_plus.inner, ScaledTest)):
        raise DomainError("phi_+ must be Hardy(+, ScaledTest) or Zero")
    f = phi_plus.inner
    if f.base == "cauchy":
        a, amp = f.a, f.amp

        def p(t):
            return amp * 0.5 / (1 - 1j * np.asarray(t, complex) / a)
        # single pole of phi_+ at -i a; phi_- has its pole at +i a
        return Symbol(phi_plus, p, "contour", center=-1j * a, radius=a, decay=a)
    if f.base == "gauss_band":
        mu, sigma = f.pdict["mu"], f.pdict["sigma"]
        if mu / sigma < 8:
            raise DomainError("gauss_band symbol needs mu/sigma >= 8 (negligible leakage)")
        a, amp = f.a, f.amp

        def p(t):
            return amp * sc._gb_plus_time(np.real(t) / a, mu, sigma)
        s_t, m_t = sigma / a, mu / a
        L = 10.0 / s_t
        # the trapezoid transform is 2 pi/dt periodic in x: the period must
        # cover Hankel arguments up to 2 * reach plus the negative content
        k = _harmonics(2 * abs(amp) * sigma * math.sqrt(2 * math.pi))
        reach = k * m_t + 10 * math.sqrt(k) * s_t
        dt = min(0.05, 2 * math.pi / (1.25 * (3 * reach + 2 * math.pi)))
        return Symbol(phi_plus, p, "trapezoid", L=L, dt=dt, decay=s_t)
    raise DomainError(f"no operator symbol for base {f.base!r}")


# ---------------------------------------------------------------- operators

def build_toeplitz(symbol_hat, grid: OperatorGrid, bandwidth: float | None = None) -> DiscretizedOperator:
    """chi T(g) chi on the grid, stored as 1 + W^{1/2}[(g-1)^(s-t)]W^{1/2}.

    Parameters
    ----------
    symbol_hat : callable or None
        y -> transform of g - 1; ``None`` means g = 1.
    bandwidth : float, optional
        Time-frequency content of the kernel in s - t; a warning flag is set
        when the node spacing is coarser than pi/bandwidth.
    """
    n = grid.size
    warn = []
    if symbol_hat is None:
        return DiscretizedOperator(np.zeros((n, n)), grid, identity_part=True)
    s = grid.nodes
    K = np.asarray(symbol_hat(s[:, None] - s[None, :]), complex)
    if bandwidth is not None and n > 1:
        gap = np.max(np.diff(np.sort(s)))
        if gap > math.pi / bandwidth:
            warn.append("grid too coarse for the transform support")
    return DiscretizedOperator(_sym(K, grid.weights), grid, identity_part=True, warnings=warn)


def build_hankel(hhat, grid: OperatorGrid, cols: OperatorGrid | None = None) -> DiscretizedOperator:
    """Kernel hhat(s + t) with rows on ``grid`` and columns on ``cols``.

    Row restriction to [d, inf) is expressed by the grid; ``hhat=None``
    is the Hankel operator of the constant 1, i.e. zero.
    """
    cols = cols or grid
    if hhat is None:
        return DiscretizedOperator(np.zeros((grid.size, cols.size)), grid)
    K = np.asarray(hhat(grid.nodes[:, None] + cols.nodes[None, :]), complex)
    M = np.sqrt(grid.weights)[:, None] * K * np.sqrt(cols.weights)[None, :]
    return DiscretizedOperator(M, grid)


@dataclass
class DetResult:
    value: complex
    exact_zero: bool = False


def fredholm_det(op: DiscretizedOperator | np.ndarray, regularization: str = "plain",
                 vp_trace: complex | None = None) -> complex:
    """det(1 + K) of a symmetrised discretisation via LU.

    ``det2_with_vp_trace`` returns det(1+K) exp(-tr K) where ``vp_trace`` is
    the principal-value trace supplied by the caller; the determinant itself
    is then det2 * exp(vp_trace).  A singular LU gives exactly 0.
    """
    if isinstance(op, DiscretizedOperator):
        M = op.dense() if op.identity_part else np.eye(op.grid.size) + op.matrix
        K = op.matrix
    else:
        K = np.asarray(op)
        M = np.eye(K.shape[0]) + K
    if M.size == 0:
        return 1.0
    d = _lu_det(M)
    if regularization == "plain":
        return d
    if regularization == "det2_with_vp_trace":
        if vp_trace is None:
            raise DomainError("det2 mode needs the principal-value trace")
        return d * np.exp(-np.trace(K))
    raise DomainError(f"unknown regularization {regularization!r}")


def _lu_det(M) -> complex:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", linalg.LinAlgWarning)
        lu, piv = linalg.lu_factor(M, check_finite=False)
    diag = np.diag(lu)
    if np.any(diag == 0):
        return 0.0
    sign = (-1) ** np.count_nonzero(piv != np.arange(len(piv)))
    val = sign * np.prod(diag)
    if np.isrealobj(val) or abs(np.imag(val)) == 0:
        return float(np.real(val))
    return complex(val)


def gap_probability(s: float, panels: int | None = None) -> float:
    """det(1 - chi_[0,s] S chi_[0,s]) by Nystrom on Gauss-Legendre panels."""
    if s < 0 or s > 16:
        raise DomainError(f"gap length must lie in [0, 16], got {s}")
    if s == 0:
        return 1.0
    p = panels or max(1, int(math.ceil(s / 2)))
    g = OperatorGrid.panels(0.0, s, p)
    K = -_sym(kernel_matrix(g.nodes), g.weights)
    return float(np.real(fredholm_det(K)))


GAP_C4 = math.pi**2 / 36  # coefficient of s^4 in the small-gap expansion


def gap_series_coefficient(s_values=(0.02, 0.03, 0.04, 0.05, 0.06, 0.08)) -> float:
    """Fit c4 in det = 1 - s + c4 s^4 + c6 s^6 + ... from small-s values."""
    s = np.asarray(s_values, float)
    r = np.array([(gap_probability(v) - 1 + v) / v**4 for v in s])
    A = np.stack([np.ones_like(s), s**2, s**4], axis=1)
    coef = np.linalg.lstsq(A, r, rcond=None)[0]
    return float(coef[0])


# ---------------------------------------------------------------- identity checks

@dataclass
class CheckRecord:
    """Result of a determinant identity check."""
    name: str
    lhs: complex
    rhs: complex
    relerr: float
    details: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        def enc(v):
            if isinstance(v, complex):
                return {"re": v.real, "im": v.imag}
            if isinstance(v, (np.floating, np.integer)):
                return float(v)
            return v
        return {"name": self.name, "lhs": enc(self.lhs), "rhs": enc(self.rhs),
                "relerr": float(self.relerr),
                "details": {k: enc(v) for k, v in self.details.items()}}


def _relerr(a, b) -> float:
    return float(abs(a - b) / max(abs(b), 1e-300))


def hankel_trace(phi_plus) -> float:
    """int_0^inf lam phi_+^(lam) phi_-^(-lam) dlam with phi_- = conj(phi_+)."""
    if isinstance(phi_plus, Zero):
        return 0.0
    phi_minus = Hardy(phi_plus.inner, -1)
    return sc.inner_h_half(phi_plus, phi_minus)


def _harmonics(amp: float, tol: float = 1e-16) -> int:
    """Smallest k with amp^k / k! below tol (order of the last relevant harmonic)."""
    k, term = 1, abs(amp)
    while term > tol:
        k += 1
        term *= abs(amp) / k
    return k


def _halfline_grid(sym: Symbol, d: float, panels: int) -> OperatorGrid:
    if sym.kind == "trapezoid":
        # Gaussian decay: a finite stretch already holds the kernel to 1e-16
        f = sym.descriptor.inner
        mu, sg = f.pdict["mu"] / f.a, f.pdict["sigma"] / f.a
        k = _harmonics(2 * abs(f.amp) * f.pdict["sigma"] * math.sqrt(2 * math.pi))
        hi = max(d, k * mu + 10 * math.sqrt(k) * sg)
        return OperatorGrid.panels(d, hi, panels)
    return OperatorGrid.halfline(d, sym.decay / 2, panels)


def _hh_det(sym: Symbol, d: float, panels: int) -> complex:
    """det(1 - chi_[d,inf) H(h) H(h^{-1}~) chi_[d,inf)) with inner variable on [0,inf)."""
    if sym.kind == "zero":
        return 1.0
    rows = _halfline_grid(sym, d, panels)
    inner = _halfline_grid(sym, 0.0, panels)
    if rows.interval[1] <= rows.interval[0]:
        return 1.0
    H1 = sym.hankel_matrix(rows.nodes, inner.nodes)
    H1 = np.sqrt(rows.weights)[:, None] * H1 * np.sqrt(inner.weights)[None, :]
    # kernel of H(h^{-1}~) is conj(hhat(u + t)); h^{-1} - 1 = conj(h - 1)
    H2 = np.conj(sym.hankel_matrix(inner.nodes, rows.nodes))
    H2 = np.sqrt(inner.weights)[:, None] * H2 * np.sqrt(rows.weights)[None, :]
    return fredholm_det(-(H1 @ H2))


def widom_check(phi_plus, panels: int = 12, refine: bool = True) -> CheckRecord:
    """det(1 - H(h) H(h^{-1}~)) against exp(-<phi_+, phi_-~>_{H_1/2}).

    The left side is a Nystrom determinant of Hankel kernels obtained from the
    time-domain symbol; the right side is a spectral quadrature of phi_+^.
    """
    sym = make_symbol(phi_plus)
    lhs = _hh_det(sym, 0.0, panels)
    det = {}
    if refine and sym.kind != "zero":
        lhs2 = _hh_det(sym, 0.0, 2 * panels)
        det["refinement_change"] = _relerr(lhs, lhs2)
        lhs = lhs2
    rhs = math.exp(-hankel_trace(phi_plus))
    return CheckRecord("widom", lhs, rhs, _relerr(lhs, rhs), det)


def _phi_hat_zero(phi_plus) -> float:
    """phi^(0) for phi = phi_+ + conj(phi_+) (average of one-sided limits)."""
    if isinstance(phi_plus, Zero):
        return 0.0
    return float(np.real(sc.fourier_eval(phi_plus.inner, 0.0)))


def toeplitz_det(sym: Symbol, a: float, panels: int) -> complex:
    """det(chi_[0,a] T(g) chi_[0,a])."""
    if sym.kind == "zero":
        return 1.0
    g = OperatorGrid.panels(0.0, a, panels)
    return fredholm_det(_sym(sym.toeplitz_matrix(g.nodes), g.weights))


def bogc_check(phi_plus, a: float, panels: int | None = None) -> CheckRecord:
    """Truncated Toeplitz determinant on [0, a] against its Hankel factorisation.

    RHS = exp(a phi^(0) + <phi_+, phi_-~>) det(1 - chi_[a,inf) H(h) H(h^{-1}~) chi).
    Both sides are recomputed on a doubled grid; the change is reported as
    ``richardson``.
    """
    if a <= 0:
        raise DomainError("a must be positive")
    sym = make_symbol(phi_plus)
    p = panels or max(2, int(math.ceil(a / 1.5)))
    lhs1, lhs2 = toeplitz_det(sym, a, p), toeplitz_det(sym, a, 2 * p)
    hp = 6
    hh1, hh2 = _hh_det(sym, a, hp), _hh_det(sym, a, 2 * hp)
    pref = math.exp(a * _phi_hat_zero(phi_plus) + hankel_trace(phi_plus))
    rhs1, rhs2 = pref * hh1, pref * hh2
    rich = max(_relerr(lhs1, lhs2), _relerr(rhs1, rhs2))
    return CheckRecord("bogc", lhs2, rhs2, _relerr(lhs2, rhs2),
                       {"a": a, "richardson": rich, "hankel_factor": hh2})


def hankel_factor(phi_plus, a: float, panels: int = 12) -> complex:
    """det(1 - chi_[a,inf) H(h) H(h^{-1}~) chi_[a,inf))."""
    return _hh_det(make_symbol(phi_plus), a, panels)


def hankel_hs_norm2(hhat, d: float, panels: int = 12, beta: float = 1.0) -> float:
    """||chi_[d,inf) H(h)||_HS^2 by quadrature of the discretised kernel."""
    rows = OperatorGrid.halfline(d, beta, panels)
    cols = OperatorGrid.halfline(0.0, beta, panels)
    M = build_hankel(hhat, rows, cols).matrix
    return float(np.sum(np.abs(M) ** 2))


def hankel_kernel_tail_hs2(hhat, d: float, panels: int = 12, beta: float = 1.0) -> float:
    """Squared HS norm of the kernel hhat(s + t) restricted to s + t >= d.

    Rows run over s >= 0; for each row the columns start at max(0, d - s).
    This is the quantity int_d^inf u |hhat(u)|^2 du; the compression
    chi_[d,inf) H(h) is smaller, int_d^inf (u - d) |hhat(u)|^2 du.
    """
    # the column start max(0, d - s) has a kink at s = d: split the rows there
    near = OperatorGrid.panels(0.0, d, max(1, panels // 4)) if d > 0 else None
    far = OperatorGrid.halfline(d, beta, panels)
    nodes = far.nodes if near is None else np.concatenate([near.nodes, far.nodes])
    weights = far.weights if near is None else np.concatenate([near.weights, far.weights])
    total = 0.0
    for s, ws in zip(nodes, weights):
        cols = OperatorGrid.halfline(max(0.0, d - s), beta, panels)
        total += ws * float(np.sum(cols.weights * np.abs(hhat(s + cols.nodes)) ** 2))
    return total


def hh_bound(phi_plus, d: float) -> dict:
    """Both sides of |det(1 - chi H(h) H(h^{-1}~) chi) - 1| <= B e^B.

    B = ||f||_{H_1}^2 exp(2||f||_inf)/d with h = exp(f), f = phi_- - phi_+.
    ||f||_{H_1}^2 includes the L2 part: int (1 + lam^2) |fhat|^2.
    """
    sym = make_symbol(phi_plus)
    val = _hh_det(sym, d, 12)
    fp = phi_plus
    # f = phi_- - phi_+ has |fhat|^2 = |phi_+^|^2 mirrored; both halves count
    h1 = 2 * (sc.sobolev_seminorm(fp, 1.0) + sc.sobolev_seminorm(fp, 0.0))
    t = np.linspace(-200, 200, 40001)
    sup = float(np.max(np.abs(sym.phi_minus(t) - sym.phi_plus(t))))
    B = h1 * math.exp(2 * sup) / d
    return {"lhs": abs(val - 1), "bound": B * math.exp(B), "det": val}


def toeplitz_sine_check(g_minus_1, g_hat=None, R: float = 10.0, panels_sine: int | None = None,
                        L: float = 30.0, dt: float = 0.02) -> CheckRecord:
    """det(chi_[0,2pi] T(g) chi_[0,2pi]) against det(1 + (g-1) S) on [-R, R].

    Parameters
    ----------
    g_minus_1 : callable
        t -> g(t) - 1 on real t; must decay fast.
    g_hat : callable, optional
        Transform of g - 1; computed by the trapezoid rule otherwise.
    """
    gh = g_hat or (lambda y: ft_trapezoid(g_minus_1, y, L, dt))
    two_pi = 2 * math.pi
    dets = []
    for p in (4, 8):
        dets.append(fredholm_det(build_toeplitz(gh, OperatorGrid.panels(0.0, two_pi, p))))
    lhs = dets[-1]
    ps = panels_sine or max(2, int(math.ceil(2 * R / 2)))
    sd = []
    for p in (ps, 2 * ps):
        grid = OperatorGrid.panels(-R, R, p)
        gm1 = np.asarray(g_minus_1(grid.nodes), complex)
        r = np.sqrt(grid.weights)
        K = r[:, None] * gm1[:, None] * kernel_matrix(grid.nodes) * r[None, :]
        sd.append(fredholm_det(K))
    rhs = sd[-1]
    tt = np.linspace(R, R + 40, 4001)
    tail = float(np.trapezoid(np.abs(g_minus_1(tt)) + np.abs(g_minus_1(-tt)), tt))
    rec = CheckRecord("toeplitz_sine", lhs, rhs, _relerr(lhs, rhs),
                      {"richardson": max(_relerr(dets[0], dets[1]), _relerr(sd[0], sd[1])),
                       "tail_estimate": tail, "R": R})
    if tail > 1e-8:
        rec.details["warning"] = "truncation tail above tolerance"
    return rec


def mc_multiplicative(g, bank: np.ndarray, L: float | None = None) -> dict:
    """MC mean and standard error of prod_x g(x) over configurations.

    ``g`` maps real arrays to (possibly complex) factors; rows of ``bank``
    are configurations.
    """
    vals = np.prod(np.asarray(g(bank)), axis=1)
    mean = np.mean(vals)
    se = np.std(vals, ddof=1) / math.sqrt(len(vals))
    return {"mean": complex(mean) if np.iscomplexobj(mean) else float(mean), "se": float(se)}


# ---------------------------------------------------------------- CLT

@dataclass
class CLTRecord:
    a: float
    ks_distance: float
    variance: float
    mean: float
    normalized_samples: np.ndarray


def clt_diagnostics(f: ScaledTest, scales, bank: np.ndarray) -> list[CLTRecord]:
    """Kolmogorov-Smirnov distance of normalised S_{T_a f} to N(0, 1).

    T_a f(t) = f(t/a).  Samples are centred by the exact mean
    int T_a f = 2 pi a fhat(0) and divided by ||f||_{H_1/2}, which is
    invariant under T_a.
    """
    if not isinstance(f, ScaledTest):
        raise DomainError("clt_diagnostics needs a ScaledTest descriptor")
    norm2 = sc.sobolev_seminorm(f, 0.5)
    if norm2 <= 0:
        raise DomainError("f must have positive H_1/2 seminorm")
    out = []
    for a in scales:
        fa = ScaledTest(f.base, f.a * a, f.amp, f.params)
        mean = float(2 * math.pi * np.real(sc.fourier_eval(fa, 0.0)))
        vals = sc.closed_form_time(fa, bank).sum(axis=1)
        z = (vals - mean) / math.sqrt(norm2)
        ks = float(stats.kstest(z, "norm").statistic)
        out.append(CLTRecord(float(a), ks, float(np.var(z, ddof=1)), float(np.mean(z)), z))
    return out
