"""Sine kernel, Palm compressions and the Dirichlet-kernel approximation."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .spectral_core import DomainError

C0 = math.pi  # base of the derivative bound |d^k S| <= C0^k k!

# Taylor coefficients of sin(z)/z in z^2, enough for |z| < 1e-3 to full precision
_TAYLOR = np.array([1.0, -1 / 6, 1 / 120, -1 / 5040, 1 / 362880, -1 / 39916800])


def _sinc_pi(delta):
    """sin(pi delta)/(pi delta) with a series near the diagonal."""
    z = np.pi * np.asarray(delta, float)
    out = np.empty_like(z)
    small = np.abs(z) < 1e-3
    zz = z[small] ** 2
    out[small] = np.polyval(_TAYLOR[::-1], zz)
    zs = z[~small]
    out[~small] = np.sin(zs) / zs
    return out


@dataclass(frozen=True)
class SineKernel:
    """Stateless evaluator of S(x, y) = sin pi(x-y) / (pi(x-y))."""
    C0: float = C0

    def __call__(self, x, y):
        return eval_kernel(x, y)


def eval_kernel(x, y):
    """Sine kernel at (x, y); broadcasts.

    Examples
    --------
    >>> float(eval_kernel(0.0, 0.5)) == 2 / math.pi
    True
    """
    d = np.subtract(x, y, dtype=float)
    out = _sinc_pi(np.atleast_1d(d)).reshape(np.shape(d))
    return float(out) if np.ndim(out) == 0 else out


def kernel_matrix(x, y=None):
    """Matrix S(x_i, y_j)."""
    x = np.asarray(x, float)
    y = x if y is None else np.asarray(y, float)
    return eval_kernel(x[:, None], y[None, :])


@dataclass(frozen=True)
class PalmKernel:
    """Iterated Schur complement of the sine kernel at the anchors q_1..q_l.

    Anchors are stored sorted; duplicates closer than 1e-12 are rejected.
    """
    anchors: tuple = ()
    base: SineKernel = field(default_factory=SineKernel)

    def __post_init__(self):
        a = tuple(sorted(float(q) for q in self.anchors))
        if any(b - c < 1e-12 for c, b in zip(a[:-1], a[1:])):
            raise DomainError("Palm anchors must be distinct (separation >= 1e-12)")
        object.__setattr__(self, "anchors", a)


def palm_eval(k: PalmKernel, x, y):
    """Evaluate the Palm kernel Pi^{q_1..q_l}(x, y).

    Each step applies Pi^q(x, y) = Pi(x, y) - Pi(x, q) Pi(q, y) / Pi(q, q).
    The recursion is implemented as a Schur complement against the anchor
    Gram matrix, which equals the iterated form.
    """
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    base = eval_kernel(x, y)
    if not k.anchors:
        return base
    q = np.asarray(k.anchors)
    G = kernel_matrix(q)
    if np.min(np.linalg.eigvalsh(G)) <= 0:
        raise DomainError("anchor Gram matrix is not positive definite")
    xs = np.atleast_1d(x).ravel()
    ys = np.atleast_1d(y).ravel()
    Sx = kernel_matrix(xs, q)
    Sy = kernel_matrix(ys, q)
    corr = np.einsum("ij,ij->i", Sx, np.linalg.solve(G, Sy.T).T) if xs.shape == ys.shape \
        else None
    if corr is None:
        raise ValueError("palm_eval expects x and y of equal shape")
    out = np.atleast_1d(base).ravel() - corr
    # exact zeros at the anchors
    hit = np.isin(xs, q) | np.isin(ys, q)
    out[hit] = 0.0
    out = out.reshape(np.shape(base))
    return float(out) if np.ndim(out) == 0 else out


def palm_eval_iterated(k: PalmKernel, x: float, y: float) -> float:
    """Literal iterated Schur recursion, one anchor at a time (reference path)."""
    def rec(anchors, a, b):
        if not anchors:
            return float(eval_kernel(a, b))
        *rest, q = anchors
        pqq = rec(rest, q, q)
        if pqq <= 0:
            raise DomainError("Pi(q, q) vanished during Palm iteration")
        return rec(rest, a, b) - rec(rest, a, q) * rec(rest, q, b) / pqq
    if float(x) in k.anchors or float(y) in k.anchors:
        return 0.0
    return rec(list(k.anchors), float(x), float(y))


def palm_matrix(k: PalmKernel, pts):
    """Gram matrix Pi^{q}(p_i, p_j)."""
    p = np.asarray(pts, float)
    S = kernel_matrix(p)
    if not k.anchors:
        return S
    q = np.asarray(k.anchors)
    Spq = kernel_matrix(p, q)
    M = S - Spq @ np.linalg.solve(kernel_matrix(q), Spq.T)
    hit = np.isin(p, q)
    M[hit, :] = 0.0
    M[:, hit] = 0.0
    return M


def dirichlet_kernel(n: int, theta, theta2):
    """Standard Dirichlet kernel sin((n+1)(a-b)/2) / sin((a-b)/2)."""
    d = np.atleast_1d(np.subtract(theta, theta2, dtype=float))
    # fold into (-pi, pi]; the kernel has period 2 pi up to the sign (-1)^n per turn
    k = np.round(d / (2 * np.pi))
    r = d - 2 * np.pi * k
    sign = np.where((k * n) % 2 == 0, 1.0, -1.0)
    out = sign * (n + 1) * _sinc_pi((n + 1) * r / (2 * np.pi)) / _sinc_pi(r / (2 * np.pi))
    out = out.reshape(np.shape(np.subtract(theta, theta2)))
    return float(out) if np.ndim(out) == 0 else out


def dirichlet_approx(n: int, t, t2):
    """Rescaled Dirichlet kernel on the window [-pi n, pi n].

    Returns (1/n) sin(pi (n+1)(t-t')/n) / sin(pi (t-t')/n) for arguments in
    the window and 0 outside.  The diagonal value is (n+1)/n.
    """
    if n < 1:
        raise DomainError(f"dirichlet_approx requires n >= 1, got n={n}")
    t = np.asarray(t, float)
    t2 = np.asarray(t2, float)
    inside = (np.abs(t) <= math.pi * n) & (np.abs(t2) <= math.pi * n)
    val = dirichlet_kernel(n, 2 * math.pi * t / n, 2 * math.pi * t2 / n) / n
    out = np.where(inside, val, 0.0)
    return float(out) if np.ndim(out) == 0 else out


def derivative_bound_check(kmax: int = 8, grid: np.ndarray | None = None) -> dict:
    """Check sup_y |d^k/dy^k S(0, y)| <= C0^k k! for k <= kmax.

    The k-th derivative is computed from the spectral representation
    S(0, y) = (1/2pi) int_{-pi}^{pi} e^{i lam y} dlam, i.e. as
    (1/2pi) int (i lam)^k e^{i lam y} dlam by Gauss-Legendre quadrature, and
    maximised over ``grid``.  The spectral bound pi^k/(k+1) is reported too.

    Returns
    -------
    dict
        ``sup`` and ``ratio`` (sup / (C0^k k!)) per k, ``spectral_bound`` per
        k, and ``max_ratio``.
    """
    if kmax > 12:
        raise DomainError(f"kmax must be <= 12, got {kmax}")
    if grid is None:
        grid = np.linspace(-8, 8, 4001)
    x, w = np.polynomial.legendre.leggauss(96)
    lam = math.pi * x
    wl = math.pi * w / (2 * math.pi)
    E = np.exp(1j * np.outer(grid, lam))
    sups, ratios, spec = [], [], []
    for k in range(kmax + 1):
        vals = (E * (1j * lam) ** k) @ wl
        s = float(np.max(np.abs(vals)))
        sups.append(s)
        ratios.append(s / (C0**k * math.factorial(k)))
        spec.append(math.pi**k / (k + 1))
    return {"sup": sups, "ratio": ratios, "spectral_bound": spec,
            "max_ratio": max(ratios)}
