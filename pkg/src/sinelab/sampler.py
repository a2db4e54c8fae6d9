"""Seeded CUE sampling rescaled to unit density, Palm samples and persistence.

A CUE(n) eigenangle set theta_j in [-pi, pi) is mapped to t_j = n theta_j / 2pi,
a configuration on the circle of length n (window [-n/2, n/2]) whose
correlation kernel is the rescaled Dirichlet kernel.
"""
from __future__ import annotations

import hashlib
import math
import os
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .sine_kernel import dirichlet_approx
from .spectral_core import DomainError

MAGIC = b"SINECFG1"
VERSION = 1
_HEADER = struct.Struct("<8sIIQdI")
_PALM_TAG = b"PALM"


class SamplingError(RuntimeError):
    """Eigen-decomposition failed repeatedly or the spectrum is invalid."""


class ConfigParseError(ValueError):
    """Malformed configuration file.

    Attributes
    ----------
    offset : int
        Byte offset at which parsing failed.
    """

    def __init__(self, msg: str, offset: int):
        super().__init__(f"{msg} at byte offset {offset}")
        self.offset = offset


@dataclass
class Configuration:
    """Finite sorted particle set with window and provenance.

    Attributes
    ----------
    particles : ndarray
        Strictly increasing positions inside [-L, L].
    L : float
        Window half-length.
    n : int
        CUE size used to generate the sample (0 if synthetic).
    seed : int
        64-bit seed of the generating stream.
    palm_anchor : float or None
        Anchor of a reduced Palm sample.
    notes : list of str
        Free-form provenance notes (e.g. shifts applied downstream).
    """
    particles: np.ndarray
    L: float
    n: int = 0
    seed: int = 0
    palm_anchor: float | None = None
    notes: list = field(default_factory=list)

    def __post_init__(self):
        p = np.asarray(self.particles, float).ravel()
        if p.size > 1 and np.any(np.diff(p) <= 0):
            p = np.sort(p)
            if np.any(np.diff(p) <= 0):
                raise DomainError("configuration particles must be distinct")
        if p.size and (p[0] < -self.L - 1e-12 or p[-1] > self.L + 1e-12):
            raise DomainError("configuration particles must lie inside the window")
        self.particles = p

    def __len__(self) -> int:
        return int(self.particles.size)

    def count(self, lo: float, hi: float) -> int:
        """Number of particles in [lo, hi)."""
        return int(np.searchsorted(self.particles, hi) - np.searchsorted(self.particles, lo))

    def same_as(self, other: "Configuration") -> bool:
        return (self.L == other.L and self.n == other.n and self.seed == other.seed
                and self.palm_anchor == other.palm_anchor
                and np.array_equal(self.particles, other.particles))


# ---------------------------------------------------------------- RNG

def stream(seed: int, index: int = 0, attempt: int = 0) -> np.random.Generator:
    """Counter-based generator for sub-stream ``index`` of ``seed``.

    ``attempt > 0`` selects a fresh stream for retries.
    """
    key = [int(seed) & (2**64 - 1), int(index)] + ([int(attempt)] if attempt else [])
    ss = np.random.SeedSequence(key)
    return np.random.Generator(np.random.Philox(ss))


def sub_seed(seed: int, index: int) -> int:
    """Deterministic 64-bit seed for sub-stream ``index`` (stored in provenance)."""
    h = hashlib.sha256(f"{int(seed)}:{int(index)}".encode()).digest()
    return int.from_bytes(h[:8], "little")


# ---------------------------------------------------------------- CUE

def haar_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed unitary from QR of a complex Ginibre matrix."""
    Z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / math.sqrt(2)
    Q, R = np.linalg.qr(Z)
    d = np.diagonal(R)
    return Q * (d / np.abs(d))[None, :]


def _eigenangles(U: np.ndarray) -> np.ndarray:
    """Eigenangles of a unitary via the Cayley transform.

    H = i (I - U)(I + U)^{-1} is Hermitian with eigenvalues tan(theta/2); one
    Hermitian eigensolve is several times cheaper than a general one.  When an
    eigenvalue sits close to -1 the transform is ill-conditioned and the
    general solver is used instead.
    """
    n = U.shape[0]
    I = np.eye(n)
    H = 1j * np.linalg.solve((I + U).T, (I - U).T).T
    H = 0.5 * (H + H.conj().T)
    w = np.linalg.eigvalsh(H)
    if np.max(np.abs(w)) > 1e4 or not np.all(np.isfinite(w)):
        return np.sort(np.angle(np.linalg.eigvals(U)))
    return np.sort(2 * np.arctan(w))


def sample_cue(n: int, seed: int, index: int = 0) -> np.ndarray:
    """CUE(n) eigenangles in [-pi, pi), sorted.

    Parameters
    ----------
    n : int
        Matrix size, 1 <= n <= 2048.
    seed, index : int
        Seed and sub-stream; (n, seed, index) determines the output exactly.
    """
    if not 1 <= n <= 2048:
        raise DomainError(f"sample_cue requires 1 <= n <= 2048, got n={n}")
    last = None
    for attempt in range(3):
        rng = stream(seed, index, attempt)
        try:
            th = _eigenangles(haar_unitary(n, rng))
        except np.linalg.LinAlgError as exc:
            last = exc
            continue
        th = np.where(th >= math.pi, th - 2 * math.pi, th)
        return np.sort(th)
    raise SamplingError(f"eigen-decomposition failed 3 times: {last}")


def to_sine_window(angles, n: int, seed: int = 0, bulk_only: bool = False) -> Configuration:
    """Map eigenangles to unit density: t = n theta / 2pi on [-n/2, n/2].

    With ``bulk_only`` particles with |t| > 0.4 n are discarded.
    """
    t = np.sort(n * np.asarray(angles, float) / (2 * math.pi))
    if bulk_only:
        t = t[np.abs(t) <= 0.4 * n]
    return Configuration(t, n / 2, n=n, seed=seed)


def sample_configuration(n: int, seed: int, index: int = 0, bulk_only=False) -> Configuration:
    """One rescaled CUE configuration for sub-stream ``index``."""
    return to_sine_window(sample_cue(n, seed, index), n, sub_seed(seed, index), bulk_only)


def _bank_chunk(n, seed, lo, hi):
    out = np.empty((hi - lo, n))
    for k in range(lo, hi):
        out[k - lo] = n * sample_cue(n, seed, k) / (2 * math.pi)
    return out


def sample_bank(n: int, count: int, seed: int, jobs: int = 1) -> np.ndarray:
    """Array (count, n) of sorted rescaled CUE samples, row k from sub-stream k.

    The result does not depend on ``jobs``.
    """
    if jobs <= 1 or count < 64:
        return _bank_chunk(n, seed, 0, count)
    from joblib import Parallel, delayed
    edges = np.linspace(0, count, jobs * 4 + 1).astype(int)
    parts = Parallel(n_jobs=jobs)(delayed(_bank_chunk)(n, seed, a, b)
                                  for a, b in zip(edges[:-1], edges[1:]) if b > a)
    return np.concatenate(parts, axis=0)


def cache_dir() -> Path:
    """Directory for cached sample banks (``SINELAB_CACHE`` or ~/.cache/sinelab)."""
    d = Path(os.environ.get("SINELAB_CACHE", Path.home() / ".cache" / "sinelab"))
    d.mkdir(parents=True, exist_ok=True)
    return d


def cached_bank(n: int, count: int, seed: int, jobs: int = 1) -> np.ndarray:
    """:func:`sample_bank` memoised on disk; a prefix of a larger bank is reused."""
    d = cache_dir()
    for p in sorted(d.glob(f"bank_n{n}_s{seed}_c*.npy")):
        c = int(p.stem.split("_c")[-1])
        if c >= count:
            return np.load(p)[:count]
    bank = sample_bank(n, count, seed, jobs)
    np.save(d / f"bank_n{n}_s{seed}_c{count}.npy", bank)
    return bank


def bank_configurations(bank: np.ndarray, seed: int = 0) -> list[Configuration]:
    """Wrap rows of a bank as Configuration objects."""
    n = bank.shape[1]
    return [Configuration(row, n / 2, n=n, seed=sub_seed(seed, k)) for k, row in enumerate(bank)]


# ---------------------------------------------------------------- Palm

def _projection_dpp(B: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Sequential sampling of a projection DPP with orthonormal columns B."""
    V = B.copy()
    chosen = []
    N = V.shape[0]
    for _ in range(B.shape[1]):
        p = np.sum(V * V, axis=1)
        p = np.clip(p, 0, None)
        p /= p.sum()
        i = int(rng.choice(N, p=p))
        chosen.append(i)
        j = int(np.argmax(np.abs(V[i])))
        vj = V[:, j].copy()
        V = V - np.outer(vj, V[i] / V[i, j])
        V = np.delete(V, j, axis=1)
        if V.shape[1]:
            V, _ = np.linalg.qr(V)
    return np.array(sorted(chosen), dtype=int)


def palm_grid(n: int, pts_per_unit: int = 8) -> np.ndarray:
    """Uniform grid on [-n/2, n/2) containing 0."""
    N = n * pts_per_unit
    return (np.arange(N) - N // 2) / pts_per_unit


def sample_palm(n: int, seed: int, index: int = 0, pts_per_unit: int = 8) -> Configuration:
    """Approximate reduced Palm sample at 0.

    The Dirichlet kernel is discretised on a grid with ``pts_per_unit`` points
    per unit length over one period, compressed by the Schur complement at 0,
    and the resulting projection DPP is sampled exactly.

    Raises
    ------
    SamplingError
        If the discretised spectrum leaves [-1e-8, 1 + 1e-8].
    """
    if not 1 <= n <= 1024:
        raise DomainError(f"sample_palm requires n <= 1024, got n={n}")
    g = palm_grid(n, pts_per_unit)
    h = 1.0 / pts_per_unit
    K = dirichlet_approx(n, g[:, None], g[None, :])
    i0 = int(np.flatnonzero(g == 0.0)[0])
    P = K - np.outer(K[:, i0], K[i0, :]) / K[i0, i0]
    M = h * 0.5 * (P + P.T)
    w, V = np.linalg.eigh(M)
    if w.min() < -1e-8 or w.max() > 1 + 1e-8:
        raise SamplingError(f"Palm kernel spectrum outside [0, 1]: [{w.min()}, {w.max()}]")
    B = V[:, w > 0.5]
    rng = stream(seed, index)
    idx = _projection_dpp(B, rng)
    return Configuration(g[idx], n / 2, n=n, seed=sub_seed(seed, index), palm_anchor=0.0)


def palm_density(n: int, x):
    """One-point density of the discretised Palm process at 0 (continuum form)."""
    kd = (n + 1) / n
    return kd - dirichlet_approx(n, x, 0.0) ** 2 / kd


# ---------------------------------------------------------------- persistence

def persist(config: Configuration, path) -> None:
    """Write a configuration in the binary SINECFG1 format (little-endian)."""
    p = config.particles
    head = _HEADER.pack(MAGIC, VERSION, int(config.n), int(config.seed) & (2**64 - 1),
                        float(config.L), int(p.size))
    body = np.asarray(p, "<f8").tobytes()
    tail = b""
    if config.palm_anchor is not None:
        tail = _PALM_TAG + struct.pack("<d", float(config.palm_anchor))
    with open(path, "wb") as fh:
        fh.write(head + body + tail)


def load(path) -> Configuration:
    """Read a SINECFG1 file.

    Raises
    ------
    ConfigParseError
        On bad magic, version mismatch, truncation or trailing garbage; the
        message carries the byte offset.
    """
    data = Path(path).read_bytes()
    if len(data) < 8 or data[:8] != MAGIC:
        raise ConfigParseError("bad magic (expected SINECFG1)", 0)
    if len(data) < _HEADER.size:
        raise ConfigParseError("truncated header", len(data))
    _, version, n, seed, L, count = _HEADER.unpack_from(data, 0)
    if version != VERSION:
        raise ConfigParseError(f"unsupported version {version} (expected {VERSION})", 8)
    off = _HEADER.size
    need = off + 8 * count
    if len(data) < need:
        raise ConfigParseError(f"truncated particle block ({count} particles declared)",
                               len(data))
    parts = np.frombuffer(data, "<f8", count, off).astype(float)
    anchor = None
    rest = data[need:]
    if rest:
        if rest[:4] != _PALM_TAG or len(rest) != 12:
            raise ConfigParseError("unexpected trailing bytes", need)
        anchor = struct.unpack("<d", rest[4:])[0]
    try:
        return Configuration(parts, L, n=n, seed=seed, palm_anchor=anchor)
    except DomainError as exc:
        raise ConfigParseError(str(exc), off) from exc


def export_csv(config: Configuration, path) -> None:
    """One particle per line, full precision."""
    with open(path, "w") as fh:
        for x in config.particles:
            fh.write(f"{float(x)!r}\n")
