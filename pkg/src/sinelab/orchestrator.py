"""Command line, configuration, suite dispatch and report aggregation.

Every run writes ``<out>/<command>/report.json`` plus one CSV per table.
Check thresholds come from ``defaults.ini`` (overridable per key by a user
config), so the pass flags in a report are a function of the config alone.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import math
import os
import re
import subprocess
import sys
import time
from dataclasses import dataclass, field
from importlib import metadata, resources
from pathlib import Path

import numpy as np

from . import completeness_lab as cl
from . import deviation_lab as dl
from . import functionals as fn
from . import operator_engine as oe
from . import sampler
from . import spectral_core as sc

SCHEMA_VERSION = 1
COMMANDS = ("sample", "bands", "verify-det", "clt", "tails", "deviations", "completeness",
            "report")
GATES = ("strict", "exploratory-off")


class ConfigError(ValueError):
    """Config text could not be parsed; ``lineno`` is 1-based when known."""

    def __init__(self, msg: str, lineno: int | None = None, source: str = "<config>"):
        where = f"{source}:{lineno}: " if lineno else f"{source}: "
        super().__init__(where + msg)
        self.lineno = lineno


# ---------------------------------------------------------------- config

def _coerce(v: str):
    v = v.strip()
    if "," in v:
        return [_coerce(p) for p in v.split(",")]
    for cast in (int, float):
        try:
            return cast(v)
        except ValueError:
            pass
    if v.lower() in ("true", "false"):
        return v.lower() == "true"
    return v


def _line_index(text: str) -> dict:
    """(section, key) -> line number, for error messages."""
    out, sec = {}, None
    for i, line in enumerate(text.splitlines(), start=1):
        s = line.strip()
        m = re.match(r"\[([^\]]+)\]", s)
        if m:
            sec = m.group(1).strip()
            continue
        m = re.match(r"([^=:#;\s][^=:]*?)\s*[=:]", s)
        if m and sec is not None:
            out.setdefault((sec, m.group(1).strip()), i)
    return out


def parse_config(text: str, source: str = "<config>") -> tuple[dict, dict]:
    """Parse key=value text with [sections].

    Returns
    -------
    params : dict
        section -> {key: value} with numbers and comma lists coerced.
    lines : dict
        (section, key) -> line number.
    """
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str  # keys are case sensitive (T, A, ...)
    try:
        cp.read_string(text, source=source)
    except configparser.ParsingError as e:
        lineno = e.errors[0][0] if e.errors else None
        raise ConfigError("malformed line", lineno, source) from e
    except configparser.DuplicateOptionError as e:
        raise ConfigError(f"duplicate key {e.option!r} in [{e.section}]", e.lineno, source) from e
    except configparser.DuplicateSectionError as e:
        raise ConfigError(f"duplicate section [{e.section}]", e.lineno, source) from e
    except configparser.MissingSectionHeaderError as e:
        raise ConfigError("key outside any [section]", e.lineno, source) from e
    params = {s: {k: _coerce(v) for k, v in cp.items(s)} for s in cp.sections()}
    return params, _line_index(text)


def load_defaults() -> dict:
    text = resources.files("sinelab").joinpath("defaults.ini").read_text()
    return parse_config(text, "defaults.ini")[0]


@dataclass
class RunConfig:
    """Resolved run configuration.

    Attributes
    ----------
    command : str
    params : dict
        section -> key -> value, defaults merged with the user config.
    seed : int
    output_dir : Path
    parallelism : int
    gate : str
    lines : dict
        (section, key) -> line number in the user config.
    """
    command: str
    params: dict
    seed: int
    output_dir: Path
    parallelism: int = 1
    gate: str = "strict"
    lines: dict = field(default_factory=dict)
    source: str = "<defaults>"

    def section(self, name: str) -> dict:
        return self.params.get(name, {})

    def echo(self) -> dict:
        return {"command": self.command, "seed": self.seed, "parallelism": self.parallelism,
                "gate": self.gate, "params": self.params}


def make_config(command: str, config_text: str | None = None, source: str = "<config>",
                seed: int | None = None, out: str | os.PathLike | None = None,
                jobs: int | None = None, gate: str | None = None) -> RunConfig:
    """Merge defaults, an optional config text and explicit overrides."""
    params = load_defaults()
    lines = {}
    if config_text is not None:
        user, lines = parse_config(config_text, source)
        unknown = set(user) - set(params)
        if unknown:
            sec = sorted(unknown)[0]
            ln = next((v for (s, _), v in lines.items() if s == sec), None)
            raise ConfigError(f"unknown section [{sec}]", ln, source)
        for s, kv in user.items():
            params[s].update(kv)
    run = params["run"]
    env = os.environ.get("SINELAB_OUT")
    out_dir = Path(env) if env else Path(out if out is not None else "sinelab_out")
    return RunConfig(command, params, int(seed if seed is not None else run["seed"]), out_dir,
                     int(jobs if jobs is not None else run["jobs"]),
                     gate if gate is not None else str(run["gate"]), lines, source)


def _as_list(v) -> list:
    return v if isinstance(v, list) else [v]


def validate(config: RunConfig) -> list[str]:
    """Violations of module preconditions; an empty list means runnable."""
    bad = []

    def where(sec, key):
        ln = config.lines.get((sec, key))
        return f" (line {ln})" if ln else ""

    def need(ok, sec, key, msg):
        if not ok:
            val = config.params.get(sec, {}).get(key)
            bad.append(f"[{sec}] {key} = {val!r}{where(sec, key)}: {msg}")

    def num(sec, key):
        v = config.params.get(sec, {}).get(key)
        return v if isinstance(v, (int, float)) and not isinstance(v, bool) else None

    if config.command not in COMMANDS:
        bad.append(f"unknown command {config.command!r}")
    if config.gate not in GATES:
        bad.append(f"--gate must be one of {GATES}")
    if not 0 <= config.seed < 2**64:
        bad.append("seed must be an unsigned 64-bit integer")
    if config.parallelism < 1:
        bad.append("parallelism must be >= 1")

    for sec, keys in {"sample": ("n", "count"), "verify-det": ("n", "samples"),
                      "clt": ("n", "samples"), "tails": ("n", "samples"),
                      "deviations": ("n", "samples"), "completeness": ("n", "growth_n", "seeds"),
                      "bands": ("cases", "grid_points")}.items():
        for k in keys:
            v = num(sec, k)
            need(isinstance(v, int) and v >= 1, sec, k, "must be an integer >= 1")
    need((num("tails", "samples") or 0) >= 1000, "tails", "samples",
         "number tails need >= 1000 samples")

    d = "deviations"
    m = num(d, "m")
    need(isinstance(m, int) and m >= 3, d, "m", "requires m >= 3 (integer)")
    th = num(d, "theta")
    need(th is not None and 0 < th < 2 * math.sqrt(2), d, "theta",
         "requires theta in (0, 2 sqrt 2)")
    T = num(d, "T")
    need(isinstance(T, int) and T >= 2, d, "T", "requires an integer T >= 2")
    A = num(d, "A")
    need(A is not None and A > 1, d, "A", "requires A > 1")
    cut = num(d, "cutoff")
    n = num(d, "n")
    need(cut is not None and T is not None and cut >= 2 * T, d, "cutoff", "requires cutoff >= 2T")
    need(cut is not None and n is not None and cut <= n / 2, d, "cutoff",
         "requires cutoff <= n/2 (sample window)")
    need((num(d, "conv_tol") or 0) > 0, d, "conv_tol", "must be > 0")
    for lam in _as_list(config.params.get(d, {}).get("lambdas", [])):
        need(isinstance(lam, (int, float)) and abs(lam) <= 2, d, "lambdas", "|lambda| <= 2")

    sm = num("bands", "seminorm_m")
    need(isinstance(sm, int) and sm >= 3, "bands", "seminorm_m", "requires m >= 3 (integer)")

    c = "completeness"
    rt = num(c, "rank_tol")
    need(rt is not None and 0 < rt < 1, c, "rank_tol", "must lie in (0, 1)")
    Tg = _as_list(config.params.get(c, {}).get("T_grid", []))
    gn = num(c, "growth_n")
    need(all(isinstance(t, (int, float)) and t > 1 for t in Tg), c, "T_grid", "entries must be > 1")
    need(gn is not None and Tg and max(Tg) <= gn / 2, c, "T_grid", "max T must fit the window n/2")
    need((num(c, "seeds") or 0) >= 1, c, "seeds", "must be >= 1")

    v = "verify-det"
    need(config.params.get(v, {}).get("phi_plus") in ("families", "zero"), v, "phi_plus",
         "must be 'families' or 'zero'")
    for s in _as_list(config.params.get(v, {}).get("gap_s", [])):
        need(isinstance(s, (int, float)) and 0 < s <= 16, v, "gap_s", "gap lengths in (0, 16]")
    eps, wid = num(v, "bump_eps"), num(v, "bump_width")
    if eps is not None and wid is not None and wid > 0:
        need(fn.Bump(eps, wid).sup_deriv() < 1, v, "bump_eps", "sup|omega'| must be < 1")
    for k in ("widom_tol", "bogc_tol", "richardson_tol", "toeplitz_tol"):
        need((num(v, k) or 0) > 0, v, k, "must be > 0")
    return bad


# ---------------------------------------------------------------- records

def check(name: str, passed: bool, gating: bool = True, lhs=None, rhs=None, relerr=None,
          p_value=None, **details) -> dict:
    rec = {"name": name, "lhs": _num(lhs), "rhs": _num(rhs), "pass": bool(passed),
           "gating": bool(gating)}
    if relerr is not None:
        rec["relerr"] = float(relerr)
    if p_value is not None:
        rec["p_value"] = float(p_value)
    if details:
        rec["details"] = _jsonable(details)
    return rec


def _num(v):
    if v is None:
        return None
    if isinstance(v, complex) or np.iscomplexobj(v):
        v = complex(v)
        return float(v.real) if v.imag == 0 else [float(v.real), float(v.imag)]
    return float(v)


def _jsonable(o):
    if isinstance(o, dict):
        return {str(k): _jsonable(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_jsonable(v) for v in o]
    if isinstance(o, np.ndarray):
        return _jsonable(o.tolist())
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (complex, np.complexfloating)):
        return _num(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, float) and not math.isfinite(o):
        return str(o)
    return o


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (complex, np.complexfloating)):
        return repr(complex(v))
    return str(v)


def write_csv(path: Path, header, rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    path.write_bytes(buf.getvalue().encode())


def _relerr(a, b) -> float:
    a, b = complex(a), complex(b)
    return abs(a - b) / max(abs(b), 1e-300)


def _bank(cfg: RunConfig, sec: str, n: int | None = None) -> np.ndarray:
    s = cfg.section(sec)
    return sampler.cached_bank(int(n or s["n"]), int(s.get("samples", 4000)), cfg.seed,
                               cfg.parallelism)


def _exploratory(cfg: RunConfig) -> bool:
    return cfg.gate != "exploratory-off"


# ---------------------------------------------------------------- suites

def suite_sample(cfg: RunConfig, out: Path):
    s = cfg.section("sample")
    rows, checks = [], []
    for k in range(int(s["index"]), int(s["index"]) + int(s["count"])):
        X = sampler.sample_configuration(int(s["n"]), cfg.seed, k)
        stem = f"sample_n{int(s['n'])}_s{cfg.seed}_i{k}"
        sampler.persist(X, out / f"{stem}.cfg")
        sampler.export_csv(X, out / f"{stem}.csv")
        back = sampler.load(out / f"{stem}.cfg")
        checks.append(check(f"roundtrip_{k}", back.same_as(X)))
        rows.append((k, len(X), X.L))
    return checks, {"samples": (("index", "count", "L"), rows)}


def _wdet_descriptors():
    H = lambda f: sc.Hardy(f, 1)  # noqa: E731
    gb = [H(sc.ScaledTest.gauss_band(mu, sg, amp=a)) for mu, sg, a in
          ((4, .5, .3), (2, .25, .3), (3, .375, .2), (6, .75, .2), (4, .5, -.25))]
    widom = [H(sc.ScaledTest("cauchy", 1.0, 0.3)), H(sc.ScaledTest("cauchy", 0.5, 0.2)),
             H(sc.ScaledTest("cauchy", 2.0, 0.4)), gb[0], gb[1]]
    return widom, gb


def suite_bands(cfg: RunConfig, out: Path):
    s = cfg.section("bands")
    rng = np.random.default_rng(sampler.sub_seed(cfg.seed, 5))
    checks, rows = [], []
    lam = np.linspace(-3.0, 3.0, int(s["grid_points"]))
    worst = 0.0
    for case in range(int(s["cases"])):
        T = float(rng.uniform(2, 64))
        m = int(rng.integers(3, 7))
        d = float(rng.uniform(T, 2 * T))
        A = float(rng.uniform(1.25, 4))
        dec = sc.band_decompose(d, A, T, m)
        err = float(np.max(np.abs(dec.reconstruct(lam) - sc.fourier_eval(sc.FDA(d, A), lam))))
        worst = max(worst, err)
        rows.append((case, d, A, T, m, err))
    checks.append(check("band_reconstruction", worst <= s["recon_tol"], lhs=worst,
                        rhs=s["recon_tol"]))
    anchors = []
    for T in _as_list(s["anchor_T"]):
        v = sc.sobolev_seminorm(sc.LogBand(float(T)), 0.5)
        r = _relerr(v, 2 * math.log(T))
        anchors.append((T, v, 2 * math.log(T), r))
        checks.append(check(f"log_band_anchor_T{T}", r <= s["anchor_tol"], lhs=v,
                            rhs=2 * math.log(T), relerr=r))
    Cs, srows = [], []
    for T in _as_list(s["seminorm_T"]):
        res = dl.band_seminorm_constant(float(T), int(s["seminorm_m"]), float(s["seminorm_A"]),
                                        int(s["seminorm_d_points"]))
        Cs.append(res["C"])
        srows += [(T, r["d"], r["l"], r["seminorm"], r["ratio"]) for r in res["rows"]]
    drift = abs(Cs[-1] - Cs[0]) / Cs[0]
    checks.append(check("band_seminorm_constant_stability", drift <= s["stability_tol"],
                        lhs=Cs[-1], rhs=Cs[0], relerr=drift, C=Cs))
    return checks, {"reconstruction": (("case", "d", "A", "T", "m", "max_abs_err"), rows),
                    "anchor": (("T", "seminorm", "two_log_T", "relerr"), anchors),
                    "band_seminorms": (("T", "d", "l", "seminorm", "ratio"), srows)}


def suite_verify_det(cfg: RunConfig, out: Path):
    s = cfg.section("verify-det")
    zero = s["phi_plus"] == "zero"
    checks, rows = [], []

    def add(rec: oe.CheckRecord, tol, gating=True, extra=None):
        ok = rec.relerr <= tol
        if extra is not None:
            ok = ok and extra[0]
        checks.append(check(rec.name, ok, gating, rec.lhs, rec.rhs, rec.relerr, **rec.details))
        rows.append((rec.name, complex(rec.lhs), complex(rec.rhs), rec.relerr))

    widom, gb = ([sc.Zero()], [sc.Zero()]) if zero else _wdet_descriptors()
    t0 = time.perf_counter()
    for k, f in enumerate(widom):
        rec = oe.widom_check(f, panels=16)
        rec.name = f"widom_{k}"
        add(rec, s["widom_tol"])
    wt = time.perf_counter() - t0
    checks.append(check("widom_runtime", wt <= s["widom_time_limit"], lhs=wt,
                        rhs=s["widom_time_limit"]))
    for k, f in enumerate(gb):
        for a in (math.pi, 2 * math.pi):
            rec = oe.bogc_check(f, a)
            rec.name = f"bogc_{k}_a{a:.4f}"
            rich = rec.details.get("richardson", 0.0)
            add(rec, s["bogc_tol"], extra=(rich <= s["richardson_tol"],))

    bank = _bank(cfg, "verify-det")
    if zero:
        gm1 = lambda x: np.zeros_like(np.asarray(x, float))  # noqa: E731
    else:
        gm1 = lambda x: 0.2 * np.exp(-np.asarray(x, float) ** 2 / 2)  # noqa: E731
    rec = oe.toeplitz_sine_check(gm1)
    mc = oe.mc_multiplicative(lambda x: 1 + gm1(x), bank)
    z = abs(mc["mean"] - complex(rec.rhs).real) / mc["se"] if mc["se"] > 0 else \
        abs(mc["mean"] - complex(rec.rhs).real) / 1e-15
    add(rec, s["toeplitz_tol"])
    checks.append(check("toeplitz_sine_mc", z <= s["mc_sigmas"], lhs=mc["mean"], rhs=rec.rhs,
                        se=mc["se"], z=z))
    rows.append(("toeplitz_sine_mc", mc["mean"], complex(rec.rhs), z))

    n_s = bank.shape[0]
    for gs in _as_list(s["gap_s"]):
        p = oe.gap_probability(float(gs))
        emp = float(np.mean(~np.any((bank >= 0) & (bank < gs), axis=1)))
        se = math.sqrt(max(emp * (1 - emp), 1.0 / n_s) / n_s)
        z = abs(emp - p) / se
        checks.append(check(f"gap_s{gs}", z <= s["gap_sigmas"], lhs=emp, rhs=p, se=se, z=z))
        rows.append((f"gap_s{gs}", emp, p, z))
    c4 = oe.gap_series_coefficient()
    r = _relerr(c4, oe.GAP_C4)
    checks.append(check("gap_series_c4", r <= s["gap_series_tol"], lhs=c4, rhs=oe.GAP_C4, relerr=r))
    rows.append(("gap_series_c4", c4, oe.GAP_C4, r))

    bump = fn.Bump(float(s["bump_eps"]), float(s["bump_width"]))
    for n in _as_list(s["xi_n"]):
        bk = sampler.cached_bank(int(n), int(s["samples"]), cfg.seed, cfg.parallelism)
        xs = [fn.jacobian_xi(bump, X, period=int(n)).value
              for X in sampler.bank_configurations(bk, cfg.seed)]
        v = np.asarray(xs)
        se = float(v.std(ddof=1) / math.sqrt(v.size))
        z = abs(v.mean() - 1) / se
        checks.append(check(f"quasi_invariance_n{n}", z <= s["xi_sigmas"], lhs=v.mean(), rhs=1.0,
                            se=se, bias=float(v.mean() - 1), z=z))
        rows.append((f"quasi_invariance_n{n}", float(v.mean()), 1.0, z))
    return checks, {"checks": (("name", "lhs", "rhs", "relerr_or_z"), rows)}


def suite_clt(cfg: RunConfig, out: Path):
    s = cfg.section("clt")
    bank = _bank(cfg, "clt")
    f = sc.ScaledTest.gauss_band(float(s["mu"]), float(s["mu"]) * float(s["sigma_ratio"]))
    recs = oe.clt_diagnostics(f, [float(a) for a in _as_list(s["scales"])], bank)
    ks = [r.ks_distance for r in recs]
    checks = [check("clt_ks_decreases", ks[-1] < ks[0], lhs=ks[-1], rhs=ks[0], ks=ks),
              check("clt_ks_final", ks[-1] < s["ks_max"], lhs=ks[-1], rhs=s["ks_max"])]
    rows = [(r.a, r.ks_distance, r.variance, r.mean) for r in recs]

    vrows = []
    phis = (("indicator_0_4", lambda t: ((t >= 0) & (t < 4)).astype(float), (0.0, 4.0), (0.0, 4.0)),
            ("gaussian_bump", lambda t: np.exp(-np.asarray(t) ** 2 / 2), (-9.0, 9.0), ()))
    for name, phi, sup, br in phis:
        pred = float(fn.variance_predict(phi, sup, br)["value"])
        S = phi(bank).sum(axis=1)
        dev = (S - S.mean()) ** 2
        var = float(dev.sum() / (S.size - 1))
        se = float(dev.std(ddof=1) / math.sqrt(S.size))
        z = abs(var - pred) / se
        checks.append(check(f"variance_{name}", z <= s["variance_sigmas"], lhs=var, rhs=pred,
                            se=se, z=z))
        vrows.append((name, var, se, pred, z))
    return checks, {"clt": (("a", "ks", "variance", "mean"), rows),
                    "variance": (("phi", "mc_variance", "se", "quadrature", "z"), vrows)}


def suite_tails(cfg: RunConfig, out: Path):
    s = cfg.section("tails")
    bank = _bank(cfg, "tails")
    small = dl.tail_counts(bank, (0.0, float(s["small_interval"])), int(s["kmax"]))
    curve = small["small_interval_curve"]
    checks = []
    if curve is not None:
        checks.append(check("small_interval_bound_k2", small["p_ge"][2] <= curve[2],
                            lhs=small["p_ge"][2], rhs=curve[2]))
    fit = dl.tail_counts(bank, (0.0, float(s["fit_interval"])), int(s["kmax"]))
    checks.append(check("alpha_positive", fit["alpha_admissible"] > 0 and fit["alpha_ls"] > 0,
                        lhs=fit["alpha_admissible"], rhs=0.0, alpha_ls=fit["alpha_ls"]))
    checks.append(check("superexponential_decay",
                        dl.superexponential(fit["p_ge"], int(s["superexp_kmax"])),
                        p_ge=fit["p_ge"]))
    if "exp_square" in fit:
        es = fit["exp_square"]
        checks.append(check("exp_square_moment", es["empirical"] <= es["bound"],
                            lhs=es["empirical"], rhs=es["bound"], gamma=es["gamma"]))
    rows = []
    for label, r in (("small", small), ("fit", fit)):
        for k in r["k"]:
            c = r["small_interval_curve"][k] if r["small_interval_curve"] else ""
            rows.append((label, k, r["p_ge"][k], r["p_eq"][k], c))
    return checks, {"tails": (("interval", "k", "p_ge", "p_eq", "bound_curve"), rows)}


def suite_deviations(cfg: RunConfig, out: Path):
    s = cfg.section("deviations")
    spec = dl.DeviationSpec(int(s["T"]), int(s["m"]), float(s["A"]), float(s["theta"]),
                            float(s["cutoff"]), float(s["conv_tol"]))
    bank = _bank(cfg, "deviations")
    bs = dl.BandSums(spec)
    S, ok = bs.batch(bank)
    ex = dl.count_exceedances(S, ok, bs)
    checks = [check("exclusion_rate", ex.exclusion_rate <= s["max_exclusion"],
                    lhs=ex.exclusion_rate, rhs=s["max_exclusion"])]
    Z = ex.joint.astype(float)
    if Z.mean() > 0:
        pz = dl.paley_zygmund_bound(Z.mean(), float(np.mean(Z**2)), 0.5)
        emp = float(np.mean(Z > 0.5 * Z.mean()))
        checks.append(check("paley_zygmund_consistency", pz <= emp + 1e-12, lhs=pz, rhs=emp))
    if _exploratory(cfg):
        ratios = [v for v in ex.ratio.values() if np.isfinite(v)]
        checks.append(check("p_w", ex.p_w >= s["min_p_w"], False, ex.p_w, s["min_p_w"]))
        checks.append(check("vd_ratio_bounded", bool(ratios) and min(ratios) > 0, False,
                            min(ratios) if ratios else None, max(ratios) if ratios else None,
                            c=min(ratios) if ratios else None, C=max(ratios) if ratios else None))
        for lam in _as_list(s["lambdas"]):
            r = dl.exp_moment_ratio(S, ok, bs, float(lam))
            checks.append(check(f"exp_moment_ratio_{lam}",
                                s["ratio_low"] <= r["ratio"] <= s["ratio_high"], False,
                                r["ratio"], 1.0, ess=r["ess"], flagged=r["flagged"]))
    pairs = dl.pair_probabilities(S, ok, bs)
    return checks, {
        "deviations": (("seed", "d", "in_Vd", "in_W"), ex.rows),
        "counts": (("d", "count", "ratio"), [(d, ex.counts[d], ex.ratio[d]) for d in ex.counts]),
        "pairs": (("d1", "d2", "l", "p", "prediction"),
                  [(p["d1"], p["d2"], p["l"], p["p"], p["prediction"]) for p in pairs])}


def _completeness_seed(X, A, T_grid, rank_tol):
    r1 = cl.l2_trend(X, cl.nearest_particles(X, 1), 1)
    r2 = cl.l2_trend(X, cl.nearest_particles(X, 2), 2)
    I = cl.interval_with_count(X, 2)
    cd = cl.codim_gram(X, I, rank_tol=rank_tol)
    return r1, r2, I, cd


def suite_completeness(cfg: RunConfig, out: Path):
    s = cfg.section("completeness")
    rank_tol = float(s["rank_tol"])
    checks = []
    # lattice controls are exact rank counts and gate
    codims = []
    for k in (0, 1, 2):
        rm = tuple(float(v) for v in range(k))
        I = (-0.5, k - 0.5) if k else (0.25, 0.75)
        r = cl.codim_gram(cl.lattice(32, rm), I, exterior_window=32, rank_tol=rank_tol)
        codims.append((k, r.codim, r.sweep))
        checks.append(check(f"lattice_minus_{k}_codim", r.codim == k, lhs=r.codim, rhs=k,
                            sweep=r.sweep))
    lat = cl.lattice(64, (0.0,))
    lat_trend = cl.l2_trend(lat, (), 1)
    checks.append(check("lattice_sinc_plateau", lat_trend.verdict == "plateauing",
                        lhs=lat_trend.slope, rhs=cl.PLATEAU_SLOPE))
    trend_rows, codim_rows, growth_rows = [], [], []
    if not _exploratory(cfg):
        return checks, {"codim_lattice": (("k", "codim", "sweep"), codims)}

    seeds = int(s["seeds"])
    bank = sampler.cached_bank(int(s["n"]), max(seeds, 1), cfg.seed, cfg.parallelism)[:seeds]
    confs = sampler.bank_configurations(bank, cfg.seed)
    args = (float(s["A"]), [float(t) for t in _as_list(s["T_grid"])], rank_tol)
    if cfg.parallelism > 1:
        from joblib import Parallel, delayed
        res = Parallel(n_jobs=cfg.parallelism)(delayed(_completeness_seed)(X, *args) for X in confs)
    else:
        res = [_completeness_seed(X, *args) for X in confs]
    v1 = [r[0].verdict for r in res]
    v2 = [r[1].verdict for r in res]
    for i, (r1, r2, I, cd) in enumerate(res):
        for tr in (r1, r2):
            tag = f"{len(tr.removed)}removed_p{tr.weight_power}"
            for R, val in zip(tr.R_grid, tr.partial_integrals):
                trend_rows.append((i, tag, R, val, tr.verdict))
        codim_rows.append((i, I[0], I[1], cd.interior_count, cd.codim, cd.sweep["0.0001"],
                           cd.sweep["1e-06"], cd.sweep["1e-08"], cd.exterior_count, cd.frame_dim,
                           cd.interior_residuals[0] if cd.interior_residuals else ""))
    checks.append(check("trend_one_removed_growing", v1.count("growing") > seeds / 2, False,
                        v1.count("growing"), seeds / 2, verdicts=v1))
    checks.append(check("trend_two_removed_plateauing", v2.count("plateauing") > seeds / 2, False,
                        v2.count("plateauing"), seeds / 2, verdicts=v2))
    match = sum(1 for r in res if r[3].codim == r[3].interior_count - 1)
    checks.append(check("codim_equals_count_minus_one", match > seeds / 2, False, match,
                        seeds / 2, codims=[r[3].codim for r in res]))

    gbank = sampler.cached_bank(int(s["growth_n"]), max(seeds, 1), cfg.seed,
                                cfg.parallelism)[:seeds]
    A, T_grid = args[0], args[1]
    mx, p1, p2 = [], [], []
    for i, X in enumerate(sampler.bank_configurations(gbank, cfg.seed)):
        g = cl.max_growth(X, A, T_grid)
        sm = cl.max_growth(X, A, T_grid, form="smoothed")
        a1 = cl.lp_growth(X, A, 1, T_grid)
        a2 = cl.lp_growth(X, A, 2, T_grid)
        mx.append(g.exponents)
        p1.append(a1.exponents[-1])
        p2.append(a2.exponents[-1])
        for T, e, es, l1, l2 in zip(T_grid, g.exponents, sm.exponents, a1.exponents, a2.exponents):
            growth_rows.append((i, T, e, es, l1, l2))
    med = np.median(np.asarray(mx), axis=0)
    checks.append(check("max_growth_median", s["growth_low"] <= med[-1] <= s["growth_high"], False,
                        med[-1], math.sqrt(2), medians=med))
    checks.append(check("max_growth_increasing", bool(np.all(np.diff(med) > 0)), False,
                        medians=med))
    frac = float(np.mean(np.asarray(p2) > np.asarray(p1)))
    checks.append(check("lp_order_p2_gt_p1", frac >= s["order_fraction"], False, frac,
                        s["order_fraction"]))
    return checks, {
        "trends": (("seed", "case", "R", "integral", "verdict"), trend_rows),
        "codim": (("seed", "I_lo", "I_hi", "interior_count", "codim", "codim_tol1e-4",
                   "codim_tol1e-6", "codim_tol1e-8", "exterior_count", "frame_dim",
                   "min_interior_residual"), codim_rows),
        "codim_lattice": (("k", "codim", "sweep"), codims),
        "growth": (("seed", "T", "max_exponent", "max_exponent_smoothed", "lp1", "lp2"),
                   growth_rows)}


SUITES = {"sample": suite_sample, "bands": suite_bands, "verify-det": suite_verify_det,
          "clt": suite_clt, "tails": suite_tails, "deviations": suite_deviations,
          "completeness": suite_completeness}


# ---------------------------------------------------------------- run / report

def build_id() -> str:
    try:
        v = metadata.version("sinelab")
    except metadata.PackageNotFoundError:
        v = "0+unknown"
    try:
        here = Path(__file__).resolve().parent
        g = subprocess.run(["git", "describe", "--always", "--dirty"], cwd=here,
                           capture_output=True, text=True, timeout=5)
        if g.returncode == 0 and g.stdout.strip():
            return f"sinelab-{v}-g{g.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return f"sinelab-{v}"


def run(config: RunConfig) -> dict:
    """Dispatch one command and write its artifacts.

    Returns the report dict; ``report["exit_code"]`` is 1 iff a gating check
    failed (or the suite raised, in which case the partial report is still
    written).
    """
    bad = validate(config)
    if bad:
        raise ConfigError("; ".join(bad), None, config.source)
    if config.command == "report":
        return aggregate(config.output_dir)
    out = config.output_dir / config.command
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    error = None
    checks, tables = [], {}
    try:
        checks, tables = SUITES[config.command](config, out)
    except Exception as e:  # noqa: BLE001 - partial reports are still written
        error = f"{type(e).__name__}: {e}"
    for name, (header, rows) in sorted(tables.items()):
        write_csv(out / f"{name}.csv", header, rows)
    gating_fail = any(c["gating"] and not c["pass"] for c in checks) or error is not None
    report = {"schema_version": SCHEMA_VERSION, "command": config.command,
              "config": _jsonable(config.echo()), "build": build_id(),
              "checks": _jsonable(checks), "error": error,
              "passed": sum(c["pass"] for c in checks), "total": len(checks),
              "gating_failures": [c["name"] for c in checks if c["gating"] and not c["pass"]],
              "wall_time": time.perf_counter() - t0, "exit_code": int(gating_fail)}
    with open(out / "report.json", "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
    return report


def aggregate(directory) -> dict:
    """Summarise every report.json below ``directory`` into summary.json."""
    d = Path(directory)
    suites = {}
    for p in sorted(d.rglob("report.json")):
        rep = json.loads(p.read_text())
        e = suites.setdefault(rep["command"], {"reports": 0, "passed": 0, "total": 0,
                                               "gating_failures": []})
        e["reports"] += 1
        e["passed"] += rep["passed"]
        e["total"] += rep["total"]
        e["gating_failures"] += rep["gating_failures"]
    summary = {"schema_version": SCHEMA_VERSION, "command": "report", "build": build_id(),
               "suites": suites,
               "exit_code": int(any(s["gating_failures"] for s in suites.values()))}
    d.mkdir(parents=True, exist_ok=True)
    with open(d / "summary.json", "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
    return summary


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="sinelab", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", type=Path)
    ap.add_argument("--seed", type=int)
    ap.add_argument("--out")
    ap.add_argument("--jobs", type=int)
    ap.add_argument("--gate", choices=GATES)
    a = ap.parse_args(argv)
    try:
        text = a.config.read_text() if a.config else None
        cfg = make_config(a.command, text, str(a.config or "<config>"), a.seed, a.out, a.jobs,
                          a.gate)
        rep = run(cfg)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    if a.command == "report":
        for name, s in sorted(rep["suites"].items()):
            print(f"{name}: {s['passed']}/{s['total']} checks passed")
    else:
        for c in rep["checks"]:
            flag = "PASS" if c["pass"] else "FAIL"
            print(f"{flag} {c['name']}" + ("" if c["gating"] else " (exploratory)"))
        if rep["error"]:
            print(f"error: {rep['error']}", file=sys.stderr)
    return rep["exit_code"]


if __name__ == "__main__":
    sys.exit(main())
