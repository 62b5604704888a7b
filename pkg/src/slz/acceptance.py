"""Acceptance checks on problems with closed-form spectra.

Each check returns a :class:`CheckResult` holding the measured quantities,
so the same code backs ``slz validate`` and the test suite. Thresholds are
fixed here and never loosened to make a check pass.
"""

from __future__ import annotations

import math
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.optimize import brentq
from scipy.special import gammaln

from .charfn import (
    HadamardProduct,
    charfn_F0,
    estimate_order,
    exponent_of_convergence,
    nonprincipal_normalized,
    principal_normalized,
)
from .convrate import fig1_statistics, product_decreasing, propconv_residual, total_variation, truncation_sweep
from .eigensolve import bc_eigs, dirichlet_eigs
from .partialzeta import classify_divergence, lg_xi, zeta_direct, zeta_recursive
from .problems import catalog_problem
from .propagate import propagate, wronskian
from .speczeta import ZetaQuery, zeta_contour, zeta_sum

__all__ = ["CHECKS", "CheckResult", "run_all"]


@dataclass
class CheckResult:
    number: int
    title: str
    passed: bool
    details: dict = field(default_factory=dict)
    failures: list[str] = field(default_factory=list)
    seconds: float = 0.0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        extra = f" ({'; '.join(self.failures)})" if self.failures else ""
        return f"criterion {self.number:2d} {status}  {self.title}  [{self.seconds:.1f} s]{extra}"


class _Checker:
    def __init__(self):
        self.details: dict = {}
        self.failures: list[str] = []

    def record(self, key: str, value, ok: bool):
        self.details[key] = value
        if not ok:
            self.failures.append(key)


def _affine_second_diff(vals: np.ndarray) -> float:
    return float(np.max(np.abs(np.diff(vals, 2))))


# ---------------------------------------------------------------------------


def check_basel(ck: _Checker):
    free = catalog_problem("free")
    eigs = dirichlet_eigs(free, 0.0, math.pi, 60)
    z1 = zeta_direct(eigs, 1)
    z2 = zeta_direct(eigs, 2)
    tab = zeta_recursive(free, 0.0, [math.pi], ell_max=2)
    r1, r2 = tab(1, math.pi), tab(2, math.pi)
    ck.record("direct zeta(1) error", abs(z1 - math.pi**2 / 6), abs(z1 - math.pi**2 / 6) < 1e-8)
    ck.record("recursive zeta(1) error", abs(r1 - math.pi**2 / 6), abs(r1 - math.pi**2 / 6) < 1e-8)
    ck.record("direct zeta(2) error", abs(z2 - math.pi**4 / 90), abs(z2 - math.pi**4 / 90) < 1e-8)
    ck.record("recursive zeta(2) error", abs(r2 - math.pi**4 / 90), abs(r2 - math.pi**4 / 90) < 1e-8)


def check_harmonic_spectrum(ck: _Checker):
    full = catalog_problem("harmonic_full")
    e = dirichlet_eigs(full, -6.0, 6.0, 9).eigs
    err = np.abs(e - (2 * np.arange(9) + 1))
    ck.record("full-line max error n<=8", float(err.max()), bool(err.max() < 1e-6))
    half = catalog_problem("harmonic_half")
    d = bc_eigs(half, 0.0, 8.0, "dirichlet", "dirichlet", 4).eigs
    n = bc_eigs(half, 0.0, 8.0, "neumann", "dirichlet", 4).eigs
    ed = float(np.max(np.abs(d - (4 * np.arange(4) + 3))))
    en = float(np.max(np.abs(n - (4 * np.arange(4) + 1))))
    ck.record("half-line Dirichlet max error n<=3", ed, ed < 1e-6)
    ck.record("half-line Neumann max error n<=3", en, en < 1e-6)


def check_laguerre_fig1(ck: _Checker):
    lag = catalog_problem("laguerre", gamma=1.0)
    e = bc_eigs(lag, 1e-6, 40.0, "friedrichs", "dirichlet", 5).eigs
    err = float(np.max(np.abs(e - np.arange(5))))
    ck.record("lambda_j error j<=5", err, err < 1e-4)
    xs = np.logspace(math.log10(20.0), 2.0, 10)
    sweep = truncation_sweep(lag, [1, 2, 4, 8], xs)
    stats = fig1_statistics(sweep)
    for j in (2, 4, 8):
        sl = stats.slopes[j]
        ck.record(f"slope f_{j}", sl, abs(sl - 1.0) <= 0.1)
    for k, j in enumerate(sweep.j_list):
        inc = bool(np.all(np.diff(stats.g[k]) > 0))
        ck.record(f"g_{j} increasing", inc, inc)


def check_partial_zeta_asymptotics(ck: _Checker):
    xs = np.array([10.0, 20.0, 40.0])
    harm = catalog_problem("harmonic_half")
    zh = zeta_recursive(harm, 0.0, xs, ell_max=1)(1) - 0.5 * np.log(xs)
    ck.record("harmonic zeta(1) - ln(x)/2 variation", total_variation(zh), total_variation(zh) < 0.05)
    lag = catalog_problem("laguerre", gamma=1.0)
    zl = zeta_recursive(lag, 1e-6, xs, ell_max=1, shift=-0.5)(1) - np.log(xs)
    ck.record("laguerre zeta(1) - ln x variation", total_variation(zl), total_variation(zl) < 0.05)
    airy = catalog_problem("airy")
    za = zeta_recursive(airy, 0.0, xs, ell_max=1)(1) - np.sqrt(xs)
    ck.record("power d=1 zeta(1) - sqrt(x) variation", total_variation(za), total_variation(za) < 0.1)


def check_lg_agreement(ck: _Checker):
    xs = np.array([10.0, 20.0, 30.0, 40.0])
    c = 1.0
    for name in ("harmonic_half", "airy"):
        prob = catalog_problem(name)
        zt = zeta_recursive(prob, c, xs, ell_max=1)(1)
        diff = np.array([lg_xi(prob, 1, c, x) for x in xs]) - zt
        ck.record(f"{name} lg_xi(1) - zeta(1) variation", total_variation(diff), total_variation(diff) < 0.1)
    for d in (1.0, 2.0):
        prob = catalog_problem("power", d=d)
        ok1 = classify_divergence(prob, 1)
        ok2 = not classify_divergence(prob, 2)
        ck.record(f"d={d:g}: l=1 divergent", ok1, ok1)
        ck.record(f"d={d:g}: l=2 convergent", ok2, ok2)


def _vanishes(F, lam: float) -> tuple[float, float]:
    zs = np.concatenate([[lam], lam + np.linspace(-0.5, 0.5, 21)])
    v = np.abs(F(zs))
    return float(v[0]), float(np.median(v[1:]))


def check_charfn(ck: _Checker):
    airy = catalog_problem("airy")
    eigs = dirichlet_eigs(airy, 0.0, 30.0, 3).eigs
    lam1 = float(eigs[0])
    ck.record("airy first eigenvalue", lam1, abs(lam1 - 2.33811) < 1e-4)
    F = charfn_F0(airy, [30.0, 40.0, 50.0])
    for k, lam in enumerate(eigs, 1):
        at, med = _vanishes(F, float(lam))
        ck.record(f"airy |F0(lambda_{k})| / median", at / med, at < 1e-3 * med)
    harm = catalog_problem("harmonic_full")
    Fh = charfn_F0(harm, [5.0, 6.0, 7.0])
    zs = np.arange(-3.0, 0.75, 0.5)
    vals = Fh.log(zs).real + gammaln((1 - zs) / 2)
    sd = _affine_second_diff(vals)
    ck.record("harmonic ln|F0 Gamma((1-z)/2)| second differences", sd, sd < 1e-3)
    lag = catalog_problem("laguerre", gamma=1.0)
    Fl = charfn_F0(lag, [20.0, 30.0, 40.0])
    for k in range(3):
        root = brentq(lambda t: float(Fl(np.array([t]))[0].real), k - 0.4, k + 0.4, xtol=1e-12)
        ck.record(f"laguerre F0 zero near {k}", root, abs(root - k) < 1e-3)


def _tuple_log_ratio(sol: Callable, x: float, za, wa) -> float:
    lz = sol(np.asarray(za, dtype=complex), x)
    lw = sol(np.asarray(wa, dtype=complex), x)
    return float(np.sum(lz).real - np.sum(lw).real)


def check_tuples(ck: _Checker):
    cases = {
        "harmonic_full": dict(c=0.0, X=[5.0, 6.0, 7.0], theta_x=[4.0, 6.0, 8.0], u_x=[2.0, 4.0, 6.0]),
        "airy": dict(c=0.0, X=[30.0, 40.0, 50.0], theta_x=[100.0, 300.0, 1000.0], u_x=[100.0, 300.0, 1000.0]),
    }
    for name, cfg in cases.items():
        prob = catalog_problem(name)

        def theta(z, x, prob=prob, cfg=cfg):
            return nonprincipal_normalized(prob, "right", z, x, cfg["c"], cfg["X"]).log()

        def u(z, x, prob=prob):
            return principal_normalized(prob, "right", z, x).log()

        for label, sol, xs in (("theta", theta, cfg["theta_x"]), ("u", u, cfg["u_x"])):
            good = _tuple_log_ratio(sol, xs[-1], [1.0, -1.0], [0.0, 0.0])
            dev = abs(math.expm1(good))
            ck.record(f"{name} {label} matched |ratio - 1|", dev, dev < 2e-2)
            bad = np.array([_tuple_log_ratio(sol, x, [1.0], [0.0]) for x in xs])
            steps = np.diff(bad)
            mono = bool(np.all(steps > 0) or np.all(steps < 0))
            ck.record(f"{name} {label} mismatched log-trend monotone", bad.tolist(), mono)


def check_orders(ck: _Checker):
    n = np.arange(1, 401, dtype=float)
    k1 = exponent_of_convergence(n**2)
    ck.record("kappa {n^2}", k1, abs(k1 - 0.5) <= 0.05)
    k2 = exponent_of_convergence(2 * np.arange(400) + 1.0)
    ck.record("kappa harmonic", k2, abs(k2 - 1.0) <= 0.05)
    airy = catalog_problem("airy")
    ea = dirichlet_eigs(airy, 0.0, 60.0, 40).eigs
    k3 = exponent_of_convergence(ea)
    ck.record("kappa airy", k3, abs(k3 - 1.5) <= 0.1)
    F = charfn_F0(airy, [80.0, 120.0, 160.0], tol=1e-4)
    rho = estimate_order(F, [10.0, 15.0, 20.0, 25.0, 30.0])
    ck.record("order airy F0", rho, abs(rho - 1.5) <= 0.15)


def check_spectral_zeta(ck: _Checker):
    airy = catalog_problem("airy")
    eigs = dirichlet_eigs(airy, 0.0, 60.0, 40)
    F = charfn_F0(airy, [30.0, 40.0, 50.0])
    cache: dict = {}
    for s in (1.8, 2.5):
        ref = zeta_sum(eigs, s)
        val = zeta_contour(F, ZetaQuery(s), cache=cache).value
        rel = abs(val - ref) / abs(ref)
        ck.record(f"airy s={s} relative difference", rel, rel < 1e-3)
    alt = zeta_contour(F, ZetaQuery(2.5, psi=0.6 * math.pi)).value
    base = zeta_contour(F, ZetaQuery(2.5), cache=cache).value
    ck.record("airy psi-independence", abs(alt - base) / abs(base), abs(alt - base) / abs(base) < 1e-3)
    alt_r = zeta_contour(F, ZetaQuery(2.5, R=1.5)).value
    ck.record("airy R-independence", abs(alt_r - base) / abs(base), abs(alt_r - base) / abs(base) < 1e-3)
    free = catalog_problem("free")
    fe = dirichlet_eigs(free, 0.0, math.pi, 200)
    H = HadamardProduct(fe.eigs, 0)
    for s in (0.8, 1.5):
        ref = zeta_sum(fe, s)
        vals = [zeta_contour(H, ZetaQuery(s, psi=psi, R=R)).value
                for psi, R in ((0.75 * math.pi, 0.5), (0.6 * math.pi, 0.5), (0.9 * math.pi, 0.5), (0.75 * math.pi, 0.9))]
        rel = abs(vals[0] - ref) / abs(ref)
        ck.record(f"free s={s} relative difference", rel, rel < 1e-3)
        spread = max(abs(v - vals[0]) for v in vals[1:]) / abs(ref)
        ck.record(f"free s={s} psi/R spread", spread, spread < 1e-6)


def check_residual(ck: _Checker):
    lag = catalog_problem("laguerre", gamma=1.0)
    xs = np.logspace(math.log10(20.0), 2.0, 10)
    sweep = truncation_sweep(lag, [1, 2, 4], xs)
    tab = zeta_recursive(lag, sweep.c, xs, ell_max=1, shift=-0.5)
    res = propconv_residual(sweep, 2, 4, tab)
    tv = total_variation(res)
    ck.record("residual (2,4) total variation", tv, tv < 0.2)
    for j in (1, 2, 4):
        for K in (2, 5, 10):
            ok = product_decreasing(sweep, j, K)
            ck.record(f"delta_{j} x^{K} decreasing", ok, ok)


def check_hygiene(ck: _Checker):
    # compact subintervals with z above q, where both solutions oscillate and W is well conditioned
    specs = {
        "airy": ({}, (0.0, 10.0), 15.0),
        "power": ({"d": 2.0}, (0.0, 3.0), 12.0),
        "harmonic_full": ({}, (-3.0, 3.0), 12.0),
        "harmonic_half": ({}, (0.0, 3.0), 12.0),
        "laguerre": ({"gamma": 1.0}, (0.5, 5.0), 3.5),
        "free": ({}, (0.0, math.pi), 1.5),
    }
    for name, (params, (a, b), z) in specs.items():
        prob = catalog_problem(name, **params)
        f = propagate(prob, z, a, 0.0, 1.0, b, tol=1e-10)
        g = propagate(prob, z, a, 1.0, 0.0, b, tol=1e-10, mesh=f.mesh)
        per_len = wronskian(f, g).drift / (b - a)
        ck.record(f"{name} Wronskian drift per unit length", per_len, per_len <= 1e-8)
    from .cli import main

    with tempfile.TemporaryDirectory() as tmp:
        outs = []
        for k in range(2):
            d = Path(tmp) / f"run{k}"
            argv = ["eig", "--problem", "harmonic_full", "--truncate", "-6", "6", "--n", "8", "--out", str(d)]
            code = main(argv)
            outs.append((code, {p.name: p.read_bytes() for p in sorted(d.iterdir())}))
        same = outs[0] == outs[1] and outs[0][0] == 0
        ck.record("byte-identical CLI reruns", same, same)


CHECKS: dict[int, tuple[str, Callable[[_Checker], None]]] = {
    1: ("Basel oracle", check_basel),
    2: ("harmonic spectrum", check_harmonic_spectrum),
    3: ("Laguerre spectrum and truncation statistics", check_laguerre_fig1),
    4: ("partial zeta asymptotics", check_partial_zeta_asymptotics),
    5: ("Liouville-Green agreement and divergence classes", check_lg_agreement),
    6: ("characteristic functions", check_charfn),
    7: ("normalized-solution tuple tests", check_tuples),
    8: ("order and exponent estimators", check_orders),
    9: ("spectral zeta cross-validation", check_spectral_zeta),
    10: ("convergence-rate residual and product test", check_residual),
    11: ("numerical hygiene", check_hygiene),
}


def run_check(number: int) -> CheckResult:
    title, fn = CHECKS[number]
    ck = _Checker()
    t0 = time.perf_counter()
    try:
        fn(ck)
    except Exception as exc:  # noqa: BLE001 - a crash is a failed criterion
        ck.failures.append(f"error: {type(exc).__name__}: {exc}")
    return CheckResult(number, title, not ck.failures, ck.details, ck.failures, time.perf_counter() - t0)


def run_all(numbers=None, echo: Callable[[str], None] | None = print) -> list[CheckResult]:
    results = []
    for k in numbers or sorted(CHECKS):
        r = run_check(k)
        if echo is not None:
            echo(r.line())
        results.append(r)
    return results
