"""Partial zeta values ``zeta(l; (c, x)) = sum_j lambda_j(c, x)^(-l)``.

Four routes are provided:

* :func:`zeta_direct` sums computed eigenvalues and adds a Weyl tail;
* :func:`zeta_recursive` reads the values off the Taylor coefficients of
  ``phi_c(z, x)`` in ``z``, obtained by integrating the chain
  ``(tau - s) phi_j = phi_{j-1}``;
* :func:`zeta1_integral` integrates the diagonal Green's function built
  from principal and nonprincipal solutions;
* :func:`lg_xi` evaluates the Liouville-Green integrals.
"""

from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import integrate

from .eigensolve import FRIEDRICHS_AUTO_EPS, EigenList, principal_data
from .problems import Problem
from .propagate import propagate_chain

__all__ = [
    "MIN_DIRECT_TERMS",
    "PartialZetaTable",
    "ZeroCrossingError",
    "choose_shift",
    "classify_divergence",
    "lg_coefficient",
    "lg_xi",
    "weyl_tail",
    "zeta1_integral",
    "zeta_direct",
    "zeta_recursive",
]

MIN_DIRECT_TERMS = 50


class ZeroCrossingError(RuntimeError):
    """``phi_{c,0}`` vanishes inside the working range."""

    def __init__(self, x: float):
        super().__init__(f"phi_c0 changes sign near x = {x:.17g}; pick another c or a lower shift")
        self.x = x


@dataclass
class PartialZetaTable:
    """Partial zeta values ``values[l - 1, i] = zeta(l; (c, xs[i]))``."""

    c: float
    xs: np.ndarray
    orders: np.ndarray
    values: np.ndarray
    method: str
    shift: float = 0.0

    def __call__(self, ell: int, x: float | None = None):
        row = self.values[int(ell) - 1]
        if x is None:
            return row
        i = int(np.argmin(np.abs(self.xs - x)))
        if not math.isclose(self.xs[i], x, rel_tol=1e-12, abs_tol=1e-12):
            raise KeyError(f"x = {x!r} is not on the table grid")
        return float(row[i])

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x", "l", "value", "method", "shift"])
        for i, x in enumerate(self.xs):
            for k, ell in enumerate(self.orders):
                w.writerow([f"{x:.17g}", int(ell), f"{self.values[k, i]:.17g}", self.method, f"{self.shift:.17g}"])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text


def choose_shift(eigs) -> float:
    """Shift half a gap below the lowest eigenvalue."""
    lam = np.sort(np.asarray(eigs, dtype=float))
    gap = lam[1] - lam[0] if lam.size > 1 else 1.0
    return float(lam[0] - gap / 2)


def weyl_tail(eigs: EigenList, ell: int, shift: float = 0.0) -> float:
    """Tail ``sum_{n > N} (lambda_n - shift)^(-l)`` from an anchored Weyl model.

    The model ``lambda_n = (pi (n + delta) / L)^2`` is anchored so that it
    reproduces the last computed eigenvalue. The sum is replaced by the
    midpoint Euler-Maclaurin form ``int_{N+1/2}^inf g + g'(N + 1/2) / 24``.
    Tails below ``1e-14`` are returned as 0.
    """
    lam = np.asarray(eigs.eigs, dtype=float)
    N = lam.size
    L = eigs.weyl_length
    if not lam[-1] > 0:
        raise ValueError("weyl tail needs a positive last eigenvalue")
    delta = L * math.sqrt(lam[-1]) / math.pi - N
    c = (L / math.pi) ** 2
    n0 = N + 0.5 + delta
    if shift == 0.0:
        integral = c**ell * n0 ** (1 - 2 * ell) / (2 * ell - 1)
        dg = -2 * ell * c**ell * n0 ** (-2 * ell - 1)
    else:
        def g(n):
            return ((n / math.sqrt(c)) ** 2 - shift) ** (-ell)

        integral = integrate.quad(g, n0, np.inf, epsabs=1e-16, epsrel=1e-13, limit=200)[0]
        h = 1e-3 * n0
        dg = (g(n0 + h) - g(n0 - h)) / (2 * h)
    tail = integral + dg / 24.0
    return 0.0 if abs(tail) < 1e-14 else float(tail)


def zeta_direct(eigs: EigenList, ell: int, shift: float = 0.0, tail: bool = True) -> float:
    """``sum_j (lambda_j - shift)^(-l)`` over the list plus the Weyl tail.

    Raises:
        ValueError: fewer than 50 eigenvalues, ``l < 1``, or a zero shifted
            eigenvalue.
    """
    if ell < 1:
        raise ValueError("order must be a positive integer")
    lam = np.asarray(eigs.eigs, dtype=float) - shift
    if lam.size < MIN_DIRECT_TERMS:
        raise ValueError(f"direct summation needs at least {MIN_DIRECT_TERMS} eigenvalues")
    if np.any(lam == 0):
        raise ValueError("zero eigenvalue present; apply a spectral shift")
    s = float(np.sum(lam[::-1] ** (-float(ell))))
    return s + (weyl_tail(eigs, ell, shift) if tail else 0.0)


def _log_coefficients(a: np.ndarray) -> np.ndarray:
    """Coefficients ``b_1..b_J`` of ``ln(1 + sum a_j w^j)`` (rows of ``a`` are ``a_1..a_J``)."""
    J = a.shape[0]
    b = np.zeros_like(a)
    for j in range(1, J + 1):
        acc = a[j - 1].copy()
        for k in range(1, j):
            acc -= (k / j) * b[k - 1] * a[j - k - 1]
        b[j - 1] = acc
    return b


def _launch_at(prob: Problem, c: float, shift: float, J: int, launch: str | None):
    """Chain initial data at ``c``: rows ``(phi_j, phi_j^[1])`` for ``j = 0..J``."""
    Y0 = np.zeros(2 * (J + 1))
    ep = prob.left
    if launch is None:
        near = ep.finite and ep.singular and 0 < c - ep.x <= FRIEDRICHS_AUTO_EPS
        launch = "friedrichs" if near else "dirichlet"
    if launch == "dirichlet":
        Y0[1] = 1.0
    elif launch == "friedrichs":
        y0, y1_0 = principal_data(prob, "left", c, shift)
        y0b, y1b = principal_data(prob, "left", c, shift + 1.0)
        Y0[0], Y0[1] = float(y0), float(y1_0)
        if J >= 1:
            Y0[2], Y0[3] = float(y0b - y0), float(y1b - y1_0)
    else:
        raise ValueError(f"unknown launch {launch!r}")
    return Y0


def zeta_recursive(
    prob: Problem,
    c: float,
    x_grid,
    ell_max: int = 3,
    shift: float = 0.0,
    tol: float = 1e-10,
    launch: str | None = None,
) -> PartialZetaTable:
    """Partial zeta values from the Taylor coefficients of ``phi_c(z, x)``.

    ``phi_c(z, .)`` solves ``tau phi = z phi`` with ``z``-independent
    Dirichlet data at ``c`` (principal data when ``c`` sits within ``1e-3``
    of a finite singular left end, or when ``launch='friedrichs'``). Writing
    ``phi_c(z) = sum_j phi_j (z - s)^j`` and ``ln(phi_c(z) / phi_0) =
    sum_l b_l (z - s)^l`` gives ``zeta_s(l) = -l b_l``.

    The integration tolerance is tightened until the highest order changes
    by less than ``tol`` (relative).

    Raises:
        ZeroCrossingError: ``phi_0`` vanishes on ``(c, max x]``.
    """
    xs = np.asarray(x_grid, dtype=float)
    if xs.ndim != 1 or xs.size == 0 or np.any(np.diff(xs) <= 0) or xs[0] <= c:
        raise ValueError("x_grid must be increasing and lie to the right of c")
    if ell_max < 1:
        raise ValueError("ell_max must be at least 1")
    J = ell_max
    Y0 = _launch_at(prob, c, shift, J, launch)
    prev = None
    for ode_tol in (1e-9, 1e-11, 1e-13):
        res = propagate_chain(prob, shift, c, Y0, float(xs[-1]), ode_tol, x_out=xs, keep_steps=True)
        steps = res.steps.Y[:, 0, 0]
        sgn = np.sign(steps[1:])
        flips = np.nonzero(sgn[1:] * sgn[:-1] < 0)[0]
        if flips.size:
            raise ZeroCrossingError(float(res.steps.x[flips[0] + 2]))
        phi = res.Y[:, 0::2, 0].real
        a = (phi[:, 1:] / phi[:, :1]).T
        vals = -np.arange(1, J + 1)[:, None] * _log_coefficients(a)
        if prev is not None and np.max(np.abs(vals[-1] - prev[-1]) / (1 + np.abs(vals[-1]))) < tol:
            break
        prev = vals
    return PartialZetaTable(c, xs, np.arange(1, J + 1), vals, "recursive", shift)


def _quad(f, lo, hi):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        return integrate.quad(f, lo, hi, limit=400, epsabs=1e-13, epsrel=1e-11)[0]


def zeta1_integral(
    prob: Problem,
    lam: float,
    c: float,
    x: float,
    side: str = "right",
    n_grid: int = 4001,
    tol: float = 1e-11,
) -> float:
    """``int u v r`` over ``(c, x)`` (or ``(x, c)`` for ``side='left'``).

    ``u`` is principal at the chosen endpoint and ``v`` vanishes at ``c``;
    the pair is normalized by ``W(v, u) = -1`` at the right end and ``+1``
    at the left end so that the integrand is positive. Toward a singular
    end the value tracks ``zeta(1)`` of the problem shifted by ``lam``.

    The principal solution is obtained by integrating toward ``c`` from a
    far point ``X = x + max(10, x / 4)`` (capped at a finite endpoint, where a regular
    end uses Neumann data).
    """
    if side not in ("left", "right"):
        raise ValueError("side must be 'left' or 'right'")
    sgn = 1.0 if side == "right" else -1.0
    if sgn * (x - c) <= 0:
        raise ValueError("x must lie beyond c toward the chosen endpoint")
    ep = prob.right if side == "right" else prob.left
    far = x + sgn * max(10.0, 0.25 * abs(x))
    if ep.finite and sgn * (far - ep.x) >= 0:
        if ep.singular:
            far = ep.x - sgn * min(1e-6, abs(ep.x - x) / 2)
        else:
            far = ep.x
    y_far = np.array([0.0, -sgn]) if ep.singular or far != ep.x else np.array([1.0, 0.0])
    if ep.finite and ep.singular and far != ep.x and abs(far - ep.x) < 1e-3:
        yy, yy1 = principal_data(prob, side, far, lam)
        y_far = np.array([float(yy), float(yy1)])
    grid = np.linspace(min(c, x), max(c, x), n_grid)
    pts = np.unique(np.concatenate([grid, [far]]))
    u = propagate_chain(prob, lam, far, y_far, c, tol, x_out=pts[(pts >= min(c, far)) & (pts <= max(c, far))])
    ux = u.x
    ic = int(np.nonzero(ux == c)[0][0])
    uc_m, uc_s = float(u.Y[ic, 0, 0].real), float(u.logscale[ic, 0])
    if uc_m == 0:
        raise ValueError("principal solution vanishes at c")
    # W(v, u)(c) = v u1 - v1 u with v(c) = 0  =>  v1(c) = -W / u(c); u(c) kept in log form
    w_target = -1.0 if side == "right" else 1.0
    v = propagate_chain(prob, lam, c, np.array([0.0, -w_target / uc_m]), x, tol, x_out=grid)
    iu = np.searchsorted(ux, grid)
    prod = (u.Y[iu, 0, 0] * v.Y[:, 0, 0]).real * np.exp(u.logscale[iu, 0] + v.logscale[:, 0] - uc_s)
    with np.errstate(all="ignore"):
        rr = np.broadcast_to(prob.r(grid), grid.shape)
    return float(integrate.simpson(prod * rr, x=grid))


def lg_coefficient(ell: int) -> float:
    """``(2l - 3)!! / (2^l (l - 1)!)`` with ``(-1)!! = 1``."""
    if ell < 1:
        raise ValueError("order must be a positive integer")
    df = 1.0
    for k in range(2 * ell - 3, 0, -2):
        df *= k
    return df / (2.0**ell * math.factorial(ell - 1))


def _check_schrodinger(prob: Problem, c: float, x: float) -> None:
    ts = np.linspace(min(c, x), max(c, x), 257)
    with np.errstate(all="ignore"):
        p = np.broadcast_to(prob.p(ts), ts.shape)
        r = np.broadcast_to(prob.r(ts), ts.shape)
        q = np.broadcast_to(prob.q(ts), ts.shape)
    if not (np.allclose(p, 1.0, rtol=0, atol=1e-14) and np.allclose(r, 1.0, rtol=0, atol=1e-14)):
        raise ValueError("Liouville-Green integrals need Schrödinger form (p = r = 1)")
    if not np.all(q > 0):
        i = int(np.argmin(q))
        raise ValueError(f"q must be positive on the range; q({ts[i]:.6g}) = {q[i]:.6g}")


def lg_xi(prob: Problem, ell: int, c: float, x: float) -> float:
    """Liouville-Green value ``coef(l) * int_c^x q^(1/2 - l)``."""
    _check_schrodinger(prob, c, x)
    return lg_coefficient(ell) * _quad(lambda t: prob.q(t) ** (0.5 - ell), c, x)


def classify_divergence(prob: Problem, ell: int, c: float = 1.0, n_levels: int = 6) -> bool:
    """True when ``lg_xi(l; (c, x))`` grows without bound as ``x`` increases.

    Increments over the geometric grid ``x_k = 10 * 4^k`` are compared: a
    convergent integral has increments shrinking geometrically, while a
    divergent one keeps ratios near or above 1.
    """
    xs = 10.0 * 4.0 ** np.arange(n_levels)
    if prob.right.finite:
        raise ValueError("divergence classification needs an infinite right endpoint")
    _check_schrodinger(prob, c, float(xs[-1]))
    coef = lg_coefficient(ell)
    pts = np.concatenate([[c], xs])
    inc = np.array([coef * _quad(lambda t: prob.q(t) ** (0.5 - ell), lo, hi) for lo, hi in zip(pts[1:-1], pts[2:])])
    ratios = inc[1:] / inc[:-1]
    return bool(np.median(ratios[-3:]) >= 0.9)
