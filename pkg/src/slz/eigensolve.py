"""Eigenvalues of truncated regular problems by Prüfer shooting.

A scaled Prüfer angle ``tan(theta) = S y / y1`` with ``S = k sqrt(p r)`` and
``k = sqrt(max(|lam|, 1))`` obeys

    theta' = k w cos^2 + (lam r - q) / (k sqrt(p r)) sin^2 + (ln(p r))' / 2 sin cos,

with ``w = sqrt(r / p)``. Zeros of ``y`` sit at multiples of ``pi`` where the
angle always increases, so counting half-turns at the right end against the
boundary target indexes eigenvalues without gaps. The scaling keeps the
angle speed moderate where ``1 / p`` is huge and nearly constant where the
solution oscillates.
"""

from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import integrate

from .problems import BoundaryCondition, Problem

__all__ = [
    "BracketError",
    "EigenList",
    "bc_eigs",
    "count_eigs_below",
    "dirichlet_eigs",
    "principal_data",
    "prufer_angle",
    "prufer_angles",
]

FRIEDRICHS_AUTO_EPS = 1e-3


class BracketError(RuntimeError):
    """No bracket found for a requested eigenvalue."""

    def __init__(self, message: str, window: tuple[float, float]):
        super().__init__(f"{message} (lambda window [{window[0]:.6g}, {window[1]:.6g}])")
        self.window = window


@dataclass
class EigenList:
    """First ``n`` eigenvalues of a truncated problem, indexed from 1."""

    c: float
    d: float
    bc_left: BoundaryCondition
    bc_right: BoundaryCondition
    eigs: np.ndarray
    n_zeros: np.ndarray
    residuals: np.ndarray
    tol: float
    weyl_length: float
    index_base: int = field(default=1)

    def __len__(self) -> int:
        return len(self.eigs)

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["j", "lambda", "n_zeros", "residual"])
        for j, (lam, nz, res) in enumerate(zip(self.eigs, self.n_zeros, self.residuals), start=1):
            w.writerow([j, f"{lam:.17g}", int(nz), f"{res:.17g}"])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text


def _quad(f, lo, hi):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        return integrate.quad(f, lo, hi, limit=200, epsabs=1e-14, epsrel=1e-12)[0]


def principal_data(prob: Problem, side: str, x: float, lam, kind: str | None = None):
    """Principal-solution data ``(y, y1)`` at ``x`` near a finite singular end.

    One Picard step from the endpoint. ``kind`` defaults to the endpoint's
    launch type: ``neumann`` data is ``(1, int (q - lam r))`` and
    ``dirichlet`` data is ``(int 1/p, 1)``, integrals taken from the endpoint
    to ``x`` (signs flip at the right end).
    """
    ep = prob.left if side == "left" else prob.right
    if not ep.finite:
        raise ValueError("principal data needs a finite endpoint")
    kind = kind or ep.launch
    lam = np.asarray(lam)
    lam = lam.astype(complex if np.iscomplexobj(lam) else float)
    sgn = 1.0 if side == "left" else -1.0
    lo, hi = sorted((ep.x, x))
    if kind == "neumann":
        iq = _quad(lambda t: prob.q(t), lo, hi)
        ir = _quad(lambda t: prob.r(t), lo, hi)
        y1 = sgn * (iq - lam * ir)
        return np.ones_like(lam), y1
    ip = _quad(lambda t: 1.0 / prob.p(t), lo, hi)
    return np.full_like(lam, sgn * ip), np.ones_like(lam)


def _kscale(lam):
    return np.sqrt(np.maximum(np.abs(lam), 1.0))


def _bc_data(prob, bc, side, x, lam):
    """``(y, y1)`` satisfying the boundary condition at ``x``."""
    if bc.kind == "friedrichs":
        return principal_data(prob, side, x, lam)
    return np.full(lam.shape, -math.sin(bc.alpha)), np.full(lam.shape, math.cos(bc.alpha))


def _angle(prob, x, lam, y, y1):
    S = _kscale(lam) * math.sqrt(prob.p(x) * prob.r(x))
    return np.arctan2(S * y, y1) % math.pi


def _angles_left(prob, bc_left, c, lam):
    if bc_left.kind == "dirichlet":
        return np.zeros(lam.shape)
    return _angle(prob, c, lam, *_bc_data(prob, bc_left, "left", c, lam))


def _targets_right(prob, bc_right, d, lam):
    if bc_right.kind == "dirichlet":
        return np.full(lam.shape, math.pi)
    t = _angle(prob, d, lam, *_bc_data(prob, bc_right, "right", d, lam))
    return np.where(t == 0.0, math.pi, t)


def prufer_angles(prob: Problem, lam, c: float, d: float, theta0, tol: float = 1e-10) -> np.ndarray:
    """Prüfer angles at ``d`` for a batch of ``lam`` started from ``theta0`` at ``c``.

    ``d < c`` integrates backward.
    """
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    th0 = np.broadcast_to(np.asarray(theta0, dtype=float), lam.shape).copy()
    if c == d:
        return th0
    k = _kscale(lam)
    P, Q, R = prob.p, prob.q, prob.r

    def rhs(x, th):
        p, q, r = P(x), Q(x), R(x)
        w = math.sqrt(r / p)
        spr = math.sqrt(p * r)
        s = np.sin(th)
        co = np.cos(th)
        out = k * w * co * co + (lam * r - q) / (k * spr) * s * s
        g = prob.log_pr_slope(x)
        if g:
            out += 0.5 * g * s * co
        return out

    sol = integrate.solve_ivp(rhs, (c, d), th0, method="DOP853", rtol=tol, atol=tol)
    if sol.status != 0:
        raise RuntimeError(f"Prüfer integration failed near x = {sol.t[-1]:.6g}: {sol.message}")
    return sol.y[:, -1]


def prufer_angle(prob: Problem, lam: float, c: float, d: float,
                 bc_left: BoundaryCondition | str = "dirichlet", tol: float = 1e-10) -> float:
    """Terminal Prüfer angle ``theta(d)`` for a single ``lam``."""
    bc_left = BoundaryCondition.parse(bc_left)
    lam_a = np.atleast_1d(float(lam))
    th0 = _angles_left(prob, bc_left, c, lam_a)
    return float(prufer_angles(prob, lam_a, c, d, th0, tol)[0])


class _Shooter:
    """Two-sided shooting matched at the point ``m`` where ``q / r`` is smallest.

    ``D(lam) = theta_L(m) - theta_R(m)`` is strictly increasing and equals
    ``(j - 1) pi`` at the ``j``-th eigenvalue.
    """

    def __init__(self, prob, c, d, bc_left, bc_right, tol):
        self.prob, self.c, self.d = prob, c, d
        self.bc_left, self.bc_right, self.tol = bc_left, bc_right, tol
        xs = np.linspace(c, d, 401)
        with np.errstate(all="ignore"):
            p, q, r = (np.broadcast_to(v, xs.shape) for v in prob.coefficients(xs))
            v = np.where(np.isfinite(q / r), q / r, np.inf)
        self.m = float(xs[int(np.argmin(v))])

    def angles(self, lam):
        lam = np.atleast_1d(np.asarray(lam, dtype=float))
        th0 = _angles_left(self.prob, self.bc_left, self.c, lam)
        thL = prufer_angles(self.prob, lam, self.c, self.m, th0, self.tol)
        tgt = _targets_right(self.prob, self.bc_right, self.d, lam)
        thR = prufer_angles(self.prob, lam, self.d, self.m, tgt, self.tol)
        return thL, thR

    def mismatch(self, lam):
        """``D(lam) / pi`` for a batch of ``lam``."""
        thL, thR = self.angles(lam)
        return (thL - thR) / math.pi

    def count(self, lam):
        k = self.mismatch(lam)
        return np.maximum(np.ceil(k - 1e-9), 0).astype(int)

    def zeros(self, lam):
        thL, thR = self.angles(lam)
        left = np.maximum(np.floor(thL / math.pi + 1e-7), 0)
        right = np.maximum(-np.floor(thR / math.pi + 1e-7), 0)
        return (left + right).astype(int)


def _normalize(prob, c, d, bc_left, bc_right):
    bc_left = BoundaryCondition.parse(bc_left)
    bc_right = BoundaryCondition.parse(bc_right)
    a, b = prob.interval
    if not (a <= c < d <= b) or not (math.isfinite(c) and math.isfinite(d)):
        raise ValueError(f"need a <= c < d <= b with finite c, d; got ({c}, {d}) in ({a}, {b})")
    for bc, ep, x in ((bc_left, prob.left, c), (bc_right, prob.right, d)):
        if ep.singular and x == ep.x and bc.kind != "friedrichs":
            raise ValueError(f"cannot impose {bc.kind} exactly at the singular endpoint {x}")
        if bc.kind == "friedrichs" and not ep.finite:
            raise ValueError("friedrichs condition requires a finite endpoint")
    return bc_left, bc_right


def count_eigs_below(prob: Problem, c: float, d: float, bc_left, bc_right, lam: float,
                     tol: float = 1e-10) -> int:
    """Number of eigenvalues of the truncated problem strictly below ``lam``."""
    bc_left, bc_right = _normalize(prob, c, d, bc_left, bc_right)
    return int(_Shooter(prob, c, d, bc_left, bc_right, tol).count(lam)[0])


def _weyl_length(prob, c, d):
    return _quad(lambda t: math.sqrt(prob.r(t) / prob.p(t)), c, d)


def _solve(prob, c, d, bc_left, bc_right, n_max, tol, ode_tol):
    sh = _Shooter(prob, c, d, bc_left, bc_right, ode_tol)
    xs = np.linspace(c, d, 401)[1:-1]
    with np.errstate(all="ignore"):
        p, q, r = (np.broadcast_to(v, xs.shape) for v in prob.coefficients(xs))
    qr = q / r
    lo = float(np.min(qr[np.isfinite(qr)])) - 1.0
    step = 1.0 + abs(lo)
    while sh.count(lo)[0] > 0:
        lo -= step
        step *= 2.0
        if step > 1e12:
            raise BracketError("no lower bound for the spectrum", (lo, lo + step))
    L = _weyl_length(prob, c, d)
    hi = max(lo + 1.0, (math.pi * (n_max + 1) / L) ** 2 + float(np.max(qr)) + 1.0)
    while sh.count(hi)[0] < n_max:
        hi = lo + 2.0 * (hi - lo)
        if hi - lo > 1e14:
            raise BracketError("no upper bound for the requested eigenvalues", (lo, hi))

    grid = np.linspace(lo, hi, 33)
    counts = sh.count(grid)
    js = np.arange(1, n_max + 1)
    ia = np.array([np.nonzero(counts < j)[0].max() for j in js])
    ib = np.array([np.nonzero(counts >= j)[0].min() for j in js])
    a, b = grid[ia], grid[ib]
    ca, cb = counts[ia], counts[ib]

    # bisect until each bracket isolates its own eigenvalue
    for _ in range(200):
        active = (ca != js - 1) | (cb != js)
        if not np.any(active):
            break
        mid = 0.5 * (a[active] + b[active])
        cm = sh.count(mid)
        idx = np.nonzero(active)[0]
        up = cm >= js[active]
        b[idx[up]], cb[idx[up]] = mid[up], cm[up]
        a[idx[~up]], ca[idx[~up]] = mid[~up], cm[~up]
    else:
        raise BracketError("bisection did not isolate the eigenvalues", (lo, hi))

    # Illinois iteration on D(lam) / pi - (j - 1), increasing in lam
    fa = sh.mismatch(a) - (js - 1)
    fb = sh.mismatch(b) - (js - 1)
    x = 0.5 * (a + b)
    last = np.zeros(n_max, dtype=int)
    for _ in range(100):
        denom = fb - fa
        x_new = np.where(denom > 0, a - fa * (b - a) / np.where(denom > 0, denom, 1.0), 0.5 * (a + b))
        x_new = np.clip(x_new, a, b)
        done = np.abs(x_new - x) <= tol * (1.0 + np.abs(x_new))
        x = x_new
        if np.all(done):
            break
        fx = sh.mismatch(x) - (js - 1)
        right = fx > 0
        left = fx < 0
        fa = np.where(right & (last == 1), fa / 2, fa)
        fb = np.where(left & (last == -1), fb / 2, fb)
        b, fb = np.where(right, x, b), np.where(right, fx, fb)
        a, fa = np.where(left, x, a), np.where(left, fx, fa)
        last = np.where(right, 1, np.where(left, -1, last))
        if np.all((fx == 0) | (b - a <= tol * (1.0 + np.abs(x)))):
            break
    lam = x
    resid = (sh.mismatch(lam) - (js - 1)) * math.pi
    return lam, sh.zeros(lam), resid, L


def bc_eigs(prob: Problem, c: float, d: float, bc_left, bc_right, n_max: int,
            tol: float = 1e-10, eps_extrapolate: bool = False) -> EigenList:
    """First ``n_max`` eigenvalues under separated boundary conditions.

    A ``friedrichs`` condition launches with principal-solution data at
    ``c`` (or targets it at ``d``). With ``eps_extrapolate`` the left
    offset ``eps = c - a`` is halved twice and the results Richardson
    extrapolated to ``eps -> 0``.

    Raises:
        BracketError: the spectrum could not be bracketed.
        ValueError: bad interval or boundary conditions.
    """
    if n_max < 1:
        raise ValueError("n_max must be at least 1")
    bc_left, bc_right = _normalize(prob, c, d, bc_left, bc_right)
    ode_tol = min(tol, 1e-10)
    lam, nz, res, L = _solve(prob, c, d, bc_left, bc_right, n_max, tol, ode_tol)
    if eps_extrapolate and bc_left.kind == "friedrichs":
        eps = c - prob.left.x
        l2 = _solve(prob, prob.left.x + eps / 2, d, bc_left, bc_right, n_max, tol, ode_tol)[0]
        l4 = _solve(prob, prob.left.x + eps / 4, d, bc_left, bc_right, n_max, tol, ode_tol)[0]
        r1 = 2 * l2 - lam
        r2 = 2 * l4 - l2
        lam = (4 * r2 - r1) / 3
    if np.any(np.diff(lam) <= 0):
        raise BracketError("eigenvalues not strictly increasing", (float(lam[0]), float(lam[-1])))
    return EigenList(c, d, bc_left, bc_right, lam, nz, res, tol, L)


def dirichlet_eigs(prob: Problem, c: float, d: float, n_max: int, tol: float = 1e-10) -> EigenList:
    """First ``n_max`` Dirichlet eigenvalues on ``(c, d)``.

    Next to a finite singular endpoint (within ``1e-3``) the Dirichlet
    condition is replaced by principal-solution launch data, which is the
    boundary condition the truncations inherit there.
    """
    bcs = []
    for side, ep, x in (("left", prob.left, c), ("right", prob.right, d)):
        near = ep.finite and ep.singular and abs(x - ep.x) <= FRIEDRICHS_AUTO_EPS
        bcs.append(BoundaryCondition.friedrichs() if near else BoundaryCondition.dirichlet())
    return bc_eigs(prob, c, d, bcs[0], bcs[1], n_max, tol)
