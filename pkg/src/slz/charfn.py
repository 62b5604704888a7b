"""Characteristic functions, normalized solutions and order estimates.

Every quantity here is a limit ``x -> b`` (or ``x -> a``) of a ratio of
exponentially large solution values, so all work happens on logarithms
assembled from the trajectory log factors. Limits are detected by
stabilization along a truncation grid; no extrapolation is applied beyond
the optional Liouville-Green tail correction described in
:func:`lg_tail_correction`.

A spectral shift ``s`` below the lowest eigenvalue keeps the reference
solution zero-free. Characteristic functions are then normalized to
``F(s) = 1`` and the regularizing sums use ``(z - s)^l`` with shifted partial
zeta values; both changes alter the result by a factor ``exp(A + B z + ...)``
of degree at most the rank, which is the gauge freedom of the construction.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import least_squares

from .eigensolve import bc_eigs, dirichlet_eigs, principal_data
from .partialzeta import ZeroCrossingError, _log_coefficients, lg_coefficient
from .problems import BoundaryCondition, Problem
from .propagate import propagate_chain, propagate_log

__all__ = [
    "CharFnEval",
    "CharFnResult",
    "ConvergenceError",
    "DivergentProductError",
    "HadamardProduct",
    "ScaledValue",
    "charfn_F0",
    "elementary_factor",
    "endpoint_rank",
    "estimate_order",
    "exponent_of_convergence",
    "hadamard_char",
    "lg_tail_correction",
    "log_elementary_factor",
    "nonprincipal_normalized",
    "principal_normalized",
    "truncated_charfn",
]

ORDER_RADIUS_CAP = 30.0
_GL_U, _GL_W = np.polynomial.legendre.leggauss(96)


class ConvergenceError(RuntimeError):
    """A limit did not stabilize on the supplied grid."""


class DivergentProductError(ValueError):
    """The genus is too small for the zeros: ``sum |lambda|^-(p+1)`` diverges."""


# ---------------------------------------------------------------------------
# Weierstrass factors and Hadamard products


def log_elementary_factor(w, p: int):
    """``ln E(w, p)`` with ``E(w, p) = (1 - w) exp(sum_{j<=p} w^j / j)``.

    For ``|w| < 0.5`` the series ``-sum_{j>p} w^j / j`` is summed instead of
    the closed form, which would cancel badly.
    """
    if p < 0:
        raise ValueError("genus must be nonnegative")
    w = np.asarray(w, dtype=complex)
    out = np.empty_like(w)
    small = np.abs(w) < 0.5
    ws = w[small]
    if ws.size:
        acc = np.zeros_like(ws)
        for j in range(p + 60, p, -1):
            acc = acc * ws + 1.0 / j
        out[small] = -acc * ws ** (p + 1)
    wl = w[~small]
    if wl.size:
        with np.errstate(divide="ignore"):
            val = np.log(1.0 - wl)
        for j in range(1, p + 1):
            val = val + wl**j / j
        out[~small] = val
    return out if out.ndim else complex(out)


def elementary_factor(w, p: int):
    """Weierstrass elementary factor ``E(w, p)``."""
    return np.exp(log_elementary_factor(w, p))


def _power_model(mags: np.ndarray):
    """``(A, delta, beta)`` of ``A (n + delta)^beta`` fitted on the top half.

    All three parameters are fitted jointly in log space; a fixed slope
    with an anchored shift leaves a bias that the tail sum amplifies.
    """
    n = np.arange(1, mags.size + 1, dtype=float)
    top = slice(mags.size // 2, None)
    nt, lt = n[top], np.log(mags[top])
    beta0 = float(np.polyfit(np.log(nt), lt, 1)[0])

    def resid(p):
        return p[0] + p[2] * np.log(nt + p[1]) - lt

    lo = 1.0 - nt[0]
    fit = least_squares(resid, [lt[-1] - beta0 * np.log(nt[-1]), 0.0, beta0],
                        bounds=([-np.inf, lo + 1e-9, 1e-6], [np.inf, nt[0], np.inf]), xtol=1e-15, ftol=1e-15)
    logA, delta, beta = fit.x
    return float(np.exp(logA)), float(delta), float(beta)


@dataclass
class HadamardProduct:
    """Canonical product ``z^m0 prod E(z / lambda_j, genus)`` over given zeros.

    The zeros beyond the supplied list follow a power-law model
    ``A (n + delta)^beta`` fitted on the top half of the list. The modeled zeros are added explicitly until
    they exceed ``4 |z|``; the remainder enters through the series
    ``-sum_k z^k / k T_k`` with ``T_k`` the modeled tail sums.

    Raises:
        DivergentProductError: the fitted growth makes
            ``sum |lambda|^-(genus + 1)`` divergent.
    """

    zeros: np.ndarray
    genus: int
    m0: int = 0
    beta: float = field(init=False)
    A: float = field(init=False)
    delta: float = field(init=False)

    def __post_init__(self):
        z = np.asarray(self.zeros, dtype=float)
        if z.ndim != 1 or z.size < 8:
            raise ValueError("need at least 8 zeros")
        if np.any(z == 0):
            raise ValueError("zeros must be nonzero; use m0 for a zero at the origin")
        if self.genus < 0 or self.m0 < 0:
            raise ValueError("genus and m0 must be nonnegative")
        self.zeros = z
        A, delta, beta = _power_model(np.sort(np.abs(z)))
        if not beta * (self.genus + 1) > 1.0 + 1e-3:
            raise DivergentProductError(
                f"zeros grow like n^{beta:.3f}; genus {self.genus} gives a divergent product"
            )
        self.A, self.delta, self.beta = A, delta, beta

    @property
    def order(self) -> float:
        """Order of the product, ``1 / beta`` from the tail model."""
        return 1.0 / self.beta

    def model_zero(self, n):
        return self.A * (np.asarray(n, dtype=float) + self.delta) ** self.beta

    def _tail_sum(self, n0: float, k: int) -> float:
        """``sum_{n >= n0} model(n)^-k`` by the midpoint Euler-Maclaurin form."""
        e = self.beta * k
        a = n0 - 0.5 + self.delta
        integral = self.A ** (-k) * a ** (1.0 - e) / (e - 1.0)
        deriv = -e * self.A ** (-k) * a ** (-e - 1.0)
        return integral + deriv / 24.0

    def _model_count(self, zmax: float) -> int:
        N = self.zeros.size
        need = (4.0 * zmax / self.A) ** (1.0 / self.beta) - self.delta
        return int(min(max(0.0, math.ceil(need) - N), 5_000_000))

    def log_value(self, z):
        """``ln`` of the product (branch of the imaginary part unspecified)."""
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        p = self.genus
        sign = np.sign(self.zeros)
        with np.errstate(divide="ignore"):
            out = self.m0 * np.log(z) if self.m0 else np.zeros_like(z)
        for lam in self.zeros:
            out = out + log_elementary_factor(z / lam, p)
        N = self.zeros.size
        extra = self._model_count(float(np.max(np.abs(z))))
        tail_sign = sign[-1]
        if extra:
            lam_m = tail_sign * self.model_zero(np.arange(N + 1, N + extra + 1))
            out = out + log_elementary_factor(z[:, None] / lam_m[None, :], p).sum(axis=1)
        n0 = N + extra + 1
        zmod = z / tail_sign
        for k in range(p + 1, p + 80):
            term = -(zmod**k) / k * self._tail_sum(n0, k)
            out = out + term
            if np.max(np.abs(term)) < 1e-17 * (1.0 + np.max(np.abs(out))):
                break
        return out

    def __call__(self, z):
        v = np.exp(self.log_value(z))
        return v if np.ndim(z) else complex(v[0])

    def logderiv(self, z):
        """Analytic ``d/dz ln`` of the product."""
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        p = self.genus
        out = self.m0 / z if self.m0 else np.zeros_like(z)
        lam = self.zeros[None, :]
        zz = z[:, None]
        poly = sum(zz ** (j - 1) / lam**j for j in range(1, p + 1)) if p else 0.0
        out = out + np.sum(1.0 / (zz - lam) + poly, axis=1)
        N = self.zeros.size
        extra = self._model_count(float(np.max(np.abs(z))))
        tail_sign = np.sign(self.zeros[-1])
        if extra:
            lm = tail_sign * self.model_zero(np.arange(N + 1, N + extra + 1))[None, :]
            poly = sum(zz ** (j - 1) / lm**j for j in range(1, p + 1)) if p else 0.0
            out = out + np.sum(1.0 / (zz - lm) + poly, axis=1)
        n0 = N + extra + 1
        for k in range(p + 1, p + 80):
            term = -(z ** (k - 1)) * self._tail_sum(n0, k) / tail_sign**k
            out = out + term
            if np.max(np.abs(term)) < 1e-17 * (1.0 + np.max(np.abs(out))):
                break
        return out if np.ndim(z) > 0 and z.size > 1 else out


def hadamard_char(zeros, genus: int, z, m0: int = 0):
    """Evaluate ``z^m0 prod E(z / lambda_j, genus)`` with a modeled tail."""
    H = HadamardProduct(np.asarray(zeros, dtype=float), genus, m0)
    return H(z)


# ---------------------------------------------------------------------------
# exponent of convergence and rank


def exponent_of_convergence(eigs) -> float:
    """Least-squares slope of ``ln n`` against ``ln lambda_n`` over the top half.

    Raises:
        ValueError: fewer than 20 values, or values not positive increasing.
    """
    lam = np.asarray(getattr(eigs, "eigs", eigs), dtype=float)
    if lam.size < 20:
        raise ValueError("need at least 20 eigenvalues")
    if np.any(lam <= 0) or np.any(np.diff(lam) <= 0):
        raise ValueError("eigenvalues must be positive and increasing")
    n = np.arange(1, lam.size + 1, dtype=float)
    top = slice(lam.size // 2, None)
    return float(np.polyfit(np.log(lam[top]), np.log(n[top]), 1)[0])


def endpoint_rank(prob: Problem, side: str = "right", n_eigs: int = 80) -> int:
    """Rank of the endpoint: the catalog hint, else ``floor`` of an estimated exponent.

    An estimate within 0.05 of an integer is ambiguous (the rank may be one
    less than the floor) and triggers a warning; it is never resolved.
    """
    ep = prob.right if side == "right" else prob.left
    if ep.rank_hint is not None:
        return int(ep.rank_hint)
    c, d = prob.default_truncation or (None, None)
    if c is None:
        raise ValueError("no rank hint and no default truncation to estimate one")
    eigs = dirichlet_eigs(prob, c, d, n_eigs).eigs
    pos = eigs[eigs > 0]
    kappa = exponent_of_convergence(pos)
    if abs(kappa - round(kappa)) < 0.05:
        warnings.warn(
            f"estimated exponent {kappa:.3f} is near an integer; the rank may be {round(kappa) - 1}",
            stacklevel=2,
        )
    return int(math.floor(kappa))


# ---------------------------------------------------------------------------
# Liouville-Green tail correction


def _schrodinger_end(prob: Problem, side: str) -> bool:
    ep = prob.right if side == "right" else prob.left
    if ep.finite or not prob.pr_constant:
        return False
    return prob.p(1.0) == 1.0 and prob.r(1.0) == 1.0


def lg_tail_correction(prob: Problem, X: float, w, shift: float, rank: int):
    """Remaining change of the regularized log-ratio beyond ``X``.

    For ``p = r = 1`` and ``q -> inf`` at an infinite end, the growing
    solution has log-derivative ``L(w) = sqrt(Q - w) - Q' / (4 (Q - w))``
    up to relative ``O(q'^2 Q^-3)``, where ``Q = q - s`` and ``w = z - s``.
    The regularized quantity keeps only the part of ``ln phi(z) / phi(s)``
    beyond order ``rank`` in ``w``, so its remaining change is the integral
    of ``L(w)`` minus its Taylor polynomial of degree ``rank``:

        int_X^inf [sqrt(Q - w) - Taylor] + ln E(w / Q(X), rank) / 4.

    The integral uses the substitution ``x = X / u^2`` (``X`` negative for
    the left end).
    """
    w = np.atleast_1d(np.asarray(w, dtype=complex))
    u = 0.5 * (_GL_U + 1.0)
    x = X / u**2
    jac = 2.0 * abs(X) / u**3 * 0.5 * _GL_W
    Q = np.asarray(prob.q(x), dtype=float) - shift
    Q0 = float(prob.q(X)) - shift
    if not (Q0 > 0 and np.all(Q > 0)):
        raise ValueError("tail correction needs q - s > 0 beyond X")
    sQ = np.sqrt(Q)[None, :]
    ww = w[:, None]
    root = np.sqrt(Q[None, :] - ww)
    if rank == 0:
        integrand = -ww / (root + sQ)
    elif rank == 1:
        integrand = -(ww**2) / (2.0 * sQ * (root + sQ) ** 2)
    else:
        integrand = root - sQ
        for ell in range(1, rank + 1):
            integrand = integrand + ww**ell / ell * lg_coefficient(ell) * Q[None, :] ** (0.5 - ell)
    val = integrand @ jac
    return val + 0.25 * log_elementary_factor(w / Q0, rank)


# ---------------------------------------------------------------------------
# building blocks


@dataclass
class ScaledValue:
    """Solution values ``(y, y1) * exp(logscale)`` for a batch of ``z``."""

    z: np.ndarray
    y: np.ndarray
    y1: np.ndarray
    logscale: np.ndarray

    def log(self) -> np.ndarray:
        return np.log(self.y.astype(complex)) + self.logscale

    def value(self) -> np.ndarray:
        return self.y * np.exp(self.logscale)


def _log_phi(res, i):
    """``ln`` of the solution component at output ``i`` for every column."""
    return np.log(res.Y[i, 0, :].astype(complex)) + res.logscale[i, :]


def _zeta_chain(prob: Problem, x0: float, data0, data1, s: float, J: int, targets, tol: float):
    """Shifted partial zeta values ``zeta_s(l)`` of ``(x0, t)`` for each target ``t``.

    ``data0`` and ``data1`` are the launch data of the chain at ``x0`` for
    ``phi_0`` and ``phi_1``; targets may lie on either side of ``x0``.
    """
    targets = np.asarray(targets, dtype=float)
    Y0 = np.zeros(2 * (J + 1))
    Y0[0], Y0[1] = data0
    if J >= 1:
        Y0[2], Y0[3] = data1
    far = targets[np.argmax(np.abs(targets - x0))]
    res = propagate_chain(prob, s, x0, Y0, float(far), tol, x_out=targets, keep_steps=True)
    steps = res.steps.Y[1:, 0, 0].real
    flips = np.nonzero(np.sign(steps[1:]) * np.sign(steps[:-1]) < 0)[0]
    if flips.size:
        raise ZeroCrossingError(float(res.steps.x[flips[0] + 2]))
    phi = res.Y[:, 0::2, 0].real
    a = (phi[:, 1:] / phi[:, :1]).T
    return -np.arange(1, J + 1)[:, None] * _log_coefficients(a)


def _reg_sum(w, zeta):
    """``sum_l w^l / l zeta[l - 1]`` for a batch of ``w`` and a column ``zeta``."""
    out = np.zeros(np.shape(w), dtype=complex)
    for ell in range(1, len(zeta) + 1):
        out = out + w**ell / ell * zeta[ell - 1]
    return out


@dataclass
class _Launch:
    """Left solution data: launch point, data as a function of ``z``, and its regularization."""

    x0: float
    data: Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]]
    rank: int = 0
    c: float | None = None
    lg: bool = False


def _left_launch(prob: Problem, bc_left: BoundaryCondition, x0: float, rank: int, c: float | None, lg: bool):
    ep = prob.left
    if bc_left.kind == "friedrichs":
        def data(zs):
            return principal_data(prob, "left", x0, zs)
    else:
        sa, ca = -math.sin(bc_left.alpha), math.cos(bc_left.alpha)

        def data(zs):
            return np.full(zs.shape, sa, dtype=zs.dtype), np.full(zs.shape, ca, dtype=zs.dtype)
    reg = rank if (ep.singular and c is not None and c != x0) else 0
    return _Launch(x0, data, reg, c, lg and reg >= 0 and _schrodinger_end(prob, "left"))


def _chain_data(launch: _Launch, s: float):
    y0, y1 = launch.data(np.array([s]))
    ya, y1a = launch.data(np.array([s + 1.0]))
    d0 = (float(np.real(y0[0])), float(np.real(y1[0])))
    d1 = (float(np.real(ya[0] - y0[0])), float(np.real(y1a[0] - y1[0])))
    return d0, d1


def _log_F_history(prob, launch: _Launch, c: float, X_grid, zs, s, rank_b, tol, lg_right):
    """``ln F_X(z)`` for each ``X`` in the grid (rows) and each ``z`` (columns)."""
    X_grid = np.asarray(X_grid, dtype=float)
    B = np.concatenate([zs, [s]]).astype(complex)
    y0, y1 = launch.data(B)
    Y0 = np.vstack([y0, y1]).astype(complex)
    pts = np.unique(np.concatenate([X_grid, [c]]))
    res = propagate_chain(prob, B, launch.x0, Y0, float(X_grid[-1]), tol, x_out=pts)
    logs = np.array([_log_phi(res, int(np.searchsorted(pts, X))) for X in X_grid])
    out = logs[:, :-1] - logs[:, -1:]
    w = zs - s
    # left regularization toward a singular end launched away from c
    if launch.rank > 0:
        zl = _zeta_chain(prob, c, (0.0, 1.0), (0.0, 0.0), s, launch.rank, [launch.x0], tol)[:, 0]
        out = out + _reg_sum(w, zl)[None, :]
    if launch.lg:
        out = out + lg_tail_correction(prob, launch.x0, w, s, launch.rank)[None, :]
    if rank_b > 0:
        if c == launch.x0:
            d0, d1 = _chain_data(launch, s)
        else:
            d0, d1 = (0.0, 1.0), (0.0, 0.0)
        zr = _zeta_chain(prob, c, d0, d1, s, rank_b, X_grid, tol)
        out = out + np.array([_reg_sum(w, zr[:, i]) for i in range(X_grid.size)])
    if lg_right:
        out = out + np.array([lg_tail_correction(prob, float(X), w, s, rank_b) for X in X_grid])
    return out


# ---------------------------------------------------------------------------
# characteristic functions


@dataclass
class CharFnResult:
    """Batched evaluation with convergence diagnostics.

    Attributes:
        z: evaluation points.
        log_value: ``ln F`` at the largest truncation (imaginary part is a
            branch choice).
        history: ``ln F_X`` for every truncation point, shape ``(nX, nz)``.
        last_ratio_change: ``|F_{X_n} / F_{X_(n-1)} - 1|`` per point.
        converged: ``last_ratio_change < tol`` per point.
    """

    z: np.ndarray
    log_value: np.ndarray
    history: np.ndarray
    last_ratio_change: np.ndarray
    converged: np.ndarray

    @property
    def value(self) -> np.ndarray:
        return np.exp(self.log_value)


@dataclass(frozen=True)
class CharFnEval:
    """A characteristic function evaluated as a limit along ``x_sequence``.

    Immutable; evaluations at distinct ``z`` are independent.
    """

    prob: Problem
    x_sequence: np.ndarray
    c: float
    shift: float
    rank: int
    tol: float
    launch: _Launch = field(repr=False)
    lg_tail: bool = False
    ode_tol: float = 1e-10
    kappa: float | None = None

    def evaluate(self, z) -> CharFnResult:
        zs = np.atleast_1d(np.asarray(z, dtype=complex)).ravel()
        hist = _log_F_history(
            self.prob, self.launch, self.c, self.x_sequence, zs, self.shift, self.rank, self.ode_tol, self.lg_tail
        )
        if hist.shape[0] > 1:
            change = np.abs(np.expm1(hist[-1] - hist[-2]))
        else:
            change = np.full(zs.size, np.nan)
        return CharFnResult(zs, hist[-1], hist, change, change < self.tol)

    def log(self, z) -> np.ndarray:
        return self.evaluate(z).log_value

    def __call__(self, z):
        v = self.evaluate(z).value
        return v if np.ndim(z) else complex(v[0])


def _auto_shift(prob, c, X, bc_left) -> float:
    if bc_left.kind == "dirichlet" and not prob.left.singular:
        lam1 = float(dirichlet_eigs(prob, c, X, 1).eigs[0])
    else:
        lam1 = float(bc_eigs(prob, c, X, bc_left, BoundaryCondition.dirichlet(), 1).eigs[0])
    return 0.0 if lam1 >= 0.5 else lam1 - 0.5


def _use_lg(prob, side, lg_tail) -> bool:
    if lg_tail == "auto":
        return _schrodinger_end(prob, side)
    return bool(lg_tail) and _schrodinger_end(prob, side)


def truncated_charfn(
    prob: Problem,
    c: float,
    X_grid,
    z=None,
    shift: float | None = 0.0,
    rank: int | None = None,
    tol: float = 1e-6,
    lg_tail="auto",
    ode_tol: float = 1e-10,
):
    """``G_c(z) = lim [phi_c(z, x) / phi_c(s, x)] exp(sum (z - s)^l / l zeta_s(l; (c, x)))``.

    ``phi_c`` has Dirichlet data at ``c``. Returns a :class:`CharFnEval`
    when ``z`` is None, else its :class:`CharFnResult` at ``z``.
    """
    X_grid = np.asarray(X_grid, dtype=float)
    _check_grid(prob, c, X_grid)
    rank = endpoint_rank(prob, "right") if rank is None else int(rank)
    if shift is None:
        shift = _auto_shift(prob, c, float(X_grid[-1]), BoundaryCondition.dirichlet())
    launch = _Launch(c, lambda zs: (np.zeros(zs.shape, dtype=zs.dtype), np.ones(zs.shape, dtype=zs.dtype)))
    F = CharFnEval(prob, X_grid, c, float(shift), rank, tol, launch, _use_lg(prob, "right", lg_tail), ode_tol)
    return F if z is None else F.evaluate(z)


def _check_grid(prob, c, X_grid):
    if X_grid.ndim != 1 or X_grid.size == 0 or np.any(np.diff(X_grid) <= 0):
        raise ValueError("truncation grid must be increasing")
    if not X_grid[0] > c:
        raise ValueError("truncation points must lie to the right of c")
    b = prob.right.x
    if X_grid[-1] > b or (X_grid[-1] == b and prob.right.singular):
        raise ValueError("truncation points must lie inside the interval")


def charfn_F0(
    prob: Problem,
    X_grid,
    bc_left: "BoundaryCondition | str | None" = None,
    z=None,
    shift: float | None = None,
    c: float | None = None,
    left_grid=None,
    eps: float = 1e-6,
    tol: float = 1e-6,
    lg_tail="auto",
    ode_tol: float = 1e-10,
):
    """Characteristic function of minimal order for the Friedrichs realization.

    ``ln F(z) = lim [ln phi_a(z, X) - ln phi_a(s, X) + sum_{l<=p_b} (z - s)^l / l
    zeta_s(l; (c, X))]`` with ``phi_a`` principal at the left end:

    * regular left end: boundary data for ``bc_left`` at ``a`` and ``c = a``;
    * finite singular left end: principal data at ``a + eps`` and ``c = a + eps``
      (``bc_left`` must be Friedrichs there);
    * left end at ``-inf``: Dirichlet data at ``-X_L`` regularized with
      ``zeta_s(l; (-X_L, c))``, ``X_L`` taken from ``left_grid`` (default
      ``-X_grid``).

    When ``c`` is the launch point the regularizing zeta values are those of
    the launch data itself, so a truncated ``F`` is exactly the canonical
    product over the truncated spectrum. The shift defaults to 0 when the
    lowest truncated eigenvalue is at least 0.5 and to ``lambda_1 - 0.5``
    otherwise. Returns a :class:`CharFnEval`, or its result at ``z``.
    """
    X_grid = np.asarray(X_grid, dtype=float)
    ep = prob.left
    rank_b = endpoint_rank(prob, "right")
    if bc_left is None:
        bc_left = BoundaryCondition.friedrichs() if ep.singular and ep.finite else BoundaryCondition.dirichlet()
    bc_left = BoundaryCondition.parse(bc_left)
    if ep.finite:
        if ep.singular:
            if bc_left.kind != "friedrichs":
                raise ValueError("only the Friedrichs condition is supported at a singular left end")
            x0 = ep.x + eps
        else:
            if bc_left.kind == "friedrichs":
                bc_left = BoundaryCondition.dirichlet()
            x0 = ep.x
        c = x0 if c is None else c
        launch = _left_launch(prob, bc_left, x0, 0, c if c != x0 else None, False)
        if c != x0:
            raise ValueError("c must be the launch point for a finite left end")
        lg_left = None
    else:
        if c is None:
            c = 0.0 if prob.right.x > 0 else prob.right.x - 1.0
        lgrid = -X_grid if left_grid is None else np.asarray(left_grid, dtype=float)
        if lgrid.shape != X_grid.shape or np.any(lgrid >= c):
            raise ValueError("left_grid must match X_grid and lie left of c")
        rank_a = endpoint_rank(prob, "left")
        lg_left = (lgrid, rank_a)
        launch = None
    _check_grid(prob, c, X_grid)
    if shift is None:
        if lg_left is None:
            shift = _auto_shift(prob, c, float(X_grid[-1]), bc_left)
        else:
            lam1 = float(dirichlet_eigs(prob, float(lg_left[0][-1]), float(X_grid[-1]), 1).eigs[0])
            shift = 0.0 if lam1 >= 0.5 else lam1 - 0.5
    use_lg = _use_lg(prob, "right", lg_tail)
    if lg_left is None:
        return _finish(CharFnEval(prob, X_grid, c, float(shift), rank_b, tol, launch, use_lg, ode_tol), z)
    return _finish(
        _TwoSidedEval(prob, X_grid, c, float(shift), rank_b, tol, None, use_lg, ode_tol,
                      left_grid=lg_left[0], left_rank=lg_left[1], lg_left=_use_lg(prob, "left", lg_tail)),
        z,
    )


def _finish(F, z):
    return F if z is None else F.evaluate(z)


@dataclass(frozen=True)
class _TwoSidedEval(CharFnEval):
    """Left end at ``-inf``: the launch point moves with the truncation."""

    left_grid: np.ndarray = None
    left_rank: int = 0
    lg_left: bool = False

    def evaluate(self, z) -> CharFnResult:
        zs = np.atleast_1d(np.asarray(z, dtype=complex)).ravel()
        rows = []
        for XL, XR in zip(self.left_grid, self.x_sequence):
            launch = _Launch(
                float(XL),
                lambda v: (np.zeros(v.shape, dtype=v.dtype), np.ones(v.shape, dtype=v.dtype)),
                self.left_rank,
                self.c,
                self.lg_left,
            )
            rows.append(
                _log_F_history(self.prob, launch, self.c, [XR], zs, self.shift, self.rank, self.ode_tol, self.lg_tail)[0]
            )
        hist = np.array(rows)
        change = np.abs(np.expm1(hist[-1] - hist[-2])) if len(rows) > 1 else np.full(zs.size, np.nan)
        return CharFnResult(zs, hist[-1], hist, change, change < self.tol)


# ---------------------------------------------------------------------------
# normalized solutions


def principal_normalized(
    prob: Problem,
    endpoint: str,
    z,
    x,
    c: float | None = None,
    grid=None,
    shift: float = 0.0,
    rank: int | None = None,
    tol: float = 1e-6,
    lg_tail="auto",
    ode_tol: float = 1e-10,
) -> ScaledValue:
    """Principal solution at ``endpoint`` normalized to minimal order.

    The solution is launched at an offset point ``e`` near the endpoint
    (``a + eps`` with principal data at a finite end, Dirichlet data at a
    far point of an infinite end), divided by its value at ``(s, c)`` and
    multiplied by ``exp(sum_{l<=p} (z - s)^l / l zeta_s(l; (e, c)))``. The
    offset runs through ``grid`` (default ``eps = 1e-5, 1e-6, 1e-7``, or far
    points ``x + 4, + 8, + 12``); the last value is returned once two
    successive ones agree within ``tol``.

    Returns:
        :class:`ScaledValue` with one column per ``z``; ``y1`` holds the
        quasi-derivative.

    Raises:
        ConvergenceError: the offset limit did not stabilize.
    """
    if endpoint not in ("left", "right"):
        raise ValueError("endpoint must be 'left' or 'right'")
    ep = prob.left if endpoint == "left" else prob.right
    sgn = -1.0 if endpoint == "left" else 1.0
    zs = np.atleast_1d(np.asarray(z, dtype=complex)).ravel()
    x = float(x)
    if c is None:
        c = x
    rank = endpoint_rank(prob, endpoint) if rank is None else int(rank)
    if not ep.singular:
        y0 = np.zeros(zs.size, dtype=complex)
        Y0 = np.vstack([y0, np.full(zs.size, -sgn, dtype=complex)])
        res = propagate_chain(prob, zs, ep.x, Y0, x, ode_tol)
        return ScaledValue(zs, res.Y[0, 0], res.Y[0, 1], res.logscale[0])
    if grid is None:
        grid = ep.x - sgn * np.array([1e-5, 1e-6, 1e-7]) if ep.finite else x + sgn * np.array([4.0, 8.0, 12.0])
    grid = np.asarray(grid, dtype=float)
    use_lg = (not ep.finite) and _use_lg(prob, endpoint, lg_tail)
    B = np.concatenate([zs, [shift]])
    w = zs - shift
    logs, y_last = [], None
    for e in grid:
        if ep.finite:
            y0, y1 = principal_data(prob, endpoint, float(e), B)
        else:
            y0, y1 = np.zeros(B.size), np.full(B.size, -sgn)
        Y0 = np.vstack([np.asarray(y0, dtype=complex), np.asarray(y1, dtype=complex)])
        pts = np.unique([x, c])
        res = propagate_chain(prob, B, float(e), Y0, float(pts[0] if endpoint == "right" else pts[-1]), ode_tol, x_out=pts)
        ix, ic = int(np.searchsorted(pts, x)), int(np.searchsorted(pts, c))
        lx = _log_phi(res, ix)
        lv = lx[:-1] - _log_phi(res, ic)[-1]
        if rank > 0:
            zl = _zeta_chain(prob, c, (0.0, 1.0), (0.0, 0.0), shift, rank, [float(e)], ode_tol)[:, 0]
            lv = lv + _reg_sum(w, zl)
        if use_lg:
            lv = lv + lg_tail_correction(prob, float(e), w, shift, rank)
        logs.append(lv)
        y_last = (res, ix, lv)
    change = np.max(np.abs(np.expm1(logs[-1] - logs[-2]))) if len(logs) > 1 else 0.0
    if not change < tol:
        raise ConvergenceError(f"principal solution not stabilized in the offset (change {change:.3g})")
    res, ix, lv = y_last
    y = res.Y[ix, 0, :-1]
    y1 = res.Y[ix, 1, :-1]
    # rescale so that y carries the normalized log value
    base = np.log(y.astype(complex)) + res.logscale[ix, :-1]
    adj = lv - base
    return ScaledValue(zs, y * np.exp(1j * adj.imag), y1 * np.exp(1j * adj.imag), res.logscale[ix, :-1] + adj.real)


def nonprincipal_normalized(
    prob: Problem,
    endpoint: str,
    z,
    x,
    c: float,
    X_grid,
    shift: float = 0.0,
    rank: int | None = None,
    tol: float = 1e-6,
    lg_tail="auto",
    ode_tol: float = 1e-10,
    max_perturb: int = 4,
) -> ScaledValue:
    """``theta(z, x) = phi_c(z, x) / G_c(z)``, nonprincipal at the right end.

    ``G_c`` is :func:`truncated_charfn` on ``X_grid``. If ``G_c`` nearly
    vanishes at some ``z`` (``z`` close to an eigenvalue of the problem on
    ``(c, b)``) the point ``c`` is moved by ``0.1`` up to ``max_perturb``
    times. Beyond the last truncation point the solution is continued on
    the log route of :func:`propagate_log`. Only the right end is supported.

    Raises:
        ValueError: ``z`` keeps hitting a zero of ``G_c``.
    """
    if endpoint != "right":
        raise ValueError("nonprincipal solutions are built at the right end")
    zs = np.atleast_1d(np.asarray(z, dtype=complex)).ravel()
    x = float(x)
    for k in range(max_perturb + 1):
        cc = c + 0.1 * k
        if not cc < x:
            break
        G = truncated_charfn(prob, cc, X_grid, zs, shift, rank, tol, lg_tail, ode_tol)
        if np.all(G.log_value.real > math.log(1e-8)):
            x_lin = min(x, float(X_grid[-1]))
            res = propagate_chain(prob, zs, cc, np.array([0.0, 1.0]), x_lin, ode_tol)
            y, y1, ls = res.Y[0, 0].astype(complex), res.Y[0, 1].astype(complex), res.logscale[0]
            if x > x_lin:
                # beyond the truncation grid the solution grows monotonically
                ly, v = propagate_log(prob, zs, x_lin, y, y1, x, ode_tol)
                y = np.exp(1j * ly.imag)
                y1, ls = v * y, ls + ly.real
            phase = np.exp(-1j * G.log_value.imag)
            return ScaledValue(zs, y * phase, y1 * phase, ls - G.log_value.real)
    raise ValueError("z is an eigenvalue of every tried truncation (c, b); no c' found")


# ---------------------------------------------------------------------------
# order of growth


def estimate_order(F, radii, n_angles: int = 64) -> float:
    """Slope of ``ln ln max_{|z|=r} |F|`` against ``ln r`` by least squares.

    ``F`` is a :class:`CharFnEval`, a :class:`HadamardProduct` or any callable
    returning ``ln F`` through a ``log`` or ``log_value`` method. Radii above
    30 are refused for truncated evaluations.

    Raises:
        ConvergenceError: evaluations on the largest circle did not converge.
        ValueError: fewer than two radii, fewer than 64 angles, or a maximum
            modulus not exceeding ``e``.
    """
    radii = np.asarray(radii, dtype=float)
    if radii.size < 2 or np.any(np.diff(radii) <= 0) or radii[0] <= 0:
        raise ValueError("need at least two increasing positive radii")
    if n_angles < 64:
        raise ValueError("need at least 64 angles per circle")
    th = 2.0 * np.pi * (np.arange(n_angles) + 0.5) / n_angles
    zs = (radii[:, None] * np.exp(1j * th)[None, :]).ravel()
    if isinstance(F, CharFnEval):
        if radii[-1] > ORDER_RADIUS_CAP:
            raise ValueError(f"radii are capped at {ORDER_RADIUS_CAP:g} for truncated evaluations")
        res = F.evaluate(zs)
        lg = res.log_value.real.reshape(radii.size, n_angles)
        if not np.all(res.converged.reshape(radii.size, n_angles)[-1]):
            raise ConvergenceError("characteristic function not converged on the largest circle")
    elif isinstance(F, HadamardProduct):
        lg = F.log_value(zs).real.reshape(radii.size, n_angles)
    else:
        lg = np.log(np.abs(np.asarray(F(zs)))).reshape(radii.size, n_angles)
    M = lg.max(axis=1)
    if np.any(M <= 1.0):
        raise ValueError("maximum modulus too small for a log-log fit; use larger radii")
    return float(np.polyfit(np.log(radii), np.log(M), 1)[0])
