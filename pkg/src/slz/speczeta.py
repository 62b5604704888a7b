"""Spectral zeta functions by direct summation and by a keyhole contour.

For ``Re s`` above the order ``rho`` of a characteristic function ``F``,

    zeta(s) = e^{i s (pi - Psi)} sin(pi s) / pi * int_R^inf t^-s d/dt ln F(t e^{i Psi}) dt
              - 1 / (2 pi i) * oint_{|z|=R} z^-s (ln F)'(z) dz,

with the circle run counterclockwise and the branch of ``z^-s`` taken with
``arg z`` in ``(Psi - 2 pi, Psi)``. The same branch gives a negative
eigenvalue the term ``e^{i pi s} |lambda|^-s``. Both conventions are checked
against :func:`zeta_sum` at non-integer ``s``; integer ``s`` is left to the
direct sum.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.optimize import minimize_scalar

from .charfn import CharFnEval, HadamardProduct, _power_model, exponent_of_convergence

__all__ = [
    "ContourResult",
    "QuadratureError",
    "ZetaQuery",
    "logderiv_charfn",
    "zeta_contour",
    "zeta_sum",
]

_GL16 = np.polynomial.legendre.leggauss(16)
_GL32 = np.polynomial.legendre.leggauss(32)


class QuadratureError(RuntimeError):
    """The ray integral did not settle."""


# ---------------------------------------------------------------------------
# direct summation


def zeta_sum(eigs, s, tail: bool = True) -> complex:
    """``sum lambda_n^-s`` over the list plus a power-law tail.

    Negative eigenvalues contribute ``e^{i pi s} |lambda|^-s``. The tail
    continues the top half of the list as ``A (n + delta)^beta`` and is summed
    with the midpoint Euler-Maclaurin form.

    Raises:
        ValueError: a zero eigenvalue, fewer than 20 values, or
            ``Re s`` not above the exponent of convergence of the list.
    """
    lam = np.sort(np.asarray(getattr(eigs, "eigs", eigs), dtype=float))
    s = complex(s)
    if lam.size < 20:
        raise ValueError("need at least 20 eigenvalues")
    if np.any(lam == 0):
        raise ValueError("zero eigenvalue in the list; shift the spectrum")
    kappa = exponent_of_convergence(lam[lam > 0])
    if not s.real > kappa:
        raise ValueError(f"Re s = {s.real:g} is not above the exponent of convergence {kappa:.4g}")
    mags = np.abs(lam)
    terms = mags[::-1] ** (-s)
    neg = lam[::-1] < 0
    terms = np.where(neg, np.exp(1j * math.pi * s) * terms, terms)
    total = complex(np.sum(terms))
    if tail:
        A, delta, beta = _power_model(np.sort(mags))
        N = mags.size
        a = N + 0.5 + delta
        e = beta * s
        integral = A ** (-s) * a ** (1.0 - e) / (e - 1.0)
        deriv = -e * A ** (-s) * a ** (-e - 1.0)
        total += integral + deriv / 24.0
    return total


# ---------------------------------------------------------------------------
# logarithmic derivatives


def _log_of(F, zs: np.ndarray) -> np.ndarray:
    if isinstance(F, CharFnEval):
        return F.evaluate(zs).log_value
    if isinstance(F, HadamardProduct):
        return F.log_value(zs)
    if hasattr(F, "log"):
        return np.asarray(F.log(zs), dtype=complex)
    return np.log(np.asarray(F(zs), dtype=complex))


def _fd_logderiv(F, z: np.ndarray, h: np.ndarray):
    """Fourth-order central differences at steps ``h`` and ``h / 2``.

    Returns the Richardson-combined value and the difference between the
    two step sizes as an error estimate.
    """
    ks = np.array([-2.0, -1.0, 1.0, 2.0])
    pts = np.concatenate([z, (z[:, None] + h[:, None] * ks).ravel(), (z[:, None] + 0.5 * h[:, None] * ks).ravel()])
    L = _log_of(F, pts)
    n = z.size
    L0 = L[:n]
    Lh = L[n : 5 * n].reshape(n, 4)
    Lh2 = L[5 * n :].reshape(n, 4)
    lv = np.concatenate([L0.real, Lh.real.ravel(), Lh2.real.ravel()])
    if np.any(~np.isfinite(lv)):
        raise ZeroDivisionError("F vanishes within 2h of z")

    def d(vals, step):
        # differences relative to the centre, with imaginary parts wrapped
        dv = vals - L0[:, None]
        dv = dv.real + 1j * (np.angle(np.exp(1j * dv.imag)))
        return (dv @ np.array([1.0, -8.0, 8.0, -1.0])) / (12.0 * step)

    d1 = d(Lh, h)
    d2 = d(Lh2, 0.5 * h)
    err = np.abs(d2 - d1)
    # a nearby zero makes the two step sizes disagree at leading order
    if np.any(err > 1e-2 * (1.0 + np.abs(d2))):
        raise ZeroDivisionError("F vanishes within 2h of z")
    return d2 + (d2 - d1) / 15.0, err


def logderiv_charfn(F, z, h: float | None = None):
    """``d/dz ln F`` at ``z``.

    A :class:`HadamardProduct` uses its analytic series. Any other ``F``
    (a :class:`CharFnEval` or a callable) is differenced: fourth-order central
    differences at ``h`` and ``h / 2`` combined by one Richardson step. The
    default ``h`` is ``1e-3 (1 + |z|)``, reduced where a pilot difference
    shows the phase of ``F`` turning quickly.

    Raises:
        ZeroDivisionError: ``F`` vanishes within ``2h`` of ``z``.
    """
    zs = np.atleast_1d(np.asarray(z, dtype=complex))
    if isinstance(F, HadamardProduct):
        out = F.logderiv(zs)
    else:
        if h is not None:
            hh = np.full(zs.shape, float(h))
        else:
            # keep |(ln F)'| h well below pi so that phase differences do not wrap
            hp = 1e-5 * (1.0 + np.abs(zs))
            Lp = _log_of(F, np.concatenate([zs - hp, zs + hp]))
            dp = Lp[zs.size :] - Lp[: zs.size]
            g0 = np.abs(dp.real + 1j * np.angle(np.exp(1j * dp.imag))) / (2.0 * hp)
            hh = np.minimum(1e-3 * (1.0 + np.abs(zs)), 0.25 / (1.0 + g0))
        out, _ = _fd_logderiv(F, zs, hh)
    return out if np.ndim(z) else complex(out[0])


# ---------------------------------------------------------------------------
# contour representation


@dataclass(frozen=True)
class ZetaQuery:
    """Parameters of one contour evaluation.

    Attributes:
        s: complex exponent with ``Re s`` above the order of ``F``.
        psi: ray angle in ``(pi / 2, pi)``.
        R: circle radius below the smallest eigenvalue modulus.
        m0: multiplicity of a zero eigenvalue.
        tol: absolute tolerance of the ray integral.
        rho: order of ``F``; estimated from the ray data when None.
        circle_nodes: Gauss-Legendre nodes on the circle (at least 256).
        t_max: largest ray cutoff tried before giving up.
    """

    s: complex
    psi: float = 0.75 * math.pi
    R: float = 1.0
    m0: int = 0
    tol: float = 1e-6
    rho: float | None = None
    circle_nodes: int = 256
    t_max: float = 8192.0

    def __post_init__(self):
        if not (math.pi / 2 < self.psi < math.pi):
            raise ValueError("psi must lie in (pi/2, pi)")
        if not self.R > 0:
            raise ValueError("R must be positive")
        if self.m0 < 0:
            raise ValueError("m0 must be nonnegative")
        if self.circle_nodes < 256:
            raise ValueError("use at least 256 circle nodes")
        s = complex(self.s)
        k = round(s.real)
        if k >= 1 and abs(s - k) < 1e-3:
            raise ValueError("s is within 1e-3 of a positive integer; use zeta_sum there")


@dataclass
class ContourResult:
    s: complex
    value: complex
    ray_part: complex
    circle_part: complex
    psi: float
    R: float
    tol: float
    T: float
    rho: float
    ray_error: float

    def to_json(self, path=None) -> str:
        d = {
            "s": [self.s.real, self.s.imag],
            "value_re": self.value.real,
            "value_im": self.value.imag,
            "ray_part": [self.ray_part.real, self.ray_part.imag],
            "circle_part": [self.circle_part.real, self.circle_part.imag],
            "psi": self.psi,
            "R": self.R,
            "tol": self.tol,
            "T": self.T,
            "rho": self.rho,
            "ray_error": self.ray_error,
        }
        text = json.dumps(d, indent=2, sort_keys=True, default=float)
        if path is not None:
            Path(path).write_text(text + "\n")
        return text


class _RayData:
    """Cache of ``(ln F)'`` along one ray, panel by panel."""

    def __init__(self, F, psi: float, R: float):
        self.F = F
        self.e = complex(math.cos(psi), math.sin(psi))
        self.R = R
        self.panels: list[tuple[float, float, np.ndarray, np.ndarray, np.ndarray, np.ndarray]] = []

    def _nodes(self, lo, hi, rule):
        x, w = rule
        return 0.5 * (hi - lo) * x + 0.5 * (hi + lo), 0.5 * (hi - lo) * w

    def extend(self, T: float):
        """Make sure panels cover ``[R, T]`` (geometric, ratio 2)."""
        edges = []
        hi = self.panels[-1][1] if self.panels else self.R
        while hi < T * (1 - 1e-12):
            lo, hi = hi, 2.0 * hi
            edges.append((lo, hi))
        if not edges:
            return
        ts = []
        for lo, hi in edges:
            ts.append(self._nodes(lo, hi, _GL32)[0])
            ts.append(self._nodes(lo, hi, _GL16)[0])
        allt = np.concatenate(ts)
        vals = self._logderiv(allt * self.e)
        k = 0
        for lo, hi in edges:
            t32, w32 = self._nodes(lo, hi, _GL32)
            t16, w16 = self._nodes(lo, hi, _GL16)
            v32 = vals[k : k + 32]
            v16 = vals[k + 32 : k + 48]
            k += 48
            self.panels.append((lo, hi, t32, w32 * v32, t16, w16 * v16))

    def _logderiv(self, zs):
        # group by magnitude so that one propagation covers similar |z|
        out = np.empty(zs.size, dtype=complex)
        mags = np.abs(zs)
        order = np.argsort(mags)
        for chunk in np.array_split(order, max(1, int(math.ceil(zs.size / 96)))):
            out[chunk] = logderiv_charfn(self.F, zs[chunk])
        return out


def _fit_tail(t: np.ndarray, g: np.ndarray, s: complex, rho: float | None):
    """Fit ``g(t) = sum c_k t^mu_k`` on the far nodes; returns ``(mus, coefs, rho)``."""

    def basis(mu):
        cand = [mu, 0.0, -1.0, mu - 1.0, -mu - 2.0]
        keep = []
        for m in cand:
            if m < s.real - 1.0 and all(abs(m - k) > 1e-6 for k in keep):
                keep.append(m)
        return keep

    def solve(mu):
        mus = basis(mu)
        M = np.stack([t**m for m in mus], axis=1)
        coef, *_ = np.linalg.lstsq(M.astype(complex), g, rcond=None)
        return mus, coef, float(np.linalg.norm(M @ coef - g))

    if rho is None:
        res = minimize_scalar(lambda m: solve(m)[2], bounds=(-0.95, min(s.real - 1.0, 3.0) - 1e-3), method="bounded")
        mu = float(res.x)
    else:
        mu = rho - 1.0
    mus, coef, _ = solve(mu)
    return mus, coef, mu + 1.0


def _ray_integral(ray: _RayData, s: complex, T: float, rho):
    total = 0.0j
    err = 0.0
    for lo, hi, t32, g32, t16, g16 in ray.panels:
        if hi > T * (1 + 1e-12):
            break
        a = np.sum(t32 ** (-s) * g32)
        b = np.sum(t16 ** (-s) * g16)
        total += a
        err += abs(a - b)
    far = [p for p in ray.panels if p[1] <= T * (1 + 1e-12)][-2:]
    t = np.concatenate([p[2] for p in far])
    g = np.concatenate([p[3] / (0.5 * (p[1] - p[0]) * _GL32[1]) for p in far])
    mus, coef, rho_used = _fit_tail(t, g, s, rho)
    tail = sum(c * T ** (m - s + 1.0) / (s - m - 1.0) for m, c in zip(mus, coef))
    return total + tail, err, rho_used


def zeta_contour(F, q: ZetaQuery, cache: dict | None = None) -> ContourResult:
    """Spectral zeta value from the keyhole contour representation.

    The ray integral runs over geometric panels (ratio 2, 32-point
    Gauss-Legendre, with a 16-point rule as error estimate) from ``R`` to a
    cutoff ``T``; beyond ``T`` the log-derivative is replaced by a fitted
    expansion ``c_0 t^(rho - 1) + c_1 + c_2 / t + ...`` (powers kept only
    where integrable) and integrated exactly. ``T`` doubles from ``64 R``
    until two successive totals differ by less than ``tol``. The circle uses
    Gauss-Legendre in the angle over ``(Psi - 2 pi, Psi)``.

    Log-derivative samples do not depend on ``s``; pass the same ``cache``
    dict to several calls with one ``F`` to reuse them.

    Raises:
        QuadratureError: the ray total does not settle below ``t_max``.
        ValueError: bad query (see :class:`ZetaQuery`), ``Re s`` not above
            the order of ``F``, or a product zero inside the circle.
    """
    s = complex(q.s)
    rho = q.rho
    if rho is None and isinstance(F, HadamardProduct):
        rho = F.order
    if rho is not None and not s.real > rho:
        raise ValueError(f"Re s = {s.real:g} must exceed the order {rho:g}")
    if isinstance(F, HadamardProduct) and np.min(np.abs(F.zeros)) <= q.R:
        raise ValueError(f"R = {q.R:g} must lie below the smallest nonzero zero of F")
    cache = {} if cache is None else cache
    key = (id(F), q.psi, q.R)
    ray = cache.get(("ray",) + key)
    if ray is None:
        ray = cache[("ray",) + key] = _RayData(F, q.psi, q.R)
    e = ray.e
    m0 = q.m0
    T = 64.0 * q.R
    prev = None
    while True:
        ray.extend(T)
        val, err, rho_used = _ray_integral(ray, s, T, rho)
        if prev is not None and abs(val - prev) < q.tol:
            break
        prev = val
        T *= 2.0
        if T > q.t_max:
            raise QuadratureError(f"ray integral did not settle by T = {q.t_max:g} (last change {abs(val - prev):.3g})")
    if not s.real > rho_used:
        raise ValueError(f"Re s = {s.real:g} must exceed the estimated order {rho_used:.3g}")
    # d/dt ln F(t e) = e (ln F)'(t e); a zero of order m0 at the origin adds m0 / t
    ray_int = e * val
    if m0:
        ray_int -= m0 * q.R ** (-s) / s
    ray_part = np.exp(1j * s * (math.pi - q.psi)) * np.sin(math.pi * s) / math.pi * ray_int

    x, w = np.polynomial.legendre.leggauss(q.circle_nodes)
    phi = q.psi - math.pi + math.pi * x
    z = q.R * np.exp(1j * phi)
    ckey = ("circle", q.circle_nodes) + key
    g = cache.get(ckey)
    if g is None:
        g = cache[ckey] = logderiv_charfn(F, z)
    if m0:
        g = g - m0 / z
    zpow = q.R ** (-s) * np.exp(-1j * s * phi)
    # dz = i z dphi, weight pi * w for the map x -> phi
    circle = -(1.0 / (2j * math.pi)) * np.sum(zpow * g * 1j * z * math.pi * w)
    return ContourResult(s, complex(ray_part + circle), complex(ray_part), complex(circle), q.psi, q.R, q.tol, T,
                         float(rho_used), float(err))
