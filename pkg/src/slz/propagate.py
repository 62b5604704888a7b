"""Overflow-safe propagation of ``tau f = z f`` in quasi-derivative form.

The first-order system is ``y' = y1 / p``, ``y1' = (q - z r) y``. The
general entry point :func:`propagate_chain` integrates the inhomogeneous
chain ``(tau - z) f_j = f_{j-1}`` for ``j = 0..J`` at a batch of spectral
parameters at once. Because the system is linear, each batch column can be
renormalized at will; the accumulated log factor is tracked separately.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.integrate import DOP853

from .problems import Problem

__all__ = [
    "PropagationError",
    "Trajectory",
    "WronskianValue",
    "ChainResult",
    "propagate",
    "propagate_chain",
    "propagate_log",
    "wronskian",
]

RESCALE_LO = 1e-2
RESCALE_HI = 1e2


class PropagationError(RuntimeError):
    """Integration failed; ``x`` is where it stopped."""

    def __init__(self, message: str, x: float):
        super().__init__(f"{message} (at x = {x:.17g})")
        self.x = x


@dataclass
class ChainResult:
    """Batched chain solution sampled at output points.

    Attributes:
        x: output points in the order requested.
        Y: array of shape ``(len(x), 2 (J + 1), B)``; rows alternate
            ``f_j`` and its quasi-derivative.
        logscale: array ``(len(x), B)``; the true state is ``Y * exp(logscale)``.
    """

    x: np.ndarray
    Y: np.ndarray
    logscale: np.ndarray

    def component(self, j: int, quasi: bool = False) -> np.ndarray:
        return self.Y[:, 2 * j + int(quasi), :]


def _check_range(prob: Problem, x0: float, x1: float) -> None:
    a, b = prob.interval
    for x in (x0, x1):
        if not math.isfinite(x):
            raise ValueError("propagation endpoints must be finite")
        at_a = x == a and not prob.left.singular
        at_b = x == b and not prob.right.singular
        if not ((a < x < b) or at_a or at_b):
            raise ValueError(f"x = {x!r} is outside the open interval ({a}, {b})")


def propagate_chain(
    prob: Problem,
    z,
    x0: float,
    Y0,
    x1: float,
    tol: float = 1e-10,
    x_out=None,
    keep_steps: bool = False,
) -> ChainResult:
    """Integrate the chain ``(tau - z) f_j = f_{j-1}`` from ``x0`` to ``x1``.

    Args:
        prob: the problem.
        z: scalar or 1-D array of spectral parameters (batch of size B).
        x0, x1: start and end; ``x1 < x0`` integrates backward.
        Y0: initial state, shape ``(2 (J + 1),)`` shared by all columns or
            ``(2 (J + 1), B)``.
        tol: relative and absolute local error tolerance.
        x_out: points at which to record the state (default: ``[x1]``).
        keep_steps: also record every accepted step point.

    Raises:
        PropagationError: step size underflow or a non-finite coefficient.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    _check_range(prob, x0, x1)
    zs = np.atleast_1d(np.asarray(z))
    B = zs.size
    Y0 = np.asarray(Y0)
    if Y0.ndim == 1:
        Y0 = np.repeat(Y0[:, None], B, axis=1)
    n2 = Y0.shape[0]
    if n2 % 2 or Y0.shape[1] != B:
        raise ValueError("Y0 must have shape (2(J+1),) or (2(J+1), B)")
    J = n2 // 2 - 1
    cplx = np.iscomplexobj(zs) or np.iscomplexobj(Y0)
    dtype = complex if cplx else float
    zs = zs.astype(dtype)
    state = Y0.astype(dtype).copy()
    direction = 1.0 if x1 >= x0 else -1.0

    xo = np.atleast_1d(np.asarray([x1] if x_out is None else x_out, dtype=float))
    lo, hi = min(x0, x1), max(x0, x1)
    if np.any((xo < lo) | (xo > hi)):
        raise ValueError("x_out points must lie between x0 and x1")
    order = np.argsort(direction * xo, kind="stable")
    out_Y = np.empty((xo.size, n2, B), dtype=dtype)
    out_s = np.empty((xo.size, B))
    k = 0
    steps_x, steps_Y, steps_s = [], [], []

    logscale = np.zeros(B)
    m0 = np.max(np.abs(state), axis=0)
    nz = m0 > 0
    state[:, nz] /= m0[nz]
    logscale[nz] = np.log(m0[nz])

    while k < xo.size and xo[order[k]] == x0:
        out_Y[order[k]] = state
        out_s[order[k]] = logscale
        k += 1
    if keep_steps:
        steps_x.append(x0)
        steps_Y.append(state.copy())
        steps_s.append(logscale.copy())
    if x0 == x1:
        return _finish(xo, out_Y, out_s, keep_steps, steps_x, steps_Y, steps_s)

    P, Q, R = prob.p, prob.q, prob.r
    zr = zs if J == 0 else zs[None, :]

    def rhs(x, Yflat):
        p, q, r = P(x), Q(x), R(x)
        if not (p > 0 and r > 0 and math.isfinite(p + q + r)):
            raise PropagationError("invalid coefficient value", float(x))
        Y = Yflat.reshape(n2, B)
        d = np.empty_like(Y)
        d[0::2] = Y[1::2] / p
        d[1::2] = (q - zr * r) * Y[0::2]
        if J:
            d[3::2] -= r * Y[0:-2:2]
        return d.ravel()

    solver = DOP853(rhs, x0, state.ravel(), x1, rtol=tol, atol=tol * 1e-3)
    while solver.status == "running":
        msg = solver.step()
        if solver.status == "failed":
            raise PropagationError(f"step failure: {msg}", float(solver.t))
        t_new = solver.t
        if k < xo.size:
            dense = None
            while k < xo.size and direction * (xo[order[k]] - t_new) <= 0:
                xk = xo[order[k]]
                if xk == t_new:
                    val = solver.y.reshape(n2, B)
                else:
                    dense = dense or solver.dense_output()
                    val = dense(xk).reshape(n2, B)
                out_Y[order[k]] = val
                out_s[order[k]] = logscale
                k += 1
        Y = solver.y.reshape(n2, B)
        m = np.max(np.abs(Y), axis=0)
        bad = (m > 0) & ((m > RESCALE_HI) | (m < RESCALE_LO))
        if np.any(bad):
            if not np.all(np.isfinite(m)):
                raise PropagationError("non-finite state", float(t_new))
            fac = np.ones(B)
            fac[bad] = 1.0 / m[bad]
            solver.y = (Y * fac).ravel()
            solver.f = (solver.f.reshape(n2, B) * fac).ravel()
            logscale = logscale - np.log(fac)
        if keep_steps:
            steps_x.append(t_new)
            steps_Y.append(solver.y.reshape(n2, B).copy())
            steps_s.append(logscale.copy())
    # normalize recorded outputs into the O(1) band
    mags = np.max(np.abs(out_Y), axis=1)
    fix = (mags > 0) & ((mags > RESCALE_HI) | (mags < RESCALE_LO))
    if np.any(fix):
        scale = np.where(fix, mags, 1.0)
        out_Y = out_Y / scale[:, None, :]
        out_s = out_s + np.log(scale)
    return _finish(xo, out_Y, out_s, keep_steps, steps_x, steps_Y, steps_s)


def propagate_log(prob: Problem, z, x0: float, y0, y1_0, x1: float, tol: float = 1e-10):
    """Propagate a dominant solution through a region without zeros.

    Integrates the Riccati variable ``v = y^[1] / y`` together with
    ``ln y``: ``v' = q - z r - v^2 / p`` and ``(ln y)' = v / p``. Both stay
    smooth where the solution grows monotonically, so steps can be far
    longer than for the linear system. The route is only reliable for the
    growing solution of a classically forbidden region; a zero of ``y``
    shows up as a blow-up of ``v`` and is reported.

    Returns:
        ``(log_y, v)`` at ``x1`` for each ``z``; ``log_y`` is relative to
        ``ln y(x0)`` plus ``ln y0``.

    Raises:
        PropagationError: ``v`` blows up (a zero of the solution) or the
            step size underflows.
    """
    _check_range(prob, x0, x1)
    zs = np.atleast_1d(np.asarray(z, dtype=complex))
    y0 = np.broadcast_to(np.asarray(y0, dtype=complex), zs.shape)
    y1_0 = np.broadcast_to(np.asarray(y1_0, dtype=complex), zs.shape)
    if np.any(y0 == 0):
        raise ValueError("the log route needs y(x0) != 0")
    B = zs.size
    P, Q, R = prob.p, prob.q, prob.r
    v0 = y1_0 / y0
    if x0 == x1:
        return np.log(y0), v0

    def rhs(x, u):
        p, q, r = P(x), Q(x), R(x)
        if not (p > 0 and r > 0 and math.isfinite(p + q + r)):
            raise PropagationError("invalid coefficient value", float(x))
        v = u[:B]
        return np.concatenate([q - zs * r - v * v / p, v / p])

    state = np.concatenate([v0, np.zeros(B, dtype=complex)])
    solver = DOP853(rhs, x0, state, x1, rtol=tol, atol=tol)
    bound = 1e8 * (1.0 + np.max(np.abs(v0)))
    while solver.status == "running":
        msg = solver.step()
        if solver.status == "failed":
            raise PropagationError(f"step failure: {msg}", float(solver.t))
        if np.max(np.abs(solver.y[:B])) > bound:
            raise PropagationError("solution has a zero on the log route", float(solver.t))
    return np.log(y0) + solver.y[B:], solver.y[:B]


def _finish(xo, out_Y, out_s, keep_steps, steps_x, steps_Y, steps_s):
    res = ChainResult(xo, out_Y, out_s)
    if keep_steps:
        res.steps = ChainResult(np.asarray(steps_x), np.asarray(steps_Y), np.asarray(steps_s))
    return res


@dataclass
class Trajectory:
    """A propagated solution on an increasing mesh.

    The true solution at ``mesh[i]`` is ``(y[i], y1[i]) * exp(logscale[i])``.
    """

    z: complex
    mesh: np.ndarray
    y: np.ndarray
    y1: np.ndarray
    logscale: np.ndarray
    tol: float

    def true_values(self) -> tuple[np.ndarray, np.ndarray]:
        f = np.exp(self.logscale)
        return self.y * f, self.y1 * f

    def at(self, x: float) -> tuple[complex, complex, float]:
        """Scaled pair and log factor at an exact mesh node."""
        i = int(np.searchsorted(self.mesh, x))
        if i >= self.mesh.size or self.mesh[i] != x:
            raise KeyError(f"{x!r} is not a mesh node")
        return self.y[i], self.y1[i], self.logscale[i]

    def end_values(self, x: float) -> tuple[complex, complex]:
        y, y1, s = self.at(x)
        return y * math.exp(s), y1 * math.exp(s)

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x", "re_y", "im_y", "re_y1", "im_y1", "logscale"])
        for x, y, y1, s in zip(self.mesh, self.y, self.y1, self.logscale):
            w.writerow([f"{v:.17g}" for v in (x, y.real, y.imag, y1.real, y1.imag, s)])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text


def propagate(
    prob: Problem,
    z: complex,
    x0: float,
    y0: complex,
    y1_0: complex,
    x1: float,
    tol: float = 1e-10,
    mesh=None,
) -> Trajectory:
    """Solve ``tau f = z f`` with ``(f, f^[1])(x0) = (y0, y1_0)`` up to ``x1``.

    The returned mesh is the accepted step points (or ``mesh`` if given,
    together with ``x0`` and ``x1``), sorted increasingly regardless of the
    integration direction.
    """
    Y0 = np.array([y0, y1_0])
    extra = [] if mesh is None else list(np.asarray(mesh, dtype=float))
    pts = np.unique(np.asarray([x0, x1] + extra, dtype=float))
    res = propagate_chain(prob, z, x0, Y0, x1, tol, x_out=pts, keep_steps=mesh is None)
    src = res.steps if mesh is None else res
    xs = np.asarray(src.x)
    idx = np.argsort(xs)
    xs = xs[idx]
    Y = src.Y[idx, :, 0].astype(complex)
    s = src.logscale[idx, 0]
    keep = np.concatenate([[True], np.diff(xs) > 0])
    return Trajectory(complex(z), xs[keep], Y[keep, 0], Y[keep, 1], s[keep], tol)


@dataclass(frozen=True)
class WronskianValue:
    value: complex
    drift: float


def wronskian(f: Trajectory, g: Trajectory) -> WronskianValue:
    """``W(f, g) = f g^[1] - f^[1] g`` on the shared mesh nodes.

    ``value`` is taken at the first shared node; ``drift`` is the maximal
    relative deviation from it over all shared nodes.
    """
    if not np.isclose(f.z, g.z, rtol=1e-14, atol=1e-14):
        raise ValueError("trajectories have different spectral parameters")
    common, i_f, i_g = np.intersect1d(f.mesh, g.mesh, return_indices=True)
    if common.size == 0:
        raise ValueError("trajectories share no mesh nodes")
    w = (f.y[i_f] * g.y1[i_g] - f.y1[i_f] * g.y[i_g]) * np.exp(f.logscale[i_f] + g.logscale[i_g])
    w0 = w[0]
    if w0 == 0:
        drift = float(np.max(np.abs(w))) if common.size else 0.0
    else:
        drift = float(np.max(np.abs(w - w0)) / abs(w0))
    return WronskianValue(complex(w0), drift)
