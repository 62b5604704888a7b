"""Convergence of truncated eigenvalues toward a limit-point end.

A sweep tabulates ``lambda_j(x)``, the Dirichlet eigenvalues on ``(c, x)``,
together with the gaps ``delta_j(x) = lambda_j(x) - lambda_j``. Gaps that
fall below the eigensolver noise floor are taken from the first-order
truncation formula

    delta_j(x) ~ 1 / ( int_c^x r u^2 * int_{x0}^x dt / (p u^2) ),

where ``u`` is the eigenfunction at ``lambda_j`` (principal at the right end)
and ``x0`` lies past its last zero. The formula follows from perturbing the
regular-at-``c`` solution in ``lambda``; its relative error is of the order of
the gap itself.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.integrate import simpson

from .eigensolve import bc_eigs
from .partialzeta import PartialZetaTable
from .problems import BoundaryCondition, Problem
from .propagate import propagate_chain

__all__ = [
    "Fig1Statistics",
    "MonotonicityError",
    "TruncationSweep",
    "asymptotic_gap",
    "fig1_statistics",
    "gnuplot_script",
    "product_decreasing",
    "propconv_residual",
    "sweep_csv",
    "total_variation",
    "truncation_sweep",
]


class MonotonicityError(RuntimeError):
    """``lambda_j(x)`` failed to decrease in ``x`` above the noise floor."""


def total_variation(values) -> float:
    v = np.asarray(values, dtype=float)
    v = v[np.isfinite(v)]
    return float(np.sum(np.abs(np.diff(v)))) if v.size > 1 else 0.0


# ---------------------------------------------------------------------------
# asymptotic gap


def _log_integral(logf: np.ndarray, xs: np.ndarray) -> float:
    """``ln int exp(logf) dx`` over the samples, shifted to avoid overflow."""
    m = float(np.max(logf))
    return m + math.log(simpson(np.exp(logf - m), x=xs))


def asymptotic_gap(prob: Problem, lam: float, x_targets, c: float, x_far: float | None = None,
                   n_mesh: int = 8001, tol: float = 1e-11) -> np.ndarray:
    """``ln delta(x)`` from the first-order truncation formula.

    ``u`` is integrated backward from ``x_far`` (default: the largest target
    plus half of it, at least 20 further), where any start is attracted to
    the solution that is principal at the right end. ``lam`` must be the
    limit eigenvalue to full precision.

    Raises:
        ValueError: ``u`` has a zero at or beyond the smallest target.
    """
    xt = np.atleast_1d(np.asarray(x_targets, dtype=float))
    xmax = float(np.max(xt))
    if x_far is None:
        x_far = xmax + max(20.0, 0.5 * xmax)
    mesh = np.unique(np.concatenate([np.linspace(c, x_far, n_mesh), xt]))
    res = propagate_chain(prob, float(lam), x_far, np.array([1.0, 0.0]), c, tol=tol, x_out=mesh[::-1])
    y = res.Y[::-1, 0, 0].real
    ls = res.logscale[::-1, 0].real if res.logscale.ndim == 2 else res.logscale[::-1].real
    lnu = np.log(np.abs(y)) + ls
    flips = np.nonzero(np.sign(y[1:]) * np.sign(y[:-1]) < 0)[0]
    start = flips[-1] + 1 if flips.size else 0
    # anchor past the last zero, where 1 / (p u^2) is smallest
    p = np.asarray(prob.p(mesh), dtype=float) * np.ones_like(mesh)
    r = np.asarray(prob.r(mesh), dtype=float) * np.ones_like(mesh)
    i0 = start + int(np.argmax(2.0 * lnu[start:] + np.log(p[start:])))
    out = np.empty(xt.size)
    for k, x in enumerate(xt):
        ix = int(np.searchsorted(mesh, x))
        if ix <= i0 + 2:
            raise ValueError(f"x = {x:g} is not past the anchor beyond the last zero of the eigenfunction")
        lnN = _log_integral(2 * lnu[: ix + 1] + np.log(r[: ix + 1]), mesh[: ix + 1])
        lnK = _log_integral(-2 * lnu[i0 : ix + 1] - np.log(p[i0 : ix + 1]), mesh[i0 : ix + 1])
        out[k] = -(lnN + lnK)
    return out


# ---------------------------------------------------------------------------
# sweeps


@dataclass
class TruncationSweep:
    """Truncated eigenvalues ``lam[k, i] = lambda_{j_list[k]}(xs[i])``.

    ``log_delta`` holds ``ln(lambda_j(x) - lambda_j)``; ``method`` marks each
    cell ``eig`` (direct difference), ``asym`` (truncation formula) or
    ``floor`` (below the noise floor with no formula available, NaN).
    """

    problem: str
    c: float
    j_list: np.ndarray
    xs: np.ndarray
    lam: np.ndarray
    lam_limit: np.ndarray
    log_delta: np.ndarray
    method: np.ndarray
    limit_source: str
    symmetric: bool = False
    tol: float = 1e-10
    extras: dict = field(default_factory=dict)

    @property
    def delta(self) -> np.ndarray:
        return np.exp(self.log_delta)

    def row(self, j: int) -> int:
        hits = np.nonzero(self.j_list == j)[0]
        if not hits.size:
            raise KeyError(f"j = {j} is not in the sweep")
        return int(hits[0])


def _limits(prob: Problem, nmax: int, bc_left: BoundaryCondition):
    ref = prob.reference
    for key in (bc_left.kind, "dirichlet", "friedrichs"):
        if key in ref:
            return np.asarray(ref[key](nmax), dtype=float), "reference"
    return None, "doubled"


def truncation_sweep(prob: Problem, j_list, x_grid, bc_left=None, c: float | None = None,
                     tol: float = 1e-10, gap_floor: float = 1e-6) -> TruncationSweep:
    """Eigenvalues of the truncations ``(c, x)`` for each ``x`` in the grid.

    ``c`` defaults to the left end, moved in by ``1e-6`` when that end is
    singular. A left end at ``-inf`` gives symmetric truncations ``(-x, x)``.
    Limits come from the catalog reference spectrum when one exists, and
    otherwise from the truncation at twice the largest ``x`` (marked
    ``doubled``). Gaps below ``gap_floor`` are replaced by
    :func:`asymptotic_gap` when the right end is at ``+inf``.

    Raises:
        MonotonicityError: an above-floor ``lambda_j(x)`` does not decrease.
        ValueError: bad grid or indices.
    """
    js = np.asarray(j_list, dtype=int)
    xs = np.asarray(x_grid, dtype=float)
    if js.size == 0 or np.any(js < 1):
        raise ValueError("j_list must hold positive indices")
    if xs.ndim != 1 or xs.size == 0 or np.any(np.diff(xs) <= 0):
        raise ValueError("x_grid must be increasing")
    a, b = prob.interval
    symmetric = not math.isfinite(a)
    if c is None:
        c = a + (1e-6 if prob.left.singular else 0.0) if not symmetric else float("nan")
    if bc_left is None:
        bc_left = "friedrichs" if (not symmetric and prob.left.singular and c - a <= 1e-3) else "dirichlet"
    bc_left = BoundaryCondition.parse(bc_left)
    if np.any(xs >= b) or (not symmetric and xs[0] <= c):
        raise ValueError("x_grid must lie inside the interval")
    nmax = int(js.max())

    def eigs_at(x):
        lo = -x if symmetric else c
        return bc_eigs(prob, lo, x, bc_left, "dirichlet", nmax, tol).eigs

    limit, source = _limits(prob, nmax, bc_left)
    if limit is None:
        limit = eigs_at(2.0 * xs[-1])
    lam = np.array([eigs_at(x) for x in xs]).T[js - 1]
    lim = limit[js - 1]
    raw = lam - lim[:, None]
    log_delta = np.full(raw.shape, np.nan)
    method = np.full(raw.shape, "floor", dtype=object)
    above = raw > gap_floor
    log_delta[above] = np.log(raw[above])
    method[above] = "eig"
    for k in range(js.size):
        ok = np.nonzero(above[k])[0]
        if ok.size > 1 and np.any(np.diff(lam[k, ok]) >= 0):
            raise MonotonicityError(f"lambda_{js[k]}(x) is not decreasing above the noise floor")
        low = np.nonzero(~above[k])[0]
        if low.size and not math.isfinite(b) and not symmetric:
            log_delta[k, low] = asymptotic_gap(prob, float(lim[k]), xs[low], c)
            method[k, low] = "asym"
    done = np.isfinite(log_delta)
    lam = np.where(done & (method == "asym"), lim[:, None] + np.exp(log_delta), lam)
    return TruncationSweep(prob.name, float(c), js, xs, lam, lim, log_delta, method, source, symmetric, tol)


# ---------------------------------------------------------------------------
# statistics


@dataclass
class Fig1Statistics:
    """``f[k, i]`` and ``g[k, i]`` for ``j_list[k]`` at ``xs[i]``; ``slopes[j]`` of ``f_j``."""

    j_list: np.ndarray
    xs: np.ndarray
    f: np.ndarray
    g: np.ndarray
    slopes: dict


def fig1_statistics(sweep: TruncationSweep, zeta1=None) -> Fig1Statistics:
    """``f_j = [ln delta_j - ln delta_1] / (2 (lambda_j - lambda_1))`` and ``g_j = -ln delta_j / ln x``.

    ``f_1`` is undefined and left NaN. Slopes of ``f_j`` are least-squares
    fits against ``zeta1(x)`` (default ``ln x``) over the finite cells.

    Raises:
        ValueError: ``j = 1`` is missing from the sweep.
    """
    if 1 not in sweep.j_list:
        raise ValueError("the sweep must include j = 1")
    k1 = sweep.row(1)
    lam1 = sweep.lam_limit[k1]
    ld1 = sweep.log_delta[k1]
    abscissa = np.log(sweep.xs) if zeta1 is None else np.array([zeta1(x) for x in sweep.xs])
    f = np.full(sweep.log_delta.shape, np.nan)
    slopes = {}
    for k, j in enumerate(sweep.j_list):
        if j == 1:
            continue
        f[k] = (sweep.log_delta[k] - ld1) / (2.0 * (sweep.lam_limit[k] - lam1))
        ok = np.isfinite(f[k])
        if ok.sum() >= 2:
            slopes[int(j)] = float(np.polyfit(abscissa[ok], f[k, ok], 1)[0])
    g = -sweep.log_delta / np.log(sweep.xs)[None, :]
    return Fig1Statistics(sweep.j_list, sweep.xs, f, g, slopes)


def propconv_residual(sweep: TruncationSweep, j: int, m: int, zeta_table: PartialZetaTable,
                      rank: int = 1) -> np.ndarray:
    """``ln(delta_j / delta_m) - 2 sum_{l <= rank} (lambda_j^l - lambda_m^l) / l * zeta(l; (c, x))``.

    Eigenvalues are measured from the table's shift, so a spectrum containing
    zero can use a table built below it.

    Raises:
        ValueError: ``j == m`` or the table does not cover the sweep grid.
    """
    if j == m:
        raise ValueError("j and m must differ")
    kj, km = sweep.row(j), sweep.row(m)
    lj, lm = sweep.lam_limit[kj] - zeta_table.shift, sweep.lam_limit[km] - zeta_table.shift
    out = sweep.log_delta[kj] - sweep.log_delta[km]
    for ell in range(1, rank + 1):
        z = np.array([zeta_table(ell, x) for x in sweep.xs])
        out = out - 2.0 * (lj**ell - lm**ell) / ell * z
    return out


def product_decreasing(sweep: TruncationSweep, j: int, K: float) -> bool:
    """Whether ``delta_j(x) x^K`` strictly decreases over the top half of the grid."""
    k = sweep.row(j)
    half = sweep.xs.size // 2
    lp = sweep.log_delta[k, half:] + K * np.log(sweep.xs[half:])
    return bool(np.all(np.isfinite(lp)) and np.all(np.diff(lp) < 0))


# ---------------------------------------------------------------------------
# output


def sweep_csv(sweep: TruncationSweep, stats: Fig1Statistics | None = None, residual=None, path=None) -> str:
    """Rows ``(x, j, lambda, f_j, g_j, residual)`` with 17 significant digits."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["x", "j", "lambda", "log_delta", "method", "f_j", "g_j", "residual"])

    def fmt(v):
        return "nan" if v is None or not np.isfinite(v) else f"{v:.17g}"

    for k, j in enumerate(sweep.j_list):
        for i, x in enumerate(sweep.xs):
            f = stats.f[k, i] if stats is not None else None
            g = stats.g[k, i] if stats is not None else None
            res = residual[i] if residual is not None else None
            w.writerow([fmt(x), int(j), fmt(sweep.lam[k, i]), fmt(sweep.log_delta[k, i]), sweep.method[k, i],
                        fmt(f), fmt(g), fmt(res)])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text


def gnuplot_script(csv_name: str, j_list) -> str:
    """A gnuplot script plotting ``f_j`` and ``g_j`` against ``ln x`` from the sweep CSV."""
    lines = [
        "set datafile separator ','",
        "set key autotitle columnhead",
        "set xlabel 'ln x'",
        "set multiplot layout 1,2",
        "set ylabel 'f_j'",
    ]
    fplots = [f"'{csv_name}' using (log($1)):($2=={int(j)} ? $6 : 1/0) with linespoints title 'j={int(j)}'"
              for j in j_list if int(j) != 1]
    gplots = [f"'{csv_name}' using (log($1)):($2=={int(j)} ? $7 : 1/0) with linespoints title 'j={int(j)}'"
              for j in j_list]
    if fplots:
        lines.append("plot " + ", \\\n     ".join(fplots))
    lines.append("set ylabel 'g_j'")
    lines.append("plot " + ", \\\n     ".join(gplots))
    lines.append("unset multiplot")
    return "\n".join(lines) + "\n"
