"""Problem catalog and configuration ingestion.

A :class:`Problem` bundles the coefficient triple ``(p, q, r)`` of
``tau f = (-(p f')' + q f) / r`` with its interval, endpoint metadata and
known reference spectra.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping

import numpy as np
from scipy import integrate, special

from .expr import ExprNode, compile_expr, parse_expr

__all__ = [
    "CATALOG",
    "catalog_problem",
    "BoundaryCondition",
    "ConfigError",
    "Endpoint",
    "Problem",
    "load_problem",
    "make_problem",
]

REGULAR = "regular"
LIMIT_CIRCLE = "limit-circle"
LIMIT_POINT = "limit-point"
UNKNOWN = "unknown"
_KINDS = (REGULAR, LIMIT_CIRCLE, LIMIT_POINT, UNKNOWN)


class ConfigError(ValueError):
    """Invalid problem configuration."""


@dataclass(frozen=True)
class BoundaryCondition:
    """Separated boundary condition ``cos(alpha) y + sin(alpha) y1 = 0``.

    ``kind`` is ``dirichlet`` (alpha = 0), ``neumann`` (alpha = pi/2),
    ``robin`` (any alpha in [0, pi)) or ``friedrichs`` (principal data at a
    singular endpoint; alpha is unused).
    """

    kind: str = "dirichlet"
    alpha: float = 0.0

    def __post_init__(self):
        if self.kind not in ("dirichlet", "neumann", "robin", "friedrichs"):
            raise ValueError(f"unknown boundary condition kind {self.kind!r}")
        if not 0.0 <= self.alpha < math.pi:
            raise ValueError(f"alpha must lie in [0, pi), got {self.alpha}")
        if self.kind == "dirichlet" and self.alpha != 0.0:
            raise ValueError("dirichlet condition has alpha = 0")
        if self.kind == "neumann" and self.alpha != math.pi / 2:
            object.__setattr__(self, "alpha", math.pi / 2)

    @classmethod
    def dirichlet(cls) -> "BoundaryCondition":
        return cls("dirichlet", 0.0)

    @classmethod
    def neumann(cls) -> "BoundaryCondition":
        return cls("neumann", math.pi / 2)

    @classmethod
    def robin(cls, alpha: float) -> "BoundaryCondition":
        return cls("robin", float(alpha))

    @classmethod
    def friedrichs(cls) -> "BoundaryCondition":
        return cls("friedrichs", 0.0)

    @classmethod
    def parse(cls, spec: "str | BoundaryCondition") -> "BoundaryCondition":
        if isinstance(spec, BoundaryCondition):
            return spec
        s = spec.strip().lower()
        if s in ("dirichlet", "d"):
            return cls.dirichlet()
        if s in ("neumann", "n"):
            return cls.neumann()
        if s in ("friedrichs", "friedrichs-principal", "f"):
            return cls.friedrichs()
        m = re.fullmatch(r"robin\(([^)]*)\)", s)
        if m:
            return cls.robin(float(m.group(1)))
        raise ValueError(f"cannot parse boundary condition {spec!r}")


@dataclass(frozen=True)
class Endpoint:
    """Metadata for one end of the interval.

    Attributes:
        x: location; may be ``-inf`` or ``inf``.
        kind: regular, limit-circle, limit-point or unknown.
        rank_hint: rank of the eigenvalue sequence toward this end, or None.
        launch: which principal data to use when launching near a singular
            finite end: ``dirichlet`` (solution vanishes, ``int 1/p`` finite)
            or ``neumann`` (quasi-derivative vanishes).
    """

    x: float
    kind: str = UNKNOWN
    rank_hint: int | None = None
    launch: str = "dirichlet"

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown endpoint kind {self.kind!r}")
        if self.launch not in ("dirichlet", "neumann"):
            raise ValueError(f"unknown launch type {self.launch!r}")

    @property
    def finite(self) -> bool:
        return math.isfinite(self.x)

    @property
    def singular(self) -> bool:
        return self.kind != REGULAR


@dataclass(frozen=True)
class Problem:
    """Immutable Sturm-Liouville problem description.

    ``p``, ``q`` and ``r`` are vectorized numpy callables compiled from the
    expression trees. ``reference`` maps a boundary-condition label at the
    left end (``dirichlet`` or ``neumann``) to a function ``n -> first n
    eigenvalues`` of the untruncated problem.
    """

    name: str
    p_expr: ExprNode
    q_expr: ExprNode
    r_expr: ExprNode
    left: Endpoint
    right: Endpoint
    params: Mapping[str, float] = field(default_factory=dict)
    reference: Mapping[str, Callable[[int], np.ndarray]] = field(default_factory=dict)
    default_truncation: tuple[float, float] | None = None
    p: Callable = field(init=False, repr=False, compare=False)
    q: Callable = field(init=False, repr=False, compare=False)
    r: Callable = field(init=False, repr=False, compare=False)
    pr_constant: bool = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "pr_constant", not (_has_x(self.p_expr) or _has_x(self.r_expr)))
        if not self.left.x < self.right.x:
            raise ConfigError(f"interval must satisfy a < b, got ({self.left.x}, {self.right.x})")
        for name in ("p", "q", "r"):
            object.__setattr__(self, name, compile_expr(getattr(self, f"{name}_expr"), self.params))

    @property
    def interval(self) -> tuple[float, float]:
        return (self.left.x, self.right.x)

    def log_pr_slope(self, x: float) -> float:
        """``d/dx ln(p r)`` by a fourth-order central difference."""
        if self.pr_constant:
            return 0.0
        a, b = self.interval
        room = min(abs(x - a), abs(b - x))
        if room > 0:
            h = 1e-3 * min(1.0 + abs(x), room / 2.0)
            t = x + h * _STENCIL
            f = np.log(self.p(t) * self.r(t))
            return float(f @ _WEIGHTS) / h
        h = 1e-5 * (1.0 + abs(x)) * (1.0 if x == a else -1.0)
        t = x + h * np.array([0.0, 1.0, 2.0])
        f = np.log(self.p(t) * self.r(t))
        return float(-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h)

    def reference_eigs(self, n: int, bc: str = "dirichlet") -> np.ndarray | None:
        fn = self.reference.get(bc)
        return None if fn is None else np.asarray(fn(n), dtype=float)

    def coefficients(self, x):
        """Evaluate ``(p, q, r)`` at ``x`` (scalar or array)."""
        with np.errstate(all="ignore"):
            return self.p(x), self.q(x), self.r(x)

    def sample_mesh(self, n: int = 1000) -> np.ndarray:
        """Interior sampling mesh; infinite ends are replaced by a 50-unit window."""
        a, b = self.interval
        lo = a if math.isfinite(a) else (b if math.isfinite(b) else 0.0) - 50.0
        hi = b if math.isfinite(b) else max(lo, 0.0) + 50.0
        return np.linspace(lo, hi, n + 2)[1:-1]

    def check_positivity(self, n: int = 1000) -> None:
        """Raise :class:`ConfigError` unless ``p, r > 0`` and ``q`` finite on the mesh."""
        xs = self.sample_mesh(n)
        p, q, r = (np.broadcast_to(v, xs.shape) for v in self.coefficients(xs))
        if not (np.all(np.isfinite(p)) and np.all(p > 0)):
            raise ConfigError(f"{self.name}: p is not strictly positive on the sampling mesh")
        if not (np.all(np.isfinite(r)) and np.all(r > 0)):
            raise ConfigError(f"{self.name}: r is not strictly positive on the sampling mesh")
        if not np.all(np.isfinite(q)):
            raise ConfigError(f"{self.name}: q is not finite on the sampling mesh")


_STENCIL = np.array([-2.0, -1.0, 1.0, 2.0])
_WEIGHTS = np.array([1.0, -8.0, 8.0, -1.0]) / 12.0


def _has_x(e: ExprNode) -> bool:
    return e.kind == "variable" or any(_has_x(c) for c in e.children)


def _airy_ref(n: int) -> np.ndarray:
    return -special.ai_zeros(n)[0]


def _power(d: float) -> Problem:
    if not d > 0:
        raise ConfigError(f"power potential needs d > 0, got {d}")
    ref = {"dirichlet": _airy_ref} if d == 1 else {}
    return make_problem(
        "airy" if d == 1 else f"power({d:g})",
        "1",
        "x^d",
        "1",
        Endpoint(0.0, REGULAR, 0),
        Endpoint(math.inf, LIMIT_POINT, math.floor((d + 2) / (2 * d))),
        params={"d": float(d)},
        reference=ref,
        default_truncation=(0.0, 40.0 if d <= 1 else 12.0),
    )


def _harmonic_full() -> Problem:
    return make_problem(
        "harmonic_full",
        "1",
        "x^2",
        "1",
        Endpoint(-math.inf, LIMIT_POINT, 1),
        Endpoint(math.inf, LIMIT_POINT, 1),
        reference={"dirichlet": lambda n: 2.0 * np.arange(n) + 1.0},
        default_truncation=(-6.0, 6.0),
    )


def _harmonic_half() -> Problem:
    return make_problem(
        "harmonic_half",
        "1",
        "x^2",
        "1",
        Endpoint(0.0, REGULAR, 0),
        Endpoint(math.inf, LIMIT_POINT, 1),
        reference={
            "dirichlet": lambda n: 4.0 * np.arange(n) + 3.0,
            "neumann": lambda n: 4.0 * np.arange(n) + 1.0,
        },
        default_truncation=(0.0, 8.0),
    )


def _laguerre(gamma: float) -> Problem:
    if not gamma > 0:
        raise ConfigError(f"laguerre needs gamma > 0, got {gamma}")
    lc = 0 < gamma < 2
    return make_problem(
        f"laguerre({gamma:g})",
        "x^g * exp(-x)",
        "0",
        "x^(g - 1) * exp(-x)",
        Endpoint(0.0, LIMIT_CIRCLE if lc else LIMIT_POINT, 0, "dirichlet" if gamma < 1 else "neumann"),
        Endpoint(math.inf, LIMIT_POINT, 1),
        params={"g": float(gamma)},
        reference={"friedrichs": lambda n: np.arange(n, dtype=float)},
        default_truncation=(1e-6, 40.0),
    )


def _free() -> Problem:
    return make_problem(
        "free",
        "1",
        "0",
        "1",
        Endpoint(0.0, REGULAR, 0),
        Endpoint(math.pi, REGULAR, 0),
        reference={
            "dirichlet": lambda n: (np.arange(n) + 1.0) ** 2,
            "neumann": lambda n: np.arange(n, dtype=float) ** 2,
        },
        default_truncation=(0.0, math.pi),
    )


CATALOG: dict[str, tuple[tuple[str, ...], Callable[..., Problem]]] = {
    "airy": ((), lambda: _power(1.0)),
    "power": (("d",), _power),
    "harmonic_full": ((), _harmonic_full),
    "harmonic_half": ((), _harmonic_half),
    "laguerre": (("gamma",), _laguerre),
    "free": ((), _free),
}


def catalog_problem(name: str, **params: float) -> Problem:
    """Shorthand for ``load_problem({"problem": name, "params": params})``."""
    return load_problem({"problem": name, "params": params})


def make_problem(
    name: str,
    p: str,
    q: str,
    r: str,
    left: Endpoint,
    right: Endpoint,
    params: Mapping[str, float] | None = None,
    reference=None,
    default_truncation=None,
) -> Problem:
    """Build a :class:`Problem` from expression strings."""
    params = dict(params or {})
    nodes = [parse_expr(s, params) for s in (p, q, r)]
    prob = Problem(name, *nodes, left=left, right=right, params=params,
                   reference=dict(reference or {}), default_truncation=default_truncation)
    return prob


def _launch_type(p: Callable, a: float, inward: float) -> str:
    """Pick principal launch data at a finite singular end from the growth of ``int 1/p``."""
    vals = []
    for eps in (1e-4, 1e-8):
        lo, hi = sorted((a + inward * eps, a + inward * 1e-2))
        vals.append(integrate.quad(lambda t: 1.0 / p(t), lo, hi, limit=200)[0])
    return "dirichlet" if abs(vals[1] - vals[0]) < 0.1 * (1.0 + abs(vals[0])) else "neumann"


def _custom(config: Mapping) -> Problem:
    exprs = config.get("expressions")
    if not isinstance(exprs, Mapping) or not {"p", "q", "r"} <= set(exprs):
        raise ConfigError("custom problems need expressions p, q and r")
    interval = config.get("interval")
    if interval is None:
        raise ConfigError("custom problems need an interval")
    a, b = (float(v) for v in interval)
    params = {k: float(v) for k, v in (config.get("params") or {}).items()}
    ends = config.get("endpoints") or {}
    specs = []
    for side, x in (("left", a), ("right", b)):
        info = ends.get(side, {})
        specs.append((x, info.get("kind", UNKNOWN), info.get("rank"), info.get("launch")))
    prob = make_problem("custom", exprs["p"], exprs["q"], exprs["r"],
                        Endpoint(a), Endpoint(b), params=params)
    endpoints = []
    for (x, kind, rank, launch), inward in zip(specs, (1.0, -1.0)):
        if launch is None:
            launch = "dirichlet"
            if math.isfinite(x) and kind != REGULAR:
                try:
                    launch = _launch_type(prob.p, x, inward)
                except Exception:  # noqa: BLE001 - heuristic only
                    launch = "dirichlet"
        endpoints.append(Endpoint(x, kind, None if rank is None else int(rank), launch))
    return Problem("custom", prob.p_expr, prob.q_expr, prob.r_expr, endpoints[0], endpoints[1],
                   params=params)


_CALL = re.compile(r"^\s*([a-z_]+)\s*(?:\(\s*([^)]*)\s*\))?\s*$")


def load_problem(config: "Mapping | str | Path") -> Problem:
    """Build a problem from a config mapping, a JSON string or a JSON file path.

    Recognized keys: ``problem`` (catalog name, optionally with an inline
    argument such as ``"laguerre(1)"``), ``params``, ``interval`` (override)
    and ``expressions`` (custom problems only).

    Raises:
        ConfigError: unknown catalog name, invalid parameters, or a problem
            failing the positivity sample check.
    """
    if isinstance(config, Path) or (isinstance(config, str) and not config.lstrip().startswith("{")):
        config = json.loads(Path(config).read_text())
    elif isinstance(config, str):
        config = json.loads(config)
    name = config.get("problem", "custom")
    if name == "custom" or ("expressions" in config and "problem" not in config):
        prob = _custom(config)
    else:
        m = _CALL.match(str(name))
        if m is None or m.group(1) not in CATALOG:
            raise ConfigError(f"unknown catalog name {name!r}")
        key, inline = m.group(1), m.group(2)
        argnames, factory = CATALOG[key]
        params = dict(config.get("params") or {})
        if key == "laguerre" and "g" in params and "gamma" not in params:
            params["gamma"] = params.pop("g")
        if inline:
            if not argnames:
                raise ConfigError(f"{key} takes no parameters")
            params.setdefault(argnames[0], float(inline))
        unknown = set(params) - set(argnames)
        if unknown:
            raise ConfigError(f"{key}: unknown parameter(s) {sorted(unknown)}")
        missing = [n for n in argnames if n not in params]
        if missing:
            raise ConfigError(f"{key}: missing parameter(s) {missing}")
        try:
            prob = factory(*(float(params[n]) for n in argnames))
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(str(exc)) from None
        if config.get("interval") is not None:
            a, b = (float(v) for v in config["interval"])
            prob = Problem(prob.name, prob.p_expr, prob.q_expr, prob.r_expr,
                           Endpoint(a, prob.left.kind if a == prob.left.x else REGULAR, prob.left.rank_hint, prob.left.launch),
                           Endpoint(b, prob.right.kind if b == prob.right.x else REGULAR, prob.right.rank_hint, prob.right.launch),
                           params=prob.params, reference=prob.reference if (a, b) == prob.interval else {},
                           default_truncation=(a, b) if math.isfinite(a) and math.isfinite(b) else prob.default_truncation)
    prob.check_positivity()
    return prob
