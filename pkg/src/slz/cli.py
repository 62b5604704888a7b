"""Command-line driver ``slz``.

Exit codes: 0 on success, 1 when ``validate`` finds a failing check, 2 on a
configuration or validation error, 3 on numerical non-convergence (a
``diagnostics.json`` is still written to the output directory).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from .problems import ConfigError, Problem, load_problem

__all__ = ["build_parser", "main", "parse_grid"]

COMMANDS = ("eig", "zeta-partial", "charfn", "spectral-zeta", "convrate", "validate")


def _g(v: float) -> str:
    return f"{v:.17g}"


def parse_grid(spec: str) -> np.ndarray:
    """Parse ``start:stop:linN``, ``start:stop:logN``, ``start:stop:log10`` or a comma list.

    ``logN`` spaces ``N`` points geometrically, so ``20:100:log10`` is ten
    points from 20 to 100.
    """
    spec = spec.strip()
    if ":" not in spec:
        try:
            vals = np.array([float(t) for t in spec.split(",") if t.strip()])
        except ValueError:
            raise ConfigError(f"bad grid {spec!r}") from None
        if vals.size == 0:
            raise ConfigError("empty grid")
        return vals
    parts = spec.split(":")
    if len(parts) != 3:
        raise ConfigError(f"bad grid {spec!r}; expected start:stop:linN or start:stop:logN")
    try:
        lo, hi = float(parts[0]), float(parts[1])
    except ValueError:
        raise ConfigError(f"bad grid bounds in {spec!r}") from None
    kind = parts[2]
    for prefix in ("lin", "log"):
        if kind.startswith(prefix) and kind[len(prefix):].isdigit():
            n = int(kind[len(prefix):])
            break
    else:
        raise ConfigError(f"bad grid spacing {kind!r}; use linN or logN")
    if n < 1:
        raise ConfigError("a grid needs at least one point")
    if prefix == "lin":
        return np.linspace(lo, hi, n)
    if lo <= 0 or hi <= 0:
        raise ConfigError("log grids need positive bounds")
    return np.geomspace(lo, hi, n)


def _complex(spec: str) -> complex:
    parts = [t for t in spec.split(",")]
    try:
        if len(parts) == 1:
            return complex(float(parts[0]), 0.0)
        if len(parts) == 2:
            return complex(float(parts[0]), float(parts[1]))
    except ValueError:
        pass
    raise ConfigError(f"bad complex value {spec!r}; use RE or RE,IM")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="slz", description="Spectral zeta and characteristic-function toolkit.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--problem", default=None)
        p.add_argument("--param", action="append", default=[], metavar="K=V")
        p.add_argument("--gamma", type=float, default=None, help="shorthand for --param gamma=V")
        p.add_argument("--expr-p")
        p.add_argument("--expr-q")
        p.add_argument("--expr-r")
        p.add_argument("--interval", nargs=2, type=float, metavar=("A", "B"))
        p.add_argument("--truncate", nargs=2, type=float, metavar=("C", "D"))
        p.add_argument("--n", type=int, default=10)
        p.add_argument("--tol", type=float, default=None)
        p.add_argument("--x", default=None, metavar="SPEC")
        p.add_argument("--z", default=None, metavar="SPEC")
        p.add_argument("--s", default=None, metavar="RE,IM")
        p.add_argument("--j", default=None, help="comma-separated eigenvalue indices")
        p.add_argument("--pair", default=None, help="J,M for the convergence residual")
        p.add_argument("--psi", type=float, default=0.75 * math.pi)
        p.add_argument("--radius", type=float, default=None, help="contour circle radius")
        p.add_argument("--ell", type=int, default=2, help="highest partial zeta order")
        p.add_argument("--checks", default=None, help="comma-separated criterion numbers (validate)")
        p.add_argument("--out", default="slz_out")
    run = sub.add_parser("run")
    run.add_argument("config")
    return parser


def _problem_config(ns) -> dict:
    params = {}
    for item in ns.param:
        if "=" not in item:
            raise ConfigError(f"bad --param {item!r}; use K=V")
        k, v = item.split("=", 1)
        try:
            params[k.strip()] = float(v)
        except ValueError:
            raise ConfigError(f"bad --param value {v!r}") from None
    if ns.gamma is not None:
        params["gamma"] = ns.gamma
    exprs = [ns.expr_p, ns.expr_q, ns.expr_r]
    if any(e is not None for e in exprs):
        if not all(e is not None for e in exprs) or ns.interval is None:
            raise ConfigError("custom problems need --expr-p, --expr-q, --expr-r and --interval")
        return {"problem": "custom", "expressions": dict(zip("pqr", exprs)), "interval": list(ns.interval),
                "params": params}
    if ns.problem is None:
        raise ConfigError("give --problem NAME or custom expressions")
    cfg = {"problem": ns.problem, "params": params}
    if ns.interval is not None:
        cfg["interval"] = list(ns.interval)
    return cfg


def _truncation(prob: Problem, ns) -> tuple[float, float]:
    if ns.truncate is not None:
        c, d = ns.truncate
    elif prob.default_truncation is not None:
        c, d = prob.default_truncation
    else:
        c, d = prob.interval
    if not (math.isfinite(c) and math.isfinite(d) and c < d):
        raise ConfigError("a finite truncation C < D is needed (use --truncate)")
    return float(c), float(d)


def _write(out: Path, name: str, text: str) -> None:
    (out / name).write_text(text)


def _cmd_eig(prob, ns, out):
    from .eigensolve import dirichlet_eigs

    c, d = _truncation(prob, ns)
    if ns.n < 1:
        raise ConfigError("--n must be positive")
    eigs = dirichlet_eigs(prob, c, d, ns.n, ns.tol or 1e-10)
    _write(out, "eigenvalues.csv", eigs.to_csv())


def _cmd_zeta_partial(prob, ns, out):
    from .partialzeta import zeta_recursive

    c, d = _truncation(prob, ns)
    xs = parse_grid(ns.x) if ns.x else np.array([d])
    tab = zeta_recursive(prob, c, xs, ell_max=ns.ell, tol=ns.tol or 1e-10)
    _write(out, "zeta_partial.csv", tab.to_csv())


def _cmd_charfn(prob, ns, out):
    from .charfn import charfn_F0

    if ns.x is None or ns.z is None:
        raise ConfigError("charfn needs --x (truncation grid) and --z (evaluation grid)")
    xs = parse_grid(ns.x)
    zs = parse_grid(ns.z)
    F = charfn_F0(prob, xs, tol=ns.tol or 1e-6)
    res = F.evaluate(zs)
    lines = ["z,re_log_F,im_log_F,re_F,im_F,last_ratio_change,converged"]
    for z, lv, ch, ok in zip(zs, res.log_value, res.last_ratio_change, res.converged):
        v = np.exp(lv)
        lines.append(",".join([_g(z), _g(lv.real), _g(lv.imag), _g(v.real), _g(v.imag), _g(ch), str(bool(ok))]))
    _write(out, "charfn.csv", "\n".join(lines) + "\n")
    meta = {"x_sequence": [float(x) for x in F.x_sequence], "shift": F.shift, "rank": F.rank, "c": F.c}
    _write(out, "charfn.json", json.dumps(meta, indent=2, sort_keys=True) + "\n")


def _cmd_spectral_zeta(prob, ns, out):
    from .charfn import charfn_F0
    from .speczeta import ZetaQuery, zeta_contour

    if ns.x is None or ns.s is None:
        raise ConfigError("spectral-zeta needs --x (truncation grid) and --s")
    F = charfn_F0(prob, parse_grid(ns.x))
    q = ZetaQuery(_complex(ns.s), psi=ns.psi, R=ns.radius or 1.0, tol=ns.tol or 1e-6)
    res = zeta_contour(F, q)
    _write(out, "spectral_zeta.json", res.to_json() + "\n")


def _cmd_convrate(prob, ns, out):
    from .convrate import fig1_statistics, gnuplot_script, propconv_residual, sweep_csv, truncation_sweep
    from .partialzeta import zeta_recursive

    if ns.x is None or ns.j is None:
        raise ConfigError("convrate needs --x and --j")
    js = sorted({int(t) for t in ns.j.split(",")} | {1})
    xs = parse_grid(ns.x)
    sweep = truncation_sweep(prob, js, xs, tol=ns.tol or 1e-10)
    stats = fig1_statistics(sweep)
    residual = None
    if ns.pair:
        jj, mm = (int(t) for t in ns.pair.split(","))
        shift = float(sweep.lam_limit[0]) - 0.5
        tab = zeta_recursive(prob, sweep.c, xs, ell_max=1, shift=shift)
        residual = propconv_residual(sweep, jj, mm, tab)
    _write(out, "convrate.csv", sweep_csv(sweep, stats, residual))
    _write(out, "convrate.gp", gnuplot_script("convrate.csv", js))
    summary = {"slopes": {str(k): v for k, v in sorted(stats.slopes.items())}, "limit_source": sweep.limit_source}
    _write(out, "convrate.json", json.dumps(summary, indent=2, sort_keys=True) + "\n")


def _cmd_validate(ns, out) -> int:
    from .acceptance import run_all

    numbers = [int(t) for t in ns.checks.split(",")] if ns.checks else None
    results = run_all(numbers, echo=print)
    report = {str(r.number): {"title": r.title, "passed": r.passed, "failures": r.failures,
                              "details": r.details} for r in results}
    _write(out, "validate.json", json.dumps(report, indent=2, sort_keys=True, default=float) + "\n")
    return 0 if all(r.passed for r in results) else 1


_HANDLERS = {
    "eig": _cmd_eig,
    "zeta-partial": _cmd_zeta_partial,
    "charfn": _cmd_charfn,
    "spectral-zeta": _cmd_spectral_zeta,
    "convrate": _cmd_convrate,
}


def _config_argv(path: str) -> list[str]:
    """Translate a JSON run config into an argument list."""
    try:
        cfg = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from None
    if not isinstance(cfg, dict) or cfg.get("command") not in COMMANDS:
        raise ConfigError(f"config needs a command, one of {', '.join(COMMANDS)}")
    argv = [cfg["command"]]
    if "problem" in cfg:
        argv += ["--problem", str(cfg["problem"])]
    for k, v in sorted((cfg.get("params") or {}).items()):
        argv += ["--param", f"{k}={v}"]
    for k, v in sorted((cfg.get("options") or {}).items()):
        flag = "--" + k.replace("_", "-")
        if isinstance(v, (list, tuple)):
            argv += [flag] + [str(t) for t in v]
        else:
            argv += [flag, str(v)]
    argv += ["--out", str(cfg.get("output_dir", "slz_out"))]
    return argv


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
        if ns.command == "run":
            return main(_config_argv(ns.config))
    except SystemExit as exc:
        return int(exc.code or 0) and 2
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    out = Path(ns.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        print(f"error: output directory {out}: {exc}", file=sys.stderr)
        return 2
    try:
        for spec in (ns.x, ns.z):
            if spec is not None:
                parse_grid(spec)
        if ns.command == "validate":
            return _cmd_validate(ns, out)
        prob = load_problem(_problem_config(ns))
        _HANDLERS[ns.command](prob, ns, out)
    except (ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (RuntimeError, ArithmeticError) as exc:
        diag = {"command": ns.command, "error": type(exc).__name__, "message": str(exc)}
        _write(out, "diagnostics.json", json.dumps(diag, indent=2, sort_keys=True) + "\n")
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
