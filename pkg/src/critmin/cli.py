"""Command line front-end: ``critmin <subcommand> [options]``.

Exit codes: 0 success, 2 invalid configuration, 3 numerical failure,
4 a declared check failed.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import bubble as bb
from . import io
from . import solver as sv
from .energy import ProblemParams, make_grid
from .quadrature import QuadratureError

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_CHECK = 0, 2, 3, 4

log = logging.getLogger("critmin")

DEFAULTS = {
    "n": "3",
    "beta": "0",
    "k": "0",
    "radius": "1",
    "M": "1000",
    "gamma": "2",
    "format": "csv",
    "out_dir": None,
    "jobs": "1",
    "svg": "false",
    # solver
    "max_iter": "20000",
    "rel_tol": "1e-9",
    "stall_window": "50",
    "initial_step": "1",
    "armijo": "1e-4",
    "backtrack": "0.5",
    "preconditioner": "stiffness",
    "init": "bubble",
    "init_eps": None,
    # eps sweep
    "eps_min": "1e-5",
    "eps_max": "1e-2",
    "eps_count": "13",
    "fit_skip": "2",
    "log_correction": "false",
    "slope_tol": "0.05",
    # map
    "beta_min": "0",
    "beta_max": "2",
    "beta_count": "3",
    "k_min": "1",
    "k_max": "2",
    "k_count": "2",
    # pohozaev
    "field": None,
}


class ConfigError(ValueError):
    pass


def _bool(text):
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


@dataclass
class RunConfig:
    subcommand: str
    params: ProblemParams
    M: int
    gamma: float
    solver: sv.SolverConfig
    eps_values: list
    fit_skip: int
    log_correction: bool
    slope_tol: float
    out_dir: Path
    fmt: str
    jobs: int
    svg: bool
    raw: dict = field(default_factory=dict)

    def provenance(self):
        skip = ("config", "out_dir")
        keys = sorted(k for k, v in self.raw.items() if v is not None and k not in skip)
        return {k: self.raw[k] for k in keys}


def _resolve(args) -> dict:
    values = dict(DEFAULTS)
    env_out = os.environ.get("CRITMIN_OUT")
    if env_out:
        values["out_dir"] = env_out
    if getattr(args, "config", None):
        try:
            file_values = io.read_config(args.config)
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}") from exc
        unknown = set(file_values) - set(DEFAULTS)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        values.update(file_values)
    for key in DEFAULTS:
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = str(flag) if not isinstance(flag, bool) else str(flag).lower()
    return values


def build_config(args) -> RunConfig:
    """Parse and validate everything before any computation starts."""
    v = _resolve(args)
    try:
        n = int(v["n"])
        beta = float(v["beta"])
        k = float(v["k"])
        R = float(v["radius"])
        if n >= 3 and not k <= 2.0 * n / (n - 2):
            raise ConfigError(f"k > q violates 0 <= k <= q = {2.0 * n / (n - 2):g} (k={k:g})")
        params = ProblemParams(n, beta, k, R)
        M = int(v["M"])
        gamma = float(v["gamma"])
        make_grid(params, M, gamma)  # validates M and gamma
        if v["init"] == "bubble":
            init = sv.BubbleInit(float(v["init_eps"]) if v["init_eps"] else None)
        elif v["init"] == "parabolic":
            init = sv.ParabolicInit()
        else:
            raise ConfigError(f"init must be 'bubble' or 'parabolic', got {v['init']!r}")
        solver = sv.SolverConfig(
            initial_step=float(v["initial_step"]),
            armijo=float(v["armijo"]),
            backtrack=float(v["backtrack"]),
            max_iter=int(v["max_iter"]),
            rel_tol=float(v["rel_tol"]),
            stall_window=int(v["stall_window"]),
            init=init,
            preconditioner=v["preconditioner"],
        )
        eps_min, eps_max, count = float(v["eps_min"]), float(v["eps_max"]), int(v["eps_count"])
        if not 0 < eps_min < eps_max or count < 3:
            raise ConfigError("eps sweep needs 0 < eps_min < eps_max and eps_count >= 3")
        fit_skip = int(v["fit_skip"])
        if not 0 <= fit_skip <= count - 3:
            raise ConfigError("fit_skip must leave at least 3 points in the fit window")
        fmt = v["format"]
        if fmt not in ("csv", "json"):
            raise ConfigError(f"format must be csv or json, got {fmt!r}")
        jobs = int(v["jobs"])
        if jobs < 1:
            raise ConfigError("jobs must be >= 1")
        return RunConfig(
            subcommand=args.command,
            params=params,
            M=M,
            gamma=gamma,
            solver=solver,
            eps_values=bb.eps_sweep(eps_min, eps_max, count),
            fit_skip=fit_skip,
            log_correction=_bool(v["log_correction"]),
            slope_tol=float(v["slope_tol"]),
            out_dir=Path(v["out_dir"] or "."),
            fmt=fmt,
            jobs=jobs,
            svg=_bool(v["svg"]),
            raw=v,
        )
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc


def _tag(params: ProblemParams, **extra):
    parts = [f"n{params.n}", f"beta{params.beta:g}", f"k{params.k:g}"]
    parts += [f"{key}{value:g}" if isinstance(value, float) else f"{key}{value}" for key, value in extra.items()]
    return "_".join(parts)


def _header(cfg: RunConfig, **extra):
    return io.params_header(cfg.params, M=cfg.M, gamma=repr(cfg.gamma), **extra)


# ---------------------------------------------------------------------------
# subcommands


def regime_report(params: ProblemParams) -> str:
    kind = sv.regime_classify(params)
    thr = (params.k + 1) * (params.n - 2)
    text = f"{kind.value}; kn/q={params.critical_beta:g}; (k+1)(n-2)={thr:g}"
    if kind is sv.RegimeKind.SUPERCRITICAL:
        pred = bb.predicted_weighted_rate(params)
        text += f"; weighted bubble rate {pred.regime.value} exponent {pred.exponent:g}"
        if pred.has_log:
            text += " times |log eps|"
    return text


def cmd_regime(cfg: RunConfig):
    print(regime_report(cfg.params))
    return EXIT_OK


def _sweep_point(args):
    params, eps = args
    g, l, w = bb.bubble_energies(bb.BubbleSpec.default(eps, params), params)
    return bb.SweepRow(eps, g, l, w, bb.normalized_total(g, l, w, params))


def _fan_out(fn, items, jobs):
    if jobs == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))  # map preserves input order


def log_ratio_bounds(rows, exponent):
    ratios = [row.weighted / (row.eps**exponent * abs(math.log(row.eps))) for row in rows]
    return min(ratios), max(ratios)


def cmd_bubble_sweep(cfg: RunConfig):
    p = cfg.params
    if sv.regime_classify(p) is not sv.RegimeKind.SUPERCRITICAL:
        print(
            f"bubble-sweep refuses beta={p.beta:g} <= kn/q={p.critical_beta:g}: "
            "the weighted bubble rate is only predicted for beta > kn/q",
            file=sys.stderr,
        )
        return EXIT_CONFIG
    pred = bb.predicted_weighted_rate(p)
    eps_values = sorted(cfg.eps_values, reverse=True)
    rows = _fan_out(_sweep_point, [(p, e) for e in eps_values], cfg.jobs)
    window = rows[cfg.fit_skip:]
    fit = bb.fit_rate([(r.eps, r.weighted) for r in window], with_log=cfg.log_correction)
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    stem = cfg.out_dir / f"sweep_{_tag(p)}"
    columns = ["eps", "grad_sq", "lq_q", "weighted", "total_normalized"]
    table = [[r.eps, r.grad_sq, r.lq_q, r.weighted, r.total_normalized] for r in rows]
    header = io.params_header(p, eps_min=repr(float(min(eps_values))), eps_max=repr(float(max(eps_values))), count=len(rows))
    summary = {
        "predicted": {"regime": pred.regime.value, "exponent": pred.exponent, "has_log": pred.has_log},
        "fit": {
            "slope": fit.slope,
            "intercept": fit.intercept,
            "r_squared": fit.r_squared,
            "with_log_correction": fit.with_log_correction,
            "points": len(window),
        },
        "provenance": cfg.provenance(),
    }
    if cfg.fmt == "csv":
        io.write_csv(stem.with_suffix(".csv"), header, columns, table)
    else:
        io.write_json(stem.with_suffix(".json"), {"columns": columns, "rows": table, **summary})
    print(f"predicted {pred.regime.value} exponent {pred.exponent:g}; fitted slope {fit.slope:.6f} (R^2={fit.r_squared:.6f})")
    if pred.has_log:
        # the power fit is not the declared check here: a |log eps| factor bends it
        c1, c2 = log_ratio_bounds(rows, pred.exponent)
        ok = math.isfinite(c2) and c1 > 0 and c2 / c1 <= 3.0
        summary["log_ratio"] = {"min": c1, "max": c2}
        print(f"weighted / (eps^{pred.exponent:g} |log eps|) in [{c1:.6g}, {c2:.6g}], max/min = {c2 / c1:.4f}")
        print(f"{'PASS' if ok else 'FAIL'} ratio bounded with max/min <= 3")
    else:
        ok = abs(fit.slope - pred.exponent) <= cfg.slope_tol
        print(f"{'PASS' if ok else 'FAIL'} slope within +-{cfg.slope_tol:g} of {pred.exponent:g}")
    io.write_json(stem.with_name(stem.name + "_fit.json"), summary)
    io.write_curve(stem.with_name(stem.name + "_weighted.txt"), [r.eps for r in rows], [r.weighted for r in rows], header + " columns=eps,weighted")
    if cfg.svg:
        svg = io.svg_line_chart(
            [("weighted", [r.eps for r in rows], [r.weighted for r in rows])],
            title=f"weighted bubble energy, {_tag(p)}", xlabel="eps", ylabel="weighted",
            logx=True, logy=True,
        )
        stem.with_suffix(".svg").write_text(svg, encoding="utf-8")
    return EXIT_OK if ok else EXIT_CHECK


def _solve(params, M, gamma, solver):
    grid = make_grid(params, M, gamma)
    return sv.minimize(params, grid, solver), grid


def cmd_minimize(cfg: RunConfig):
    p = cfg.params
    res, grid = _solve(p, cfg.M, cfg.gamma, cfg.solver)
    S = bb.sobolev_constant(p.n).S
    oracle = 2 * S if (p.beta == 0 and p.k == 0) else S
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    stem = cfg.out_dir / f"minimize_{_tag(p, M=cfg.M, g=cfg.gamma)}"
    rec = io.solve_record(
        res, p, grid,
        S_oracle=oracle,
        gap=res.S_estimate - oracle,
        regime=sv.regime_classify(p).value,
        dirichlet=res.dirichlet,
        weighted=res.weighted,
        provenance=cfg.provenance(),
    )
    io.write_json(stem.with_suffix(".json"), rec)
    io.write_history(stem.with_name(stem.name + "_history.csv"), res.history, p, M=cfg.M, gamma=repr(cfg.gamma))
    io.write_field(stem.with_name(stem.name + "_field.txt"), res.field, p)
    if cfg.fmt == "csv":
        cols = ["n", "beta", "k", "R", "M", "gamma", "S_estimate", "mu_estimate", "converged",
                "iterations", "half_mass_radius", "sup_value", "S_oracle", "gap"]
        row = [p.n, p.beta, p.k, p.R, cfg.M, cfg.gamma, res.S_estimate, res.mu_estimate,
               res.converged, res.iterations, res.half_mass_radius, res.sup_value, oracle, res.S_estimate - oracle]
        io.write_csv(stem.with_suffix(".csv"), _header(cfg), cols, [row])
    if cfg.svg:
        svg = io.svg_line_chart(
            [("energy", list(range(len(res.history))), res.history)],
            title=f"energy history, {_tag(p)}", xlabel="iteration", ylabel="I(u)",
        )
        stem.with_suffix(".svg").write_text(svg, encoding="utf-8")
    print(json.dumps({k: rec[k] for k in ("S_estimate", "S_oracle", "gap", "converged", "iterations")}, sort_keys=True))
    return EXIT_OK


def _map_point(args):
    params, M, gamma, solver = args
    res, _ = _solve(params, M, gamma, solver)
    return res.S_estimate


def cmd_map(cfg: RunConfig):
    v = cfg.raw
    betas = np.linspace(float(v["beta_min"]), float(v["beta_max"]), int(v["beta_count"]))
    ks = np.linspace(float(v["k_min"]), float(v["k_max"]), int(v["k_count"]))
    n, R = cfg.params.n, cfg.params.R
    points = []
    for beta in sorted(betas):
        for k in sorted(ks):
            try:
                points.append(ProblemParams(n, float(beta), float(k), R))
            except ValueError as exc:
                raise ConfigError(f"map point beta={beta:g}, k={k:g}: {exc}") from exc
    estimates = _fan_out(_map_point, [(p, cfg.M, cfg.gamma, cfg.solver) for p in points], cfg.jobs)
    S = bb.sobolev_constant(n).S
    rows = []
    for p, est in zip(points, estimates):
        oracle = 2 * S if (p.beta == 0 and p.k == 0) else S
        rows.append([p.beta, p.k, sv.regime_classify(p).value, est, oracle, est - oracle])
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    stem = cfg.out_dir / f"map_n{n}_M{cfg.M}_g{cfg.gamma:g}"
    cols = ["beta", "k", "regime", "S_estimate", "S_oracle", "gap"]
    if cfg.fmt == "csv":
        io.write_csv(stem.with_suffix(".csv"), io.params_header(cfg.params, M=cfg.M, gamma=repr(cfg.gamma)), cols, rows)
    else:
        io.write_json(stem.with_suffix(".json"), {"columns": cols, "rows": rows, "provenance": cfg.provenance()})
    for row in rows:
        print(f"beta={row[0]:g} k={row[1]:g} {row[2]:<13} S_est={row[3]:.8f} gap={row[5]:+.6f}")
    return EXIT_OK


def cmd_pohozaev(cfg: RunConfig):
    if cfg.raw.get("field"):
        try:
            u, p = io.read_field(cfg.raw["field"])
        except (OSError, ValueError) as exc:
            raise ConfigError(f"cannot load field file: {exc}") from exc
        source = str(cfg.raw["field"])
    else:
        p = cfg.params
        res, _ = _solve(p, cfg.M, cfg.gamma, cfg.solver)
        u = res.field
        source = "solve"
    d = sv.pohozaev_defect(u, p)
    kind = sv.regime_classify(p)
    checks = []
    nonzero = bool(np.any(u.values != 0))
    if kind is not sv.RegimeKind.SUBCRITICAL and nonzero:
        checks.append(("total > 0", d.total > 0))
    if kind is sv.RegimeKind.CRITICAL:
        checks.append(("interior == 0", abs(d.interior) <= 1e-14))
    checks.append(("boundary >= 0", d.boundary >= 0))
    rec = {
        "params": p.as_dict(),
        "regime": kind.value,
        "source": source,
        "pohozaev": {"interior": d.interior, "boundary": d.boundary, "total": d.total},
        "checks": {name: bool(ok) for name, ok in checks},
        "provenance": cfg.provenance(),
    }
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    io.write_json(cfg.out_dir / f"pohozaev_{_tag(p)}.json", rec)
    print(f"{kind.value}: interior={d.interior!r} boundary={d.boundary!r} total={d.total!r}")
    for name, ok in checks:
        print(f"{'PASS' if ok else 'FAIL'} {name}")
    return EXIT_OK if all(ok for _, ok in checks) else EXIT_CHECK


def cmd_selftest(cfg: RunConfig):
    from .selftest import run_all

    failures = run_all()
    print(f"{failures} check(s) failed" if failures else "all checks passed")
    return EXIT_CHECK if failures else EXIT_OK


COMMANDS = {
    "regime": cmd_regime,
    "bubble-sweep": cmd_bubble_sweep,
    "minimize": cmd_minimize,
    "map": cmd_map,
    "pohozaev": cmd_pohozaev,
    "selftest": cmd_selftest,
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("problem and grid")
    g.add_argument("--n", type=int)
    g.add_argument("--beta", type=float)
    g.add_argument("--k", type=float)
    g.add_argument("--radius", type=float)
    g.add_argument("--M", type=int)
    g.add_argument("--gamma", type=float)
    g.add_argument("--out-dir", dest="out_dir")
    g.add_argument("--format", choices=["csv", "json"])
    g.add_argument("--config", help="key = value file; flags override its values")
    g.add_argument("--jobs", type=int, help="worker processes for map / bubble-sweep")
    g.add_argument("--svg", action="store_const", const=True, help="also write an SVG chart")
    s = common.add_argument_group("solver")
    s.add_argument("--max-iter", dest="max_iter", type=int)
    s.add_argument("--rel-tol", dest="rel_tol", type=float)
    s.add_argument("--stall-window", dest="stall_window", type=int)
    s.add_argument("--initial-step", dest="initial_step", type=float)
    s.add_argument("--armijo", type=float)
    s.add_argument("--backtrack", type=float)
    s.add_argument("--preconditioner", choices=["stiffness", "mass"])
    s.add_argument("--init", choices=["bubble", "parabolic"])
    s.add_argument("--init-eps", dest="init_eps", type=float)

    parser = argparse.ArgumentParser(prog="critmin", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("regime", parents=[common], help="classify (n, beta, k)")
    sw = sub.add_parser("bubble-sweep", parents=[common], help="eps sweep of bubble energies and rate fit")
    sw.add_argument("--eps-min", dest="eps_min", type=float)
    sw.add_argument("--eps-max", dest="eps_max", type=float)
    sw.add_argument("--eps-count", dest="eps_count", type=int)
    sw.add_argument("--fit-skip", dest="fit_skip", type=int, help="largest eps values left out of the fit")
    sw.add_argument("--slope-tol", dest="slope_tol", type=float)
    sw.add_argument("--log-correction", dest="log_correction", action="store_const", const=True)
    sub.add_parser("minimize", parents=[common], help="constrained descent for one parameter set")
    mp = sub.add_parser("map", parents=[common], help="solve over a (beta, k) rectangle")
    for name in ("beta_min", "beta_max", "k_min", "k_max"):
        mp.add_argument("--" + name.replace("_", "-"), dest=name, type=float)
    mp.add_argument("--beta-count", dest="beta_count", type=int)
    mp.add_argument("--k-count", dest="k_count", type=int)
    po = sub.add_parser("pohozaev", parents=[common], help="Pohozaev defect of a stored or freshly solved field")
    po.add_argument("--field", help="field file written by 'minimize'")
    sub.add_parser("selftest", parents=[common], help="run the quick invariant suite")
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = build_config(args)
        return COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (sv.SolverFailure, sv.SingularityError, QuadratureError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
