"""File formats: radial fields, solve records, sweep tables, config files, SVG."""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .energy import ProblemParams, RadialField, RadialGrid


def _num(x) -> str:
    # shortest repr that round-trips
    return repr(float(x))


def _g17(x) -> str:
    return format(float(x), ".17g")


def params_header(params: ProblemParams, **extra) -> str:
    items = [f"n={params.n}", f"beta={_num(params.beta)}", f"k={_num(params.k)}", f"R={_num(params.R)}"]
    items += [f"{key}={value}" for key, value in extra.items()]
    return "# " + " ".join(items)


def _parse_header(line: str) -> dict:
    if not line.startswith("#"):
        raise ValueError("field file must start with a '# n=... beta=... k=... R=...' header")
    out = {}
    for tok in line[1:].split():
        if "=" in tok:
            key, value = tok.split("=", 1)
            out[key] = value
    missing = {"n", "beta", "k", "R"} - set(out)
    if missing:
        raise ValueError(f"field header lacks {sorted(missing)}")
    return out


def write_field(path, u: RadialField, params: ProblemParams) -> Path:
    path = Path(path)
    lines = [params_header(params, gamma=_num(u.grid.gamma))]
    lines += [f"{_num(r)} {_num(v)}" for r, v in zip(u.grid.r, u.values)]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def read_field(path):
    """Return ``(field, params)`` from a two-column field file."""
    text = Path(path).read_text(encoding="utf-8").splitlines()
    head = _parse_header(text[0])
    params = ProblemParams(int(head["n"]), float(head["beta"]), float(head["k"]), float(head["R"]))
    rows = [ln.split() for ln in text[1:] if ln.strip() and not ln.startswith("#")]
    r = np.array([float(a) for a, _ in rows])
    v = np.array([float(b) for _, b in rows])
    grid = RadialGrid(r, float(head.get("gamma", 1.0)))
    return RadialField(grid, v), params


def solve_record(result, params: ProblemParams, grid: RadialGrid, **extra) -> dict:
    rec = {
        "params": params.as_dict(),
        "grid": {"M": grid.M, "gamma": grid.gamma},
        "S_estimate": result.S_estimate,
        "mu_estimate": result.mu_estimate,
        "converged": bool(result.converged),
        "iterations": int(result.iterations),
        "half_mass_radius": result.half_mass_radius,
        "sup_value": result.sup_value,
        "pohozaev": {
            "interior": result.pohozaev.interior,
            "boundary": result.pohozaev.boundary,
            "total": result.pohozaev.total,
        },
    }
    rec.update(extra)
    return rec


def write_json(path, record: dict) -> Path:
    path = Path(path)
    path.write_text(json.dumps(record, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def write_history(path, history, params: ProblemParams, **extra) -> Path:
    lines = [params_header(params, **extra), "iter,energy"]
    lines += [f"{i},{_num(e)}" for i, e in enumerate(history)]
    path = Path(path)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def write_csv(path, header: str, columns, rows) -> Path:
    """Comment header line, column line, then rows (floats at 17 significant digits)."""
    lines = [header, ",".join(columns)]
    for row in rows:
        lines.append(",".join(_g17(x) if isinstance(x, float) else str(x) for x in row))
    path = Path(path)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def read_csv(path):
    rows = []
    columns = None
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line or line.startswith("#"):
            continue
        if columns is None:
            columns = line.split(",")
            continue
        rows.append(dict(zip(columns, line.split(","))))
    return columns, rows


def write_curve(path, xs, ys, header: str) -> Path:
    lines = [header] + [f"{_num(x)} {_num(y)}" for x, y in zip(xs, ys)]
    path = Path(path)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def read_config(path) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for num, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{num}: expected 'key = value', got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def svg_line_chart(series, title="", xlabel="", ylabel="", logx=False, logy=False, width=640, height=420) -> str:
    """Minimal deterministic SVG chart; ``series`` is a list of (label, xs, ys)."""
    colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"]
    tx = (lambda v: math.log10(v)) if logx else float
    ty = (lambda v: math.log10(v)) if logy else float
    pts = [(tx(x), ty(y)) for _, xs, ys in series for x, y in zip(xs, ys)]
    if not pts:
        raise ValueError("nothing to plot")
    x0, x1 = min(p[0] for p in pts), max(p[0] for p in pts)
    y0, y1 = min(p[1] for p in pts), max(p[1] for p in pts)
    x1 = x1 if x1 > x0 else x0 + 1.0
    y1 = y1 if y1 > y0 else y0 + 1.0
    left, right, top, bottom = 70, 20, 40, 50
    pw, ph = width - left - right, height - top - bottom

    def sx(v):
        return left + (v - x0) / (x1 - x0) * pw

    def sy(v):
        return top + (1.0 - (v - y0) / (y1 - y0)) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="monospace" font-size="11">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
        f'<text x="{width / 2:.1f}" y="20" text-anchor="middle" font-size="13">{title}</text>',
        f'<text x="{left + pw / 2:.1f}" y="{height - 10}" text-anchor="middle">{xlabel}</text>',
        f'<text x="14" y="{top + ph / 2:.1f}" text-anchor="middle" transform="rotate(-90 14 {top + ph / 2:.1f})">{ylabel}</text>',
    ]
    for i in range(5):
        fx = x0 + (x1 - x0) * i / 4
        fy = y0 + (y1 - y0) * i / 4
        lx = f"1e{fx:.2f}" if logx else f"{fx:.4g}"
        ly = f"1e{fy:.2f}" if logy else f"{fy:.4g}"
        out.append(f'<text x="{sx(fx):.1f}" y="{top + ph + 15}" text-anchor="middle">{lx}</text>')
        out.append(f'<text x="{left - 5}" y="{sy(fy) + 4:.1f}" text-anchor="end">{ly}</text>')
    for idx, (label, xs, ys) in enumerate(series):
        color = colors[idx % len(colors)]
        path = " ".join(f"{sx(tx(x)):.2f},{sy(ty(y)):.2f}" for x, y in zip(xs, ys))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{path}"/>')
        out.append(f'<text x="{left + 10}" y="{top + 15 + 14 * idx}" fill="{color}">{label}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
