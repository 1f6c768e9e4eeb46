"""Command-line driver: single experiments, parameter sweeps, phase reports.

Subcommands
-----------
fractal    realize a boundary family and export it in the text format
dimension  print the similarity dimension and the uniqueness threshold
capacity   relaxed boundary capacity behind a collar
hardy      local Hardy quotient on a ball
collar     regularized collar integral over a tau ladder, with fitted exponent
walk       absorbed-walk boundary-hitting fraction
sweep      (lambda, delta) grid of capacity-trend cells, resumable
report     record stream -> CSV table + SVG phase diagram

Every experiment appends one `ExperimentRecord` to a JSON-lines stream when a
records path is given; sweeps require one and skip cells whose id is already
present, so interrupted runs resume without recomputing. Options may come
from a JSON config file (`--config`), with explicit flags taking precedence.
Exit codes: 0 success, 2 invalid config or empty domain, 3 solver failure.
Worker threads for sweep field construction honor $SNOWCAP_THREADS.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__
from .errors import SnowcapError, SolverDiverged, EmptyDomain, EmptyRegion
from .simsys import DEPTH_CAPS, similarity_dimension, critical_delta, geometry_to_text
from .geomfield import build_grid, distance_field
from .forms import assemble_form, capacity_relaxed, hardy_quotient, collar_integral
from .stochastic import WalkConfig, walk_absorption
from .records import (
    ExperimentRecord,
    make_geometry,
    record_id,
    derive_seed,
    append_record,
    load_records,
    load_ids,
)

__all__ = ["run_subcommand", "main", "choose_depth"]

_PRIMITIVE_BUDGET = 2_000_000

# ratio of child to parent primitive size, and primitive multiplicity per round
_FAMILY_SHAPE = {
    "koch": (lambda lam: (1.0 - lam) / 2.0, lambda dim: 4, 3),
    "vicsek": (lambda lam: max(lam, 1.0 - 2.0 * lam), lambda dim: 2**dim + 1, 1),
    "cantor-dust": (lambda lam: lam, lambda dim: 2**dim, 1),
}


class _CliError(Exception):
    """Invalid command line or config file."""


# options that must come from either the command line or the config file
_REQUIRED = {
    "fractal": ("family", "lam", "depth", "out"),
    "dimension": ("family", "lam"),
    "capacity": ("family", "lam", "delta"),
    "hardy": ("family", "lam", "delta", "z", "r"),
    "collar": ("family", "lam", "delta", "z", "rho"),
    "walk": ("family", "lam", "delta", "start"),
    "sweep": ("family", "lambdas", "deltas", "resolution", "out"),
    "report": ("infile", "out"),
}


def _check_required(args) -> None:
    missing = [n for n in _REQUIRED[args.cmd] if getattr(args, n, None) is None]
    if missing:
        raise _CliError(f"{args.cmd}: missing required option(s) {missing}")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _CliError(message)


# --- small parsers ------------------------------------------------------------


def _parse_length(spec, h: float) -> float:
    """Length literal: plain number, or a multiple of the cell size ('8h')."""
    if isinstance(spec, (int, float)):
        return float(spec)
    s = str(spec).strip()
    if s.endswith("h"):
        return float(s[:-1]) * h
    return float(s)


def _parse_range(spec) -> np.ndarray:
    """'lo:hi:n' -> n evenly spaced values from lo to hi inclusive."""
    parts = str(spec).split(":")
    if len(parts) != 3:
        raise _CliError(f"range {spec!r} must look like lo:hi:n")
    lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
    if n < 1:
        raise _CliError("range count must be >= 1")
    return np.linspace(lo, hi, n)


def _parse_length_range(spec, h: float) -> np.ndarray:
    """'8h:64h:7' -> geometric ladder of lengths (bounds may use the h suffix)."""
    parts = str(spec).split(":")
    if len(parts) != 3:
        raise _CliError(f"range {spec!r} must look like lo:hi:n")
    lo, hi, n = _parse_length(parts[0], h), _parse_length(parts[1], h), int(parts[2])
    if n < 2:
        raise _CliError("need at least two ladder points")
    return np.geomspace(lo, hi, n)


def _parse_point(spec, dim: int) -> tuple:
    vals = tuple(float(v) for v in str(spec).split(","))
    if len(vals) != dim:
        raise _CliError(f"point {spec!r} must have {dim} comma-separated coordinates")
    return vals


def _threads() -> int:
    raw = os.environ.get("SNOWCAP_THREADS", "")
    if raw.strip():
        n = int(raw)
        if n < 1:
            raise _CliError("SNOWCAP_THREADS must be a positive integer")
        return n
    return os.cpu_count() or 1


# --- geometry and field construction -------------------------------------------


def choose_depth(family: str, lam: float, dim: int, resolution: int) -> int:
    """Smallest depth whose realization error is below one cell.

    The error shrinks like ratio^depth; the cell size is the bounding-box
    extent over the resolution. Depth is capped by the family guardrail and
    by a primitive-count budget, so extreme ratios degrade gracefully
    instead of exhausting memory.
    """
    key = "cantor-dust" if family == "cantor" else family
    if key not in _FAMILY_SHAPE:
        raise _CliError(f"unknown family {family!r}")
    ratio_fn, mult_fn, base = _FAMILY_SHAPE[key]
    ratio, mult = ratio_fn(lam), mult_fn(dim)
    probe = make_geometry(family, lam, dim, min(3, DEPTH_CAPS[(key, dim)]))
    lo, hi = probe.bounds()
    h = float(np.max(hi - lo)) / resolution

    err_unit = np.sqrt(dim) if key != "koch" else 1.0
    depth, count = 1, base * mult
    cap = DEPTH_CAPS[(key, dim)]
    while (
        err_unit * ratio**depth > h
        and depth < cap
        and count * mult <= _PRIMITIVE_BUDGET
    ):
        depth += 1
        count *= mult
    return depth


def _build_field(family: str, lam: float, dim: int, resolution: int, depth: int | None):
    """Realize the family and compute its certified distance field."""
    if depth is None:
        depth = choose_depth(family, lam, dim, resolution)
    geom = make_geometry(family, lam, dim, depth)
    grid = build_grid(geom, resolution)
    return geom, distance_field(geom, grid)


def _start_cell(point: tuple, grid) -> tuple:
    """Grid multi-index of the cell whose center is nearest to a point."""
    idx = []
    for ax, p in enumerate(point):
        i = int(np.round((p - grid.origin[ax]) / grid.h - 0.5))
        idx.append(int(np.clip(i, 0, grid.dims[ax] - 1)))
    return tuple(idx)


def _emit(payload: dict) -> None:
    sys.stdout.write(json.dumps(payload, sort_keys=True) + "\n")


def _record(args, op, depth, resolution, delta, outputs, tolerances, seed, wall, params):
    geom_sys = make_geometry(args.family, args.lam, args.d, 1).system
    s = similarity_dimension(geom_sys)
    rec = ExperimentRecord(
        id=record_id(params),
        op=op,
        family=args.family,
        lam=args.lam,
        depth=depth,
        dim=args.d,
        s=s,
        delta=delta,
        delta_c=critical_delta(s, args.d),
        resolution=resolution,
        outputs=outputs,
        tolerances=tolerances,
        seed=seed,
        wall_time=wall,
        version=__version__,
    )
    if getattr(args, "records", None):
        append_record(args.records, rec)
    return rec


# --- single-experiment subcommands ----------------------------------------------


def _cmd_fractal(args) -> int:
    geom = make_geometry(args.family, args.lam, args.d, args.depth)
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(geometry_to_text(geom))
    _emit(
        {
            "family": args.family,
            "lambda": args.lam,
            "d": args.d,
            "depth": args.depth,
            "primitives": len(geom.primitives),
            "approx_error": geom.approx_error,
            "out": args.out,
        }
    )
    return 0


def _cmd_dimension(args) -> int:
    t0 = time.perf_counter()
    system = make_geometry(args.family, args.lam, args.d, 1).system
    s = similarity_dimension(system)
    dc = critical_delta(s, args.d)
    params = {"op": "dimension", "family": args.family, "lambda": args.lam, "d": args.d}
    _record(args, "dimension", None, None, None, {}, {}, 0, time.perf_counter() - t0, params)
    _emit({"family": args.family, "lambda": args.lam, "d": args.d, "s": s, "delta_c": dc})
    return 0


def _cmd_capacity(args) -> int:
    t0 = time.perf_counter()
    geom, field = _build_field(args.family, args.lam, args.d, args.resolution, args.depth)
    eps = _parse_length(args.eps, field.grid.h)
    res = capacity_relaxed(field, args.delta, None, eps, cg_tol=args.cg_tol)
    outputs = {
        "value": res.value,
        "collar_eps": res.collar_eps,
        "solver_iters": res.solver_iters,
        "residual": res.residual,
    }
    params = {
        "op": "capacity",
        "family": args.family,
        "lambda": args.lam,
        "d": args.d,
        "depth": geom.depth,
        "resolution": args.resolution,
        "delta": args.delta,
        "eps": args.eps,
    }
    _record(
        args, "capacity", geom.depth, args.resolution, args.delta,
        outputs, {"cg_tol": args.cg_tol}, 0, time.perf_counter() - t0, params,
    )
    _emit(outputs)
    return 0


def _cmd_hardy(args) -> int:
    t0 = time.perf_counter()
    geom, field = _build_field(args.family, args.lam, args.d, args.resolution, args.depth)
    z = _parse_point(args.z, args.d)
    r = _parse_length(args.r, field.grid.h)
    quot = hardy_quotient(field, args.delta, z, r, tol=args.tol, max_outer=args.max_outer)
    outputs = {"quotient": quot, "z": list(z), "r": r}
    params = {
        "op": "hardy",
        "family": args.family,
        "lambda": args.lam,
        "d": args.d,
        "depth": geom.depth,
        "resolution": args.resolution,
        "delta": args.delta,
        "z": list(z),
        "r": args.r,
    }
    _record(
        args, "hardy", geom.depth, args.resolution, args.delta,
        outputs, {"tol": args.tol}, 0, time.perf_counter() - t0, params,
    )
    _emit(outputs)
    return 0


def _cmd_collar(args) -> int:
    t0 = time.perf_counter()
    geom, field = _build_field(args.family, args.lam, args.d, args.resolution, args.depth)
    z = _parse_point(args.z, args.d)
    rho = _parse_length(args.rho, field.grid.h)
    taus = _parse_length_range(args.taus, field.grid.h)
    values = [collar_integral(field, args.delta, z, rho, t) for t in taus]
    slope = float(np.polyfit(np.log(taus), np.log(values), 1)[0])
    outputs = {"slope": slope, "taus": [float(t) for t in taus], "values": values}
    params = {
        "op": "collar",
        "family": args.family,
        "lambda": args.lam,
        "d": args.d,
        "depth": geom.depth,
        "resolution": args.resolution,
        "delta": args.delta,
        "z": list(z),
        "rho": args.rho,
        "taus": args.taus,
    }
    _record(
        args, "collar", geom.depth, args.resolution, args.delta,
        outputs, {}, 0, time.perf_counter() - t0, params,
    )
    _emit(outputs)
    return 0


def _cmd_walk(args) -> int:
    t0 = time.perf_counter()
    geom, field = _build_field(args.family, args.lam, args.d, args.resolution, args.depth)
    form = assemble_form(field, args.delta)
    start = _start_cell(_parse_point(args.start, args.d), field.grid)
    eps = _parse_length(args.absorb_eps, field.grid.h)
    params = {
        "op": "walk",
        "family": args.family,
        "lambda": args.lam,
        "d": args.d,
        "depth": geom.depth,
        "resolution": args.resolution,
        "delta": args.delta,
        "start": list(start),
        "horizon": args.horizon,
        "trials": args.trials,
        "absorb_eps": args.absorb_eps,
        "seed": args.seed,
    }
    rid = record_id(params)
    cfg = WalkConfig(
        start=start,
        horizon=args.horizon,
        trials=args.trials,
        seed=derive_seed(args.seed, rid),
        absorb_eps=eps,
    )
    res = walk_absorption(form, field, cfg)
    outputs = {
        "p_hat": res.p_hat,
        "stderr": res.stderr,
        "absorbed": res.absorbed,
        "trials": res.trials,
        "clamp_events": res.clamp_events,
    }
    _record(
        args, "walk", geom.depth, args.resolution, args.delta,
        outputs, {}, cfg.seed, time.perf_counter() - t0, params,
    )
    _emit(outputs)
    return 0


# --- sweep ---------------------------------------------------------------------


def _trend_cell(field_coarse, field_fine, delta: float, eps_cells: float, cg_tol: float):
    """Capacity at two resolutions with a collar of fixed width in cells.

    The collar shrinks with the cell size, so a vanishing trend flags
    boundaries the form cannot see in the limit.
    """
    v_c = capacity_relaxed(
        field_coarse, delta, None, eps_cells * field_coarse.grid.h, cg_tol=cg_tol
    ).value
    v_f = capacity_relaxed(
        field_fine, delta, None, eps_cells * field_fine.grid.h, cg_tol=cg_tol
    ).value
    ratio = v_c / v_f if v_f > 0 else float("inf")
    verdict = "vanishing" if ratio >= 1.25 else "persistent"
    return v_c, v_f, ratio, verdict


def _cmd_sweep(args) -> int:
    lams = _parse_range(args.lambdas)
    deltas = _parse_range(args.deltas)
    if args.resolution < 16:
        raise _CliError("sweep resolution must be at least 16")
    res_f, res_c = args.resolution, args.resolution // 2
    done = load_ids(args.out)
    written = 0

    for lam in lams:
        lam = float(lam)
        cells = []
        for delta in deltas:
            delta = float(delta)
            params = {
                "op": "capacity-trend",
                "family": args.family,
                "lambda": lam,
                "d": args.d,
                "delta": delta,
                "resolution": res_f,
                "eps_cells": args.eps_cells,
            }
            rid = record_id(params)
            if rid not in done:
                cells.append((delta, rid, params))
        if not cells:
            continue

        depth = choose_depth(args.family, lam, args.d, res_f)
        geom = make_geometry(args.family, lam, args.d, depth)
        with ThreadPoolExecutor(max_workers=min(2, _threads())) as pool:
            futs = [
                pool.submit(distance_field, geom, build_grid(geom, r))
                for r in (res_c, res_f)
            ]
            field_c, field_f = (f.result() for f in futs)

        system = geom.system
        s = similarity_dimension(system)
        for delta, rid, params in cells:
            t0 = time.perf_counter()
            v_c, v_f, ratio, verdict = _trend_cell(
                field_c, field_f, delta, args.eps_cells, args.cg_tol
            )
            rec = ExperimentRecord(
                id=rid,
                op="capacity-trend",
                family=args.family,
                lam=lam,
                depth=depth,
                dim=args.d,
                s=s,
                delta=delta,
                delta_c=critical_delta(s, args.d),
                resolution=res_f,
                outputs={
                    "capacity_coarse": v_c,
                    "capacity_fine": v_f,
                    "ratio": ratio,
                    "verdict": verdict,
                },
                tolerances={"cg_tol": args.cg_tol},
                seed=derive_seed(args.seed, rid),
                wall_time=time.perf_counter() - t0,
                version=__version__,
            )
            append_record(args.out, rec)
            done.add(rid)
            written += 1

    _emit({"records": written, "skipped": len(lams) * len(deltas) - written, "out": args.out})
    return 0


# --- report ----------------------------------------------------------------------


def _write_csv(records, path: str) -> None:
    import csv

    core = [
        "id", "op", "family", "lambda", "depth", "d", "s", "delta", "delta_c",
        "resolution", "seed", "wall_time", "version",
    ]
    out_keys = sorted({k for r in records for k in r.outputs})
    tol_keys = sorted({k for r in records for k in r.tolerances})
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(core + [f"out.{k}" for k in out_keys] + [f"tol.{k}" for k in tol_keys])
        for r in records:
            row = [
                r.id, r.op, r.family, r.lam, r.depth, r.dim, r.s, r.delta,
                r.delta_c, r.resolution, r.seed, r.wall_time, r.version,
            ]
            for k in out_keys:
                v = r.outputs.get(k, "")
                row.append(json.dumps(v) if isinstance(v, (list, dict)) else v)
            for k in tol_keys:
                row.append(r.tolerances.get(k, ""))
            w.writerow(row)


def _axis_edges(values: np.ndarray):
    """Cell-edge range for a uniform value grid (degenerate grids get padding)."""
    if len(values) > 1:
        half = 0.5 * (values[1] - values[0])
    else:
        half = 0.5 * max(abs(values[0]), 1.0)
    return values[0] - half, values[-1] + half


def _svg_phase(records, path: str) -> None:
    """Heatmap of (lambda, delta) capacity-trend verdicts with the critical
    threshold curve delta_c(lambda) overlaid."""
    cells = [r for r in records if r.op == "capacity-trend"]
    if not cells:
        raise EmptyRegion("no capacity-trend records to plot")
    families = {(r.family, r.dim) for r in cells}
    if len(families) > 1:
        raise _CliError(f"mixed sweep families in record stream: {sorted(families)}")
    family, dim = next(iter(families))

    lams = np.array(sorted({r.lam for r in cells}))
    dels = np.array(sorted({r.delta for r in cells}))
    lam0, lam1 = _axis_edges(lams)
    del0, del1 = _axis_edges(dels)

    ml, mt, mr, mb = 70.0, 34.0, 190.0, 56.0
    W, H = 460.0, 360.0

    def sx(lam):
        return ml + (lam - lam0) / (lam1 - lam0) * W

    def sy(delta):
        return mt + (del1 - delta) / (del1 - del0) * H

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{ml + W + mr:.0f}" '
        f'height="{mt + H + mb:.0f}" font-family="monospace" font-size="12">',
        f'<rect x="{ml}" y="{mt}" width="{W}" height="{H}" fill="#f7f7f7" stroke="#333"/>',
        f'<text x="{ml + W / 2:.1f}" y="{mt - 12:.1f}" text-anchor="middle">'
        f"capacity trend: {family} d={dim}</text>",
    ]
    cw = W / len(lams) if len(lams) else W
    ch = H / len(dels) if len(dels) else H
    for r in cells:
        x = sx(r.lam) - cw / 2.0
        y = sy(r.delta) - ch / 2.0
        ratio = max(float(r.outputs.get("ratio", 1.0)), 1e-9)
        strength = min(1.0, 0.25 + abs(np.log2(ratio)) / 2.0)
        color = "#c0392b" if r.outputs.get("verdict") == "vanishing" else "#2e6bb0"
        parts.append(
            f'<rect x="{x:.1f}" y="{y:.1f}" width="{cw:.1f}" height="{ch:.1f}" '
            f'fill="{color}" fill-opacity="{strength:.2f}"><title>'
            f"lambda={r.lam:.4g} delta={r.delta:.4g} ratio={ratio:.3g}</title></rect>"
        )

    from .records import family_dimension

    pts = []
    for lam in np.linspace(lams[0], lams[-1], 160):
        try:
            dc = critical_delta(family_dimension(family, float(lam), dim), dim)
        except (ValueError, SnowcapError):
            continue
        if del0 <= dc <= del1:
            pts.append(f"{sx(lam):.1f},{sy(dc):.1f}")
    if pts:
        parts.append(
            f'<polyline points="{" ".join(pts)}" fill="none" stroke="#111" '
            'stroke-width="2" stroke-dasharray="7,4"/>'
        )

    for lam in lams:
        parts.append(
            f'<text x="{sx(lam):.1f}" y="{mt + H + 18:.1f}" text-anchor="middle">'
            f"{lam:.3g}</text>"
        )
    for delta in dels:
        parts.append(
            f'<text x="{ml - 8:.1f}" y="{sy(delta) + 4:.1f}" text-anchor="end">'
            f"{delta:.3g}</text>"
        )
    parts.append(
        f'<text x="{ml + W / 2:.1f}" y="{mt + H + 42:.1f}" text-anchor="middle">lambda</text>'
    )
    parts.append(
        f'<text x="16" y="{mt + H / 2:.1f}" transform="rotate(-90 16 {mt + H / 2:.1f})" '
        'text-anchor="middle">delta</text>'
    )
    lx = ml + W + 16
    legend = [
        ("#c0392b", "capacity vanishes under refinement"),
        ("#2e6bb0", "capacity persists"),
    ]
    for i, (color, label) in enumerate(legend):
        y = mt + 14 + 22 * i
        parts.append(f'<rect x="{lx}" y="{y - 10}" width="14" height="14" fill="{color}"/>')
        parts.append(f'<text x="{lx + 20}" y="{y + 2}">{label}</text>')
    y = mt + 14 + 22 * len(legend)
    parts.append(
        f'<line x1="{lx}" y1="{y - 3}" x2="{lx + 14}" y2="{y - 3}" stroke="#111" '
        'stroke-width="2" stroke-dasharray="7,4"/>'
    )
    parts.append(f'<text x="{lx + 20}" y="{y + 2}">delta_c(lambda)</text>')
    parts.append("</svg>")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(parts) + "\n")


def _cmd_report(args) -> int:
    records = load_records(args.infile)
    csv_path = args.csv
    if csv_path is None:
        stem, ext = os.path.splitext(args.out)
        csv_path = (stem if ext else args.out) + ".csv"
    _write_csv(records, csv_path)
    _svg_phase(records, args.out)
    _emit({"records": len(records), "csv": csv_path, "svg": args.out})
    return 0


# --- argument wiring ---------------------------------------------------------------


def _add_geometry_args(p, with_resolution=True):
    p.add_argument("--family", help="koch | vicsek | cantor")
    p.add_argument("--lambda", dest="lam", type=float,
                   help="contraction ratio of the family")
    p.add_argument("--d", type=int, default=2, help="ambient dimension")
    if with_resolution:
        p.add_argument("--resolution", type=int, default=256,
                       help="cells along the longest extent")
        p.add_argument("--depth", type=int, default=None,
                       help="substitution depth (default: error below one cell)")


def _build_parser():
    top = _Parser(prog="snowcap", description=__doc__.splitlines()[0])
    top.add_argument("--version", action="version", version=f"snowcap {__version__}")
    sub = top.add_subparsers(dest="cmd", required=True)
    parser_map = {}

    def add(name, fn, help_):
        p = sub.add_parser(name, help=help_)
        p.set_defaults(fn=fn)
        p.add_argument("--config", default=None, help="JSON file of option defaults")
        parser_map[name] = p
        return p

    p = add("fractal", _cmd_fractal, "realize a boundary family and export it")
    _add_geometry_args(p, with_resolution=False)
    p.add_argument("--depth", type=int)
    p.add_argument("--out", help="text-format geometry path")

    p = add("dimension", _cmd_dimension, "similarity dimension and threshold")
    _add_geometry_args(p, with_resolution=False)
    p.add_argument("--records", default=None, help="JSON-lines record stream to append")

    p = add("capacity", _cmd_capacity, "relaxed boundary capacity")
    _add_geometry_args(p)
    p.add_argument("--delta", type=float, help="degeneration order")
    p.add_argument("--eps", default="8h", help="collar width (number or multiple of h)")
    p.add_argument("--cg-tol", dest="cg_tol", type=float, default=1e-8)
    p.add_argument("--records", default=None)

    p = add("hardy", _cmd_hardy, "local Hardy quotient")
    _add_geometry_args(p)
    p.add_argument("--delta", type=float)
    p.add_argument("--z", help="ball center, comma-separated")
    p.add_argument("--r", help="ball radius (number or multiple of h)")
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--max-outer", dest="max_outer", type=int, default=200)
    p.add_argument("--records", default=None)

    p = add("collar", _cmd_collar, "collar integral ladder and exponent")
    _add_geometry_args(p)
    p.add_argument("--delta", type=float)
    p.add_argument("--z")
    p.add_argument("--rho", help="region radius (number or multiple of h)")
    p.add_argument("--taus", default="8h:64h:7", help="regularization ladder lo:hi:n")
    p.add_argument("--records", default=None)

    p = add("walk", _cmd_walk, "absorbed-walk hitting fraction")
    _add_geometry_args(p)
    p.add_argument("--delta", type=float)
    p.add_argument("--start", help="start point, comma-separated")
    p.add_argument("--horizon", type=float, default=1.0)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--absorb-eps", dest="absorb_eps", default="6h")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--records", default=None)

    p = add("sweep", _cmd_sweep, "capacity-trend grid over (lambda, delta)")
    p.add_argument("--family")
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--lambdas", help="lo:hi:n")
    p.add_argument("--deltas", help="lo:hi:n")
    p.add_argument("--resolution", type=int)
    p.add_argument("--eps-cells", dest="eps_cells", type=float, default=8.0)
    p.add_argument("--cg-tol", dest="cg_tol", type=float, default=1e-6)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="JSON-lines record stream")

    p = add("report", _cmd_report, "CSV table and SVG phase diagram")
    p.add_argument("--in", dest="infile", help="JSON-lines record stream")
    p.add_argument("--out", help="SVG output path")
    p.add_argument("--csv", default=None, help="CSV output path (default: beside --out)")

    return top, parser_map


def _apply_config(argv, parser_map):
    """Load `--config` JSON and install it as defaults on the subparser."""
    if not argv or argv[0] not in parser_map:
        return
    path = None
    for i, tok in enumerate(argv):
        if tok == "--config" and i + 1 < len(argv):
            path = argv[i + 1]
        elif tok.startswith("--config="):
            path = tok.split("=", 1)[1]
    if path is None:
        return
    with open(path, encoding="utf-8") as fh:
        cfg = json.load(fh)
    if not isinstance(cfg, dict):
        raise _CliError("config file must hold a JSON object")
    aliases = {"lambda": "lam", "in": "infile", "max-outer": "max_outer",
               "cg-tol": "cg_tol", "eps-cells": "eps_cells", "absorb-eps": "absorb_eps"}
    cfg = {aliases.get(k, k): v for k, v in cfg.items()}
    sub = parser_map[argv[0]]
    dests = {a.dest for a in sub._actions} - {"help", "config", "fn"}
    unknown = set(cfg) - dests
    if unknown:
        raise _CliError(f"config keys not accepted by {argv[0]!r}: {sorted(unknown)}")
    sub.set_defaults(**cfg)


def run_subcommand(argv) -> int:
    """Parse argv, run one subcommand, and map failures to exit codes.

    On failure a single machine-readable JSON object is written to stderr:
    {"error": <class>, "message": <detail>}.
    """
    argv = list(argv)
    try:
        top, parser_map = _build_parser()
        _apply_config(argv, parser_map)
        args = top.parse_args(argv)
        _check_required(args)
        return args.fn(args)
    except SystemExit as e:  # argparse --help / --version
        return int(e.code or 0)
    except SolverDiverged as e:
        _fail("solver", e)
        return 3
    except (EmptyDomain, EmptyRegion) as e:
        _fail("empty-domain", e)
        return 2
    except SnowcapError as e:
        _fail(type(e).__name__, e)
        return 2
    except (_CliError, ValueError, KeyError, OSError, json.JSONDecodeError) as e:
        _fail("config", e)
        return 2


def _fail(code: str, exc: Exception) -> None:
    sys.stderr.write(json.dumps({"error": code, "message": str(exc)}) + "\n")


def main() -> None:
    sys.exit(run_subcommand(sys.argv[1:]))


if __name__ == "__main__":
    main()
