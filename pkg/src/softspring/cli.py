"""Command-line front end.

Exit status: 0 success, 1 usage or configuration error, 2 numerical failure
(divergence or oracle bracket failure), 3 I/O failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import elasticity
from .elasticity import CardError, Material
from .experiment import (
    OracleError,
    TensionProtocol,
    default_ramp,
    result_rows,
    run_step,
    run_tension,
    single_cell_oracle,
    summary_dict,
    write_results_csv,
    write_summary_json,
)
from .mesh import build_grid
from .solver import SimulationDivergedError, SolverConfig

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_IO = 0, 1, 2, 3
DEFAULT_SWEEP_NU = (0.1, 0.3, 0.45, 0.5)


class UsageError(Exception):
    pass


def _float_list(text: str) -> list[float]:
    items = [t.strip() for t in text.split(",")]
    if not items or any(t == "" for t in items):
        raise UsageError(f"malformed number list {text!r}")
    try:
        return [float(t) for t in items]
    except ValueError:
        raise UsageError(f"malformed number list {text!r}") from None


def _material_args(p: argparse.ArgumentParser, repeat_nu: bool = False) -> None:
    src = p.add_mutually_exclusive_group()
    src.add_argument("--preset", choices=sorted(elasticity.PRESETS),
                     action="append" if repeat_nu else "store")
    src.add_argument("--card", type=Path, help="material card (JSON)")
    src.add_argument("--knots", type=Path, help="two-column strain,stress CSV")
    p.add_argument("--joins", default="linear",
                   help="join rule for --knots: linear, cubic, or a comma list per gap")
    if repeat_nu:
        p.add_argument("--nu", action="append", help="Poisson ratio; repeatable or comma list")
    else:
        p.add_argument("--nu", type=float)


def _protocol_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--cells", type=int, default=4)
    p.add_argument("--cell-size", type=float, default=1.0)
    p.add_argument("--axis", choices=("x", "y"), default="x")
    p.add_argument("--iterations", type=int, default=15000)
    p.add_argument("--dt", type=float)
    p.add_argument("--damping", type=float)
    p.add_argument("--ramp-start", type=float)
    p.add_argument("--ramp-ratio", type=float)
    p.add_argument("--record-every", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="softspring", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("tension", help="run one tension ramp")
    _material_args(p)
    _protocol_args(p)
    p.add_argument("--out", type=Path, default=Path("out"))

    p = sub.add_parser("sweep", help="tension ramps over materials and Poisson ratios")
    _material_args(p, repeat_nu=True)
    _protocol_args(p)
    p.add_argument("--out", type=Path, default=Path("out"))
    p.add_argument("--jobs", type=int, default=1)

    p = sub.add_parser("eval-ef", help="tabulate the elasticity function on [-1, 1]")
    _material_args(p)
    p.add_argument("--resolution", type=int, default=401)
    p.add_argument("--out", type=Path)

    p = sub.add_parser("oracle", help="single-cell static oracle versus relaxation")
    _material_args(p)
    p.add_argument("--stress", help="comma list of stress levels")
    p.add_argument("--iterations", type=int, default=15000)
    p.add_argument("--dt", type=float)
    p.add_argument("--damping", type=float)
    p.add_argument("--out", type=Path)
    return parser


def _load_material(args, preset_name=None, nu=None) -> Material:
    """Defaults < card < flags."""
    if args.card is not None:
        if not args.card.is_file():
            raise FileNotFoundError(f"material card not found: {args.card}")
        mat = elasticity.load_card(args.card)
    elif args.knots is not None:
        if not args.knots.is_file():
            raise FileNotFoundError(f"knot file not found: {args.knots}")
        joins = args.joins if "," not in args.joins else args.joins.split(",")
        try:
            model = elasticity.build_from_points(elasticity.read_knots_csv(args.knots), joins,
                                                 name=args.knots.stem)
        except ValueError as exc:
            raise CardError(f"{args.knots}: {exc}") from None
        mat = Material(model, elasticity.DEFAULT_NU)
    else:
        mat = elasticity.preset(preset_name or "skin")
    if nu is not None:
        try:
            mat = mat.with_nu(nu)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    return mat


def _protocol(args, material: Material) -> TensionProtocol:
    if args.cells < 1:
        raise UsageError("--cells must be at least 1")
    mesh = build_grid(args.cells, args.cells, args.cell_size)
    try:
        solver = SolverConfig.for_problem(mesh, material, dt=args.dt, damping=args.damping,
                                          iterations=args.iterations,
                                          record_every=args.record_every)
        return TensionProtocol(material, nx=args.cells, ny=args.cells, cell_size=args.cell_size,
                               axis=args.axis, ramp_start=args.ramp_start,
                               ramp_ratio=args.ramp_ratio, solver=solver)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _effective_config(protocol: TensionProtocol) -> dict:
    start, ratio = default_ramp(protocol.material, protocol.cell_size)
    s = protocol.solver
    return {
        "material": elasticity.material_to_card(protocol.material),
        "cells": [protocol.nx, protocol.ny],
        "cell_size": protocol.cell_size,
        "axis": protocol.axis,
        "ramp_start": protocol.ramp_start if protocol.ramp_start is not None else start,
        "ramp_ratio": protocol.ramp_ratio if protocol.ramp_ratio is not None else ratio,
        "solver": {"dt": s.dt, "damping": s.damping, "iterations": s.iterations,
                   "record_every": s.record_every},
    }


def _write_json(path: Path, data) -> None:
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")


def cmd_tension(args) -> int:
    material = _load_material(args, args.preset, args.nu)
    protocol = _protocol(args, material)
    args.out.mkdir(parents=True, exist_ok=True)
    _write_json(args.out / "config.json", _effective_config(protocol))
    run = run_tension(protocol, trajectory_dir=args.out)
    write_results_csv(args.out / "results.csv", run.records, material)
    write_summary_json(args.out / "summary.json", run, material)
    if run.failure:
        print(f"step {run.failed_step} failed: {run.failure}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def _pair_name(material: Material) -> str:
    return f"{material.name}_nu{material.nu:g}"


def _run_pair(protocol: TensionProtocol):
    try:
        return run_tension(protocol), None
    except Exception as exc:  # one failing pair must not abort the sweep
        return None, f"{type(exc).__name__}: {exc}"


def _nu_values(raw) -> list[float]:
    if raw is None:
        return list(DEFAULT_SWEEP_NU)
    values = []
    for item in raw:
        values.extend(_float_list(item))
    if not values:
        raise UsageError("empty Poisson ratio list")
    unique = list(dict.fromkeys(values))
    if len(unique) < len(values):
        print("warning: duplicate Poisson ratios removed", file=sys.stderr)
    return unique


def cmd_sweep(args) -> int:
    nus = _nu_values(args.nu)
    if args.jobs < 1:
        raise UsageError("--jobs must be at least 1")
    if args.card is not None or args.knots is not None:
        bases = [_load_material(args)]
    else:
        names = list(dict.fromkeys(args.preset or ["skin", "adipose"]))
        bases = [_load_material(args, name) for name in names]
    materials = []
    for base in bases:
        for nu in nus:
            try:
                materials.append(base.with_nu(nu))
            except ValueError as exc:
                raise UsageError(str(exc)) from None
    protocols = [_protocol(args, m) for m in materials]

    args.out.mkdir(parents=True, exist_ok=True)
    _write_json(args.out / "config.json",
                {"pairs": [_effective_config(p) for p in protocols], "jobs": args.jobs})
    if args.jobs == 1:
        outcomes = [_run_pair(p) for p in protocols]
    else:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            outcomes = list(pool.map(_run_pair, protocols))

    status = EXIT_OK
    chart = []
    summaries = {}
    for material, (run, error) in zip(materials, outcomes):
        name = _pair_name(material)
        if run is None:
            summaries[name] = {"error": error}
            status = EXIT_NUMERIC
            continue
        write_results_csv(args.out / f"{name}.csv", run.records, material)
        summaries[name] = summary_dict(run, material)
        if run.failure:
            status = EXIT_NUMERIC
        for row in result_rows(run.records, material):
            chart.append(("stress", f"{material.name} nu={material.nu:g}", row["eps_long"], row["sigma"]))
            chart.append(("poisson", f"{material.name} nu={material.nu:g}", row["eps_long"],
                          -row["eps_trans"]))
    for base in bases:
        for e in np.linspace(0.0, 1.0, 101):
            chart.append(("stress", f"{base.name} Ef", float(e), float(base.Ef(e))))

    with open(args.out / "chart_data.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["chart", "series", "x", "y"])
        for c, series, x, y in chart:
            w.writerow([c, series, repr(float(x)), repr(float(y))])
    _write_json(args.out / "summary.json", summaries)
    return status


def cmd_eval_ef(args) -> int:
    if args.resolution < 2:
        raise UsageError("--resolution must be at least 2")
    material = _load_material(args, args.preset, args.nu)
    strains = np.linspace(-1.0, 1.0, args.resolution)
    stresses = material.Ef(strains)
    rows = [("strain", "stress")] + [(repr(float(e)), repr(float(s))) for e, s in zip(strains, stresses)]
    if args.out is None:
        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerows(rows)
    else:
        args.out.mkdir(parents=True, exist_ok=True)
        with open(args.out / "ef_table.csv", "w", newline="") as fh:
            csv.writer(fh, lineterminator="\n").writerows(rows)
    return EXIT_OK


ORACLE_FRACTIONS = (0.1, 0.3, 0.5, 0.7, 0.9)
ORACLE_COLUMNS = ["sigma", "oracle_eps_long", "oracle_eps_trans", "solver_eps_long",
                  "solver_eps_trans", "delta_long", "delta_trans", "error"]


def oracle_rows(material: Material, stresses, solver_overrides=None) -> list[dict]:
    """Oracle and 1x1 relaxation strains side by side for each stress level."""
    rows = []
    for sigma in stresses:
        row = dict.fromkeys(ORACLE_COLUMNS, float("nan"))
        row["sigma"], row["error"] = sigma, ""
        try:
            o_long, o_trans = single_cell_oracle(material, sigma)
            s_long = s_trans = 0.0
            if sigma > 0:
                protocol = TensionProtocol(material, nx=1, ny=1)
                if solver_overrides:
                    protocol.solver = SolverConfig.for_problem(build_grid(1, 1), material,
                                                               **solver_overrides)
                rec = run_step(protocol, 0, sigma)
                s_long, s_trans = rec.eps_long, rec.eps_trans
            row.update(oracle_eps_long=o_long, oracle_eps_trans=o_trans, solver_eps_long=s_long,
                       solver_eps_trans=s_trans, delta_long=s_long - o_long,
                       delta_trans=s_trans - o_trans)
        except (OracleError, SimulationDivergedError) as exc:
            row["error"] = str(exc)
        rows.append(row)
    return rows


def cmd_oracle(args) -> int:
    material = _load_material(args, args.preset, args.nu)
    if args.stress is None:
        stresses = [f * material.Ef(1.0) for f in ORACLE_FRACTIONS]
    else:
        stresses = _float_list(args.stress)
        if any(s < 0 for s in stresses):
            raise UsageError("stress levels must be non-negative")
    overrides = {"dt": args.dt, "damping": args.damping, "iterations": args.iterations}
    rows = oracle_rows(material, stresses, overrides)

    def emit(fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(ORACLE_COLUMNS)
        for r in rows:
            w.writerow([r[c] if c == "error" else repr(float(r[c])) for c in ORACLE_COLUMNS])

    if args.out is None:
        emit(sys.stdout)
    else:
        args.out.mkdir(parents=True, exist_ok=True)
        with open(args.out / "oracle.csv", "w", newline="") as fh:
            emit(fh)
    return EXIT_NUMERIC if any(r["error"] for r in rows) else EXIT_OK


COMMANDS = {"tension": cmd_tension, "sweep": cmd_sweep, "eval-ef": cmd_eval_ef, "oracle": cmd_oracle}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CardError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SimulationDivergedError, OracleError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
