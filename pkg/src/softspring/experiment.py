"""Uniaxial tension experiments on a square sample.

Protocol: forces pull two opposite sides of the sample apart. Every cell
contributes the same force ``F`` to each of its vertices on the loaded side,
so corners carry ``F`` and shared boundary nodes ``2F``. Each ramp step
starts from the undeformed sample and relaxes it. The strains come from the
bounding box. The ramp stops at the first step whose longitudinal strain
reaches 1.
"""

from __future__ import annotations

import csv
import json
import math
import statistics
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.optimize import brentq

from .elasticity import Material
from .mesh import GridMesh, bounding_box, boundary_nodes, build_grid
from .solver import LoadCase, SimulationDivergedError, SolverConfig, TrajectoryWriter, relax
from .springs import SingularConfigurationError, SpringKind, spring_force_vector

STOP_STRAIN = 1.0
RAMP_STEPS = 16
RAMP_FIRST_STRAIN = 0.01
RAMP_OVERSHOOT = 1.005

RESULT_COLUMNS = [
    "step", "F", "sigma", "eps_long", "eps_trans", "poisson_ratio_est",
    "ef_at_eps", "rel_err_stress", "residual", "iterations", "eps_trans_mid",
]


class OracleError(ArithmeticError):
    """Static single-cell equilibrium has no root in the searched bracket."""


def _axis_index(axis: str) -> int:
    if axis not in ("x", "y"):
        raise ValueError(f"axis must be 'x' or 'y', got {axis!r}")
    return 0 if axis == "x" else 1


def build_load(mesh: GridMesh, axis: str, F: float) -> LoadCase:
    """Outward forces on the two sides perpendicular to ``axis``."""
    if not F > 0:
        raise ValueError("force must be positive")
    k = _axis_index(axis)
    low, high = ("left", "right") if k == 0 else ("bottom", "top")
    nodes, forces = [], []
    for side, sign in ((high, 1.0), (low, -1.0)):
        for node, mult in boundary_nodes(mesh, side):
            f = np.zeros(2)
            f[k] = sign * mult * F
            nodes.append(node)
            forces.append(f)
    return LoadCase(nodes, forces)


def nominal_stress(F: float, cell_size: float) -> float:
    """Average stress carried by the sample for per-cell-vertex force ``F``.

    A shared boundary node carries ``2F``; half of that, spread over one cell
    width, is the stress. This is the stress at which a uniform strain ``e``
    with ``Ef(e) = stress`` is an exact equilibrium.
    """
    return F / cell_size


def measure_strains(initial_box, final_box, axis: str) -> tuple[float, float]:
    k = _axis_index(axis)
    init = np.asarray(initial_box[1], float) - np.asarray(initial_box[0], float)
    final = np.asarray(final_box[1], float) - np.asarray(final_box[0], float)
    if np.any(init <= 0):
        raise ValueError("degenerate initial bounding box")
    strain = (final - init) / init
    return float(strain[k]), float(strain[1 - k])


def _midline_strain(mesh: GridMesh, initial: np.ndarray, axis: str) -> float:
    """Transverse strain across the middle row/column of nodes."""
    nx, ny = mesh.dims
    k = _axis_index(axis)
    if k == 0:
        ids = [mesh.node_index(nx // 2, j) for j in range(ny + 1)]
    else:
        ids = [mesh.node_index(i, ny // 2) for i in range(nx + 1)]
    t = 1 - k
    w0 = np.ptp(initial[ids, t])
    return float((np.ptp(mesh.positions[ids, t]) - w0) / w0)


@dataclass
class ExperimentRecord:
    step: int
    force: float
    sigma: float
    eps_long: float
    eps_trans: float
    residual: float
    iterations: int
    eps_trans_mid: float = float("nan")


@dataclass
class TensionProtocol:
    """Sample, load axis, force ramp and solver settings for one tension curve.

    Without an explicit ``force_ramp`` the ramp is geometric. By default it
    starts at the force giving 1% strain under uniform deformation and
    reaches slightly past the force for strain 1 after 16 steps.
    """

    material: Material
    nx: int = 4
    ny: int = 4
    cell_size: float = 1.0
    axis: str = "x"
    force_ramp: Sequence[float] | None = None
    ramp_start: float | None = None
    ramp_ratio: float | None = None
    max_steps: int = 40
    solver: SolverConfig | None = None
    node_mass: float = 1.0
    stop_strain: float = STOP_STRAIN

    def __post_init__(self):
        _axis_index(self.axis)
        if self.force_ramp is not None:
            ramp = [float(f) for f in self.force_ramp]
            if not ramp or any(f <= 0 for f in ramp):
                raise ValueError("ramp forces must be positive")
            if any(b <= a for a, b in zip(ramp, ramp[1:])):
                raise ValueError("ramp must be strictly increasing")
            self.force_ramp = ramp
        if self.ramp_ratio is not None and self.ramp_ratio <= 1:
            raise ValueError("ramp ratio must exceed 1")
        if self.ramp_start is not None and self.ramp_start <= 0:
            raise ValueError("ramp start must be positive")

    def forces(self) -> list[float]:
        if self.force_ramp is not None:
            return list(self.force_ramp)
        start, ratio = default_ramp(self.material, self.cell_size)
        start = self.ramp_start if self.ramp_start is not None else start
        ratio = self.ramp_ratio if self.ramp_ratio is not None else ratio
        return [start * ratio ** i for i in range(self.max_steps)]

    def solver_config(self, mesh: GridMesh) -> SolverConfig:
        return self.solver if self.solver is not None else SolverConfig.for_problem(mesh, self.material)


def default_ramp(material: Material, cell_size: float = 1.0,
                 steps: int = RAMP_STEPS) -> tuple[float, float]:
    """``(start, ratio)`` spanning 1% strain to just past strain 1."""
    lo = material.Ef(RAMP_FIRST_STRAIN)
    hi = material.Ef(STOP_STRAIN) * RAMP_OVERSHOOT
    if not 0 < lo < hi:
        raise ValueError("default ramp needs an increasing positive tension curve")
    start = lo * cell_size
    return start, (hi / lo) ** (1.0 / (steps - 1))


@dataclass
class TensionRun:
    records: list[ExperimentRecord]
    failure: str | None = None
    failed_step: int | None = None

    @property
    def reached_stop(self) -> bool:
        return bool(self.records) and self.records[-1].eps_long >= STOP_STRAIN

    def __iter__(self):
        return iter(self.records)

    def __len__(self):
        return len(self.records)


def run_step(protocol: TensionProtocol, step: int, F: float, on_frame=None) -> ExperimentRecord:
    mesh = build_grid(protocol.nx, protocol.ny, protocol.cell_size, protocol.node_mass)
    initial = mesh.positions.copy()
    box0 = bounding_box(mesh)
    result = relax(mesh, protocol.material, build_load(mesh, protocol.axis, F),
                   protocol.solver_config(mesh), on_frame=on_frame)
    eps_long, eps_trans = measure_strains(box0, bounding_box(result.mesh), protocol.axis)
    return ExperimentRecord(
        step=step,
        force=F,
        sigma=nominal_stress(F, protocol.cell_size),
        eps_long=eps_long,
        eps_trans=eps_trans,
        residual=result.residual,
        iterations=result.iterations,
        eps_trans_mid=_midline_strain(result.mesh, initial, protocol.axis),
    )


def run_tension(protocol: TensionProtocol, trajectory_dir=None) -> TensionRun:
    """Run the force ramp until the sample reaches the stop strain.

    A diverging step ends the ramp; earlier records are kept and the failure
    is reported on the returned run. With ``trajectory_dir`` and a solver
    ``record_every`` stride, node positions of every step are written to
    ``trajectory_step<k>.csv`` there.
    """
    records = []
    for step, F in enumerate(protocol.forces()):
        writer = None
        if trajectory_dir is not None and protocol.solver and protocol.solver.record_every:
            writer = TrajectoryWriter(Path(trajectory_dir) / f"trajectory_step{step:02d}.csv")
        try:
            rec = run_step(protocol, step, F, on_frame=writer)
        except SimulationDivergedError as exc:
            return TensionRun(records, failure=str(exc), failed_step=step)
        finally:
            if writer is not None:
                writer.close()
        records.append(rec)
        if rec.eps_long >= protocol.stop_strain:
            break
    return TensionRun(records)


def estimate_poisson(records: Sequence[ExperimentRecord]) -> tuple[list[float], float]:
    """Per-record ``-eps_trans/eps_long`` and their mean."""
    ratios = []
    for r in records:
        if r.eps_long <= 0:
            warnings.warn(f"step {r.step}: no elongation, skipped in Poisson estimate")
            continue
        ratios.append(-r.eps_trans / r.eps_long)
    mean = float(np.mean(ratios)) if ratios else float("nan")
    return ratios, mean


@dataclass
class CurveComparison:
    strains: list[float]
    stress_errors: list[float]
    ratios: list[float]
    poisson_errors: list[float]
    median_stress_error: float
    max_stress_error: float
    median_poisson_error: float
    max_poisson_error: float
    n_records: int = field(default=0)

    def to_dict(self) -> dict:
        return asdict(self)


def stress_error(sigma: float, strain: float, material: Material) -> float:
    floor = 1e-6 * material.model.stress_scale()
    ef = material.Ef(strain)
    return abs(sigma - ef) / max(abs(ef), floor)


def compare_to_model(records: Sequence[ExperimentRecord], material: Material,
                     strain_range: tuple[float, float] | None = None) -> CurveComparison:
    """Relative stress error against ``Ef(eps_long)`` and Poisson ratio error per record.

    With ``nu = 0`` the Poisson error is the absolute ratio.
    """
    if not records:
        raise ValueError("no records to compare")
    sel = [r for r in records
           if strain_range is None or strain_range[0] <= r.eps_long <= strain_range[1]]
    strains = [r.eps_long for r in sel]
    s_err = [stress_error(r.sigma, r.eps_long, material) for r in sel]
    ratios = [-r.eps_trans / r.eps_long if r.eps_long > 0 else float("nan") for r in sel]
    nu = material.nu
    p_err = [abs(q - nu) / nu if nu > 0 else abs(q) for q in ratios]
    finite_p = [e for e in p_err if math.isfinite(e)]

    def med(v):
        return float(statistics.median(v)) if v else float("nan")

    return CurveComparison(
        strains=strains,
        stress_errors=s_err,
        ratios=ratios,
        poisson_errors=p_err,
        median_stress_error=med(s_err),
        max_stress_error=max(s_err, default=float("nan")),
        median_poisson_error=med(finite_p),
        max_poisson_error=max(finite_p, default=float("nan")),
        n_records=len(sel),
    )


def _cell_residual(material: Material, F: float, L: float, ex: float, ey: float) -> tuple[float, float]:
    """Net force on the upper-right node of a rectangular cell pulled by ``F``."""
    a, b = L * (1.0 + ex), L * (1.0 + ey)
    tr = np.array([a, b])
    total = np.array([F, 0.0])
    for kind, other, rest in (
        (SpringKind.EDGE, (0.0, b), L),          # top edge
        (SpringKind.EDGE, (a, 0.0), L),          # right edge
        (SpringKind.DIAGONAL, (0.0, 0.0), L * math.sqrt(2.0)),
    ):
        _, f_tr, _ = spring_force_vector(kind, other, tr, rest, L, material)
        total += f_tr
    return float(total[0]), float(total[1])


def single_cell_oracle(material: Material, sigma: float, cell_size: float = 1.0,
                       xtol: float = 1e-15) -> tuple[float, float]:
    """Static equilibrium of one cell under stress ``sigma``, by nested bracketing.

    The cell is kept rectangular (the loaded state is mirror symmetric), which
    leaves two unknowns: longitudinal and transverse strain. For each trial
    longitudinal strain the transverse balance is solved, then the
    longitudinal balance. No time stepping is involved.
    """
    if sigma < 0:
        raise ValueError("stress must be non-negative")
    if sigma == 0:
        return 0.0, 0.0
    F = sigma * cell_size
    L = cell_size

    def transverse(ex):
        g = lambda ey: _cell_residual(material, F, L, ex, ey)[1]
        g0 = g(0.0)
        if g0 == 0.0:
            return 0.0
        lo = -0.5
        while g(lo) * g0 > 0:
            lo = -1.0 + (1.0 + lo) / 2.0
            if lo < -0.999:
                raise OracleError(f"no transverse balance for strain {ex}")
        return brentq(g, lo, 0.0, xtol=xtol, rtol=4 * np.finfo(float).eps)

    def longitudinal(ex):
        return _cell_residual(material, F, L, ex, transverse(ex))[0]

    limit = 1.0 / material.nu - 1e-6 if material.nu > 0 else 50.0
    hi = 0.05
    try:
        while longitudinal(hi) > 0:
            if hi >= limit:
                raise OracleError(f"no equilibrium below strain {limit:.4g} for stress {sigma}")
            hi = min(2.0 * hi, limit)
        ex = brentq(longitudinal, 0.0, hi, xtol=xtol, rtol=4 * np.finfo(float).eps)
        return float(ex), float(transverse(ex))
    except SingularConfigurationError as exc:
        raise OracleError(f"stress {sigma} out of range: {exc}") from exc


# result files


def _fmt(v) -> str:
    return repr(float(v)) if isinstance(v, (float, np.floating)) else str(v)


def result_rows(records: Sequence[ExperimentRecord], material: Material) -> list[dict]:
    rows = []
    for r in records:
        ratio = -r.eps_trans / r.eps_long if r.eps_long > 0 else float("nan")
        rows.append({
            "step": r.step, "F": r.force, "sigma": r.sigma, "eps_long": r.eps_long,
            "eps_trans": r.eps_trans, "poisson_ratio_est": ratio,
            "ef_at_eps": float(material.Ef(r.eps_long)),
            "rel_err_stress": stress_error(r.sigma, r.eps_long, material),
            "residual": r.residual, "iterations": r.iterations,
            "eps_trans_mid": r.eps_trans_mid,
        })
    return rows


def write_results_csv(path, records: Sequence[ExperimentRecord], material: Material) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RESULT_COLUMNS)
        for row in result_rows(records, material):
            w.writerow([_fmt(row[c]) for c in RESULT_COLUMNS])


def read_results_csv(path) -> list[ExperimentRecord]:
    records = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            records.append(ExperimentRecord(
                step=int(row["step"]), force=float(row["F"]), sigma=float(row["sigma"]),
                eps_long=float(row["eps_long"]), eps_trans=float(row["eps_trans"]),
                residual=float(row["residual"]), iterations=int(row["iterations"]),
                eps_trans_mid=float(row.get("eps_trans_mid", "nan")),
            ))
    return records


def summary_dict(run: TensionRun, material: Material) -> dict:
    out = {
        "material": material.name,
        "nu": material.nu,
        "records": len(run.records),
        "reached_stop_strain": run.reached_stop,
        "failure": run.failure,
        "failed_step": run.failed_step,
    }
    if run.records:
        cmp = compare_to_model(run.records, material)
        out.update({
            "median_stress_error": cmp.median_stress_error,
            "max_stress_error": cmp.max_stress_error,
            "median_poisson_error": cmp.median_poisson_error,
            "max_poisson_error": cmp.max_poisson_error,
            "poisson_ratio_mean": estimate_poisson(run.records)[1],
        })
    return out


def write_summary_json(path, run: TensionRun, material: Material) -> None:
    with open(path, "w") as fh:
        json.dump(summary_dict(run, material), fh, indent=2, sort_keys=True)
        fh.write("\n")
