"""Dynamic relaxation of a loaded grid by damped semi-implicit Euler steps."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

from .elasticity import Material
from .mesh import GridMesh
from .springs import SingularConfigurationError, tension_forces

DEFAULT_ITERATIONS = 15000


class SimulationDivergedError(RuntimeError):
    def __init__(self, message: str, iteration: int, node: int | None = None, dt: float | None = None):
        super().__init__(f"{message} (iteration {iteration}, node {node}, dt {dt})")
        self.iteration = iteration
        self.node = node
        self.dt = dt


@dataclass
class SolverConfig:
    dt: float
    damping: float
    iterations: int = DEFAULT_ITERATIONS
    convergence_tol: float | None = None
    record_every: int = 0

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.damping < 0:
            raise ValueError("damping must be non-negative")
        if self.iterations < 1:
            raise ValueError("need at least one iteration")
        if self.record_every < 0:
            raise ValueError("record_every must be non-negative")

    @classmethod
    def for_problem(cls, mesh: GridMesh, material: Material, **overrides) -> "SolverConfig":
        """Stability-based defaults.

        ``dt = 0.2*sqrt(m/k_max)`` with ``k_max`` the steepest slope of the
        elasticity function on [-1, 1] times Sq/L, and half of the critical
        damping for the initial stiffness.
        """
        m = float(mesh.masses.min())
        geom = float(np.max(mesh.sections / mesh.rest_lengths))
        k_max = material.model.max_slope() * geom
        k_typ = material.model.initial_modulus * geom
        params = {
            "dt": 0.2 * math.sqrt(m / k_max),
            "damping": 0.5 * 2.0 * math.sqrt(m * k_typ),
        }
        params.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**params)


@dataclass
class LoadCase:
    """Constant external forces on selected nodes."""

    nodes: np.ndarray
    forces: np.ndarray

    def __post_init__(self):
        self.nodes = np.asarray(self.nodes, dtype=np.intp).reshape(-1)
        self.forces = np.asarray(self.forces, dtype=float).reshape(-1, 2)
        if len(self.nodes) != len(self.forces):
            raise ValueError("one force vector per loaded node")

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[int, Iterable[float]]]) -> "LoadCase":
        pairs = list(pairs)
        if not pairs:
            return cls.empty()
        return cls([p[0] for p in pairs], [list(p[1]) for p in pairs])

    @classmethod
    def empty(cls) -> "LoadCase":
        return cls(np.zeros(0, dtype=np.intp), np.zeros((0, 2)))

    def as_array(self, n_nodes: int) -> np.ndarray:
        if len(self.nodes) and (self.nodes.min() < 0 or self.nodes.max() >= n_nodes):
            raise IndexError("load references a node outside the mesh")
        out = np.zeros((n_nodes, 2))
        np.add.at(out, self.nodes, self.forces)
        return out

    def total(self) -> np.ndarray:
        return self.forces.sum(axis=0)


def _spring_forces(positions, a, b, is_diag, rest, section, material, n_nodes):
    axis = positions[b] - positions[a]
    length = np.hypot(axis[:, 0], axis[:, 1])
    tension = tension_forces(is_diag, rest, length, section, material)
    # coincident endpoints have no direction and contribute nothing
    scale = np.divide(tension, length, out=np.zeros_like(length), where=length > 0)
    fx = scale * axis[:, 0]
    fy = scale * axis[:, 1]
    ends = np.concatenate([a, b])
    out = np.empty((n_nodes, 2))
    out[:, 0] = np.bincount(ends, np.concatenate([fx, -fx]), n_nodes)
    out[:, 1] = np.bincount(ends, np.concatenate([fy, -fy]), n_nodes)
    return out


def internal_forces(mesh: GridMesh, material: Material) -> np.ndarray:
    """Net spring force on every node."""
    return _spring_forces(mesh.positions, mesh.spring_a, mesh.spring_b, mesh.is_diagonal,
                          mesh.rest_lengths, mesh.sections, material, mesh.n_nodes)


def accumulate_forces(mesh: GridMesh, material: Material, load: LoadCase,
                      damping: float = 0.0) -> np.ndarray:
    """Spring forces plus external load minus viscous damping, per node."""
    total = internal_forces(mesh, material) + load.as_array(mesh.n_nodes)
    if damping:
        total -= damping * mesh.velocities
    mesh.forces[:] = total
    return total


def _check_finite(positions, velocities, iteration, dt):
    if not (np.isfinite(positions).all() and np.isfinite(velocities).all()):
        bad = np.flatnonzero(~(np.isfinite(positions).all(axis=1) & np.isfinite(velocities).all(axis=1)))
        raise SimulationDivergedError("non-finite state", iteration, int(bad[0]), dt)


def step(mesh: GridMesh, material: Material, load: LoadCase, cfg: SolverConfig,
         iteration: int = 0) -> GridMesh:
    """One damped semi-implicit Euler step, in place: velocity first, then position."""
    force = accumulate_forces(mesh, material, load, cfg.damping)
    mesh.velocities += force / mesh.masses[:, None] * cfg.dt
    mesh.positions += mesh.velocities * cfg.dt
    _check_finite(mesh.positions, mesh.velocities, iteration, cfg.dt)
    return mesh


@dataclass
class RelaxResult:
    mesh: GridMesh
    residual: float
    iterations: int
    history: np.ndarray = field(repr=False)


def relax(mesh: GridMesh, material: Material, load: LoadCase, cfg: SolverConfig,
          on_frame: Callable[[int, GridMesh], None] | None = None) -> RelaxResult:
    """Step until ``cfg.iterations`` is reached or the residual drops below tolerance.

    The residual is the largest static (spring plus load) force magnitude
    over all nodes. ``history[k]`` is the residual before step ``k``. The
    mesh is advanced in place and also returned in the result.
    """
    n = mesh.n_nodes
    a, b = mesh.spring_a, mesh.spring_b
    is_diag, rest, section = mesh.is_diagonal, mesh.rest_lengths, mesh.sections
    ext = load.as_array(n)
    inv_m = (1.0 / mesh.masses)[:, None]
    x, v = mesh.positions, mesh.velocities
    dt, c = cfg.dt, cfg.damping
    tol = cfg.convergence_tol
    history = np.empty(cfg.iterations + 1)

    def static_force(it):
        try:
            return _spring_forces(x, a, b, is_diag, rest, section, material, n) + ext
        except SingularConfigurationError as exc:
            raise SimulationDivergedError(str(exc), it, None, dt) from exc

    used = 0
    # overflow on the way to divergence is caught by the finite check below
    with np.errstate(over="ignore", invalid="ignore"):
        for it in range(cfg.iterations):
            f = static_force(it)
            res = float(np.sqrt((f * f).sum(axis=1).max()))
            history[it] = res
            if tol is not None and res < tol:
                break
            f -= c * v
            v += f * inv_m * dt
            x += v * dt
            used = it + 1
            if not math.isfinite(x.sum() + v.sum()):
                _check_finite(x, v, it, dt)
            if on_frame is not None and cfg.record_every and used % cfg.record_every == 0:
                on_frame(used, mesh)

    f = static_force(used)
    mesh.forces[:] = f - c * v
    residual = float(np.sqrt((f * f).sum(axis=1).max()))
    history[used] = residual
    return RelaxResult(mesh, residual, used, history[: used + 1].copy())


class TrajectoryWriter:
    """Frame callback writing ``iteration,node,x,y`` rows to a CSV file."""

    def __init__(self, path):
        self._fh = open(path, "w", newline="")
        self._w = csv.writer(self._fh)
        self._w.writerow(["iteration", "node", "x", "y"])

    def __call__(self, iteration: int, mesh: GridMesh) -> None:
        for i, (px, py) in enumerate(mesh.positions):
            self._w.writerow([iteration, i, repr(float(px)), repr(float(py))])

    def close(self):
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
