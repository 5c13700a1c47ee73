"""Square-grid samples: nodes, per-cell springs and extent measurement."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .springs import SpringKind, diag_rest_length

SIDES = ("left", "right", "bottom", "top")


class Node(NamedTuple):
    position: np.ndarray
    velocity: np.ndarray
    mass: float


class SpringInstance(NamedTuple):
    a: int
    b: int
    kind: SpringKind
    rest_length: float
    section: float


@dataclass
class GridMesh:
    """Lattice of ``(nx+1)*(ny+1)`` nodes, node ``(i, j)`` stored at ``j*(nx+1) + i``.

    Springs are kept as parallel arrays. Every cell owns its own four edge
    and two diagonal springs, so an interior lattice edge appears twice.
    """

    positions: np.ndarray
    velocities: np.ndarray
    masses: np.ndarray
    spring_a: np.ndarray
    spring_b: np.ndarray
    spring_kind: np.ndarray
    rest_lengths: np.ndarray
    sections: np.ndarray
    cell_size: float
    dims: tuple[int, int]
    forces: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self.forces is None:
            self.forces = np.zeros_like(self.positions)

    @property
    def n_nodes(self) -> int:
        return len(self.positions)

    @property
    def n_springs(self) -> int:
        return len(self.spring_a)

    def node_index(self, i: int, j: int) -> int:
        return j * (self.dims[0] + 1) + i

    @property
    def nodes(self) -> list[Node]:
        return [Node(p, v, float(m)) for p, v, m in zip(self.positions, self.velocities, self.masses)]

    @property
    def springs(self) -> list[SpringInstance]:
        return [
            SpringInstance(int(a), int(b), SpringKind(int(k)), float(L), float(s))
            for a, b, k, L, s in zip(self.spring_a, self.spring_b, self.spring_kind,
                                     self.rest_lengths, self.sections)
        ]

    @property
    def is_diagonal(self) -> np.ndarray:
        return self.spring_kind == SpringKind.DIAGONAL

    def copy(self) -> "GridMesh":
        return GridMesh(
            self.positions.copy(), self.velocities.copy(), self.masses.copy(),
            self.spring_a, self.spring_b, self.spring_kind, self.rest_lengths, self.sections,
            self.cell_size, self.dims, self.forces.copy(),
        )


def build_grid(nx: int, ny: int, cell_size: float = 1.0, node_mass: float = 1.0) -> GridMesh:
    """Axis-aligned grid with its lower-left corner at the origin, at rest."""
    if nx < 1 or ny < 1:
        raise ValueError(f"grid needs at least one cell per direction, got {nx}x{ny}")
    if cell_size <= 0 or node_mass <= 0:
        raise ValueError("cell size and node mass must be positive")

    ii, jj = np.meshgrid(np.arange(nx + 1), np.arange(ny + 1))
    positions = np.column_stack([ii.ravel(), jj.ravel()]).astype(float) * cell_size

    def idx(i, j):
        return j * (nx + 1) + i

    a, b, kind = [], [], []
    for j in range(ny):
        for i in range(nx):
            bl, br, tl, tr = idx(i, j), idx(i + 1, j), idx(i, j + 1), idx(i + 1, j + 1)
            for p, q in ((bl, br), (br, tr), (tl, tr), (bl, tl)):
                a.append(p); b.append(q); kind.append(SpringKind.EDGE)
            for p, q in ((bl, tr), (br, tl)):
                a.append(p); b.append(q); kind.append(SpringKind.DIAGONAL)
    kind = np.array(kind, dtype=np.int8)
    rest = np.where(kind == SpringKind.DIAGONAL, diag_rest_length(cell_size), cell_size)
    n = len(positions)
    return GridMesh(
        positions=positions,
        velocities=np.zeros((n, 2)),
        masses=np.full(n, float(node_mass)),
        spring_a=np.array(a, dtype=np.intp),
        spring_b=np.array(b, dtype=np.intp),
        spring_kind=kind,
        rest_lengths=rest,
        sections=np.full(len(a), float(cell_size)),
        cell_size=float(cell_size),
        dims=(nx, ny),
    )


def bounding_box(mesh: GridMesh) -> tuple[np.ndarray, np.ndarray]:
    return mesh.positions.min(axis=0), mesh.positions.max(axis=0)


def boundary_nodes(mesh: GridMesh, side: str) -> list[tuple[int, int]]:
    """Nodes on one side of the grid with the number of cells owning each.

    Corners belong to one cell on that side, every other boundary node to two.
    """
    nx, ny = mesh.dims
    if side == "left":
        ids = [mesh.node_index(0, j) for j in range(ny + 1)]
    elif side == "right":
        ids = [mesh.node_index(nx, j) for j in range(ny + 1)]
    elif side == "bottom":
        ids = [mesh.node_index(i, 0) for i in range(nx + 1)]
    elif side == "top":
        ids = [mesh.node_index(i, ny) for i in range(nx + 1)]
    else:
        raise ValueError(f"side must be one of {SIDES}, got {side!r}")
    last = len(ids) - 1
    return [(n, 1 if k in (0, last) else 2) for k, n in enumerate(ids)]


def write_nodes_csv(mesh: GridMesh, path, frame: int | None = None) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["index", "x", "y"] if frame is None else ["frame", "index", "x", "y"])
        for i, (x, y) in enumerate(mesh.positions):
            row = [i, repr(float(x)), repr(float(y))]
            w.writerow(row if frame is None else [frame] + row)


def write_springs_csv(mesh: GridMesh, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["a", "b", "kind", "rest_length"])
        for s in mesh.springs:
            w.writerow([s.a, s.b, s.kind.name.lower(), repr(s.rest_length)])
