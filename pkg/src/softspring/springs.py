"""Edge and diagonal spring force laws for the square lattice.

Scalar laws return a tension-positive magnitude along the spring axis:
positive values pull the two endpoints together.

Edge spring, strain e = dL/L:

    tension      Sq * (Ef(e) + Ef(-nu*e) / ((1+nu)*L/(L+dL) - nu))
    compression  Sq * Ef(e)

Diagonal spring, with J the edge strain implied by the diagonal length
under a Poisson-contracted square:

    tension      Sq * (-sqrt(2) * Ef(-nu*J) * (Ld+dLd)) / ((1 - nu*J) * Ld)
    compression  Sq * Ef(dLd/Ld)

The transverse stiffness coefficient of the underlying balance is fixed at
1.0, so it never appears as a parameter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from .elasticity import Material

SQRT2 = math.sqrt(2.0)
SINGULAR_TOL = 1e-12


class SpringKind(IntEnum):
    EDGE = 0
    DIAGONAL = 1


class SingularConfigurationError(ArithmeticError):
    """A force-law denominator vanished (extreme strain at high Poisson ratio)."""


class InconsistentGeometryError(ValueError):
    """Diagonal length cannot come from any Poisson-contracted square."""


@dataclass(frozen=True)
class SpringEval:
    rest_length: float
    current_length: float
    section: float

    def __post_init__(self):
        if not (self.rest_length > 0 and self.current_length > 0 and self.section > 0):
            raise ValueError("rest length, current length and section must be positive")

    @property
    def elongation(self) -> float:
        return self.current_length - self.rest_length

    @property
    def strain(self) -> float:
        return self.elongation / self.rest_length


def linear_spring_force(k: float, x12, l12: float) -> np.ndarray:
    """Classic Hooke spring; force on the first vertex.

    ``x12`` points from the first vertex to the second. The second vertex
    receives the negated force. A zero-length ``x12`` has no direction and
    gives zero force.
    """
    x12 = np.asarray(x12, dtype=float)
    length = float(np.linalg.norm(x12))
    if length == 0.0:
        return np.zeros_like(x12)
    return k * (length - l12) * x12 / length


def diag_rest_length(L_edge):
    return L_edge * SQRT2


def stretched_diag_length(L_edge, dL_edge, nu):
    """Diagonal of a square stretched by ``dL_edge`` and contracted by ``nu*dL_edge``."""
    return np.sqrt((L_edge + dL_edge) ** 2 + (L_edge - nu * dL_edge) ** 2)


def compute_J(L_diag, dL_diag, nu):
    """Edge strain that produces the observed diagonal length.

    Inverse of :func:`stretched_diag_length` for non-negative elongation.
    """
    ratio = (L_diag + dL_diag) / L_diag
    radicand = 2.0 * (1.0 + nu * nu) * ratio * ratio - (1.0 + 2.0 * nu + nu * nu)
    if np.any(radicand < 0):
        raise InconsistentGeometryError(
            "diagonal shorter than any Poisson-contracted square allows"
        )
    J = (nu - 1.0 + np.sqrt(radicand)) / (1.0 + nu * nu)
    return float(J) if np.ndim(J) == 0 else J


def edge_force_scalar(ev: SpringEval, mat: Material) -> float:
    L, dL, Sq, nu = ev.rest_length, ev.elongation, ev.section, mat.nu
    strain = dL / L
    if dL < 0:
        return Sq * mat.Ef(strain)
    # (1+nu)*L/(L+dL) - nu  ==  (L - nu*dL)/(L + dL)
    denom = (L - nu * dL) / L
    if denom <= SINGULAR_TOL:
        raise SingularConfigurationError(f"edge law singular at strain {strain:.6g}, nu={nu}")
    return Sq * (mat.Ef(strain) + mat.Ef(-nu * strain) * (1.0 + strain) / denom)


def diag_force_scalar(ev: SpringEval, mat: Material) -> float:
    Ld, dLd, Sq, nu = ev.rest_length, ev.elongation, ev.section, mat.nu
    if dLd < 0:
        return Sq * mat.Ef(dLd / Ld)
    J = compute_J(Ld, dLd, nu)
    denom = 1.0 - nu * J
    if denom <= SINGULAR_TOL:
        raise SingularConfigurationError(f"diagonal law singular at J={J:.6g}, nu={nu}")
    return Sq * (-SQRT2 * mat.Ef(-nu * J) * (Ld + dLd)) / (denom * Ld)


def tension_forces(is_diag: np.ndarray, rest: np.ndarray, current: np.ndarray,
                   section: np.ndarray, mat: Material) -> np.ndarray:
    """Vectorized edge/diagonal laws for many springs at once."""
    nu = mat.nu
    ratio = current / rest
    strain = ratio - 1.0
    stretched = strain >= 0

    # edge strain implied by each diagonal length
    rad = 2.0 * (1.0 + nu * nu) * ratio * ratio - (1.0 + nu) ** 2
    J = (nu - 1.0 + np.sqrt(np.maximum(rad, 0.0))) / (1.0 + nu * nu)
    coupled = np.where(stretched, np.where(is_diag, J, strain), 0.0)
    denom = 1.0 - nu * coupled
    if np.min(np.where(stretched, denom, 1.0)) <= SINGULAR_TOL:
        raise SingularConfigurationError("force law singular: strain too large for this Poisson ratio")

    n = strain.size
    ef = mat.Ef(np.concatenate([strain, -nu * coupled]))
    ef_own, ef_trans = ef[:n], ef[n:]
    along = ef_trans * ratio / denom
    force = np.where(stretched, np.where(is_diag, -SQRT2 * along, ef_own + along), ef_own)
    return section * force


def spring_force_vector(kind: SpringKind, p_a, p_b, rest_length: float, section: float,
                        mat: Material) -> tuple[np.ndarray, np.ndarray, bool]:
    """Forces on both endpoints plus a flag set when the endpoints coincide."""
    p_a = np.asarray(p_a, dtype=float)
    p_b = np.asarray(p_b, dtype=float)
    axis = p_b - p_a
    length = float(np.hypot(axis[0], axis[1]))
    if length == 0.0:
        return np.zeros(2), np.zeros(2), True
    ev = SpringEval(rest_length, length, section)
    law = diag_force_scalar if kind == SpringKind.DIAGONAL else edge_force_scalar
    f_a = law(ev, mat) * axis / length
    return f_a, -f_a, False
