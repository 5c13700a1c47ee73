"""Nonlinear stress-strain functions built from marked points.

An elasticity function maps relative elongation (strain) to stress per unit
section length. It is stored as an ordered list of smooth pieces, each owning
a half-open strain interval ``[lo, hi)``. Three piece forms are supported:

    linear   c0 + c1*t                  t = strain - lo
    cubic    c0 + c1*t + c2*t**2 + c3*t**3
    atan     a*atan(b*(strain - s0)) + c

Compression (negative strain) is a straight line through the origin with the
initial tension modulus. Outside the working interval the function continues
along the end slope of the boundary piece, so evaluation never fails.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

FORMS = ("linear", "cubic", "atan")
_N_COEFFS = {"linear": 2, "cubic": 4, "atan": 4}

# working interval every model must cover
WORK_LO = -1.0
WORK_HI = 1.0

CONTINUITY_RTOL = 1e-9


class CardError(ValueError):
    """Malformed material card or knot file."""


@dataclass(frozen=True)
class ElasticityPiece:
    lo: float
    hi: float
    form: str
    coeffs: tuple[float, ...]

    def __post_init__(self):
        if self.form not in FORMS:
            raise ValueError(f"unknown piece form {self.form!r}")
        if not self.lo < self.hi:
            raise ValueError(f"empty piece domain [{self.lo}, {self.hi})")
        coeffs = tuple(float(c) for c in self.coeffs)
        if len(coeffs) != _N_COEFFS[self.form]:
            raise ValueError(
                f"{self.form} piece needs {_N_COEFFS[self.form]} coefficients, got {len(coeffs)}"
            )
        if not all(math.isfinite(c) for c in coeffs):
            raise ValueError("piece coefficients must be finite")
        object.__setattr__(self, "coeffs", coeffs)

    def __call__(self, strain):
        if self.form == "atan":
            a, b, s0, c = self.coeffs
            return a * np.arctan(b * (strain - s0)) + c
        t = strain - self.lo
        c = self.coeffs
        if self.form == "linear":
            return c[0] + c[1] * t
        return c[0] + t * (c[1] + t * (c[2] + t * c[3]))

    def slope(self, strain):
        if self.form == "atan":
            a, b, s0, _ = self.coeffs
            u = b * (strain - s0)
            return a * b / (1.0 + u * u)
        t = strain - self.lo
        c = self.coeffs
        if self.form == "linear":
            return c[1] + 0.0 * t
        return c[1] + t * (2.0 * c[2] + 3.0 * t * c[3])

    def to_dict(self) -> dict:
        return {"lo": self.lo, "hi": self.hi, "form": self.form, "coeffs": list(self.coeffs)}


class ElasticityModel:
    """Immutable piecewise-smooth stress-strain function ``Ef``.

    Calling the model evaluates it; scalars give floats and arrays give arrays.
    """

    def __init__(self, pieces: Sequence[ElasticityPiece], name: str = "custom"):
        pieces = tuple(pieces)
        if not pieces:
            raise ValueError("model needs at least one piece")
        for left, right in zip(pieces, pieces[1:]):
            if left.hi != right.lo:
                raise ValueError(
                    f"pieces are not contiguous: [{left.lo}, {left.hi}) then [{right.lo}, {right.hi})"
                )
        if pieces[0].lo > WORK_LO or pieces[-1].hi < WORK_HI:
            raise ValueError(
                f"pieces cover [{pieces[0].lo}, {pieces[-1].hi}), need at least [{WORK_LO}, {WORK_HI}]"
            )
        self._pieces = pieces
        self.name = name

        self._lo = np.array([p.lo for p in pieces])
        self._hi_end = pieces[-1].hi
        self._start_value = float(pieces[0](pieces[0].lo))
        self._start_slope = float(pieces[0].slope(pieces[0].lo))
        self._end_value = float(pieces[-1](pieces[-1].hi))
        self._end_slope = float(pieces[-1].slope(pieces[-1].hi))

        # lookup table: row 0 extrapolates below, rows 1..n are the pieces,
        # row n+1 extrapolates above; every row is a cubic in (strain - origin)
        n = len(pieces)
        self._breaks = np.append(self._lo, self._hi_end)
        self._origin = np.concatenate([[self._lo[0]], self._lo, [self._hi_end]])
        self._poly = np.zeros((n + 2, 4))
        self._poly[0, :2] = self._start_value, self._start_slope
        self._poly[-1, :2] = self._end_value, self._end_slope
        for i, p in enumerate(pieces):
            if p.form != "atan":
                self._poly[i + 1, : len(p.coeffs)] = p.coeffs
        self._atan = [(i + 1, p) for i, p in enumerate(pieces) if p.form == "atan"]

        scale = self.stress_scale()
        for left, right in zip(pieces, pieces[1:]):
            a, b = float(left(left.hi)), float(right(right.lo))
            if abs(a - b) > CONTINUITY_RTOL * max(scale, abs(a), abs(b)):
                raise ValueError(f"discontinuity at strain {left.hi}: {a} vs {b}")
        if abs(float(self(0.0))) > 1e-12 * scale:
            raise ValueError(f"Ef(0) must be 0, got {float(self(0.0))}")

    @property
    def pieces(self) -> tuple[ElasticityPiece, ...]:
        return self._pieces

    @property
    def domain(self) -> tuple[float, float]:
        return float(self._lo[0]), self._hi_end

    def _index(self, strain: np.ndarray) -> np.ndarray:
        """Row of the lookup table owning each strain."""
        return np.searchsorted(self._breaks, strain, side="right")

    def __call__(self, strain):
        eps = np.asarray(strain, dtype=float)
        scalar = eps.ndim == 0
        eps = np.atleast_1d(eps)
        row = self._index(eps)
        t = eps - self._origin[row]
        c = self._poly[row]
        out = c[:, 0] + t * (c[:, 1] + t * (c[:, 2] + t * c[:, 3]))
        for k, piece in self._atan:
            out = np.where(row == k, piece(eps), out)
        return float(out[0]) if scalar else out

    eval = __call__

    def slope(self, strain):
        """Derivative of the model, one-sided from the right at knots."""
        eps = np.asarray(strain, dtype=float)
        scalar = eps.ndim == 0
        eps = np.atleast_1d(eps)
        row = self._index(eps)
        out = np.empty_like(eps)
        out[row == 0] = self._start_slope
        out[row == len(self._pieces) + 1] = self._end_slope
        for i, piece in enumerate(self._pieces):
            mask = row == i + 1
            if mask.any():
                out[mask] = piece.slope(eps[mask])
        return float(out[0]) if scalar else out

    @property
    def initial_modulus(self) -> float:
        """Slope of the tension branch at zero strain."""
        return float(self.slope(0.0))

    def max_slope(self, lo: float = WORK_LO, hi: float = WORK_HI, samples: int = 2001) -> float:
        eps = np.linspace(lo, hi, samples)
        return float(np.max(np.abs(self.slope(eps))))

    def stress_scale(self) -> float:
        """Largest stress magnitude over the working interval."""
        eps = np.linspace(WORK_LO, WORK_HI, 401)
        vals = []
        for p in self._pieces:
            inside = eps[(eps >= p.lo) & (eps < p.hi)]
            if inside.size:
                vals.append(np.max(np.abs(p(inside))))
            vals.append(abs(float(p(p.lo))))
        return max(max(vals), 1e-300)

    def scaled(self, factor: float) -> "ElasticityModel":
        """Model multiplied by a constant stress factor."""
        pieces = []
        for p in self._pieces:
            c = list(p.coeffs)
            if p.form == "atan":
                c[0] *= factor
                c[3] *= factor
            else:
                c = [factor * v for v in c]
            pieces.append(ElasticityPiece(p.lo, p.hi, p.form, tuple(c)))
        return ElasticityModel(pieces, name=f"{self.name}*{factor:g}")

    def to_dict(self) -> dict:
        return {"name": self.name, "pieces": [p.to_dict() for p in self._pieces]}

    @classmethod
    def from_dict(cls, data: dict) -> "ElasticityModel":
        pieces = [
            ElasticityPiece(float(p["lo"]), float(p["hi"]), p["form"], tuple(p["coeffs"]))
            for p in data["pieces"]
        ]
        return cls(pieces, name=data.get("name", "custom"))

    def __repr__(self):
        return f"ElasticityModel({self.name!r}, {len(self._pieces)} pieces on {self.domain})"


@dataclass(frozen=True)
class Material:
    """Elasticity function plus Poisson ratio."""

    model: ElasticityModel
    nu: float

    def __post_init__(self):
        if not 0.0 <= self.nu < 1.0:
            raise ValueError(f"Poisson ratio must lie in [0, 1), got {self.nu}")

    @property
    def name(self) -> str:
        return self.model.name

    def with_nu(self, nu: float) -> "Material":
        return Material(self.model, nu)

    def Ef(self, strain):
        return self.model(strain)


def _compression_piece(k0: float) -> ElasticityPiece:
    return ElasticityPiece(WORK_LO, 0.0, "linear", (k0 * WORK_LO, k0))


def _knot_slopes(x, y, joins):
    """Knot derivatives used by cubic gaps.

    A knot next to a linear gap takes that line's slope, which makes the
    adjoining cubic meet it with C1 continuity. Between two cubic gaps the
    weighted harmonic mean of the secants keeps monotone data monotone.
    """
    n = len(x)
    h = np.diff(x)
    sec = np.diff(y) / h
    d = np.empty(n)
    for i in range(n):
        left = joins[i - 1] if i > 0 else None
        right = joins[i] if i < n - 1 else None
        if left == "linear":
            d[i] = sec[i - 1]
        elif right == "linear":
            d[i] = sec[i]
        elif left is None:
            d[i] = sec[0]
        elif right is None:
            d[i] = sec[-1]
        else:
            s0, s1 = sec[i - 1], sec[i]
            if s0 * s1 <= 0:
                d[i] = 0.0
            else:
                w0 = 2 * h[i] + h[i - 1]
                w1 = h[i] + 2 * h[i - 1]
                d[i] = (w0 + w1) / (w0 / s0 + w1 / s1)
    return d


def _hermite_coeffs(y0, y1, d0, d1, h):
    sec = (y1 - y0) / h
    c2 = (3 * sec - 2 * d0 - d1) / h
    c3 = (d0 + d1 - 2 * sec) / (h * h)
    return (y0, d0, c2, c3)


def build_from_points(
    points: Sequence[tuple[float, float]],
    joins: str | Sequence[str] = "linear",
    name: str = "custom",
) -> ElasticityModel:
    """Connect marked (strain, stress) points with lines or cubic splines.

    ``joins`` is either one rule for every gap or one rule per gap between
    consecutive input points. A missing origin is prepended and joined
    linearly. Cubic gaps are Hermite cubics whose end slopes follow the
    neighbouring gaps, so they meet linear neighbours with matching slope.
    If the last point lies below strain 1 the curve is extended to 1 along
    its end slope.
    """
    pts = [(float(e), float(s)) for e, s in points]
    if len(pts) < 2:
        raise ValueError("need at least two points")
    x = np.array([p[0] for p in pts])
    y = np.array([p[1] for p in pts])
    if not np.all(np.isfinite(x)) or not np.all(np.isfinite(y)):
        raise ValueError("points must be finite")
    if np.any(np.diff(x) == 0):
        raise ValueError("duplicate strain values")
    if np.any(np.diff(x) < 0):
        raise ValueError("strain values must be strictly increasing")

    n_gaps = len(pts) - 1
    if isinstance(joins, str):
        rules = [joins] * n_gaps
    else:
        rules = list(joins)
        if len(rules) != n_gaps:
            raise ValueError(f"got {len(rules)} join rules for {n_gaps} gaps")
    for r in rules:
        if r not in ("linear", "cubic"):
            raise ValueError(f"unknown join rule {r!r}")

    if x[0] < 0:
        raise ValueError("points must start at zero strain; compression is fixed by the tension modulus")
    if x[0] == 0:
        if y[0] != 0:
            raise ValueError("stress at zero strain must be zero")
    else:
        x = np.concatenate([[0.0], x])
        y = np.concatenate([[0.0], y])
        rules = ["linear"] + rules

    d = _knot_slopes(x, y, rules)
    pieces = []
    for i, rule in enumerate(rules):
        h = x[i + 1] - x[i]
        if rule == "linear":
            coeffs = (y[i], (y[i + 1] - y[i]) / h)
        else:
            coeffs = _hermite_coeffs(y[i], y[i + 1], d[i], d[i + 1], h)
        pieces.append(ElasticityPiece(x[i], x[i + 1], rule, coeffs))

    if x[-1] < WORK_HI:
        last = pieces[-1]
        pieces.append(
            ElasticityPiece(x[-1], WORK_HI, "linear", (y[-1], float(last.slope(last.hi))))
        )
    k0 = float(pieces[0].slope(0.0))
    return ElasticityModel([_compression_piece(k0)] + pieces, name=name)


def arctan_model(amplitude: float, rate: float, hi: float = WORK_HI, name: str = "atan") -> ElasticityModel:
    """``amplitude*atan(rate*strain)`` in tension, linear in compression."""
    if amplitude <= 0 or rate <= 0:
        raise ValueError("amplitude and rate must be positive")
    tension = ElasticityPiece(0.0, max(hi, WORK_HI), "atan", (amplitude, rate, 0.0, 0.0))
    return ElasticityModel([_compression_piece(amplitude * rate), tension], name=name)


# Preset magnitudes are normalized: initial modulus 1 stress unit.
SKIN_LOW_MODULUS = 1.0
SKIN_HIGH_MODULUS = 5.0
SKIN_KNEE = (0.4, 0.7)
ADIPOSE_RATE = 10.0
DEFAULT_NU = 0.45


def skin_model(low: float = SKIN_LOW_MODULUS, high: float = SKIN_HIGH_MODULUS, knee=SKIN_KNEE) -> ElasticityModel:
    """Constant modulus, cubic stiffening across the knee, constant again.

    The stress at the upper knee sits on the mean of the two moduli, which
    keeps the connecting cubic monotone.
    """
    e1, e2 = knee
    y1 = low * e1
    y2 = y1 + 0.5 * (low + high) * (e2 - e1)
    y3 = y2 + high * (1.0 - e2)
    return build_from_points(
        [(0.0, 0.0), (e1, y1), (e2, y2), (1.0, y3)],
        joins=["linear", "cubic", "linear"],
        name="skin",
    )


def adipose_model(initial_modulus: float = 1.0, rate: float = ADIPOSE_RATE) -> ElasticityModel:
    return arctan_model(initial_modulus / rate, rate, name="adipose")


def preset_skin(nu: float = DEFAULT_NU) -> Material:
    return Material(skin_model(), nu)


def preset_adipose(nu: float = DEFAULT_NU) -> Material:
    return Material(adipose_model(), nu)


PRESETS = {"skin": preset_skin, "adipose": preset_adipose}


def preset(name: str, nu: float = DEFAULT_NU) -> Material:
    try:
        return PRESETS[name](nu)
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None


# material card / knot file I/O


def material_to_card(material: Material) -> dict:
    card = material.model.to_dict()
    return {"name": card["name"], "nu": material.nu, "pieces": card["pieces"]}


def save_card(material: Material, path) -> None:
    Path(path).write_text(json.dumps(material_to_card(material), indent=2) + "\n")


def card_to_material(card: dict, source: str = "<card>") -> Material:
    if not isinstance(card, dict):
        raise CardError(f"{source}: top level must be an object")
    for key in ("nu", "pieces"):
        if key not in card:
            raise CardError(f"{source}: missing field {key!r}")
    try:
        nu = float(card["nu"])
    except (TypeError, ValueError):
        raise CardError(f"{source}: field 'nu' is not a number") from None
    pieces = []
    for i, p in enumerate(card["pieces"]):
        try:
            pieces.append(ElasticityPiece(float(p["lo"]), float(p["hi"]), p["form"], tuple(p["coeffs"])))
        except KeyError as exc:
            raise CardError(f"{source}: pieces[{i}] missing field {exc.args[0]!r}") from None
        except (TypeError, ValueError) as exc:
            raise CardError(f"{source}: pieces[{i}]: {exc}") from None
    try:
        model = ElasticityModel(pieces, name=str(card.get("name", Path(source).stem)))
        return Material(model, nu)
    except ValueError as exc:
        raise CardError(f"{source}: {exc}") from None


def load_card(path) -> Material:
    path = Path(path)
    try:
        card = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise CardError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return card_to_material(card, str(path))


def read_knots_csv(path) -> list[tuple[float, float]]:
    """Two-column (strain, stress) CSV; a non-numeric first row is a header."""
    points = []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) < 2:
                raise CardError(f"{path}: line {lineno}: expected two columns")
            try:
                points.append((float(row[0]), float(row[1])))
            except ValueError:
                if lineno == 1 and not points:
                    continue
                raise CardError(f"{path}: line {lineno}: non-numeric value") from None
    if len(points) < 2:
        raise CardError(f"{path}: need at least two knots")
    return points
