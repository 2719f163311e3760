"""Finite charge measures on R^3 and their Coulomb potentials.

Every supported component has a closed-form potential, so ``V = mu * 1/|x|`` is
evaluated exactly. Radially symmetric pieces share one representation,
:class:`RadialPotential`: on each interval between breakpoints the potential is
a Laurent polynomial ``a_{-1}/r + a_0 + a_1 r + ...``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

import numpy as np

from .errors import (
    AtomTooHeavy,
    InvalidComponent,
    NegativeComponent,
    NotRadial,
    SingularPoint,
    TrivialMeasure,
)

FOUR_PI = 4.0 * np.pi
MERGE_DECIMALS = 12


def _vec3(x) -> tuple[float, float, float]:
    arr = np.asarray(x, dtype=float).reshape(-1)
    if arr.shape != (3,):
        raise InvalidComponent(f"expected a 3-vector, got {x!r}")
    return (float(arr[0]), float(arr[1]), float(arr[2]))


def _canonical(center) -> tuple[float, ...]:
    # -0.0 and 0.0 must compare equal after rounding
    return tuple(float(v) + 0.0 for v in np.round(np.asarray(center, float), MERGE_DECIMALS))


# ---------------------------------------------------------------------------
# Radial potential tables
# ---------------------------------------------------------------------------

class RadialPotential:
    """Piecewise Laurent polynomial in r.

    ``edges`` holds ``0 = e_0 < e_1 < ... < e_m``; piece ``i < m`` covers
    ``[e_i, e_{i+1})`` and piece ``m`` covers ``[e_m, inf)``. Row ``i`` of
    ``coeffs`` is ``[a_{-1}, a_0, a_1, ...]``.
    """

    def __init__(self, edges, coeffs):
        edges = np.asarray(edges, dtype=float)
        coeffs = np.atleast_2d(np.asarray(coeffs, dtype=float))
        if edges[0] != 0.0 or np.any(np.diff(edges) <= 0):
            raise InvalidComponent("radial potential edges must start at 0 and increase")
        if coeffs.shape[0] != edges.size or coeffs.shape[1] < 2:
            raise InvalidComponent("coefficient table does not match edges")
        self.edges = edges
        self.coeffs = np.ascontiguousarray(coeffs)

    @classmethod
    def zero(cls) -> "RadialPotential":
        return cls([0.0], [[0.0, 0.0]])

    # -- algebra -------------------------------------------------------------
    def _on_edges(self, edges: np.ndarray, width: int) -> np.ndarray:
        idx = np.searchsorted(self.edges, edges, side="right") - 1
        out = np.zeros((edges.size, width))
        out[:, : self.coeffs.shape[1]] = self.coeffs[idx]
        return out

    def __add__(self, other: "RadialPotential") -> "RadialPotential":
        edges = np.union1d(self.edges, other.edges)
        width = max(self.coeffs.shape[1], other.coeffs.shape[1])
        return RadialPotential(edges, self._on_edges(edges, width) + other._on_edges(edges, width))

    def scaled(self, t: float) -> "RadialPotential":
        return RadialPotential(self.edges, t * self.coeffs)

    # -- evaluation ----------------------------------------------------------
    @property
    def central_charge(self) -> float:
        """Coefficient of 1/r at the origin, i.e. the weight of a central atom."""
        return float(self.coeffs[0, 0])

    @property
    def feature_radii(self) -> np.ndarray:
        return self.edges[1:].copy()

    @property
    def total_charge(self) -> float:
        return float(self.coeffs[-1, 0])

    def __call__(self, r, cap: float | None = None) -> np.ndarray:
        from . import kernels

        r = np.asarray(r, dtype=float)
        flat = np.ascontiguousarray(r.reshape(-1))
        vals = kernels.laurent_eval(self.edges, self.coeffs, flat)
        if cap is not None:
            np.minimum(vals, cap, out=vals)
        return vals.reshape(r.shape)

    def derivative(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        idx = np.searchsorted(self.edges, r, side="right") - 1
        c = self.coeffs[idx]
        out = -c[..., 0] / r**2
        for j in range(2, c.shape[-1]):
            power = j - 1
            out = out + power * c[..., j] * r ** (power - 1)
        return out

    def enclosed_charge(self, r) -> np.ndarray:
        """Q(r) = -r^2 V'(r), the charge inside the sphere of radius r."""
        r = np.asarray(r, dtype=float)
        return -(r**2) * self.derivative(r)

    def max_value(self) -> float:
        """Supremum of V on (0, inf); +inf with a central atom."""
        if self.central_charge > 0:
            return float("inf")
        probe = np.concatenate([self.edges[1:], np.linspace(1e-12, self.edges[-1] or 1.0, 2001)])
        return float(np.max(self(probe)))


# ---------------------------------------------------------------------------
# Components
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PointCharge:
    center: tuple[float, float, float]
    weight: float
    kind = "point"

    def __post_init__(self):
        object.__setattr__(self, "center", _vec3(self.center))
        object.__setattr__(self, "weight", float(self.weight))

    @property
    def total_charge(self) -> float:
        return self.weight

    def is_nonnegative(self) -> bool:
        return self.weight >= 0

    def radial_potential(self) -> RadialPotential:
        return RadialPotential([0.0], [[self.weight, 0.0]])


@dataclass(frozen=True)
class SphericalShell:
    center: tuple[float, float, float]
    radius: float
    weight: float
    kind = "shell"

    def __post_init__(self):
        object.__setattr__(self, "center", _vec3(self.center))
        object.__setattr__(self, "radius", float(self.radius))
        object.__setattr__(self, "weight", float(self.weight))
        if not self.radius > 0:
            raise InvalidComponent(f"shell radius must be positive, got {self.radius}")

    @property
    def total_charge(self) -> float:
        return self.weight

    def is_nonnegative(self) -> bool:
        return self.weight >= 0

    def radial_potential(self) -> RadialPotential:
        a, w = self.radius, self.weight
        return RadialPotential([0.0, a], [[0.0, w / a], [w, 0.0]])


def _piece_sign(lo: float, hi: float, coeffs: np.ndarray) -> int:
    """+1 / -1 / 0 when the polynomial keeps one sign on [lo, hi]; raise otherwise."""
    poly = np.polynomial.Polynomial(coeffs)
    pts = [lo, hi]
    for root in poly.roots():
        if abs(root.imag) < 1e-12 and lo < root.real < hi:
            pts.append(root.real)
    pts = np.sort(np.asarray(pts))
    probes = np.concatenate([pts, 0.5 * (pts[1:] + pts[:-1])])
    vals = poly(probes)
    scale = max(np.max(np.abs(vals)), 1e-300)
    if np.all(vals >= -1e-12 * scale):
        return 1 if np.any(vals > 0) else 0
    if np.all(vals <= 1e-12 * scale):
        return -1
    raise InvalidComponent(f"density piece on [{lo}, {hi}] changes sign")


@dataclass(frozen=True)
class RadialPiecewiseDensity:
    """rho(r) = sum_j c_j r^j on each piece [r0, r1] around ``center``."""

    center: tuple[float, float, float]
    pieces: tuple[tuple[float, float, tuple[float, ...]], ...]
    kind = "radial"
    _signs: tuple[int, ...] = field(default=(), repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "center", _vec3(self.center))
        pieces = []
        for lo, hi, coeffs in self.pieces:
            lo, hi = float(lo), float(hi)
            coeffs = tuple(float(c) for c in coeffs)
            if not (0 <= lo < hi < np.inf):
                raise InvalidComponent(f"bad density piece [{lo}, {hi}]")
            if not coeffs:
                raise InvalidComponent("density piece without coefficients")
            pieces.append((lo, hi, coeffs))
        pieces.sort()
        for (_, hi0, _), (lo1, _, _) in zip(pieces, pieces[1:]):
            if lo1 < hi0:
                raise InvalidComponent("density pieces overlap")
        if not pieces:
            raise InvalidComponent("radial density needs at least one piece")
        object.__setattr__(self, "pieces", tuple(pieces))
        signs = tuple(_piece_sign(lo, hi, np.asarray(c)) for lo, hi, c in pieces)
        object.__setattr__(self, "_signs", signs)

    @property
    def total_charge(self) -> float:
        total = 0.0
        for lo, hi, coeffs in self.pieces:
            for j, c in enumerate(coeffs):
                total += FOUR_PI * c * (hi ** (j + 3) - lo ** (j + 3)) / (j + 3)
        return total

    def is_nonnegative(self) -> bool:
        return all(s >= 0 for s in self._signs)

    def radial_potential(self) -> RadialPotential:
        result = RadialPotential.zero()
        for lo, hi, coeffs in self.pieces:
            deg = len(coeffs) - 1
            edges = [0.0, lo, hi] if lo > 0 else [0.0, hi]
            width = deg + 4  # up to r^(deg+2)
            rows = []
            inner = sum(FOUR_PI * c * (hi ** (j + 2) - lo ** (j + 2)) / (j + 2) for j, c in enumerate(coeffs))
            if lo > 0:
                row = np.zeros(width)
                row[1] = inner
                rows.append(row)
            row = np.zeros(width)
            row[0] = -sum(FOUR_PI * c * lo ** (j + 3) / (j + 3) for j, c in enumerate(coeffs))
            row[1] = sum(FOUR_PI * c * hi ** (j + 2) / (j + 2) for j, c in enumerate(coeffs))
            for j, c in enumerate(coeffs):
                row[j + 3] += FOUR_PI * c * (1.0 / (j + 3) - 1.0 / (j + 2))
            rows.append(row)
            row = np.zeros(width)
            row[0] = sum(FOUR_PI * c * (hi ** (j + 3) - lo ** (j + 3)) / (j + 3) for j, c in enumerate(coeffs))
            rows.append(row)
            result = result + RadialPotential(edges, rows)
        return result

    def density(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        out = np.zeros_like(r)
        for lo, hi, coeffs in self.pieces:
            mask = (r >= lo) & (r < hi)
            out[mask] = np.polynomial.polynomial.polyval(r[mask], coeffs)
        return out


def uniform_ball(center, radius: float, weight: float) -> RadialPiecewiseDensity:
    """Homogeneous ball of total charge ``weight``."""
    if not radius > 0:
        raise InvalidComponent("ball radius must be positive")
    rho = 3.0 * weight / (FOUR_PI * radius**3)
    return RadialPiecewiseDensity(center, ((0.0, radius, (rho,)),))


ChargeComponent = Union[PointCharge, SphericalShell, RadialPiecewiseDensity]


# ---------------------------------------------------------------------------
# Measure
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ValidationReport:
    mode: str
    total_charge: float
    total_variation: float
    atoms: tuple[tuple[tuple[float, float, float], float], ...]
    radial: bool


@dataclass(frozen=True)
class ChargeMeasure:
    components: tuple[ChargeComponent, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))

    def __add__(self, other: "ChargeMeasure") -> "ChargeMeasure":
        return ChargeMeasure(self.components + other.components)

    # -- bookkeeping ---------------------------------------------------------
    def total_mass_and_variation(self) -> tuple[float, float]:
        charges = [c.total_charge for c in self.components]
        return float(sum(charges)), float(sum(abs(q) for q in charges))

    @property
    def total_charge(self) -> float:
        return self.total_mass_and_variation()[0]

    def atom_weights(self) -> list[tuple[tuple[float, float, float], float]]:
        merged: dict[tuple, list] = {}
        for comp in self.components:
            if isinstance(comp, PointCharge):
                key = _canonical(comp.center)
                entry = merged.setdefault(key, [comp.center, 0.0])
                entry[1] += comp.weight
        return [(tuple(c), w) for c, w in merged.values() if w != 0.0]

    def is_nonnegative(self) -> bool:
        return all(c.is_nonnegative() for c in self.components)

    def common_center(self) -> tuple[float, float, float] | None:
        """The shared center of all components, or None if they differ."""
        if not self.components:
            return (0.0, 0.0, 0.0)
        keys = {_canonical(c.center) for c in self.components}
        if len(keys) != 1:
            return None
        return self.components[0].center

    def validate(self, mode: str = "extension") -> ValidationReport:
        """Check the extension condition (atoms below 1) and, for ``mode='solver'``, positivity."""
        if mode not in ("extension", "solver"):
            raise ValueError(f"unknown validation mode {mode!r}")
        atoms = self.atom_weights()
        for center, w in atoms:
            if abs(w) >= 1.0:
                raise AtomTooHeavy(center, w)
        mass, variation = self.total_mass_and_variation()
        if mode == "solver":
            for comp in self.components:
                if not comp.is_nonnegative():
                    raise NegativeComponent(f"NegativeComponent: {comp.kind} component at {comp.center}")
            if variation == 0.0:
                raise TrivialMeasure("TrivialMeasure: the measure is zero")
        return ValidationReport(
            mode=mode,
            total_charge=mass,
            total_variation=variation,
            atoms=tuple(atoms),
            radial=self.common_center() is not None,
        )

    # -- potentials ----------------------------------------------------------
    def radial_potential(self) -> RadialPotential:
        if self.common_center() is None:
            raise NotRadial("NotRadial: components have distinct centers")
        pot = RadialPotential.zero()
        for comp in self.components:
            pot = pot + comp.radial_potential()
        return pot

    def potential(self, points) -> np.ndarray:
        """V at an (..., 3) array of points; raises SingularPoint on an atom center."""
        pts = np.asarray(points, dtype=float)
        out = np.zeros(pts.shape[:-1])
        for comp in self.components:
            r = np.linalg.norm(pts - np.asarray(comp.center), axis=-1)
            if isinstance(comp, PointCharge):
                if np.any(r == 0.0):
                    raise SingularPoint(f"SingularPoint: evaluation at atom center {comp.center}")
                out = out + comp.weight / r
            else:
                out = out + comp.radial_potential()(r)
        return out

    def potential_at(self, x) -> float:
        return float(self.potential(np.asarray(_vec3(x)))[()])

    def support_radius(self) -> float:
        """Radius N of a ball about the origin containing supp(mu)."""
        radius = 0.0
        for comp in self.components:
            extent = np.linalg.norm(comp.center)
            if isinstance(comp, SphericalShell):
                extent += comp.radius
            elif isinstance(comp, RadialPiecewiseDensity):
                extent += comp.pieces[-1][1]
            radius = max(radius, extent)
        return float(radius)

    # -- construction helpers -----------------------------------------------
    @classmethod
    def from_components(cls, comps: Iterable[ChargeComponent]) -> "ChargeMeasure":
        return cls(tuple(comps))

    @classmethod
    def point(cls, weight: float, center=(0.0, 0.0, 0.0)) -> "ChargeMeasure":
        return cls((PointCharge(center, weight),))

    @classmethod
    def shell(cls, weight: float, radius: float, center=(0.0, 0.0, 0.0)) -> "ChargeMeasure":
        return cls((SphericalShell(center, radius, weight),))

    @classmethod
    def ball(cls, weight: float, radius: float, center=(0.0, 0.0, 0.0)) -> "ChargeMeasure":
        return cls((uniform_ball(center, radius, weight),))

    def scaled(self, t: float) -> "ChargeMeasure":
        comps = []
        for c in self.components:
            if isinstance(c, PointCharge):
                comps.append(PointCharge(c.center, t * c.weight))
            elif isinstance(c, SphericalShell):
                comps.append(SphericalShell(c.center, c.radius, t * c.weight))
            else:
                comps.append(RadialPiecewiseDensity(
                    c.center, tuple((lo, hi, tuple(t * x for x in co)) for lo, hi, co in c.pieces)))
        return ChargeMeasure(tuple(comps))


_CHARGE_KEYS = {"kind", "center", "weight", "radius", "pieces"}


def component_from_table(table: dict) -> ChargeComponent:
    """Build one component from a ``[[charge]]`` config table."""
    unknown = set(table) - _CHARGE_KEYS
    if unknown:
        raise InvalidComponent(f"unknown charge keys: {sorted(unknown)}")
    kind = table.get("kind")
    center = table.get("center", (0.0, 0.0, 0.0))
    if kind == "point":
        return PointCharge(center, table["weight"])
    if kind == "shell":
        return SphericalShell(center, table["radius"], table["weight"])
    if kind == "ball":
        return uniform_ball(center, table["radius"], table["weight"])
    if kind == "radial":
        pieces = tuple((p[0], p[1], tuple(p[2:])) for p in table["pieces"])
        dens = RadialPiecewiseDensity(center, pieces)
        if "weight" in table:
            total = dens.total_charge
            if total == 0:
                raise InvalidComponent("cannot rescale a density with zero total charge")
            t = float(table["weight"]) / total
            dens = RadialPiecewiseDensity(
                center, tuple((lo, hi, tuple(t * c for c in co)) for lo, hi, co in dens.pieces))
        return dens
    raise InvalidComponent(f"unknown charge kind {kind!r}")


def measure_from_tables(tables: Sequence[dict]) -> ChargeMeasure:
    return ChargeMeasure(tuple(component_from_table(t) for t in tables))
