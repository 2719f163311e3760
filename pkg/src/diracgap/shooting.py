"""Shooting oracle for the radial Dirac system.

    f' = -(kappa/r) f + (1 + E + V) g
    g' =  (kappa/r) g - (E - 1 + V) f

Integration runs in t = ln r. An outward solution starts from the small-r
series, an inward one from the decaying tail, and the two are matched through
their normalised Wronskian, which is continuous in E and vanishes exactly at
bound states.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from . import kernels
from .errors import BlowUp, NoSignChange, SingularStart, Supercritical
from .measure import ChargeMeasure, RadialPotential

RTOL = 1e-12
R_START = 1e-10


def point_charge_reference_levels(nu: float, kappa: int, n_r_max: int) -> list[float]:
    """Fine-structure energies of a point charge in channel kappa, n_r = 0..n_r_max."""
    if kappa == 0:
        raise ValueError("kappa must be nonzero")
    if not (0 < nu < abs(kappa)):
        raise Supercritical(f"Supercritical: nu={nu} must lie in (0, |kappa|={abs(kappa)})")
    gamma = np.sqrt(kappa**2 - nu**2)
    first = 0 if kappa < 0 else 1
    return [float((1.0 + nu**2 / (n + gamma) ** 2) ** -0.5) for n in range(first, n_r_max + 1)]


@dataclass(frozen=True)
class RadialDiracSystem:
    kappa: int
    potential: RadialPotential
    energy: float
    cap: float | None = None

    @property
    def central_charge(self) -> float:
        return 0.0 if self.cap is not None else self.potential.central_charge

    def match_radius(self) -> float:
        radii = self.potential.feature_radii
        return float(radii[-1]) if radii.size else 1.0

    def far_radius(self) -> float:
        k = np.sqrt(1.0 - self.energy**2)
        r_far = 2.0 * max(40.0, 15.0 / k)
        return max(r_far, 2.0 * self.match_radius())

    def breakpoints(self) -> np.ndarray:
        """Radii where V is not smooth; the integrator restarts there."""
        pts = list(self.potential.feature_radii)
        if self.cap is not None and self.potential.max_value() > self.cap:
            from .minmax import cap_radius

            pts.append(cap_radius(self.potential, self.cap))
        return np.array(sorted(pts))

    def start_outward(self, r0: float) -> np.ndarray:
        kappa, E = self.kappa, self.energy
        nu = self.central_charge
        if nu != 0.0:
            if nu >= abs(kappa):
                raise SingularStart(f"SingularStart: nu={nu} >= |kappa|={abs(kappa)}")
            gamma = np.sqrt(kappa**2 - nu**2)
            return np.array([1.0, (gamma + kappa) / nu])
        v0 = float(self.potential(np.array([r0]), cap=self.cap)[0])
        if kappa < 0:
            return np.array([1.0, -(E - 1.0 + v0) * r0 / (2 * abs(kappa) + 1)])
        return np.array([(1.0 + E + v0) * r0 / (2 * kappa + 1), 1.0])

    def start_inward(self) -> np.ndarray:
        E = self.energy
        return np.array([1.0, -np.sqrt((1.0 - E) / (1.0 + E))])


def _integrate(system: RadialDiracSystem, r_from: float, r_to: float, y: np.ndarray) -> np.ndarray:
    pot = system.potential
    cap = -1.0 if system.cap is None else float(system.cap)
    lo, hi = sorted((r_from, r_to))
    pts = [p for p in system.breakpoints() if lo < p < hi]
    stops = [r_from] + (pts if r_to > r_from else pts[::-1]) + [r_to]
    for a, b in zip(stops, stops[1:]):
        try:
            y = kernels.dirac_shoot(np.log(a), np.log(b), y, float(system.kappa), float(system.energy),
                                    pot.edges, pot.coeffs, cap, RTOL)
        except (FloatingPointError, ArithmeticError) as exc:
            raise BlowUp(f"BlowUp: {exc}") from exc
    return y


def integrate_channel(system: RadialDiracSystem, direction: str, match_r: float | None = None):
    """Normalised (f, g) at match_r and the ratio g/f."""
    if match_r is None:
        match_r = system.match_radius()
    if direction == "outward":
        y = _integrate(system, R_START, match_r, system.start_outward(R_START))
    elif direction == "inward":
        y = _integrate(system, system.far_radius(), match_r, system.start_inward())
    else:
        raise ValueError("direction must be 'outward' or 'inward'")
    with np.errstate(divide="ignore"):
        ratio = y[1] / y[0]
    return ratio, y


def match_defect(potential: RadialPotential, kappa: int, energy: float,
                 cap: float | None = None) -> float:
    """Normalised Wronskian of the outward and inward solutions at the match radius."""
    system = RadialDiracSystem(int(kappa), potential, float(energy), cap)
    _, yo = integrate_channel(system, "outward")
    _, yi = integrate_channel(system, "inward")
    return float(yo[0] * yi[1] - yo[1] * yi[0])


def _as_potential(V) -> RadialPotential:
    if isinstance(V, RadialPotential):
        return V
    if isinstance(V, ChargeMeasure):
        V.validate("solver")
        return V.radial_potential()
    raise TypeError("expected a RadialPotential or a radial ChargeMeasure")


def shoot_eigenvalue(V, kappa: int, bracket: tuple[float, float], cap: float | None = None,
                     tol: float = 1e-10) -> float:
    """Energy in the bracket where the match defect vanishes."""
    pot = _as_potential(V)
    lo, hi = bracket
    fn = lambda e: match_defect(pot, kappa, e, cap)  # noqa: E731
    flo, fhi = fn(lo), fn(hi)
    if flo == 0.0:
        return float(lo)
    if fhi == 0.0:
        return float(hi)
    if np.sign(flo) == np.sign(fhi):
        raise NoSignChange(f"NoSignChange: defect has one sign on [{lo}, {hi}]")
    root = brentq(fn, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
    # near E = 1 the defect is steep in E, so a true root is only resolved to
    # about one ulp of energy times the slope; a pole leaves an O(1) residual
    resid = abs(fn(root))
    if resid > max(tol, 1e-3 * min(abs(flo), abs(fhi))):
        raise NoSignChange(f"NoSignChange: defect {resid:.3e} at the bracketed root (a pole, not a level)")
    return float(root)


def _energy_grid(pot: RadialPotential, count: int) -> np.ndarray:
    """Trial energies dense enough to separate the first ``count`` levels.

    Near E = 1 levels follow the hydrogenic pattern, so sampling is uniform in
    the effective quantum number Q / sqrt(1 - E^2).
    """
    q = max(pot.total_charge, 1e-3)
    coarse = np.linspace(-1.0 + 1e-6, 0.9, 200)
    nstar = np.arange(q / np.sqrt(1 - 0.9**2), count + 3.0, 0.02)
    fine = np.sqrt(1.0 - (q / nstar) ** 2)
    return np.unique(np.concatenate([coarse, fine[fine > 0.9]]))


def shoot_levels(V, kappa: int, count: int, cap: float | None = None) -> list[float]:
    """The lowest ``count`` gap levels of channel kappa found by scanning the defect."""
    pot = _as_potential(V)
    grid = _energy_grid(pot, count)
    vals = [match_defect(pot, kappa, e, cap) for e in grid]
    levels = []
    for (e0, d0), (e1, d1) in zip(zip(grid, vals), zip(grid[1:], vals[1:])):
        if np.sign(d0) != np.sign(d1):
            try:
                levels.append(shoot_eigenvalue(pot, kappa, (e0, e1), cap))
            except NoSignChange:
                continue
            if len(levels) == count:
                break
    return levels
