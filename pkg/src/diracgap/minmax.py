"""Min-max levels in the gap as roots of the pencil eigenvalue curves.

For a pencil A(lam) with mass matrix M, ``m_k(lam)`` is the k-th smallest
generalized eigenvalue. It is strictly decreasing in lam, and the k-th
min-max level is its unique zero in (-1, 1).
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .bspline import build_radial_basis
from .errors import LambdaOutOfGap, NoRootInGap, NonMonotoneDetected, SolverError
from .measure import ChargeMeasure
from .radial import assemble_radial_pencil, smallest_generalized_eigenvalues

log = logging.getLogger(__name__)

GAP_GUARD = 1e-6
SCAN_POINTS = np.concatenate([[-1.0 + GAP_GUARD], np.round(np.arange(-0.9, 0.95, 0.1), 12), [1.0 - GAP_GUARD]])
# eigenvalue noise allowed before an increase counts as non-monotone
MONOTONE_NOISE = 1e-9
# process-wide tally of monotonicity audits, read by the acceptance report
AUDIT_STATS = {"audits": 0, "violations": 0}


@dataclass
class MinMaxLevel:
    value: float
    k: int
    channel: object
    within_channel_index: int
    degeneracy: int
    residual: float
    bracket_width: float
    basis_dimension: int
    evaluations: int = 0
    history: list = field(default_factory=list, repr=False)


class LevelCurves:
    """Cached evaluation of m_1..m_kmax for one pencil, with a monotonicity audit."""

    def __init__(self, pencil, kmax: int):
        self.pencil = pencil
        self.kmax = int(kmax)
        self._cache: dict[float, np.ndarray] = {}

    def __call__(self, lam: float) -> np.ndarray:
        lam = float(lam)
        if not (-1.0 + GAP_GUARD <= lam <= 1.0 - GAP_GUARD):
            raise LambdaOutOfGap(f"LambdaOutOfGap: lambda={lam} outside the guarded gap")
        hit = self._cache.get(lam)
        if hit is None:
            A = self.pencil.matrix_at(lam)
            hit = smallest_generalized_eigenvalues(A, self.pencil.mass(), self.kmax)
            self._cache[lam] = hit
        return hit

    def audit(self, k: int) -> None:
        """Raise NonMonotoneDetected if sampled m_k increases anywhere in lam."""
        AUDIT_STATS["audits"] += 1
        lams = np.array(sorted(self._cache))
        if lams.size < 2:
            return
        vals = np.array([self._cache[x][k - 1] for x in lams])
        rise = np.diff(vals)
        noise = MONOTONE_NOISE * (1.0 + np.maximum(np.abs(vals[1:]), np.abs(vals[:-1])))
        bad = np.nonzero(rise > noise)[0]
        if bad.size:
            AUDIT_STATS["violations"] += 1
            i = bad[0]
            raise NonMonotoneDetected(
                f"NonMonotoneDetected: m_{k} rises from {vals[i]:.6e} at {lams[i]:.12f} "
                f"to {vals[i + 1]:.6e} at {lams[i + 1]:.12f}")


def level_function(pencil, k: int, lam: float) -> float:
    """m_k(lam) for the pencil."""
    return float(LevelCurves(pencil, k)(lam)[k - 1])


def _root_in_bracket(fn: Callable[[float], float], lo: float, hi: float, flo: float, fhi: float,
                     tol: float, max_iter: int = 200):
    """Bracketed root of a decreasing function: bisection, then Illinois polishing.

    Keeps ``flo > 0 >= fhi`` and stops when ``hi - lo <= tol``.
    """
    side = 0
    for it in range(max_iter):
        width = hi - lo
        if width <= tol:
            break
        if width > 1e-3:
            x = 0.5 * (lo + hi)
        else:
            x = (lo * fhi - hi * flo) / (fhi - flo)
            # squeeze: step just past the estimate so the bracket collapses from both sides
            nudge = 0.25 * tol
            x = x + nudge if x - lo < hi - x else x - nudge
            if not (lo < x < hi):
                x = 0.5 * (lo + hi)
        fx = fn(x)
        if fx > 0:
            lo, flo = x, fx
            if side == -1:
                fhi *= 0.5
            side = -1
        else:
            hi, fhi = x, fx
            if side == 1:
                flo *= 0.5
            side = 1
    return lo, hi, it


def find_level(pencil, k: int = 1, tol: float = 1e-12, curves: LevelCurves | None = None,
               audit: bool = True) -> MinMaxLevel:
    """Locate the k-th min-max level of a pencil."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    if curves is None:
        curves = LevelCurves(pencil, k)
    if curves.kmax < k:
        raise ValueError("level cache holds fewer eigenvalues than k")
    mk = lambda lam: float(curves(lam)[k - 1])  # noqa: E731
    scan = [(float(x), mk(x)) for x in SCAN_POINTS]
    if audit:
        curves.audit(k)
    if scan[0][1] <= 0:
        raise NoRootInGap(f"NoRootInGap: m_{k} <= 0 already at lambda=-1+{GAP_GUARD:g} (level dived)")
    if scan[-1][1] > 0:
        raise NoRootInGap(f"NoRootInGap: m_{k} > 0 on the whole guarded gap")
    i = next(j for j in range(len(scan) - 1) if scan[j][1] > 0 >= scan[j + 1][1])
    (lo, flo), (hi, fhi) = scan[i], scan[i + 1]
    if fhi == 0.0:
        lo = hi
    else:
        # the raw values stay in the cache; the Illinois weights work on copies
        lo, hi, _ = _root_in_bracket(mk, lo, hi, flo, fhi, tol)
    if audit:
        curves.audit(k)
    f_lo, f_hi = mk(lo), mk(hi)
    if f_lo == f_hi:
        value = lo
    else:
        value = lo + (hi - lo) * f_lo / (f_lo - f_hi)
    residual = min(abs(f_lo), abs(f_hi))
    history = sorted((x, float(v[k - 1])) for x, v in curves._cache.items())
    return MinMaxLevel(
        value=float(value), k=k, channel=getattr(pencil, "channel", None), within_channel_index=k,
        degeneracy=int(getattr(pencil, "degeneracy", 1)), residual=float(residual),
        bracket_width=float(hi - lo), basis_dimension=int(pencil.dimension),
        evaluations=len(curves._cache), history=history)


@dataclass
class SpectrumResult:
    levels: list
    per_channel: dict
    truncated: dict
    diagnostics: dict


def spectrum_in_gap(mu: ChargeMeasure, kappa_list: Sequence[int] = (-1, 1, -2, 2),
                    k_per_channel: int = 5, tol: float = 1e-12, r_max: float = 40.0,
                    n_intervals: int = 200, order: int = 6, grading: float = 3.0,
                    cap: float | None = None, pool=None) -> SpectrumResult:
    """Per-channel levels, replicated by degeneracy and merged into one sorted list."""
    mu.validate("solver")
    pot = mu.radial_potential()
    basis = build_radial_basis(r_max, n_intervals, order, grading,
                               extra_breakpoints=_breaks(pot, cap))

    def solve(kappa):
        pencil = assemble_radial_pencil(mu, kappa, basis, cap=cap)
        curves = LevelCurves(pencil, k_per_channel)
        found, error = [], None
        for k in range(1, k_per_channel + 1):
            try:
                found.append(find_level(pencil, k, tol, curves))
            except NonMonotoneDetected:
                raise
            except SolverError as exc:
                error = str(exc)
                break
        # m_k already negative at the bottom of the gap: the discrete count below k0
        below = int(np.sum(curves(SCAN_POINTS[0]) < 0))
        return kappa, found, error, below

    mapper = pool.map if pool is not None else map
    per_channel, truncated, k0 = {}, {}, {}
    for kappa, found, error, below in mapper(solve, list(kappa_list)):
        per_channel[kappa] = found
        k0[kappa] = below
        if error is not None:
            truncated[kappa] = error
    merged = []
    for kappa in kappa_list:
        for lev in per_channel[kappa]:
            merged.extend([lev] * lev.degeneracy)
    merged.sort(key=lambda lev: (lev.value, abs(lev.channel), lev.channel, lev.within_channel_index))
    levels = []
    for i, lev in enumerate(merged, start=1):
        levels.append(MinMaxLevel(lev.value, i, lev.channel, lev.within_channel_index, lev.degeneracy,
                                  lev.residual, lev.bracket_width, lev.basis_dimension,
                                  lev.evaluations))
    values = [lev.value for lev in levels]
    if any(b < a for a, b in zip(values, values[1:])):  # pragma: no cover - sorted above
        raise SolverError("level ordering violated")
    # reported only; the discrete count need not equal the exact k0
    diagnostics = {"basis_dimension": basis.dimension, "r_max": basis.r_max,
                   "k0_discrete": {str(k): v for k, v in k0.items()}}
    if levels:
        lam1 = levels[0].value
        needed = 10.0 / np.sqrt(1.0 - lam1**2)
        diagnostics["r_max_needed"] = float(needed)
        diagnostics["r_max_ok"] = bool(basis.r_max >= needed)
    return SpectrumResult(levels, per_channel, truncated, diagnostics)


def cap_radius(pot, cap: float) -> float | None:
    """Radius where a nonincreasing radial V crosses the cap, None if it never does."""
    from scipy.optimize import brentq

    if pot.max_value() <= cap:
        return None
    hi = max(pot.edges[-1], 1.0)
    while pot(np.array([hi]))[0] > cap:
        hi *= 2.0
    return brentq(lambda r: pot(np.array([r]))[0] - cap, 0.0 + 1e-300, hi, xtol=1e-300, rtol=1e-15)


def _breaks(pot, cap):
    extra = list(pot.feature_radii)
    if cap is not None:
        rc = cap_radius(pot, cap)
        if rc is not None:
            extra.append(rc)
    return extra


def truncation_convergence_sweep(mu: ChargeMeasure, caps: Sequence[float], kappa: int = -1,
                                 tol: float = 1e-12, **basis_kw):
    """lambda_1 with V replaced by min(V, n) for each cap n, plus the uncapped value."""
    caps = [float(c) for c in caps]
    if not caps or any(b <= a for a, b in zip(caps, caps[1:])) or caps[0] <= 0:
        raise ValueError("caps must be positive and strictly increasing")
    mu.validate("solver")
    pot = mu.radial_potential()
    opts = dict(r_max=40.0, n_intervals=200, order=6, grading=3.0)
    opts.update(basis_kw)
    out = []
    for n in caps:
        basis = build_radial_basis(extra_breakpoints=_breaks(pot, n), **opts)
        pencil = assemble_radial_pencil(mu, kappa, basis, cap=n)
        out.append((n, find_level(pencil, 1, tol).value))
    basis = build_radial_basis(extra_breakpoints=pot.feature_radii, **opts)
    exact = find_level(assemble_radial_pencil(mu, kappa, basis), 1, tol).value
    return out, exact
