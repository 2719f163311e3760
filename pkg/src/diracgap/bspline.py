"""Clamped B-spline bases on graded meshes of [0, r_max]."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidBasisSpec


def graded_breakpoints(r_max: float, n_intervals: int, grading: float) -> np.ndarray:
    j = np.arange(n_intervals + 1) / n_intervals
    bp = r_max * j**grading
    bp[-1] = r_max
    return bp


def _local_splines(knots: np.ndarray, span: np.ndarray, x: np.ndarray, order: int):
    """Values and first derivatives of the ``order`` splines nonzero on each span.

    ``span`` has shape (n_int,), ``x`` shape (n_int, nq); knot interval
    ``[knots[span], knots[span+1])`` contains the nodes of that row. Output
    column ``a`` is spline ``span - order + 1 + a``.
    """
    p = order - 1
    n_int, nq = x.shape
    m = span[:, None]
    left = np.zeros((p + 1, n_int, nq))
    right = np.zeros((p + 1, n_int, nq))
    vals = np.zeros((order, n_int, nq))
    vals[0] = 1.0
    lower = None
    for j in range(1, p + 1):
        left[j] = x - knots[m + 1 - j]
        right[j] = knots[m + j] - x
        if j == p:
            lower = vals[:p].copy()
        saved = np.zeros((n_int, nq))
        for r in range(j):
            temp = vals[r] / (right[r + 1] + left[j - r])
            vals[r] = saved + right[r + 1] * temp
            saved = left[j - r] * temp
        vals[j] = saved
    if p == 0:
        lower = np.zeros((0, n_int, nq))
    derivs = np.zeros_like(vals)
    for r in range(order):
        jdx = m - p + r  # global spline index, shape (n_int, 1)
        if r >= 1:
            derivs[r] += p * lower[r - 1] / (knots[jdx + p] - knots[jdx])
        if r <= p - 1:
            derivs[r] -= p * lower[r] / (knots[jdx + p + 1] - knots[jdx + 1])
    return np.moveaxis(vals, 0, -1), np.moveaxis(derivs, 0, -1)


@dataclass(frozen=True)
class RadialBasis:
    """B-splines of a given order vanishing at both ends of [0, r_max].

    ``values[i, q, a]`` and ``derivs[i, q, a]`` hold spline ``i + a`` (in the
    full clamped numbering, before the two end splines are dropped) at node
    ``nodes[i, q]``.
    """

    order: int
    breakpoints: np.ndarray
    knots: np.ndarray
    nodes: np.ndarray
    weights: np.ndarray
    values: np.ndarray
    derivs: np.ndarray

    @property
    def n_intervals(self) -> int:
        return self.breakpoints.size - 1

    @property
    def r_max(self) -> float:
        return float(self.breakpoints[-1])

    @property
    def full_dimension(self) -> int:
        return self.n_intervals + self.order - 1

    @property
    def dimension(self) -> int:
        return self.n_intervals + self.order - 3

    def evaluate(self, coef: np.ndarray, r: np.ndarray) -> np.ndarray:
        """Evaluate sum_i coef_i b_i(r) for coefficients over the retained splines."""
        from scipy.interpolate import BSpline

        full = np.zeros(self.full_dimension)
        full[1:-1] = coef
        return BSpline(self.knots, full, self.order - 1, extrapolate=False)(r)

    def refined(self) -> "RadialBasis":
        """Nested refinement: every interval split at its midpoint."""
        bp = self.breakpoints
        mids = 0.5 * (bp[1:] + bp[:-1])
        return basis_from_breakpoints(np.sort(np.concatenate([bp, mids])), self.order)


def basis_from_breakpoints(breakpoints, order: int, quad_points: int | None = None) -> RadialBasis:
    bp = np.asarray(breakpoints, dtype=float)
    if order < 3:
        raise InvalidBasisSpec(f"order must be >= 3, got {order}")
    if bp.ndim != 1 or bp.size < 2 or bp[0] != 0.0 or np.any(np.diff(bp) <= 0):
        raise InvalidBasisSpec("breakpoints must start at 0 and strictly increase")
    n_int = bp.size - 1
    if n_int < order:
        raise InvalidBasisSpec(f"need at least order={order} intervals, got {n_int}")
    # the 1/(1 + lam + V) weight is rational, so polynomial exactness alone is not enough
    nq = 2 * order + 4 if quad_points is None else int(quad_points)
    knots = np.concatenate([np.zeros(order - 1), bp, np.full(order - 1, bp[-1])])
    gx, gw = np.polynomial.legendre.leggauss(nq)
    a, b = bp[:-1, None], bp[1:, None]
    nodes = 0.5 * (b - a) * gx[None, :] + 0.5 * (b + a)
    weights = 0.5 * (b - a) * gw[None, :]
    span = np.arange(n_int) + order - 1
    values, derivs = _local_splines(knots, span, nodes, order)
    return RadialBasis(order, bp, knots, nodes, weights,
                       np.ascontiguousarray(values), np.ascontiguousarray(derivs))


def build_radial_basis(r_max: float = 40.0, n_intervals: int = 200, order: int = 6,
                       grading: float = 3.0, extra_breakpoints=(),
                       quad_points: int | None = None) -> RadialBasis:
    """Graded basis with breakpoints r_max (j/n)^grading.

    ``extra_breakpoints`` (for instance shell radii, where V has a kink) are
    inserted into the mesh; each one adds an interval.
    """
    if not r_max > 0:
        raise InvalidBasisSpec(f"r_max must be positive, got {r_max}")
    if order < 3:
        raise InvalidBasisSpec(f"order must be >= 3, got {order}")
    if int(n_intervals) != n_intervals or n_intervals < order:
        raise InvalidBasisSpec(f"n_intervals={n_intervals} must be an integer >= order={order}")
    if grading < 1:
        raise InvalidBasisSpec(f"grading must be >= 1, got {grading}")
    bp = graded_breakpoints(r_max, int(n_intervals), grading)
    extra = np.asarray([e for e in extra_breakpoints if 0 < e < r_max], dtype=float)
    if extra.size:
        bp = np.union1d(bp, extra)
        # drop breakpoints that would create slivers next to an inserted point
        keep = np.concatenate([[True], np.diff(bp) > 1e-12 * r_max])
        bp = bp[keep]
    return basis_from_breakpoints(bp, order, quad_points)
