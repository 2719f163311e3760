"""Pure numpy/scipy implementations of the hot kernels.

Signatures match the compiled module ``_kernels`` exactly; :mod:`diracgap.kernels`
picks one of the two at import time.
"""
from __future__ import annotations

import numpy as np
from scipy.integrate import solve_ivp


def laurent_eval(edges: np.ndarray, coeffs: np.ndarray, r: np.ndarray) -> np.ndarray:
    """Evaluate a piecewise Laurent polynomial (see ``RadialPotential``) at r > 0."""
    idx = np.searchsorted(edges, r, side="right") - 1
    idx = np.clip(idx, 0, edges.size - 1)
    c = coeffs[idx]
    out = np.zeros(r.shape)
    # Horner over the nonnegative powers, then the 1/r term
    for j in range(coeffs.shape[1] - 1, 0, -1):
        out = out * r + c[:, j]
    with np.errstate(divide="ignore"):
        pole = np.where(c[:, 0] != 0.0, c[:, 0] / r, 0.0)
    return out + pole


def band_gram(u: np.ndarray, v: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Banded Gram accumulation.

    ``u, v`` have shape (n_int, nq, order) holding the local splines of each
    knot interval at its quadrature nodes, ``w`` has shape (n_int, nq). Returns
    ``band`` of shape (order, n_int + order - 1) with
    ``band[d, i] = sum w u_i v_{i+d}`` (upper triangle, symmetrised).
    """
    n_int, _, order = u.shape
    local = np.einsum("iqa,iqb,iq->iab", u, v, w)
    local = 0.5 * (local + np.swapaxes(local, 1, 2))
    band = np.zeros((order, n_int + order - 1))
    base = np.arange(n_int)
    for a in range(order):
        for d in range(order - a):
            np.add.at(band[d], base + a, local[:, a, a + d])
    return band


def _rhs(t, y, kappa, energy, edges, coeffs, cap):
    r = np.exp(t)
    v = laurent_eval(edges, coeffs, np.array([r]))[0]
    if cap > 0.0 and v > cap:
        v = cap
    f, g = y
    return [-kappa * f + r * (1.0 + energy + v) * g, kappa * g - r * (energy - 1.0 + v) * f]


def dirac_shoot(t0: float, t1: float, y0: np.ndarray, kappa: float, energy: float,
                edges: np.ndarray, coeffs: np.ndarray, cap: float, rtol: float) -> np.ndarray:
    """Integrate the radial Dirac system in t = ln r from t0 to t1.

    Returns the end state normalised to unit length; the caller only needs the
    direction of (f, g). ``cap <= 0`` disables truncation of the potential.
    """
    y = np.asarray(y0, dtype=float)
    y = y / np.hypot(y[0], y[1])
    sol = solve_ivp(_rhs, (t0, t1), y, method="DOP853", rtol=rtol, atol=rtol * 1e-6,
                    args=(kappa, energy, edges, coeffs, cap))
    if not sol.success:
        raise FloatingPointError(sol.message)
    end = sol.y[:, -1]
    norm = np.hypot(end[0], end[1])
    if not np.isfinite(norm) or norm == 0.0:
        raise FloatingPointError("radial integration overflowed")
    return end / norm
