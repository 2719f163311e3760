"""Multicenter quadrature: Lebedev spheres, log-graded radial grids and Becke partitions."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import lebedev_rule

from .errors import QuadratureNodeOnCenter

_LEBEDEV_ORDERS = (3, 5, 7, 9, 11, 13, 15, 17, 19, 21, 23, 25, 27, 29, 31, 35, 41, 47, 53, 59,
                   65, 71, 77, 83, 89, 95, 101, 107, 113, 119, 125, 131)
BECKE_ITERATIONS = 3


@lru_cache(maxsize=None)
def lebedev(n_points: int) -> tuple[np.ndarray, np.ndarray]:
    """Lebedev nodes (n, 3) and weights summing to 4 pi for a given node count."""
    for order in _LEBEDEV_ORDERS:
        x, w = lebedev_rule(order)
        if x.shape[1] == n_points:
            return np.ascontiguousarray(x.T), w
        if x.shape[1] > n_points:
            break
    raise ValueError(f"no Lebedev rule with {n_points} points")


def radial_grid(n: int, r_inner: float, r_outer: float) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights (including r^2) for r = r0 (e^t - 1) with Gauss-Legendre in t.

    ``r_inner`` sets the scale r0 near the nucleus and ``r_outer`` the last radius.
    """
    t_max = np.log1p(r_outer / r_inner)
    x, w = np.polynomial.legendre.leggauss(n)
    t = 0.5 * t_max * (x + 1.0)
    wt = 0.5 * t_max * w
    r = r_inner * np.expm1(t)
    dr = r_inner * np.exp(t)
    return r, wt * dr * r**2


def _becke_step(mu: np.ndarray) -> np.ndarray:
    for _ in range(BECKE_ITERATIONS):
        mu = 1.5 * mu - 0.5 * mu**3
    return mu


def _becke_step_derivative(mu: np.ndarray) -> np.ndarray:
    d = np.ones_like(mu)
    for _ in range(BECKE_ITERATIONS):
        d = d * (1.5 - 1.5 * mu**2)
        mu = 1.5 * mu - 0.5 * mu**3
    return d


def becke_partition(points: np.ndarray, centers: np.ndarray, gradient: bool = False):
    """Becke cell weights w_k(x), shape (N, M), summing to one; optionally their gradients (N, M, 3)."""
    pts = np.asarray(points, dtype=float)
    C = np.asarray(centers, dtype=float)
    M = C.shape[0]
    N = pts.shape[0]
    if M == 1:
        w = np.ones((N, 1))
        return (w, np.zeros((N, 1, 3))) if gradient else w
    diff = pts[:, None, :] - C[None, :, :]
    r = np.linalg.norm(diff, axis=-1)
    u = diff / np.where(r > 0, r, 1.0)[..., None]
    R = np.linalg.norm(C[:, None, :] - C[None, :, :], axis=-1)
    s = np.ones((N, M, M))
    ds = np.zeros((N, M, M))
    for k in range(M):
        for j in range(M):
            if j == k:
                continue
            mu = (r[:, k] - r[:, j]) / R[k, j]
            s[:, k, j] = 0.5 * (1.0 - _becke_step(mu))
            ds[:, k, j] = -0.5 * _becke_step_derivative(mu)
    P = np.prod(s, axis=2)
    Z = P.sum(axis=1)
    w = P / Z[:, None]
    if not gradient:
        return w
    gP = np.zeros((N, M, 3))
    for k in range(M):
        for j in range(M):
            if j == k:
                continue
            others = np.prod(np.delete(s[:, k, :], j, axis=1), axis=1)
            gmu = (u[:, k, :] - u[:, j, :]) / R[k, j]
            gP[:, k, :] += (ds[:, k, j] * others)[:, None] * gmu
    gZ = gP.sum(axis=1)
    gw = (gP - w[..., None] * gZ[:, None, :]) / Z[:, None, None]
    return w, gw


@dataclass(frozen=True)
class BeckeGrid:
    centers: np.ndarray
    points: np.ndarray
    weights: np.ndarray
    owner: np.ndarray

    @property
    def size(self) -> int:
        return self.points.shape[0]

    def integrate(self, values: np.ndarray) -> float:
        return float(np.dot(self.weights, values))


def build_becke_grid(centers, radial_n: int = 80, angular_n: int = 110,
                     r_inner: float = 1e-4, r_outer: float = 40.0) -> BeckeGrid:
    """Atom-centred product grids glued with Becke's smooth partition of unity."""
    C = np.atleast_2d(np.asarray(centers, dtype=float))
    if C.shape[0] < 1 or C.shape[1] != 3:
        raise ValueError("need at least one 3-vector center")
    ang, wang = lebedev(angular_n)
    r, wr = radial_grid(radial_n, r_inner, r_outer)
    local = (r[:, None, None] * ang[None, :, :]).reshape(-1, 3)
    wloc = (wr[:, None] * wang[None, :]).reshape(-1)
    pts, wts, owner = [], [], []
    for k, c in enumerate(C):
        p = local + c
        cell = becke_partition(p, C)[:, k]
        pts.append(p)
        wts.append(wloc * cell)
        owner.append(np.full(p.shape[0], k))
    pts = np.concatenate(pts)
    wts = np.concatenate(wts)
    owner = np.concatenate(owner)
    keep = wts > 0.0
    pts, wts, owner = pts[keep], wts[keep], owner[keep]
    dmin = np.min(np.linalg.norm(pts[:, None, :] - C[None, :, :], axis=-1))
    if dmin < 1e-14:
        raise QuadratureNodeOnCenter("QuadratureNodeOnCenter: a grid node coincides with a nucleus")
    return BeckeGrid(C, pts, wts, owner)
