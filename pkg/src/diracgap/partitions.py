"""Smooth quadratic partitions of unity sum_k J_k^2 = 1 with analytic gradients."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grids import becke_partition

# quintic smoothstep h(s) = 6 s^5 - 15 s^4 + 10 s^3 has max h' = 15/8
SMOOTHSTEP_SLOPE = 15.0 / 8.0


def smoothstep(s: np.ndarray):
    s = np.clip(s, 0.0, 1.0)
    h = s**3 * (10.0 - 15.0 * s + 6.0 * s**2)
    dh = 30.0 * s**2 * (1.0 - s) ** 2
    return h, dh


class Partition:
    """Base class: subclasses return J (N, K) and grad J (N, K, 3)."""

    def evaluate(self, points: np.ndarray):
        raise NotImplementedError


@dataclass(frozen=True)
class TrivialPartition(Partition):
    def evaluate(self, points):
        n = np.asarray(points).shape[0]
        return np.ones((n, 1)), np.zeros((n, 1, 3))


@dataclass(frozen=True)
class BeckeSqrtPartition(Partition):
    """J_k = sqrt(w_k) with w_k the Becke cell weights."""

    centers: np.ndarray

    def evaluate(self, points):
        w, gw = becke_partition(points, np.asarray(self.centers, dtype=float), gradient=True)
        J = np.sqrt(w)
        with np.errstate(divide="ignore", invalid="ignore"):
            gJ = np.where(J[..., None] > 1e-150, gw / (2.0 * J[..., None]), 0.0)
        return J, gJ


@dataclass(frozen=True)
class ScaledPartition(Partition):
    """A partition multiplied by a constant; breaks sum J^2 = 1 unless factor is 1."""

    base: Partition
    factor: float

    def evaluate(self, points):
        J, gJ = self.base.evaluate(points)
        return self.factor * J, self.factor * gJ


@dataclass(frozen=True)
class BallPartition(Partition):
    """J_k = 1 on B(R_k, d_k/4), 0 outside B(R_k, d_k/2), and J_{M+1} completes the sum.

    In the transition shell J_k = cos(pi/2 h(s)) and J_{M+1} = sin(pi/2 h(s)),
    with s = (|x - R_k| - d_k/4) / (d_k/4) and h the quintic smoothstep.
    """

    centers: np.ndarray

    def radii(self) -> np.ndarray:
        C = np.asarray(self.centers, dtype=float)
        D = np.linalg.norm(C[:, None] - C[None], axis=-1)
        np.fill_diagonal(D, np.inf)
        return D.min(axis=1)

    def evaluate(self, points):
        pts = np.asarray(points, dtype=float)
        C = np.asarray(self.centers, dtype=float)
        dk = self.radii()
        M = C.shape[0]
        N = pts.shape[0]
        J = np.zeros((N, M + 1))
        gJ = np.zeros((N, M + 1, 3))
        J[:, M] = 1.0
        for k in range(M):
            diff = pts - C[k]
            r = np.linalg.norm(diff, axis=1)
            width = dk[k] / 4.0
            s = (r - width) / width
            h, dh = smoothstep(s)
            inside = r < 2.0 * width
            theta = 0.5 * np.pi * h
            unit = diff / np.where(r > 0, r, 1.0)[:, None]
            dtheta = (0.5 * np.pi * dh / width)[:, None] * unit
            J[inside, k] = np.cos(theta[inside])
            J[inside, M] = np.sin(theta[inside])
            gJ[inside, k] = -np.sin(theta[inside])[:, None] * dtheta[inside]
            gJ[inside, M] = np.cos(theta[inside])[:, None] * dtheta[inside]
        return J, gJ

    def gradient_sup_sum(self) -> float:
        """sum_k ||grad J_k||_inf^2 in closed form."""
        slopes = 0.5 * np.pi * SMOOTHSTEP_SLOPE * 4.0 / self.radii()
        return float(np.sum(slopes**2) + np.max(slopes) ** 2)

    def kappa(self) -> float:
        """Measured constant d^2 sum_k ||grad J_k||_inf^2 with d the smallest distance."""
        return float(np.min(self.radii()) ** 2 * self.gradient_sup_sum())
