"""Spin-orbit channel reduction of q_lambda and its B-spline pencil.

For a radial potential V and spin-orbit number kappa the channel form is

    q(f) = int (f' + kappa f / r)^2 / (1 + lam + V) dr + int (1 - lam - V) f^2 dr,

discretised as ``A(lam) = S(lam) + (1 - lam) M - P``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from . import kernels
from .bspline import RadialBasis
from .errors import LambdaOutOfGap, NotPositiveDefinite, NotRadial
from .measure import ChargeMeasure, RadialPotential


def band_to_dense(band: np.ndarray, drop_ends: bool = True) -> np.ndarray:
    order, n = band.shape
    mat = np.zeros((n, n))
    for d in range(order):
        idx = np.arange(n - d)
        mat[idx, idx + d] = band[d, : n - d]
        mat[idx + d, idx] = band[d, : n - d]
    if drop_ends:
        mat = mat[1:-1, 1:-1]
    return mat


def check_gap(lam: float) -> None:
    if not (-1.0 < lam < 1.0) or not np.isfinite(lam):
        raise LambdaOutOfGap(f"LambdaOutOfGap: lambda={lam} is not in (-1, 1)")


@dataclass
class ChannelPencil:
    kappa: int
    basis: RadialBasis
    potential: RadialPotential
    v_nodes: np.ndarray
    M: np.ndarray
    P: np.ndarray
    cap: float | None = None
    _du: np.ndarray = field(default=None, repr=False)

    @property
    def degeneracy(self) -> int:
        return 2 * abs(self.kappa)

    @property
    def dimension(self) -> int:
        return self.M.shape[0]

    @property
    def channel(self):
        return self.kappa

    def stiffness(self, lam: float) -> np.ndarray:
        check_gap(lam)
        w = self.basis.weights / (1.0 + lam + self.v_nodes)
        return band_to_dense(kernels.band_gram(self._du, self._du, w))

    def matrix_at(self, lam: float) -> np.ndarray:
        """A(lam) = S(lam) + (1 - lam) M - P; only S is recomputed."""
        return self.stiffness(lam) + (1.0 - lam) * self.M - self.P

    def mass(self) -> np.ndarray:
        return self.M

    def form(self, coef: np.ndarray, lam: float) -> float:
        """q_lam on the function with spline coefficients ``coef``."""
        return float(coef @ self.matrix_at(lam) @ coef)


def pencil_matrix_at(pencil, lam: float) -> np.ndarray:
    return pencil.matrix_at(lam)


def assemble_radial_pencil(mu: ChargeMeasure | None, kappa: int, basis: RadialBasis,
                           cap: float | None = None, validate: bool = True,
                           potential: RadialPotential | None = None) -> ChannelPencil:
    """Assemble the channel pencil for a measure whose components share one center.

    ``validate=False`` together with an explicit ``potential`` is the test hook
    for surrogates such as V = 0 that solver validation would reject.
    """
    if kappa == 0 or int(kappa) != kappa:
        raise ValueError(f"kappa must be a nonzero integer, got {kappa}")
    if potential is None:
        if mu is None:
            raise ValueError("either a measure or a potential is required")
        if mu.common_center() is None:
            raise NotRadial("NotRadial: components have distinct centers")
        if validate:
            mu.validate("solver")
        potential = mu.radial_potential()
    r = basis.nodes
    v = potential(r, cap=cap)
    B, dB = basis.values, basis.derivs
    du = np.ascontiguousarray(dB + kappa * B / r[..., None])
    M = band_to_dense(kernels.band_gram(B, B, basis.weights))
    P = band_to_dense(kernels.band_gram(B, B, basis.weights * v))
    return ChannelPencil(int(kappa), basis, potential, v, M, P, cap, du)


def smallest_generalized_eigenvalues(A: np.ndarray, M: np.ndarray, k: int,
                                     vectors: bool = False):
    """The k algebraically smallest eigenvalues of A c = m M c."""
    A = np.asarray(A)
    M = np.asarray(M)
    n = A.shape[0]
    if A.shape != (n, n) or M.shape != (n, n) or k < 1 or k > n:
        raise ValueError("matrices must be square, equal size and at least k")
    dm = np.real(np.diag(M))
    if np.any(dm <= 0) or not np.all(np.isfinite(dm)):
        raise NotPositiveDefinite("NotPositiveDefinite: mass matrix has a nonpositive diagonal")
    # Jacobi scaling keeps graded meshes well conditioned. The full-spectrum
    # driver is used on purpose: the subset driver's bisection tolerance scales
    # with the matrix norm and leaves ~1e-6 noise in m_k on graded meshes.
    s = 1.0 / np.sqrt(dm)
    As = A * s[:, None] * s[None, :]
    Ms = M * s[:, None] * s[None, :]
    try:
        out = sla.eigh(As, Ms, eigvals_only=not vectors, driver="gvd", check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(f"NotPositiveDefinite: {exc}") from exc
    if vectors:
        vals, vecs = out
        return vals[:k], vecs[:, :k] * s[:, None]
    return out[:k]
