"""Multicenter point-charge molecules in a Gaussian two-spinor basis.

Basis functions are ``g_a(x) e_s`` with scalar Gaussians g_a and spinor index
s in {0, 1}. Using sigma_m sigma_n = delta_mn + i eps_mnk sigma_k,

    (sigma.grad b_i)^* (sigma.grad b_j) = grad g_a . grad g_b delta_st
                                         + i (grad g_a x grad g_b) . sigma_st,

so A(lam) needs the real matrices K = int w grad g_a . grad g_b and
L_k = int w (grad g_a x grad g_b)_k with w = 1 / (1 + lam + V), taken on a
Becke grid, plus the analytic overlap and attraction matrices.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import AtomTooHeavy, DegenerateBasis, DiracGapError, ValidationError
from .gaussians import GaussianFunction, attraction_matrix, overlap_matrix, shell_functions
from .grids import BeckeGrid, build_becke_grid
from .measure import ChargeMeasure, PointCharge
from .radial import check_gap

DEFAULT_BASIS = {"J": 14, "beta": 3.0, "l_max": 1, "alpha0": 0.02}
DEFAULT_GRID = {"radial_n": 80, "angular_n": 110}

PAULI = np.array([
    [[0, 1], [1, 0]],
    [[0, -1j], [1j, 0]],
    [[1, 0], [0, -1]],
], dtype=complex)
PRUNE_THRESHOLD = 1e-8


@dataclass(frozen=True)
class MoleculeSpec:
    centers: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        C = np.atleast_2d(np.asarray(self.centers, dtype=float))
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        if C.ndim != 2 or C.shape[1] != 3 or C.shape[0] != w.size or w.size == 0:
            raise ValidationError("molecule needs one weight per 3-vector center")
        for c, nu in zip(C, w):
            if abs(nu) >= 1.0:
                raise AtomTooHeavy(c, nu)
            if not nu > 0.0:
                raise ValidationError(f"nuclear weights must lie in (0, 1), got {nu}")
        if C.shape[0] > 1 and self._dmin(C) <= 0.0:
            raise ValidationError("molecule centers must be pairwise distinct")
        object.__setattr__(self, "centers", C)
        object.__setattr__(self, "weights", w)

    @staticmethod
    def _dmin(C: np.ndarray) -> float:
        D = np.linalg.norm(C[:, None] - C[None, :], axis=-1)
        return float(np.min(D[np.triu_indices(C.shape[0], 1)]))

    @property
    def n_centers(self) -> int:
        return self.centers.shape[0]

    @property
    def d_min(self) -> float:
        return self._dmin(self.centers) if self.n_centers > 1 else float("inf")

    @property
    def total_charge(self) -> float:
        return float(self.weights.sum())

    def nuclear_repulsion(self) -> float:
        u = 0.0
        for i in range(self.n_centers):
            for j in range(i + 1, self.n_centers):
                u += self.weights[i] * self.weights[j] / np.linalg.norm(self.centers[i] - self.centers[j])
        return float(u)

    def measure(self) -> ChargeMeasure:
        return ChargeMeasure(tuple(PointCharge(c, w) for c, w in zip(self.centers, self.weights)))

    def potential(self, points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        out = np.zeros(pts.shape[:-1])
        for c, w in zip(self.centers, self.weights):
            out += w / np.linalg.norm(pts - c, axis=-1)
        return out

    def translated(self, shift) -> "MoleculeSpec":
        return MoleculeSpec(self.centers + np.asarray(shift, dtype=float), self.weights)

    def scaled_to(self, d: float) -> "MoleculeSpec":
        """Same shape with smallest internuclear distance d (about the centroid)."""
        if self.n_centers == 1:
            return self
        mid = self.centers.mean(axis=0)
        return MoleculeSpec(mid + (self.centers - mid) * (d / self.d_min), self.weights)


@dataclass
class MolecularBasis:
    functions: list
    center_index: np.ndarray
    exponents: np.ndarray
    l_values: np.ndarray
    overlap: np.ndarray
    transform: np.ndarray
    condition_number: float
    scalar_dimension_before: int

    @property
    def dimension_before_pruning(self) -> int:
        return 2 * self.scalar_dimension_before

    @property
    def dimension(self) -> int:
        return 2 * self.transform.shape[1]


def even_tempered(alpha0: float, beta: float, J: int) -> np.ndarray:
    """Exponents alpha0 beta^j, j = 0..J, returned in decreasing order."""
    return (alpha0 * beta ** np.arange(J + 1))[::-1]


def _canonical(S: np.ndarray, threshold: float) -> tuple[np.ndarray, float]:
    evals, evecs = np.linalg.eigh(S)
    cond = float(evals[-1] / evals[0]) if evals[0] > 0 else float("inf")
    keep = evals > threshold * evals[-1]
    return evecs[:, keep] / np.sqrt(evals[keep]), cond


def build_molecular_basis(spec: MoleculeSpec, J: int = 14, beta: float = 3.0, l_max: int = 1,
                          alpha0: float = 0.02, threshold: float = PRUNE_THRESHOLD) -> MolecularBasis:
    """Even-tempered Gaussians times real solid harmonics on every center."""
    if J < 4:
        raise ValueError(f"J must be >= 4, got {J}")
    if not beta > 1.0:
        raise ValueError(f"beta must exceed 1, got {beta}")
    if not (0 <= l_max <= 2):
        raise ValueError("l_max must be 0, 1 or 2")
    funcs, cidx, expo, lval = [], [], [], []
    exps = even_tempered(alpha0, beta, J)
    for k, c in enumerate(spec.centers):
        for a in exps:
            for l in range(l_max + 1):
                for f in shell_functions(a, c, l):
                    funcs.append(f)
                    cidx.append(k)
                    expo.append(a)
                    lval.append(l)
    cidx = np.array(cidx)
    S = overlap_matrix(funcs)
    for k in range(spec.n_centers):
        block = S[np.ix_(cidx == k, cidx == k)]
        if _canonical(block, threshold)[0].shape[1] == 0:
            raise DegenerateBasis(f"DegenerateBasis: pruning removed every function on center {k}")
    X, cond = _canonical(S, threshold)
    if X.shape[1] == 0:
        raise DegenerateBasis("DegenerateBasis: pruning removed every function")
    return MolecularBasis(funcs, cidx, np.array(expo), np.array(lval), S, X, cond, len(funcs))


@dataclass
class MolecularPencil:
    """q_lambda on the pruned two-spinor Gaussian space; the mass matrix is the identity."""

    spec: MoleculeSpec
    basis: MolecularBasis
    grid: BeckeGrid
    grads: np.ndarray = field(repr=False)
    v_nodes: np.ndarray = field(repr=False)
    P: np.ndarray = field(repr=False)
    S: np.ndarray = field(repr=False)
    channel: str = "multicenter"
    degeneracy: int = 1

    @property
    def dimension(self) -> int:
        return self.basis.dimension

    def mass(self) -> np.ndarray:
        return np.eye(self.dimension)

    def scalar_blocks(self, lam: float):
        """K and (L_x, L_y, L_z) in the unpruned scalar basis."""
        check_gap(lam)
        w = self.grid.weights / (1.0 + lam + self.v_nodes)
        G = self.grads
        WG = G * w[None, :, None]
        K = sum(G[m].T @ WG[m] for m in range(3))
        L = []
        for m in range(3):
            a, b = (m + 1) % 3, (m + 2) % 3
            cross = G[a].T @ WG[b]
            L.append(cross - cross.T)
        K = 0.5 * (K + K.T)
        return K, L

    def matrix_at(self, lam: float) -> np.ndarray:
        K, L = self.scalar_blocks(lam)
        X = self.basis.transform
        scalar = X.T @ (K + (1.0 - lam) * self.S - self.P) @ X
        A = np.kron(scalar, np.eye(2)).astype(complex)
        for m in range(3):
            A += 1j * np.kron(X.T @ L[m] @ X, PAULI[m])
        return 0.5 * (A + A.conj().T)


def assemble_molecular_pencil(spec: MoleculeSpec, basis: MolecularBasis, grid: BeckeGrid) -> MolecularPencil:
    C = spec.centers
    dmin = np.min(np.linalg.norm(grid.points[:, None, :] - C[None], axis=-1))
    if dmin < 1e-14:
        from .errors import QuadratureNodeOnCenter

        raise QuadratureNodeOnCenter("QuadratureNodeOnCenter: grid node on a nucleus")
    n = len(basis.functions)
    grads = np.empty((3, grid.size, n))
    for i, f in enumerate(basis.functions):
        _, g = f.value_and_gradient(grid.points)
        grads[:, :, i] = g.T
    v = spec.potential(grid.points)
    P = attraction_matrix(basis.functions, C, spec.weights)
    return MolecularPencil(spec, basis, grid, grads, v, P, basis.overlap)


def molecular_matrices(spec, basis, grid, lam):
    """(A(lam), M) for the molecular pencil; M is the identity after canonical orthogonalisation."""
    pencil = assemble_molecular_pencil(spec, basis, grid)
    return pencil.matrix_at(lam), pencil.mass()


def default_grid_for(spec: MoleculeSpec, basis: MolecularBasis, radial_n: int = 80,
                     angular_n: int = 110) -> BeckeGrid:
    """Becke grid whose radial range covers the basis exponents."""
    amax, amin = float(basis.exponents.max()), float(basis.exponents.min())
    r_inner = 0.02 / np.sqrt(amax)
    r_outer = 12.0 / np.sqrt(amin)
    return build_becke_grid(spec.centers, radial_n, angular_n, r_inner, r_outer)


def molecular_ground_level(spec: MoleculeSpec, basis_opts: dict | None = None,
                           grid_opts: dict | None = None, tol: float = 1e-10):
    """lambda_1 of the molecular pencil with its basis; returns (MinMaxLevel, MolecularBasis)."""
    from .minmax import find_level

    basis = build_molecular_basis(spec, **{**DEFAULT_BASIS, **(basis_opts or {})})
    grid = default_grid_for(spec, basis, **{**DEFAULT_GRID, **(grid_opts or {})})
    pencil = assemble_molecular_pencil(spec, basis, grid)
    return find_level(pencil, 1, tol=tol), basis


@dataclass
class PESRecord:
    d: float
    lambda1: float
    u_nuc: float
    total: float
    basis_dim: int
    residual: float
    status: str


def pes_sweep(spec_template: MoleculeSpec, separations: Sequence[float], basis_opts: dict | None = None,
              grid_opts: dict | None = None, tol: float = 1e-10, pool=None) -> list[PESRecord]:
    """lambda_1 and lambda_1 + U_nuc along a family of geometries scaled to each separation.

    A failing point is recorded with its error name in ``status`` and the sweep goes on.
    ``pool`` may be any object with an ordered ``map``.
    """
    seps = [float(d) for d in separations]
    if any(not d > 0 for d in seps):
        raise ValidationError("separations must be positive")
    job = _PESJob(spec_template, basis_opts, grid_opts, tol)
    mapper = pool.map if pool is not None else map
    return list(mapper(job, seps))


@dataclass(frozen=True)
class _PESJob:
    template: MoleculeSpec
    basis_opts: dict | None
    grid_opts: dict | None
    tol: float

    def __call__(self, d: float) -> PESRecord:
        nan = float("nan")
        try:
            spec = self.template.scaled_to(d)
            u = spec.nuclear_repulsion()
        except DiracGapError as exc:
            return PESRecord(d, nan, nan, nan, 0, nan, type(exc).__name__)
        try:
            level, basis = molecular_ground_level(spec, self.basis_opts, self.grid_opts, self.tol)
        except DiracGapError as exc:
            return PESRecord(d, nan, u, nan, 0, nan, type(exc).__name__)
        return PESRecord(d, level.value, u, level.value + u, basis.dimension, level.residual, "ok")


def conjecture_gap(records: Sequence[PESRecord], spec: MoleculeSpec) -> float:
    """min_d lambda_1(d) - sqrt(1 - (sum nu)^2) over successful points (an observation, nan if none)."""
    vals = [r.lambda1 for r in records if r.status == "ok"]
    total = spec.total_charge
    if not vals or total >= 1.0:
        return float("nan")
    return float(min(vals) - np.sqrt(1.0 - total**2))


def continuity_flags(records: Sequence[PESRecord], factor: float = 10.0) -> list[float]:
    """Separations where |Delta lambda_1| / Delta d exceeds ``factor`` times the median slope."""
    ok = sorted((r.d, r.lambda1) for r in records if r.status == "ok")
    if len(ok) < 3:
        return []
    d, lam = np.array(ok).T
    slope = np.abs(np.diff(lam)) / np.diff(d)
    ref = np.median(slope)
    return [float(d[i + 1]) for i in np.nonzero(slope > factor * max(ref, 1e-300))[0]]


def lemma5_margin(spec: MoleculeSpec, lam: float, trials: Sequence, radial_n: int = 96,
                  angular_n: int = 302) -> np.ndarray:
    """q_lam(phi) minus the localized multi-center lower bound, for each trial spinor.

    The bound is (1 - nu^2) int |sigma.grad phi|^2 / (2 + V)
    - (2 lam + 2 (M-1) nu / d + kappa / (d^2 (1 + lam))) ||phi||^2 with nu the largest
    weight, d the smallest distance and kappa measured on the ball partition. With one
    center the d-terms are dropped. Norms and Coulomb terms are analytic; the two
    weighted kinetic integrals use a Becke grid over the nuclei and the trial centers.
    """
    from .inequalities import sigma_grad_sq
    from .partitions import BallPartition

    check_gap(lam)
    nu = float(spec.weights.max())
    M = spec.n_centers
    if M > 1:
        d = spec.d_min
        kappa = BallPartition(spec.centers).kappa()
        shift = 2.0 * (M - 1) * nu / d + kappa / (d * d * (1.0 + lam))
    else:
        shift = 0.0
    mu = spec.measure()
    out = []
    for phi in trials:
        if not phi.funcs:
            out.append(0.0)
            continue
        prims = [p for p, _ in phi.primitives]
        extra = np.array([p.center for p in prims])
        centers = np.unique(np.round(np.vstack([spec.centers, extra]), 12), axis=0)
        amax = max(p.alpha for p in prims)
        amin = min(p.alpha for p in prims)
        grid = build_becke_grid(centers, radial_n, angular_n, 0.02 / np.sqrt(amax), 14.0 / np.sqrt(amin))
        v = spec.potential(grid.points)
        sg, _ = sigma_grad_sq(phi, grid.points)
        kin = grid.integrate(sg / (1.0 + lam + v))
        kin2 = grid.integrate(sg / (2.0 + v))
        n2 = phi.norm2()
        q = kin + (1.0 - lam) * n2 - phi.measure_coulomb(mu)
        bound = (1.0 - nu * nu) * kin2 - (2.0 * lam + shift) * n2
        out.append(q - bound)
    return np.array(out)
