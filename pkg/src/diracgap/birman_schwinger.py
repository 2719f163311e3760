"""Birman-Schwinger operators K_lam = sqrt(V) (D0 - lam)^-1 sqrt(V) on a periodic spinor grid.

Fields are complex arrays of shape (4, N, N, N). The free resolvent is applied
exactly in momentum space, where (D0(p) - lam)^-1 = (alpha.p + beta + lam) / (p^2 + 1 - lam^2).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import fft
from scipy.linalg import eigh_tridiagonal
from scipy.sparse.linalg import LinearOperator, eigsh

from .errors import NotRadial, Stagnation, ValidationError
from .measure import ChargeMeasure
from .radial import check_gap

SIGMA = np.array([[[0, 1], [1, 0]], [[0, -1j], [1j, 0]], [[1, 0], [0, -1]]], dtype=complex)
ALPHA = np.array([np.block([[np.zeros((2, 2)), s], [s, np.zeros((2, 2))]]) for s in SIGMA])
BETA = np.diag([1.0, 1.0, -1.0, -1.0]).astype(complex)
RESIDUAL_TARGET = 1e-6
TIX_FACTOR = (np.pi / 2 + 2 / np.pi) / 2


@dataclass(frozen=True)
class SpinorGrid:
    """Periodic box [-L, L)^3 with N points per axis and momenta (pi / L) * integers."""

    L: float
    N: int
    workers: int = 1

    def __post_init__(self):
        if self.N < 4 or self.N & (self.N - 1):
            raise ValueError(f"N must be a power of two >= 4, got {self.N}")
        if not self.L > 0:
            raise ValueError("L must be positive")

    @property
    def spacing(self) -> float:
        return 2.0 * self.L / self.N

    @property
    def cell_volume(self) -> float:
        return self.spacing**3

    def axis(self) -> np.ndarray:
        return -self.L + self.spacing * np.arange(self.N)

    def points(self) -> np.ndarray:
        """Node coordinates with shape (N, N, N, 3)."""
        x = self.axis()
        return np.stack(np.meshgrid(x, x, x, indexing="ij"), axis=-1)

    def momenta(self) -> np.ndarray:
        """Momentum lattice with shape (3, N, N, N) in FFT ordering."""
        k = np.pi / self.L * fft.fftfreq(self.N, 1.0 / self.N)
        return np.stack(np.meshgrid(k, k, k, indexing="ij"))

    def zeros(self) -> np.ndarray:
        return np.zeros((4, self.N, self.N, self.N), dtype=complex)

    def random_field(self, seed: int) -> np.ndarray:
        rng = np.random.default_rng(seed)
        shape = (4, self.N, self.N, self.N)
        return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)

    def inner(self, phi: np.ndarray, psi: np.ndarray) -> complex:
        return complex(self.cell_volume * np.vdot(phi, psi))

    def norm(self, psi: np.ndarray) -> float:
        return float(np.sqrt(self.inner(psi, psi).real))

    def to_momentum(self, psi: np.ndarray) -> np.ndarray:
        return fft.fftn(psi, axes=(1, 2, 3), norm="ortho", workers=self.workers)

    def to_position(self, psi_hat: np.ndarray) -> np.ndarray:
        return fft.ifftn(psi_hat, axes=(1, 2, 3), norm="ortho", workers=self.workers)

    @cached_property
    def _lattice(self):
        p = self.momenta()
        return p, (p * p).sum(axis=0)

    def _multiply(self, h: np.ndarray, shift: float) -> np.ndarray:
        """(alpha.p + beta + shift) h for a momentum-space field h."""
        (px, py, pz), _ = self._lattice
        pm, pp = px - 1j * py, px + 1j * py
        out = np.empty_like(h)
        # alpha.p swaps upper and lower pairs through sigma.p
        out[0] = pz * h[2] + pm * h[3] + (1.0 + shift) * h[0]
        out[1] = pp * h[2] - pz * h[3] + (1.0 + shift) * h[1]
        out[2] = pz * h[0] + pm * h[1] + (shift - 1.0) * h[2]
        out[3] = pp * h[0] - pz * h[1] + (shift - 1.0) * h[3]
        return out

    def apply_symbol(self, psi: np.ndarray, lam: float, sign: float = 1.0) -> np.ndarray:
        """Multiply by alpha.p + beta + sign * lam in momentum space."""
        return self.to_position(self._multiply(self.to_momentum(psi), sign * lam))

    def apply_free_dirac(self, psi: np.ndarray, lam: float = 0.0) -> np.ndarray:
        """(D0 - lam) psi."""
        return self.apply_symbol(psi, lam, sign=-1.0)

    def apply_abs_p(self, psi: np.ndarray) -> np.ndarray:
        return self.to_position(np.sqrt(self._lattice[1]) * self.to_momentum(psi))


def apply_free_resolvent(grid: SpinorGrid, psi: np.ndarray, lam: float) -> np.ndarray:
    """(D0 - lam)^-1 psi via the exact 4x4 momentum-space inverse."""
    check_gap(lam)
    denom = grid._lattice[1] + (1.0 - lam * lam)
    return grid.to_position(grid._multiply(grid.to_momentum(psi), lam) / denom)


@dataclass(frozen=True)
class TruncatedPotentialField:
    """Nodal values of min(V, cap) and their square roots."""

    values: np.ndarray = field(repr=False)
    sqrt_values: np.ndarray = field(repr=False)
    cap: float

    @classmethod
    def from_values(cls, values: np.ndarray, cap: float = np.inf) -> "TruncatedPotentialField":
        if not cap > 0:
            raise ValueError("cap must be positive")
        v = np.minimum(np.asarray(values, dtype=float), cap)
        if np.any(v < 0):
            raise ValidationError("the potential must be nonnegative")
        return cls(v, np.sqrt(v), float(cap))

    @classmethod
    def from_measure(cls, grid: SpinorGrid, mu: ChargeMeasure, cap: float = np.inf) -> "TruncatedPotentialField":
        """Sample V_mu on the grid; measures with atoms are rejected."""
        if mu.atom_weights():
            raise ValidationError("point charges have an unbounded sqrt(V) and are not grid-representable")
        if not mu.is_nonnegative():
            raise ValidationError("the measure must be nonnegative")
        pts = grid.points().reshape(-1, 3)
        v = mu.potential(pts).reshape(grid.N, grid.N, grid.N)
        return cls.from_values(v, cap)

    @classmethod
    def zero(cls, grid: SpinorGrid) -> "TruncatedPotentialField":
        return cls.from_values(np.zeros((grid.N,) * 3), 1.0)


def apply_bs_operator(grid: SpinorGrid, psi: np.ndarray, lam: float,
                      potential: TruncatedPotentialField) -> np.ndarray:
    """sqrt(V) (D0 - lam)^-1 sqrt(V) psi."""
    s = potential.sqrt_values
    return s * apply_free_resolvent(grid, s * psi, lam)


@dataclass
class NormEstimate:
    estimate: float
    residual: float
    trace: list = field(default_factory=list)
    matvecs: int = 0


def _lanczos(apply, v0: np.ndarray, steps: int):
    """Lanczos with full reorthogonalisation; returns (Ritz values, Ritz vectors, residuals)."""
    shape = v0.shape
    Q = np.empty((steps + 1, v0.size), dtype=complex)
    a = np.zeros(steps)
    b = np.zeros(steps)
    Q[0] = v0.reshape(-1) / np.linalg.norm(v0)
    m = steps
    for j in range(steps):
        w = apply(Q[j].reshape(shape)).reshape(-1)
        a[j] = np.vdot(Q[j], w).real
        for _ in range(2):
            w -= Q[: j + 1].T @ (Q[: j + 1].conj() @ w)
        b[j] = np.linalg.norm(w)
        if b[j] < 1e-14 * max(1.0, abs(a[j])):
            m = j + 1
            break
        Q[j + 1] = w / b[j]
    theta, S = eigh_tridiagonal(a[:m], b[: m - 1]) if m > 1 else (a[:1], np.ones((1, 1)))
    res = np.abs(b[m - 1] * S[-1, :])
    vecs = (S.T @ Q[:m]).reshape((-1,) + shape)
    return theta, vecs, res


def norm_estimate(grid: SpinorGrid, lam: float, potential: TruncatedPotentialField,
                  iterations: int = 60, seed: int = 0, restarts: int = 8) -> NormEstimate:
    """Largest singular value of K_lam from restarted Lanczos on K_lam^2.

    Each cycle runs ``iterations`` steps and restarts from the top Ritz vector; the
    trace holds the top Ritz value square root after every cycle.
    """
    if iterations < 50:
        raise ValueError("iterations must be at least 50")
    check_gap(lam)
    if not np.any(potential.values > 0):
        return NormEstimate(0.0, 0.0, [0.0], 0)
    K = lambda x: apply_bs_operator(grid, x, lam, potential)  # noqa: E731
    K2 = lambda x: K(K(x))  # noqa: E731
    v = grid.random_field(seed) * potential.sqrt_values
    trace = []
    matvecs = 0
    for _ in range(restarts):
        theta, vecs, res = _lanczos(K2, v, iterations)
        matvecs += 2 * len(theta)
        top = theta[-1]
        rel = float(res[-1] / top)
        trace.append(float(np.sqrt(top)))
        if rel <= RESIDUAL_TARGET:
            return NormEstimate(trace[-1], rel, trace, matvecs)
        v = vecs[-1]
    raise Stagnation(f"Stagnation: Ritz residual {rel:.2e} above {RESIDUAL_TARGET:g} "
                     f"after {restarts} cycles of {iterations} steps")


@dataclass
class BSReport:
    lam: float
    eigenvalue: float
    defect: float
    localization_radius: float
    nearby: np.ndarray
    converged: bool


def birman_schwinger_check(mu: ChargeMeasure, lambda1: float, L: float = 30.0, N: int = 64,
                           n_eigs: int = 6, seed: int = 0, tol: float = 1e-8, workers: int = 1) -> BSReport:
    """Eigenvalue of K_lambda1 closest to 1 for a bounded radial measure.

    The largest algebraic eigenvalues of K are found by implicitly restarted Lanczos;
    the localization radius is the rms radius of the eigenvector.
    """
    if mu.atom_weights():
        raise ValidationError("birman_schwinger_check needs a measure without atoms")
    center = mu.common_center()
    if center is None:
        raise NotRadial("birman_schwinger_check needs a radial measure")
    grid = SpinorGrid(L, N, workers)
    shifted = ChargeMeasure(tuple(_recenter(c, np.asarray(center)) for c in mu.components))
    pot = TruncatedPotentialField.from_measure(grid, shifted)
    check_gap(lambda1)
    shape = (4, N, N, N)
    size = int(np.prod(shape))

    def matvec(x):
        return apply_bs_operator(grid, x.reshape(shape), lambda1, pot).reshape(-1)

    op = LinearOperator((size, size), matvec=matvec, dtype=complex)
    v0 = (grid.random_field(seed) * pot.sqrt_values).reshape(-1)
    try:
        vals, vecs = eigsh(op, k=n_eigs, which="LA", v0=v0, tol=tol)
        converged = True
    except Exception as exc:  # ArpackNoConvergence carries partial results
        vals = getattr(exc, "eigenvalues", None)
        vecs = getattr(exc, "eigenvectors", None)
        if vals is None or len(vals) == 0:
            raise Stagnation(f"Stagnation: Lanczos failed for K at lambda={lambda1}: {exc}") from exc
        converged = False
    i = int(np.argmin(np.abs(vals - 1.0)))
    vec = vecs[:, i].reshape(shape)
    dens = (np.abs(vec) ** 2).sum(axis=0)
    r2 = (grid.points() ** 2).sum(axis=-1)
    radius = float(np.sqrt((dens * r2).sum() / dens.sum()))
    return BSReport(float(lambda1), float(vals[i]), float(abs(vals[i] - 1.0)), radius, np.sort(vals), converged)


def _recenter(component, center):
    from dataclasses import replace

    return replace(component, center=tuple(np.asarray(component.center, dtype=float) - center))


def kato_grid_margin(grid: SpinorGrid, psi: np.ndarray, potential: TruncatedPotentialField,
                     constant: float = np.pi / 2, slack: float = 0.05) -> float:
    """constant (1 + slack) <psi, |p| psi> - <psi, V psi> on the grid."""
    kin = grid.inner(psi, grid.apply_abs_p(psi)).real
    pot = grid.cell_volume * float((potential.values * (np.abs(psi) ** 2).sum(axis=0)).sum())
    return constant * (1.0 + slack) * kin - pot


def smooth_test_field(grid: SpinorGrid, seed: int, width: float | None = None) -> np.ndarray:
    """Seeded sum of Gaussian bumps well inside the box."""
    rng = np.random.default_rng(seed)
    pts = grid.points()
    w = width if width is not None else grid.L / 8
    out = grid.zeros()
    for _ in range(3):
        c = rng.uniform(-grid.L / 4, grid.L / 4, 3)
        s = w * rng.uniform(0.5, 1.5)
        g = np.exp(-((pts - c) ** 2).sum(axis=-1) / (2 * s * s))
        coef = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        out += coef[:, None, None, None] * g
    return out
