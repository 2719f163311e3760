"""Numerical checks of Kato, Hardy-Dirac, V_mu-norm embedding, the (1+V)^alpha
gradient bound, and the pointwise IMS identity on closed-form trial spinors.

Trial spinors are finite sums of s- and p-type Cartesian Gaussians with C^2
coefficients. Norms, gradient norms and Coulomb terms are analytic;
momentum-space expectations reduce to one radial integral per primitive pair;
only the weighted gradient integrals use adaptive spherical quadrature.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.special import spherical_jn

from .errors import (
    PartitionNotUnity,
    QuadratureFailure,
    SeriesTruncationError,
    ValidationError,
)
from .gaussians import GaussianFunction, Primitive, attraction, overlap
from .grids import lebedev
from .measure import ChargeMeasure
from .partitions import Partition

KATO_CONSTANT = np.pi / 2
QUAD_TOL = 1e-10
# (points per radial panel, Lebedev size) for successive refinement levels
_SPHERE_LEVELS = ((16, 194), (24, 302), (32, 590), (48, 974), (64, 1454))


# ---------------------------------------------------------------------------
# Trial spinors
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TrialFunction:
    """phi(x) = sum_a g_a(x) c_a with real Gaussians g_a and c_a in C^2."""

    funcs: tuple[GaussianFunction, ...]
    coefs: np.ndarray  # shape (n, 2), complex
    seed: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "funcs", tuple(self.funcs))
        c = np.asarray(self.coefs, dtype=complex).reshape(len(self.funcs), 2)
        object.__setattr__(self, "coefs", c)

    @classmethod
    def random(cls, seed: int, n_terms: int | None = None, center_radius: float = 1.0,
               exponent_range=(0.3, 3.0), p_fraction: float = 0.4) -> "TrialFunction":
        rng = np.random.default_rng(seed)
        n = int(rng.integers(1, 4)) if n_terms is None else int(n_terms)
        funcs = []
        for _ in range(n):
            alpha = float(np.exp(rng.uniform(*np.log(exponent_range))))
            v = rng.normal(size=3)
            center = v / np.linalg.norm(v) * center_radius * rng.uniform() ** (1 / 3)
            powers = (0, 0, 0)
            if rng.uniform() < p_fraction:
                axis = int(rng.integers(3))
                powers = tuple(1 if a == axis else 0 for a in range(3))
            funcs.append(GaussianFunction((Primitive(1.0, alpha, tuple(center), powers),)))
        coefs = rng.normal(size=(n, 2)) + 1j * rng.normal(size=(n, 2))
        return cls(tuple(funcs), coefs, seed)

    @classmethod
    def zero(cls) -> "TrialFunction":
        return cls((GaussianFunction((Primitive(1.0, 1.0, (0.0, 0.0, 0.0), (0, 0, 0)),)),),
                   np.zeros((1, 2)))

    def scaled(self, c: complex) -> "TrialFunction":
        return TrialFunction(self.funcs, c * self.coefs, self.seed)

    def dilated(self, t: float) -> "TrialFunction":
        """x -> t^{3/2} phi(t x), which keeps the L^2 norm."""
        funcs = []
        for f in self.funcs:
            prims = []
            for p in f.prims:
                deg = sum(p.powers)
                center = tuple(np.asarray(p.center) / t)
                prims.append(Primitive(p.coef * t**1.5 * t**deg, p.alpha * t * t, center, p.powers))
            funcs.append(GaussianFunction(tuple(prims)))
        return TrialFunction(tuple(funcs), self.coefs, self.seed)

    @property
    def primitives(self) -> list[tuple[Primitive, np.ndarray]]:
        out = []
        for f, c in zip(self.funcs, self.coefs):
            for p in f.prims:
                out.append((p, c))
        return out

    def feature_radii(self, origin=(0.0, 0.0, 0.0)) -> list[float]:
        o = np.asarray(origin, dtype=float)
        radii = []
        for p, _ in self.primitives:
            d = float(np.linalg.norm(np.asarray(p.center) - o))
            w = 1.0 / np.sqrt(p.alpha)
            radii += [d, d - 2 * w, d + 2 * w, d + 4 * w]
        return radii

    def outer_radius(self, origin=(0.0, 0.0, 0.0)) -> float:
        o = np.asarray(origin, dtype=float)
        return max(float(np.linalg.norm(np.asarray(p.center) - o)) + 9.0 / np.sqrt(p.alpha)
                   for p, _ in self.primitives)

    # -- analytic quadratic forms ---------------------------------------------
    def _gram(self, kernel: Callable[[GaussianFunction, GaussianFunction], float]) -> float:
        n = len(self.funcs)
        G = np.zeros((n, n))
        for i in range(n):
            for j in range(i, n):
                G[i, j] = G[j, i] = kernel(self.funcs[i], self.funcs[j])
        c = self.coefs
        return float(np.real(np.einsum("as,ab,bs->", c.conj(), G, c)))

    def norm2(self) -> float:
        return self._gram(overlap)

    def grad_norm2(self) -> float:
        return self._gram(lambda f, g: sum(overlap(f.derivative(a), g.derivative(a)) for a in range(3)))

    def h1_norm2(self) -> float:
        return self.norm2() + self.grad_norm2()

    def coulomb(self, center=(0.0, 0.0, 0.0)) -> float:
        """<phi, |x - center|^{-1} phi>."""
        return self._gram(lambda f, g: attraction(f, g, center))

    def measure_coulomb(self, mu: ChargeMeasure) -> float:
        """<phi, V_mu phi> for a measure made of point charges (analytic)."""
        total = 0.0
        for comp in mu.components:
            if comp.kind != "point":
                raise ValidationError("analytic Coulomb terms need point charges")
            total += comp.weight * self.coulomb(comp.center)
        return total

    # -- pointwise values -----------------------------------------------------
    def values_and_gradients(self, points: np.ndarray):
        """phi (N, 2) and grad phi (N, 3, 2) at the points."""
        pts = np.asarray(points, dtype=float)
        phi = np.zeros((pts.shape[0], 2), dtype=complex)
        grad = np.zeros((pts.shape[0], 3, 2), dtype=complex)
        for f, c in zip(self.funcs, self.coefs):
            v, g = f.value_and_gradient(pts)
            phi += v[:, None] * c[None, :]
            grad += g[:, :, None] * c[None, None, :]
        return phi, grad


def sigma_dot(grad: np.ndarray) -> np.ndarray:
    """sigma . grad for grad of shape (N, 3, 2): returns (N, 2)."""
    gx, gy, gz = grad[:, 0], grad[:, 1], grad[:, 2]
    up = gz[:, 0] + gx[:, 1] - 1j * gy[:, 1]
    down = gx[:, 0] + 1j * gy[:, 0] - gz[:, 1]
    return np.stack([up, down], axis=1)


def sigma_grad_sq(phi: TrialFunction, points: np.ndarray):
    """|sigma . grad phi|^2 and |phi|^2 at the points."""
    val, grad = phi.values_and_gradients(points)
    sg = sigma_dot(grad)
    return np.sum(np.abs(sg) ** 2, axis=1), np.sum(np.abs(val) ** 2, axis=1)


# ---------------------------------------------------------------------------
# Momentum-space expectations
# ---------------------------------------------------------------------------

def _radial_transforms(c: float, R: float, f: Callable[[np.ndarray], np.ndarray], tol: float = 1e-13):
    """F, G1, G2 for one primitive pair (see module docstring of the tests)."""
    kmax = np.sqrt(60.0 / c)
    prev = None
    for n_pan in (8, 16, 32, 64, 128):
        x, w = np.polynomial.legendre.leggauss(24)
        edges = np.linspace(0.0, kmax, n_pan + 1)
        a, b = edges[:-1, None], edges[1:, None]
        k = (0.5 * (b - a) * x + 0.5 * (b + a)).ravel()
        wk = (0.5 * (b - a) * w).ravel()
        base = 4.0 * np.pi * f(k) * np.exp(-c * k * k) * wk
        z = k * R
        if R * kmax < 1e-3:
            j1z = 1.0 / 3.0 - z * z / 30.0
            j2z2 = 1.0 / 15.0 - z * z / 210.0
        else:
            safe = np.where(z > 1e-3, z, 1.0)
            j1z = np.where(z > 1e-3, spherical_jn(1, safe) / safe, 1.0 / 3.0 - z * z / 30.0)
            j2z2 = np.where(z > 1e-3, spherical_jn(2, safe) / safe**2, 1.0 / 15.0 - z * z / 210.0)
        F = np.sum(base * k**2 * spherical_jn(0, z))
        G1 = -np.sum(base * k**4 * j1z)
        G2 = np.sum(base * k**6 * j2z2)
        cur = np.array([F, G1, G2])
        if prev is not None and np.all(np.abs(cur - prev) <= tol * np.maximum(np.abs(cur), 1e-300) + 1e-300):
            return cur
        prev = cur
    if np.all(np.abs(cur - prev) <= 1e-10 * np.maximum(np.abs(cur), 1e-300) + 1e-300):
        return cur
    raise QuadratureFailure("QuadratureFailure: momentum radial integral did not converge")


def _pair_momentum(pa: Primitive, pb: Primitive, f) -> float:
    """<g_a, f(|p|) g_b> for s/p primitives."""
    a, b = pa.alpha, pb.alpha
    da, db = sum(pa.powers), sum(pb.powers)
    if da > 1 or db > 1:
        raise ValueError("momentum expectations support s and p primitives only")
    Rv = np.asarray(pa.center) - np.asarray(pb.center)
    R = float(np.linalg.norm(Rv))
    c = 0.25 / a + 0.25 / b
    F, G1, G2 = _radial_transforms(c, R, f)
    pref = (4.0 * a * b) ** -1.5 * pa.coef * pb.coef
    if da == 0 and db == 0:
        return pref * F
    if da == 1 and db == 0:
        m = pa.powers.index(1)
        return pref * Rv[m] * G1 / (2.0 * a)
    if da == 0 and db == 1:
        n = pb.powers.index(1)
        return -pref * Rv[n] * G1 / (2.0 * b)
    m, n = pa.powers.index(1), pb.powers.index(1)
    second = (G1 if m == n else 0.0) + Rv[m] * Rv[n] * G2
    return -pref * second / (4.0 * a * b)


def momentum_expectation(phi: TrialFunction, f: Callable[[np.ndarray], np.ndarray]) -> float:
    """<phi, f(|p|) phi> with p = -i grad."""
    prims = phi.primitives
    n = len(prims)
    T = np.zeros((n, n))
    for i in range(n):
        for j in range(i, n):
            T[i, j] = T[j, i] = _pair_momentum(prims[i][0], prims[j][0], f)
    c = np.array([cc for _, cc in prims])
    return float(np.real(np.einsum("as,ab,bs->", c.conj(), T, c)))


def abs_p(phi: TrialFunction) -> float:
    return momentum_expectation(phi, lambda k: k)


def h_half_norm2(phi: TrialFunction) -> float:
    """<phi, sqrt(1 - Laplacian) phi>."""
    return momentum_expectation(phi, lambda k: np.sqrt(1.0 + k * k))


# ---------------------------------------------------------------------------
# Adaptive spherical quadrature
# ---------------------------------------------------------------------------

def _panels(breaks: Sequence[float], r_out: float) -> np.ndarray:
    pts = sorted({0.0, r_out} | {float(b) for b in breaks if 0.0 < b < r_out})
    edges = [pts[0]]
    for b in pts[1:]:
        # split long panels so no panel is much wider than its distance scale
        span = b - edges[-1]
        pieces = max(1, int(np.ceil(span / 0.75)))
        edges.extend(np.linspace(edges[-1], b, pieces + 1)[1:])
    edges = np.array(edges)
    keep = np.concatenate([[True], np.diff(edges) > 1e-9])
    return edges[keep]


def spherical_integrals(integrand: Callable[[np.ndarray, np.ndarray], np.ndarray], origin,
                        breaks: Sequence[float], r_out: float, tol: float = QUAD_TOL) -> np.ndarray:
    """Integrals over R^3 of a vector-valued integrand about ``origin``.

    ``integrand(points, r)`` returns shape (n_quantities, N). Two successive
    refinement levels must agree to ``tol`` relative to the largest magnitude.
    """
    o = np.asarray(origin, dtype=float)
    edges = _panels(breaks, r_out)
    prev = None
    for nr, nang in _SPHERE_LEVELS:
        x, w = np.polynomial.legendre.leggauss(nr)
        a, b = edges[:-1, None], edges[1:, None]
        r = (0.5 * (b - a) * x + 0.5 * (b + a)).ravel()
        wr = (0.5 * (b - a) * w).ravel() * r**2
        ang, wang = lebedev(nang)
        pts = (r[:, None, None] * ang[None]).reshape(-1, 3) + o
        rr = np.repeat(r, ang.shape[0])
        vals = integrand(pts, rr)
        cur = (vals.reshape(vals.shape[0], r.size, ang.shape[0]) @ wang) @ wr
        if prev is not None:
            scale = max(np.max(np.abs(cur)), 1e-300)
            if np.max(np.abs(cur - prev)) <= tol * scale:
                return cur
        prev = cur
    raise QuadratureFailure(
        f"QuadratureFailure: spherical quadrature missed target {tol:g} "
        f"(last change {np.max(np.abs(cur - prev)):.2e})")


# ---------------------------------------------------------------------------
# Inequalities
# ---------------------------------------------------------------------------

def kato_margin(phi: TrialFunction, constant: float = KATO_CONSTANT) -> float:
    """(pi/2) <|p|> - <1/|x|>; nonnegative by Kato's inequality."""
    return constant * abs_p(phi) - phi.coulomb()


def hardy_dirac_margins(phi: TrialFunction, a_values: Sequence[float]) -> np.ndarray:
    """int |sigma.grad phi|^2 / (a + 1/|x|) + int (a - 1/|x|) |phi|^2 for each a."""
    a_values = np.asarray(a_values, dtype=float)
    if np.any(a_values < 0):
        raise ValueError("a must be nonnegative")

    def integrand(pts, r):
        sg, _ = sigma_grad_sq(phi, pts)
        return np.stack([sg * r / (a * r + 1.0) for a in a_values])

    weighted = spherical_integrals(integrand, (0, 0, 0), phi.feature_radii(), phi.outer_radius())
    return weighted + a_values * phi.norm2() - phi.coulomb()


def hardy_dirac_margin(phi: TrialFunction, a: float) -> float:
    return float(hardy_dirac_margins(phi, [a])[0])


def vmu_norm_and_embedding(phi: TrialFunction, mu: ChargeMeasure | None, validate: bool = True):
    """(norm^2, margin) with norm^2 = int |sigma.grad phi|^2/(1+V) + ||phi||^2.

    ``mu=None`` is the V = 0 surrogate. The margin subtracts
    ||phi||_{H^{1/2}}^2 / max(2, 16 mu(R^3)).
    """
    if mu is None:
        total = 0.0
        norm2 = phi.grad_norm2() + phi.norm2()
    else:
        if validate:
            mu.validate("solver")
        center = mu.common_center()
        if center is None:
            raise ValidationError("the embedding check needs a radial measure")
        pot = mu.radial_potential()
        total = mu.total_charge

        def integrand(pts, r):
            sg, _ = sigma_grad_sq(phi, pts)
            return (sg / (1.0 + pot(r)))[None]

        breaks = list(phi.feature_radii(center)) + list(pot.feature_radii)
        weighted = spherical_integrals(integrand, center, breaks, phi.outer_radius(center))[0]
        norm2 = float(weighted + phi.norm2())
    margin = norm2 - h_half_norm2(phi) / max(2.0, 16.0 * total)
    return float(norm2), float(margin)


# -- gradient bound for (1 + V)^alpha ----------------------------------------

def lemma9_constant(alpha: float, rtol: float = 1e-10, max_terms: int = 10_000_000) -> float:
    """4 pi alpha^2 (1 + sum_i 2^i / (1 + 2^{i-1})^{2 - 2 alpha}); 4 pi replaces 4 pi alpha^2 at alpha = 0."""
    if not alpha < 0.5:
        raise SeriesTruncationError(f"SeriesTruncationError: alpha={alpha} >= 1/2, the series diverges")
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    expo = 2.0 - 2.0 * alpha
    # partial sums; the term ratio decreases towards 2^{-(1 - 2 alpha)}, so the
    # tail after term n is at most t_{n+1} / (1 - t_{n+1}/t_n)
    total = 1.0
    term = 2.0 / (1.0 + 1.0) ** expo
    n = 1
    while n <= max_terms:
        total += term
        # t_{n+1}/t_n = 2 ((1 + 2^{n-1}) / (1 + 2^n))^expo, written to avoid overflow
        eps = 2.0 ** (-n)
        ratio = 2.0 * ((eps + 0.5) / (eps + 1.0)) ** expo
        nxt = term * ratio
        # early ratios can exceed 1; the bound only applies once they drop below
        tail = nxt / (1.0 - ratio) if ratio < 1.0 else np.inf
        if tail <= rtol * total:
            total += tail
            break
        term = nxt
        n += 1
    else:
        raise SeriesTruncationError("SeriesTruncationError: partial sums did not reach the target")
    pref = 4.0 * np.pi * (alpha**2 if alpha > 0 else 1.0)
    return float(pref * total)


def lemma9_integral(mu: ChargeMeasure, alpha: float) -> float:
    """int |grad (1 + V)^alpha|^2, or |grad log(1 + V)|^2 when alpha = 0, for a radial measure."""
    if mu.atom_weights():
        raise ValidationError("the gradient bound check needs a measure without atoms")
    pot = mu.radial_potential()
    q = mu.total_charge
    R = float(pot.edges[-1])
    fac = alpha**2 if alpha > 0 else 1.0
    # inside the support: Gauss-Legendre per piece, refined until stable
    edges = pot.edges
    prev = None
    for nq in (16, 32, 64, 128):
        x, w = np.polynomial.legendre.leggauss(nq)
        total = 0.0
        for a, b in zip(edges[:-1], edges[1:]):
            r = 0.5 * (b - a) * x + 0.5 * (b + a)
            Q = pot.enclosed_charge(r)
            V = pot(r)
            total += 0.5 * (b - a) * np.sum(w * Q**2 / r**2 * (1.0 + V) ** (2 * alpha - 2))
        if prev is not None and abs(total - prev) <= 1e-13 * max(abs(total), 1e-300):
            break
        prev = total
    inner = 4.0 * np.pi * fac * total
    # outside the support V = q / r exactly
    s = q / R if R > 0 else np.inf
    if alpha > 0:
        outer = 4.0 * np.pi * fac * q * ((1.0 + s) ** (2 * alpha - 1) - 1.0) / (2 * alpha - 1)
    else:
        outer = 4.0 * np.pi * q * (1.0 - 1.0 / (1.0 + s))
    return float(inner + outer)


def lemma9_check(mu: ChargeMeasure, alpha: float) -> tuple[float, float]:
    """(integral, C_alpha mu(R^3)); the first must not exceed the second."""
    mu.validate("solver")
    return lemma9_integral(mu, alpha), lemma9_constant(alpha) * mu.total_charge


# -- IMS localisation ----------------------------------------------------------

def ims_residual(phi: TrialFunction, partition: Partition, points: np.ndarray,
                 unity_tol: float = 1e-12) -> float:
    """Largest relative defect of the pointwise IMS identity over the points."""
    pts = np.asarray(points, dtype=float)
    J, gJ = partition.evaluate(pts)
    closure = np.sum(J**2, axis=1)
    if np.max(np.abs(closure - 1.0)) > unity_tol:
        raise PartitionNotUnity(
            f"PartitionNotUnity: sum J_k^2 deviates from 1 by {np.max(np.abs(closure - 1.0)):.3e}")
    val, grad = phi.values_and_gradients(pts)
    sg = sigma_dot(grad)
    base = np.sum(np.abs(sg) ** 2, axis=1)
    phi2 = np.sum(np.abs(val) ** 2, axis=1)
    gsum = np.sum(gJ**2, axis=(1, 2))
    loc = np.zeros(pts.shape[0])
    for k in range(J.shape[1]):
        # sigma . grad (J_k phi) = J_k sigma.grad phi + (sigma . grad J_k) phi
        prod = J[:, k, None, None] * grad + gJ[:, k, :, None] * val[:, None, :]
        loc += np.sum(np.abs(sigma_dot(prod)) ** 2, axis=1)
    lhs = loc
    rhs = base + phi2 * gsum
    scale = np.abs(lhs) + np.abs(rhs) + 1e-300
    return float(np.max(np.abs(lhs - rhs) / scale))
