"""Cartesian Gaussian functions and their analytic integrals.

A :class:`GaussianFunction` is a finite sum of primitives
``c * (x-A)^i (y-A)^j (z-A)^k * exp(-alpha |x-A|^2)``. Overlaps and Coulomb
attraction integrals use the McMurchie-Davidson Hermite expansion.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special

SQRT_PI = np.sqrt(np.pi)


@dataclass(frozen=True)
class Primitive:
    coef: float
    alpha: float
    center: tuple[float, float, float]
    powers: tuple[int, int, int]


@dataclass(frozen=True)
class GaussianFunction:
    """Real scalar function given as a sum of Cartesian Gaussian primitives."""

    prims: tuple[Primitive, ...]

    def __add__(self, other: "GaussianFunction") -> "GaussianFunction":
        return GaussianFunction(self.prims + other.prims)

    def scaled(self, t: float) -> "GaussianFunction":
        return GaussianFunction(tuple(Primitive(t * p.coef, p.alpha, p.center, p.powers) for p in self.prims))

    def derivative(self, axis: int) -> "GaussianFunction":
        out = []
        for p in self.prims:
            pw = list(p.powers)
            if pw[axis] > 0:
                lower = pw.copy()
                lower[axis] -= 1
                out.append(Primitive(p.coef * pw[axis], p.alpha, p.center, tuple(lower)))
            upper = pw.copy()
            upper[axis] += 1
            out.append(Primitive(-2.0 * p.alpha * p.coef, p.alpha, p.center, tuple(upper)))
        return GaussianFunction(tuple(out))

    def gradient(self) -> tuple["GaussianFunction", "GaussianFunction", "GaussianFunction"]:
        return self.derivative(0), self.derivative(1), self.derivative(2)

    def __call__(self, points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        out = np.zeros(pts.shape[:-1])
        for p in self.prims:
            d = pts - np.asarray(p.center)
            r2 = np.einsum("...i,...i->...", d, d)
            poly = d[..., 0] ** p.powers[0] * d[..., 1] ** p.powers[1] * d[..., 2] ** p.powers[2]
            out += p.coef * poly * np.exp(-p.alpha * r2)
        return out

    def value_and_gradient(self, points: np.ndarray):
        """f and grad f at an (N, 3) array of points."""
        pts = np.asarray(points, dtype=float)
        val = np.zeros(pts.shape[0])
        grad = np.zeros((pts.shape[0], 3))
        for p in self.prims:
            d = pts - np.asarray(p.center)
            e = p.coef * np.exp(-p.alpha * np.einsum("ij,ij->i", d, d))
            mono = [d[:, a] ** p.powers[a] for a in range(3)]
            poly = mono[0] * mono[1] * mono[2]
            val += poly * e
            for a in range(3):
                n = p.powers[a]
                others = mono[(a + 1) % 3] * mono[(a + 2) % 3]
                dpoly = (n * d[:, a] ** (n - 1) if n > 0 else 0.0) * others
                grad[:, a] += (dpoly - 2.0 * p.alpha * d[:, a] * poly) * e
        return val, grad


def primitive(alpha: float, center, powers=(0, 0, 0), coef: float = 1.0) -> GaussianFunction:
    c = tuple(float(v) for v in center)
    return GaussianFunction((Primitive(float(coef), float(alpha), c, tuple(int(p) for p in powers)),))


# -- real solid harmonics (unnormalised) --------------------------------------

def solid_harmonic_terms(l: int) -> list[list[tuple[float, tuple[int, int, int]]]]:
    """Real solid harmonics r^l Y_lm as Cartesian polynomials, l <= 2."""
    if l == 0:
        return [[(1.0, (0, 0, 0))]]
    if l == 1:
        return [[(1.0, (1, 0, 0))], [(1.0, (0, 1, 0))], [(1.0, (0, 0, 1))]]
    if l == 2:
        return [
            [(1.0, (1, 1, 0))],
            [(1.0, (0, 1, 1))],
            [(1.0, (1, 0, 1))],
            [(1.0, (2, 0, 0)), (-1.0, (0, 2, 0))],
            [(2.0, (0, 0, 2)), (-1.0, (2, 0, 0)), (-1.0, (0, 2, 0))],
        ]
    raise ValueError("solid harmonics are implemented for l <= 2")


def shell_functions(alpha: float, center, l: int) -> list[GaussianFunction]:
    """Normalised Gaussians r^l Y_lm exp(-alpha r^2) for all m."""
    out = []
    c = tuple(float(v) for v in center)
    for terms in solid_harmonic_terms(l):
        f = GaussianFunction(tuple(Primitive(coef, float(alpha), c, pw) for coef, pw in terms))
        out.append(f.scaled(1.0 / np.sqrt(overlap(f, f))))
    return out


# -- Boys function -----------------------------------------------------------

def boys(nmax: int, T: float) -> np.ndarray:
    """F_n(T) for n = 0..nmax."""
    n = np.arange(nmax + 1)
    if T < 1e-12:
        return 1.0 / (2 * n + 1) - T / (2 * n + 3)
    if T < 30.0:
        return special.hyp1f1(n + 0.5, n + 1.5, -T) / (2 * n + 1)
    a = n + 0.5
    return special.gamma(a) * special.gammainc(a, T) / (2.0 * T**a)


# -- McMurchie-Davidson ------------------------------------------------------

def hermite_E(i: int, j: int, a: float, b: float, Ax: float, Bx: float) -> np.ndarray:
    """Hermite expansion coefficients E^{ij}_t, t = 0..i+j, for one Cartesian axis."""
    p = a + b
    mu = a * b / p
    Px = (a * Ax + b * Bx) / p
    XPA, XPB = Px - Ax, Px - Bx
    E = np.zeros((i + 1, j + 1, i + j + 2))
    E[0, 0, 0] = np.exp(-mu * (Ax - Bx) ** 2)
    for ii in range(i + 1):
        for jj in range(j + 1):
            if ii == 0 and jj == 0:
                continue
            for t in range(ii + jj + 1):
                if ii > 0:
                    prev = E[ii - 1, jj]
                    val = XPA * prev[t] + (t + 1) * prev[t + 1]
                else:
                    prev = E[ii, jj - 1]
                    val = XPB * prev[t] + (t + 1) * prev[t + 1]
                if t > 0:
                    val += prev[t - 1] / (2.0 * p)
                E[ii, jj, t] = val
    return E[i, j, : i + j + 1]


def hermite_R(tmax: int, umax: int, vmax: int, p: float, PC: np.ndarray) -> np.ndarray:
    """Hermite Coulomb integrals R_{tuv} for exponent p and displacement P - C."""
    nmax = tmax + umax + vmax
    T = p * float(PC @ PC)
    F = boys(nmax, T)
    R = np.zeros((nmax + 1, tmax + 1, umax + 1, vmax + 1))
    R[:, 0, 0, 0] = (-2.0 * p) ** np.arange(nmax + 1) * F
    X, Y, Z = PC
    for n in range(nmax - 1, -1, -1):
        for t in range(tmax + 1):
            for u in range(umax + 1):
                for v in range(vmax + 1):
                    if t + u + v == 0 or t + u + v > nmax - n:
                        continue
                    if t > 0:
                        val = X * R[n + 1, t - 1, u, v]
                        if t > 1:
                            val += (t - 1) * R[n + 1, t - 2, u, v]
                    elif u > 0:
                        val = Y * R[n + 1, t, u - 1, v]
                        if u > 1:
                            val += (u - 1) * R[n + 1, t, u - 2, v]
                    else:
                        val = Z * R[n + 1, t, u, v - 1]
                        if v > 1:
                            val += (v - 1) * R[n + 1, t, u, v - 2]
                    R[n, t, u, v] = val
    return R[0]


def _prim_overlap(pa: Primitive, pb: Primitive) -> float:
    a, b = pa.alpha, pb.alpha
    out = 1.0
    for ax in range(3):
        out *= hermite_E(pa.powers[ax], pb.powers[ax], a, b, pa.center[ax], pb.center[ax])[0]
    return out * (np.pi / (a + b)) ** 1.5


def _prim_attraction(pa: Primitive, pb: Primitive, C) -> float:
    a, b = pa.alpha, pb.alpha
    p = a + b
    A, B = np.asarray(pa.center), np.asarray(pb.center)
    P = (a * A + b * B) / p
    Ex = hermite_E(pa.powers[0], pb.powers[0], a, b, A[0], B[0])
    Ey = hermite_E(pa.powers[1], pb.powers[1], a, b, A[1], B[1])
    Ez = hermite_E(pa.powers[2], pb.powers[2], a, b, A[2], B[2])
    R = hermite_R(Ex.size - 1, Ey.size - 1, Ez.size - 1, p, P - np.asarray(C, dtype=float))
    val = np.einsum("t,u,v,tuv->", Ex, Ey, Ez, R)
    return 2.0 * np.pi / p * val


def overlap(f: GaussianFunction, g: GaussianFunction) -> float:
    """Integral of f g over R^3."""
    return float(sum(pa.coef * pb.coef * _prim_overlap(pa, pb) for pa in f.prims for pb in g.prims))


def attraction(f: GaussianFunction, g: GaussianFunction, C) -> float:
    """Integral of f g / |x - C| over R^3."""
    return float(sum(pa.coef * pb.coef * _prim_attraction(pa, pb, C) for pa in f.prims for pb in g.prims))


def gradient_overlap(f: GaussianFunction, g: GaussianFunction) -> float:
    """Integral of grad f . grad g."""
    return float(sum(overlap(f.derivative(a), g.derivative(a)) for a in range(3)))


def overlap_matrix(funcs) -> np.ndarray:
    n = len(funcs)
    S = np.zeros((n, n))
    for i in range(n):
        for j in range(i, n):
            S[i, j] = S[j, i] = overlap(funcs[i], funcs[j])
    return S


def attraction_matrix(funcs, centers, weights) -> np.ndarray:
    """Matrix of integral f_i f_j sum_m w_m / |x - R_m|."""
    n = len(funcs)
    P = np.zeros((n, n))
    for i in range(n):
        for j in range(i, n):
            P[i, j] = P[j, i] = sum(w * attraction(funcs[i], funcs[j], c) for c, w in zip(centers, weights))
    return P
