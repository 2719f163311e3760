# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the hot kernels; see ``_fallback`` for the reference code."""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp, fabs, sqrt, log, isfinite, pow as cpow

cnp.import_array()


cdef inline Py_ssize_t _piece(const double[::1] edges, double r) noexcept nogil:
    cdef Py_ssize_t lo = 0, hi = edges.shape[0] - 1, mid
    if r >= edges[hi]:
        return hi
    while hi - lo > 1:
        mid = (lo + hi) >> 1
        if edges[mid] <= r:
            lo = mid
        else:
            hi = mid
    return lo


cdef inline double _laurent(const double[::1] edges, const double[:, ::1] coeffs, double r) noexcept nogil:
    cdef Py_ssize_t i = _piece(edges, r), j
    cdef Py_ssize_t w = coeffs.shape[1]
    cdef double acc = 0.0
    for j in range(w - 1, 0, -1):
        acc = acc * r + coeffs[i, j]
    if coeffs[i, 0] != 0.0:
        acc += coeffs[i, 0] / r
    return acc


def laurent_eval(const double[::1] edges, const double[:, ::1] coeffs, r):
    cdef const double[::1] rr = np.ascontiguousarray(r, dtype=np.float64)
    cdef Py_ssize_t n = rr.shape[0], k
    out = np.empty(n)
    cdef double[::1] o = out
    with nogil:
        for k in range(n):
            o[k] = _laurent(edges, coeffs, rr[k])
    return out


def band_gram(const double[:, :, ::1] u, const double[:, :, ::1] v, const double[:, ::1] w):
    cdef Py_ssize_t n_int = u.shape[0], nq = u.shape[1], order = u.shape[2]
    cdef Py_ssize_t i, q, a, d
    cdef double s1, s2
    band = np.zeros((order, n_int + order - 1))
    cdef double[:, ::1] b = band
    with nogil:
        for i in range(n_int):
            for a in range(order):
                for d in range(order - a):
                    s1 = 0.0
                    s2 = 0.0
                    for q in range(nq):
                        s1 += w[i, q] * u[i, q, a] * v[i, q, a + d]
                        s2 += w[i, q] * u[i, q, a + d] * v[i, q, a]
                    b[d, i + a] += 0.5 * (s1 + s2)
    return band


# Dormand-Prince 5(4) tableau
cdef double C2 = 1.0 / 5, C3 = 3.0 / 10, C4 = 4.0 / 5, C5 = 8.0 / 9
cdef double A21 = 1.0 / 5
cdef double A31 = 3.0 / 40, A32 = 9.0 / 40
cdef double A41 = 44.0 / 45, A42 = -56.0 / 15, A43 = 32.0 / 9
cdef double A51 = 19372.0 / 6561, A52 = -25360.0 / 2187, A53 = 64448.0 / 6561, A54 = -212.0 / 729
cdef double A61 = 9017.0 / 3168, A62 = -355.0 / 33, A63 = 46732.0 / 5247, A64 = 49.0 / 176, A65 = -5103.0 / 18656
cdef double B1 = 35.0 / 384, B3 = 500.0 / 1113, B4 = 125.0 / 192, B5 = -2187.0 / 6784, B6 = 11.0 / 84
cdef double E1 = 71.0 / 57600, E3 = -71.0 / 16695, E4 = 71.0 / 1920, E5 = -17253.0 / 339200, E6 = 22.0 / 525, E7 = -1.0 / 40


cdef inline void _rhs(double t, double f, double g, double kappa, double energy,
                      const double[::1] edges, const double[:, ::1] coeffs, double cap,
                      double* df, double* dg) noexcept nogil:
    cdef double r = exp(t)
    cdef double v = _laurent(edges, coeffs, r)
    if cap > 0.0 and v > cap:
        v = cap
    df[0] = -kappa * f + r * (1.0 + energy + v) * g
    dg[0] = kappa * g - r * (energy - 1.0 + v) * f


def dirac_shoot(double t0, double t1, y0, double kappa, double energy,
                const double[::1] edges, const double[:, ::1] coeffs, double cap, double rtol):
    cdef double f = float(y0[0]), g = float(y0[1])
    cdef double nrm = sqrt(f * f + g * g)
    f /= nrm
    g /= nrm
    cdef double direction = 1.0 if t1 >= t0 else -1.0
    cdef double span = fabs(t1 - t0)
    cdef double t = t0, h, err, sc, fac, fn, gn
    cdef double k1f, k1g, k2f, k2g, k3f, k3g, k4f, k4g, k5f, k5g, k6f, k6g, k7f, k7g
    cdef double ef, eg
    cdef long steps = 0
    cdef int done = 0
    if span == 0.0:
        return np.array([f, g])
    h = direction * min(span, 1e-3)
    with nogil:
        _rhs(t, f, g, kappa, energy, edges, coeffs, cap, &k1f, &k1g)
        while not done:
            if direction * (t + h - t1) >= 0.0:
                h = t1 - t
            _rhs(t + C2 * h, f + h * A21 * k1f, g + h * A21 * k1g,
                 kappa, energy, edges, coeffs, cap, &k2f, &k2g)
            _rhs(t + C3 * h, f + h * (A31 * k1f + A32 * k2f), g + h * (A31 * k1g + A32 * k2g),
                 kappa, energy, edges, coeffs, cap, &k3f, &k3g)
            _rhs(t + C4 * h, f + h * (A41 * k1f + A42 * k2f + A43 * k3f),
                 g + h * (A41 * k1g + A42 * k2g + A43 * k3g),
                 kappa, energy, edges, coeffs, cap, &k4f, &k4g)
            _rhs(t + C5 * h, f + h * (A51 * k1f + A52 * k2f + A53 * k3f + A54 * k4f),
                 g + h * (A51 * k1g + A52 * k2g + A53 * k3g + A54 * k4g),
                 kappa, energy, edges, coeffs, cap, &k5f, &k5g)
            _rhs(t + h, f + h * (A61 * k1f + A62 * k2f + A63 * k3f + A64 * k4f + A65 * k5f),
                 g + h * (A61 * k1g + A62 * k2g + A63 * k3g + A64 * k4g + A65 * k5g),
                 kappa, energy, edges, coeffs, cap, &k6f, &k6g)
            fn = f + h * (B1 * k1f + B3 * k3f + B4 * k4f + B5 * k5f + B6 * k6f)
            gn = g + h * (B1 * k1g + B3 * k3g + B4 * k4g + B5 * k5g + B6 * k6g)
            _rhs(t + h, fn, gn, kappa, energy, edges, coeffs, cap, &k7f, &k7g)
            ef = h * (E1 * k1f + E3 * k3f + E4 * k4f + E5 * k5f + E6 * k6f + E7 * k7f)
            eg = h * (E1 * k1g + E3 * k3g + E4 * k4g + E5 * k5g + E6 * k6g + E7 * k7g)
            # error measured against the norm of the state: only the direction matters
            sc = rtol * sqrt(fn * fn + gn * gn)
            err = sqrt(ef * ef + eg * eg) / sc
            if err <= 1.0:
                if t + h == t1 or direction * (t + h - t1) >= 0.0:
                    done = 1
                t = t + h
                nrm = sqrt(fn * fn + gn * gn)
                f = fn / nrm
                g = gn / nrm
                k1f = k7f / nrm
                k1g = k7g / nrm
            if err == 0.0:
                fac = 5.0
            else:
                fac = 0.9 * cpow(err, -0.2)
                if fac > 5.0:
                    fac = 5.0
                if fac < 0.2:
                    fac = 0.2
            if not done:
                h = h * fac
            steps += 1
            if steps > 10000000 or not isfinite(f) or not isfinite(g):
                break
    if not done or not isfinite(f) or not isfinite(g):
        raise FloatingPointError("radial integration failed")
    return np.array([f, g])
