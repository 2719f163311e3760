"""Backend selection for the numerical kernels.

The compiled extension ``diracgap._kernels`` is used when it imports; otherwise
the pure-Python versions in ``diracgap._fallback`` are used. Setting the
environment variable ``DIRACGAP_PURE=1`` forces the fallback.
"""
from __future__ import annotations

import os

from . import _fallback

BACKEND = "python"
_impl = _fallback

if os.environ.get("DIRACGAP_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled  # type: ignore[attr-defined]
    except ImportError:  # pragma: no cover - depends on the build
        _compiled = None
    if _compiled is not None:
        _impl = _compiled
        BACKEND = "cython"


def available_backends() -> dict:
    out = {"python": _fallback}
    try:
        from . import _kernels as compiled  # type: ignore[attr-defined]

        out["cython"] = compiled
    except ImportError:  # pragma: no cover
        pass
    return out


def laurent_eval(edges, coeffs, r):
    return _impl.laurent_eval(edges, coeffs, r)


def band_gram(u, v, w):
    return _impl.band_gram(u, v, w)


def dirac_shoot(t0, t1, y0, kappa, energy, edges, coeffs, cap, rtol):
    return _impl.dirac_shoot(t0, t1, y0, kappa, energy, edges, coeffs, cap, rtol)
