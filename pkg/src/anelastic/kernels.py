"""Hot-loop kernels with a compiled backend and a numpy fallback.

The compiled extension ``anelastic._kernels`` is used when it was built and
importable; set ``ANELASTIC_PURE_PYTHON=1`` to force the numpy path.
"""

import os
from functools import lru_cache

import numpy as np

from . import _advect_numpy

try:
    if os.environ.get("ANELASTIC_PURE_PYTHON", "") not in ("", "0"):
        raise ImportError("pure-python backend requested")
    from . import _kernels
except ImportError:
    _kernels = None

BACKEND = "cython" if _kernels is not None else "numpy"
BACKENDS = ("cython", "numpy") if _kernels is not None else ("numpy",)

# Above this resolution the BLAS-backed matmuls beat the fused loops
# (see benchmarks/bench_kernels.py).
COMPILED_MAX_M = 8


class AdvectionPlan:
    """Basis tables for the dealiased advection kernel at resolution ``m``.

    The x grid has ``3m + 2`` points and the z grid ``2m + 2`` points, enough
    to analyze band-``2m`` products exactly to ``|k1| <= m`` and ``k2 <= 2m``.
    """

    def __init__(self, m):
        self.m = m
        self.nx = 3 * m + 2
        self.nz = 2 * m + 2
        x = 2.0 * np.arange(self.nx) / self.nx
        z = np.arange(self.nz) / (self.nz - 1)
        wz = np.full(self.nz, 1.0 / (self.nz - 1))
        wz[[0, -1]] *= 0.5
        k1 = np.arange(-m, m + 1)
        k2 = np.arange(m + 1)
        n = np.arange(2 * m + 1)

        self.zc = np.ascontiguousarray(np.cos(np.pi * np.outer(z, k2)))
        self.zs = np.ascontiguousarray(np.sin(np.pi * np.outer(z, k2)))
        self.zc_dz = -np.pi * k2 * self.zs
        self.zs_dz = np.pi * k2 * self.zc
        self.x_synth = np.exp(1j * np.pi * np.outer(x, k1))
        self.x_synth_dx = self.x_synth * (1j * np.pi * k1)
        self.x_anal = np.conj(self.x_synth).T / self.nx
        fac = np.where(n > 0, 2.0, 1.0)
        self.zc_anal = np.ascontiguousarray(wz[:, None] * np.cos(np.pi * np.outer(z, n)) * fac)
        self.zs_anal = np.ascontiguousarray(wz[:, None] * np.sin(np.pi * np.outer(z, n)) * fac)
        kp = np.arange(m + 1)
        self.xc = np.ascontiguousarray(np.cos(np.pi * np.outer(x, kp)))
        self.xs = np.ascontiguousarray(np.sin(np.pi * np.outer(x, kp)))


@lru_cache(maxsize=16)
def advection_plan(m):
    return AdvectionPlan(m)


def _advect_cython(plan, v, w):
    m = plan.m
    half_v, half_w = v[m:], w[m:]
    out = _kernels.advect_half(
        np.ascontiguousarray(half_v.real), np.ascontiguousarray(half_v.imag),
        np.ascontiguousarray(half_w.real), np.ascontiguousarray(half_w.imag),
        plan.zc, plan.zs, plan.xc, plan.xs, plan.zc_anal, plan.zs_anal,
    )
    gv = np.empty((2 * m + 1, 2 * m + 1), complex)
    gw = np.empty_like(gv)
    gv[m:] = out[0] + 1j * out[1]
    gw[m:] = out[2] + 1j * out[3]
    gv[:m] = np.conj(gv[:m:-1])
    gw[:m] = np.conj(gw[:m:-1])
    gv[m].imag = 0.0
    gw[m].imag = 0.0
    return gv, gw


def advect(v, w, backend=None):
    """Dealiased ``(v vx + w vz, v wx + w wz)`` coefficients.

    Parameters
    ----------
    v, w : ndarray, shape (2m+1, m+1)
        Even (cos) and odd (sin) coefficient arrays.
    backend : {"cython", "numpy"}, optional
        Defaults to the backend selected at import for ``m <= COMPILED_MAX_M``
        and to numpy above it.

    Returns
    -------
    gv, gw : ndarray, shape (2m+1, 2m+1)
        Coefficients for ``|k1| <= m`` and ``0 <= k2 <= 2m`` (cos and sin basis).
    """
    m = v.shape[1] - 1
    if backend is None:
        backend = BACKEND if m <= COMPILED_MAX_M else "numpy"
    plan = advection_plan(m)
    if backend == "cython":
        if _kernels is None:
            raise RuntimeError("compiled kernels are not available")
        return _advect_cython(plan, v, w)
    if backend != "numpy":
        raise ValueError(f"unknown backend {backend!r}")
    return _advect_numpy.advect(plan, v, w)
