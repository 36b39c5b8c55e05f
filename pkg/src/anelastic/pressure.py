"""Projected pressure operator ``div P_m(rho grad .)`` and its solves.

Because rho depends on z only, the operator does not couple different k1.
It is stored as ``m + 1`` dense ``(m+1) x (m+1)`` blocks (``A_k1 = A_-k1``),
which is exactly the dense gauge-fixed matrix reordered; :meth:`PressureSystem.dense`
rebuilds that matrix in mode-set order.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .density import EVEN, ODD, ConstantDensity
from .errors import IncompatibleRHS, SingularSystem
from .kernels import advect
from .spectral import SpectralField, mode_set, wavenumbers, z_multiplier

COMPAT_TOL = 1e-10
MAX_CONDITION = 1e14


def _pad_identity(mat):
    out = mat.copy()
    out[0, :] = 0.0
    out[:, 0] = 0.0
    out[0, 0] = 1.0
    return out


@dataclass
class DensityOperators:
    """Matrices of ``g -> P_m(rho g)`` along z, shared by every k1.

    Attributes
    ----------
    mc, ms : ndarray, shape (m+1, m+1)
        Cosine and sine multipliers (``ms`` padded with 1 at the unused k2 = 0 slot).
    tc, ts : ndarray, shape (m+1, 2m+1)
        Same maps applied to band-``2m`` products.
    """

    m: int
    r: np.ndarray
    mc: np.ndarray
    ms: np.ndarray
    tc: np.ndarray
    ts: np.ndarray

    @classmethod
    def build(cls, profile, m):
        if not profile.inf > 0:
            raise SingularSystem("density must be bounded away from zero to assemble the Galerkin operators")
        r = profile.cosine_coefficients(3 * m)
        return cls(
            m=m,
            r=r,
            mc=z_multiplier(r, m, m, EVEN),
            ms=_pad_identity(z_multiplier(r, m, m, ODD)),
            tc=z_multiplier(r, m, 2 * m, EVEN),
            ts=z_multiplier(r, m, 2 * m, ODD),
        )

    @cached_property
    def mc_inv(self):
        return np.linalg.inv(self.mc)

    @cached_property
    def ms_inv(self):
        return np.linalg.inv(self.ms)

    def apply(self, coeffs, parity):
        """``P_m(rho f)`` for an ``(2m+1, m+1)`` coefficient array."""
        mat = self.mc if parity is EVEN else self.ms
        out = coeffs @ mat.T
        if parity is ODD:
            out[:, 0] = 0.0
        return out

    def solve(self, coeffs, parity):
        mat = self.mc_inv if parity is EVEN else self.ms_inv
        out = coeffs @ mat.T
        if parity is ODD:
            out[:, 0] = 0.0
        return out


def gradient(p):
    """``(dx p, dz p)`` coefficient arrays of an even field."""
    k1, k2 = wavenumbers(p.shape[1] - 1)
    return 1j * np.pi * k1 * p, -np.pi * k2 * p


def divergence(f, g):
    """Coefficients of ``dx f + dz g`` for even ``f`` and odd ``g``."""
    k1, k2 = wavenumbers(f.shape[1] - 1)
    return 1j * np.pi * k1 * f + np.pi * k2 * g


class PressureSystem:
    """Gauge-fixed operator ``b -> div P_m(rho grad b)`` with a factorization.

    Parameters
    ----------
    ops : DensityOperators
    """

    def __init__(self, ops):
        self.ops = ops
        self.m = m = ops.m
        k = np.diag(np.arange(m + 1, dtype=float))
        blocks = np.empty((m + 1, m + 1, m + 1))
        for k1 in range(m + 1):
            blocks[k1] = -np.pi**2 * (k1**2 * ops.mc + k @ ops.ms @ k)
        self.blocks = blocks
        gauged = blocks.copy()
        gauged[0] = _pad_identity(blocks[0])
        self._gauged = gauged
        try:
            inv = np.linalg.inv(gauged)
        except np.linalg.LinAlgError as exc:
            raise SingularSystem(f"pressure operator is singular at m={m}") from exc
        if not np.all(np.isfinite(inv)):
            raise SingularSystem(f"pressure operator is singular at m={m}")
        self._inv = inv
        cond = self.condition_number
        if not np.isfinite(cond) or cond > MAX_CONDITION:
            raise SingularSystem(f"pressure operator condition number {cond:.3e} too large")
        idx = np.abs(np.arange(-m, m + 1))
        self._full = gauged[idx]
        self._full_inv = inv[idx]

    @classmethod
    def assemble(cls, profile, m):
        return cls(DensityOperators.build(profile, m))

    @cached_property
    def condition_number(self):
        """2-norm condition number of the gauge-fixed operator."""
        sv = [np.linalg.svd(self.blocks[0][1:, 1:], compute_uv=False)] if self.m > 0 else []
        sv += [np.linalg.svd(b, compute_uv=False) for b in self.blocks[1:]]
        if not sv:
            return 1.0
        sv = np.concatenate(sv)
        return float(sv.max() / sv.min()) if sv.min() > 0 else np.inf

    def apply(self, b):
        """Operator applied to an ``(2m+1, m+1)`` coefficient array."""
        return np.einsum("kij,kj->ki", self._full, b)

    def solve(self, rhs):
        """Zero-mean pressure coefficients solving ``A b = rhs``.

        Raises
        ------
        IncompatibleRHS
            If the (0, 0) component of ``rhs`` is not zero.
        """
        rhs = np.asarray(rhs.coeffs if isinstance(rhs, SpectralField) else rhs, dtype=complex)
        m = self.m
        if abs(rhs[m, 0]) > COMPAT_TOL:
            raise IncompatibleRHS(f"rhs mean {abs(rhs[m, 0]):.3e} is not zero; rhs must be a divergence")
        rhs = rhs.copy()
        rhs[m, 0] = 0.0
        b = np.einsum("kij,kj->ki", self._full_inv, rhs)
        # one step of iterative refinement
        b += np.einsum("kij,kj->ki", self._full_inv, rhs - self.apply(b))
        b[m, 0] = 0.0
        return b

    def solve_field(self, rhs):
        return SpectralField(EVEN, self.solve(rhs), check=False)

    def residual(self, b, rhs):
        """Relative residual ``|A b - rhs| / |rhs|`` (max norm)."""
        rhs = np.asarray(rhs)
        scale = max(np.max(np.abs(rhs)), np.finfo(float).tiny)
        return float(np.max(np.abs(self.apply(b) - rhs)) / scale)

    def dense(self):
        """Gauge-fixed real matrix in mode-set order with the (0, 0) mode removed."""
        m = self.m
        modes = [mk for mk in mode_set(m).modes if mk != (0, 0)]
        pos = {mk: i for i, mk in enumerate(modes)}
        n = len(modes)
        mat = np.zeros((n, n))
        for (k1, k2), i in pos.items():
            row = self.blocks[abs(k1)][k2]
            for j in range(m + 1):
                col = pos.get((k1, j))
                if col is not None:
                    mat[i, col] = row[j]
        return mat

    def dump(self, path):
        """Write :meth:`dense` as row-major little-endian float64."""
        self.dense().astype("<f8").tofile(path)


def nonlinear_term(v, w, ops):
    """``P_m(rho u.grad u)`` from dealiased products; returns even and odd arrays."""
    gv, gw = advect(v, w)
    nv = gv @ ops.tc.T
    nw = gw @ ops.ts.T
    nw[:, 0] = 0.0
    return nv, nw


def pressure_rhs(v, w, ops, nonlinear=None):
    """Right side ``div(Lap u - P_m(rho u.grad u))`` of the pressure equation.

    Parameters
    ----------
    v, w : ndarray
        Even and odd velocity coefficient arrays at resolution m.
    ops : DensityOperators
    nonlinear : tuple of ndarray, optional
        Precomputed ``P_m(rho u.grad u)`` components.
    """
    m = v.shape[1] - 1
    k1, k2 = wavenumbers(m)
    lap = -np.pi**2 * (k1**2 + k2**2)
    nv, nw = nonlinear if nonlinear is not None else nonlinear_term(v, w, ops)
    rhs = divergence(lap * v - nv, lap * w - nw)
    rhs[m, 0] = 0.0
    return rhs


def solve_initial_pressure(v, w, profile, m, system=None):
    """Pressure at time zero for band-limited initial velocity ``(v, w)``.

    Returns
    -------
    SpectralField
        Even, zero-mean pressure.
    """
    system = system or PressureSystem.assemble(profile, m)
    return system.solve_field(pressure_rhs(v, w, system.ops))


def unit_system(m):
    """Pressure system for rho = 1 (the Laplacian)."""
    return PressureSystem.assemble(ConstantDensity(1.0), m)
