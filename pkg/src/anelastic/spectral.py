"""Half-range trigonometric Galerkin spaces on the channel ``[0, 2) x [0, 1]``.

A field of parity ``EVEN`` is ``sum c[k1, k2] exp(i pi k1 x) cos(pi k2 z)``,
parity ``ODD`` uses ``sin(pi k2 z)``; indices run over ``-m <= k1 <= m``,
``0 <= k2 <= m``.  Coefficients are stored as a complex array of shape
``(2m + 1, m + 1)`` addressed by ``[k1 + m, k2]``.

Normalization: with this basis the L2 inner product over the channel is
``<f, g> = sum_k weight(k) c_k conj(d_k)`` with ``weight = 2`` for cosine
modes with ``k2 = 0`` and ``weight = 1`` otherwise (see :func:`l2_weights`).
"""

import json
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .density import EVEN, ODD, ExtensionParity
from .errors import GridTooCoarse, RealityViolation

REALITY_TOL = 1e-12


@dataclass(frozen=True)
class ModeSet:
    m: int

    @cached_property
    def modes(self):
        """``(k1, k2)`` pairs, ``k2`` outer and ``k1`` inner."""
        return [(k1, k2) for k2 in range(self.m + 1) for k1 in range(-self.m, self.m + 1)]

    def __len__(self):
        return (2 * self.m + 1) * (self.m + 1)

    @property
    def real_dimension(self):
        """Real dimension of the (v, w, p) space after the reality condition and gauge."""
        return 3 * len(self) - 1


def mode_set(m):
    if m < 0:
        raise ValueError("m must be non-negative")
    return ModeSet(int(m))


def wavenumbers(m):
    """Broadcastable ``(k1, k2)`` integer grids of shape ``(2m+1, 1)`` and ``(1, m+1)``."""
    return np.arange(-m, m + 1)[:, None], np.arange(m + 1)[None, :]


def l2_weights(m, parity):
    w = np.ones((2 * m + 1, m + 1))
    if ExtensionParity(parity) is EVEN:
        w[:, 0] = 2.0
    else:
        w[:, 0] = 0.0
    return w


def enforce_reality(c):
    """Symmetrize so that ``c[-k1] = conj(c[k1])`` holds exactly."""
    return 0.5 * (c + np.conj(c[::-1]))


def reality_defect(c):
    scale = max(1.0, float(np.max(np.abs(c), initial=0.0)))
    return float(np.max(np.abs(c - np.conj(c[::-1])), initial=0.0)) / scale


class SpectralField:
    """Immutable coefficient array of one parity class."""

    __slots__ = ("parity", "coeffs")

    def __init__(self, parity, coeffs, check=True):
        parity = ExtensionParity(parity)
        coeffs = np.array(coeffs, dtype=complex)
        if coeffs.ndim != 2 or coeffs.shape[0] != 2 * coeffs.shape[1] - 1:
            raise ValueError(f"coefficient array must have shape (2m+1, m+1), got {coeffs.shape}")
        if check:
            if reality_defect(coeffs) > REALITY_TOL:
                raise RealityViolation("coefficients violate c(k1,k2) = conj(c(-k1,k2))")
            if parity is ODD and np.max(np.abs(coeffs[:, 0])) > REALITY_TOL:
                raise RealityViolation("odd-parity field has content at k2 = 0")
        if parity is ODD:
            coeffs[:, 0] = 0.0
        coeffs.setflags(write=False)
        self.parity = parity
        self.coeffs = coeffs

    @classmethod
    def zeros(cls, parity, m):
        return cls(parity, np.zeros((2 * m + 1, m + 1), complex), check=False)

    @classmethod
    def from_modes(cls, parity, m, modes):
        """Build a field from ``{(k1, k2): value}``; conjugate partners are filled in."""
        c = np.zeros((2 * m + 1, m + 1), complex)
        for (k1, k2), val in modes.items():
            c[k1 + m, k2] += val
            if k1 != 0:
                c[-k1 + m, k2] += np.conj(val)
            else:
                c[m, k2] = c[m, k2].real
        return cls(parity, c)

    @property
    def m(self):
        return self.coeffs.shape[1] - 1

    def __getitem__(self, k):
        k1, k2 = k
        if abs(k1) > self.m or not 0 <= k2 <= self.m:
            return 0j
        return complex(self.coeffs[k1 + self.m, k2])

    def _like(self, coeffs, parity=None):
        return SpectralField(self.parity if parity is None else parity, coeffs, check=False)

    def __add__(self, other):
        if other.parity is not self.parity:
            raise ValueError("cannot add fields of different parity")
        m = max(self.m, other.m)
        return self._like(self.resized(m).coeffs + other.resized(m).coeffs)

    def __sub__(self, other):
        return self + other * -1.0

    def __mul__(self, scalar):
        return self._like(self.coeffs * scalar)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def resized(self, m):
        """Zero-pad or truncate to resolution ``m``."""
        if m == self.m:
            return self
        out = np.zeros((2 * m + 1, m + 1), complex)
        r = min(m, self.m)
        out[m - r : m + r + 1, : r + 1] = self.coeffs[self.m - r : self.m + r + 1, : r + 1]
        return self._like(out)

    def project(self, m):
        """Keep modes with ``max(|k1|, k2) <= m``."""
        if m > self.m:
            raise ValueError(f"cannot project a band-{self.m} field to m={m} > {self.m}")
        return self.resized(m)

    def dx(self):
        k1, _ = wavenumbers(self.m)
        return self._like(1j * np.pi * k1 * self.coeffs)

    def dz(self):
        _, k2 = wavenumbers(self.m)
        factor = -np.pi * k2 if self.parity is EVEN else np.pi * k2
        out = factor * self.coeffs
        if self.parity is ODD:
            out[:, 0] = 0.0  # sin(0) carried nothing
        return self._like(out, self.parity.flip())

    def laplacian(self):
        k1, k2 = wavenumbers(self.m)
        return self._like(-(np.pi**2) * (k1**2 + k2**2) * self.coeffs)

    def inner(self, other):
        """Real L2 inner product over the channel."""
        m = max(self.m, other.m)
        a, b = self.resized(m).coeffs, other.resized(m).coeffs
        return float(np.sum(l2_weights(m, self.parity) * (a * np.conj(b)).real))

    def norm(self):
        return np.sqrt(max(self.inner(self), 0.0))

    def max_abs(self):
        return float(np.max(np.abs(self.coeffs), initial=0.0))

    def to_json(self):
        """JSON array of ``[k1, k2, re, im]`` in mode-set order."""
        rows = [[k1, k2, self[k1, k2].real, self[k1, k2].imag] for k1, k2 in mode_set(self.m).modes]
        return json.dumps({"parity": self.parity.value, "m": self.m, "coefficients": rows})

    @classmethod
    def from_json(cls, text):
        data = json.loads(text)
        m = data["m"]
        c = np.zeros((2 * m + 1, m + 1), complex)
        for k1, k2, re, im in data["coefficients"]:
            c[k1 + m, k2] = re + 1j * im
        return cls(data["parity"], c)

    def __repr__(self):
        return f"SpectralField({self.parity.value}, m={self.m})"


@dataclass(frozen=True)
class PhysicalGrid:
    """Samples on ``x_j = 2 j / nx`` and ``z_i = i / (nz - 1)``.

    The z points are the half-range image of a uniform grid with
    ``2 (nz - 1)`` points per period, so the trapezoid weights below integrate
    ``cos(pi n z)`` exactly for ``|n| < 2 (nz - 1)``.
    """

    nx: int
    nz: int

    def __post_init__(self):
        if self.nx < 1 or self.nz < 2:
            raise GridTooCoarse("grid needs nx >= 1 and nz >= 2")

    @cached_property
    def x(self):
        return 2.0 * np.arange(self.nx) / self.nx

    @cached_property
    def z(self):
        return np.arange(self.nz) / (self.nz - 1)

    @cached_property
    def z_weights(self):
        w = np.full(self.nz, 1.0 / (self.nz - 1))
        w[[0, -1]] *= 0.5
        return w

    @property
    def x_weight(self):
        return 2.0 / self.nx

    @classmethod
    def for_band(cls, m):
        """Smallest grid with exact quadrature of band-``m`` fields."""
        return cls(2 * m + 2, m + 2)

    @classmethod
    def dealiased(cls, m):
        return cls(3 * m + 2, 3 * m + 2)

    def integrate(self, samples):
        return float(self.x_weight * np.sum(self.z_weights @ np.asarray(samples)))

    def exact_for(self, band, analyze_to=None):
        """Whether products of band ``band`` can be analyzed exactly up to ``analyze_to``."""
        top = band + (band if analyze_to is None else analyze_to)
        return top < self.nx and top < 2 * (self.nz - 1)


def _z_basis(z, k, parity):
    arg = np.pi * np.multiply.outer(z, k)
    return np.cos(arg) if ExtensionParity(parity) is EVEN else np.sin(arg)


def _x_basis(x, k):
    return np.exp(1j * np.pi * np.multiply.outer(x, k))


def synthesize(field, grid):
    """Evaluate ``field`` on ``grid``; returns real samples of shape ``(nz, nx)``."""
    m = field.m
    k = np.arange(-m, m + 1)
    zb = _z_basis(grid.z, np.arange(m + 1), field.parity)
    vals = zb @ field.coeffs.T @ _x_basis(grid.x, k).T
    return vals.real


def analyze(samples, grid, parity, m, band=None):
    """Coefficients up to resolution ``m`` of grid samples.

    ``band`` is the spectral band of the sampled field (default ``m``); the
    quadrature is exact only when ``band + m`` is resolved by the grid.

    Raises
    ------
    GridTooCoarse
        If the grid cannot integrate the needed products exactly.
    """
    band = m if band is None else band
    if not grid.exact_for(band, m):
        raise GridTooCoarse(f"grid {grid.nx}x{grid.nz} too coarse for band {band} -> m={m}")
    parity = ExtensionParity(parity)
    f = np.asarray(samples, dtype=float)
    k = np.arange(-m, m + 1)
    xb = np.conj(_x_basis(grid.x, k)) * (grid.x_weight / 2.0)
    zb = _z_basis(grid.z, np.arange(m + 1), parity) * grid.z_weights[:, None]
    c = (zb.T @ f @ xb).T
    # 1/2 from the x-period, 2 (or 1 at k2 = 0) from the half-range cos/sin norm
    c[:, 1:] *= 2.0
    if parity is ODD:
        c[:, 0] = 0.0
    return SpectralField(parity, enforce_reality(c), check=False)


def product_grid(m_out, band):
    """Grid on which a band-``band`` product is analyzed exactly to ``m_out``."""
    n = band + m_out + 1
    return PhysicalGrid(n + (n % 2), (n + 1) // 2 + 2)


def multiply_fields(a, b, m_out=None):
    """Coefficients of the pointwise product ``a * b``.

    The product of band-``m`` fields has band ``2m``; by default all of it is
    returned, computed on a grid fine enough that no mode aliases.
    """
    band = a.m + b.m
    m_out = band if m_out is None else m_out
    grid = product_grid(m_out, band)
    prod = synthesize(a, grid) * synthesize(b, grid)
    return analyze(prod, grid, a.parity * b.parity, m_out, band=band)


def convolution_product(a, b, m_out=None):
    """Brute-force product by explicit mode-pair expansion (test oracle, O(m^4))."""
    band = a.m + b.m
    m_out = band if m_out is None else m_out
    full = {}
    for p, fa in _exp_modes(a):
        for q, fb in _exp_modes(b):
            key = (p[0] + q[0], p[1] + q[1])
            full[key] = full.get(key, 0j) + fa * fb
    parity = a.parity * b.parity
    out = np.zeros((2 * m_out + 1, m_out + 1), complex)
    for (k1, n), val in full.items():
        if abs(k1) > m_out or abs(n) > m_out:
            continue
        # cos coefficient = e_n + e_-n, sin coefficient = i (e_n - e_-n)
        if parity is EVEN:
            out[k1 + m_out, abs(n)] += val
        elif n != 0:
            out[k1 + m_out, abs(n)] += 1j * val * np.sign(n)
    return SpectralField(parity, out, check=False)


def _exp_modes(f):
    """Expand into pure exponentials ``exp(i pi (k1 x + n z))``."""
    m = f.m
    for k1 in range(-m, m + 1):
        for k2 in range(m + 1):
            c = f.coeffs[k1 + m, k2]
            if c == 0:
                continue
            if f.parity is EVEN:
                if k2 == 0:
                    yield (k1, 0), c
                else:
                    yield (k1, k2), c / 2
                    yield (k1, -k2), c / 2
            else:
                if k2 > 0:
                    yield (k1, k2), c / 2j
                    yield (k1, -k2), -c / 2j


def z_multiplier(r, m_out, m_in, parity):
    """Matrix of ``g -> P(rho g)`` in z for ``rho = sum_j r_j cos(pi j z)``.

    Acts on the k2 index of parity-``parity`` coefficients; shape
    ``(m_out + 1, m_in + 1)``.  Entries need ``r_j`` for ``j <= m_out + m_in``.
    """
    need = m_out + m_in
    r = np.asarray(r, float)
    if r.size < need + 1:
        r = np.concatenate([r, np.zeros(need + 1 - r.size)])
    # two-sided exponential coefficients: rho_hat_0 = r_0, rho_hat_j = r_j / 2
    rh = 0.5 * r[: need + 1]
    rh[0] = r[0]
    k = np.arange(m_out + 1)[:, None]
    j = np.arange(m_in + 1)[None, :]
    diff = rh[np.abs(k - j)]
    summ = np.where(k + j <= need, rh[np.minimum(k + j, need)], 0.0)
    if ExtensionParity(parity) is EVEN:
        mat = diff + summ
        mat[0, :] = rh[j[0]]
    else:
        mat = diff - summ
        mat[0, :] = 0.0
        mat[:, 0] = 0.0
    return mat


def quadrature_project(func, parity, m, n=None):
    """``P_m f`` of a smooth function ``f(x, z)`` by fine trapezoid quadrature.

    ``f`` need not be band-limited; for functions whose symmetric extension is
    smooth the quadrature error decays faster than any power of ``n``.
    """
    n = max(8 * m + 8, 128) if n is None else n
    grid = PhysicalGrid(2 * n, n + 1)
    X, Z = np.meshgrid(grid.x, grid.z)
    return analyze(func(X, Z), grid, parity, m, band=0)
