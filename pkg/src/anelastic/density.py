"""Background density profiles and the symmetric-periodic extension.

Every profile lives on the channel ``z in [0, 1]`` and is extended evenly
across ``z = 0`` and periodically with period 2, so it is fully described by
a cosine series in ``pi k z``.  The flow solver only ever sees a profile
through :meth:`DensityProfile.cosine_coefficients`, which is computed by
composite Gauss quadrature on the profile's smooth pieces.
"""

import enum
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.interpolate import BPoly

from .errors import BlendNotMonotone, OddParityNonzeroAtOrigin, ValidationError
from .quadrature import dyadic_breaks, gauss_panels, refine

MONOTONE_SCAN_POINTS = 4096


class ExtensionParity(enum.Enum):
    """Symmetry class in z about both walls."""

    EVEN = "even"
    ODD = "odd"

    def __mul__(self, other):
        if not isinstance(other, ExtensionParity):
            return NotImplemented
        return ExtensionParity.EVEN if self is other else ExtensionParity.ODD

    def flip(self):
        return ExtensionParity.ODD if self is ExtensionParity.EVEN else ExtensionParity.EVEN


EVEN = ExtensionParity.EVEN
ODD = ExtensionParity.ODD


class DensityProfile:
    """Base class: subclasses supply ``derivatives`` and ``breakpoints``."""

    kind = "abstract"

    def __call__(self, z):
        return self.derivatives(z)[0]

    def derivatives(self, z):
        """Return ``(rho, rho', rho'')`` at ``z``."""
        raise NotImplementedError

    @property
    def breakpoints(self):
        """Points in [0, 1] where the profile is only finitely smooth."""
        return np.array([0.0, 1.0])

    @property
    def inf(self):
        z = np.linspace(0.0, 1.0, 4097)
        return float(np.min(self(z)))

    def quadrature(self, max_width=0.125, order=32):
        """Composite Gauss rule on [0, 1] aligned with :attr:`breakpoints`."""
        return gauss_panels(refine(self.breakpoints, max_width), order)

    def cosine_coefficients(self, n):
        """Coefficients ``r_0..r_n`` of ``rho(z) = sum_j r_j cos(pi j z)``."""
        k = np.arange(n + 1)
        width = min(0.125, 4.0 / max(n, 1))
        z, w = self.quadrature(max_width=width)
        basis = np.cos(np.pi * np.outer(k, z))
        r = 2.0 * basis @ (w * self(z))
        r[0] *= 0.5
        return r

    def describe(self):
        return {"kind": self.kind}


class ConstantDensity(DensityProfile):
    kind = "constant"

    def __init__(self, value=1.0):
        if not value > 0:
            raise ValidationError(f"constant density must be positive, got {value}")
        self.value = float(value)

    def derivatives(self, z):
        z = np.asarray(z, dtype=float)
        return np.full_like(z, self.value), np.zeros_like(z), np.zeros_like(z)

    @property
    def inf(self):
        return self.value

    def cosine_coefficients(self, n):
        r = np.zeros(n + 1)
        r[0] = self.value
        return r

    def describe(self):
        return {"kind": self.kind, "constant_value": self.value}


class SmoothDensity(DensityProfile):
    """Finite cosine series ``sum_j c_j cos(pi j z)``, required positive on [0, 1].

    ``SmoothDensity([2.0, 0.0, 1.0])`` is ``2 + cos(2 pi z)``.
    """

    kind = "smooth"

    def __init__(self, coefficients):
        self.coefficients = np.asarray(coefficients, dtype=float)
        if self.coefficients.ndim != 1 or self.coefficients.size == 0:
            raise ValidationError("smooth density needs a non-empty 1-D coefficient list")
        if not self.inf > 0:
            raise ValidationError("smooth density must be strictly positive on [0, 1]")

    def derivatives(self, z):
        z = np.asarray(z, dtype=float)
        k = np.pi * np.arange(self.coefficients.size)
        arg = np.multiply.outer(z, k)
        c = self.coefficients
        return (np.cos(arg) @ c, -np.sin(arg) @ (k * c), -np.cos(arg) @ (k**2 * c))

    def cosine_coefficients(self, n):
        r = np.zeros(n + 1)
        take = min(n + 1, self.coefficients.size)
        r[:take] = self.coefficients[:take]
        return r

    def describe(self):
        return {"kind": self.kind, "cosine_coefficients": self.coefficients.tolist()}


def _check_alpha(alpha):
    if not alpha > 1.5:
        raise ValidationError(f"vacuum exponent alpha must exceed 3/2, got {alpha}")
    return float(alpha)


class PhysicalVacuum(DensityProfile):
    """``rho(z) = [z (2 - z)]^alpha``, degenerate at the wall ``z = 0``."""

    kind = "vacuum"

    def __init__(self, alpha):
        self.alpha = _check_alpha(alpha)

    def derivatives(self, z):
        z = np.asarray(z, dtype=float)
        a = self.alpha
        s = z * (2.0 - z)
        ds = 2.0 - 2.0 * z
        with np.errstate(divide="ignore", invalid="ignore"):
            r1 = np.where(s > 0, a * s ** (a - 1) * ds, 0.0)
            r2 = np.where(s > 0, a * (a - 1) * s ** (a - 2) * ds**2 - 2.0 * a * s ** (a - 1), 0.0)
        return s**a, r1, r2

    @property
    def breakpoints(self):
        return dyadic_breaks(levels=40)

    @property
    def inf(self):
        return 0.0

    def describe(self):
        return {"kind": self.kind, "alpha": self.alpha}


@dataclass(frozen=True)
class QEps:
    """Monotone C^3 surrogate for ``z (2 - z)`` that stays above ``eps / 2``.

    ``q(z) = eps/2`` on ``[0, eps/4]``, ``q(z) = z (2 - z)`` on ``[eps/2, 1]``;
    in between a degree-7 two-point Hermite polynomial matches value and the
    first three derivatives at both ends.
    """

    eps: float

    def __post_init__(self):
        if not 0.0 < self.eps < 1.0:
            raise ValidationError(f"epsilon must lie in (0, 1), got {self.eps}")

    @property
    def lo(self):
        return 0.25 * self.eps

    @property
    def hi(self):
        return 0.5 * self.eps

    @cached_property
    def blend(self):
        a, b = self.lo, self.hi
        left = [0.5 * self.eps, 0.0, 0.0, 0.0]
        right = [b * (2.0 - b), 2.0 - 2.0 * b, -2.0, 0.0]
        return BPoly.from_derivatives([a, b], [left, right])

    def __call__(self, z, nu=0):
        """Evaluate the ``nu``-th derivative (``nu <= 3``) at ``z``."""
        z = np.asarray(z, dtype=float)
        outer = [z * (2.0 - z), 2.0 - 2.0 * z, np.full_like(z, -2.0), np.zeros_like(z)][nu]
        flat = np.full_like(z, 0.5 * self.eps) if nu == 0 else np.zeros_like(z)
        mid = (z > self.lo) & (z < self.hi)
        out = np.where(z <= self.lo, flat, outer)
        if np.any(mid):
            out = np.where(mid, self.blend(np.clip(z, self.lo, self.hi), nu), out)
        return out


def make_q_eps(eps):
    """Build ``q_eps`` and scan the blend for monotonicity.

    Raises
    ------
    BlendNotMonotone
        If the Hermite blend decreases anywhere on a 4096-point scan.
    """
    q = QEps(float(eps))
    z = np.linspace(q.lo, q.hi, MONOTONE_SCAN_POINTS)
    slope = q(z, 1)
    if np.min(slope) < -1e-12 or np.any(np.diff(q(z)) < -1e-15):
        raise BlendNotMonotone(f"Hermite blend for eps={eps} is not non-decreasing")
    return q


class RegularizedVacuum(DensityProfile):
    """``rho = q_eps^alpha``: the non-degenerate approximation of the vacuum profile."""

    kind = "regularized"

    def __init__(self, alpha, eps):
        self.alpha = _check_alpha(alpha)
        self.eps = float(eps)
        self.q = make_q_eps(eps)

    def derivatives(self, z):
        a = self.alpha
        q, q1, q2 = self.q(z, 0), self.q(z, 1), self.q(z, 2)
        return (
            q**a,
            a * q ** (a - 1) * q1,
            a * (a - 1) * q ** (a - 2) * q1**2 + a * q ** (a - 1) * q2,
        )

    @property
    def breakpoints(self):
        return np.array([0.0, self.q.lo, self.q.hi, 1.0])

    @property
    def inf(self):
        return (0.5 * self.eps) ** self.alpha

    def describe(self):
        return {"kind": self.kind, "alpha": self.alpha, "epsilon": self.eps}


@dataclass
class ProfileReport:
    eps: float
    monotone: bool
    bounds: bool
    deviation: float
    deviation_ok: bool
    c3_jump: float
    c3_ok: bool
    property5_sup: float

    @property
    def passed(self):
        return self.monotone and self.bounds and self.deviation_ok and self.c3_ok


def _branches(q, z, nu):
    """Constant, blend and outer-branch values of the ``nu``-th derivative at ``z``."""
    flat = 0.5 * q.eps if nu == 0 else 0.0
    outer = [z * (2 - z), 2 - 2 * z, -2.0, 0.0][nu]
    return flat, float(q.blend(z, nu)), outer


def verify_profile_properties(q, resolution=4096):
    """Numerically check the structural properties of ``q_eps``.

    The grid is ``resolution`` uniform points on [0, 1] merged with
    ``resolution`` points on the blend interval, so thin blends for small
    epsilon are still sampled densely.
    """
    if resolution < 1000:
        raise ValidationError("verify_profile_properties needs at least 1000 grid points")
    z = np.union1d(np.linspace(0.0, 1.0, resolution), np.linspace(q.lo, q.hi, resolution))
    v, d1, d2, d3 = (q(z, nu) for nu in range(4))
    eps = q.eps
    tol = 1e-12
    monotone = bool(np.all(d1 >= -tol) and np.all(np.diff(v) >= -tol))
    bounds = bool(np.all((z + eps) / 4 <= v + tol) and np.all(v <= 2 * (z + eps) + tol))
    deviation = float(np.max(np.abs(v - z * (2 - z))))
    p5 = float(np.max(np.abs(d1) + np.abs(v * d2) + np.abs(v**2 * d3)))

    jumps = []
    for nu in range(4):
        flat, blend_lo, _ = _branches(q, q.lo, nu)
        _, blend_hi, outer = _branches(q, q.hi, nu)
        jumps += [abs(flat - blend_lo), abs(blend_hi - outer)]
    # Even reflection about z = 0 and z = 1 needs odd derivatives to vanish there.
    jumps += [abs(float(q(np.array(0.0), 1))), abs(float(q(np.array(0.0), 3)))]
    jumps += [abs(float(q(np.array(1.0), 1))), abs(float(q(np.array(1.0), 3)))]
    c3 = float(max(jumps))
    return ProfileReport(
        eps=eps,
        monotone=monotone,
        bounds=bounds,
        deviation=deviation,
        deviation_ok=deviation <= eps,
        c3_jump=c3,
        c3_ok=c3 < 1e-6,
        property5_sup=p5,
    )


def extend_sp(samples, parity):
    """Even or odd reflection across ``z = 0`` followed by 2-periodization.

    ``samples`` holds values at ``z_i = i / (n - 1)``, ``i = 0..n-1`` along the
    last axis.  The result holds values at ``z_j = -1 + j / (n - 1)`` for
    ``j = 0..2(n-1)-1``, one full period ``[-1, 1)``.  At ``z = -1`` the
    periodic extension takes the mean of the two one-sided limits.
    """
    f = np.asarray(samples)
    parity = ExtensionParity(parity)
    if parity is ODD and np.max(np.abs(f[..., 0])) > 1e-12:
        raise OddParityNonzeroAtOrigin("odd extension needs f(., 0) = 0")
    sign = 1.0 if parity is EVEN else -1.0
    # z in (-1, 0): f(|z|) reflected; z = -1 uses the averaged endpoint value.
    neg = sign * f[..., -2:0:-1]
    end = 0.5 * (f[..., -1] + sign * f[..., -1])
    pos = f[..., :-1].copy()
    if parity is ODD:
        pos[..., 0] = 0.0
    return np.concatenate([end[..., None], neg, pos], axis=-1)


def periodic_grid(n):
    """The ``[-1, 1)`` grid matching :func:`extend_sp` for ``n`` half-range samples."""
    return -1.0 + np.arange(2 * (n - 1)) / (n - 1)


def profile_from_config(density):
    """Build a profile from the ``density`` block of a run configuration."""
    kind = density.get("kind", "constant")
    if kind == "constant":
        return ConstantDensity(density.get("constant_value", 1.0))
    if kind == "smooth":
        return SmoothDensity(density["cosine_coefficients"])
    if kind in ("vacuum", "regularized"):
        eps = density.get("epsilon")
        if eps is None:
            raise ValidationError(f"density kind {kind!r} needs an epsilon to regularize the vacuum")
        return RegularizedVacuum(density["alpha"], eps)
    raise ValidationError(f"unknown density kind {kind!r}")
