"""Identities, weighted norms and monitors evaluated along a Galerkin run.

Quantities that are quadratic in band-limited fields with polynomial weights
(energy, dissipation, constraint) are computed from coefficients; anything
with a non-polynomial weight (powers of rho, the duality test function) uses
composite Gauss quadrature in z aligned with the profile's breakpoints and
the trapezoid rule in x, which is exact for the x-bands involved.
"""

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .density import EVEN, ODD, RegularizedVacuum
from .errors import DegenerateDenominator
from .quadrature import dyadic_breaks, gauss_panels, refine
from .spectral import wavenumbers

COLUMNS = (
    "t", "energy", "dissipation", "enstrophy_h", "constraint_residual", "energy_identity_residual",
    "ut_weighted", "p_weighted", "dzz_weighted", "boundary_dzv_0", "boundary_w_0",
)
MONITOR_COLUMNS = (
    "t", "accumulated_dissipation", "rho_half_u", "grad_ut", "boundary_dzv_1", "boundary_w_1",
    "vertical_identity", "vertical_identity_unprojected", "E_log", "E_small", "duality",
)


class ChannelQuadrature:
    """Gauss nodes in z (panel width <= 1/(2m)) times a uniform x grid.

    Parameters
    ----------
    profile : DensityProfile
    m : int
        Resolution of the fields to be integrated.
    order : int
        Gauss points per panel.
    """

    def __init__(self, profile, m, order=8):
        self.profile = profile
        self.m = m
        width = min(0.125, 0.5 / max(m, 1))
        self.breaks = refine(profile.breakpoints, width)
        self.z, self.wz = gauss_panels(self.breaks, order)
        self.order = order
        self.nx = 2 * m + 4
        self.x = 2.0 * np.arange(self.nx) / self.nx
        self.rho = profile(self.z)
        k2 = np.arange(m + 1)
        self.cz = np.cos(np.pi * np.outer(self.z, k2))
        self.sz = np.sin(np.pi * np.outer(self.z, k2))
        self.ex = np.exp(1j * np.pi * np.outer(np.arange(-m, m + 1), self.x))

    def values(self, coeffs, parity):
        """Samples ``(nz, nx)`` of a coefficient array at the quadrature nodes."""
        zb = self.cz if parity is EVEN else self.sz
        return (zb @ coeffs.T @ self.ex).real

    def values_many(self, items):
        """Samples for several ``(coeffs, parity)`` pairs, one batched product per parity."""
        out = [None] * len(items)
        for parity, zb in ((EVEN, self.cz), (ODD, self.sz)):
            idx = [i for i, (_, par) in enumerate(items) if par is parity]
            if not idx:
                continue
            stack = np.stack([items[i][0] for i in idx]).transpose(0, 2, 1)
            vals = ((zb @ stack) @ self.ex).real
            for j, i in enumerate(idx):
                out[i] = vals[j]
        return out

    def integrate(self, samples):
        return float(self.wz @ samples.mean(axis=1) * 2.0)

    def weighted_sq(self, samples, weight):
        """``int weight(z) |f|^2`` for samples of ``f`` and a z-weight at the nodes."""
        return float(self.wz @ (weight * (samples**2).mean(axis=1)) * 2.0)

    def cumulative(self, integrand):
        """``int_0^{z_j} g`` at every node for a callable ``g(z)`` (values may be 2-D)."""
        rows = []
        for zj in self.z:
            cut = np.concatenate([self.breaks[self.breaks < zj], [zj]])
            zz, ww = gauss_panels(cut, self.order)
            rows.append(ww @ integrand(zz))
        return np.array(rows)

    @cached_property
    def rho_cos_cumulative(self):
        """``int_0^{z_j} rho cos(pi k2 z)`` for every node and k2."""
        k2 = np.arange(self.m + 1)
        return self.cumulative(lambda z: self.profile(z)[:, None] * np.cos(np.pi * np.outer(z, k2)))


def _trace_norm(coeffs):
    """L2(0, 2) norm of ``sum_k1 c_k1 exp(i pi k1 x)``."""
    return float(np.sqrt(2.0 * np.sum(np.abs(coeffs) ** 2)))


def boundary_traces(v, w):
    """L2 norms of ``dz v`` and ``w`` on the walls ``z = 0`` and ``z = 1``.

    Returns
    -------
    dict
        Keys ``dzv_0``, ``dzv_1``, ``w_0``, ``w_1``.
    """
    m = v.shape[1] - 1
    k2 = np.arange(m + 1)
    out = {}
    for z0 in (0, 1):
        s = np.sin(np.pi * k2 * z0)
        out[f"dzv_{z0}"] = _trace_norm((-np.pi * k2 * s * v).sum(axis=1))
        out[f"w_{z0}"] = _trace_norm((s * w).sum(axis=1))
    return out


def weighted_norms(model, quad, v, w, dv, dw, p):
    """Weighted norms of a state, its time derivative ``(dv, dw)`` and pressure ``p``.

    Returns
    -------
    dict
        ``rho_half_u`` = |rho^1/2 u|, ``ut_weighted`` = |rho^1/2 u_t|,
        ``grad_ut`` = |grad u_t|, ``enstrophy_h`` = |grad grad_h u|,
        ``dzz_weighted`` = |rho dzz u|, ``p_weighted`` = |rho^2 grad p|.
    """
    k1, k2 = wavenumbers(model.m)
    kz2 = (np.pi * k2) ** 2
    r2 = quad.rho**2
    vzz, wzz, px, pz = quad.values_many(
        [(-kz2 * v, EVEN), (-kz2 * w, ODD), (1j * np.pi * k1 * p, EVEN), (-np.pi * k2 * p, ODD)]
    )
    dzz = quad.weighted_sq(vzz, r2) + quad.weighted_sq(wzz, r2)
    pw = quad.weighted_sq(px, r2**2) + quad.weighted_sq(pz, r2**2)
    return {
        "rho_half_u": math.sqrt(max(model.energy(v, w), 0.0)),
        "ut_weighted": math.sqrt(max(model.energy(dv, dw), 0.0)),
        "grad_ut": math.sqrt(model.dissipation(dv, dw)),
        "enstrophy_h": math.sqrt(model.enstrophy_h(v, w)),
        "dzz_weighted": math.sqrt(dzz),
        "p_weighted": math.sqrt(pw),
    }


def vertical_identity(model, quad, v, w):
    """Residuals of ``[rho w](z) + int_0^z rho dx v = 0``.

    Returns ``(projected, unprojected)``: the first uses ``P_m(rho u)`` and is
    the exact discrete statement of the constraint; the second uses rho
    itself and only vanishes as m grows.  Both are relative to
    ``max |rho w| + max |int rho dx v|`` on the nodes.
    """
    m = model.m
    k1, k2 = wavenumbers(m)
    mv, mw = model.mass.apply(v, w)
    # int_0^z of cos(pi k2 z') is z for k2 = 0 and sin(pi k2 z) / (pi k2) otherwise
    anti = np.where(k2 > 0, 1.0 / (np.pi * np.maximum(k2, 1)), 0.0)
    integ, lhs, w_vals = quad.values_many([(1j * np.pi * k1 * mv * anti, ODD), (mw, ODD), (w, ODD)])
    integ = integ + np.outer(quad.z, (1j * np.pi * k1[:, 0] * mv[:, 0]) @ quad.ex).real
    scale = np.max(np.abs(lhs)) + np.max(np.abs(integ))
    proj = float(np.max(np.abs(lhs + integ)) / scale) if scale > 0 else 0.0
    cum = (quad.rho_cos_cumulative @ (1j * np.pi * k1 * v).T) @ quad.ex
    integ_u = cum.real
    lhs_u = quad.rho[:, None] * w_vals
    scale = np.max(np.abs(lhs_u)) + np.max(np.abs(integ_u))
    unproj = float(np.max(np.abs(lhs_u + integ_u)) / scale) if scale > 0 else 0.0
    return proj, unproj


class DualityMonitor:
    """Functional pairing the momentum equation with ``psi_eps``.

    ``psi_h = (1 - c q) cos(pi x)`` and ``psi_v = -q^-a int_0^z q^a dx psi_h``
    make ``div(q^a psi) = 0``; the pairing
    ``int rho u_t.psi + rho (u.grad u).psi + grad u : grad psi`` equals the
    wall term ``(1 - c q(0)) int dz v(x, 0) cos(pi x) dx`` and must stay bounded as
    eps shrinks.
    """

    def __init__(self, quad):
        prof = quad.profile
        self.quad = quad
        if isinstance(prof, RegularizedVacuum):
            q = prof.q
            a = prof.alpha
        else:
            q = None
            a = 1.0
        qf = (lambda z: q(z, 0)) if q is not None else prof
        dq = (lambda z: q(z, 1)) if q is not None else (lambda z: prof.derivatives(z)[1])
        rho = quad.rho
        zq, wq = gauss_panels(refine(prof.breakpoints, 1.0 / 64), 32)
        self.c = float(wq @ prof(zq) / (wq @ (prof(zq) * qf(zq))))
        z = quad.z
        h = 1.0 - self.c * qf(z)
        G = quad.cumulative(lambda s: prof(s) * (1.0 - self.c * qf(s)))
        x = quad.x
        cx, sx = np.cos(np.pi * x), np.sin(np.pi * x)
        self.psi_h = np.outer(h, cx)
        self.dx_psi_h = np.outer(h, -np.pi * sx)
        self.dz_psi_h = np.outer(-self.c * dq(z), cx)
        g = G / rho
        self.psi_v = np.outer(g, np.pi * sx)
        self.dx_psi_v = np.outer(g, np.pi**2 * cx)
        # dz(G / rho) = h - a q' G / q^(a+1) for rho = q^a
        dg = h - a * dq(z) * G / (rho * qf(z))
        self.dz_psi_v = np.outer(dg, np.pi * sx)

    def __call__(self, v, w, dv, dw):
        quad = self.quad
        k1, k2 = wavenumbers(quad.m)
        ik1 = 1j * np.pi * k1
        vv, ww, vx, vz, wx, wz, ut, wt = quad.values_many([
            (v, EVEN), (w, ODD), (ik1 * v, EVEN), (-np.pi * k2 * v, ODD),
            (ik1 * w, ODD), (np.pi * k2 * w, EVEN), (dv, EVEN), (dw, ODD),
        ])
        rho = quad.rho[:, None]
        inertia = rho * ((ut + vv * vx + ww * vz) * self.psi_h + (wt + vv * wx + ww * wz) * self.psi_v)
        visc = vx * self.dx_psi_h + vz * self.dz_psi_h + wx * self.dx_psi_v + wz * self.dz_psi_v
        return quad.integrate(inertia + visc)


class Recorder:
    """Turns trajectory samples into diagnostics rows, keeping running integrals."""

    def __init__(self, model, duality=True):
        self.model = model
        self.quad = ChannelQuadrature(model.profile, model.m)
        self.duality = DualityMonitor(self.quad) if duality else None
        self.prev = None
        self.acc = 0.0
        self.e0 = None

    def record(self, s):
        model = self.model
        energy = model.energy(s.v, s.w)
        diss = model.dissipation(s.v, s.w)
        if self.prev is None:
            self.e0 = energy
        else:
            t0, d0 = self.prev
            self.acc += 0.5 * (d0 + diss) * (s.t - t0)
        self.prev = (s.t, diss)
        balance = energy + 2.0 * self.acc - self.e0
        resid = abs(balance) / self.e0 if self.e0 > 0 else abs(balance)
        norms = weighted_norms(model, self.quad, s.v, s.w, s.dv, s.dw, s.p)
        traces = boundary_traces(s.v, s.w)
        proj, unproj = vertical_identity(model, self.quad, s.v, s.w)
        grad_v = model.dissipation(s.v, np.zeros_like(s.w))
        ut_sq = norms["ut_weighted"] ** 2
        return {
            "t": s.t,
            "energy": energy,
            "dissipation": diss,
            "enstrophy_h": norms["enstrophy_h"] ** 2,
            "constraint_residual": model.constraint_residual(s.v, s.w),
            "energy_identity_residual": resid,
            "ut_weighted": norms["ut_weighted"],
            "p_weighted": norms["p_weighted"],
            "dzz_weighted": norms["dzz_weighted"],
            "boundary_dzv_0": traces["dzv_0"],
            "boundary_w_0": traces["w_0"],
            "accumulated_dissipation": self.acc,
            "rho_half_u": norms["rho_half_u"],
            "grad_ut": norms["grad_ut"],
            "boundary_dzv_1": traces["dzv_1"],
            "boundary_w_1": traces["w_1"],
            "vertical_identity": proj,
            "vertical_identity_unprojected": unproj,
            "E_log": math.e + grad_v + ut_sq,
            "E_small": energy + diss + ut_sq,
            "duality": self.duality(s.v, s.w, s.dv, s.dw) if self.duality is not None else float("nan"),
        }


def energy_identity_residual(records):
    """``max_t |E(t) + 2 int_0^t D - E(0)| / E(0)`` by the trapezoid rule on the samples.

    Parameters
    ----------
    records : sequence of dict
        Rows with ``t``, ``energy`` and ``dissipation``.
    """
    if not records:
        return 0.0
    e0 = records[0]["energy"]
    acc = 0.0
    worst = 0.0
    for a, b in zip(records, records[1:]):
        acc += 0.5 * (a["dissipation"] + b["dissipation"]) * (b["t"] - a["t"])
        worst = max(worst, abs(b["energy"] + 2.0 * acc - e0))
    return worst / e0 if e0 > 0 else worst


def energy_monotone(records, tol=1e-12):
    """``(ok, worst_increase)`` for ``int rho |u|^2`` along the samples.

    Consecutive energies must not increase, and must strictly decrease when
    the dissipation exceeds ``tol``.
    """
    ok = True
    worst = 0.0
    for a, b in zip(records, records[1:]):
        inc = b["energy"] - a["energy"]
        worst = max(worst, inc)
        if inc > 0 or (inc == 0 and max(a["dissipation"], b["dissipation"]) > tol):
            ok = False
    return ok, worst


def global_monitors(records, mode="2d-log"):
    """Time series behind the global decay statements.

    ``2d-log`` returns rows ``(t, log log E, int_0^t (1 + |rho^1/2 u|^2 + |grad u|^2))`` with
    ``E = e + |grad v|^2 + |rho^1/2 u_t|^2``.  ``3d-small`` returns ``(t, E, violated)``
    with ``E = |rho^1/2 u|^2 + |grad u|^2 + |rho^1/2 u_t|^2`` and ``violated`` set from the first
    sample where ``E(t) > E(0)``.
    """
    rows = []
    if mode == "2d-log":
        acc = 0.0
        prev = None
        for r in records:
            g = 1.0 + r["energy"] + r["dissipation"]
            if prev is not None:
                acc += 0.5 * (prev[1] + g) * (r["t"] - prev[0])
            prev = (r["t"], g)
            rows.append((r["t"], math.log(math.log(r["E_log"])), acc))
    elif mode == "3d-small":
        e0 = records[0]["E_small"] if records else 0.0
        violated = False
        for r in records:
            violated = violated or r["E_small"] > e0
            rows.append((r["t"], r["E_small"], violated))
    else:
        raise ValueError(f"unknown monitor mode {mode!r}")
    return rows


# -- Hardy-type inequalities ------------------------------------------------

HARDY_ORDER = 256


def _hardy_quadrature(eps):
    breaks = dyadic_breaks()
    if eps > 0:
        # grade the panels around the weight's length scale as well
        breaks = np.union1d(breaks, np.clip(eps * 2.0 ** np.arange(-4, 5), 0, 1))
    return gauss_panels(breaks, HARDY_ORDER)


def hardy_check(f, fprime, k, eps):
    """Ratio lhs / rhs of the weighted Hardy inequality for one instance.

    For ``k > -1``: ``int (z+eps)^k f^2 / int (z+eps)^(k+2) (f^2 + f'^2)``.
    For ``k < -1``: ``int (z+eps)^k (f - f(0))^2 / int (z+eps)^(k+2) f'^2``.

    Parameters
    ----------
    f, fprime : callable
        The function on [0, 1] and its derivative.
    k : float
        Weight exponent, ``k != -1``.
    eps : float
        Regularization, ``eps >= 0``.

    Raises
    ------
    DegenerateDenominator
        If the right side is below 1e-14 while the left side is not zero.
    """
    if k == -1:
        raise ValueError("k = -1 is not covered by either branch")
    z, w = _hardy_quadrature(eps)
    s = z + eps
    fz, dz = np.asarray(f(z), float), np.asarray(fprime(z), float)
    if k > -1:
        lhs = w @ (s**k * fz**2)
        rhs = w @ (s ** (k + 2) * (fz**2 + dz**2))
    else:
        f0 = float(f(np.array([0.0]))[0])
        lhs = w @ (s**k * (fz - f0) ** 2)
        rhs = w @ (s ** (k + 2) * dz**2)
    if lhs == 0:
        return 0.0
    if rhs <= 1e-14:
        raise DegenerateDenominator(f"Hardy denominator {rhs:.3e} vanishes (k={k}, eps={eps})")
    return float(lhs / rhs)


HARDY_FAMILIES = {
    "one": (lambda z: np.ones_like(z), lambda z: np.zeros_like(z)),
    "z": (lambda z: z, lambda z: np.ones_like(z)),
    "z2": (lambda z: z**2, lambda z: 2 * z),
    "sin": (lambda z: np.sin(0.5 * np.pi * z), lambda z: 0.5 * np.pi * np.cos(0.5 * np.pi * z)),
}
HARDY_KS = (-1.5, -0.5, 0.0, 1.0)
HARDY_EPS = tuple(2.0**-j for j in range(1, 9))


@dataclass
class HardyRow:
    k: float
    epsilon: float
    family: str
    ratio: float


def hardy_suite(ks=HARDY_KS, eps_values=HARDY_EPS, families=None):
    """Ratios for every applicable ``(k, eps, family)``; constants are skipped for k < -1."""
    families = families or HARDY_FAMILIES
    rows = []
    for k in ks:
        for name, (f, df) in families.items():
            if k < -1 and name == "one":
                continue
            for eps in eps_values:
                rows.append(HardyRow(k, eps, name, hardy_check(f, df, k, eps)))
    return rows


def hardy_uniformity(rows):
    """``{(k, family): max ratio / min ratio}`` across eps."""
    groups = {}
    for r in rows:
        groups.setdefault((r.k, r.family), []).append(r.ratio)
    return {key: max(v) / min(v) for key, v in groups.items()}
