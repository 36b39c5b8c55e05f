"""Galerkin ODE system for the anelastic equations and its time integration.

The unknowns are the coefficients ``a = (a_v, a_w)`` of ``u_m = (v_m, w_m)``.
With ``M`` the mass matrix ``a -> P_m(rho u)``, ``L`` the Laplacian symbol and
``N = P_m(rho u.grad u)`` the system reads ``M a' = L a - N - M grad p`` where
``p`` solves ``div M grad p = div(L a - N)``.  Then ``div M a' = 0``, so the
anelastic constraint ``div P_m(rho u_m) = 0`` is an exact linear invariant.
"""

import logging
import time
from dataclasses import asdict, dataclass, field
from functools import cached_property
from typing import Optional

import numpy as np
import scipy.linalg

from .density import EVEN, ODD, profile_from_config
from .errors import BlowupDetected, ConfigInvalid, NumericalFailure, ValidationError
from .pressure import DensityOperators, PressureSystem, divergence, gradient, nonlinear_term
from .spectral import SpectralField, l2_weights, quadrature_project, wavenumbers

log = logging.getLogger(__name__)

RK4_STABILITY = 2.8
BLOWUP_H1 = 1e8
SCHEMES = ("rk4", "imex-euler")


@dataclass
class State:
    """Velocity coefficients at time ``t`` plus the last pressure, if known."""

    t: float
    v: SpectralField
    w: SpectralField
    p: Optional[SpectralField] = None

    def __post_init__(self):
        if self.v.parity is not EVEN or self.w.parity is not ODD:
            raise ValidationError("state needs an even v and an odd w")
        if self.v.m != self.w.m:
            raise ValidationError("v and w must share the resolution m")

    @property
    def m(self):
        return self.v.m

    @classmethod
    def from_arrays(cls, t, v, w, p=None):
        return cls(
            t,
            SpectralField(EVEN, v, check=False),
            SpectralField(ODD, w, check=False),
            None if p is None else SpectralField(EVEN, p, check=False),
        )


class MassMatrix:
    """``a -> P_m(rho u)``; block diagonal with one z-block per parity."""

    def __init__(self, ops):
        self.ops = ops
        self.m = ops.m

    def apply(self, v, w):
        return self.ops.apply(v, EVEN), self.ops.apply(w, ODD)

    def solve(self, v, w):
        return self.ops.solve(v, EVEN), self.ops.solve(w, ODD)

    def eigenvalues(self):
        """Eigenvalues of the symmetrized z-blocks (real; positive iff M is SPD)."""
        s = np.sqrt(l2_weights(self.m, EVEN)[0])
        even = np.linalg.eigvalsh((s[:, None] * self.ops.mc) / s[None, :])
        odd = np.linalg.eigvalsh(self.ops.ms[1:, 1:]) if self.m > 0 else np.array([])
        return np.sort(np.concatenate([even, odd]))

    def dense(self):
        """Full operator on ``(v, w)`` coefficients in mode-set order (k2 outer).

        The sine slots with k2 = 0 carry no degree of freedom and are left out,
        so the matrix is square of size ``(2m+1)(2m+1)``.
        """
        n1 = 2 * self.m + 1
        blk_v = np.kron(self.ops.mc, np.eye(n1))
        blk_w = np.kron(self.ops.ms[1:, 1:], np.eye(n1))
        return scipy.linalg.block_diag(blk_v, blk_w)


def _flat(field_array):
    """Mode-set order (k2 outer, k1 inner) flattening of a coefficient array."""
    return field_array.T.reshape(-1)


class GalerkinModel:
    """All resolution- and density-dependent operators of one Galerkin system."""

    def __init__(self, profile, m):
        self.profile = profile
        self.m = m
        self.ops = DensityOperators.build(profile, m)
        self.pressure = PressureSystem(self.ops)
        self.mass = MassMatrix(self.ops)
        k1, k2 = wavenumbers(m)
        self.k1 = k1
        self.k2 = k2
        self.lap = -np.pi**2 * (k1**2 + k2**2)
        self.w_even = l2_weights(m, EVEN)
        self.w_odd = l2_weights(m, ODD)
        self._imex_cache = {}

    # -- operators --------------------------------------------------------
    def tendency(self, v, w, nonlinear=None):
        """Return ``(v', w', p)`` of the Galerkin ODE at coefficients ``(v, w)``."""
        nv, nw = nonlinear if nonlinear is not None else nonlinear_term(v, w, self.ops)
        gv = self.lap * v - nv
        gw = self.lap * w - nw
        rhs = divergence(gv, gw)
        rhs[self.m, 0] = 0.0
        p = self.pressure.solve(rhs)
        px, pz = gradient(p)
        dv, dw = self.mass.solve(gv, gw)
        dv = dv - px
        dw = dw - pz
        dw[:, 0] = 0.0
        return dv, dw, p

    def defect(self, v, w, dv, dw, p):
        """``M a' + N + M grad p - L a`` (zero for an exact tendency)."""
        nv, nw = nonlinear_term(v, w, self.ops)
        px, pz = gradient(p)
        mv, mw = self.mass.apply(dv + px, dw + pz)
        return mv + nv - self.lap * v, mw + nw - self.lap * w

    def constraint(self, v, w):
        """Coefficients of ``div P_m(rho u)``."""
        mv, mw = self.mass.apply(v, w)
        return divergence(mv, mw)

    def project(self, v, w):
        """Remove ``grad Q`` so that ``div P_m(rho (u - grad Q)) = 0``; returns ``(v, w, Q)``."""
        rhs = self.constraint(v, w)
        rhs[self.m, 0] = 0.0
        q = self.pressure.solve(rhs)
        qx, qz = gradient(q)
        w = w - qz
        w[:, 0] = 0.0
        return v - qx, w, q

    # -- norms ------------------------------------------------------------
    def energy(self, v, w):
        """``int rho |u|^2`` (exact for band-limited u)."""
        mv, mw = self.mass.apply(v, w)
        return float(np.sum(self.w_even * (mv * np.conj(v)).real) + np.sum(self.w_odd * (mw * np.conj(w)).real))

    def l2_sq(self, v, w):
        return float(np.sum(self.w_even * np.abs(v) ** 2) + np.sum(self.w_odd * np.abs(w) ** 2))

    def dissipation(self, v, w):
        """``int |grad u|^2``."""
        s = -self.lap
        return float(np.sum(self.w_even * s * np.abs(v) ** 2) + np.sum(self.w_odd * s * np.abs(w) ** 2))

    def enstrophy_h(self, v, w):
        """``|grad dx u|^2``."""
        s = -self.lap * (np.pi * self.k1) ** 2
        return float(np.sum(self.w_even * s * np.abs(v) ** 2) + np.sum(self.w_odd * s * np.abs(w) ** 2))

    def h1(self, v, w):
        return np.sqrt(self.l2_sq(v, w) + self.dissipation(v, w))

    def constraint_residual(self, v, w):
        """``|div P_m(rho u)|_L2 / |u|_H1`` (0 for the zero field)."""
        c = self.constraint(v, w)
        num = np.sqrt(np.sum(self.w_even * np.abs(c) ** 2))
        den = self.h1(v, w)
        return float(num / den) if den > 0 else float(num)

    def h3_norm(self, q):
        """``sum_{|b| <= 3} |d^b q|_L2`` squared-summed, for an even field."""
        a = (np.pi * self.k1) ** 2
        b = (np.pi * self.k2) ** 2
        sym = sum(a**i * b**j for i in range(4) for j in range(4 - i))
        return float(np.sqrt(np.sum(self.w_even * sym * np.abs(q) ** 2)))

    # -- stability --------------------------------------------------------
    @cached_property
    def max_rate(self):
        """Largest decay rate of the linear part, ``max eig(-L, M)`` over k1 blocks."""
        m = self.m
        wt = l2_weights(m, EVEN)[0]
        lam = 0.0
        for k1 in range(m + 1):
            d = np.pi**2 * (k1**2 + np.arange(m + 1) ** 2)
            top = scipy.linalg.eigh(np.diag(wt * d), wt[:, None] * self.ops.mc, eigvals_only=True)[-1]
            lam = max(lam, top)
            if m > 0:
                top = scipy.linalg.eigh(np.diag(d[1:]), self.ops.ms[1:, 1:], eigvals_only=True)[-1]
                lam = max(lam, top)
        return float(lam)

    @property
    def rk4_bound(self):
        """Step bound ``2.8 / max_rate``; equals ``2.8 / (2 pi^2 m^2)`` for rho = 1."""
        return RK4_STABILITY / self.max_rate if self.max_rate > 0 else np.inf

    # -- time stepping ----------------------------------------------------
    def rk4(self, v, w, dt, k1=None):
        a1v, a1w, _ = k1 if k1 is not None else self.tendency(v, w)
        a2v, a2w, _ = self.tendency(v + 0.5 * dt * a1v, w + 0.5 * dt * a1w)
        a3v, a3w, _ = self.tendency(v + 0.5 * dt * a2v, w + 0.5 * dt * a2w)
        a4v, a4w, _ = self.tendency(v + dt * a3v, w + dt * a3w)
        v = v + dt / 6.0 * (a1v + 2 * a2v + 2 * a3v + a4v)
        w = w + dt / 6.0 * (a1w + 2 * a2w + 2 * a3w + a4w)
        return v, w

    def _imex_inverse(self, dt):
        inv = self._imex_cache.get(dt)
        if inv is None:
            m = self.m
            iv = np.empty((m + 1, m + 1, m + 1))
            iw = np.empty_like(iv)
            for k1 in range(m + 1):
                d = np.pi**2 * (k1**2 + np.arange(m + 1) ** 2)
                iv[k1] = np.linalg.inv(self.ops.mc + dt * np.diag(d))
                iw[k1] = np.linalg.inv(self.ops.ms + dt * np.diag(d))
            idx = np.abs(np.arange(-m, m + 1))
            inv = (iv[idx], iw[idx])
            self._imex_cache = {dt: inv}
        return inv

    def imex_euler(self, v, w, dt):
        """``(M - dt L) a* = M a - dt N`` (constraint restored by :meth:`project`)."""
        nv, nw = nonlinear_term(v, w, self.ops)
        mv, mw = self.mass.apply(v, w)
        iv, iw = self._imex_inverse(dt)
        v = np.einsum("kij,kj->ki", iv, mv - dt * nv)
        w = np.einsum("kij,kj->ki", iw, mw - dt * nw)
        w[:, 0] = 0.0
        return v, w


# -- initial data ---------------------------------------------------------

def bump(s):
    """C-infinity bump ``exp(1 - 1/(4 s (1 - s)))`` on (0, 1), 1 at the centre, 0 outside."""
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    inside = (s > 0) & (s < 1)
    si = s[inside]
    out[inside] = np.exp(1.0 - 1.0 / (4.0 * si * (1.0 - si)))
    return out


def bump_derivative(s):
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    inside = (s > 0) & (s < 1)
    si = s[inside]
    g = 4.0 * si * (1.0 - si)
    out[inside] = np.exp(1.0 - 1.0 / g) * 4.0 * (1.0 - 2.0 * si) / g**2
    return out


def taylor_green(m, amplitude=1.0):
    """``u = A (sin pi x cos pi z, -cos pi x sin pi z)`` as band-limited coefficients."""
    v = SpectralField.from_modes(EVEN, m, {(1, 1): -0.5j * amplitude})
    w = SpectralField.from_modes(ODD, m, {(1, 1): -0.5 * amplitude})
    return v, w


def stream_function_data(profile, m, amplitude=1.0, delta=0.2, x_mode=1, n=None):
    """``P_m`` of ``u_in = rho^-1 (-dz psi, dx psi)`` with ``psi = A cos(k pi x) phi(z)``.

    ``phi`` is a smooth bump supported in ``(delta, 1 - delta)``, so
    ``div(rho u_in) = 0`` exactly and ``u_in`` vanishes near both walls.
    """
    if not 0 < delta < 0.25:
        raise ValidationError(f"support margin delta must lie in (0, 1/4), got {delta}")
    width = 1.0 - 2.0 * delta
    k = np.pi * x_mode

    def v_in(x, z):
        s = (z - delta) / width
        return -amplitude * np.cos(k * x) * bump_derivative(s) / width / profile(z)

    def w_in(x, z):
        s = (z - delta) / width
        return -amplitude * k * np.sin(k * x) * bump(s) / profile(z)

    return quadrature_project(v_in, EVEN, m, n), quadrature_project(w_in, ODD, m, n)


def initial_fields(initial, profile, m):
    """Band-limited ``P_m u_in`` for an ``initial`` config block."""
    kind = initial.get("kind", "taylor-green")
    amp = initial.get("amplitude", 1.0)
    if kind == "taylor-green":
        return taylor_green(m, amp)
    if kind == "stream":
        return stream_function_data(profile, m, amp, initial.get("delta", 0.2), initial.get("x_mode", 1))
    if kind == "zero":
        return SpectralField.zeros(EVEN, m), SpectralField.zeros(ODD, m)
    raise ValidationError(f"unknown initial data kind {kind!r}")


@dataclass
class InitialReport:
    q_h3: float
    compat_norm: float
    constraint_before: float
    constraint_after: float


def prepare_initial(model, v_in, w_in):
    """Constrained initial state ``P_m u_in - grad Q_m``.

    Parameters
    ----------
    model : GalerkinModel
    v_in, w_in : SpectralField
        Projected initial velocity; reality is checked.

    Returns
    -------
    state : State
    report : InitialReport
        ``|Q_m|_H3`` and the weighted norm of the initial time derivative.
    """
    m = model.m
    v = SpectralField(EVEN, v_in.coeffs).resized(m).coeffs
    w = SpectralField(ODD, w_in.coeffs).resized(m).coeffs
    before = model.constraint_residual(v, w)
    v, w, q = model.project(v, w)
    dv, dw, p = model.tendency(v, w)
    compat = np.sqrt(max(model.energy(dv, dw), 0.0))
    report = InitialReport(model.h3_norm(q), float(compat), before, model.constraint_residual(v, w))
    return State.from_arrays(0.0, v, w, p), report


# -- run orchestration ----------------------------------------------------

@dataclass
class RunConfig:
    m: int = 8
    dt: Optional[float] = None
    t_end: float = 0.1
    density: dict = field(default_factory=lambda: {"kind": "constant", "constant_value": 1.0})
    initial: dict = field(default_factory=lambda: {"kind": "taylor-green"})
    scheme: str = "rk4"
    reproject_every: Optional[int] = None
    cadence: int = 10
    seed: int = 0

    FIELDS = ("m", "dt", "t_end", "density", "initial", "scheme", "reproject_every", "cadence", "seed")

    @classmethod
    def from_dict(cls, data):
        """Validated config; every problem is collected before raising.

        Raises
        ------
        ConfigInvalid
        """
        problems = []
        unknown = sorted(set(data) - set(cls.FIELDS))
        if unknown:
            problems.append(f"unknown keys: {', '.join(unknown)}")
        kw = {k: data[k] for k in cls.FIELDS if k in data}
        cfg = cls(**kw)
        problems += cfg.problems()
        if problems:
            raise ConfigInvalid(problems)
        return cfg

    def problems(self):
        out = []
        if not isinstance(self.m, int) or self.m < 1:
            out.append(f"m: must be a positive integer, got {self.m!r}")
        if not (isinstance(self.t_end, (int, float)) and self.t_end >= 0):
            out.append(f"t_end: must be non-negative, got {self.t_end!r}")
        if self.dt is not None and not (isinstance(self.dt, (int, float)) and self.dt > 0):
            out.append(f"dt: must be positive, got {self.dt!r}")
        if self.scheme not in SCHEMES:
            out.append(f"scheme: must be one of {SCHEMES}, got {self.scheme!r}")
        if not isinstance(self.cadence, int) or self.cadence < 1:
            out.append(f"cadence: must be a positive integer, got {self.cadence!r}")
        if self.reproject_every is not None and (not isinstance(self.reproject_every, int) or self.reproject_every < 0):
            out.append(f"reproject_every: must be a non-negative integer, got {self.reproject_every!r}")
        d = self.density
        kind = d.get("kind", "constant")
        if kind in ("vacuum", "regularized"):
            alpha = d.get("alpha")
            if alpha is None or not alpha > 1.5:
                out.append(f"density.alpha: vacuum profiles need alpha > 3/2, got {alpha!r}")
            eps = d.get("epsilon")
            if eps is None:
                out.append("density.epsilon: the vacuum profile must be regularized with 0 < epsilon < 1")
            elif not 0 < eps < 1:
                out.append(f"density.epsilon: must lie in (0, 1), got {eps!r}")
        elif kind == "constant":
            if not d.get("constant_value", 1.0) > 0:
                out.append("density.constant_value: must be positive")
        elif kind == "smooth":
            if not d.get("cosine_coefficients"):
                out.append("density.cosine_coefficients: smooth density needs a non-empty coefficient list")
        else:
            out.append(f"density.kind: unknown kind {kind!r}")
        ini = self.initial
        if ini.get("kind", "taylor-green") == "stream":
            delta = ini.get("delta", 0.2)
            if not 0 < delta < 0.25:
                out.append(f"initial.delta: must lie in (0, 1/4), got {delta!r}")
        if out:
            return out
        try:
            model = build_model(self)
        except (ValidationError, NumericalFailure) as exc:
            return [f"density: {exc}"]
        if self.scheme == "rk4" and self.dt is not None and self.dt > model.rk4_bound:
            out.append(f"dt: {self.dt:g} exceeds the rk4 stability bound {model.rk4_bound:.6g}")
        return out

    @property
    def reprojection(self):
        if self.reproject_every is not None:
            return self.reproject_every
        return 1 if self.scheme == "imex-euler" else 0

    def resolved(self, model=None):
        """Dict echo with defaults filled in (dt resolved against the model)."""
        out = {k: getattr(self, k) for k in self.FIELDS}
        out["reproject_every"] = self.reprojection
        model = model or build_model(self)
        out["dt"], out["steps"] = time_grid(self, model)
        return out


_MODEL_CACHE = {}


def build_model(config):
    key = (repr(sorted(config.density.items())), config.m)
    model = _MODEL_CACHE.get(key)
    if model is None:
        model = GalerkinModel(profile_from_config(config.density), config.m)
        _MODEL_CACHE.clear()
        _MODEL_CACHE[key] = model
    return model


def time_grid(config, model):
    """``(dt, steps)`` with ``steps * dt == t_end``; default dt is half the rk4 bound."""
    if config.t_end == 0:
        return (config.dt or 0.0), 0
    dt = config.dt if config.dt is not None else 0.5 * model.rk4_bound
    steps = int(np.ceil(config.t_end / dt - 1e-9))
    return config.t_end / steps, steps


@dataclass
class Sample:
    """A stored trajectory point: state, its tendency and pressure."""

    t: float
    v: np.ndarray
    w: np.ndarray
    dv: np.ndarray
    dw: np.ndarray
    p: np.ndarray

    def state(self):
        return State.from_arrays(self.t, self.v, self.w, self.p)


@dataclass
class RunResult:
    config: dict
    samples: list
    records: list
    initial: InitialReport
    steps: int = 0
    wall_time: float = 0.0
    completed: bool = True
    failure: Optional[str] = None

    def summary(self, model):
        last = self.samples[-1] if self.samples else None
        final = {}
        if last is not None:
            final = {
                "t": last.t,
                "energy": model.energy(last.v, last.w),
                "dissipation": model.dissipation(last.v, last.w),
                "h1": model.h1(last.v, last.w),
                "constraint_residual": model.constraint_residual(last.v, last.w),
            }
        return {
            "config": self.config,
            "initial": asdict(self.initial),
            "final": final,
            "steps": self.steps,
            "wall_time": self.wall_time,
            "completed": self.completed,
            "failure": self.failure,
        }


def step(model, state, dt, scheme="rk4", reproject=False):
    """Advance a :class:`State` by one step of ``scheme``.

    Raises
    ------
    BlowupDetected
        If the H1 norm leaves ``[0, 1e8]`` or turns non-finite.
    """
    v, w = state.v.coeffs, state.w.coeffs
    v, w = _advance(model, v, w, dt, scheme, reproject)
    _check_blowup(model, v, w, state.t + dt)
    return State.from_arrays(state.t + dt, v, w)


def _advance(model, v, w, dt, scheme, reproject, k1=None):
    if scheme == "rk4":
        v, w = model.rk4(v, w, dt, k1)
    elif scheme == "imex-euler":
        v, w = model.imex_euler(v, w, dt)
    else:
        raise ValidationError(f"unknown scheme {scheme!r}")
    if reproject:
        v, w, _ = model.project(v, w)
    return v, w


def _check_blowup(model, v, w, t):
    h1 = model.h1(v, w)
    if not np.isfinite(h1) or h1 > BLOWUP_H1:
        raise BlowupDetected(f"H1 norm {h1:.3e} exceeded {BLOWUP_H1:.0e} at t={t:.6g}")


def run(config, model=None, initial_state=None, on_sample=None):
    """Integrate from 0 to ``t_end`` storing a sample every ``cadence`` steps.

    Parameters
    ----------
    config : RunConfig
    model : GalerkinModel, optional
    initial_state : State, optional
        Overrides the configured initial data (already constrained).
    on_sample : callable, optional
        Called with each :class:`Sample` as it is produced.

    Returns
    -------
    RunResult
        On a numerical failure the exception carries the partial result as
        ``exc.partial``.
    """
    from .diagnostics import Recorder

    model = model or build_model(config)
    dt, steps = time_grid(config, model)
    if initial_state is None:
        v_in, w_in = initial_fields(config.initial, model.profile, model.m)
        state, report = prepare_initial(model, v_in, w_in)
    else:
        state = initial_state
        report = InitialReport(0.0, 0.0, model.constraint_residual(state.v.coeffs, state.w.coeffs), 0.0)
    resolved = config.resolved(model)
    result = RunResult(resolved, [], [], report)
    recorder = Recorder(model)
    reproject = config.reprojection
    v, w = state.v.coeffs, state.w.coeffs
    t0 = time.perf_counter()

    def emit(n, v, w, k):
        dv, dw, p = k
        s = Sample(n * dt, v, w, dv, dw, p)
        result.samples.append(s)
        result.records.append(recorder.record(s))
        if on_sample is not None:
            on_sample(s)

    try:
        k = model.tendency(v, w)
        emit(0, v, w, k)
        for n in range(1, steps + 1):
            re = reproject > 0 and n % reproject == 0
            v, w = _advance(model, v, w, dt, config.scheme, re, k if config.scheme == "rk4" else None)
            _check_blowup(model, v, w, n * dt)
            result.steps = n
            sample = n % config.cadence == 0 or n == steps
            if config.scheme == "rk4" or sample:
                k = model.tendency(v, w)
            if sample:
                emit(n, v, w, k)
    except NumericalFailure as exc:
        result.completed = False
        result.failure = str(exc)
        result.wall_time = time.perf_counter() - t0
        exc.partial = result
        raise
    result.wall_time = time.perf_counter() - t0
    log.info("run finished: %d steps in %.2fs", result.steps, result.wall_time)
    return result
