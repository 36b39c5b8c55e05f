"""Continuation toward the vacuum profile and perturbation-stability probes.

``epsilon_sweep`` reruns one configuration with ``rho = q_eps^alpha`` for a
halving schedule of eps and measures how consecutive solutions approach each
other; ``stability_probe`` runs a solution against a small constrained
perturbation of its initial data.
"""

import dataclasses
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .density import profile_from_config
from .errors import ResolutionError, SupportTooWide, ValidationError
from .galerkin import GalerkinModel, State, build_model, initial_fields, prepare_initial, run

log = logging.getLogger(__name__)

UNIFORM_QUANTITIES = (
    "rho_half_u", "dissipation", "ut_weighted", "grad_ut", "enstrophy_h", "dzz_weighted", "p_weighted", "duality",
)


def min_resolved_epsilon(m):
    """Smallest eps whose blend interval ``[eps/4, eps/2]`` is resolved at resolution m."""
    return 1.0 / (2 * m)


@dataclass
class EpsilonRun:
    epsilon: float
    times: np.ndarray
    v: np.ndarray
    w: np.ndarray
    records: list
    summary: dict

    def max_over_t(self, quantity):
        vals = [abs(r[quantity]) for r in self.records]
        return float(max(vals)) if vals else 0.0


@dataclass
class SweepResult:
    schedule: list
    runs: list
    pairwise: list = field(default_factory=list)
    uniform: dict = field(default_factory=dict)
    initial_differences: list = field(default_factory=list)

    def cauchy_ok(self):
        """Pairwise sup-differences non-increasing in j."""
        d = [p["sup_diff"] for p in self.pairwise]
        return all(b <= a for a, b in zip(d, d[1:]))

    def uniform_ratios(self):
        """``{quantity: max ratio between consecutive eps}`` of the max-over-t table."""
        out = {}
        for q, vals in self.uniform.items():
            ratios = [max(a, b) / min(a, b) for a, b in zip(vals, vals[1:]) if min(a, b) > 0]
            out[q] = max(ratios) if ratios else 1.0
        return out

    def sweep_rows(self):
        return [(eps, q, vals[i]) for q, vals in self.uniform.items() for i, eps in enumerate(self.schedule)]

    def pairwise_rows(self):
        return [(p["j"], p["sup_diff"], p["grad_diff_integral"]) for p in self.pairwise]


def _config_for(base, eps, dt):
    density = dict(base.density, kind="regularized", epsilon=eps)
    return dataclasses.replace(base, density=density, dt=dt)


def _run_one(args):
    cfg, eps = args
    res = run(cfg)
    return EpsilonRun(
        epsilon=eps,
        times=np.array([s.t for s in res.samples]),
        v=np.stack([s.v for s in res.samples]),
        w=np.stack([s.w for s in res.samples]),
        records=res.records,
        summary=res.summary(build_model(cfg)),
    )


def epsilon_sweep(base, j0=2, j1=6, workers=1):
    """Run ``base`` for ``eps_j = 2^-j``, ``j0 <= j <= j1``, and compare consecutive runs.

    Parameters
    ----------
    base : RunConfig
        Supplies m, dt, t_end, alpha and the stream-function initial data.
    j0, j1 : int
        Schedule bounds.
    workers : int
        Number of processes for the independent runs.

    Raises
    ------
    SupportTooWide
        If the initial support margin delta does not exceed ``eps_j0 / 2``.
    ResolutionError
        If ``eps_j1 < 1 / (2m)``.
    """
    if j1 < j0:
        raise ValidationError("schedule needs j1 >= j0")
    schedule = [2.0**-j for j in range(j0, j1 + 1)]
    ini = base.initial
    if ini.get("kind") != "stream":
        raise ValidationError("the sweep needs stream-function initial data supported away from the walls")
    delta = ini.get("delta", 0.2)
    if not delta > schedule[0] / 2:
        raise SupportTooWide(f"delta={delta} must exceed eps/2={schedule[0] / 2} so every run shares u_in")
    floor = min_resolved_epsilon(base.m)
    if schedule[-1] < floor:
        raise ResolutionError(f"eps={schedule[-1]} is below the resolved floor 1/(2m)={floor} at m={base.m}")
    dt = base.dt
    if dt is None:
        bounds = [GalerkinModel(profile_from_config(dict(base.density, kind="regularized", epsilon=e)), base.m).rk4_bound
                  for e in schedule]
        dt = 0.5 * min(bounds)
    jobs = [(_config_for(base, eps, dt), eps) for eps in schedule]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            runs = list(pool.map(_run_one, jobs))
    else:
        runs = [_run_one(j) for j in jobs]
    result = SweepResult(schedule, runs)
    result.uniform = {q: [r.max_over_t(q) for r in runs] for q in UNIFORM_QUANTITIES}
    for i, (a, b) in enumerate(zip(runs, runs[1:])):
        # compare in the weight of the smaller eps
        model = build_model(jobs[i + 1][0])
        dv, dw = a.v - b.v, a.w - b.w
        sup = max(math.sqrt(max(model.energy(x, y), 0.0)) for x, y in zip(dv, dw))
        grads = np.array([model.dissipation(x, y) for x, y in zip(dv, dw)])
        t = a.times
        integral = float(np.sum(0.5 * (grads[1:] + grads[:-1]) * np.diff(t))) if t.size > 1 else 0.0
        init = math.sqrt(model.l2_sq(dv[0], dw[0]))
        result.pairwise.append({"j": j0 + i, "sup_diff": sup, "grad_diff_integral": integral})
        result.initial_differences.append({"j": j0 + i, "l2_diff_at_t0": init})
    return result


# -- perturbation stability ---------------------------------------------------

def constrained_perturbation(model, seed=0, decay=2.0):
    """Random constrained velocity with unit L2 norm and spectrum decaying like ``|k|^-decay``."""
    rng = np.random.default_rng(seed)
    m = model.m
    shape = (2 * m + 1, m + 1)
    k1, k2 = np.meshgrid(np.arange(-m, m + 1), np.arange(m + 1), indexing="ij")
    scale = (1.0 + k1**2 + k2**2) ** (-decay / 2)

    def draw():
        c = (rng.normal(size=shape) + 1j * rng.normal(size=shape)) * scale
        return 0.5 * (c + np.conj(c[::-1]))

    v, w = draw(), draw()
    w[:, 0] = 0.0
    v, w, _ = model.project(v, w)
    n = math.sqrt(model.l2_sq(v, w))
    return v / n, w / n


@dataclass
class StabilityReport:
    eta: float
    times: list
    diff_l2_sq: list
    diff_weighted_sq: list
    grad_diff_integral: float
    initial_diff_sq: float
    c_meas: float
    gronwall_fit: float
    bound_ok: bool

    @property
    def sup_diff_sq(self):
        return max(self.diff_l2_sq) if self.diff_l2_sq else 0.0

    @property
    def sup_diff(self):
        return math.sqrt(self.sup_diff_sq)


def stability_probe(config, eta, seed=0, model=None):
    """Run ``u_in`` and ``u_in + eta * perturbation`` and compare.

    ``sup_t |u1 - u2|^2 <= 10 exp(C_meas) |u1(0) - u2(0)|^2`` is checked with
    ``C_meas = int_0^T (1 + |grad u2|^2)``; the smallest ``C`` making
    ``exp(C int (1 + |u2|_H1^4))`` an envelope of the squared difference is
    reported as ``gronwall_fit``.

    Raises
    ------
    ValidationError
        If ``eta > 1e-2 |u_in|``.
    """
    model = model or build_model(config)
    v_in, w_in = initial_fields(config.initial, model.profile, model.m)
    s1, _ = prepare_initial(model, v_in, w_in)
    size = math.sqrt(model.l2_sq(s1.v.coeffs, s1.w.coeffs))
    if eta > 1e-2 * size:
        raise ValidationError(f"eta={eta} exceeds 1e-2 |u_in| = {1e-2 * size:.3e}")
    pv, pw = constrained_perturbation(model, seed)
    s2 = State.from_arrays(0.0, s1.v.coeffs + eta * pv, s1.w.coeffs + eta * pw)
    r1 = run(config, model, initial_state=s1)
    r2 = run(config, model, initial_state=s2)
    times, d2, dw2, grads, c_int, h_int = [], [], [], [], [], []
    acc_c = acc_h = 0.0
    prev = None
    for a, b in zip(r1.samples, r2.samples):
        dv, dw = a.v - b.v, a.w - b.w
        g2 = model.dissipation(b.v, b.w)
        h1 = model.l2_sq(b.v, b.w) + g2
        if prev is not None:
            dt = a.t - prev[0]
            acc_c += 0.5 * dt * ((1 + prev[1]) + (1 + g2))
            acc_h += 0.5 * dt * ((1 + prev[2] ** 2) + (1 + h1**2))
        prev = (a.t, g2, h1)
        times.append(a.t)
        d2.append(model.l2_sq(dv, dw))
        dw2.append(model.energy(dv, dw))
        grads.append(model.dissipation(dv, dw))
        c_int.append(acc_c)
        h_int.append(acc_h)
    t = np.array(times)
    g = np.array(grads)
    grad_int = float(np.sum(0.5 * (g[1:] + g[:-1]) * np.diff(t))) if t.size > 1 else 0.0
    d0 = d2[0] if d2 else 0.0
    fit = 0.0
    if d0 > 0:
        for di, hi in zip(d2[1:], h_int[1:]):
            if hi > 0 and di > d0:
                fit = max(fit, math.log(di / d0) / hi)
    ok = max(d2) <= 10.0 * math.exp(acc_c) * d0 if d2 else True
    return StabilityReport(eta, times, d2, dw2, grad_int, d0, acc_c, fit, ok)
