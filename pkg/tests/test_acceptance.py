"""Acceptance criteria, each at its stated tolerance.

Every test prints one ``criterion N: PASS|FAIL (...)`` line; the lines are
repeated in the terminal summary. Slow runs are shared through a small cache,
and every run made here also feeds the energy-decay check of criterion 9.
"""

import json
import math
import time
from functools import lru_cache

import numpy as np
import pytest

from anelastic.cli import load_shipped, shipped_configs
from anelastic.density import ConstantDensity, RegularizedVacuum, make_q_eps, verify_profile_properties
from anelastic.diagnostics import (
    HARDY_FAMILIES, energy_identity_residual, energy_monotone, global_monitors, hardy_check, hardy_suite,
    hardy_uniformity,
)
from anelastic.galerkin import GalerkinModel, RunConfig, build_model, initial_fields, prepare_initial, run
from anelastic.pressure import PressureSystem
from anelastic.vacuum import epsilon_sweep, stability_probe

RUNS = {}


@lru_cache(maxsize=None)
def _cached(key):
    cfg = RunConfig.from_dict(json.loads(key))
    t0 = time.perf_counter()
    res = run(cfg)
    RUNS[key] = res.records
    if len(res.samples) > 200:
        # records carry the diagnostics; keep the coefficient history small
        res.samples = [res.samples[0], res.samples[-1]]
    return res, time.perf_counter() - t0


def run_dict(data):
    return _cached(json.dumps(data, sort_keys=True))


def shipped(name, **changes):
    d = load_shipped(name)
    d.update(changes)
    return d


def test_criterion_01_taylor_green(report):
    res, wall = run_dict(shipped("taylor_green"))
    model = build_model(RunConfig.from_dict(shipped("taylor_green")))
    first, last = res.samples[0], res.samples[-1]
    decay = math.exp(-2 * math.pi**2 * last.t)
    err = math.sqrt(model.l2_sq(last.v - decay * first.v, last.w - decay * first.w)
                    / model.l2_sq(decay * first.v, decay * first.w))
    ok = err <= 1e-6 and wall < 30 and abs(last.t - 0.1) < 1e-12
    report(1, ok, f"rel L2 error {err:.2e} <= 1e-6, wall {wall:.1f}s < 30s")
    assert ok


@pytest.mark.parametrize("name", shipped_configs())
def test_criterion_02_energy_identity(report, name):
    base = shipped(name)
    coarse, _ = run_dict(base)
    fine, _ = run_dict(dict(base, dt=base["dt"] / 2))
    r1 = energy_identity_residual(coarse.records)
    r2 = energy_identity_residual(fine.records)
    ok = r1 <= 1e-5 and r2 > 0 and r1 / r2 >= 3
    report(2, ok, f"{name}: residual {r1:.2e} <= 1e-5, dt halved {r2:.2e}, reduction {r1 / r2:.2f} >= 3")
    assert ok


def test_criterion_03_constraint(report):
    d = shipped("vacuum_regularized", cadence=1000)
    d["t_end"] = 10_000 * d["dt"]
    res, _ = run_dict(d)
    model = build_model(RunConfig.from_dict(d))
    last = res.samples[-1]
    worst = max(model.constraint_residual(s.v, s.w) for s in res.samples)
    ok = res.steps == 10_000 and worst <= 1e-9
    report(3, ok, f"{res.steps} rk4 steps, max |div P_m(rho u)|/|u|_H1 = {worst:.2e} <= 1e-9, t={last.t:.4g}")
    assert ok


def test_criterion_04_q_correction(report):
    t0 = time.perf_counter()
    prof = RegularizedVacuum(2.0, 0.125)
    initial = load_shipped("vacuum_regularized")["initial"]
    norms = []
    for m in (8, 16, 32):
        model = GalerkinModel(prof, m)
        _, rep = prepare_initial(model, *initial_fields(initial, prof, m))
        norms.append(rep.q_h3)
    wall = time.perf_counter() - t0
    ratios = [b / a for a, b in zip(norms, norms[1:])]
    ok = all(r <= 0.7 for r in ratios) and wall < 60
    report(4, ok, f"|Q_m|_H3 = {', '.join(f'{q:.3g}' for q in norms)}, ratios "
                  f"{', '.join(f'{r:.3f}' for r in ratios)} <= 0.7, wall {wall:.1f}s")
    assert ok


def test_criterion_05_pressure_reduction(report):
    worst = 0.0
    for m in range(1, 17):
        dense = PressureSystem.assemble(ConstantDensity(1.0), m).dense()
        k = np.array([(k1, k2) for k2 in range(m + 1) for k1 in range(-m, m + 1) if (k1, k2) != (0, 0)])
        expected = np.diag(-np.pi**2 * (k[:, 0] ** 2 + k[:, 1] ** 2).astype(float))
        worst = max(worst, float(np.max(np.abs(dense - expected))))
    ok = worst <= 1e-12
    report(5, ok, f"max entry deviation {worst:.1e} <= 1e-12 for m = 1..16")
    assert ok


def test_criterion_06_hardy(report):
    rows = hardy_suite()
    finite = all(math.isfinite(r.ratio) for r in rows)
    spread = hardy_uniformity(rows)
    worst_key = max(spread, key=spread.get)
    f, df = HARDY_FAMILIES["z"]
    a0 = abs(hardy_check(f, df, 0.0, 0.0) - 5 / 8)
    a1 = abs(hardy_check(f, df, -1.5, 0.0) - 1.0)
    ok = finite and max(spread.values()) <= 2 and a0 <= 1e-8 and a1 <= 1e-8
    report(6, ok, f"{len(rows)} ratios finite={finite}; max/min across eps {spread[worst_key]:.2f} "
                  f"at (k, family)={worst_key} vs 2; anchors off by {a0:.1e}, {a1:.1e}")
    assert ok


def test_criterion_07_profile_properties(report):
    reps = [verify_profile_properties(make_q_eps(2.0**-j), 4096) for j in range(1, 9)]
    sups = [r.property5_sup for r in reps]
    ratio = max(sups) / min(sups)
    props = all(r.monotone and r.bounds and r.deviation_ok and r.c3_ok for r in reps)
    ok = props and ratio <= 1.5
    report(7, ok, f"properties 3-5 pass={props}; property-5 sup ratio {ratio:.3f} vs 1.5 "
                  f"(sups {min(sups):.1f}..{max(sups):.1f})")
    assert ok


def test_criterion_08_cauchy(report):
    base = RunConfig.from_dict(shipped("vacuum_regularized", t_end=0.05, dt=2.5e-6, cadence=25))
    t0 = time.perf_counter()
    res = epsilon_sweep(base, 2, 5)
    wall = time.perf_counter() - t0
    d = [p["sup_diff"] for p in res.pairwise]
    for r in res.runs:
        RUNS[f"sweep eps={r.epsilon}"] = r.records
    ok = res.cauchy_ok() and len(d) >= 3 and wall < 600
    report(8, ok, f"sup diffs {', '.join(f'{x:.3e}' for x in d)} non-increasing, wall {wall:.0f}s < 600s")
    assert ok


def test_criterion_10_stability(report):
    config = RunConfig.from_dict(shipped("smooth_stream", cadence=20))
    a = stability_probe(config, 1e-4)
    b = stability_probe(config, 5e-5)
    halving = a.sup_diff / b.sup_diff
    ok = a.bound_ok and b.bound_ok and abs(halving - 2.0) <= 0.2
    report(10, ok, f"sup|u1-u2|^2 = {a.sup_diff_sq:.2e} <= 10 exp({a.c_meas:.3f}) * {a.initial_diff_sq:.2e}; "
                   f"eta halved ratio {halving:.3f} within 10% of 2")
    assert ok


def test_criterion_11_small_data(report):
    # imex keeps a unit-time run cheap at m=16; the criterion needs no energy identity
    d = shipped("vacuum_regularized", scheme="imex-euler", dt=1e-4, t_end=1.0, cadence=100)
    d["initial"] = dict(d["initial"], amplitude=5e-7)
    res, _ = run_dict(d)
    rows = global_monitors(res.records, "3d-small")
    e0 = rows[0][1]
    violated = rows[-1][2]
    ok = e0 <= 1e-4 and not violated and res.samples[-1].t == pytest.approx(1.0)
    report(11, ok, f"E(0) = {e0:.2e} <= 1e-4, max E(t>0) = {max(r[1] for r in rows[1:]):.2e}, "
                   f"E(t) <= E(0) on all {len(rows)} samples to t=1")
    assert ok


def test_criterion_12_mass_matrix(report):
    smallest = {}
    for name in shipped_configs():
        model = build_model(RunConfig.from_dict(load_shipped(name)))
        smallest[name] = float(model.mass.eigenvalues().min())
    unit = GalerkinModel(ConstantDensity(1.0), 16).mass.dense()
    dev = float(np.max(np.abs(unit - np.eye(unit.shape[0]))))
    ok = all(v > 0 for v in smallest.values()) and dev <= 1e-12
    report(12, ok, "min eigenvalues " + ", ".join(f"{k} {v:.2e}" for k, v in smallest.items())
           + f"; |M - I| = {dev:.1e} for rho = 1, m = 16")
    assert ok


def test_criterion_09_energy_decay(report):
    # runs last so every earlier run is included
    if not RUNS:
        for name in shipped_configs():
            run_dict(shipped(name))
    bad = {}
    for key, records in RUNS.items():
        ok, worst = energy_monotone(records)
        if not ok:
            bad[key] = worst
    ok = not bad
    report(9, ok, f"{len(RUNS)} runs, {len(bad)} with an energy increase" + (f": {bad}" if bad else ""))
    assert ok
