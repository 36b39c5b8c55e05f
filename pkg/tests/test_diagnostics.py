import math

import numpy as np
import pytest

from anelastic.density import ConstantDensity, RegularizedVacuum
from anelastic.diagnostics import (
    COLUMNS, HARDY_FAMILIES, MONITOR_COLUMNS, ChannelQuadrature, Recorder, boundary_traces, energy_identity_residual,
    energy_monotone, global_monitors, hardy_check, hardy_suite, hardy_uniformity, vertical_identity, weighted_norms,
)
from anelastic.errors import DegenerateDenominator
from anelastic.galerkin import GalerkinModel, RunConfig, Sample, initial_fields, prepare_initial, run, taylor_green


@pytest.fixture(scope="module")
def vac():
    model = GalerkinModel(RegularizedVacuum(2.0, 0.125), 8)
    state, _ = prepare_initial(model, *initial_fields({"kind": "stream", "amplitude": 0.1}, model.profile, 8))
    return model, state


def test_channel_quadrature_integrates_profile():
    rho = RegularizedVacuum(2.0, 0.125)
    quad = ChannelQuadrature(rho, 8)
    ones = np.ones((quad.z.size, quad.nx))
    assert quad.integrate(ones) == pytest.approx(2.0, rel=1e-14)
    # int rho over the channel = 2 r_0
    assert quad.weighted_sq(ones, quad.rho) == pytest.approx(2 * rho.cosine_coefficients(0)[0], rel=1e-12)
    cum = quad.cumulative(lambda z: np.ones_like(z))
    np.testing.assert_allclose(cum, quad.z, atol=1e-14)


def test_weighted_norms_reduce_for_unit_density():
    model = GalerkinModel(ConstantDensity(1.0), 6)
    quad = ChannelQuadrature(model.profile, 6)
    v, w = taylor_green(6)
    dv, dw, p = model.tendency(v.coeffs, w.coeffs)
    n = weighted_norms(model, quad, v.coeffs, w.coeffs, dv, dw, p)
    assert n["rho_half_u"] == pytest.approx(1.0)
    assert n["ut_weighted"] == pytest.approx(2 * np.pi**2)
    # |dzz u| = pi^2 |u| and |grad p| for p = (cos 2 pi x + cos 2 pi z) / 4
    assert n["dzz_weighted"] == pytest.approx(np.pi**2, rel=1e-12)
    assert n["p_weighted"] == pytest.approx(math.sqrt(2 * (np.pi / 2) ** 2 * 0.5 * 2), rel=1e-12)


def test_boundary_traces_vanish(vac):
    model, state = vac
    traces = boundary_traces(state.v.coeffs, state.w.coeffs)
    assert set(traces) == {"dzv_0", "dzv_1", "w_0", "w_1"}
    assert max(traces.values()) < 1e-13


def test_vertical_identity(vac):
    model, state = vac
    proj, unproj = vertical_identity(model, ChannelQuadrature(model.profile, 8), state.v.coeffs, state.w.coeffs)
    assert proj < 1e-12
    assert unproj < 0.1


def test_recorder_columns(vac):
    model, state = vac
    dv, dw, p = model.tendency(state.v.coeffs, state.w.coeffs)
    row = Recorder(model).record(Sample(0.0, state.v.coeffs, state.w.coeffs, dv, dw, p))
    assert set(COLUMNS) <= set(row) and set(MONITOR_COLUMNS) <= set(row)
    assert row["energy_identity_residual"] == 0.0
    assert row["E_log"] == pytest.approx(math.e + model.dissipation(state.v.coeffs, 0 * state.w.coeffs)
                                         + row["ut_weighted"] ** 2)
    assert math.isfinite(row["duality"])


def test_energy_identity_and_monotone_helpers():
    recs = [{"t": t, "energy": math.exp(-2 * t), "dissipation": math.exp(-2 * t)} for t in np.linspace(0, 1, 2001)]
    assert energy_identity_residual(recs) < 1e-6
    assert energy_monotone(recs) == (True, pytest.approx(-1e-3, abs=1e-3))
    recs[5] = dict(recs[5], energy=2.0)
    ok, worst = energy_monotone(recs)
    assert not ok and worst > 0


def test_global_monitor_modes():
    res = run(RunConfig.from_dict({"m": 4, "dt": 1e-4, "t_end": 2e-3, "cadence": 5}))
    log_rows = global_monitors(res.records, "2d-log")
    assert len(log_rows) == len(res.records)
    assert log_rows[0][2] == 0.0 and log_rows[-1][2] > 0
    small = global_monitors(res.records, "3d-small")
    assert not small[-1][2]
    with pytest.raises(ValueError):
        global_monitors(res.records, "4d")


def test_hardy_closed_forms():
    f, df = HARDY_FAMILIES["z"]
    assert hardy_check(f, df, 0.0, 0.0) == pytest.approx(5 / 8, abs=1e-8)
    assert hardy_check(f, df, -1.5, 0.0) == pytest.approx(1.0, abs=1e-8)
    # k = 1, f = 1: int z / int z^3 = 2
    one, d1 = HARDY_FAMILIES["one"]
    assert hardy_check(one, d1, 1.0, 0.0) == pytest.approx(2.0, abs=1e-10)


def test_hardy_degenerate_cases():
    one, d1 = HARDY_FAMILIES["one"]
    with pytest.raises(ValueError):
        hardy_check(one, d1, -1.0, 0.1)
    # constant f on the k < -1 branch: f - f(0) = 0, ratio 0 rather than 0 / 0
    assert hardy_check(one, d1, -1.5, 0.1) == 0.0
    with pytest.raises(DegenerateDenominator):
        hardy_check(lambda z: z * 0 + (z > 0.5), lambda z: 0 * z, -1.5, 0.1)


def test_hardy_suite_structure():
    rows = hardy_suite(ks=(0.0, -1.5), eps_values=(0.5, 0.25))
    assert {(r.k, r.family) for r in rows if r.k == -1.5} == {(-1.5, f) for f in ("z", "z2", "sin")}
    assert all(math.isfinite(r.ratio) and r.ratio > 0 for r in rows)
    spread = hardy_uniformity(rows)
    assert all(s >= 1 for s in spread.values())
