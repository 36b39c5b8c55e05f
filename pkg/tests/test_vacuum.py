import math

import numpy as np
import pytest

from anelastic.errors import ResolutionError, SupportTooWide, ValidationError
from anelastic.galerkin import GalerkinModel, RunConfig
from anelastic.density import RegularizedVacuum
from anelastic.vacuum import (
    UNIFORM_QUANTITIES, constrained_perturbation, epsilon_sweep, min_resolved_epsilon, stability_probe,
)

BASE = {"m": 6, "dt": 2e-5, "t_end": 4e-4, "cadence": 5,
        "density": {"kind": "regularized", "alpha": 2.0, "epsilon": 0.25},
        "initial": {"kind": "stream", "amplitude": 0.1, "delta": 0.2}}


def test_guards():
    cfg = RunConfig.from_dict(BASE)
    with pytest.raises(SupportTooWide):
        epsilon_sweep(cfg, 1, 2)
    with pytest.raises(ResolutionError):
        epsilon_sweep(cfg, 2, 4)
    assert min_resolved_epsilon(6) == pytest.approx(1 / 12)
    tg = RunConfig.from_dict(dict(BASE, initial={"kind": "taylor-green"}))
    with pytest.raises(ValidationError):
        epsilon_sweep(tg, 2, 3)
    with pytest.raises(ValidationError):
        epsilon_sweep(cfg, 3, 2)


def test_small_sweep_tables():
    res = epsilon_sweep(RunConfig.from_dict(BASE), 2, 3)
    assert res.schedule == [0.25, 0.125]
    assert len(res.sweep_rows()) == 2 * len(UNIFORM_QUANTITIES)
    (j, sup, grad), = res.pairwise_rows()
    assert j == 2 and sup > 0 and grad >= 0
    # the shared u_in differs between eps only through Q_m
    assert res.initial_differences[0]["l2_diff_at_t0"] < 0.1 * res.runs[0].max_over_t("rho_half_u")
    assert all(r > 0 for r in res.uniform_ratios().values())


def test_constrained_perturbation():
    model = GalerkinModel(RegularizedVacuum(2.0, 0.125), 6)
    v, w = constrained_perturbation(model, seed=3)
    assert model.l2_sq(v, w) == pytest.approx(1.0)
    assert model.constraint_residual(v, w) < 1e-12
    v2, _ = constrained_perturbation(model, seed=3)
    np.testing.assert_array_equal(v, v2)


def test_stability_probe():
    cfg = RunConfig.from_dict(dict(BASE, density={"kind": "smooth", "cosine_coefficients": [2.0, 0.0, 1.0]}))
    rep = stability_probe(cfg, 1e-5)
    assert rep.bound_ok
    assert rep.initial_diff_sq == pytest.approx(1e-10, rel=1e-9)
    assert rep.sup_diff == pytest.approx(math.sqrt(rep.sup_diff_sq))
    with pytest.raises(ValidationError):
        stability_probe(cfg, 1.0)
