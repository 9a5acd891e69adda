"""Pipelines: preparation, drive optimization, radiation, sweeps, and the
minimum-phase-variance eigenproblem."""

import numpy as np
import pytest

from cavityspin import dynamics, lindblad, observables, scenarios, spinfock
from cavityspin.scenarios import (ScenarioConfig, coherent_phase_baseline,
                                  envelope, first_minimum_sample,
                                  min_phase_state, optimize_alpha,
                                  prepare_sas, radiate,
                                  squeezing_first_minimum)


def test_prepare_sas_conserves_excitation():
    prep = prepare_sas(6, 2.0, 0.6, n_samples=12)
    e = np.array([r.nbar + r.sz for r in prep.records])
    assert np.max(np.abs(e - e[0])) < 1e-8
    assert np.isclose(prep.records[0].squeezing_factor, 1.0, atol=1e-9)
    assert prep.records[-1].squeezing_factor < 1.0
    assert prep.joint_state is not None


def test_prepare_sas_dissipative_matches_lossless_at_zero_loss():
    loss = prepare_sas(3, 1.2, 0.3, n_samples=4,
                       dissipation=lindblad.DissipationParams(1e-9, 0.0),
                       dt=1e-3)
    pure = prepare_sas(3, 1.2, 0.3, n_samples=4)
    assert np.max(np.abs(loss.rho_atoms - pure.rho_atoms)) < 1e-8


def test_prepare_sas_dissipative_loses_excitation():
    prep = prepare_sas(3, 1.2, 0.4, n_samples=6,
                       dissipation=lindblad.DissipationParams(0.2, 0.1),
                       dt=2e-3, tolerance=1e-4, with_purity=True)
    e = [r.nbar + r.sz for r in prep.records]
    assert e[-1] < e[0] - 1e-4
    assert prep.records[-1].purity_atoms <= 1.0 + 1e-9


def test_squeezing_first_minimum_interior():
    gt_star, f_star = squeezing_first_minimum(6, 2.6, coarse=120)
    assert 0.0 < gt_star < 1.2
    assert f_star < 1.0
    # the refined point is no worse than a dense scan around it
    basis = spinfock.build_basis(6, 2.6)
    H = dynamics.build_blocks(basis)
    psi0 = spinfock.product_state(
        spinfock.coherent_field_state(2.6, basis.photon_cut),
        spinfock.css_state(3.0, 0.0))
    for gt in np.linspace(gt_star - 0.02, gt_star + 0.02, 21):
        psi = dynamics.evolve_unitary(psi0, H, gt)
        rho_a = spinfock.partial_trace_state(psi, basis, "spin")
        assert observables.squeezing_factor(rho_a) >= f_star - 1e-6


def test_optimize_alpha_deterministic():
    a = optimize_alpha(4, alphas=(1.8, 2.2, 2.6), coarse=80)
    b = optimize_alpha(4, alphas=(1.8, 2.2, 2.6), coarse=80)
    assert (a.alpha, a.gt, a.factor) == (b.alpha, b.gt, b.factor)
    assert a.factor < 1.0


def test_optimize_alpha_edge_warning():
    with pytest.warns(UserWarning):
        opt = optimize_alpha(4, alphas=(0.6, 0.8), coarse=60)
    assert opt.edge_warning


def test_radiate_initial_sample_is_vacuum():
    atoms = dynamics.align_and_tilt(scenarios.cas_input_state(6), 0.3, 0.0)
    recs = radiate(atoms, 0.4, n_samples=8)
    r0 = recs[0]
    assert np.isclose(r0.nbar, 0.0, atol=1e-12)
    assert np.isclose(r0.var_a1, 0.25, atol=1e-10)
    assert np.isclose(r0.var_a2, 0.25, atol=1e-10)
    e = np.array([r.nbar + r.sz for r in recs])
    assert np.max(np.abs(e - e[0])) < 1e-8


def test_radiate_requires_negative_sz():
    top = spinfock.css_state(2.0, 0.0)
    with pytest.raises(ValueError):
        radiate(top, 0.2)


def test_radiate_mixed_state_matches_master_equation():
    rng = np.random.default_rng(31)
    # a mildly mixed squeezed-ish state
    prep = prepare_sas(4, 1.8, 0.5, n_samples=2)
    rho = 0.9 * prep.rho_atoms
    ground = spinfock.css_state(2.0, np.pi)
    rho += 0.1 * np.outer(ground, ground.conj())
    rho = dynamics.align_and_tilt(rho, 0.2, 0.0)
    fast = radiate(rho, 0.3, n_samples=3)
    slow = radiate(rho, 0.3, n_samples=3,
                   dissipation=lindblad.DissipationParams(1e-9, 0.0),
                   dt=1e-3, tolerance=1e-5)
    for rf, rs in zip(fast, slow):
        assert np.isclose(rf.var_a_min, rs.var_a_min, atol=1e-6)
        assert np.isclose(rf.nbar, rs.nbar, atol=1e-6)
        assert np.isclose(rf.sz, rs.sz, atol=1e-6)


def test_first_minimum_sample():
    recs = [observables.ObservableRecord(gt=i, var_a_min=v)
            for i, v in enumerate([5.0, 4.0, 3.0, 3.5, 4.0, 3.6, 3.8, 3.9])]
    assert first_minimum_sample(recs) == 2


def test_envelope_is_a_lower_bound():
    recs_a = [observables.ObservableRecord(gt=0, nbar=x, fano=1.0 + x)
              for x in np.linspace(0.1, 4.9, 20)]
    recs_b = [observables.ObservableRecord(gt=0, nbar=x, fano=2.0 - 0.2 * x)
              for x in np.linspace(0.1, 4.9, 20)]
    fams = [(0.1, recs_a), (0.2, recs_b)]
    xs, lo = envelope(fams, "nbar", "fano", np.linspace(0.0, 5.0, 6))
    assert len(xs) == 5
    for _, recs in fams:
        for r in recs:
            k = np.searchsorted(np.linspace(0.0, 5.0, 6), r.nbar) - 1
            if 0 <= k < len(lo):
                assert lo[k] <= r.fano + 1e-12


def test_parallel_map_preserves_order():
    items = list(range(20))
    assert scenarios.parallel_map(lambda x: x * x, items, threads=4) == \
        [x * x for x in items]


def test_default_tilts_range():
    tilts = scenarios.default_tilts()
    assert tilts[0] == 0.0
    assert tilts[-1] < np.pi / 2


def test_tailor_pipeline_smoke():
    cfg = ScenarioConfig(N=6, alpha=2.6, gt_prep=0.55, tilt=0.25,
                         azimuth=0.0, rad_window=0.6, rad_samples=30,
                         prep_samples=10)
    res = scenarios.tailor_pipeline(cfg, spin_grid_points=(61, 121),
                                    field_grid_points=41)
    assert 0 <= res.snapshot_index < len(res.rad_records)
    assert np.isfinite(res.phase_ratio)
    assert abs(res.spin_grid.integral() - 1.0) < 0.02
    assert res.field_grid.values.min() >= 0.0
    assert res.snapshot.var_a_min <= res.rad_records[0].var_a_min + 1e-12
    mean = observables.mean_spin(res.prepared_atoms)
    assert mean[2] < 0


def test_tailor_pipeline_snapshot_override():
    cfg = ScenarioConfig(N=4, alpha=1.8, gt_prep=0.5, tilt=0.2,
                         rad_window=0.4, rad_samples=8, prep_samples=4,
                         snapshot_gt=0.2)
    res = scenarios.tailor_pipeline(cfg, with_grids=False)
    assert np.isclose(res.rad_records[res.snapshot_index].gt, 0.2, atol=0.05)
    assert res.spin_grid is None


def test_scenario_config_dissipation():
    cfg = ScenarioConfig(gamma_f=0.1, gamma_a=0.2)
    params = cfg.dissipation()
    assert params.gamma_f == 0.1 and params.gamma_a == 0.2


def test_contour_helpers_parabolic_min():
    assert scenarios._parabolic_min([3.0, 1.0, 3.0], 1) == 1.0
    vals = [2.0, 1.1, 1.0, 1.3]
    refined = scenarios._parabolic_min(vals, 2)
    assert refined <= 1.0
    assert scenarios._parabolic_min(vals, 0) == 2.0


def test_min_phase_state_vacuum():
    sol = min_phase_state(0.0)
    assert np.isclose(sol.variance, np.pi ** 2 / 3.0, atol=1e-12)
    assert sol.coefficients[0] == 1.0


@pytest.mark.parametrize("nbar", [0.5, 2.0, 10.0])
def test_min_phase_state_properties(nbar):
    sol = min_phase_state(nbar)
    c = sol.coefficients
    assert np.isclose(np.sum(c * c), 1.0, atol=1e-9)
    assert np.isclose(np.arange(len(c)) @ (c * c), nbar, atol=1e-5)
    assert sol.residual < 1e-8
    # beats the coherent state of equal mean photon number
    assert sol.variance < coherent_phase_baseline(nbar)
    # stable against a larger Fock cut
    bigger = min_phase_state(nbar, n_max=2 * sol.n_max)
    assert abs(bigger.variance - sol.variance) < 1e-7


def test_min_phase_state_guards():
    with pytest.raises(ValueError):
        min_phase_state(-1.0)
    with pytest.raises(ValueError):
        min_phase_state(50.0, n_max=10)


def test_coherent_phase_baseline():
    assert np.isclose(coherent_phase_baseline(0.0), np.pi ** 2 / 3.0,
                      atol=1e-9)
    vals = [coherent_phase_baseline(x) for x in (0.5, 1.0, 4.0, 10.0, 25.0)]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    assert abs(vals[-1] - 0.01) < 0.0015


def test_optimal_drive_guess_monotone():
    ns = np.array([2, 10, 50, 100])
    vals = scenarios.optimal_drive_guess(ns)
    assert np.all(np.diff(vals) > 0)
