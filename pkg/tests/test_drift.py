import numpy as np
import pytest

from kslab.errors import StateError
from kslab.grid.field import GridSpec
from kslab.math import vector
from kslab.particles import drift as drifts
from kslab.particles.brownian import BrownianStore
from kslab.particles.ensemble import DriftMode, ParticleEnsemble, default_decimation
from kslab.particles.initial import InitialData, init_ensemble
from kslab.particles.integrator import simulate
from kslab.pde.state import PdeState, solve_path

EPS, DT, LAM = 0.2, 0.05, 0.1


def test_memory_drift_vanishes_inside_the_cut_off():
    ens = ParticleEnsemble(np.random.default_rng(0).normal(size=(8, 2)), dt=DT)
    for _ in range(4):
        ens.advance(ens.positions.copy())
    assert ens.time == pytest.approx(EPS)
    np.testing.assert_array_equal(drifts.memory_drift_direct(ens, EPS, LAM), np.zeros((8, 2)))


def test_single_particle_helper_matches_the_batch():
    ens = ParticleEnsemble(np.random.default_rng(1).normal(size=(6, 1)), dt=DT)
    for _ in range(8):
        ens.advance(ens.positions + 0.01)
    batch = drifts.memory_drift_direct(ens, EPS, LAM)
    np.testing.assert_allclose(drifts.drift_interacting_direct(2, ens, EPS, LAM), batch[2], atol=1e-15)


def test_a_frozen_pair_attracts():
    ens = ParticleEnsemble(np.array([[-0.5], [0.5]]), dt=DT)
    for _ in range(10):
        ens.advance(ens.positions.copy())
    drift = drifts.memory_drift_direct(ens, EPS, LAM)
    assert drift[0, 0] > 0
    assert drift[1, 0] < 0
    assert drift[0, 0] == pytest.approx(-drift[1, 0], rel=1e-12)


def _fast_vs_direct(cells: int) -> float:
    spec = GridSpec(1, cells, 8.0)
    init = InitialData(dim=1, sigma=0.5)
    store = BrownianStore.make(2, 1, DT)
    ens = init_ensemble(init, 64, store).set_stepping(DT, default_decimation(EPS, DT))
    fast = drifts.FastInteraction(init, EPS, LAM, spec)
    simulate(ens, fast, store, 10, spec.half_width)
    direct = drifts.memory_drift_direct(ens, EPS, LAM, half_width=spec.half_width)
    approx = fast(ens)
    return float(np.max(vector.row_norms(approx - direct)) / np.max(vector.row_norms(direct)))


def test_fast_drift_converges_to_the_direct_sum():
    coarse, fine = _fast_vs_direct(256), _fast_vs_direct(512)
    assert fine <= 0.05
    assert coarse / fine >= 1.8


def test_fast_drift_rejects_a_stale_field(line: GridSpec):
    init = InitialData(dim=1)
    ens = ParticleEnsemble(np.zeros((4, 1)), dt=DT)
    fast = drifts.FastInteraction(init, EPS, LAM, line).start(ens)
    ens.advance(ens.positions.copy())
    with pytest.raises(StateError):
        fast(ens)
    with pytest.raises(StateError):
        drifts.fast_drift(ens, fast.phi_grad, init, LAM)


def test_mean_field_drift_checks_the_path(line: GridSpec):
    init = InitialData(dim=1)
    limit = solve_path(PdeState.make(init, line, LAM, DT), 2)
    delayed = solve_path(PdeState.make(init, line, LAM, DT, EPS), 2)
    points = np.zeros((3, 1))
    with pytest.raises(StateError):
        drifts.drift_meanfield(points, 0.0, delayed, DriftMode.LIMIT)
    with pytest.raises(StateError):
        drifts.drift_meanfield(points, 0.0, limit, DriftMode.INTERMEDIATE)
    with pytest.raises(StateError):
        drifts.drift_meanfield(points, 0.0, limit, DriftMode.INTERACTING)
    with pytest.raises(StateError):
        drifts.drift_meanfield(points, 0.0, None, DriftMode.LIMIT)
    # A centred Gaussian pulls towards the origin, which itself feels no drift.
    values = drifts.drift_meanfield(np.array([[-1.0], [0.0], [1.0]]), 2 * DT, limit, DriftMode.LIMIT)
    assert values[0, 0] > 0 > values[2, 0]
    assert values[1, 0] == pytest.approx(0.0, abs=1e-12)


def test_single_particle_fast_helper_matches_the_batch(line: GridSpec):
    init = InitialData(dim=1, sigma=0.5)
    store = BrownianStore.make(3, 1, DT)
    ens = init_ensemble(init, 16, store).set_stepping(DT, 1)
    fast = drifts.FastInteraction(init, EPS, LAM, line)
    simulate(ens, fast, store, 6, line.half_width)
    batch = fast(ens)
    single = drifts.drift_interacting_fast(5, ens, fast.phi_grad, init, LAM)
    np.testing.assert_allclose(single, batch[5], atol=1e-15)
