import math

import numpy as np
import pytest

from kslab.errors import ConfigError, StateError
from kslab.grid.field import GridField, GridSpec
from kslab.math import kernels
from kslab.particles.initial import InitialData
from kslab.pde import state as pde
from kslab.pde.state import PdeState, solve_path

DT = 0.01


def test_uncoupled_density_follows_the_heat_flow(line: GridSpec):
    init = InitialData(dim=1, sigma=0.5, chem="gaussian", chem_amplitude=1.0)
    path = solve_path(PdeState.make(init, line, 0.1, DT, coupling=0.0), 10)
    variance = 0.25 + 2 * 10 * DT
    expected = line.sample(
        lambda p: np.exp(-p[:, 0] ** 2 / (2 * variance)) / math.sqrt(2 * math.pi * variance)
    )
    np.testing.assert_allclose(path.rho(10).values, expected.values, atol=1e-8)


def test_mass_is_conserved(plane: GridSpec):
    init = InitialData(dim=2, sigma=0.6, chem="gaussian", chem_amplitude=2.0, chem_width=0.8)
    path = solve_path(PdeState.make(init, plane, 0.1, DT), 20)
    assert path.diagnostics.mass_drift() < 1e-12
    assert path.diagnostics.is_finite()


@pytest.mark.parametrize("grid_name", ["line", "plane"])
@pytest.mark.parametrize("eps", [None, 0.04])
def test_mass_is_conserved_over_long_runs(grid_name: str, eps: float | None, request: pytest.FixtureRequest):
    spec: GridSpec = request.getfixturevalue(grid_name)
    init = InitialData(dim=spec.dim, sigma=0.6, chem="gaussian", chem_amplitude=1.0, chem_width=0.8)
    state = PdeState.make(init, spec, 0.1, DT, eps)
    mass0 = state.rho.mass()
    for _ in range(1000):
        state = pde.advance(state)
        assert abs(state.rho.mass() - mass0) <= 1e-10
    assert np.all(np.isfinite(state.rho.values))


def test_zero_cut_off_matches_the_limit_chemical(line: GridSpec):
    init = InitialData(dim=1, chem="gaussian", chem_amplitude=0.5)
    limit = solve_path(PdeState.make(init, line, 0.2, DT), 5)
    delayed = solve_path(PdeState.make(init, line, 0.2, DT, eps=0.0), 5)
    np.testing.assert_allclose(delayed.c(5).values, limit.c(5).values, atol=1e-12)
    np.testing.assert_allclose(delayed.rho(5).values, limit.rho(5).values, atol=1e-12)


def test_unstable_steps_are_refused(line: GridSpec):
    init = InitialData(dim=1, chem="gaussian", chem_amplitude=50.0, chem_width=0.5)
    with pytest.raises(ConfigError, match="CFL"):
        pde.advance(PdeState.make(init, line, 0.0, 0.1))


def test_cell_outflow_through_both_faces_counts_towards_cfl(line: GridSpec):
    speed = 2.0
    single = speed * DT / line.dx
    assert single < pde.CFL_LIMIT < 2 * single
    uniform = GridField(np.full((1, line.cells), speed), line)
    assert pde.cfl_number(uniform, DT) == pytest.approx(single)
    values = np.zeros((1, line.cells))
    k = line.cells // 2
    values[0, k] = speed
    values[0, k - 1] = -speed
    spreading = GridField(values, line)
    assert pde.cfl_number(spreading, DT) == pytest.approx(2 * single)
    state = PdeState.make(InitialData(dim=1), line, 0.0, DT)
    with pytest.raises(ConfigError, match="CFL"):
        pde.step_density(state, DT, spreading)


def test_density_cannot_advance_twice(line: GridSpec):
    state = pde.step_density(PdeState.make(InitialData(dim=1), line, 0.0, DT), DT)
    with pytest.raises(StateError):
        pde.step_density(state, DT)
    with pytest.raises(StateError):
        pde.step_chemical_intermediate(state, DT)


def test_path_records_every_kth_step(line: GridSpec):
    path = solve_path(PdeState.make(InitialData(dim=1), line, 0.0, DT, eps=0.04), 10, 4)
    assert path.recorded_steps() == [0, 4, 8]
    assert path.steps == 10
    assert path.eps == 0.04
    assert len(path.diagnostics) == 3
    path.grad_c(10)
    with pytest.raises(StateError):
        path.rho(5)
    with pytest.raises(StateError):
        path.grad_c(11)


def test_observer_sees_every_state(line: GridSpec):
    seen = []
    solve_path(PdeState.make(InitialData(dim=1), line, 0.0, DT), 3, observer=lambda s: seen.append(s.step))
    assert seen == [0, 1, 2, 3]


def test_limit_chemical_step_is_the_trapezoid_update(line: GridSpec):
    init = InitialData(dim=1, sigma=0.5, chem="gaussian", chem_amplitude=1.0)
    start = PdeState.make(init, line, 0.2, DT)
    moved = pde.step_density(start, DT)
    stepped = pde.step_chemical_limit(moved, DT)
    source = start.c.with_values(start.c.values + 0.5 * DT * start.rho.values)
    expected = kernels.decayed_semigroup(source, DT, 0.2).values + 0.5 * DT * moved.rho.values
    np.testing.assert_allclose(stepped.c.values, expected, atol=1e-14)
    assert stepped.c.time == pytest.approx(DT)
    assert stepped.step == 1
    with pytest.raises(StateError):
        pde.step_chemical_limit(pde.step_density(PdeState.make(init, line, 0.2, DT, 0.04), DT), DT)


def test_constant_velocity_moves_the_centre_of_mass(line: GridSpec):
    init = InitialData(dim=1, sigma=0.5)
    state = PdeState.make(init, line, 0.0, DT)
    velocity = GridField(np.full((1, line.cells), 0.5), line)
    x = line.axis()

    def centre(rho: GridField) -> float:
        return float(np.sum(x * rho.values) / np.sum(rho.values))

    start = centre(state.rho)
    for _ in range(10):
        state = pde.step_chemical_limit(pde.step_density(state, DT, velocity), DT)
    assert centre(state.rho) - start == pytest.approx(0.05, abs=1e-3)


def test_limit_chemical_relaxes_to_the_elliptic_solution(line: GridSpec):
    lam, dt = 1.0, 0.001
    state = PdeState.make(InitialData(dim=1, sigma=1.0), line, lam, dt)
    for _ in range(int(round(20.0 / lam / dt))):
        state = pde.step_chemical_limit(state, dt)
    k = 2.0 * math.pi * np.fft.fftfreq(line.cells, line.dx)
    residual = np.fft.ifft((lam + k**2) * np.fft.fft(state.c.values)).real - state.rho.values
    assert np.max(np.abs(residual)) <= 1e-6


def test_intermediate_chemical_before_the_cut_off(line: GridSpec):
    init = InitialData(dim=1, chem="gaussian", chem_amplitude=1.0, chem_width=0.7)
    state = PdeState.make(init, line, 0.3, DT, eps=0.05)
    for _ in range(4):
        state = pde.advance(state)
    expected = kernels.decayed_semigroup(state.c0, 0.04, 0.3)
    np.testing.assert_allclose(state.c.values, expected.values, atol=1e-12)
    assert not np.any(state.phi.values)
