import csv
import pathlib

import numpy as np
import pytest

from kslab.errors import SizeError
from kslab.grid.field import GridField, GridSpec
from kslab.particles.initial import InitialData
from kslab.pde.compare import ball_l2, compare_eps_to_limit
from kslab.pde.state import PdeState, solve_path

INIT = InitialData(dim=1, chem="gaussian", chem_amplitude=0.5)


def test_ball_norm_of_a_constant(line: GridSpec):
    ones = GridField(np.ones(line.shape), line)
    assert ball_l2(ones, 2.0) == pytest.approx(np.sqrt(4.0 + line.dx), rel=1e-12)


def test_large_balls_cover_the_whole_box(plane: GridSpec):
    ones = GridField(np.ones(plane.shape), plane)
    full = np.sqrt(plane.cells**2 * plane.cell_volume)
    assert ball_l2(ones, plane.half_width) == pytest.approx(full, rel=1e-12)
    assert ball_l2(ones, 10 * plane.half_width) == pytest.approx(full, rel=1e-12)
    assert ball_l2(ones, 0.5 * plane.half_width) < full


def test_identical_paths_are_at_distance_zero(line: GridSpec):
    path = solve_path(PdeState.make(INIT, line, 0.1, 0.01, eps=0.04), 8, 4)
    distance = compare_eps_to_limit(path, path, 2.0)
    np.testing.assert_allclose(distance.times, [0.0, 0.04, 0.08])
    assert distance.c_sup == 0.0
    assert distance.rho_sup == 0.0


def test_distance_shrinks_with_the_cut_off(tmp_path: pathlib.Path, line: GridSpec):
    limit = solve_path(PdeState.make(INIT, line, 0.1, 0.01), 40, 5)
    distances = [
        compare_eps_to_limit(
            solve_path(PdeState.make(INIT, line, 0.1, 0.01, eps=eps), 40, 5), limit, 2.0
        )
        for eps in (0.2, 0.05)
    ]
    assert distances[1].c_sup < distances[0].c_sup
    distances[0].write_csv(tmp_path / "limit.csv")
    with open(tmp_path / "limit.csv") as stream:
        rows = list(csv.reader(stream))
    assert rows[0] == ["t", "rho_l2", "c_l2"]
    assert len(rows) == 10


def test_paths_must_share_steps(line: GridSpec):
    first = solve_path(PdeState.make(INIT, line, 0.1, 0.01), 2)
    second = solve_path(PdeState.make(INIT, line, 0.1, 0.02), 2)
    with pytest.raises(SizeError):
        compare_eps_to_limit(first, second, 2.0)
