import csv
import logging
import math
import pathlib

import numpy as np
import pytest

from kslab.grid.field import GridField, GridSpec
from kslab.particles.initial import InitialData
from kslab.pde import diagnostics
from kslab.pde.state import PdeState, solve_path


def gaussian(spec: GridSpec, sigma: float) -> GridField:
    return spec.sample(
        lambda p: np.exp(-p[:, 0] ** 2 / (2 * sigma**2)) / math.sqrt(2 * math.pi * sigma**2)
    )


def test_norms_of_a_gaussian(line: GridSpec):
    rho = gaussian(line, 0.5)
    assert diagnostics.lr_norm(rho, 2.0) == pytest.approx((4 * math.pi * 0.25) ** -0.25, rel=1e-10)
    assert diagnostics.lr_norm(rho, math.inf) == pytest.approx(1 / math.sqrt(2 * math.pi * 0.25))


def test_first_moment_of_a_gaussian():
    fine = GridSpec(1, 8192, 8.0)
    assert diagnostics.first_moment(gaussian(fine, 0.5)) == pytest.approx(
        0.5 * math.sqrt(2 / math.pi), rel=1e-5
    )


def test_negative_values_are_clipped(line: GridSpec):
    rho = GridField(-np.ones(line.shape), line)
    assert diagnostics.lr_norm(rho, 2.0) == 0.0
    assert diagnostics.first_moment(rho) == 0.0


def test_series_and_csv(tmp_path: pathlib.Path, line: GridSpec):
    init = InitialData(dim=1, chem="gaussian", chem_amplitude=0.5)
    path = solve_path(PdeState.make(init, line, 0.1, 0.01), 4, 2)
    series = path.diagnostics
    np.testing.assert_allclose(series.column("t"), [0.0, 0.02, 0.04])
    assert series.gradient_bound_constant() >= 0.0
    series.write_csv(tmp_path / "diag.csv")
    with open(tmp_path / "diag.csv") as stream:
        rows = list(csv.reader(stream))
    assert rows[0] == ["t", "mass", "l2", "l3", "linf", "m1", "gradc_inf"]
    assert len(rows) == 4


def test_energy_does_not_grow_under_the_heat_flow(line: GridSpec):
    monitor = diagnostics.EnergyMonitor()
    init = InitialData(dim=1, sigma=0.4)
    solve_path(PdeState.make(init, line, 0.0, 0.01, coupling=0.0), 20, observer=monitor.observe)
    assert monitor.times.size == 21
    assert monitor.is_bounded()
    assert monitor.growth_rate() <= 0.0
    with pytest.raises(ValueError):
        diagnostics.EnergyMonitor(r=1.0)


def test_smallness_guard(caplog: pytest.LogCaptureFixture):
    assert diagnostics.check_smallness(1, 100.0)
    assert diagnostics.check_smallness(2, 0.5)
    with caplog.at_level(logging.WARNING):
        assert not diagnostics.check_smallness(2, 3.0)
    assert "aggregation" in caplog.text
    assert diagnostics.smallness_coefficient(1.0, 3.0) == pytest.approx(8.0 / 3.0 - 1.0)
