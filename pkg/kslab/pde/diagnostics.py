"""
Diagnostic functionals of PDE states: norms, moments, the d = 1 energy monitor
and the d = 2 smallness guard. Negative densities are clipped here only.
"""

from __future__ import annotations

import csv
import dataclasses
import logging
import math
import pathlib
from typing import TYPE_CHECKING, Self

import numpy as np

from kslab.grid import field as grid
from kslab.grid.field import GridField

if TYPE_CHECKING:
    from kslab.pde.state import PdeState

logger = logging.getLogger(__name__)

# Surrogate for the unknown interpolation constant of the d = 2 energy estimate.
SMALLNESS_CONSTANT = 1.0


@dataclasses.dataclass(frozen=True)
class DiagnosticsRow:
    t: float
    mass: float
    l2: float
    l3: float
    linf: float
    m1: float
    gradc_inf: float

    @staticmethod
    def columns() -> list[str]:
        return [f.name for f in dataclasses.fields(DiagnosticsRow)]

    def as_list(self) -> list[float]:
        return [getattr(self, name) for name in DiagnosticsRow.columns()]


def lr_norm(density: GridField, r: float) -> float:
    """(sum |rho_+|^r dx^d)^(1/r); r = inf gives the max norm."""
    clipped = np.clip(density.values, 0.0, None)
    if math.isinf(r):
        return float(clipped.max())
    return float((np.sum(clipped**r) * density.spec.cell_volume) ** (1.0 / r))


def first_moment(density: GridField) -> float:
    clipped = np.clip(density.values, 0.0, None)
    return float(np.sum(density.spec.radius() * clipped) * density.spec.cell_volume)


def gradient_sup(chemical: GridField) -> float:
    """max over the grid of the Euclidean norm of the spectral gradient."""
    gradient = grid.gradient(chemical).values
    return float(np.sqrt(np.sum(gradient**2, axis=0)).max())


def diagnostics_of(rho: GridField, c: GridField, t: float) -> DiagnosticsRow:
    return DiagnosticsRow(
        t=t,
        mass=rho.mass(),
        l2=lr_norm(rho, 2.0),
        l3=lr_norm(rho, 3.0),
        linf=lr_norm(rho, math.inf),
        m1=first_moment(rho),
        gradc_inf=gradient_sup(c),
    )


def diagnostics(state: PdeState) -> DiagnosticsRow:
    return diagnostics_of(state.rho, state.c, state.t)


class Diagnostics:
    """A time series of diagnostics rows."""

    def __init__(self) -> None:
        self._rows: list[DiagnosticsRow] = []

    def append(self, row: DiagnosticsRow) -> Self:
        self._rows.append(row)
        return self

    def __len__(self) -> int:
        return len(self._rows)

    @property
    def rows(self) -> list[DiagnosticsRow]:
        return list(self._rows)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(row, name) for row in self._rows])

    def is_finite(self) -> bool:
        return all(np.all(np.isfinite(row.as_list())) for row in self._rows)

    def mass_drift(self) -> float:
        """Largest deviation of the mass from its first recorded value."""
        mass = self.column("mass")
        return float(np.max(np.abs(mass - mass[0]))) if mass.size else 0.0

    def gradient_bound_constant(self) -> float:
        """
        Smallest C with |grad c(t)|_inf <= |grad c(0)|_inf + C sup_{s<=t} |rho(s)|_inf
        over the recorded rows.
        """
        gradients = self.column("gradc_inf")
        peaks = np.maximum.accumulate(self.column("linf"))
        excess = np.clip(gradients - gradients[0], 0.0, None)
        return float(np.max(excess / np.where(peaks > 0, peaks, 1.0)))

    def write_csv(self, path: pathlib.Path | str) -> None:
        with open(path, "w", newline="") as stream:
            writer = csv.writer(stream)
            writer.writerow(DiagnosticsRow.columns())
            for row in self._rows:
                writer.writerow([repr(float(value)) for value in row.as_list()])


class EnergyMonitor:
    """
    d = 1 energy functional |rho(t)|_r^r + (2(r-1)/r) int_0^t |d/dx rho^(r/2)|^2 ds,
    with the dissipation integral accumulated by the trapezoid rule.
    """

    def __init__(self, r: float = 2.0) -> None:
        if r <= 1:
            raise ValueError("the energy exponent must exceed 1, got {}".format(r))
        self._r = r
        self._times: list[float] = []
        self._values: list[float] = []
        self._dissipation = 0.0
        self._last_rate: float | None = None

    def _rates(self, density: GridField) -> tuple[float, float]:
        clipped = np.clip(density.values, 0.0, None)
        power = density.with_values(clipped ** (self._r / 2.0))
        derivative = grid.gradient(power).values
        dissipation = float(np.sum(derivative**2) * density.spec.cell_volume)
        norm = float(np.sum(clipped**self._r) * density.spec.cell_volume)
        return norm, dissipation

    def update(self, density: GridField, t: float) -> Self:
        norm, rate = self._rates(density)
        if self._times:
            self._dissipation += 0.5 * (t - self._times[-1]) * (rate + (self._last_rate or 0.0))
        self._last_rate = rate
        self._times.append(t)
        coefficient = 2.0 * (self._r - 1.0) / self._r
        self._values.append(norm + coefficient * self._dissipation)
        return self

    def observe(self, state: PdeState) -> None:
        self.update(state.rho, state.t)

    @property
    def times(self) -> np.ndarray:
        return np.array(self._times)

    @property
    def values(self) -> np.ndarray:
        return np.array(self._values)

    def growth_rate(self) -> float:
        """Smallest C with value(t) <= value(0) + C t over the recorded samples."""
        times, values = self.times, self.values
        if times.size < 2:
            return 0.0
        later = times > times[0]
        return float(np.max((values[later] - values[0]) / (times[later] - times[0])))

    def is_bounded(self) -> bool:
        return bool(np.all(np.isfinite(self.values)))


def smallness_coefficient(mass: float, r: float = 2.0) -> float:
    """4(r-1)/r - C M0 with the surrogate constant C."""
    return 4.0 * (r - 1.0) / r - SMALLNESS_CONSTANT * mass


def check_smallness(dim: int, mass: float, r: float = 2.0) -> bool:
    """Logs a warning when the d = 2 energy coefficient turns negative; returns whether it is safe."""
    if dim != 2:
        return True
    coefficient = smallness_coefficient(mass, r)
    if coefficient < 0:
        logger.warning(
            "d = 2 energy coefficient 4(r-1)/r - C*M0 = {:.3f} < 0 (M0={}, surrogate C={}); "
            "aggregation may not be controlled".format(coefficient, mass, SMALLNESS_CONSTANT)
        )
        return False
    return True
