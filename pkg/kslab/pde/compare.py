"""Distances between an intermediate solution and the limit solution on a ball."""

from __future__ import annotations

import csv
import dataclasses
import pathlib

import numpy as np

from kslab.errors import SizeError
from kslab.grid.field import GridField
from kslab.pde.state import PdePath


@dataclasses.dataclass(frozen=True)
class LimitDistance:
    """L2(B_R) distances of rho^eps - rho and c^eps - c at the shared recorded times."""

    times: np.ndarray
    rho_l2: np.ndarray
    c_l2: np.ndarray
    radius: float

    @property
    def rho_sup(self) -> float:
        return float(np.max(self.rho_l2))

    @property
    def c_sup(self) -> float:
        return float(np.max(self.c_l2))

    def write_csv(self, path: pathlib.Path | str) -> None:
        with open(path, "w", newline="") as stream:
            writer = csv.writer(stream)
            writer.writerow(["t", "rho_l2", "c_l2"])
            for row in zip(self.times, self.rho_l2, self.c_l2):
                writer.writerow([repr(float(value)) for value in row])


def ball_l2(difference: GridField, radius: float) -> float:
    """
    L2 norm of a field restricted to the ball of the given radius about the origin.
    A radius reaching the box half width covers the whole periodic box.
    """
    spec = difference.spec
    values = difference.values
    if radius < spec.half_width:
        values = values[spec.radius() <= radius]
    return float(np.sqrt(np.sum(values**2) * spec.cell_volume))


def compare_eps_to_limit(
    path_eps: PdePath, path_limit: PdePath, radius: float
) -> LimitDistance:
    if not np.isclose(path_eps.dt, path_limit.dt, rtol=1e-12):
        raise SizeError(
            "paths use different steps ({} vs {})".format(path_eps.dt, path_limit.dt)
        )
    steps = sorted(set(path_eps.recorded_steps()) & set(path_limit.recorded_steps()))
    if not steps:
        raise SizeError("paths share no recorded steps")
    rho_l2 = [ball_l2(path_eps.rho(n) - path_limit.rho(n), radius) for n in steps]
    c_l2 = [ball_l2(path_eps.c(n) - path_limit.c(n), radius) for n in steps]
    return LimitDistance(
        times=np.array(steps, dtype=np.float64) * path_eps.dt,
        rho_l2=np.array(rho_l2),
        c_l2=np.array(c_l2),
        radius=radius,
    )
