"""Particle ensembles and their decimated position history."""

from __future__ import annotations

import enum
import math
from typing import Self

import numpy as np
import numpy.typing as npt

from kslab.errors import SizeError, StateError
from kslab.math import vector
from kslab.utils.type_utils import require_finite


class DriftMode(enum.StrEnum):
    """Which of the three coupled processes an ensemble follows."""

    INTERACTING = "interacting"
    INTERMEDIATE = "intermediate"
    LIMIT = "limit"


def default_decimation(eps: float, dt: float) -> int:
    """History stride max(1, ceil(eps / (8 dt))): at least eight nodes per cut-off window."""
    if eps <= 0:
        return 1
    return max(1, math.ceil(eps / (8.0 * dt) - 1e-9))


class ParticleEnsemble:
    """
    Positions of N particles at step n, time n * dt, plus snapshots taken every
    k_dec steps (the initial positions are always the first snapshot).
    """

    def __init__(
        self,
        positions: vector.Points,
        mode: DriftMode = DriftMode.INTERACTING,
        dt: float = 0.0,
        decimation: int = 1,
    ) -> None:
        positions = np.array(positions, dtype=np.float64)
        if positions.ndim != 2 or positions.shape[0] < 1:
            raise SizeError("positions must be an (N, d) array with N >= 1")
        require_finite(positions, "particle positions")
        self._positions = positions
        self._mode = mode
        self._dt = dt
        self._decimation = max(1, decimation)
        self._step = 0
        self._history_steps: list[int] = [0]
        self._history: list[vector.Points] = [positions.copy()]

    @staticmethod
    def make(positions: npt.ArrayLike, mode: DriftMode = DriftMode.INTERACTING) -> ParticleEnsemble:
        return ParticleEnsemble(np.asarray(positions, dtype=np.float64), mode)

    def set_stepping(self, dt: float, decimation: int) -> Self:
        """Fixes the step and history stride; only allowed before the first step."""
        if self._step != 0:
            raise StateError("stepping can only be set before the first step")
        self._dt = dt
        self._decimation = max(1, decimation)
        return self

    def copy(self, mode: DriftMode | None = None) -> ParticleEnsemble:
        if self._step != 0:
            raise StateError("only fresh ensembles can be copied")
        return ParticleEnsemble(
            self._positions.copy(), self._mode if mode is None else mode, self._dt, self._decimation
        )

    def permuted(self, order: npt.ArrayLike) -> ParticleEnsemble:
        """A fresh ensemble whose particle i is this ensemble's particle order[i]."""
        if self._step != 0:
            raise StateError("only fresh ensembles can be permuted")
        return ParticleEnsemble(self._positions[np.asarray(order)], self._mode, self._dt, self._decimation)

    @property
    def positions(self) -> vector.Points:
        return self._positions

    @property
    def size(self) -> int:
        return self._positions.shape[0]

    @property
    def dim(self) -> int:
        return self._positions.shape[1]

    @property
    def mode(self) -> DriftMode:
        return self._mode

    @property
    def step(self) -> int:
        return self._step

    @property
    def dt(self) -> float:
        return self._dt

    @property
    def time(self) -> float:
        return self._step * self._dt

    @property
    def decimation(self) -> int:
        return self._decimation

    @property
    def history_spacing(self) -> float:
        return self._decimation * self._dt

    def history_times(self) -> vector.Array:
        return np.array(self._history_steps, dtype=np.float64) * self._dt

    def history_length(self) -> int:
        return len(self._history)

    def history_at(self, times: vector.Array) -> vector.Array:
        """Stacked snapshots (K, N, d) at the given stored times."""
        indices = np.rint(np.asarray(times) / self.history_spacing).astype(np.int64)
        if indices.size and (indices.min() < 0 or indices.max() >= len(self._history)):
            raise StateError(
                "history holds {} snapshots, asked for index {}".format(
                    len(self._history), int(indices.max())
                )
            )
        if indices.size == 0:
            return np.zeros((0,) + self._positions.shape)
        return np.stack([self._history[k] for k in indices])

    def advance(self, positions: vector.Points) -> Self:
        """Moves to the next step with new positions, recording them on decimation steps."""
        if positions.shape != self._positions.shape:
            raise SizeError("cannot change the ensemble size while stepping")
        require_finite(positions, "particle positions")
        self._positions = positions
        self._step += 1
        if self._step % self._decimation == 0:
            self._history_steps.append(self._step)
            self._history.append(positions.copy())
        return self
