"""
Counter-based Gaussian increments shared by coupled runs.

Every draw comes from a Philox generator keyed by (seed, stream) whose counter is
set from the step index, so a draw depends only on (seed, stream, step, particle)
and never on evaluation order or the number of workers. Within a step, particle i
reads row i of the block, which makes prefixes stable in N.
"""

from __future__ import annotations

import enum
import math
from typing import Self

import numpy as np
import numpy.typing as npt

from kslab.math import vector


class Stream(enum.IntEnum):
    """Independent key streams carved out of one seed."""

    INIT = 0
    NOISE = 1
    GRID_SAMPLING = 2
    DIRECTIONS = 3
    BOOTSTRAP = 4


def generator(seed: int, stream: int, block: int = 0) -> np.random.Generator:
    """A Philox generator for (seed, stream), positioned at the given counter block."""
    bit_generator = np.random.Philox(
        key=np.array([seed, stream], dtype=np.uint64),
        counter=np.array([0, block, 0, 0], dtype=np.uint64),
    )
    return np.random.Generator(bit_generator)


class BrownianStore:
    """
    Increments N(0, dt I) indexed by (particle, step).

    An optional order maps particle i to the key row order[i], which is how a
    permuted ensemble keeps the noise of the particles it inherited.
    """

    def __init__(
        self,
        seed: int,
        dim: int,
        dt: float,
        order: npt.NDArray[np.int64] | None = None,
        scale: float = 1.0,
    ) -> None:
        self._seed = int(seed)
        self._dim = dim
        self._dt = dt
        self._order = None if order is None else np.asarray(order, dtype=np.int64)
        self._scale = scale

    @staticmethod
    def make(seed: int, dim: int, dt: float) -> BrownianStore:
        return BrownianStore(seed, dim, dt)

    @property
    def seed(self) -> int:
        return self._seed

    @property
    def dim(self) -> int:
        return self._dim

    @property
    def dt(self) -> float:
        return self._dt

    def permuted(self, order: npt.ArrayLike) -> BrownianStore:
        """A view in which particle i draws from the key row order[i]."""
        order = np.asarray(order, dtype=np.int64)
        if self._order is not None:
            order = self._order[order]
        return BrownianStore(self._seed, self._dim, self._dt, order, self._scale)

    def silenced(self) -> BrownianStore:
        """A store whose increments are all zero."""
        return BrownianStore(self._seed, self._dim, self._dt, self._order, 0.0)

    def set_dt(self, dt: float) -> Self:
        self._dt = dt
        return self

    def _rows(self, count: int) -> tuple[int, npt.NDArray[np.int64] | None]:
        if self._order is None:
            return count, None
        order = self._order[:count]
        return int(order.max()) + 1, order

    def increments(self, step: int, count: int) -> vector.Points:
        """Brownian increments of the first count particles over step n -> n + 1."""
        rows, order = self._rows(count)
        block = generator(self._seed, Stream.NOISE, step).standard_normal((rows, self._dim))
        if order is not None:
            block = block[order]
        return block * (self._scale * math.sqrt(self._dt))

    def uniforms(self, count: int, per_particle: int) -> vector.Array:
        """Uniforms in (0, 1), shape (count, per_particle), for initial sampling."""
        rows, order = self._rows(count)
        block = generator(self._seed, Stream.INIT).random((rows, per_particle))
        if order is not None:
            block = block[order]
        # random() is a multiple of 2^-53 in [0, 1); shift into the open interval.
        return np.clip(block + 2.0**-54, 2.0**-54, 1.0 - 2.0**-53)
