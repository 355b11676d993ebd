"""
Fields sampled on a uniform periodic grid over the box [-L, L)^d, and the
transfers between particles and the grid.

Node k of an axis sits at x_k = -L + k * dx with dx = 2L / M, so the origin is
node M / 2. Scalar fields hold values of shape (M,) * d; vector fields hold
values of shape (d, M, ..., M).
"""

from __future__ import annotations

import dataclasses
import functools
import itertools
from typing import Callable, Self

import numpy as np
import numpy.typing as npt
import scipy.fft as fft

from kslab.errors import SizeError
from kslab.math import vector
from kslab.utils import parallel
from kslab.utils.type_utils import is_power_of_two, require_finite

# Particles per deposit chunk.
DEPOSIT_CHUNK = 8192


@dataclasses.dataclass(frozen=True)
class GridSpec:
    """Geometry of a periodic grid: dimension, cells per axis and box half width."""

    dim: int
    cells: int
    half_width: float

    def __post_init__(self) -> None:
        if self.dim < 1:
            raise SizeError("Grid dimension must be at least 1, got {}".format(self.dim))
        if not is_power_of_two(self.cells):
            raise SizeError(
                "Cells per axis must be a power of two, got {}".format(self.cells)
            )
        if not self.half_width > 0:
            raise SizeError(
                "Half width must be positive, got {}".format(self.half_width)
            )

    @property
    def dx(self) -> float:
        return 2.0 * self.half_width / self.cells

    @property
    def cell_volume(self) -> float:
        return self.dx**self.dim

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.cells,) * self.dim

    def axis(self) -> vector.Array:
        """Node coordinates along one axis."""
        return -self.half_width + self.dx * np.arange(self.cells)

    def mesh(self) -> list[vector.Array]:
        """Node coordinates as d broadcastable arrays (sparse ij mesh)."""
        return np.meshgrid(*([self.axis()] * self.dim), indexing="ij", sparse=True)

    def node_points(self) -> vector.Points:
        """All nodes as an (M^d, d) array in row-major order."""
        dense = np.meshgrid(*([self.axis()] * self.dim), indexing="ij")
        return np.stack([coordinate.ravel() for coordinate in dense], axis=-1)

    def radius(self) -> vector.Array:
        """Distance of every node from the origin."""
        squared = sum(coordinate**2 for coordinate in self.mesh())
        return np.sqrt(np.broadcast_to(squared, self.shape))

    def wavenumbers(self) -> list[vector.Array]:
        """Angular wavenumbers in the rfftn layout, one broadcastable array per axis."""
        return list(_wavenumbers(self.dim, self.cells, self.half_width))

    def wavenumber_squared(self) -> vector.Array:
        """|k|^2 in the rfftn layout."""
        return _wavenumber_squared(self.dim, self.cells, self.half_width)

    def zeros(self, time: float = 0.0) -> GridField:
        return GridField(np.zeros(self.shape), self, time)

    def sample(
        self, function: Callable[[vector.Points], vector.Array], time: float = 0.0
    ) -> GridField:
        """Evaluates a function of (n, d) points on every node."""
        values = np.asarray(function(self.node_points()), dtype=np.float64)
        return GridField(values.reshape(self.shape), self, time)


@functools.lru_cache(maxsize=32)
def _wavenumbers(dim: int, cells: int, half_width: float) -> tuple[vector.Array, ...]:
    dx = 2.0 * half_width / cells
    result = []
    for axis in range(dim):
        if axis == dim - 1:
            k = 2.0 * np.pi * fft.rfftfreq(cells, dx)
        else:
            k = 2.0 * np.pi * fft.fftfreq(cells, dx)
        shape = [1] * dim
        shape[axis] = k.size
        result.append(k.reshape(shape))
    return tuple(result)


@functools.lru_cache(maxsize=32)
def _wavenumber_squared(dim: int, cells: int, half_width: float) -> vector.Array:
    squared = sum(k**2 for k in _wavenumbers(dim, cells, half_width))
    return np.asarray(squared)


def _derivative_symbols(spec: GridSpec, shift: float = 0.0) -> list[vector.Array]:
    """
    Spectral symbols i*k_a (times exp(i*k_a*shift) for staggered evaluation).
    The Nyquist mode is dropped so that the result stays real.
    """
    symbols = []
    for k in spec.wavenumbers():
        symbol = 1j * k * np.exp(1j * k * shift)
        if spec.cells % 2 == 0:
            nyquist = np.isclose(np.abs(k), np.pi / spec.dx)
            symbol = np.where(nyquist, 0.0, symbol)
        symbols.append(symbol)
    return symbols


class GridField:
    """A scalar or vector field on a periodic grid, stamped with the time it represents."""

    def __init__(self, values: npt.ArrayLike, spec: GridSpec, time: float = 0.0) -> None:
        self._values = np.asarray(values, dtype=np.float64)
        self._spec = spec
        self._time = float(time)
        trailing = self._values.shape[-spec.dim :] if self._values.ndim >= spec.dim else ()
        if trailing != spec.shape or self._values.ndim not in (spec.dim, spec.dim + 1):
            raise SizeError(
                "Field values of shape {} do not fit a grid of shape {}".format(
                    self._values.shape, spec.shape
                )
            )
        require_finite(self._values, "grid field")

    @staticmethod
    def make(values: npt.ArrayLike, spec: GridSpec, time: float = 0.0) -> GridField:
        return GridField(values, spec, time)

    @property
    def values(self) -> vector.Array:
        return self._values

    @property
    def spec(self) -> GridSpec:
        return self._spec

    @property
    def time(self) -> float:
        return self._time

    @property
    def dim(self) -> int:
        return self._spec.dim

    @property
    def is_vector(self) -> bool:
        return self._values.ndim == self._spec.dim + 1

    @property
    def components(self) -> int:
        return self._values.shape[0] if self.is_vector else 1

    def set_time(self, time: float) -> Self:
        self._time = float(time)
        return self

    def with_values(self, values: npt.ArrayLike, time: float | None = None) -> GridField:
        return GridField(values, self._spec, self._time if time is None else time)

    def copy(self) -> GridField:
        return GridField(self._values.copy(), self._spec, self._time)

    def mass(self) -> float:
        """Sum of values times the cell volume (per component for vector fields)."""
        axes = tuple(range(-self.dim, 0))
        return float(np.sum(self._values, axis=axes).sum() * self._spec.cell_volume)

    def spectrum(self) -> npt.NDArray[np.complex128]:
        return fft.rfftn(self._values, axes=tuple(range(-self.dim, 0)))

    def from_spectrum(
        self, spectrum: npt.NDArray[np.complex128], time: float | None = None
    ) -> GridField:
        values = fft.irfftn(
            spectrum, s=self._spec.shape, axes=tuple(range(-self.dim, 0))
        )
        return self.with_values(values, time)

    def __add__(self, other: GridField) -> GridField:
        return self.with_values(self._values + other.values)

    def __sub__(self, other: GridField) -> GridField:
        return self.with_values(self._values - other.values)

    def __mul__(self, factor: float) -> GridField:
        return self.with_values(self._values * factor)

    __rmul__ = __mul__

    def __repr__(self) -> str:
        return "GridField(dim={}, cells={}, L={}, components={}, t={})".format(
            self.dim, self._spec.cells, self._spec.half_width, self.components, self._time
        )


def gradient(field: GridField) -> GridField:
    """Spectral gradient of a scalar field; the result has zero mean on the box."""
    if field.is_vector:
        raise SizeError("gradient expects a scalar field")
    spectrum = field.spectrum()
    parts = [
        fft.irfftn(symbol * spectrum, s=field.spec.shape, axes=tuple(range(field.dim)))
        for symbol in _derivative_symbols(field.spec)
    ]
    return field.with_values(np.stack(parts))


def face_gradient(field: GridField) -> GridField:
    """
    Gradient component a evaluated on the faces x + dx/2 * e_a, by a spectral
    half-cell shift. Component a of the result belongs to the faces normal to axis a.
    """
    if field.is_vector:
        raise SizeError("face_gradient expects a scalar field")
    spec = field.spec
    spectrum = field.spectrum()
    symbols = _derivative_symbols(spec, shift=0.5 * spec.dx)
    parts = [
        fft.irfftn(symbol * spectrum, s=spec.shape, axes=tuple(range(field.dim)))
        for symbol in symbols
    ]
    return field.with_values(np.stack(parts))


def _cell_coordinates(
    spec: GridSpec, points: vector.Points
) -> tuple[npt.NDArray[np.int64], vector.Array]:
    scaled = (points + spec.half_width) / spec.dx
    base = np.floor(scaled)
    frac = scaled - base
    return np.mod(base.astype(np.int64), spec.cells), frac


def interp(field: GridField, x: npt.ArrayLike) -> vector.Array:
    """
    Multilinear interpolation with periodic wrap.

    Returns shape (n,) for scalar fields and (n, components) for vector fields;
    a single d-vector query drops the leading axis.
    """
    spec = field.spec
    single = np.ndim(x) == 1 and spec.dim > 1 or np.ndim(x) == 0
    points = vector.as_points(x, spec.dim)
    index, frac = _cell_coordinates(spec, points)
    values = field.values
    lead = (slice(None),) if field.is_vector else ()
    result = None
    for corner in itertools.product((0, 1), repeat=spec.dim):
        weight = np.ones(points.shape[0])
        nodes = []
        for axis, offset in enumerate(corner):
            weight = weight * (frac[:, axis] if offset else 1.0 - frac[:, axis])
            nodes.append((index[:, axis] + offset) % spec.cells)
        term = values[lead + tuple(nodes)] * weight
        result = term if result is None else result + term
    assert result is not None
    if field.is_vector:
        result = result.T
    return result[0] if single else result


def canonical_order(points: vector.Points) -> npt.NDArray[np.int64]:
    """Lexicographic order of the rows; independent of how the rows were indexed."""
    return np.lexsort(points.T[::-1])


def deposit(points: vector.Points, spec: GridSpec, time: float = 0.0, workers: int = 1) -> GridField:
    """
    Cloud-in-cell deposition of weight 1/N per particle, returned as a density.

    Particles are visited in canonical order and chunks are merged in chunk order,
    so the result is bitwise independent of particle indexing and worker count.
    """
    points = vector.wrap(vector.as_points(points, spec.dim), spec.half_width)
    count = points.shape[0]
    ordered = points[canonical_order(points)]
    weight = 1.0 / count

    def deposit_chunk(bounds: tuple[int, int]) -> vector.Array:
        start, stop = bounds
        index, frac = _cell_coordinates(spec, ordered[start:stop])
        buffer = np.zeros(spec.cells**spec.dim)
        for corner in itertools.product((0, 1), repeat=spec.dim):
            w = np.full(stop - start, weight)
            flat = np.zeros(stop - start, dtype=np.int64)
            for axis, offset in enumerate(corner):
                w = w * (frac[:, axis] if offset else 1.0 - frac[:, axis])
                flat = flat * spec.cells + (index[:, axis] + offset) % spec.cells
            np.add.at(buffer, flat, w)
        return buffer

    buffers = parallel.ordered_map(
        deposit_chunk, parallel.chunk_bounds(count, DEPOSIT_CHUNK), workers
    )
    total = buffers[0]
    for buffer in buffers[1:]:
        total = total + buffer
    return GridField(total.reshape(spec.shape) / spec.cell_volume, spec, time)
