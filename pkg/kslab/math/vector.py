"""
    A collection of semantic aliases for type hinting used throughout the library.

    Arrays are plain numpy float64 arrays; the aliases document their layout.
"""
from typing import TypeAlias, cast

import numpy as np
import numpy.typing as npt

Array: TypeAlias = npt.NDArray[np.float64]

# A single point or displacement in R^d, shape (d,).
Vector: TypeAlias = Array
# A cloud of n points, shape (n, d).
Points: TypeAlias = Array
# Samples of a scalar field on the grid, shape (M,) * d.
ScalarSamples: TypeAlias = Array
# Samples of a vector field on the grid, shape (d, M, ..., M).
VectorSamples: TypeAlias = Array
# A time series sampled on the step grid.
Series: TypeAlias = Array

# A time, in the model's (dimensionless) time units
Time = float


def as_points(x: npt.ArrayLike, dim: int) -> Points:
    """
    Returns x as a float64 (n, dim) array. A single point of shape (dim,) becomes (1, dim).
    """
    points = np.asarray(x, dtype=np.float64)
    if points.ndim == 0:
        points = points.reshape(1, 1)
    elif points.ndim == 1:
        points = points.reshape(-1, dim) if dim > 1 else points.reshape(-1, 1)
    if points.ndim != 2 or points.shape[1] != dim:
        raise ValueError(
            "Expected points of dimension {}, got shape {}.".format(dim, points.shape)
        )
    return points


def norm(vector: Vector) -> float:
    """
    Returns the norm (length) of a vector.
    """
    return cast(float, np.linalg.norm(vector))


def row_norms(points: Points) -> Array:
    """Euclidean norm of every row."""
    return np.sqrt(np.sum(points * points, axis=-1))


def wrap(points: Points, half_width: float) -> Points:
    """Maps points into the periodic box [-L, L)^d."""
    period = 2.0 * half_width
    return np.mod(points + half_width, period) - half_width


def minimum_image(delta: Array, half_width: float) -> Array:
    """Shortest periodic representative of a displacement."""
    period = 2.0 * half_width
    return delta - period * np.round(delta / period)


def unit_directions(rng: np.random.Generator, dim: int, count: int) -> Array:
    """Returns count uniformly random unit vectors as the columns of a (dim, count) array."""
    directions = rng.standard_normal((dim, count))
    return directions / np.linalg.norm(directions, axis=0, keepdims=True)
