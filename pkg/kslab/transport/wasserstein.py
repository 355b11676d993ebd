"""
Wasserstein-1 distances between equal-size empirical measures, and between an
empirical measure and a density on the grid.
"""

from __future__ import annotations

import dataclasses
import enum
import math

import numpy as np
import numpy.typing as npt
import ot

from kslab.errors import SizeError, StateError
from kslab.grid.field import GridField
from kslab.math import vector
from kslab.particles.brownian import Stream, generator
from kslab.particles.ensemble import ParticleEnsemble

# Largest n handed to the exact assignment solver.
EXACT_LIMIT = 512
# Network simplex iteration cap, large enough for n = EXACT_LIMIT.
EMD_ITERATIONS = 10_000_000


class Method(enum.StrEnum):
    SORTED_1D = "sorted-1d"
    ASSIGNMENT_EXACT = "assignment-exact"
    SLICED = "sliced"


@dataclasses.dataclass(frozen=True)
class EmpiricalMeasure:
    """Uniform weights on n support points in R^d."""

    points: vector.Points

    def __post_init__(self) -> None:
        points = np.asarray(self.points, dtype=np.float64)
        if points.ndim == 1:
            points = points[:, None]
        if points.ndim != 2 or points.shape[0] < 1:
            raise SizeError("an empirical measure needs at least one point")
        if not np.all(np.isfinite(points)):
            raise SizeError("support points must be finite")
        object.__setattr__(self, "points", points)

    @staticmethod
    def make(points: npt.ArrayLike) -> EmpiricalMeasure:
        return EmpiricalMeasure(np.asarray(points, dtype=np.float64))

    @staticmethod
    def from_ensemble(ens: ParticleEnsemble) -> EmpiricalMeasure:
        return EmpiricalMeasure(ens.positions.copy())

    @property
    def size(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def translated(self, shift: npt.ArrayLike) -> EmpiricalMeasure:
        return EmpiricalMeasure(self.points + np.asarray(shift, dtype=np.float64))

    def scaled(self, factor: float) -> EmpiricalMeasure:
        return EmpiricalMeasure(self.points * factor)


@dataclasses.dataclass(frozen=True)
class W1Result:
    value: float
    method: Method
    # Exact methods: for sorted-1d the sorting permutations of both sides;
    # for assignment-exact the matching, row i of xs goes to row certificate[i] of ys.
    certificate: tuple[np.ndarray, ...] | np.ndarray | None = None

    @property
    def is_exact(self) -> bool:
        return self.method != Method.SLICED


def _points(values: npt.ArrayLike) -> vector.Points:
    if isinstance(values, EmpiricalMeasure):
        return values.points
    return EmpiricalMeasure.make(values).points


def _check_sizes(xs: vector.Points, ys: vector.Points) -> None:
    if xs.shape != ys.shape:
        raise SizeError("size mismatch: {} vs {}".format(xs.shape, ys.shape))


def w1_1d(xs: npt.ArrayLike, ys: npt.ArrayLike) -> W1Result:
    """Sorted matching, optimal on the line."""
    xs, ys = _points(xs), _points(ys)
    _check_sizes(xs, ys)
    if xs.shape[1] != 1:
        raise SizeError("w1_1d expects one-dimensional points")
    order_x = np.argsort(xs[:, 0], kind="stable")
    order_y = np.argsort(ys[:, 0], kind="stable")
    gaps = np.abs(xs[order_x, 0] - ys[order_y, 0])
    return W1Result(math.fsum(gaps) / xs.shape[0], Method.SORTED_1D, (order_x, order_y))


def _euclidean_costs(xs: vector.Points, ys: vector.Points) -> vector.Array:
    return vector.row_norms(xs[:, None, :] - ys[None, :, :])


def w1_exact(xs: npt.ArrayLike, ys: npt.ArrayLike) -> W1Result:
    """Minimum-cost perfect matching with Euclidean costs (network simplex)."""
    xs, ys = _points(xs), _points(ys)
    _check_sizes(xs, ys)
    count = xs.shape[0]
    if count > EXACT_LIMIT:
        raise SizeError(
            "exact W1 is limited to n <= {} (got {}); use w1_sliced".format(
                EXACT_LIMIT, count
            )
        )
    costs = _euclidean_costs(xs, ys)
    weights = np.full(count, 1.0 / count)
    plan, info = ot.emd(weights, weights, costs, numItermax=EMD_ITERATIONS, log=True)
    if info["result_code"] != 1:
        raise StateError(
            "network simplex did not reach an optimal plan (code {}): {}".format(
                info["result_code"], info["warning"]
            )
        )
    matching = np.argmax(plan, axis=1)
    if np.unique(matching).size != count:
        raise StateError("transport plan is not a permutation")
    value = math.fsum(costs[np.arange(count), matching]) / count
    return W1Result(value, Method.ASSIGNMENT_EXACT, matching)


def w1_sliced(
    xs: npt.ArrayLike, ys: npt.ArrayLike, n_dirs: int, seed: int
) -> W1Result:
    """
    Mean of the 1D distances along n_dirs seeded random unit directions. In one
    dimension every direction is +1. Sizes may differ.
    """
    xs, ys = _points(xs), _points(ys)
    if xs.shape[1] != ys.shape[1]:
        raise SizeError("dimension mismatch: {} vs {}".format(xs.shape[1], ys.shape[1]))
    dim = xs.shape[1]
    if dim == 1:
        directions = np.ones((1, n_dirs))
    else:
        directions = vector.unit_directions(generator(seed, Stream.DIRECTIONS), dim, n_dirs)
    value = ot.sliced_wasserstein_distance(
        xs, ys, n_projections=n_dirs, p=1, projections=directions
    )
    return W1Result(float(value), Method.SLICED)


def _w1_against_cells(points: vector.Array, rho: GridField) -> float:
    """
    Exact W1 on the line between the particles and rho spread uniformly over each
    cell: the integral of |F_particles - F_grid| with F_grid piecewise linear.
    """
    spec = rho.spec
    masses = np.clip(rho.values, 0.0, None)
    edges = spec.axis()[0] - 0.5 * spec.dx + np.arange(masses.size + 1) * spec.dx
    grid_cdf = np.concatenate([[0.0], np.cumsum(masses) / masses.sum()])
    ordered = np.sort(points)
    breaks = np.union1d(edges, ordered)
    empirical = np.searchsorted(ordered, breaks[:-1], side="right") / ordered.size
    cdf = np.interp(breaks, edges, grid_cdf)
    left, right = empirical - cdf[:-1], empirical - cdf[1:]
    widths = np.diff(breaks)
    magnitude = np.abs(left) + np.abs(right)
    same_sign = left * right >= 0
    # a sign change inside the interval splits it into two triangles
    crossing = np.divide(
        left * left + right * right, 2.0 * magnitude, out=np.zeros_like(magnitude), where=magnitude > 0
    )
    pieces = np.where(same_sign, 0.5 * magnitude, crossing) * widths
    return math.fsum(pieces)


def sample_density(rho: GridField, count: int, seed: int) -> vector.Points:
    """count draws from rho: a cell by its mass, then a uniform point inside the cell."""
    spec = rho.spec
    masses = np.clip(rho.values, 0.0, None).ravel()
    rng = generator(seed, Stream.GRID_SAMPLING)
    cells = rng.choice(masses.size, size=count, p=masses / masses.sum())
    nodes = np.stack(np.unravel_index(cells, spec.shape), axis=-1)
    jitter = rng.random((count, spec.dim)) - 0.5
    return -spec.half_width + (nodes + jitter) * spec.dx


def w1_vs_grid(
    xs: npt.ArrayLike, rho: GridField, m_samples: int, seed: int, n_dirs: int = 64
) -> W1Result:
    """
    d = 1: exact quantile coupling against the piecewise-linear CDF of rho, no sampling.
    d >= 2: m_samples seeded draws from rho, then the exact assignment when both
    sides have the same size within the exact limit, sliced W1 otherwise.
    """
    xs = _points(xs)
    if xs.shape[1] != rho.dim:
        raise SizeError("points of dimension {} against a {}-d field".format(xs.shape[1], rho.dim))
    if rho.dim == 1:
        return W1Result(_w1_against_cells(xs[:, 0], rho), Method.SORTED_1D)
    samples = sample_density(rho, m_samples, seed)
    if m_samples == xs.shape[0] and m_samples <= EXACT_LIMIT:
        return w1_exact(xs, samples)
    return w1_sliced(xs, samples, n_dirs, seed)


def w1_bootstrap(
    xs: npt.ArrayLike,
    rho: GridField,
    m_samples: int,
    seed: int,
    replicas: int = 16,
    n_dirs: int = 64,
) -> tuple[float, float]:
    """Mean and standard deviation of w1_vs_grid over seeded sample draws."""
    seeds = generator(seed, Stream.BOOTSTRAP).integers(0, 2**32, size=replicas)
    values = np.array(
        [w1_vs_grid(xs, rho, m_samples, int(s), n_dirs).value for s in seeds]
    )
    return float(values.mean()), float(values.std(ddof=1)) if replicas > 1 else 0.0


def sup_metric(curve: npt.ArrayLike) -> float:
    """sup over the sampled times of a W1 curve."""
    values = np.asarray(curve, dtype=np.float64)
    if values.size == 0:
        raise SizeError("an empty curve has no supremum")
    return float(values.max())
