"""
Drift evaluators for the three coupled processes.

The interaction drift of particle i at time s is the memory integral

    (1/N) sum_j  int_0^{s-eps} exp(-lam (s-r)) grad G(X_s^i - X_r^j, s-r) dr

plus exp(-lam s) exp(s Laplace) grad c0. It vanishes for s <= eps. The direct path
sums it over the stored history; the fast path carries the same integral as the
delayed chemical field phi on a grid, driven by the deposited empirical density.
"""

from __future__ import annotations

import logging
from abc import ABC, abstractmethod
from typing import Protocol, Self, override

import numpy as np
import numpy.typing as npt

from kslab.errors import StateError
from kslab.grid import field as grid
from kslab.grid.chemical import DelayedSourceRing, chemical_step
from kslab.grid.field import GridField, GridSpec
from kslab.math import kernels, vector
from kslab.particles.ensemble import DriftMode, ParticleEnsemble
from kslab.particles.initial import InitialData, drift_initial_chem
from kslab.utils import parallel
from kslab.utils.type_utils import not_none

logger = logging.getLogger(__name__)

# Float64 entries held at once by one chunk of the direct sum.
_DIRECT_CHUNK_ELEMENTS = 1 << 21


class ChemicalGradientPath(Protocol):
    """Precomputed gradients of a chemical field on the step grid (see pde.state.PdePath)."""

    @property
    def eps(self) -> float: ...

    @property
    def dt(self) -> float: ...

    def grad_c(self, step: int) -> GridField: ...


def memory_drift_direct(
    ens: ParticleEnsemble,
    eps: float,
    lam: float,
    points: vector.Points | None = None,
    half_width: float | None = None,
    workers: int = 1,
) -> vector.Points:
    """
    Memory part of the interaction drift at the given points (default: the particles),
    by direct summation over the stored history with memory_nodes quadrature.

    Each point's N * K terms are sorted before they are summed, so the result does not
    depend on particle indexing, chunking or worker count.
    """
    targets = ens.positions if points is None else vector.as_points(points, ens.dim)
    quadrature = kernels.memory_nodes(ens.time, eps, ens.history_spacing)
    if quadrature.is_empty():
        return np.zeros_like(targets)
    history = ens.history_at(quadrature.nodes)
    ages = ens.time - quadrature.nodes
    coefficients = quadrature.weights * np.exp(-lam * ages)
    nodes, count, dim = history.shape
    chunk = max(1, _DIRECT_CHUNK_ELEMENTS // (nodes * count * dim))

    def chunk_drift(bounds: tuple[int, int]) -> vector.Points:
        start, stop = bounds
        delta = targets[start:stop, None, None, :] - history[None]
        if half_width is not None:
            delta = vector.minimum_image(delta, half_width)
        terms = kernels.grad_heat_kernel(delta, ages[None, :, None])
        terms = terms * coefficients[None, :, None, None]
        terms = np.moveaxis(terms, -1, 1).reshape(stop - start, dim, nodes * count)
        return np.sort(terms, axis=-1).sum(axis=-1) / count

    parts = parallel.ordered_map(
        chunk_drift, parallel.chunk_bounds(targets.shape[0], chunk), workers
    )
    return np.concatenate(parts, axis=0)


def drift_interacting_direct(
    i: int, ens: ParticleEnsemble, eps: float, lam: float, half_width: float | None = None
) -> vector.Vector:
    """Memory drift of particle i by direct summation; zero while s <= eps."""
    return memory_drift_direct(
        ens, eps, lam, ens.positions[i : i + 1], half_width=half_width
    )[0]


def fast_drift(
    ens: ParticleEnsemble,
    phi_grad: GridField,
    init: InitialData,
    lam: float,
    points: vector.Points | None = None,
) -> vector.Points:
    """interp(grad phi, X) + initial chemical drift, for every particle or the given points."""
    if not np.isclose(phi_grad.time, ens.time, rtol=0.0, atol=1e-9 * max(1.0, ens.time)):
        raise StateError(
            "stale chemical gradient: field at t={} but ensemble at t={}".format(
                phi_grad.time, ens.time
            )
        )
    targets = ens.positions if points is None else vector.as_points(points, ens.dim)
    memory = grid.interp(phi_grad, targets)
    return memory + drift_initial_chem(targets, ens.time, init, lam, phi_grad.spec)


def drift_interacting_fast(
    i: int, ens: ParticleEnsemble, phi_grad: GridField, init: InitialData, lam: float
) -> vector.Vector:
    return fast_drift(ens, phi_grad, init, lam, ens.positions[i : i + 1])[0]


def drift_meanfield(
    x: npt.ArrayLike,
    s: float,
    path: ChemicalGradientPath | None,
    mode: DriftMode,
) -> vector.Points:
    """
    interp(grad c, x) where c is the intermediate (eps > 0) or limit chemical field at
    time s; the initial chemical is already part of c.
    """
    if path is None:
        raise StateError("mean-field drift needs a density path")
    if mode == DriftMode.LIMIT and path.eps != 0:
        raise StateError("limit drift requested from an eps={} path".format(path.eps))
    if mode == DriftMode.INTERMEDIATE and path.eps <= 0:
        raise StateError("intermediate drift requested from a limit path")
    if mode == DriftMode.INTERACTING:
        raise StateError("the interacting system has no mean-field drift")
    step = int(round(s / path.dt))
    gradient = path.grad_c(step)
    return grid.interp(gradient, vector.as_points(x, gradient.dim))


class DriftEvaluator(ABC):
    """
    A drift b(X, t) for one ensemble. start is called once before the first step,
    after_step once after every position update.
    """

    def start(self, ens: ParticleEnsemble) -> Self:
        return self

    def after_step(self, ens: ParticleEnsemble) -> Self:
        return self

    @property
    def eps(self) -> float:
        return 0.0

    @abstractmethod
    def evaluate(self, ens: ParticleEnsemble, points: vector.Points) -> vector.Points:
        """Drift at arbitrary points given the current state of ens."""
        raise NotImplementedError

    def __call__(self, ens: ParticleEnsemble) -> vector.Points:
        return self.evaluate(ens, ens.positions)


class InitialChemicalDrift(DriftEvaluator):
    """Only the initial chemical; the interaction is switched off."""

    def __init__(self, init: InitialData, lam: float, spec: GridSpec | None = None) -> None:
        self._init = init
        self._lam = lam
        self._spec = spec

    @override
    def evaluate(self, ens: ParticleEnsemble, points: vector.Points) -> vector.Points:
        return drift_initial_chem(points, ens.time, self._init, self._lam, self._spec)


class DirectInteraction(DriftEvaluator):
    """Interaction drift summed over the stored history of the ensemble."""

    def __init__(
        self,
        init: InitialData,
        eps: float,
        lam: float,
        spec: GridSpec | None = None,
        workers: int = 1,
    ) -> None:
        self._init = init
        self._eps = eps
        self._lam = lam
        self._spec = spec
        self._workers = workers

    @property
    @override
    def eps(self) -> float:
        return self._eps

    @override
    def evaluate(self, ens: ParticleEnsemble, points: vector.Points) -> vector.Points:
        half_width = None if self._spec is None else self._spec.half_width
        memory = memory_drift_direct(
            ens, self._eps, self._lam, points, half_width, self._workers
        )
        return memory + drift_initial_chem(points, ens.time, self._init, self._lam, self._spec)


class FastInteraction(DriftEvaluator):
    """Interaction drift through the delayed chemical field of the deposited ensemble."""

    def __init__(
        self,
        init: InitialData,
        eps: float,
        lam: float,
        spec: GridSpec,
        workers: int = 1,
    ) -> None:
        self._init = init
        self._eps = eps
        self._lam = lam
        self._spec = spec
        self._workers = workers
        self._ring: DelayedSourceRing | None = None
        self._phi: GridField | None = None
        self._phi_grad: GridField | None = None
        self._step = -1

    @property
    @override
    def eps(self) -> float:
        return self._eps

    @property
    def phi(self) -> GridField:
        return not_none(self._phi, "chemical field")

    @property
    def phi_grad(self) -> GridField:
        return not_none(self._phi_grad, "chemical gradient")

    @override
    def start(self, ens: ParticleEnsemble) -> Self:
        self._ring = DelayedSourceRing(self._eps, ens.dt, self._lam)
        self._ring.push(ens.step, self._deposit(ens))
        self._phi = self._spec.zeros(ens.time)
        self._phi_grad = grid.gradient(self._phi)
        self._step = ens.step
        return self

    def _deposit(self, ens: ParticleEnsemble) -> GridField:
        return grid.deposit(ens.positions, self._spec, ens.time, self._workers)

    @override
    def after_step(self, ens: ParticleEnsemble) -> Self:
        ring = not_none(self._ring, "source ring")
        if ens.step != self._step + 1:
            raise StateError(
                "chemical field at step {} cannot follow ensemble step {}".format(
                    self._step, ens.step
                )
            )
        density = self._deposit(ens)
        self._phi = chemical_step(
            self.phi, ring, ens.dt, self._lam, self._eps, self._step, incoming=density
        )
        ring.push(ens.step, density)
        self._phi_grad = grid.gradient(self._phi)
        self._step = ens.step
        return self

    @override
    def evaluate(self, ens: ParticleEnsemble, points: vector.Points) -> vector.Points:
        if ens.step != self._step:
            raise StateError(
                "stale chemical gradient: field at step {}, ensemble at step {}".format(
                    self._step, ens.step
                )
            )
        return fast_drift(ens, self.phi_grad, self._init, self._lam, points)


class MeanFieldDrift(DriftEvaluator):
    """Drift read from a precomputed PDE chemical field (intermediate or limit)."""

    def __init__(self, path: ChemicalGradientPath, mode: DriftMode) -> None:
        self._path = path
        self._mode = mode

    @property
    @override
    def eps(self) -> float:
        return self._path.eps

    @override
    def evaluate(self, ens: ParticleEnsemble, points: vector.Points) -> vector.Points:
        return drift_meanfield(points, ens.time, self._path, self._mode)
