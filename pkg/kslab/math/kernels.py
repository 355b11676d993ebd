"""
Heat kernel primitives shared by the particle and grid solvers.

The kernel is G(x, tau) = exp(-|x|^2 / (4 tau)) / (4 pi tau)^(d/2), the
fundamental solution of u_t = Laplace(u) in R^d.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np
import numpy.typing as npt

from kslab.errors import DomainError
from kslab.grid.field import GridField
from kslab.math import vector

# Snap tolerance, in units of the step, when locating s - eps on the step grid.
_SNAP = 1e-9


@dataclasses.dataclass(frozen=True)
class KernelEval:
    """Dimension and chemical decay rate shared by every kernel evaluation."""

    dim: int
    lam: float = 0.0

    def __post_init__(self) -> None:
        if self.dim < 1:
            raise DomainError("dimension must be at least 1, got {}".format(self.dim))
        if self.lam < 0:
            raise DomainError("decay rate must be nonnegative, got {}".format(self.lam))

    def decay(self, tau: npt.ArrayLike) -> vector.Array:
        return np.exp(-self.lam * np.asarray(tau, dtype=np.float64))

    def heat(self, x: npt.ArrayLike, tau: float) -> vector.Array:
        return heat_kernel(x, tau)

    def grad(self, x: npt.ArrayLike, tau: float) -> vector.Array:
        return grad_heat_kernel(x, tau)


@dataclasses.dataclass(frozen=True)
class MemoryQuadrature:
    """Nodes r_k in [0, s - eps] and weights for integrals over the past of the ensemble."""

    nodes: vector.Array
    weights: vector.Array

    @property
    def size(self) -> int:
        return int(self.nodes.size)

    def is_empty(self) -> bool:
        return self.nodes.size == 0

    def total(self) -> float:
        return float(np.sum(self.weights))


def _check_tau(tau: npt.ArrayLike) -> vector.Array:
    tau = np.asarray(tau, dtype=np.float64)
    if np.any(tau <= 0):
        raise DomainError("tau must be positive, got {}".format(tau))
    return tau


def heat_kernel(x: npt.ArrayLike, tau: npt.ArrayLike) -> vector.Array:
    """
    Heat kernel at displacements x of shape (..., d) and time(s) tau.

    tau broadcasts against x.shape[:-1].
    """
    tau = _check_tau(tau)
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 0:
        x = x.reshape(1)
    dim = x.shape[-1]
    squared = np.sum(x * x, axis=-1)
    return np.exp(-squared / (4.0 * tau)) / (4.0 * np.pi * tau) ** (dim / 2.0)


def grad_heat_kernel(x: npt.ArrayLike, tau: npt.ArrayLike) -> vector.Array:
    """Spatial gradient of heat_kernel: G(x, tau) * (-x) / (2 tau), shape (..., d)."""
    tau = _check_tau(tau)
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 0:
        x = x.reshape(1)
    factor = heat_kernel(x, tau) / (2.0 * tau)
    return -x * np.asarray(factor)[..., None]


def grad_bound_constant(dim: int) -> float:
    """
    C_d with sup_x |grad G(x, tau)| = C_d * tau^(-(d+1)/2).

    The maximum of u exp(-u^2) is attained at u = 1/sqrt(2).
    """
    return (math.sqrt(2.0) / 2.0) * math.exp(-0.5) / (4.0 * math.pi) ** (dim / 2.0)


def semigroup_apply(field: GridField, tau: float) -> GridField:
    """Applies exp(tau * Laplace) spectrally; the zero mode is left untouched."""
    if tau < 0:
        raise DomainError("semigroup time must be nonnegative, got {}".format(tau))
    if tau == 0:
        return field.copy()
    multiplier = np.exp(-field.spec.wavenumber_squared() * tau)
    return field.from_spectrum(field.spectrum() * multiplier)


def decayed_semigroup(field: GridField, tau: float, lam: float) -> GridField:
    """exp(-lam tau) exp(tau Laplace) applied in one spectral pass."""
    if tau < 0:
        raise DomainError("semigroup time must be nonnegative, got {}".format(tau))
    multiplier = np.exp(-(field.spec.wavenumber_squared() + lam) * tau)
    return field.from_spectrum(field.spectrum() * multiplier)


def memory_nodes(s: float, eps: float, dt: float) -> MemoryQuadrature:
    """
    Trapezoid rule for integrals over [0, s - eps] on the grid r_k = k * dt.

    Nodes stop at the largest grid time not exceeding s - eps. The uncovered
    remainder is charged to that last node, so the weights always sum to s - eps.
    Returns an empty rule when s <= eps.
    """
    if dt <= 0:
        raise DomainError("step must be positive, got {}".format(dt))
    upper = s - eps
    if upper <= 0:
        return MemoryQuadrature(np.zeros(0), np.zeros(0))
    intervals = int(math.floor(upper / dt + _SNAP))
    if intervals == 0:
        return MemoryQuadrature(np.zeros(1), np.array([upper]))
    nodes = dt * np.arange(intervals + 1)
    nodes[-1] = min(nodes[-1], upper)
    weights = np.full(intervals + 1, dt)
    weights[0] = weights[-1] = 0.5 * dt
    weights[-1] += upper - nodes[-1]
    # Rounding of k * dt must not leak into the total.
    weights[-1] += upper - np.sum(weights)
    return MemoryQuadrature(nodes, weights)


def image_error_bound(half_width: float, horizon: float) -> float:
    """Bound exp(-L^2 / (4T)) on the periodic image contributions over the horizon."""
    return math.exp(-(half_width**2) / (4.0 * horizon))
