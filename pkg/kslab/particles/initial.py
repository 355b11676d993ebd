"""
Initial data: the density rho0 the particles are drawn from and the initial
chemical c0 whose heat-smoothed gradient enters every drift.
"""

from __future__ import annotations

import dataclasses
import enum
import math

import numpy as np
import numpy.typing as npt
from scipy import special

from kslab.errors import DomainError
from kslab.grid import field as grid
from kslab.grid.field import GridField, GridSpec
from kslab.math import kernels, vector
from kslab.particles.brownian import BrownianStore
from kslab.particles.ensemble import DriftMode, ParticleEnsemble


class DensityFamily(enum.StrEnum):
    GAUSSIAN = "gaussian"
    MIXTURE = "mixture"


class ChemicalFamily(enum.StrEnum):
    ZERO = "zero"
    # A exp(-|x|^2 / (2 w^2)); heat flow stays Gaussian.
    GAUSSIAN = "gaussian"
    # A x_1 on the bulk; only meaningful away from the periodic wrap.
    LINEAR = "linear"
    # A / cosh(|x|^2 / w^2); no closed form, evaluated on the grid.
    SECH = "sech"


def _family(enum_type: type[enum.StrEnum], tag: str) -> enum.StrEnum:
    try:
        return enum_type(tag)
    except ValueError:
        raise DomainError(
            "unknown family tag {!r}; expected one of {}".format(
                tag, [member.value for member in enum_type]
            )
        )


@dataclasses.dataclass(frozen=True)
class InitialData:
    """
    Family tags and parameters of rho0 and c0.

    The mixture places two components of width sigma at mean -/+ separation/2 along
    the first axis, with the given weight on the first one. mass scales the PDE
    density only; particles always carry total mass one.
    """

    dim: int
    family: str = "gaussian"
    mean: float = 0.0
    sigma: float = 0.5
    separation: float = 1.0
    weight: float = 0.5
    mass: float = 1.0
    chem: str = "zero"
    chem_amplitude: float = 0.0
    chem_width: float = 1.0

    def __post_init__(self) -> None:
        _family(DensityFamily, self.family)
        _family(ChemicalFamily, self.chem)
        if self.sigma <= 0 or self.chem_width <= 0:
            raise DomainError("widths must be positive")
        if not 0.0 < self.weight < 1.0:
            raise DomainError("mixture weight must lie in (0, 1), got {}".format(self.weight))

    @property
    def density_family(self) -> DensityFamily:
        return DensityFamily(self.family)

    @property
    def chemical_family(self) -> ChemicalFamily:
        return ChemicalFamily(self.chem)

    def _centers(self) -> list[tuple[float, vector.Vector]]:
        center = np.full(self.dim, self.mean, dtype=np.float64)
        if self.density_family == DensityFamily.GAUSSIAN:
            return [(1.0, center)]
        offset = np.zeros(self.dim)
        offset[0] = 0.5 * self.separation
        return [(self.weight, center - offset), (1.0 - self.weight, center + offset)]

    def rho0(self, points: vector.Points) -> vector.Array:
        """Probability density of rho0 at (n, d) points."""
        points = vector.as_points(points, self.dim)
        total = np.zeros(points.shape[0])
        norm = (2.0 * np.pi * self.sigma**2) ** (self.dim / 2.0)
        for share, center in self._centers():
            squared = np.sum((points - center) ** 2, axis=-1)
            total += share * np.exp(-squared / (2.0 * self.sigma**2)) / norm
        return total

    def rho0_field(self, spec: GridSpec) -> GridField:
        """rho0 on the grid, rescaled so that its grid mass is exactly self.mass."""
        density = spec.sample(self.rho0)
        return density * (self.mass / density.mass())

    def tail_mass(self, half: float) -> float:
        """Mass of rho0 outside the cube [-half, half]^d."""
        inside = 0.0
        for share, center in self._centers():
            upper = special.ndtr((half - center) / self.sigma)
            lower = special.ndtr((-half - center) / self.sigma)
            inside += share * float(np.prod(upper - lower))
        return max(0.0, 1.0 - inside)

    def c0(self, points: vector.Points) -> vector.Array:
        points = vector.as_points(points, self.dim)
        family = self.chemical_family
        amplitude, width = self.chem_amplitude, self.chem_width
        squared = np.sum(points * points, axis=-1)
        if family == ChemicalFamily.ZERO:
            return np.zeros(points.shape[0])
        if family == ChemicalFamily.GAUSSIAN:
            return amplitude * np.exp(-squared / (2.0 * width**2))
        if family == ChemicalFamily.LINEAR:
            return amplitude * points[:, 0]
        return amplitude / np.cosh(squared / width**2)

    def grad_c0(self, points: vector.Points) -> vector.Points:
        points = vector.as_points(points, self.dim)
        family = self.chemical_family
        amplitude, width = self.chem_amplitude, self.chem_width
        squared = np.sum(points * points, axis=-1, keepdims=True)
        if family == ChemicalFamily.ZERO:
            return np.zeros_like(points)
        if family == ChemicalFamily.GAUSSIAN:
            return -points / width**2 * amplitude * np.exp(-squared / (2.0 * width**2))
        if family == ChemicalFamily.LINEAR:
            gradient = np.zeros_like(points)
            gradient[:, 0] = amplitude
            return gradient
        ratio = squared / width**2
        return -amplitude * np.tanh(ratio) / np.cosh(ratio) * 2.0 * points / width**2

    def c0_field(self, spec: GridSpec) -> GridField:
        if self.chemical_family == ChemicalFamily.LINEAR:
            raise DomainError("a linear chemical profile is not periodic")
        return spec.sample(self.c0)

    def has_closed_form(self) -> bool:
        return self.chemical_family != ChemicalFamily.SECH

    def is_chemical_free(self) -> bool:
        return self.chemical_family == ChemicalFamily.ZERO or self.chem_amplitude == 0.0


def _gaussian_rows(uniforms: vector.Array, dim: int) -> vector.Points:
    """Standard normal rows from pairs of uniforms (inverse CDF in 1D, Box-Muller otherwise)."""
    if dim == 1:
        return special.ndtri(uniforms[:, :1])
    pairs = (dim + 1) // 2
    radius = np.sqrt(-2.0 * np.log(uniforms[:, :pairs]))
    angle = 2.0 * np.pi * uniforms[:, pairs : 2 * pairs]
    normals = np.concatenate([radius * np.cos(angle), radius * np.sin(angle)], axis=1)
    return normals[:, :dim]


def init_ensemble(
    init: InitialData,
    count: int,
    store: BrownianStore,
    mode: DriftMode = DriftMode.INTERACTING,
) -> ParticleEnsemble:
    """count i.i.d. samples from rho0 drawn from the store's initial-data stream."""
    if count < 1:
        raise DomainError("an ensemble needs at least one particle")
    dim = init.dim
    uniforms = store.uniforms(count, 1 + 2 * ((dim + 1) // 2))
    normals = _gaussian_rows(uniforms[:, 1:], dim)
    centers = init._centers()
    positions = centers[0][1] + init.sigma * normals
    if len(centers) == 2:
        second = uniforms[:, 0] >= centers[0][0]
        positions[second] = centers[1][1] + init.sigma * normals[second]
    return ParticleEnsemble.make(positions, mode)


def drift_initial_chem(
    x: npt.ArrayLike,
    s: float,
    init: InitialData,
    lam: float,
    spec: GridSpec | None = None,
) -> vector.Points:
    """
    exp(-lam s) (exp(s Laplace) grad c0)(x) at (n, d) points.

    Closed forms are used for the zero, Gaussian and linear profiles; other profiles
    are smoothed on the grid described by spec.
    """
    if s < 0:
        raise DomainError("time must be nonnegative, got {}".format(s))
    points = vector.as_points(x, init.dim)
    family = init.chemical_family
    decay = math.exp(-lam * s)
    if init.is_chemical_free():
        return np.zeros_like(points)
    if family == ChemicalFamily.LINEAR:
        return decay * init.grad_c0(points)
    if family == ChemicalFamily.GAUSSIAN:
        spread = init.chem_width**2 + 2.0 * s
        squared = np.sum(points * points, axis=-1, keepdims=True)
        scale = (init.chem_width**2 / spread) ** (init.dim / 2.0)
        value = init.chem_amplitude * scale * np.exp(-squared / (2.0 * spread))
        return decay * (-points / spread) * value
    if spec is None:
        raise DomainError("the {} profile needs a grid to be smoothed on".format(family))
    smoothed = kernels.semigroup_apply(init.c0_field(spec), s)
    return decay * grid.interp(grid.gradient(smoothed), points)
