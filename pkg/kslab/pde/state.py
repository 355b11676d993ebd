"""
Solvers for the intermediate nonlocal system and the parabolic-parabolic limit.

Density:  d/dt rho = Laplace(rho) - div(rho grad c)
Chemical: d/dt c = Laplace(c) - lam c + rho            (limit, eps = 0)
          c = exp(-lam t) exp(t Laplace) c0 + phi      (intermediate, phi from the delayed ring)

One step first advances the density with c frozen at t_n, then advances the chemical
with the trapezoid rule between rho_n and rho_{n+1}. For eps = 0 both chemical
routes give the same field up to rounding.
"""

from __future__ import annotations

import dataclasses
import logging
from typing import Callable

import numpy as np

from kslab.errors import ConfigError, StateError
from kslab.grid import field as grid
from kslab.grid.chemical import DelayedSourceRing, chemical_step
from kslab.grid.field import GridField, GridSpec
from kslab.math import kernels
from kslab.particles.initial import InitialData
from kslab.pde.diagnostics import Diagnostics, diagnostics
from kslab.utils.type_utils import not_none

logger = logging.getLogger(__name__)

CFL_LIMIT = 0.9
UNDERSHOOT = -1e-10


@dataclasses.dataclass
class PdeState:
    """
    A density/chemical pair at step `step` (time step * dt).

    eps is None for the limit system. Between step_density and the chemical step,
    rho already holds rho_{n+1} and rho_prev keeps rho_n. coupling scales the
    chemotactic velocity; zero turns the density equation into the heat equation.
    """

    rho: GridField
    c: GridField
    c0: GridField
    lam: float
    dt: float
    eps: float | None = None
    step: int = 0
    coupling: float = 1.0
    mass0: float = 1.0
    phi: GridField | None = None
    ring: DelayedSourceRing | None = None
    rho_prev: GridField | None = None

    @staticmethod
    def make(
        init: InitialData,
        spec: GridSpec,
        lam: float,
        dt: float,
        eps: float | None = None,
        coupling: float = 1.0,
    ) -> PdeState:
        rho = init.rho0_field(spec)
        c0 = init.c0_field(spec)
        return PdeState.from_fields(rho, c0, lam, dt, eps, coupling)

    @staticmethod
    def from_fields(
        rho: GridField,
        c0: GridField,
        lam: float,
        dt: float,
        eps: float | None = None,
        coupling: float = 1.0,
    ) -> PdeState:
        state = PdeState(
            rho=rho.copy().set_time(0.0),
            c=c0.copy().set_time(0.0),
            c0=c0.copy().set_time(0.0),
            lam=lam,
            dt=dt,
            eps=eps,
            coupling=coupling,
            mass0=rho.mass(),
        )
        if eps is not None:
            state.phi = rho.spec.zeros()
            state.ring = DelayedSourceRing(eps, dt, lam).push(0, state.rho)
        return state

    @property
    def t(self) -> float:
        return self.step * self.dt

    @property
    def is_limit(self) -> bool:
        return self.eps is None

    @property
    def spec(self) -> GridSpec:
        return self.rho.spec


def cfl_number(velocity: GridField, dt: float) -> float:
    """
    dt / dx times the largest total outflow of a cell: over every axis, the positive
    part of the velocity on its upper face plus the negative part on its lower face.
    """
    outflow = np.zeros(velocity.spec.shape)
    for axis, v in enumerate(velocity.values):
        outflow += np.maximum(v, 0.0) + np.maximum(-np.roll(v, 1, axis=axis), 0.0)
    return float(np.max(outflow)) * dt / velocity.spec.dx


def step_density(
    state: PdeState, dt: float, velocity: GridField | None = None
) -> PdeState:
    """
    Strang splitting: half-step spectral diffusion, upwind finite-volume advection with
    face-centred velocity grad c (or an injected face velocity), half-step diffusion.
    """
    if state.rho_prev is not None:
        raise StateError("density already advanced; the chemical step is pending")
    spec = state.spec
    if velocity is None:
        velocity = grid.face_gradient(state.c) * state.coupling
    cfl = cfl_number(velocity, dt)
    if cfl > CFL_LIMIT:
        raise ConfigError(
            "CFL number {:.3f} exceeds {} (largest cell outflow * dt / dx)".format(cfl, CFL_LIMIT)
        )
    rho = kernels.semigroup_apply(state.rho, 0.5 * dt).values
    divergence = np.zeros_like(rho)
    for axis in range(spec.dim):
        v = velocity.values[axis]
        upwind = np.where(v > 0, rho, np.roll(rho, -1, axis=axis))
        flux = v * upwind
        divergence += flux - np.roll(flux, 1, axis=axis)
    advected = state.rho.with_values(rho - dt / spec.dx * divergence)
    rho_next = kernels.semigroup_apply(advected, 0.5 * dt).set_time(state.t + dt)
    low = float(rho_next.values.min())
    if low < UNDERSHOOT:
        logger.warning("density undershoot {:.3e} at t={:.4g}".format(low, state.t + dt))
    return dataclasses.replace(state, rho=rho_next, rho_prev=state.rho)


def _density_pair(state: PdeState) -> tuple[GridField, GridField]:
    new = state.rho
    old = state.rho if state.rho_prev is None else state.rho_prev
    return old, new


def step_chemical_limit(state: PdeState, dt: float) -> PdeState:
    """c <- exp(-lam dt) exp(dt Laplace)(c + dt/2 rho_n) + dt/2 rho_{n+1}."""
    if not state.is_limit:
        raise StateError("step_chemical_limit on an eps={} state".format(state.eps))
    old, new = _density_pair(state)
    half_source = state.c.with_values(state.c.values + 0.5 * dt * old.values)
    propagated = kernels.decayed_semigroup(half_source, dt, state.lam)
    c_next = propagated.with_values(propagated.values + 0.5 * dt * new.values, state.t + dt)
    return dataclasses.replace(
        state, c=c_next, step=state.step + 1, rho_prev=None
    )


def step_chemical_intermediate(state: PdeState, dt: float) -> PdeState:
    """c = exp(-lam t) exp(t Laplace) c0 + phi, phi advanced through the delayed ring."""
    if state.is_limit:
        raise StateError("step_chemical_intermediate on a limit state")
    ring = not_none(state.ring, "source ring")
    eps = not_none(state.eps, "cut-off")
    phi = chemical_step(
        not_none(state.phi, "delayed field"),
        ring,
        dt,
        state.lam,
        eps,
        state.step,
        incoming=state.rho,
    )
    ring.push(state.step + 1, state.rho)
    t_next = state.t + dt
    free = kernels.decayed_semigroup(state.c0, t_next, state.lam)
    c_next = free.with_values(free.values + phi.values, t_next)
    return dataclasses.replace(
        state, c=c_next, phi=phi, step=state.step + 1, rho_prev=None
    )


def advance(state: PdeState, dt: float | None = None) -> PdeState:
    """One full step of either system."""
    dt = state.dt if dt is None else dt
    state = step_density(state, dt)
    if state.is_limit:
        return step_chemical_limit(state, dt)
    return step_chemical_intermediate(state, dt)


class PdePath:
    """
    A solved trajectory: chemical gradients at every step, plus density and chemical
    snapshots and a diagnostics row every record_every steps.
    """

    def __init__(self, dt: float, eps: float | None, record_every: int) -> None:
        self._dt = dt
        self._eps = eps
        self._record_every = record_every
        self._grad_c: list[GridField] = []
        self._rho: dict[int, GridField] = {}
        self._c: dict[int, GridField] = {}
        self.diagnostics = Diagnostics()

    @property
    def dt(self) -> float:
        return self._dt

    @property
    def eps(self) -> float:
        return 0.0 if self._eps is None else self._eps

    @property
    def steps(self) -> int:
        return len(self._grad_c) - 1

    @property
    def record_every(self) -> int:
        return self._record_every

    def recorded_steps(self) -> list[int]:
        return sorted(self._rho)

    def record(self, state: PdeState) -> None:
        self._grad_c.append(grid.gradient(state.c))
        if state.step % self._record_every == 0:
            self._rho[state.step] = state.rho
            self._c[state.step] = state.c
            self.diagnostics.append(diagnostics(state))

    def grad_c(self, step: int) -> GridField:
        if not 0 <= step < len(self._grad_c):
            raise StateError(
                "density path covers steps 0..{}, asked for {}".format(self.steps, step)
            )
        return self._grad_c[step]

    def rho(self, step: int) -> GridField:
        if step not in self._rho:
            raise StateError("density at step {} was not recorded".format(step))
        return self._rho[step]

    def c(self, step: int) -> GridField:
        if step not in self._c:
            raise StateError("chemical at step {} was not recorded".format(step))
        return self._c[step]


def solve_path(
    state: PdeState,
    steps: int,
    record_every: int = 1,
    observer: Callable[[PdeState], None] | None = None,
) -> PdePath:
    """Advances state by steps steps, recording everything drifts and comparisons need."""
    path = PdePath(state.dt, state.eps, max(1, record_every))
    path.record(state)
    if observer is not None:
        observer(state)
    for _ in range(steps):
        state = advance(state)
        path.record(state)
        if observer is not None:
            observer(state)
    mass_error = abs(state.rho.mass() - state.mass0)
    logger.debug(
        "solved {} steps (eps={}), final mass error {:.2e}".format(steps, state.eps, mass_error)
    )
    return path
