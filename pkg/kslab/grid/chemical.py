"""
Delayed chemical field of the intermediate system.

phi solves d/dt phi = Laplace(phi) - lam * phi + exp(-lam * eps) exp(eps * Laplace) f(t - eps)
with phi = 0 up to t = eps, so that c = exp(-lam t) exp(t Laplace) c0 + phi.
The time integral is the trapezoid rule in integrating-factor form, which makes the
recurrence agree with chemical_duhamel on the same step grid up to rounding.
"""

from __future__ import annotations

import collections
import logging
import math
from typing import Sequence, Self

import numpy as np

from kslab.errors import SizeError, StateError
from kslab.grid.field import GridField
from kslab.math import kernels

logger = logging.getLogger(__name__)

_SNAP = 1e-9


def lag_steps(eps: float, dt: float) -> int:
    """Number of whole steps spanned by the cut-off, ceil(eps / dt)."""
    if eps <= 0:
        return 0
    return int(math.ceil(eps / dt - _SNAP))


class DelayedSourceRing:
    """
    The last lag + 1 density snapshots, keyed by step index.

    The oldest entry is the snapshot at t - eps (eps rounded up to whole steps).
    Smoothed sources exp(-lam eps) exp(eps Laplace) f are memoized per entry.
    """

    def __init__(self, eps: float, dt: float, lam: float) -> None:
        if dt <= 0:
            raise StateError("ring step must be positive, got {}".format(dt))
        self._eps = eps
        self._dt = dt
        self._lam = lam
        self._lag = lag_steps(eps, dt)
        self._entries: collections.deque[tuple[int, GridField]] = collections.deque(
            maxlen=self._lag + 1
        )
        self._smoothed: dict[int, GridField] = {}

    @property
    def lag(self) -> int:
        return self._lag

    @property
    def capacity(self) -> int:
        return self._lag + 1

    @property
    def effective_eps(self) -> float:
        """The cut-off actually applied: eps rounded up to the step grid."""
        return self._lag * self._dt

    def __len__(self) -> int:
        return len(self._entries)

    def steps(self) -> list[int]:
        return [step for step, _ in self._entries]

    def push(self, step: int, density: GridField) -> Self:
        if self._entries and step != self._entries[-1][0] + 1:
            raise StateError(
                "ring expects step {}, got {}".format(self._entries[-1][0] + 1, step)
            )
        if len(self._entries) == self._entries.maxlen:
            evicted, _ = self._entries[0]
            self._smoothed.pop(evicted, None)
        self._entries.append((step, density))
        return self

    def lookup(self, step: int) -> GridField | None:
        """Snapshot at a step; None for negative steps (before time zero)."""
        if step < 0:
            return None
        for stored, density in self._entries:
            if stored == step:
                return density
        raise StateError(
            "ring underflow: snapshot for step {} not held (holding {})".format(
                step, self.steps()
            )
        )

    def source(self, step: int) -> GridField | None:
        """Smoothed delayed source exp(-lam eps) exp(eps Laplace) f at a step."""
        if step in self._smoothed:
            return self._smoothed[step]
        density = self.lookup(step)
        if density is None:
            return None
        smoothed = kernels.decayed_semigroup(density, self.effective_eps, self._lam)
        self._smoothed[step] = smoothed
        return smoothed


def chemical_step(
    phi: GridField,
    ring: DelayedSourceRing,
    dt: float,
    lam: float,
    eps: float,
    step: int,
    incoming: GridField | None = None,
) -> GridField:
    """
    Advances phi from step to step + 1.

    The panel [t_n - eps, t_{n+1} - eps] contributes only when it lies in [0, inf).
    With a zero cut-off the right end of the panel is the new density, which must
    be passed as incoming.
    """
    if abs(ring.effective_eps - eps) > dt:
        raise StateError(
            "ring built for eps={} cannot serve eps={}".format(ring.effective_eps, eps)
        )
    propagated = kernels.decayed_semigroup(phi, dt, lam)
    left_step = step - ring.lag
    if left_step < 0:
        return propagated.set_time(phi.time + dt)
    left = ring.source(left_step)
    if ring.lag == 0:
        if incoming is None:
            raise StateError("zero cut-off needs the incoming density snapshot")
        right = incoming
    else:
        right = ring.source(left_step + 1)
    assert left is not None and right is not None
    left_propagated = kernels.decayed_semigroup(left, dt, lam)
    values = propagated.values + 0.5 * dt * (left_propagated.values + right.values)
    return phi.with_values(values, phi.time + dt)


def chemical_duhamel(
    rho_path: Sequence[GridField],
    c0: GridField,
    lam: float,
    eps: float,
    t: float,
) -> GridField:
    """
    Duhamel formula for the delayed chemical field at time t:
    exp(-lam t) exp(t Laplace) c0 + integral over [0, t - eps] of
    exp(-lam (t - s)) exp((t - s) Laplace) rho(s) ds, by memory_nodes quadrature.

    rho_path[m] is the density at time m * dt; dt is read from the snapshot times.
    """
    spec = c0.spec
    k_squared = spec.wavenumber_squared()
    spectrum = c0.spectrum() * np.exp(-(k_squared + lam) * t)
    if t - eps > 0:
        if len(rho_path) < 2:
            raise SizeError("a density path needs at least two snapshots")
        dt = rho_path[1].time - rho_path[0].time
        quadrature = kernels.memory_nodes(t, eps, dt)
        for node, weight in zip(quadrature.nodes, quadrature.weights):
            index = int(round((node - rho_path[0].time) / dt))
            if index >= len(rho_path):
                raise StateError(
                    "density path ends at t={} but t={} is needed".format(
                        rho_path[-1].time, node
                    )
                )
            age = t - node
            spectrum = spectrum + weight * np.exp(-(k_squared + lam) * age) * rho_path[
                index
            ].spectrum()
    return c0.from_spectrum(spectrum, time=t)
