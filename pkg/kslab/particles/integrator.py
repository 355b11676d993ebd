"""Euler-Maruyama stepping of particle ensembles with shared Brownian increments."""

from __future__ import annotations

import logging
import math
from typing import Callable

import numpy as np

from kslab.errors import ConfigError
from kslab.math import vector
from kslab.particles.brownian import BrownianStore
from kslab.particles.drift import DriftEvaluator
from kslab.particles.ensemble import DriftMode, ParticleEnsemble

logger = logging.getLogger(__name__)

_SQRT2 = math.sqrt(2.0)
# dt * L above this triggers the stability warning.
STABILITY_LIMIT = 0.5


def check_step(dt: float, eps: float, mode: DriftMode) -> None:
    """The cut-off window must span at least four steps in the delayed modes."""
    if mode != DriftMode.LIMIT and eps > 0 and dt > eps / 4.0 * (1.0 + 1e-12):
        raise ConfigError("dt > eps/4 (dt={}, eps={})".format(dt, eps))


def em_step(
    ens: ParticleEnsemble,
    drift: DriftEvaluator,
    dt: float,
    store: BrownianStore,
    half_width: float | None = None,
) -> ParticleEnsemble:
    """X <- X + b(X, t) dt + sqrt(2) dB, wrapped into the box; returns the same ensemble."""
    check_step(dt, drift.eps, ens.mode)
    if not math.isclose(ens.dt, dt, rel_tol=1e-12):
        raise ConfigError("ensemble was set up for dt={}, stepped with dt={}".format(ens.dt, dt))
    increments = store.increments(ens.step, ens.size)
    positions = ens.positions + drift(ens) * dt + _SQRT2 * increments
    if half_width is not None:
        positions = vector.wrap(positions, half_width)
    ens.advance(positions)
    drift.after_step(ens)
    return ens


def estimate_lipschitz(
    drift: DriftEvaluator, ens: ParticleEnsemble, h: float = 1e-4
) -> float:
    """Largest finite-difference slope |b(x + h e_a) - b(x)| / h over particles and axes."""
    base = drift.evaluate(ens, ens.positions)
    largest = 0.0
    for axis in range(ens.dim):
        shifted = ens.positions.copy()
        shifted[:, axis] += h
        change = drift.evaluate(ens, shifted) - base
        largest = max(largest, float(np.max(vector.row_norms(change))) / h)
    return largest


def simulate(
    ens: ParticleEnsemble,
    drift: DriftEvaluator,
    store: BrownianStore,
    steps: int,
    half_width: float | None = None,
    observer: Callable[[ParticleEnsemble], None] | None = None,
) -> ParticleEnsemble:
    """
    Runs steps Euler-Maruyama steps, calling observer after the start and after every
    step. Once the cut-off window has been passed the drift Lipschitz constant is
    estimated once and a warning is logged when dt * L exceeds the stability limit.
    """
    dt = ens.dt
    check_step(dt, drift.eps, ens.mode)
    drift.start(ens)
    if observer is not None:
        observer(ens)
    checked = False
    for _ in range(steps):
        em_step(ens, drift, dt, store, half_width)
        if not checked and ens.time > drift.eps:
            checked = True
            lipschitz = estimate_lipschitz(drift, ens)
            if dt * lipschitz > STABILITY_LIMIT:
                logger.warning(
                    "dt * L = {:.3f} exceeds {} ({} mode, L estimated at t={:.4g})".format(
                        dt * lipschitz, STABILITY_LIMIT, ens.mode, ens.time
                    )
                )
        if observer is not None:
            observer(ens)
    return ens
