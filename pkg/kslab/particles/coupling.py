"""
Shared-noise coupling of the interacting, intermediate and limit processes.

All modes start from the same init_ensemble output and read the same Brownian
increments, so the pathwise distances between them measure the two halves of
the propagation-of-chaos argument: the N-rate at fixed eps (interacting vs
intermediate) and the eps-rate (intermediate vs limit).
"""

from __future__ import annotations

import csv
import dataclasses
import json
import logging
import math
import pathlib
from typing import TYPE_CHECKING, Sequence

import numpy as np

from kslab import __version__
from kslab.errors import StateError
from kslab.grid.field import GridSpec
from kslab.math import vector
from kslab.particles.brownian import BrownianStore
from kslab.particles.drift import (
    DirectInteraction,
    DriftEvaluator,
    FastInteraction,
    InitialChemicalDrift,
    MeanFieldDrift,
)
from kslab.particles.ensemble import DriftMode
from kslab.particles.initial import init_ensemble
from kslab.particles.integrator import simulate
from kslab.pde.state import PdePath, PdeState, solve_path
from kslab.transport import wasserstein
from kslab.utils import parallel

if TYPE_CHECKING:
    from kslab.harness.config import SimConfig

logger = logging.getLogger(__name__)

ALL_MODES = (DriftMode.INTERACTING, DriftMode.INTERMEDIATE, DriftMode.LIMIT)

# (first mode, second mode, name) of the pathwise legs.
_LEGS = (
    (DriftMode.INTERACTING, DriftMode.INTERMEDIATE, "eps_leg"),
    (DriftMode.INTERMEDIATE, DriftMode.LIMIT, "limit_leg"),
    (DriftMode.INTERACTING, DriftMode.LIMIT, "total"),
)


@dataclasses.dataclass
class PdePaths:
    """Precomputed PDE solutions shared by every seed (and by sweep points with equal physics)."""

    intermediate: PdePath | None = None
    limit: PdePath | None = None


def solve_pde_paths(cfg: SimConfig, modes: Sequence[DriftMode], paths: PdePaths | None = None) -> PdePaths:
    """Fills in the PDE paths the requested modes need and that paths does not hold yet."""
    paths = PdePaths() if paths is None else dataclasses.replace(paths)
    init, spec = cfg.init_data(), cfg.grid_spec()
    coupling = 1.0 if cfg.interaction else 0.0
    if DriftMode.INTERMEDIATE in modes and paths.intermediate is None:
        state = PdeState.make(init, spec, cfg.lam, cfg.dt, cfg.epsilon, coupling)
        paths.intermediate = solve_path(state, cfg.steps, cfg.sample_every)
    if paths.limit is None:
        state = PdeState.make(init, spec, cfg.lam, cfg.dt, None, coupling)
        paths.limit = solve_path(state, cfg.steps, cfg.sample_every)
    return paths


def make_drift(cfg: SimConfig, mode: DriftMode, paths: PdePaths, spec: GridSpec, workers: int) -> DriftEvaluator:
    init = cfg.init_data()
    if not cfg.interaction:
        return InitialChemicalDrift(init, cfg.lam, spec)
    if mode == DriftMode.INTERACTING:
        if cfg.drift_mode == "direct":
            return DirectInteraction(init, cfg.epsilon, cfg.lam, spec, workers)
        return FastInteraction(init, cfg.epsilon, cfg.lam, spec, workers)
    path = paths.intermediate if mode == DriftMode.INTERMEDIATE else paths.limit
    if path is None:
        raise StateError("no density path for the {} mode".format(mode))
    return MeanFieldDrift(path, mode)


def run_trajectories(
    cfg: SimConfig,
    seed: int,
    modes: Sequence[DriftMode],
    paths: PdePaths,
    workers: int = 1,
) -> dict[DriftMode, vector.Array]:
    """Positions (steps + 1, N, d) of every requested mode, all driven by the same noise."""
    spec = cfg.grid_spec()
    store = BrownianStore.make(seed, cfg.d, cfg.dt)
    start = init_ensemble(cfg.init_data(), cfg.N, store).set_stepping(cfg.dt, cfg.decimation)
    trajectories: dict[DriftMode, vector.Array] = {}
    for mode in modes:
        frames: list[vector.Points] = []
        ens = start.copy(mode)
        simulate(
            ens,
            make_drift(cfg, mode, paths, spec, workers),
            store,
            cfg.steps,
            half_width=spec.half_width,
            observer=lambda current: frames.append(current.positions.copy()),
        )
        trajectories[mode] = np.stack(frames)
    return trajectories


def pairwise_w1(xs: vector.Points, ys: vector.Points, cfg: SimConfig, seed: int) -> float:
    if xs.shape[1] == 1:
        return wasserstein.w1_1d(xs, ys).value
    if xs.shape[0] <= wasserstein.EXACT_LIMIT:
        return wasserstein.w1_exact(xs, ys).value
    return wasserstein.w1_sliced(xs, ys, cfg.n_dirs, seed).value


@dataclasses.dataclass
class SeedResult:
    """Curves of one seed on the sample steps; legs as sup over all steps."""

    seed: int
    legs: dict[str, float]
    running: dict[str, vector.Series]
    w1: dict[str, vector.Series]


def _seed_result(
    cfg: SimConfig,
    seed: int,
    trajectories: dict[DriftMode, vector.Array],
    paths: PdePaths,
    sample_steps: np.ndarray,
) -> SeedResult:
    half_width = cfg.half_width
    legs: dict[str, float] = {}
    running: dict[str, vector.Series] = {}
    w1: dict[str, vector.Series] = {}
    for first, second, name in _LEGS:
        if first not in trajectories or second not in trajectories:
            continue
        delta = vector.minimum_image(trajectories[first] - trajectories[second], half_width)
        distance = vector.row_norms(delta)
        sup_so_far = np.maximum.accumulate(distance, axis=0)
        legs[name] = float(np.mean(sup_so_far[-1]))
        running[name] = np.mean(sup_so_far[sample_steps], axis=1)
        w1[name] = np.array(
            [
                pairwise_w1(trajectories[first][n], trajectories[second][n], cfg, seed)
                for n in sample_steps
            ]
        )
    if DriftMode.INTERACTING in trajectories and paths.limit is not None:
        particles = trajectories[DriftMode.INTERACTING]
        w1["chaos"] = np.array(
            [
                wasserstein.w1_vs_grid(
                    particles[n], paths.limit.rho(int(n)), cfg.m_samples, seed, cfg.n_dirs
                ).value
                for n in sample_steps
            ]
        )
        legs["chaos"] = wasserstein.sup_metric(w1["chaos"])
    return SeedResult(seed, legs, running, w1)


def _stderr(values: np.ndarray) -> float:
    return float(np.std(values, ddof=1) / math.sqrt(values.size)) if values.size > 1 else 0.0


@dataclasses.dataclass
class CouplingReport:
    """
    Seed-level statistics of a coupled run. legs[name] holds one value per seed:
    the particle mean of sup_t |X^a - X^b| for eps_leg (interacting vs
    intermediate), limit_leg (intermediate vs limit) and total (interacting vs
    limit), and sup_t W1(mu_t, rho_t) against the limit density for chaos.
    """

    config_hash: str
    N: int
    eps: float
    d: int
    seeds: list[int]
    times: vector.Series
    legs: dict[str, np.ndarray]
    curves: dict[str, vector.Series]

    @property
    def version(self) -> str:
        return "{}-g{}".format(__version__, self.config_hash[:7])

    def mean(self, name: str) -> float:
        return float(np.mean(self.legs[name]))

    def stderr(self, name: str) -> float:
        return _stderr(self.legs[name])

    @property
    def eps_leg(self) -> float:
        return self.mean("eps_leg")

    @property
    def limit_leg(self) -> float:
        return self.mean("limit_leg")

    @property
    def total(self) -> float:
        return self.mean("total")

    def to_dict(self) -> dict:
        return {
            "config_hash": self.config_hash,
            "version": self.version,
            "N": self.N,
            "eps": self.eps,
            "d": self.d,
            "seeds": self.seeds,
            "legs": {
                name: {
                    "mean": self.mean(name),
                    "stderr": self.stderr(name),
                    "per_seed": [float(v) for v in values],
                }
                for name, values in self.legs.items()
            },
            "times": [float(t) for t in self.times],
            "curves": {name: [float(v) for v in values] for name, values in self.curves.items()},
        }

    def write_json(self, path: pathlib.Path | str) -> None:
        with open(path, "w") as stream:
            json.dump(self.to_dict(), stream, sort_keys=True, indent=2, separators=(",", ": "))
            stream.write("\n")

    def write_csv(self, path: pathlib.Path | str) -> None:
        """One row per sample time, one column per curve."""
        names = sorted(self.curves)
        with open(path, "w", newline="") as stream:
            writer = csv.writer(stream)
            writer.writerow(["t"] + names)
            for row, t in enumerate(self.times):
                writer.writerow([repr(float(t))] + [repr(float(self.curves[n][row])) for n in names])


def sample_steps(cfg: SimConfig) -> np.ndarray:
    """Every sample_every-th step from 0; the PDE paths record exactly these."""
    return np.arange(0, cfg.steps + 1, cfg.sample_every, dtype=np.int64)


def run_coupled(
    cfg: SimConfig,
    modes: Sequence[DriftMode] = ALL_MODES,
    paths: PdePaths | None = None,
) -> CouplingReport:
    """
    Runs the requested modes for seeds seed, seed + 1, ..., seed + n_seeds - 1.
    The PDE paths are solved once and shared by all seeds.
    """
    workers = parallel.worker_count()
    paths = solve_pde_paths(cfg, modes, paths)
    steps = sample_steps(cfg)
    seeds = [cfg.seed + k for k in range(cfg.n_seeds)]
    results = []
    for seed in seeds:
        trajectories = run_trajectories(cfg, seed, modes, paths, workers)
        results.append(_seed_result(cfg, seed, trajectories, paths, steps))
        logger.debug("seed {} done: {}".format(seed, results[-1].legs))
    legs = {name: np.array([r.legs[name] for r in results]) for name in results[0].legs}
    curves: dict[str, vector.Series] = {}
    for name in results[0].running:
        curves["sup_" + name] = np.mean([r.running[name] for r in results], axis=0)
    for name in results[0].w1:
        curves["w1_" + name] = np.mean([r.w1[name] for r in results], axis=0)
    return CouplingReport(
        config_hash=cfg.config_hash(),
        N=cfg.N,
        eps=cfg.epsilon,
        d=cfg.d,
        seeds=seeds,
        times=steps * cfg.dt,
        legs=legs,
        curves=curves,
    )
