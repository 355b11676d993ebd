"""
Convergence studies built on coupled runs and PDE solves.

Each study returns a ConvergenceReport whose metadata carries the template
config hash, so any report can be traced back to the run that produced it.
"""

from __future__ import annotations

import dataclasses
import logging
import math
from typing import Sequence

import numpy as np
import numpy.typing as npt
from scipy import integrate

from kslab.harness.config import SimConfig
from kslab.harness.report import ConvergenceReport, version_string
from kslab.harness.schedule import epsilon_schedule, snap_to_steps
from kslab.math import vector
from kslab.particles.brownian import BrownianStore
from kslab.particles.coupling import PdePaths, run_coupled, solve_pde_paths
from kslab.particles.drift import memory_drift_direct
from kslab.particles.ensemble import DriftMode, ParticleEnsemble
from kslab.particles.initial import InitialData, init_ensemble
from kslab.pde.compare import compare_eps_to_limit
from kslab.pde.state import PdeState, solve_path
from kslab.utils import parallel

logger = logging.getLogger(__name__)

# Frozen-cluster scan of the memory drift.
CLUSTER_WIDTH = 0.005
HORIZON_FACTOR = 16.0
QUERY_RADIUS = 4.0
QUERY_POINTS = 401
# Translation between the two Gaussians of the contraction ratio.
GAUSSIAN_SHIFT = 0.01


def _metadata(cfg: SimConfig, **extra: object) -> dict[str, object]:
    config_hash = cfg.config_hash()
    metadata: dict[str, object] = {
        "config_hash": config_hash,
        "version": version_string(config_hash),
        "d": cfg.d,
        "n_seeds": cfg.n_seeds,
        "seed": cfg.seed,
        "drift_mode": cfg.drift_mode,
    }
    metadata.update(extra)
    return metadata


def sweep_N(cfg: SimConfig, ns: Sequence[int]) -> ConvergenceReport:
    """
    Interacting vs intermediate coupling at the template's fixed cut-off: the
    statistic is E sup_t |X^eps - Xbar^eps| for every N.
    """
    cfg = cfg.with_updates(eps=cfg.epsilon)
    modes = (DriftMode.INTERACTING, DriftMode.INTERMEDIATE)
    paths = solve_pde_paths(cfg, modes)

    def run_point(n: int) -> np.ndarray:
        return run_coupled(cfg.with_updates(N=n), modes, paths).legs["eps_leg"]

    samples = parallel.ordered_map(run_point, list(ns), parallel.worker_count())
    return ConvergenceReport.make(
        "N", "eps_leg", list(ns), samples, _metadata(cfg, eps=cfg.epsilon)
    )


def sweep_eps(cfg: SimConfig, eps_list: Sequence[float]) -> ConvergenceReport:
    """Intermediate vs limit coupling: E sup_t |Xbar^eps - X| for every eps."""
    modes = (DriftMode.INTERMEDIATE, DriftMode.LIMIT)
    limit = solve_pde_paths(cfg, (DriftMode.LIMIT,)).limit

    def run_point(eps: float) -> np.ndarray:
        return run_coupled(cfg.with_updates(eps=eps), modes, PdePaths(limit=limit)).legs["limit_leg"]

    samples = parallel.ordered_map(run_point, list(eps_list), parallel.worker_count())
    return ConvergenceReport.make("eps", "limit_leg", list(eps_list), samples, _metadata(cfg, N=cfg.N))


def planned_chaos_runs(cfg: SimConfig, ns: Sequence[int]) -> list[tuple[int, float, float]]:
    """(N, scheduled eps, eps snapped to the step grid) for every N."""
    runs = []
    for n in ns:
        eps = epsilon_schedule(n, cfg.lam_cut, cfg.d)
        runs.append((n, eps, snap_to_steps(eps, cfg.dt)))
    return runs


def chaos_study(cfg: SimConfig, ns: Sequence[int]) -> ConvergenceReport:
    """
    Interacting particles with eps = eps(N) from the schedule against the limit
    density: the statistic is E sup_t W1(mu^N_t, rho_t). The statistic should
    decrease strictly in N; metadata["monotone"] records whether it did.
    """
    runs = planned_chaos_runs(cfg, ns)
    limit = solve_pde_paths(cfg, (DriftMode.LIMIT,)).limit

    def run_point(run: tuple[int, float, float]) -> np.ndarray:
        n, _, eps = run
        point = cfg.with_updates(N=n, eps=eps)
        return run_coupled(point, (DriftMode.INTERACTING,), PdePaths(limit=limit)).legs["chaos"]

    samples = parallel.ordered_map(run_point, runs, parallel.worker_count())
    report = ConvergenceReport.make(
        "N",
        "chaos",
        [n for n, _, _ in runs],
        samples,
        _metadata(cfg, interaction=cfg.interaction),
        columns={"eps": [eps for _, _, eps in runs]},
    )
    monotone = report.is_decreasing()
    report.metadata["monotone"] = monotone
    if not monotone:
        logger.warning("chaos statistic is not strictly decreasing in N: {}".format(list(report.means)))
    return report


def limit_distance_study(cfg: SimConfig, eps_list: Sequence[float]) -> ConvergenceReport:
    """sup_t ||c^eps - c||_L2(B_R) for every eps, with the density distance as a column."""
    init, spec = cfg.init_data(), cfg.grid_spec()
    coupling = 1.0 if cfg.interaction else 0.0
    limit = solve_path(
        PdeState.make(init, spec, cfg.lam, cfg.dt, None, coupling), cfg.steps, cfg.sample_every
    )

    def run_point(eps: float) -> tuple[float, float]:
        point = cfg.with_updates(eps=eps)
        state = PdeState.make(init, spec, cfg.lam, cfg.dt, point.epsilon, coupling)
        distance = compare_eps_to_limit(
            solve_path(state, cfg.steps, cfg.sample_every), limit, cfg.radius
        )
        return distance.c_sup, distance.rho_sup

    results = parallel.ordered_map(run_point, list(eps_list), parallel.worker_count())
    return ConvergenceReport.make(
        "eps",
        "c_l2_sup",
        list(eps_list),
        [[c] for c, _ in results],
        _metadata(cfg, radius=cfg.radius),
        columns={"rho_l2_sup": [rho for _, rho in results]},
    )


def gaussian_drift_functional(
    x: npt.ArrayLike,
    center: npt.ArrayLike,
    sigma: float,
    eps: float,
    t: float,
    lam: float,
    nodes: int = 2048,
) -> vector.Points:
    """
    int_eps^t exp(-lam tau) (grad G_tau * f)(x) dtau for a static law
    f = N(center, sigma^2 I). The convolution is the gradient of the
    N(center, (sigma^2 + 2 tau) I) density, integrated on a geometric tau grid.
    """
    center = np.asarray(center, dtype=np.float64).reshape(-1)
    points = vector.as_points(x, center.size)
    if t <= eps:
        return np.zeros_like(points)
    dim = center.size
    ages = np.geomspace(eps, t, nodes)
    variance = sigma**2 + 2.0 * ages
    delta = points - center
    squared = np.sum(delta * delta, axis=-1)
    density = np.exp(-squared[:, None] / (2.0 * variance)) / (2.0 * np.pi * variance) ** (dim / 2.0)
    weight = np.exp(-lam * ages) * density
    integrand = -delta[:, None, :] / variance[None, :, None] * weight[..., None]
    return integrate.trapezoid(integrand, ages, axis=1)


def contraction_ratio(
    points: vector.Points, sigma: float, shift: float, eps: float, t: float, lam: float
) -> float:
    """
    ||B[f] - B[g]||_inf / int_0^(t - eps) W1(f_s, g_s) ds for f = N(0, sigma^2 I) and
    g its translate by shift along the first axis; W1 between them is |shift|.
    """
    dim = points.shape[1]
    offset = np.zeros(dim)
    offset[0] = shift
    difference = gaussian_drift_functional(points, np.zeros(dim), sigma, eps, t, lam) - (
        gaussian_drift_functional(points, offset, sigma, eps, t, lam)
    )
    denominator = (t - eps) * abs(shift)
    if denominator == 0:
        return 0.0
    return float(np.max(vector.row_norms(difference))) / denominator


@dataclasses.dataclass(frozen=True)
class DriftScan:
    eps: float
    sup: float
    lipschitz: float
    ratio: float


def frozen_history(cluster: vector.Points, spacing: float, horizon: float) -> ParticleEnsemble:
    """An ensemble that has sat still at cluster for the whole horizon."""
    ens = ParticleEnsemble(cluster).set_stepping(spacing, 1)
    for _ in range(math.ceil(horizon / spacing - 1e-9)):
        ens.advance(cluster.copy())
    return ens


def scan_drift(cfg: SimConfig, eps: float, horizon: float) -> DriftScan:
    """
    Memory drift of a narrow frozen cluster along a ray from its centre: the sup of
    its norm, the largest finite-difference slope and the contraction ratio.
    """
    dim = cfg.d
    spacing = eps / 8.0
    store = BrownianStore.make(cfg.seed, dim, spacing)
    cluster = init_ensemble(InitialData(dim=dim, sigma=CLUSTER_WIDTH), cfg.N, store).positions
    ens = frozen_history(cluster, spacing, horizon)
    radii = np.linspace(0.0, QUERY_RADIUS, QUERY_POINTS)
    queries = np.zeros((QUERY_POINTS, dim))
    queries[:, 0] = radii
    drift = memory_drift_direct(ens, eps, cfg.lam, points=queries, workers=parallel.worker_count())
    sup = float(np.max(vector.row_norms(drift)))
    lipschitz = float(np.max(vector.row_norms(np.diff(drift, axis=0)))) / (radii[1] - radii[0])
    ratio = contraction_ratio(queries, CLUSTER_WIDTH, GAUSSIAN_SHIFT, eps, ens.time, cfg.lam)
    return DriftScan(eps, sup, lipschitz, ratio)


def drift_scaling_study(cfg: SimConfig, eps_list: Sequence[float]) -> ConvergenceReport:
    """
    sup-drift, Lipschitz and contraction-ratio scaling in eps. The primary
    statistic is the sup of the memory drift (target slope -(d-1)/2); the
    Lipschitz estimate (target -d/2) and the ratio (bounded by eps^-(d/2+1))
    are columns with their own fitted slopes in the metadata.
    """
    horizon = HORIZON_FACTOR * max(eps_list)
    scans = [scan_drift(cfg, eps, horizon) for eps in eps_list]
    report = ConvergenceReport.make(
        "eps",
        "sup_drift",
        [scan.eps for scan in scans],
        [[scan.sup] for scan in scans],
        _metadata(cfg, horizon=horizon, cluster_width=CLUSTER_WIDTH),
        columns={
            "lipschitz": [scan.lipschitz for scan in scans],
            "contraction_ratio": [scan.ratio for scan in scans],
        },
    )
    report.metadata["lipschitz_slope"] = report.slope_of("lipschitz")
    report.metadata["contraction_ratio_slope"] = report.slope_of("contraction_ratio")
    report.metadata["targets"] = {
        "sup_drift": -(cfg.d - 1) / 2.0,
        "lipschitz": -cfg.d / 2.0,
        "contraction_ratio": -(cfg.d / 2.0 + 1.0),
    }
    return report
