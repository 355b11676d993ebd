"""
Command line entry point.

Commands are parsed using a fuzzy matcher, so "sweep n", "swn" or "chaos" all work.
Every command reads an optional key = value config file, applies --set overrides
and the study flags, prints the config hash and writes its results to the output
directory.
"""

from __future__ import annotations

import argparse
import csv
import logging
import pathlib
import sys
from typing import Callable, Sequence

from thefuzz import fuzz, process

from kslab.errors import LabError
from kslab.grid import snapshot
from kslab.harness import studies
from kslab.harness.config import SimConfig, load_config, parse_overrides
from kslab.harness.report import ConvergenceReport
from kslab.particles.brownian import BrownianStore
from kslab.particles.coupling import PdePaths, make_drift, pairwise_w1, run_coupled
from kslab.particles.ensemble import DriftMode, ParticleEnsemble
from kslab.particles.initial import init_ensemble
from kslab.particles.integrator import simulate
from kslab.pde.compare import compare_eps_to_limit
from kslab.pde.diagnostics import EnergyMonitor, check_smallness
from kslab.pde.state import PdeState, solve_path
from kslab.transport import wasserstein
from kslab.utils import parallel

logger = logging.getLogger(__name__)

COMMANDS = ("pde", "particles", "couple", "sweep-n", "sweep-eps", "chaos", "drift-scaling", "w1")

DEFAULT_NS = {"sweep-n": [64, 256, 1024, 4096], "chaos": [128, 512, 2048]}
DEFAULT_EPS = {"sweep-eps": [0.05, 0.1, 0.2], "drift-scaling": [0.04, 0.08, 0.16, 0.32]}


def get_arg_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kslab",
        description="Runs Keller-Segel particle, PDE and propagation-of-chaos experiments.",
    )
    parser.add_argument(
        "command",
        help="one of {} (fuzzy matched)".format(", ".join(COMMANDS)),
    )
    parser.add_argument("-c", "--config", default=None, help="a key = value config file")
    parser.add_argument(
        "-s",
        "--set",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override a config entry; may be repeated",
    )

    group = parser.add_argument_group(
        "studies", "Lists are comma separated. A single value overrides the config entry."
    )
    group.add_argument("--N", default=None, help="particle counts")
    group.add_argument("--eps", default=None, help="cut-off values")
    group.add_argument("--seeds", type=int, default=None, help="number of seeds per point")
    group.add_argument("-o", "--out", default=None, help="output directory")
    group.add_argument(
        "--inputs", nargs=2, default=None, metavar="KSPT", help="trajectory files for w1"
    )
    group.add_argument(
        "--dry-run", action="store_true", help="print the planned runs and exit"
    )

    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    verbosity.add_argument("-q", "--quiet", action="store_true", help="warnings only")
    return parser


def resolve_command(value: str) -> str:
    tokens = dict((command, command.replace("-", " ")) for command in COMMANDS)
    _, score, command = process.extractOne(  # type: ignore
        value.replace("-", " ").replace("_", " "), tokens, scorer=fuzz.token_sort_ratio  # type: ignore
    )
    if score < 95:
        print("Found {} for input {} (score: {})".format(command, value, score))
    return command


def _split(text: str | None, kind: Callable[[str], float | int]) -> list:
    if text is None:
        return []
    return [kind(part) for part in text.split(",") if part.strip()]


def _configure_logging(args: argparse.Namespace) -> None:
    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def _write_report(report: ConvergenceReport, out: pathlib.Path) -> None:
    report.write_csv(out / "report.csv")
    report.write_json(out / "report.json")
    slope = "none" if report.slope is None else "{:.4f}".format(report.slope)
    print("{} vs {}: slope {}".format(report.statistic, report.axis, slope))


def _run_pde(cfg: SimConfig, out: pathlib.Path, eps_list: list[float]) -> None:
    if len(eps_list) > 1:
        _write_report(studies.limit_distance_study(cfg, eps_list), out)
        return
    check_smallness(cfg.d, cfg.mass)
    init, spec = cfg.init_data(), cfg.grid_spec()
    coupling = 1.0 if cfg.interaction else 0.0
    monitor = EnergyMonitor() if cfg.d == 1 else None
    observer = None if monitor is None else monitor.observe
    paths = {
        "limit": solve_path(
            PdeState.make(init, spec, cfg.lam, cfg.dt, None, coupling),
            cfg.steps,
            cfg.sample_every,
            observer,
        ),
        "eps": solve_path(
            PdeState.make(init, spec, cfg.lam, cfg.dt, cfg.epsilon, coupling),
            cfg.steps,
            cfg.sample_every,
        ),
    }
    final = max(paths["limit"].recorded_steps())
    for name, path in paths.items():
        path.diagnostics.write_csv(out / "diagnostics_{}.csv".format(name))
        snapshot.write_field(out / "rho_{}.ksgf".format(name), path.rho(final))
        snapshot.write_field(out / "c_{}.ksgf".format(name), path.c(final))
        if cfg.d == 1:
            snapshot.write_slice_csv(out / "rho_{}.csv".format(name), path.rho(final))
        print("{}: mass drift {:.2e}".format(name, path.diagnostics.mass_drift()))
    distance = compare_eps_to_limit(paths["eps"], paths["limit"], cfg.radius)
    distance.write_csv(out / "limit_distance.csv")
    print("sup ||c^eps - c||_L2(B_R) = {:.6g}".format(distance.c_sup))
    if monitor is not None:
        print("energy growth rate {:.6g}".format(monitor.growth_rate()))


def _run_particles(cfg: SimConfig, out: pathlib.Path) -> None:
    spec = cfg.grid_spec()
    store = BrownianStore.make(cfg.seed, cfg.d, cfg.dt)
    ens = init_ensemble(cfg.init_data(), cfg.N, store).set_stepping(cfg.dt, cfg.decimation)
    drift = make_drift(cfg, DriftMode.INTERACTING, PdePaths(), spec, parallel.worker_count())
    with snapshot.TrajectoryWriter(out / "trajectory.kspt", cfg.d, cfg.N, spec.half_width) as writer:

        def record(current: ParticleEnsemble) -> None:
            if current.step % cfg.sample_every == 0:
                writer.write(current.time, current.positions)

        simulate(ens, drift, store, cfg.steps, spec.half_width, record)
    print("wrote {} particles over {} steps".format(cfg.N, cfg.steps))


def _run_w1(cfg: SimConfig, out: pathlib.Path, inputs: Sequence[str] | None) -> None:
    if inputs is None:
        raise LabError("w1 needs --inputs FIRST.kspt SECOND.kspt")
    with snapshot.read_trajectory(inputs[0]) as first, snapshot.read_trajectory(inputs[1]) as second:
        rows = [
            (t, pairwise_w1(xs, ys, cfg, cfg.seed)) for (t, xs), (_, ys) in zip(first, second)
        ]
    with open(out / "w1.csv", "w", newline="") as stream:
        writer = csv.writer(stream)
        writer.writerow(["t", "w1"])
        for t, value in rows:
            writer.writerow([repr(float(t)), repr(float(value))])
    print("sup W1 = {:.6g}".format(wasserstein.sup_metric([value for _, value in rows])))


def _plan(command: str, cfg: SimConfig, ns: list[int], eps_list: list[float]) -> None:
    print("{}: d={} T={} dt={} steps={} seeds={}".format(
        command, cfg.d, cfg.T, cfg.dt, cfg.steps, cfg.n_seeds
    ))
    if command == "chaos":
        for n, eps, snapped in studies.planned_chaos_runs(cfg, ns):
            print("  N={} eps(N)={:.6f} (run with {:.4f})".format(n, eps, snapped))
    elif command == "sweep-n":
        for n in ns:
            print("  N={} eps={}".format(n, cfg.epsilon))
    elif command in ("sweep-eps", "drift-scaling") or (command == "pde" and len(eps_list) > 1):
        for eps in eps_list:
            print("  N={} eps={}".format(cfg.N, eps))
    else:
        print("  N={} eps={}".format(cfg.N, cfg.epsilon))


def cli_main(argv: Sequence[str]) -> int:
    parser = get_arg_parser()
    try:
        args = parser.parse_args(list(argv))
    except SystemExit as exit:
        return int(exit.code or 0)
    _configure_logging(args)
    command = resolve_command(args.command)
    if args.config is not None and not pathlib.Path(args.config).is_file():
        print("config file not found: {}".format(args.config), file=sys.stderr)
        return 2
    try:
        ns = _split(args.N, int) or DEFAULT_NS.get(command, [])
        eps_list = _split(args.eps, float) or DEFAULT_EPS.get(command, [])
        overrides = parse_overrides(args.set)
        if args.N is not None and len(ns) == 1:
            overrides["N"] = str(ns[0])
        if args.eps is not None and len(eps_list) == 1:
            overrides["eps"] = str(eps_list[0])
        if args.seeds is not None:
            overrides["n_seeds"] = str(args.seeds)
        if args.out is not None:
            overrides["output_dir"] = args.out
        cfg = load_config(args.config, overrides)
        print("config hash: {}".format(cfg.config_hash()))
        if args.dry_run:
            _plan(command, cfg, ns, eps_list)
            return 0
        out = pathlib.Path(cfg.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        if command == "pde":
            _run_pde(cfg, out, eps_list)
        elif command == "particles":
            _run_particles(cfg, out)
        elif command == "couple":
            report = run_coupled(cfg)
            report.write_csv(out / "report.csv")
            report.write_json(out / "report.json")
            for name in sorted(report.legs):
                print("{}: {:.6g} +- {:.2g}".format(name, report.mean(name), report.stderr(name)))
        elif command == "sweep-n":
            _write_report(studies.sweep_N(cfg, ns), out)
        elif command == "sweep-eps":
            _write_report(studies.sweep_eps(cfg, eps_list), out)
        elif command == "chaos":
            _write_report(studies.chaos_study(cfg, ns), out)
        elif command == "drift-scaling":
            _write_report(studies.drift_scaling_study(cfg, eps_list), out)
        else:
            _run_w1(cfg, out, args.inputs)
    except LabError as error:
        print("error: {}".format(error), file=sys.stderr)
        return 1
    return 0


def main() -> None:
    sys.exit(cli_main(sys.argv[1:]))


if __name__ == "__main__":
    main()
