"""
Run configuration: a frozen SimConfig, the plain key = value file format and
the config hash that identifies every report.

    # comments run to the end of the line
    d = 1
    N = 256
    eps = auto        # lambda_cut (ln N)^(-2/(d+2))
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import logging
import math
import pathlib
from typing import Any, Callable, Mapping, Sequence

from thefuzz import fuzz, process

from kslab.errors import ConfigError, DomainError
from kslab.grid.field import GridSpec
from kslab.harness.schedule import epsilon_schedule
from kslab.math import kernels
from kslab.particles.ensemble import default_decimation
from kslab.particles.initial import InitialData
from kslab.utils.type_utils import is_power_of_two

logger = logging.getLogger(__name__)

# Largest tolerated periodic-image contribution and initial tail mass.
IMAGE_TOLERANCE = 1e-10

DRIFT_MODES = ("direct", "fast")

# (M, L) per dimension; d >= 3 uses the last entry.
_GRID_DEFAULTS = {1: (512, 8.0), 2: (128, 6.0), 3: (32, 6.0)}

# Fields that never change results.
_UNHASHED = ("output_dir",)


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError("not a boolean: {!r}".format(text))


def _parse_optional_float(text: str) -> float | None:
    return None if text.strip().lower() in ("auto", "none", "") else float(text)


def _parse_optional_int(text: str) -> int | None:
    return None if text.strip().lower() in ("auto", "none", "") else int(text)


@dataclasses.dataclass(frozen=True)
class SimConfig:
    """
    Every parameter of a run. eps = None selects the cut-off schedule for N;
    L = None and M = None select the grid defaults for d.
    """

    d: int = 1
    N: int = 256
    T: float = 0.5
    dt: float = 0.01
    eps: float | None = 0.2
    lam: float = 0.1
    lam_cut: float = 1.0
    L: float | None = None
    M: int | None = None
    seed: int = 0
    n_seeds: int = 1
    drift_mode: str = "fast"
    history_every: int = 0
    sample_every: int = 5
    interaction: bool = True
    n_dirs: int = 64
    m_samples: int = 512
    radius: float = 2.0
    rho_family: str = "gaussian"
    sigma: float = 0.5
    mean: float = 0.0
    separation: float = 1.0
    weight: float = 0.5
    mass: float = 1.0
    chem: str = "gaussian"
    chem_amplitude: float = 0.5
    chem_width: float = 1.0
    output_dir: str = "out"

    def __post_init__(self) -> None:
        self._validate()

    def _validate(self) -> None:
        if self.d < 1:
            raise ConfigError("d must be at least 1, got {}".format(self.d))
        if self.N < 2:
            raise ConfigError("N >= 2 required for the interacting system, got {}".format(self.N))
        if not self.T > 0:
            raise ConfigError("T must be positive, got {}".format(self.T))
        if not self.dt > 0:
            raise ConfigError("dt must be positive, got {}".format(self.dt))
        if self.lam < 0:
            raise ConfigError("lambda must be nonnegative, got {}".format(self.lam))
        if self.n_seeds < 1 or self.sample_every < 1 or self.n_dirs < 1 or self.m_samples < 1:
            raise ConfigError("n_seeds, sample_every, n_dirs and m_samples must be positive")
        if self.drift_mode not in DRIFT_MODES:
            raise ConfigError(
                "drift_mode must be one of {}, got {!r}".format(DRIFT_MODES, self.drift_mode)
            )
        eps = self.epsilon
        if eps <= 0:
            raise ConfigError("eps must be positive, got {}".format(eps))
        if self.dt > eps / 4.0 * (1.0 + 1e-12):
            raise ConfigError("dt > eps/4 (dt={}, eps={})".format(self.dt, eps))
        if not is_power_of_two(self.cells):
            raise ConfigError("M must be a power of two, got {}".format(self.cells))
        bound = kernels.image_error_bound(self.half_width, self.T)
        if bound >= IMAGE_TOLERANCE:
            raise ConfigError(
                "image bound exp(-L^2/(4T)) = {:.2e} >= {} (L={}, T={})".format(
                    bound, IMAGE_TOLERANCE, self.half_width, self.T
                )
            )
        try:
            init = self.init_data()
        except DomainError as error:
            raise ConfigError(str(error))
        tail = init.tail_mass(0.5 * self.half_width)
        if tail > IMAGE_TOLERANCE:
            logger.warning(
                "initial mass {:.2e} lies outside [-L/2, L/2]^d (L={})".format(tail, self.half_width)
            )

    @property
    def epsilon(self) -> float:
        """The cut-off, resolved through the schedule when eps is auto."""
        if self.eps is not None:
            return self.eps
        try:
            return epsilon_schedule(self.N, self.lam_cut, self.d)
        except DomainError as error:
            raise ConfigError(str(error))

    @property
    def cells(self) -> int:
        if self.M is not None:
            return self.M
        return _GRID_DEFAULTS[min(self.d, 3)][0]

    @property
    def half_width(self) -> float:
        if self.L is not None:
            return self.L
        default = _GRID_DEFAULTS[min(self.d, 3)][1]
        needed = math.sqrt(4.0 * self.T * math.log(1.0 / IMAGE_TOLERANCE))
        return max(default, float(math.floor(needed) + 1))

    @property
    def steps(self) -> int:
        return int(round(self.T / self.dt))

    @property
    def decimation(self) -> int:
        if self.history_every > 0:
            return self.history_every
        return default_decimation(self.epsilon, self.dt)

    def grid_spec(self) -> GridSpec:
        return GridSpec(self.d, self.cells, self.half_width)

    def init_data(self) -> InitialData:
        return InitialData(
            dim=self.d,
            family=self.rho_family,
            mean=self.mean,
            sigma=self.sigma,
            separation=self.separation,
            weight=self.weight,
            mass=self.mass,
            chem=self.chem,
            chem_amplitude=self.chem_amplitude,
            chem_width=self.chem_width,
        )

    def with_updates(self, **changes: Any) -> SimConfig:
        """A validated copy with some fields replaced."""
        return dataclasses.replace(self, **changes)

    def canonical(self) -> dict[str, Any]:
        """Every result-affecting field, with eps, L and M resolved."""
        values = dataclasses.asdict(self)
        for name in _UNHASHED:
            values.pop(name)
        values["eps"] = self.epsilon
        values["L"] = self.half_width
        values["M"] = self.cells
        return values

    def config_hash(self) -> str:
        text = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]


_CONVERTERS: dict[str, Callable[[str], Any]] = {
    "d": int,
    "N": int,
    "T": float,
    "dt": float,
    "eps": _parse_optional_float,
    "lam": float,
    "lambda": float,
    "lam_cut": float,
    "lambda_cut": float,
    "L": _parse_optional_float,
    "M": _parse_optional_int,
    "seed": int,
    "n_seeds": int,
    "drift_mode": str.strip,
    "history_every": int,
    "sample_every": int,
    "interaction": _parse_bool,
    "n_dirs": int,
    "m_samples": int,
    "radius": float,
    "rho_family": str.strip,
    "sigma": float,
    "mean": float,
    "separation": float,
    "weight": float,
    "mass": float,
    "chem": str.strip,
    "chem_amplitude": float,
    "chem_width": float,
    "output_dir": str.strip,
}

_ALIASES = {"lambda": "lam", "lambda_cut": "lam_cut"}


def _field_name(key: str) -> str:
    if key in _CONVERTERS:
        return _ALIASES.get(key, key)
    suggestion, score = process.extractOne(key, list(_CONVERTERS), scorer=fuzz.token_sort_ratio)  # type: ignore
    hint = " (did you mean {!r}?)".format(suggestion) if score >= 50 else ""
    raise ConfigError("unknown config key {!r}{}".format(key, hint))


def parse_config_text(text: str) -> dict[str, str]:
    """key = value lines; # starts a comment; later keys win."""
    entries: dict[str, str] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("line {}: expected key = value, got {!r}".format(number, raw))
        key, value = (part.strip() for part in line.split("=", 1))
        entries[key] = value
    return entries


def parse_overrides(pairs: Sequence[str]) -> dict[str, str]:
    """--set key=value arguments."""
    entries: dict[str, str] = {}
    for pair in pairs:
        if "=" not in pair:
            raise ConfigError("override {!r} is not key=value".format(pair))
        key, value = (part.strip() for part in pair.split("=", 1))
        entries[key] = value
    return entries


def _convert(entries: Mapping[str, str]) -> dict[str, Any]:
    values: dict[str, Any] = {}
    for key, text in entries.items():
        name = _field_name(key)
        try:
            values[name] = _CONVERTERS[key](text)
        except ValueError:
            raise ConfigError("bad value {!r} for {}".format(text, key))
    return values


def make_config(
    entries: Mapping[str, str] | None = None, base: SimConfig | None = None
) -> SimConfig:
    """Applies textual entries on top of base (or the defaults)."""
    values = _convert(entries or {})
    if base is None:
        return SimConfig(**values)
    return base.with_updates(**values)


def load_config(
    path: pathlib.Path | str | None, overrides: Mapping[str, str] | None = None
) -> SimConfig:
    """Reads a config file (None for the defaults), then applies the overrides."""
    entries: dict[str, str] = {}
    if path is not None:
        entries.update(parse_config_text(pathlib.Path(path).read_text()))
    entries.update(overrides or {})
    return make_config(entries)
