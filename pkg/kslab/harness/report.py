"""Convergence reports: per-point statistics along a sweep axis and a log-log slope fit."""

from __future__ import annotations

import csv
import dataclasses
import json
import logging
import math
import pathlib
from typing import Any, Mapping, Sequence

import numpy as np
import numpy.typing as npt
from scipy import stats

from kslab import __version__
from kslab.errors import SizeError

logger = logging.getLogger(__name__)

# Two-sided confidence level of the slope band.
CONFIDENCE = 0.95


@dataclasses.dataclass(frozen=True)
class SlopeFit:
    """log y = intercept + slope log x. stderr and band are None below three points."""

    slope: float
    intercept: float
    stderr: float | None = None
    band: tuple[float, float] | None = None
    residual: float = 0.0


def fit_slope(x: npt.ArrayLike, y: npt.ArrayLike) -> SlopeFit | None:
    """
    Least-squares slope of log y against log x. Returns None for fewer than two
    points or when some y is not positive.
    """
    x, y = np.asarray(x, dtype=np.float64), np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise SizeError("slope fit needs matching arrays, got {} and {}".format(x.shape, y.shape))
    if x.size < 2:
        return None
    if np.any(x <= 0) or np.any(y <= 0):
        logger.warning("cannot fit a log-log slope through nonpositive values")
        return None
    log_x, log_y = np.log(x), np.log(y)
    if x.size == 2:
        slope = float((log_y[1] - log_y[0]) / (log_x[1] - log_x[0]))
        return SlopeFit(slope, float(log_y[0] - slope * log_x[0]))
    fit = stats.linregress(log_x, log_y)
    residual = float(np.max(np.abs(log_y - (fit.intercept + fit.slope * log_x))))
    width = float(stats.t.ppf(0.5 + CONFIDENCE / 2.0, x.size - 2)) * fit.stderr
    return SlopeFit(
        float(fit.slope),
        float(fit.intercept),
        float(fit.stderr),
        (float(fit.slope - width), float(fit.slope + width)),
        residual,
    )


def seed_statistics(samples: npt.ArrayLike) -> tuple[float, float]:
    """Mean and standard error over independent seeds."""
    values = np.asarray(samples, dtype=np.float64)
    if values.size == 0:
        raise SizeError("no samples")
    stderr = float(np.std(values, ddof=1) / math.sqrt(values.size)) if values.size > 1 else 0.0
    return float(values.mean()), stderr


def version_string(config_hash: str) -> str:
    return "{}-g{}".format(__version__, config_hash[:7])


@dataclasses.dataclass(frozen=True)
class ConvergenceReport:
    """
    A statistic measured at several points of a sweep axis (N or eps), sorted
    along the axis. columns carries extra per-point values, e.g. the cut-off
    used at each N of a chaos study.
    """

    axis: str
    statistic: str
    points: np.ndarray
    means: np.ndarray
    stderrs: np.ndarray
    fit: SlopeFit | None
    metadata: dict[str, Any]
    columns: dict[str, np.ndarray] = dataclasses.field(default_factory=dict)

    @staticmethod
    def make(
        axis: str,
        statistic: str,
        points: Sequence[float],
        samples: Sequence[npt.ArrayLike],
        metadata: Mapping[str, Any] | None = None,
        columns: Mapping[str, Sequence[float]] | None = None,
    ) -> ConvergenceReport:
        """samples[k] holds the seed-level values measured at points[k]."""
        if len(points) != len(samples):
            raise SizeError("{} points but {} sample sets".format(len(points), len(samples)))
        order = np.argsort(np.asarray(points, dtype=np.float64), kind="stable")
        summaries = [seed_statistics(samples[k]) for k in order]
        sorted_points = np.asarray(points, dtype=np.float64)[order]
        means = np.array([m for m, _ in summaries])
        extra = {
            name: np.asarray(values, dtype=np.float64)[order]
            for name, values in (columns or {}).items()
        }
        return ConvergenceReport(
            axis=axis,
            statistic=statistic,
            points=sorted_points,
            means=means,
            stderrs=np.array([s for _, s in summaries]),
            fit=fit_slope(sorted_points, means),
            metadata=dict(metadata or {}),
            columns=extra,
        )

    @property
    def slope(self) -> float | None:
        return None if self.fit is None else self.fit.slope

    @property
    def slope_stderr(self) -> float | None:
        return None if self.fit is None else self.fit.stderr

    def is_decreasing(self) -> bool:
        """Strictly decreasing along the axis (true for a single point)."""
        return bool(np.all(np.diff(self.means) < 0))

    def slope_of(self, column: str) -> float | None:
        """Log-log slope of an extra column against the axis."""
        fit = fit_slope(self.points, self.columns[column])
        return None if fit is None else fit.slope

    def to_dict(self) -> dict[str, Any]:
        fit = None if self.fit is None else dataclasses.asdict(self.fit)
        if fit is not None and fit["band"] is not None:
            fit["band"] = list(fit["band"])
        return {
            "axis": self.axis,
            "statistic": self.statistic,
            "points": [float(p) for p in self.points],
            "means": [float(m) for m in self.means],
            "stderrs": [float(s) for s in self.stderrs],
            "fit": fit,
            "columns": {name: [float(v) for v in values] for name, values in self.columns.items()},
            "metadata": self.metadata,
        }

    def write_json(self, path: pathlib.Path | str) -> None:
        with open(path, "w") as stream:
            json.dump(self.to_dict(), stream, sort_keys=True, indent=2, separators=(",", ": "))
            stream.write("\n")

    def write_csv(self, path: pathlib.Path | str) -> None:
        names = sorted(self.columns)
        with open(path, "w", newline="") as stream:
            writer = csv.writer(stream)
            writer.writerow([self.axis, "mean", "stderr"] + names)
            for k, point in enumerate(self.points):
                writer.writerow(
                    [repr(float(point)), repr(float(self.means[k])), repr(float(self.stderrs[k]))]
                    + [repr(float(self.columns[name][k])) for name in names]
                )
