"""
Binary snapshots of grid fields (KSGF) and particle trajectories (KSPT), plus CSV slices.

Both formats share a little-endian header: magic, version (u32), d (u32),
M or N (u32), L (f64), time (f64). KSGF is followed by the row-major f64 samples,
component-major for vector fields. KSPT is followed by one block per snapshot: its
time (f64) then the N x d positions (f64).
"""

from __future__ import annotations

import csv
import pathlib
import struct
from typing import BinaryIO, Iterator, Self

import numpy as np

from kslab.errors import FormatError
from kslab.grid.field import GridField, GridSpec
from kslab.math import vector

FIELD_MAGIC = b"KSGF"
TRAJECTORY_MAGIC = b"KSPT"
VERSION = 1

_HEADER = struct.Struct("<4sIIIdd")
_FLOAT = np.dtype("<f8")


def _read_header(stream: BinaryIO, magic: bytes) -> tuple[int, int, float, float]:
    raw = stream.read(_HEADER.size)
    if len(raw) != _HEADER.size:
        raise FormatError("truncated header")
    found, version, dim, count, half_width, time = _HEADER.unpack(raw)
    if found != magic:
        raise FormatError("bad magic {!r}, expected {!r}".format(found, magic))
    if version != VERSION:
        raise FormatError("unsupported version {}".format(version))
    return dim, count, half_width, time


def write_field(path: pathlib.Path | str, field: GridField) -> None:
    spec = field.spec
    with open(path, "wb") as stream:
        stream.write(
            _HEADER.pack(
                FIELD_MAGIC, VERSION, spec.dim, spec.cells, spec.half_width, field.time
            )
        )
        stream.write(np.ascontiguousarray(field.values, dtype=_FLOAT).tobytes())


def read_field(path: pathlib.Path | str) -> GridField:
    with open(path, "rb") as stream:
        dim, cells, half_width, time = _read_header(stream, FIELD_MAGIC)
        payload = np.frombuffer(stream.read(), dtype=_FLOAT)
    spec = GridSpec(dim, cells, half_width)
    per_component = cells**dim
    if payload.size == 0 or payload.size % per_component:
        raise FormatError(
            "payload of {} samples does not fit a {}^{} grid".format(
                payload.size, cells, dim
            )
        )
    components = payload.size // per_component
    shape = spec.shape if components == 1 else (components,) + spec.shape
    return GridField(payload.reshape(shape).astype(np.float64), spec, time)


def write_slice_csv(path: pathlib.Path | str, field: GridField, axis: int = 0) -> None:
    """Writes the line through the origin along one axis as x,value rows (one column per component)."""
    spec = field.spec
    index: list[int | slice] = [spec.cells // 2] * spec.dim
    index[axis] = slice(None)
    lead: tuple[slice, ...] = (slice(None),) if field.is_vector else ()
    line = field.values[lead + tuple(index)]
    columns = line.reshape(field.components, spec.cells)
    with open(path, "w", newline="") as stream:
        writer = csv.writer(stream)
        header = ["x"] + (
            ["value"]
            if field.components == 1
            else ["value_{}".format(k) for k in range(field.components)]
        )
        writer.writerow(header)
        for k, x in enumerate(spec.axis()):
            writer.writerow([repr(float(x))] + [repr(float(v)) for v in columns[:, k]])


class TrajectoryWriter:
    """Streams ensemble snapshots into a KSPT file."""

    def __init__(self, path: pathlib.Path | str, dim: int, count: int, half_width: float, t0: float = 0.0) -> None:
        self._stream = open(path, "wb")
        self._dim = dim
        self._count = count
        self._stream.write(
            _HEADER.pack(TRAJECTORY_MAGIC, VERSION, dim, count, half_width, t0)
        )

    def write(self, time: float, positions: vector.Points) -> Self:
        if positions.shape != (self._count, self._dim):
            raise FormatError(
                "expected positions of shape {}, got {}".format(
                    (self._count, self._dim), positions.shape
                )
            )
        self._stream.write(struct.pack("<d", time))
        self._stream.write(np.ascontiguousarray(positions, dtype=_FLOAT).tobytes())
        return self

    def close(self) -> None:
        self._stream.close()

    def __enter__(self) -> Self:
        return self

    def __exit__(self, *_) -> None:
        self.close()


class TrajectoryReader:
    """Reads ensemble snapshots back from a KSPT file, one (time, positions) pair at a time."""

    def __init__(self, path: pathlib.Path | str) -> None:
        self._stream = open(path, "rb")
        try:
            self._dim, self._count, self._half_width, _ = _read_header(
                self._stream, TRAJECTORY_MAGIC
            )
        except BaseException:
            self._stream.close()
            raise

    @property
    def half_width(self) -> float:
        return self._half_width

    @property
    def closed(self) -> bool:
        return self._stream.closed

    def __iter__(self) -> Iterator[tuple[float, vector.Points]]:
        block = self._count * self._dim * _FLOAT.itemsize
        while True:
            stamp = self._stream.read(8)
            if not stamp:
                return
            data = self._stream.read(block)
            if len(stamp) != 8 or len(data) != block:
                raise FormatError("truncated trajectory snapshot")
            (time,) = struct.unpack("<d", stamp)
            yield time, np.frombuffer(data, dtype=_FLOAT).reshape(self._count, self._dim).astype(
                np.float64
            )

    def close(self) -> None:
        self._stream.close()

    def __enter__(self) -> Self:
        return self

    def __exit__(self, *_) -> None:
        self.close()


def read_trajectory(path: pathlib.Path | str) -> TrajectoryReader:
    """Opens a KSPT file; use the reader as a context manager so the file is closed."""
    return TrajectoryReader(path)
