import csv
import pathlib

import numpy as np
import pytest

from kslab.errors import FormatError
from kslab.grid import snapshot
from kslab.grid.field import GridField, GridSpec, gradient


def test_field_file_keeps_samples_and_time(tmp_path: pathlib.Path, plane: GridSpec):
    f = plane.sample(lambda p: np.exp(-np.sum(p**2, axis=1)), time=0.25)
    snapshot.write_field(tmp_path / "rho.ksgf", f)
    back = snapshot.read_field(tmp_path / "rho.ksgf")
    assert back.spec == plane
    assert back.time == 0.25
    np.testing.assert_array_equal(back.values, f.values)

    g = gradient(f)
    snapshot.write_field(tmp_path / "grad.ksgf", g)
    assert snapshot.read_field(tmp_path / "grad.ksgf").values.shape == (2,) + plane.shape


def test_field_file_header_layout(tmp_path: pathlib.Path, line: GridSpec):
    snapshot.write_field(tmp_path / "c.ksgf", line.zeros(1.5))
    raw = (tmp_path / "c.ksgf").read_bytes()
    assert raw[:4] == b"KSGF"
    assert len(raw) == 4 + 3 * 4 + 2 * 8 + 8 * line.cells


def test_bad_files_are_rejected(tmp_path: pathlib.Path, line: GridSpec):
    path = tmp_path / "bad.ksgf"
    path.write_bytes(b"NOPE" + bytes(28))
    with pytest.raises(FormatError):
        snapshot.read_field(path)
    snapshot.write_field(path, line.zeros())
    path.write_bytes(path.read_bytes()[:-8])
    with pytest.raises(FormatError):
        snapshot.read_field(path)
    path.write_bytes(b"KSGF")
    with pytest.raises(FormatError):
        snapshot.read_field(path)


def test_trajectory_file(tmp_path: pathlib.Path):
    rng = np.random.default_rng(0)
    frames = [rng.normal(size=(5, 2)) for _ in range(3)]
    with snapshot.TrajectoryWriter(tmp_path / "run.kspt", 2, 5, 6.0) as writer:
        for k, frame in enumerate(frames):
            writer.write(0.1 * k, frame)
        with pytest.raises(FormatError):
            writer.write(0.3, np.zeros((4, 2)))
    with snapshot.read_trajectory(tmp_path / "run.kspt") as reader:
        assert reader.half_width == 6.0
        read = list(reader)
    assert [t for t, _ in read] == [0.0, 0.1, 0.2]
    for (_, positions), frame in zip(read, frames):
        np.testing.assert_array_equal(positions, frame)


def test_partly_read_trajectory_is_closed(tmp_path: pathlib.Path):
    path = tmp_path / "run.kspt"
    with snapshot.TrajectoryWriter(path, 1, 2, 8.0) as writer:
        for k in range(4):
            writer.write(0.1 * k, np.zeros((2, 1)))
    with snapshot.read_trajectory(path) as reader:
        first = next(iter(reader))
    assert first[0] == 0.0
    assert reader.closed
    with snapshot.TrajectoryWriter(path, 1, 2, 8.0):
        pass
    path.write_bytes(b"KSGF" + path.read_bytes()[4:])
    with pytest.raises(FormatError):
        snapshot.read_trajectory(path)


def test_truncated_trajectory(tmp_path: pathlib.Path):
    path = tmp_path / "run.kspt"
    with snapshot.TrajectoryWriter(path, 1, 4, 8.0) as writer:
        writer.write(0.0, np.zeros((4, 1)))
    path.write_bytes(path.read_bytes()[:-3])
    with snapshot.read_trajectory(path) as reader:
        with pytest.raises(FormatError):
            list(reader)


def test_slice_csv(tmp_path: pathlib.Path, plane: GridSpec):
    f = plane.sample(lambda p: p[:, 0] + 10 * p[:, 1])
    snapshot.write_slice_csv(tmp_path / "slice.csv", f, axis=0)
    with open(tmp_path / "slice.csv") as stream:
        rows = list(csv.reader(stream))
    assert rows[0] == ["x", "value"]
    assert len(rows) == plane.cells + 1
    x, value = map(float, rows[1])
    assert x == -plane.half_width
    assert value == pytest.approx(x)
