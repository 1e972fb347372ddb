import numpy as np
import pytest

from phaseforge.core.errors import DomainError
from phaseforge.core.grid import FieldState, Grid
from phaseforge.core.io import (
    MANIFEST_NAME,
    read_manifest,
    read_snapshot,
    verify_manifest,
    write_csv,
    write_manifest,
    write_snapshot,
)


# -----------------------------
# Snapshots
# -----------------------------
def test_snapshot_preserves_fields_exactly(tmp_path):
    grid = Grid.rectangle(1.0, 2.0, 8, 12)
    rng = np.random.default_rng(3)
    state = FieldState(rng.random(grid.shape), rng.standard_normal(grid.shape), grid, 0.125)

    path = tmp_path / "snap.txt"
    write_snapshot(path, state)
    back = read_snapshot(path)

    assert back.grid.cells == (8, 12)
    assert back.time == 0.125
    assert np.array_equal(back.phi, state.phi)
    assert np.array_equal(back.T, state.T)


def test_snapshot_header(tmp_path):
    grid = Grid.interval(2.0, 16)
    state = FieldState(np.ones(grid.shape), np.zeros(grid.shape), grid)
    path = tmp_path / "snap.txt"
    write_snapshot(path, state)
    lines = path.read_text().splitlines()
    assert lines[:3] == ["1", "16", "0.125"]
    assert len(lines) == 4 + 2 * 17


def test_truncated_snapshot_is_rejected(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("1\n8\n0.125\n0\n" + "1\n" * 10)
    with pytest.raises(DomainError) as exc:
        read_snapshot(path)
    assert "expected 18 values" in str(exc.value)


def test_garbled_header_is_rejected(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("one\n8\n")
    with pytest.raises(DomainError) as exc:
        read_snapshot(path)
    assert "Malformed" in str(exc.value)


def test_missing_snapshot(tmp_path):
    with pytest.raises(DomainError):
        read_snapshot(tmp_path / "nope.txt")


# -----------------------------
# Manifest
# -----------------------------
def test_manifest_tracks_every_artifact(tmp_path):
    write_csv(tmp_path / "a.csv", [{"x": 1.0, "y": 2.0}])
    (tmp_path / "sub").mkdir()
    (tmp_path / "sub" / "b.txt").write_text("hello\n")

    entries = write_manifest(tmp_path)
    assert sorted(entries) == ["a.csv", "sub/b.txt"]
    assert read_manifest(tmp_path) == entries
    assert MANIFEST_NAME not in entries
    assert verify_manifest(tmp_path) == []

    (tmp_path / "sub" / "b.txt").write_text("changed\n")
    (tmp_path / "a.csv").unlink()
    assert sorted(verify_manifest(tmp_path)) == ["a.csv", "sub/b.txt"]


def test_manifest_is_reproducible(tmp_path):
    for d in ("one", "two"):
        (tmp_path / d).mkdir()
        write_csv(tmp_path / d / "t.csv", [{"v": 0.1 * k} for k in range(5)])
    assert write_manifest(tmp_path / "one") == write_manifest(tmp_path / "two")
