"""
Plain-text artifacts: field snapshots, profile tables, CSV tables and the
sha256 manifest of an output directory.
"""

import hashlib
import os
from pathlib import Path

import numpy as np
import pandas as pd
import yaml

from phaseforge.core.errors import DomainError
from phaseforge.core.grid import FieldState, Grid

MANIFEST_NAME = "manifest.tsv"
FLOAT_FORMAT = "%.17g"


# ---------------------------------------------------------------
# Snapshots
# ---------------------------------------------------------------
def write_snapshot(path, state: FieldState):
    """
    Header lines `dim`, `nx [ny]`, `dx [dy]`, `time`, then phi and T row-major,
    one value per line.
    """
    grid = state.grid
    lines = [
        str(grid.dim),
        " ".join(str(n) for n in grid.cells),
        " ".join(FLOAT_FORMAT % h for h in grid.spacing),
        FLOAT_FORMAT % state.time,
    ]
    lines += [FLOAT_FORMAT % v for v in state.phi.ravel()]
    lines += [FLOAT_FORMAT % v for v in state.T.ravel()]
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text("\n".join(lines) + "\n")


def read_snapshot(path):
    path = Path(path)
    if not path.exists():
        raise DomainError(f"Snapshot file not found: {path}")
    text = path.read_text().splitlines()
    try:
        dim = int(text[0])
        cells = tuple(int(v) for v in text[1].split())
        spacing = tuple(float(v) for v in text[2].split())
        time = float(text[3])
        values = np.array([float(v) for v in text[4:] if v.strip()])
    except (ValueError, IndexError) as e:
        raise DomainError(f"Malformed snapshot file {path}: {e}")
    if len(cells) != dim or len(spacing) != dim:
        raise DomainError(f"Snapshot {path}: header does not match dimension {dim}")

    grid = Grid(dim, tuple(n * h for n, h in zip(cells, spacing)), cells)
    if len(values) != 2 * grid.size:
        raise DomainError(
            f"Snapshot {path}: expected {2 * grid.size} values, found {len(values)}"
        )
    return FieldState(values[: grid.size], values[grid.size:], grid, time)


def write_profile(path, profile):
    """Two columns: z and phi0."""
    data = np.column_stack([profile.z_grid, profile.phi0])
    np.savetxt(path, data, fmt=FLOAT_FORMAT, delimiter=" ")


# ---------------------------------------------------------------
# Tables
# ---------------------------------------------------------------
def write_csv(path, rows, columns=None):
    df = pd.DataFrame(list(rows), columns=list(columns) if columns else None)
    df.to_csv(path, index=False, float_format=FLOAT_FORMAT)
    return df


def write_yaml(path, data):
    with open(path, "w") as f:
        yaml.safe_dump(data, f, sort_keys=False)


# ---------------------------------------------------------------
# Manifest
# ---------------------------------------------------------------
def file_sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(out_dir):
    """Hash every artifact under `out_dir` (the manifest itself excluded)."""
    out_dir = Path(out_dir)
    entries = []
    for root, _, files in os.walk(out_dir):
        for name in files:
            full = Path(root) / name
            rel = full.relative_to(out_dir).as_posix()
            if rel == MANIFEST_NAME:
                continue
            entries.append((rel, file_sha256(full)))
    entries.sort()
    (out_dir / MANIFEST_NAME).write_text("".join(f"{p}\t{h}\n" for p, h in entries))
    return dict(entries)


def read_manifest(out_dir):
    path = Path(out_dir) / MANIFEST_NAME
    entries = {}
    for line in path.read_text().splitlines():
        if line.strip():
            rel, digest = line.split("\t")
            entries[rel] = digest
    return entries


def verify_manifest(out_dir):
    """Paths whose content no longer matches the manifest (missing files included)."""
    out_dir = Path(out_dir)
    bad = []
    for rel, digest in read_manifest(out_dir).items():
        full = out_dir / rel
        if not full.exists() or file_sha256(full) != digest:
            bad.append(rel)
    return bad
