"""Level-n cell decompositions and the piecewise-uniform approximating measure.

A decomposition holds the generation-n cells of a tree in left-to-right
order. Each cell carries the exact cumulative weight product as its mass and
a constant density mass/length, so every interval mass query is closed form.
Gaps between consecutive cells carry no mass; zero-length gaps (touching
cells) are dropped.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import DepthExhaustedError, InvalidInputError
from .vtree import VTree

# Consecutive cells overlapping by more than this many ulps of the base
# interval indicate broken input; smaller overlaps are rounding debris from
# composing affine maps and get clamped to touching.
_OVERLAP_ULPS = 64


@dataclass(frozen=True)
class Cell:
    path: tuple[int, ...] | None
    left: float
    right: float
    mass: float
    density: float


@dataclass
class CellDecomposition:
    """Ordered cells and gaps of one tree generation (or a refinement)."""

    level: int
    interval: tuple[float, float]
    lefts: np.ndarray
    rights: np.ndarray
    masses: np.ndarray
    gap_lefts: np.ndarray
    gap_rights: np.ndarray
    splits: int = 1
    node_index: np.ndarray | None = None
    tree: VTree | None = field(default=None, repr=False)

    @property
    def n_cells(self) -> int:
        return int(self.lefts.shape[0])

    @property
    def densities(self) -> np.ndarray:
        return self.masses / (self.rights - self.lefts)

    def cell(self, index: int) -> Cell:
        if not 0 <= index < self.n_cells:
            raise IndexError(f"cell index {index} out of range")
        path = None
        if self.tree is not None and self.node_index is not None:
            path = self.tree.node_path(self.level, int(self.node_index[index]))
        length = self.rights[index] - self.lefts[index]
        return Cell(path, float(self.lefts[index]), float(self.rights[index]),
                    float(self.masses[index]), float(self.masses[index] / length))


def decompose(tree: VTree, level: int) -> CellDecomposition:
    """Cells of generation ``level`` with exact affine-composed endpoints."""
    if level < 0:
        raise ValueError("level must be >= 0")
    if level > tree.depth:
        raise DepthExhaustedError(
            f"tree materialized to depth {tree.depth}, requested level {level}",
            extra_depth_hint=level - tree.depth)
    a, b = tree.catalog.lower, tree.catalog.upper
    gen = tree.generations[level]
    lefts = gen.rprod * a + gen.shift
    rights = gen.rprod * b + gen.shift
    masses = gen.mprod.copy()

    if lefts.shape[0] > 1:
        gaps = lefts[1:] - rights[:-1]
        tol = _OVERLAP_ULPS * np.finfo(float).eps * max(abs(a), abs(b), b - a)
        if (gaps < -tol).any():
            worst = float(gaps.min())
            raise InvalidInputError(
                f"consecutive cells overlap by {-worst!r} at level {level}")
        clamp = gaps < 0
        if clamp.any():  # sub-ulp overlap from affine composition: snap to touching
            lefts = lefts.copy()
            lefts[1:][clamp] = rights[:-1][clamp]
            gaps = lefts[1:] - rights[:-1]
        keep = gaps > 0
        gap_lefts = rights[:-1][keep]
        gap_rights = lefts[1:][keep]
    else:
        gap_lefts = np.zeros(0)
        gap_rights = np.zeros(0)

    return CellDecomposition(
        level=level, interval=(a, b), lefts=lefts, rights=rights, masses=masses,
        gap_lefts=gap_lefts, gap_rights=gap_rights, splits=1,
        node_index=np.arange(gen.size, dtype=np.int64), tree=tree)


def cell_mass(decomposition: CellDecomposition, index: int) -> float:
    """Mass of one cell: the stored cumulative weight product."""
    if not 0 <= index < decomposition.n_cells:
        raise IndexError(f"cell index {index} out of range")
    return float(decomposition.masses[index])


def measure_of_interval(decomposition: CellDecomposition, lo: float, hi: float) -> float:
    """Exact mass of [lo, hi]: density times overlap length, summed."""
    a, b = decomposition.interval
    if not (a <= lo <= hi <= b):
        raise ValueError(f"interval [{lo}, {hi}] must be ordered within [{a}, {b}]")
    overlap = np.minimum(hi, decomposition.rights) - np.maximum(lo, decomposition.lefts)
    np.clip(overlap, 0.0, None, out=overlap)
    return float((decomposition.densities * overlap).sum())


# ---------------------------------------------------------------------------
# CSV export / import

def cells_to_csv(decomposition: CellDecomposition, fp, meta: dict | None = None) -> None:
    _write_csv(fp, ("left", "right", "mass", "density"),
               zip(decomposition.lefts, decomposition.rights,
                   decomposition.masses, decomposition.densities), meta)


def gaps_to_csv(decomposition: CellDecomposition, fp, meta: dict | None = None) -> None:
    _write_csv(fp, ("left", "right"),
               zip(decomposition.gap_lefts, decomposition.gap_rights), meta)


def _write_csv(fp, header, rows, meta) -> None:
    for key, value in (meta or {}).items():
        fp.write(f"# {key}={value}\n")
    writer = csv.writer(fp)
    writer.writerow(header)
    for row in rows:
        writer.writerow([f"{float(v):.17g}" for v in row])


def cells_from_csv(fp, level: int, interval: tuple[float, float],
                   splits: int = 1) -> CellDecomposition:
    """Rebuild a decomposition from its cells CSV; gaps are recomputed."""
    rows = [r for r in csv.reader(line for line in fp if not line.startswith("#"))]
    body = rows[1:]
    lefts = np.array([float(r[0]) for r in body])
    rights = np.array([float(r[1]) for r in body])
    masses = np.array([float(r[2]) for r in body])
    gaps = lefts[1:] - rights[:-1] if lefts.shape[0] > 1 else np.zeros(0)
    keep = gaps > 0
    return CellDecomposition(
        level=level, interval=interval, lefts=lefts, rights=rights, masses=masses,
        gap_lefts=(rights[:-1][keep] if lefts.shape[0] > 1 else np.zeros(0)),
        gap_rights=(lefts[1:][keep] if lefts.shape[0] > 1 else np.zeros(0)),
        splits=splits)
