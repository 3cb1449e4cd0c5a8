"""Piecewise-linear Ritz discretization of the energy/mass form pair.

The mesh is the deduplicated sorted set of cell endpoints; gaps become
elements of zero density. Per element of length h and constant density rho
the stiffness block is (1/h) [[1,-1],[-1,1]] and the mass block
rho*h [[1/3,1/6],[1/6,1/3]]. Stiffness integrates over the whole interval
(gaps included) while mass sees only the cells, and the Dirichlet variant
removes the two boundary rows/columns. Eigenvalues of K u = lambda M u are
then upper bounds of the corresponding operator eigenvalues for the
piecewise-uniform measure, because the hat-function space is conforming and
all element integrals are exact.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import SingularMassError, TreeTooLargeError
from .measure import CellDecomposition
from .vtree import DEFAULT_NODE_CAP

DIRICHLET = "dirichlet"
NEUMANN = "neumann"


@dataclass
class Pencil:
    """Symmetric tridiagonal stiffness/mass pair on a fixed mesh."""

    bc: str
    mesh: np.ndarray
    kd: np.ndarray
    ko: np.ndarray
    md: np.ndarray
    mo: np.ndarray
    provenance: dict

    @property
    def dim(self) -> int:
        return int(self.kd.shape[0])


def refine_uniform(decomposition: CellDecomposition, splits: int) -> CellDecomposition:
    """Split every cell into ``splits`` equal sub-cells of the same density.

    Masses and all interval measures are unchanged; the mesh on cells gets
    ``splits`` times finer. ``splits == 1`` returns the input unchanged.
    """
    if splits < 1:
        raise ValueError("splits must be >= 1")
    if splits == 1:
        return decomposition
    n = decomposition.n_cells
    if n * splits > DEFAULT_NODE_CAP:
        raise TreeTooLargeError(f"refinement would create {n * splits} cells")
    lengths = decomposition.rights - decomposition.lefts
    frac = np.arange(splits + 1) / splits
    edges = decomposition.lefts[:, None] + lengths[:, None] * frac[None, :]
    edges[:, 0] = decomposition.lefts   # guard fp drift at the
    edges[:, -1] = decomposition.rights  # original endpoints
    return CellDecomposition(
        level=decomposition.level,
        interval=decomposition.interval,
        lefts=edges[:, :-1].ravel(),
        rights=edges[:, 1:].ravel(),
        masses=np.repeat(decomposition.masses / splits, splits),
        gap_lefts=decomposition.gap_lefts.copy(),
        gap_rights=decomposition.gap_rights.copy(),
        splits=decomposition.splits * splits,
        node_index=None,
        tree=decomposition.tree)


def assemble(decomposition: CellDecomposition, bc: str) -> Pencil:
    """Assemble the tridiagonal pencil for the given boundary condition."""
    if bc not in (DIRICHLET, NEUMANN):
        raise ValueError(f"bc must be {DIRICHLET!r} or {NEUMANN!r}")
    if decomposition.n_cells < 1:
        raise ValueError("decomposition has no cells")

    # Interleave cell and gap elements in mesh order. Gap bounds coincide
    # with cell endpoints, so nodes are cell endpoints with touching cells
    # deduplicated (their shared endpoint appears once).
    cl, cr = decomposition.lefts, decomposition.rights
    rho = decomposition.densities
    n = decomposition.n_cells
    starts = np.empty(2 * n - 1)
    ends = np.empty(2 * n - 1)
    dens = np.zeros(2 * n - 1)
    starts[0::2] = cl
    ends[0::2] = cr
    dens[0::2] = rho
    if n > 1:
        starts[1::2] = cr[:-1]
        ends[1::2] = cl[1:]
    keep = ends > starts
    keep[0::2] = True  # cells always kept; only zero-length gaps drop out
    starts, ends, dens = starts[keep], ends[keep], dens[keep]

    mesh = np.concatenate((starts[:1], ends))
    h = ends - starts
    inv_h = 1.0 / h
    nn = mesh.shape[0]

    kd = np.zeros(nn)
    kd[:-1] += inv_h
    kd[1:] += inv_h
    ko = -inv_h
    md = np.zeros(nn)
    md[:-1] += dens * h / 3.0
    md[1:] += dens * h / 3.0
    mo = dens * h / 6.0

    if bc == DIRICHLET:
        kd, ko, md, mo = kd[1:-1], ko[1:-1], md[1:-1], mo[1:-1]

    pencil = Pencil(
        bc=bc, mesh=mesh, kd=kd, ko=ko, md=md, mo=mo,
        provenance={"level": decomposition.level, "splits": decomposition.splits,
                    "cells": decomposition.n_cells})
    _check_mass_definite(pencil)
    return pencil


def _check_mass_definite(pencil: Pencil) -> None:
    if pencil.dim == 0:
        return
    bad = _kernels.sturm_counts(pencil.md, pencil.mo,
                                np.zeros_like(pencil.md), np.zeros_like(pencil.mo),
                                np.array([0.0]))[0]
    if bad:  # locate the first nonpositive pivot for the error message
        d = pencil.md[0]
        node = 0
        for i in range(1, pencil.dim):
            if d <= 0:
                break
            d = pencil.md[i] - pencil.mo[i - 1] ** 2 / d
            node = i
        raise SingularMassError(
            f"mass matrix is not positive definite near node {node}", node=node)


def pencil_to_csv(pencil: Pencil, fp, meta: dict | None = None) -> None:
    """Rows (i, K_diag, K_off, M_diag, M_off); the last off entries are 0."""
    for key, value in (meta or {}).items():
        fp.write(f"# {key}={value}\n")
    writer = csv.writer(fp)
    writer.writerow(("i", "k_diag", "k_off", "m_diag", "m_off"))
    for i in range(pencil.dim):
        ko = pencil.ko[i] if i < pencil.dim - 1 else 0.0
        mo = pencil.mo[i] if i < pencil.dim - 1 else 0.0
        writer.writerow([str(i), f"{pencil.kd[i]:.17g}", f"{ko:.17g}",
                         f"{pencil.md[i]:.17g}", f"{mo:.17g}"])
