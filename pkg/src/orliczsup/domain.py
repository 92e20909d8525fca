"""Box domains, grid functions, forward-difference gradients, quadrature.

Everything is midpoint-rule based: Phi-functions and integrands are sampled
at cell centers, which keeps one consistent lattice for modular integrals and
for the discrete essential supremum.  Gradients are per-cell forward
differences anchored at the lower corner, exact on affine fields.
"""

import csv
import json

import numpy as np

__all__ = [
    "Grid",
    "GridFunction",
    "GradientField",
    "gradient",
    "integrate",
    "sup_cellwise",
    "save_csv",
    "load_csv",
    "save_json",
    "load_json",
]


class Grid:
    """Uniform axis-aligned box grid in dimension N in {1, 2}.

    extent: (a, b) in 1D or ((a1, b1), (a2, b2)) in 2D.
    cells:  m in 1D or (m1, m2), each at least 2 so gradients exist.
    """

    def __init__(self, extent, cells):
        extent = np.atleast_2d(np.asarray(extent, dtype=float))
        if extent.shape[1] != 2:
            raise ValueError("extent must be (a, b) pairs per axis")
        self.dim = extent.shape[0]
        if self.dim not in (1, 2):
            raise ValueError("only N in {1, 2} is supported")
        self.lo = extent[:, 0].copy()
        self.hi = extent[:, 1].copy()
        if np.any(self.hi <= self.lo):
            raise ValueError("extent must have positive length per axis")
        cells = np.atleast_1d(np.asarray(cells, dtype=int))
        if cells.size != self.dim:
            raise ValueError("one cell count per axis required")
        if np.any(cells < 2):
            raise ValueError("need at least 2 cells per axis")
        self.cells = tuple(int(m) for m in cells)
        self.h = (self.hi - self.lo) / cells
        self.cell_measure = float(np.prod(self.h))
        self.n_cells = int(np.prod(cells))
        self.n_nodes = int(np.prod(cells + 1))

    @classmethod
    def interval(cls, a, b, m):
        return cls([(a, b)], [m])

    @classmethod
    def box(cls, extent, cells):
        return cls(extent, cells)

    @property
    def measure(self):
        return float(np.prod(self.hi - self.lo))

    def _axis_nodes(self, i):
        return np.linspace(self.lo[i], self.hi[i], self.cells[i] + 1)

    def node_coords(self):
        """Node coordinates, shape (n_nodes, N), row-major over axes."""
        axes = [self._axis_nodes(i) for i in range(self.dim)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.reshape(-1) for m in mesh], axis=-1)

    def cell_centers(self):
        """Cell midpoints, shape (n_cells, N), row-major over axes."""
        axes = [self.lo[i] + (np.arange(self.cells[i]) + 0.5) * self.h[i]
                for i in range(self.dim)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.reshape(-1) for m in mesh], axis=-1)

    def boundary_mask(self):
        """Boolean mask over nodes marking the topological box boundary."""
        shape = tuple(m + 1 for m in self.cells)
        mask = np.zeros(shape, dtype=bool)
        for axis in range(self.dim):
            index = [slice(None)] * self.dim
            index[axis] = 0
            mask[tuple(index)] = True
            index[axis] = -1
            mask[tuple(index)] = True
        return mask.reshape(-1)

    def __eq__(self, other):
        return (isinstance(other, Grid) and self.cells == other.cells
                and np.array_equal(self.lo, other.lo)
                and np.array_equal(self.hi, other.hi))

    def __repr__(self):
        box = ", ".join(f"[{a!r}, {b!r}]" for a, b in zip(self.lo, self.hi))
        return f"Grid({box}; cells={self.cells})"


class GridFunction:
    """Nodal field u: Omega -> R^d stored as a (n_nodes, d) array."""

    def __init__(self, grid, values):
        values = np.asarray(values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        if values.shape[0] != grid.n_nodes:
            raise ValueError(
                f"expected {grid.n_nodes} nodal values, got {values.shape[0]}")
        if not np.all(np.isfinite(values)):
            raise ValueError("nodal values must be finite")
        self.grid = grid
        self.values = values

    @property
    def d(self):
        return self.values.shape[1]

    @classmethod
    def from_callable(cls, grid, fn):
        """Sample u = fn(x) at the nodes; fn maps (n, N) -> (n,) or (n, d)."""
        vals = np.asarray(fn(grid.node_coords()), dtype=float)
        return cls(grid, vals)

    def cell_averages(self):
        """Per-cell average of the corner values, shape (n_cells, d)."""
        shape = tuple(m + 1 for m in self.grid.cells) + (self.d,)
        v = self.values.reshape(shape)
        if self.grid.dim == 1:
            avg = 0.5 * (v[:-1] + v[1:])
        else:
            avg = 0.25 * (v[:-1, :-1] + v[1:, :-1] + v[:-1, 1:] + v[1:, 1:])
        return avg.reshape(self.grid.n_cells, self.d)

    def copy(self):
        return GridFunction(self.grid, self.values.copy())


class GradientField:
    """Per-cell gradient matrices Du, shape (n_cells, N, d)."""

    def __init__(self, grid, values):
        values = np.asarray(values, dtype=float)
        if values.shape != (grid.n_cells, grid.dim) and values.ndim == 2:
            values = values[:, :, None] if values.shape == (grid.n_cells, grid.dim) \
                else values
        if values.ndim == 2:
            values = values[:, :, None]
        if values.shape[0] != grid.n_cells or values.shape[1] != grid.dim:
            raise ValueError("gradient values must be (n_cells, N, d)")
        self.grid = grid
        self.values = values

    def norms(self):
        """Pointwise Frobenius norm |Du|, shape (n_cells,)."""
        return np.sqrt(np.sum(self.values**2, axis=(1, 2)))


def gradient(u):
    """Forward-difference gradient of a grid function, one matrix per cell.

    In 2D the differences are taken from the lower corner of each cell, so
    affine fields are reproduced exactly.
    """
    grid = u.grid
    shape = tuple(m + 1 for m in grid.cells) + (u.d,)
    v = u.values.reshape(shape)
    if grid.dim == 1:
        g = (v[1:] - v[:-1]) / grid.h[0]
        out = g[:, None, :]
    else:
        gx = (v[1:, :-1] - v[:-1, :-1]) / grid.h[0]
        gy = (v[:-1, 1:] - v[:-1, :-1]) / grid.h[1]
        out = np.stack([gx, gy], axis=2).reshape(grid.n_cells, 2, u.d)
    return GradientField(grid, out.reshape(grid.n_cells, grid.dim, u.d))


def integrate(grid, cell_values):
    """Midpoint-rule integral of a per-cell field; +inf cells give +inf.

    NaN input is a hard error.  np.sum uses pairwise summation, so the
    result does not depend on any parallel iteration order.
    """
    g = np.asarray(cell_values, dtype=float).reshape(-1)
    if g.size != grid.n_cells:
        raise ValueError(f"expected {grid.n_cells} cell values, got {g.size}")
    if np.any(np.isnan(g)):
        raise FloatingPointError("NaN in integrand field")
    if np.any(np.isinf(g)):
        return float("inf") if np.any(g == np.inf) and not np.any(g == -np.inf) \
            else float(np.sum(g) * grid.cell_measure)
    return float(np.sum(g) * grid.cell_measure)


def sup_cellwise(grid, cell_values):
    """Discrete essential supremum: the max over cell values."""
    g = np.asarray(cell_values, dtype=float).reshape(-1)
    if g.size != grid.n_cells:
        raise ValueError(f"expected {grid.n_cells} cell values, got {g.size}")
    if np.any(np.isnan(g)):
        raise FloatingPointError("NaN in cell field")
    return float(np.max(g))


# -- import/export -----------------------------------------------------------

def _fmt(v):
    return repr(float(v))


def save_csv(u, path):
    """One row per node: coordinates then the d values (x1[,x2],u0..)."""
    coords = u.grid.node_coords()
    header = [f"x{i + 1}" for i in range(u.grid.dim)] + \
             [f"u{j}" for j in range(u.d)]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row_c, row_v in zip(coords, u.values):
            w.writerow([_fmt(c) for c in row_c] + [_fmt(v) for v in row_v])


def load_csv(path, grid=None):
    """Read the node-row CSV schema back; the grid is inferred if omitted."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, data = rows[0], np.array(rows[1:], dtype=float)
    dim = sum(1 for name in header if name.startswith("x"))
    coords, values = data[:, :dim], data[:, dim:]
    if grid is None:
        extent, cells = [], []
        for i in range(dim):
            axis = np.unique(coords[:, i])
            extent.append((axis[0], axis[-1]))
            cells.append(len(axis) - 1)
            spacing = np.diff(axis)
            if not np.allclose(spacing, spacing[0], rtol=1e-9, atol=1e-12):
                raise ValueError("node coordinates are not a uniform lattice")
        grid = Grid(extent, cells)
    return GridFunction(grid, values)


def save_json(u, path):
    doc = {
        "extent": [[float(a), float(b)] for a, b in zip(u.grid.lo, u.grid.hi)],
        "cells": list(u.grid.cells),
        "d": u.d,
        "values": u.values.tolist(),
    }
    with open(path, "w") as fh:
        json.dump(doc, fh)


def load_json(path):
    with open(path) as fh:
        doc = json.load(fh)
    grid = Grid(doc["extent"], doc["cells"])
    return GridFunction(grid, np.asarray(doc["values"], dtype=float))
