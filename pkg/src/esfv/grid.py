"""Periodic structured grids on the unit torus and piecewise-constant fields.

Cell data is stored component-first: ``values.shape == (M, n, ..., n)`` with
the cell multi-index in row-major (C) order. Neighbours are reached with
``np.roll``; there are no ghost layers.
"""

from __future__ import annotations

import csv
import io
import json
import itertools
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "GridSpec",
    "Field",
    "FaceRef",
    "project",
    "diff",
    "laplacian_h",
    "div_central",
    "jump",
    "avg",
    "integrate",
    "shift",
    "write_snapshot",
    "read_snapshot",
    "export_csv",
]

# 2-point Gauss-Legendre nodes on [0, 1] (weights 1/2 each)
_GAUSS_NODES = 0.5 + np.array([-0.5, 0.5]) / np.sqrt(3.0)


@dataclass(frozen=True)
class GridSpec:
    """Uniform periodic mesh of ``n**dim`` cells on the unit torus."""

    dim: int
    n: int

    def __post_init__(self):
        if self.dim not in (1, 2, 3):
            raise ValueError(f"dim must be 1, 2 or 3, got {self.dim}")
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n}")

    @property
    def h(self) -> float:
        return 1.0 / self.n

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.dim

    @property
    def num_cells(self) -> int:
        return self.n**self.dim

    def centers(self) -> np.ndarray:
        """Cell centres, shape ``(dim, n, ..., n)``."""
        x1 = (np.arange(self.n) + 0.5) * self.h
        return np.array(np.meshgrid(*([x1] * self.dim), indexing="ij"))

    def lower_corners(self) -> np.ndarray:
        x1 = np.arange(self.n) * self.h
        return np.array(np.meshgrid(*([x1] * self.dim), indexing="ij"))


@dataclass(frozen=True)
class Field:
    grid: GridSpec
    values: np.ndarray
    names: tuple[str, ...] | None = None

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape[1:] != self.grid.shape:
            raise ValueError(
                f"values shape {vals.shape} does not match grid {self.grid.shape}"
            )
        object.__setattr__(self, "values", vals)

    @property
    def components(self) -> int:
        return self.values.shape[0]

    def with_values(self, values: np.ndarray) -> "Field":
        return Field(self.grid, values, self.names)


@dataclass(frozen=True)
class FaceRef:
    """A face seen from ``cell`` along ``axis`` (0-based) in direction ``orientation``.

    ``orientation`` is +1 for the face towards ``cell + e_axis`` and -1 for the
    face towards ``cell - e_axis``.
    """

    cell: tuple[int, ...]
    axis: int
    orientation: int

    def neighbour(self, grid: GridSpec) -> tuple[int, ...]:
        if self.orientation not in (1, -1):
            raise ValueError("orientation must be +1 or -1")
        idx = list(self.cell)
        idx[self.axis] = (idx[self.axis] + self.orientation) % grid.n
        return tuple(idx)

    def twin(self, grid: GridSpec) -> "FaceRef":
        """The same geometric face seen from the other cell."""
        return FaceRef(self.neighbour(grid), self.axis, -self.orientation)


def _as_values(field) -> np.ndarray:
    return field.values if isinstance(field, Field) else np.asarray(field, dtype=float)


def shift(values: np.ndarray, axis: int, k: int) -> np.ndarray:
    """Return ``g[K + k e_axis]`` for every cell K (component axis excluded)."""
    return np.roll(values, -k, axis=1 + axis)


def project(sampler: Callable[[np.ndarray], np.ndarray], grid: GridSpec) -> Field:
    """Cell averages of ``sampler`` with tensor 2-point Gauss-Legendre quadrature.

    ``sampler`` maps points of shape ``(dim, ...)`` to values of shape
    ``(M, ...)``; it is evaluated once per quadrature node, vectorised over
    cells.
    """
    corner = grid.lower_corners()
    total = None
    count = 0
    for offs in itertools.product(_GAUSS_NODES, repeat=grid.dim):
        pts = corner + grid.h * np.asarray(offs).reshape((grid.dim,) + (1,) * grid.dim)
        vals = np.asarray(sampler(pts), dtype=float)
        if vals.ndim == grid.dim:
            vals = vals[None]
        total = vals.copy() if total is None else total + vals
        count += 1
    return Field(grid, total / count)


def diff(field: Field, axis: int, mode: str = "central") -> Field:
    """Periodic first differences along ``axis``."""
    g = _as_values(field)
    h = field.grid.h
    if mode == "central":
        out = (shift(g, axis, 1) - shift(g, axis, -1)) / (2 * h)
    elif mode == "forward":
        out = (shift(g, axis, 1) - g) / h
    elif mode == "backward":
        out = (g - shift(g, axis, -1)) / h
    else:
        raise ValueError(f"unknown difference mode {mode!r}")
    return field.with_values(out)


def laplacian_h(field: Field) -> Field:
    g = _as_values(field)
    out = np.zeros_like(g)
    for s in range(field.grid.dim):
        out += shift(g, s, 1) - 2 * g + shift(g, s, -1)
    return field.with_values(out / field.grid.h**2)


def div_central(vfield: Field) -> Field:
    """Sum over axes of the central difference of component ``s``."""
    if vfield.components != vfield.grid.dim:
        raise ValueError(
            f"div_central needs {vfield.grid.dim} components, got {vfield.components}"
        )
    g = vfield.values
    h = vfield.grid.h
    out = np.zeros((1,) + vfield.grid.shape)
    for s in range(vfield.grid.dim):
        out[0] += (np.roll(g[s], -1, axis=s) - np.roll(g[s], 1, axis=s)) / (2 * h)
    return Field(vfield.grid, out)


def jump(field: Field, face: FaceRef) -> np.ndarray:
    """Outside minus inside value across ``face``, oriented along ``+e_axis``.

    For the face on the ``+`` side of K this is ``g_L - g_K``; seen from the
    other cell it changes sign.
    """
    g = _as_values(field)
    inside = g[(slice(None),) + tuple(face.cell)]
    outside = g[(slice(None),) + face.neighbour(field.grid)]
    return outside - inside


def avg(field: Field, face: FaceRef) -> np.ndarray:
    g = _as_values(field)
    inside = g[(slice(None),) + tuple(face.cell)]
    outside = g[(slice(None),) + face.neighbour(field.grid)]
    return 0.5 * (inside + outside)


def integrate(field: Field) -> np.ndarray:
    """``h**dim`` times the per-component sum over cells."""
    g = _as_values(field)
    flat = g.reshape(g.shape[0], -1)
    return flat.sum(axis=1) * field.grid.h**field.grid.dim


# -- snapshots -------------------------------------------------------------

_MAGIC = "# esfv-snapshot v1"


def write_snapshot(path, field: Field, time: float, names: Sequence[str] | None = None):
    """Write a self-describing text snapshot.

    Layout: a magic line, one JSON header line, then one line per cell in
    lexicographic order holding its M components (``%.17g``, round-trip exact).
    """
    names = list(names or field.names or [f"u{i}" for i in range(field.components)])
    header = {
        "dim": field.grid.dim,
        "n": field.grid.n,
        "M": field.components,
        "time": float(time),
        "components": names,
    }
    cells = field.values.reshape(field.components, -1).T
    buf = io.StringIO()
    buf.write(_MAGIC + "\n")
    buf.write(json.dumps(header, sort_keys=True) + "\n")
    np.savetxt(buf, cells, fmt="%.17g")
    Path(path).write_text(buf.getvalue())


def read_snapshot(path) -> tuple[Field, float]:
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0] != _MAGIC:
        raise ValueError(f"{path}: not an esfv snapshot")
    header = json.loads(lines[1])
    grid = GridSpec(header["dim"], header["n"])
    data = np.loadtxt(lines[2:], ndmin=2).reshape(grid.num_cells, header["M"])
    values = data.T.reshape((header["M"],) + grid.shape)
    return Field(grid, values, tuple(header["components"])), header["time"]


def export_csv(path, field: Field, names: Sequence[str] | None = None):
    """One row per cell: multi-index, centre coordinates, components."""
    grid = field.grid
    names = list(names or field.names or [f"u{i}" for i in range(field.components)])
    axes = "ijk"[: grid.dim]
    xs = "xyz"[: grid.dim]
    centers = grid.centers().reshape(grid.dim, -1)
    vals = field.values.reshape(field.components, -1)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(list(axes) + list(xs) + names)
        for flat, idx in enumerate(np.ndindex(*grid.shape)):
            w.writerow(
                list(idx)
                + [repr(float(c)) for c in centers[:, flat]]
                + [repr(float(v)) for v in vals[:, flat]]
            )
