"""Finite-data Young-measure diagnostics over refinement sequences.

A :class:`SampleWindow` selects the cells of each level whose centres lie in a
closed ball of the torus metric; their values, equally weighted, form an
:class:`EmpiricalMeasure`. Across levels the moments of these measures are
compared (Cauchy differences) together with their oscillation (trace of the
variance), which vanishes for a Dirac measure.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import eos as _eos
from .eos import BarotropicEos, ChiSpec, IdealGasEos
from .grid import Field, GridSpec, project

__all__ = [
    "SampleWindow",
    "EmpiricalMeasure",
    "DefectSeries",
    "torus_distance",
    "window_mask",
    "collect",
    "observable",
    "moment",
    "oscillation",
    "dissipation_defect",
    "dirac_collapse_study",
    "measure_mean",
    "vortex_windows",
    "sod_shock_window",
    "SOD_SHOCK_SPEED",
]

# Shock speed of the Sod data (1, 0, 1) | (0.125, 0, 0.1), gamma = 1.4, from the
# Rankine-Hugoniot relations with the star pressure p* = 0.303130.
SOD_SHOCK_SPEED = 1.7521557


def torus_distance(x, center):
    """Euclidean distance on the unit torus; ``x`` has shape ``(dim, ...)``."""
    x = np.asarray(x, dtype=float)
    c = np.asarray(center, dtype=float).reshape((-1,) + (1,) * (x.ndim - 1))
    d = np.abs(x - c) % 1.0
    d = np.minimum(d, 1.0 - d)
    return np.sqrt(np.sum(d * d, axis=0))


@dataclass(frozen=True)
class SampleWindow:
    """Space-time sample point ``(time, center)`` with spatial radius ``radius``.

    ``radius=None`` means ``3 * max h`` over the levels it is used with; the
    radius is held fixed across levels.
    """

    center: tuple
    time: float
    radius: float | None = None
    name: str = ""

    def resolve_radius(self, hs: Sequence[float]) -> float:
        hmax = max(hs)
        r = 3.0 * hmax if self.radius is None else float(self.radius)
        if r < hmax:
            raise ValueError(f"window radius {r} is smaller than the coarsest h = {hmax}")
        return r


def window_mask(grid: GridSpec, center, radius: float) -> np.ndarray:
    if len(center) != grid.dim:
        raise ValueError(f"window centre has {len(center)} coordinates for a {grid.dim}D grid")
    return torus_distance(grid.centers(), center) <= radius


@dataclass(frozen=True)
class EmpiricalMeasure:
    """Atoms ``(N, M)`` with non-negative weights ``(N,)`` summing to one."""

    atoms: np.ndarray
    weights: np.ndarray
    time_mismatch: float = 0.0

    def __post_init__(self):
        atoms = np.atleast_2d(np.asarray(self.atoms, dtype=float))
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        if atoms.shape[0] != w.size or w.size == 0:
            raise ValueError("need one weight per atom and at least one atom")
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-14:
            raise ValueError(f"weights must be non-negative and sum to 1, got sum {w.sum()!r}")
        if np.any(atoms[:, 0] < 0):
            raise ValueError("atoms must have non-negative density")
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "weights", w)

    @classmethod
    def dirac(cls, state) -> "EmpiricalMeasure":
        return cls(np.asarray(state, dtype=float)[None], np.ones(1))

    @classmethod
    def uniform(cls, atoms, time_mismatch: float = 0.0) -> "EmpiricalMeasure":
        atoms = np.atleast_2d(np.asarray(atoms, dtype=float))
        n = atoms.shape[0]
        return cls(atoms, np.full(n, 1.0 / n), time_mismatch)

    def merge(self, other: "EmpiricalMeasure", weight: float = 0.5) -> "EmpiricalMeasure":
        """Convex combination ``weight * self + (1 - weight) * other``."""
        w = np.concatenate([weight * self.weights, (1.0 - weight) * other.weights])
        return EmpiricalMeasure(np.concatenate([self.atoms, other.atoms]), w / w.sum())


@dataclass(frozen=True)
class DefectSeries:
    times: np.ndarray
    values: np.ndarray


def _nearest_snapshot(snapshots, t):
    if not snapshots:
        raise ValueError("no snapshots recorded for this level")
    times = np.array([s[0] for s in snapshots], dtype=float)
    k = int(np.argmin(np.abs(times - t)))
    return snapshots[k][1], float(abs(times[k] - t))


def collect(snapshots, window: SampleWindow, radius: float | None = None,
            max_mismatch: float = np.inf) -> EmpiricalMeasure:
    """Empirical measure of one level: the cell values inside the window at the
    snapshot nearest to ``window.time``, equally weighted.

    ``snapshots`` is a list of ``(time, Field)``; ``radius`` overrides the
    window's own (used by studies to hold it fixed across levels).
    """
    fld, mismatch = _nearest_snapshot(snapshots, window.time)
    if mismatch > max_mismatch:
        raise ValueError(f"nearest snapshot is {mismatch} away from t* = {window.time}")
    r = radius if radius is not None else window.resolve_radius([fld.grid.h])
    mask = window_mask(fld.grid, window.center, r)
    if not mask.any():
        raise ValueError(f"window {window} contains no cell centre")
    atoms = fld.values[:, mask].T
    return EmpiricalMeasure.uniform(atoms, mismatch)


def observable(name: str, eos, chi: ChiSpec | None = None) -> Callable:
    """Shipped observables acting on atoms ``(N, M)``: ``rho``, ``m1``.., ``E``,
    ``p``, ``kinetic``, ``eta``."""
    def wrap(fn):
        return lambda atoms: fn(np.asarray(atoms, dtype=float).T)

    if name == "rho":
        return wrap(lambda U: U[0])
    if name.startswith("m") and name[1:].isdigit():
        s = int(name[1:])
        return wrap(lambda U: U[s])
    if name == "E":
        if not isinstance(eos, IdealGasEos):
            raise ValueError("observable 'E' needs the complete system")
        return wrap(lambda U: U[-1])
    if name == "p":
        return wrap(lambda U: _eos.pressure(eos, U))
    if name == "kinetic":
        return wrap(lambda U: _eos.kinetic_energy(eos, U))
    if name == "eta":
        return wrap(lambda U: _eos.entropy(eos, U, chi))
    raise ValueError(f"unknown observable {name!r}")


def moment(measure: EmpiricalMeasure, g: Callable) -> float:
    """``sum_i w_i g(atom_i)``; raises if ``g`` is undefined at some atom."""
    try:
        vals = np.asarray(g(measure.atoms), dtype=float)
    except _eos.InadmissibleStateError as err:
        raise ValueError(f"observable undefined at an atom: {err}") from err
    if not np.all(np.isfinite(vals)):
        raise ValueError("observable undefined at an atom")
    return float(vals[0] + np.dot(measure.weights, vals - vals[0]))


def oscillation(measure: EmpiricalMeasure) -> float:
    """Trace of the weighted covariance of the atoms; zero for a Dirac measure."""
    # centred on the first atom first so identical atoms give exactly zero
    shifted = measure.atoms - measure.atoms[0]
    dev = shifted - measure.weights @ shifted
    return float(np.sum(measure.weights @ (dev * dev)))


def dissipation_defect(trajectory, eos) -> DefectSeries:
    """Energy loss ``E_total(0) - E_total(t)`` (barotropic) or the energy-balance
    defect ``|E_total(0) - E_total(t)|`` (complete) along a recorded trajectory."""
    grid = trajectory.grid
    vol = grid.h**grid.dim
    if isinstance(eos, BarotropicEos):
        tot = np.array([np.sum(_eos.energy_entropy_baro(eos, U)) * vol for U in trajectory.values])
        vals = tot[0] - tot
    else:
        tot = np.array([np.sum(U[-1]) * vol for U in trajectory.values])
        vals = np.abs(tot - tot[0])
    return DefectSeries(np.asarray(trajectory.times, dtype=float), vals)


def _flux_gap(measure: EmpiricalMeasure, eos) -> float:
    """Jensen gap ``|<m (x) m / rho + p I> - (mbar (x) mbar / rhobar + p(Ubar) I)|``,
    a reported proxy for concentration/oscillation in the momentum flux."""
    U = measure.atoms.T
    dim = _eos.space_dim(eos, U)
    m = U[1 : 1 + dim]
    p = _eos.pressure(eos, U)
    tensor = np.einsum("i...,j...->ij...", m, m) / U[0] + np.eye(dim)[..., None] * p
    avg = tensor @ measure.weights
    Ubar = measure.weights @ measure.atoms
    mbar = Ubar[1 : 1 + dim]
    at_mean = np.outer(mbar, mbar) / Ubar[0] + np.eye(dim) * float(_eos.pressure(eos, Ubar[:, None])[0])
    return float(np.max(np.abs(avg - at_mean)))


def dirac_collapse_study(levels, window: SampleWindow, eos,
                         observables: Sequence[str] = ("rho",),
                         chi: ChiSpec | None = None,
                         exact: Callable | None = None) -> dict:
    """Per-level first moments and oscillation in one window, plus verdicts.

    Parameters
    ----------
    levels : sequence of snapshot lists
        One list of ``(time, Field)`` per refinement level, coarse to fine.
    window : SampleWindow
        Its radius (default ``3 * max h``) is held fixed across levels.

    exact : callable, optional
        ``exact(t, x)``; when given, each level also reports the oscillation of
        the exact solution's cell averages in the same window (supplementary,
        not part of any verdict).

    Returns
    -------
    dict
        ``levels`` (per-level table), ``cauchy`` (consecutive differences of each
        observable's moment), ``cauchy_conservative`` (max over the conservative
        first moments), and verdicts ``oscillation_decreasing``,
        ``moments_stabilize`` (every observable's Cauchy differences decrease)
        and ``oscillation_floor`` (finest / coarsest).
    """
    if len(levels) < 3:
        raise ValueError(f"a collapse study needs at least 3 levels, got {len(levels)}")
    fields = []
    for k, snaps in enumerate(levels):
        if not snaps:
            raise ValueError(f"level {k} has no snapshots")
        fields.append(snaps)
    hs = [_nearest_snapshot(s, window.time)[0].grid.h for s in fields]
    r = window.resolve_radius(hs)
    obs = {name: observable(name, eos, chi) for name in observables}
    table, means = [], []
    for snaps, h in zip(fields, hs):
        meas = collect(snaps, window, radius=r)
        mean = measure_mean(meas)
        means.append(mean)
        row = {
            "n": int(round(1.0 / h)),
            "h": h,
            "cells": int(meas.atoms.shape[0]),
            "time_mismatch": meas.time_mismatch,
            "first_moments": mean.tolist(),
            "moments": {name: moment(meas, g) for name, g in obs.items()},
            "oscillation": oscillation(meas),
            "flux_gap": _flux_gap(meas, eos),
        }
        if exact is not None:
            grid = _nearest_snapshot(snaps, window.time)[0].grid
            ref = project(lambda x: exact(window.time, x), grid).values
            mask = window_mask(grid, window.center, r)
            row["exact_oscillation"] = oscillation(EmpiricalMeasure.uniform(ref[:, mask].T))
        table.append(row)
    osc = np.array([row["oscillation"] for row in table])

    def diffs(seq):
        return [float(np.max(np.abs(np.asarray(seq[k + 1]) - np.asarray(seq[k]))))
                for k in range(len(seq) - 1)]

    def shrinking(d):
        d = np.asarray(d)
        return bool(np.all(np.diff(d) < 0) or np.all(d == 0))

    cauchy = {name: diffs([row["moments"][name] for row in table]) for name in obs}
    floor = float(osc[-1] / osc[0]) if osc[0] > 0 else 0.0
    return {
        "window": {"center": list(window.center), "time": window.time, "radius": r,
                   "name": window.name},
        "levels": table,
        "cauchy": cauchy,
        "cauchy_conservative": diffs(means),
        "oscillation_decreasing": bool(np.all(np.diff(osc) < 0) or np.all(osc == 0)),
        "moments_stabilize": all(shrinking(d) for d in cauchy.values()),
        "oscillation_floor": floor,
    }


def measure_mean(measure: EmpiricalMeasure) -> np.ndarray:
    """First moments of every conservative component."""
    base = measure.atoms[0]
    return base + measure.weights @ (measure.atoms - base)


def vortex_windows(case, time: float, radius: float | None = None) -> list[SampleWindow]:
    """Shipped windows for a vortex case: the advected core, a point one core
    radius downstream along ``x_1`` and a background point half a period away."""
    p = case.params
    c = (np.asarray(p["center"]) + np.asarray(p["velocity"]) * time) % 1.0
    edge = (c + np.array([p["radius"], 0.0])) % 1.0
    bg = (c + 0.5) % 1.0
    return [
        SampleWindow(tuple(c.tolist()), time, radius, "core"),
        SampleWindow(tuple(edge.tolist()), time, radius, "edge"),
        SampleWindow(tuple(bg.tolist()), time, radius, "background"),
    ]


def sod_shock_window(time: float = 0.1, interface: float = 0.5,
                     radius: float | None = None) -> SampleWindow:
    """Window centred on the right-moving Sod shock. On the torus the mirrored
    problem at ``x = 0`` sends a shock the other way; the two meet at about
    ``t = 0.143``, so ``time`` must stay below that."""
    if not time < 0.25 / SOD_SHOCK_SPEED:
        raise ValueError("the Sod shocks interact after t = 0.143 on the torus")
    return SampleWindow(((interface + SOD_SHOCK_SPEED * time) % 1.0,), time, radius, "sod-shock")
