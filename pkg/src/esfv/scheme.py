"""Semi-discrete Lax-Friedrichs finite volume schemes and explicit time stepping.

The right-hand side is assembled face by face::

    dU_K/dt = -(1/h) sum_s (F_{K, s+} - F_{K, s-})

With the global diffusion coefficient this equals
``-div_central f(U) + lambda h laplacian_h U`` exactly (see
:func:`rhs_central_form`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Sequence

import numpy as np

from . import eos as _eos
from .eos import BarotropicEos, IdealGasEos, InadmissibleStateError
from .flux import FluxKind, face_fluxes, max_wave_speed, physical_flux
from .grid import Field, GridSpec, div_central, laplacian_h, project

__all__ = [
    "SchemeConfig",
    "State",
    "RunResult",
    "StepError",
    "init",
    "rhs",
    "rhs_central_form",
    "cfl_dt",
    "step",
    "stage_states",
    "run",
    "component_names",
]

INTEGRATORS = ("forward-euler", "ssprk2")


class StepError(InadmissibleStateError):
    """Admissibility lost during time stepping."""

    def __init__(self, message, index=None, state=None, time=None, step_index=None):
        super().__init__(message, index, state)
        self.time = time
        self.step_index = step_index


@dataclass(frozen=True)
class SchemeConfig:
    eos: BarotropicEos | IdealGasEos
    flux: FluxKind = field(default_factory=FluxKind)
    cfl: float = 0.4
    t_end: float = 0.1
    integrator: str = "ssprk2"
    rho_floor: float = 1e-10
    e_floor: float = 1e-12

    def __post_init__(self):
        if not (0.0 < self.cfl <= 1.0):
            raise ValueError(f"cfl must lie in (0, 1], got {self.cfl}")
        if not self.t_end >= 0.0:
            raise ValueError(f"t_end must be non-negative, got {self.t_end}")
        if self.integrator not in INTEGRATORS:
            raise ValueError(f"integrator must be one of {INTEGRATORS}, got {self.integrator!r}")
        if not (self.rho_floor > 0 and self.e_floor > 0):
            raise ValueError("admissibility floors must be positive")

    @property
    def system(self) -> str:
        return self.eos.system


@dataclass(frozen=True)
class State:
    time: float
    field: Field
    wave_speed: float

    @property
    def values(self) -> np.ndarray:
        return self.field.values

    @property
    def grid(self) -> GridSpec:
        return self.field.grid


@dataclass
class RunResult:
    state: State
    steps: int
    snapshots: list = field(default_factory=list)


def component_names(eos, dim: int) -> tuple[str, ...]:
    names = ["rho"] + [f"m{s + 1}" for s in range(dim)]
    if isinstance(eos, IdealGasEos):
        names.append("E")
    return tuple(names)


def _check(config: SchemeConfig, U):
    _eos.check_admissible(config.eos, U, config.rho_floor, config.e_floor)


def _make_state(config, grid, U, time) -> State:
    speed = float(np.max(max_wave_speed(config.eos, U)))
    names = component_names(config.eos, grid.dim)
    return State(float(time), Field(grid, U, names), speed)


def init(config: SchemeConfig, grid: GridSpec, initial_sampler: Callable) -> State:
    """Project the initial data onto the mesh and verify admissibility cell by cell."""
    U = project(initial_sampler, grid).values
    expected = config.eos.num_components(grid.dim)
    if U.shape[0] != expected:
        raise ValueError(f"sampler returned {U.shape[0]} components, expected {expected}")
    _check(config, U)
    return _make_state(config, grid, U, 0.0)


def _rhs_values(config: SchemeConfig, grid: GridSpec, U, global_lambda):
    out = np.zeros_like(U)
    for s, (F, _) in enumerate(face_fluxes(config.flux, config.eos, U, global_lambda)):
        out -= F - np.roll(F, 1, axis=1 + s)
    return out / grid.h


def rhs(config: SchemeConfig, state: State, global_lambda: float | None = None) -> Field:
    """Face-assembled semi-discrete right-hand side.

    ``global_lambda`` defaults to the state's cached wave speed; it is only used
    by the global variant.
    """
    lam = state.wave_speed if global_lambda is None else global_lambda
    return state.field.with_values(_rhs_values(config, state.grid, state.values, lam))


def rhs_central_form(config: SchemeConfig, state: State, global_lambda: float | None = None) -> Field:
    """``-div_central f(U) + scaling * lambda * h * laplacian_h U`` with a global lambda.

    Independent assembly used to cross-check :func:`rhs` for the global variant.
    """
    grid = state.grid
    U = state.values
    lam = state.wave_speed if global_lambda is None else global_lambda
    fl = [physical_flux(config.eos, U, s) for s in range(grid.dim)]
    out = np.empty_like(U)
    for c in range(U.shape[0]):
        vec = Field(grid, np.stack([fl[s][c] for s in range(grid.dim)]))
        out[c] = -div_central(vec).values[0]
    out += config.flux.scaling * lam * grid.h * laplacian_h(state.field).values
    return state.field.with_values(out)


def cfl_dt(config: SchemeConfig, state: State) -> float:
    remaining = config.t_end - state.time
    if state.wave_speed <= 0:
        return remaining
    dt = config.cfl * state.grid.h / (state.grid.dim * state.wave_speed)
    return min(dt, remaining)


def stage_states(config: SchemeConfig, state: State, dt: float):
    """Stage states of one step and the weights of their fluxes in the update.

    Forward Euler uses ``[(1, U^n)]``; SSPRK2 uses ``[(1/2, U^n), (1/2, U^(1))]``,
    so that ``U^{n+1} = U^n + dt * sum_i w_i L(U_i)``.
    """
    U = state.values
    if config.integrator == "forward-euler":
        return [(1.0, U)]
    U1 = U + dt * _rhs_values(config, state.grid, U, state.wave_speed)
    return [(0.5, U), (0.5, U1)]


def step(config: SchemeConfig, state: State, dt: float) -> State:
    """Advance one step. The global diffusion coefficient is frozen at the
    step's initial state for every stage."""
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    grid = state.grid
    lam = state.wave_speed
    U = state.values

    def stage(V, label):
        try:
            _check(config, V)
        except InadmissibleStateError as err:
            raise StepError(f"{label}: {err}", err.index, err.state, time=state.time) from err
        return V

    U1 = stage(U + dt * _rhs_values(config, grid, U, lam), "stage 1")
    if config.integrator == "forward-euler":
        Un = U1
    else:
        U2 = U1 + dt * _rhs_values(config, grid, U1, lam)
        Un = stage(0.5 * U + 0.5 * U2, "stage 2")
    return _make_state(config, grid, Un, state.time + dt)


def run(
    config: SchemeConfig,
    grid: GridSpec,
    initial_sampler: Callable,
    observers: Iterable[Callable[[State], None]] = (),
    snapshot_times: Sequence[float] | None = None,
    max_steps: int = 10_000_000,
) -> RunResult:
    """Integrate to ``config.t_end``.

    Each observer is called with the initial state and after every step. Time
    steps are clamped so that every requested snapshot time (default:
    ``t_end``) is hit exactly; the snapshots are returned as ``(time, Field)``.
    """
    observers = list(observers)
    targets = sorted({float(t) for t in (snapshot_times or [config.t_end])})
    if targets and (targets[0] < 0 or targets[-1] > config.t_end):
        raise ValueError("snapshot times must lie in [0, t_end]")
    state = init(config, grid, initial_sampler)
    for obs in observers:
        obs(state)
    snapshots = []
    pending = list(targets)
    while pending and pending[0] <= state.time:
        snapshots.append((pending.pop(0), state.field))
    nsteps = 0
    while state.time < config.t_end:
        if nsteps >= max_steps:
            raise RuntimeError(f"max_steps={max_steps} exceeded at t={state.time}")
        stop = pending[0] if pending else config.t_end
        dt = min(cfl_dt(config, state), stop - state.time)
        try:
            new = step(config, state, dt)
        except StepError as err:
            err.step_index = nsteps
            raise StepError(
                f"step {nsteps} at t={state.time!r}: {err}", err.index, err.state,
                time=state.time, step_index=nsteps,
            ) from err
        if math.isclose(new.time, stop, rel_tol=1e-13, abs_tol=1e-15):
            new = replace(new, time=stop)
        state = new
        nsteps += 1
        for obs in observers:
            obs(state)
        while pending and pending[0] <= state.time:
            snapshots.append((pending.pop(0), state.field))
    return RunResult(state, nsteps, snapshots)
