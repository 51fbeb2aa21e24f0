"""Conservation, entropy, positivity and consistency diagnostics.

Sign convention: every entropy residual and entropy defect is oriented so that
entropy stability means ``>= 0``. For the barotropic system the entropy is
the (convex) energy, so its residuals are negated.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import eos as _eos
from .eos import BarotropicEos, ChiSpec, IdealGasEos
from .flux import face_fluxes, max_wave_speed, numerical_entropy_flux, physical_flux
from .grid import Field, GridSpec, integrate, project
from .scheme import SchemeConfig, State, stage_states

__all__ = [
    "DiagnosticsReport",
    "DiagnosticsRecorder",
    "Trajectory",
    "TestFunction",
    "canonical_test_functions",
    "default_cutoff_chi",
    "default_capped_chi",
    "relative_drift",
    "conservation_ledger",
    "entropy_residual",
    "entropy_tolerance",
    "entropy_scale",
    "weak_bv_integrand",
    "weak_bv_step",
    "weak_bv_statistic",
    "min_entropy_ratio",
    "positivity_monitor",
    "consistency_residual",
    "error_norms",
    "SERIES_COLUMNS",
]

SERIES_COLUMNS = (
    "time",
    "mass",
    "energy",
    "entropy_total",
    "rho_min",
    "rho_max",
    "p_min",
    "entropy_residual_min",
    "weak_bv_integrand",
    "min_entropy_ratio",
)

RESIDUAL_C = 10.0


def _sign(eos) -> float:
    return -1.0 if isinstance(eos, BarotropicEos) else 1.0


def default_cutoff_chi(eos: IdealGasEos, U) -> ChiSpec:
    """Cutoff at the smallest initial specific entropy.

    ``z0 = min_K S_K(0) = log(1 / C)`` with ``C = max_K rho_K / theta_K^(1/(gamma-1))``,
    so the renormalised entropy vanishes on the initial data.
    """
    _, S = _eos.specific_entropy_arg(eos, U)
    return ChiSpec("cutoff", float(np.min(S)))


def default_capped_chi(eos: IdealGasEos, U) -> ChiSpec:
    _, S = _eos.specific_entropy_arg(eos, U)
    return ChiSpec("capped", float(np.max(S)) + 1.0)


class Trajectory:
    """Observer that keeps every recorded state (times and cell values)."""

    def __init__(self):
        self.times: list[float] = []
        self.values: list[np.ndarray] = []
        self.grid: GridSpec | None = None
        self.speeds: list[float] = []

    def __call__(self, state: State):
        self.grid = state.grid
        self.times.append(state.time)
        self.values.append(state.values)
        self.speeds.append(state.wave_speed)

    def __len__(self):
        return len(self.times)

    def state(self, k: int) -> State:
        return State(self.times[k], Field(self.grid, self.values[k]), self.speeds[k])


def relative_drift(series, eps: float = 1e-300) -> np.ndarray:
    series = np.asarray(series, dtype=float)
    return np.abs(series - series[0]) / max(abs(series[0]), eps)


def conservation_ledger(trajectory: Trajectory, eos) -> dict:
    """Per-step relative drifts of total mass (and total energy for the ideal gas)."""
    if len(trajectory) < 2:
        raise ValueError("conservation_ledger needs at least two recorded states")
    h = trajectory.grid.h ** trajectory.grid.dim
    mass = [float(np.sum(U[0]) * h) for U in trajectory.values]
    out = {"time": np.asarray(trajectory.times), "mass": relative_drift(mass)}
    if isinstance(eos, IdealGasEos):
        out["energy"] = relative_drift([float(np.sum(U[-1]) * h) for U in trajectory.values])
    return out


def _div_entropy_flux(config: SchemeConfig, grid: GridSpec, U, lam, chi):
    div = np.zeros(U.shape[1:])
    for s, (F, _) in enumerate(face_fluxes(config.flux, config.eos, U, lam)):
        Q = numerical_entropy_flux(config.eos, U, np.roll(U, -1, axis=1 + s), F, s, chi)
        div += Q - np.roll(Q, 1, axis=s)
    return div / grid.h


def entropy_residual(config: SchemeConfig, before: State, after: State,
                     chi: ChiSpec | None = None) -> Field:
    """Per-cell fully discrete entropy residual over one step.

    ``sign * ([eta(U^{n+1}) - eta(U^n)] / dt + sum_i w_i div_h Q(U_i))`` where the
    ``U_i, w_i`` are the integrator's stage states and weights (one forward
    Euler stage at ``t_n`` for forward Euler). Entropy stable cells give ``>= 0``.
    """
    dt = after.time - before.time
    if not dt > 0:
        raise ValueError("entropy_residual needs two states with increasing time")
    grid = before.grid
    eos = config.eos
    deta = (_eos.entropy(eos, after.values, chi) - _eos.entropy(eos, before.values, chi)) / dt
    div = np.zeros_like(deta)
    for w, Ui in stage_states(config, before, dt):
        div += w * _div_entropy_flux(config, grid, Ui, before.wave_speed, chi)
    return Field(grid, (_sign(eos) * (deta + div))[None])


def entropy_scale(eos, U_before, U_after, chi=None) -> float:
    """Magnitude used to scale the residual tolerance: ``max(|eta|, rho)`` over cells
    and both times (the density term keeps the scale positive when eta vanishes)."""
    vals = [np.max(np.abs(_eos.entropy(eos, U, chi))) for U in (U_before, U_after)]
    vals += [np.max(U_before[0]), np.max(U_after[0])]
    return float(max(vals))


def entropy_tolerance(dt: float, h: float, scale: float, C: float = RESIDUAL_C) -> float:
    """``C * dt * scale / h``: allowance for the entropy lost by explicit stepping."""
    return C * dt * scale / h


def weak_bv_integrand(config: SchemeConfig, state: State) -> float:
    """``h^dim * sum_faces lambda_sigma * |[[U]]|_1`` with each face counted once."""
    U = state.values
    grid = state.grid
    total = 0.0
    speed = None if config.flux.is_global else max_wave_speed(config.eos, U)
    for s in range(grid.dim):
        jump = np.sum(np.abs(np.roll(U, -1, axis=1 + s) - U), axis=0)
        if config.flux.is_global:
            lam = state.wave_speed
        else:
            lam = np.maximum(speed, np.roll(speed, -1, axis=s))
        total += float(np.sum(lam * jump))
    return total * grid.h**grid.dim


def _midpoint_state(before: State, after: State) -> State:
    # the global coefficient stays frozen at the step's initial value
    mid = 0.5 * (before.values + after.values)
    return State(0.5 * (before.time + after.time), before.field.with_values(mid),
                 before.wave_speed)


def weak_bv_step(config: SchemeConfig, before: State, after: State) -> float:
    """Midpoint-rule contribution of one step: ``dt * I(U^{n+1/2})`` with
    ``U^{n+1/2} = (U^n + U^{n+1}) / 2``."""
    return weak_bv_integrand(config, _midpoint_state(before, after)) * (after.time - before.time)


def weak_bv_statistic(trajectory: Trajectory, config: SchemeConfig) -> float:
    """Time integral of :func:`weak_bv_integrand` by the midpoint rule per step."""
    return float(sum(
        weak_bv_step(config, trajectory.state(k), trajectory.state(k + 1))
        for k in range(len(trajectory) - 1)
    ))


def min_entropy_ratio(eos: IdealGasEos, U) -> float:
    """``max_K rho_K / theta_K^(1/(gamma-1))``; bounded by its initial value under the
    minimum entropy principle."""
    U = np.asarray(U, dtype=float)
    theta = _eos.temperature(eos, U)
    return float(np.max(U[0] / theta ** (1.0 / (eos.gamma - 1.0))))


def positivity_monitor(eos, U):
    """``(min rho, min p, min E)``; ``min E`` is None for the barotropic system."""
    U = np.asarray(U, dtype=float)
    p = _eos.pressure(eos, U)
    minE = float(np.min(U[-1])) if isinstance(eos, IdealGasEos) else None
    return float(np.min(U[0])), float(np.min(p)), minE


# -- weak-form consistency -------------------------------------------------

@dataclass(frozen=True)
class TestFunction:
    """Smooth periodic test function ``phi(t, x) = b(t) * g(x)`` with
    ``b(t) = (1 - t/T)^4`` on ``[0, T)`` and 0 afterwards.

    ``spatial(x)`` returns ``(g, grad g)`` with shapes ``(...)`` and ``(dim, ...)``.
    """

    __test__ = False  # not a pytest class

    name: str
    horizon: float
    spatial: Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]]
    nonnegative: bool = False

    def bump(self, t):
        s = np.clip(1.0 - np.asarray(t, dtype=float) / self.horizon, 0.0, None)
        return s**4

    def bump_dt(self, t):
        s = np.clip(1.0 - np.asarray(t, dtype=float) / self.horizon, 0.0, None)
        return -4.0 * s**3 / self.horizon

    def value(self, t, x):
        return self.bump(t) * self.spatial(x)[0]

    def dt(self, t, x):
        return self.bump_dt(t) * self.spatial(x)[0]

    def grad(self, t, x):
        return self.bump(t) * self.spatial(x)[1]

    def __add__(self, other: "TestFunction") -> "TestFunction":
        if other.horizon != self.horizon:
            raise ValueError("can only add test functions with the same horizon")

        def spatial(x):
            g1, d1 = self.spatial(x)
            g2, d2 = other.spatial(x)
            return g1 + g2, d1 + d2

        return TestFunction(f"{self.name}+{other.name}", self.horizon, spatial,
                            self.nonnegative and other.nonnegative)


def canonical_test_functions(dim: int, horizon: float) -> dict[str, TestFunction]:
    """Three shipped test functions: ``cos``, ``sin2`` and the non-negative ``bump``."""
    k = 2 * np.pi

    def cos1(x):
        # shifted so the pairing with symmetric data does not vanish
        y = k * (x - 0.15)
        g = np.prod(np.cos(y), axis=0)
        grad = np.stack([
            -k * np.sin(y[s]) * np.prod(np.cos(np.delete(y, s, axis=0)), axis=0)
            for s in range(dim)
        ])
        return g, grad

    def sin2(x):
        arg = 2 * k * np.sum(x, axis=0)
        g = np.sin(arg)
        grad = np.stack([2 * k * np.cos(arg)] * dim)
        return g, grad

    def bump(x):
        f = 1.0 + np.cos(k * (x - 0.25))
        g = np.prod(f, axis=0)
        grad = np.stack([
            -k * np.sin(k * (x[s] - 0.25)) * np.prod(np.delete(f, s, axis=0), axis=0)
            for s in range(dim)
        ])
        return g, grad

    return {
        "cos": TestFunction("cos", horizon, cos1),
        "sin2": TestFunction("sin2", horizon, sin2),
        "bump": TestFunction("bump", horizon, bump, nonnegative=True),
    }


def _space_integral(grid: GridSpec, g) -> float:
    return float(np.sum(g)) * grid.h**grid.dim


def consistency_residual(trajectory: Trajectory, test: TestFunction, which: str,
                         eos, chi: ChiSpec | None = None, axis: int = 0,
                         signed: bool = False) -> float:
    """Residual of a weak identity evaluated on discrete data.

    ``continuity``: ``int rho(0) phi(0) + int_0^T int (rho phi_t + m . grad phi)``.
    ``momentum``: the same for ``m_axis`` with flux ``m_axis m / rho + p e_axis``.
    ``entropy``: the signed defect ``-sign * (int eta(0) phi(0) + int_0^T int
    (eta phi_t + q . grad phi))``, non-negative up to ``O(h)`` for entropy stable
    data (``phi >= 0`` required).

    Space integrals use cell-centre values, time integrals the trapezoid rule
    over the recorded states. ``continuity``/``momentum`` return the absolute value
    unless ``signed``.
    """
    if which not in ("continuity", "momentum", "entropy"):
        raise ValueError(f"unknown identity {which!r}")
    times = np.asarray(trajectory.times)
    if test.horizon > times[-1] * (1 + 1e-12):
        raise ValueError(
            f"test function horizon {test.horizon} exceeds the trajectory end {times[-1]}; "
            "it is not compactly supported in the recorded window"
        )
    grid = trajectory.grid
    x = grid.centers()
    g, grad = test.spatial(x)
    if which == "entropy" and not test.nonnegative:
        raise ValueError("the entropy inequality needs a non-negative test function")

    def densities(U):
        if which == "continuity":
            return U[0], _eos.momentum(eos, U)
        if which == "momentum":
            p = _eos.pressure(eos, U)
            m = _eos.momentum(eos, U)
            fl = m[axis] * m / U[0]
            fl[axis] = fl[axis] + p
            return m[axis], fl
        return _eos.entropy(eos, U, chi), _eos.entropy_flux(eos, U, chi)

    integrand = []
    for t, U in zip(times, trajectory.values):
        dens, fl = densities(U)
        val = test.bump_dt(t) * dens * g + test.bump(t) * np.sum(fl * grad, axis=0)
        integrand.append(_space_integral(grid, val))
    integrand = np.asarray(integrand)
    time_part = float(np.sum(0.5 * (integrand[1:] + integrand[:-1]) * np.diff(times)))
    dens0, _ = densities(trajectory.values[0])
    initial = test.bump(times[0]) * _space_integral(grid, dens0 * g)
    total = initial + time_part
    if which == "entropy":
        return -_sign(eos) * total
    return total if signed else abs(total)


def error_norms(field: Field, reference: Callable, time: float):
    """``(L1, Linf)`` per component between ``field`` and the projection of
    ``reference(time, x)``."""
    ref = project(lambda x: reference(time, x), field.grid).values
    err = np.abs(field.values - ref)
    flat = err.reshape(err.shape[0], -1)
    return flat.sum(axis=1) * field.grid.h**field.grid.dim, flat.max(axis=1)


# -- streaming report ------------------------------------------------------

@dataclass
class DiagnosticsReport:
    metadata: dict = field(default_factory=dict)
    series: dict = field(default_factory=lambda: {c: [] for c in SERIES_COLUMNS})
    residual_tol: list = field(default_factory=list)
    weak_bv: float = 0.0

    def column(self, name) -> np.ndarray:
        return np.asarray(self.series[name], dtype=float)

    def mass_drift(self) -> float:
        return float(np.max(relative_drift(self.column("mass"))))

    def energy_drift(self) -> float:
        return float(np.max(relative_drift(self.column("energy"))))

    def residual_margin(self) -> float:
        """``min_k (residual_min_k + tol_k) / tol_k``; ``>= 0`` when every step passes."""
        r = self.column("entropy_residual_min")[1:]
        tol = np.asarray(self.residual_tol[1:], dtype=float)
        if r.size == 0:
            return math.inf
        return float(np.min((r + tol) / tol))

    def summary(self) -> dict:
        out = {
            "config": self.metadata,
            "steps": len(self.series["time"]) - 1,
            "final_time": self.series["time"][-1],
            "mass_drift": self.mass_drift(),
            "energy_drift": self.energy_drift(),
            "entropy_residual_min": float(np.nanmin(self.column("entropy_residual_min")))
            if len(self.series["time"]) > 1 else 0.0,
            "entropy_residual_margin": self.residual_margin(),
            "weak_bv_statistic": self.weak_bv,
            "rho_min": float(np.min(self.column("rho_min"))),
            "p_min": float(np.min(self.column("p_min"))),
        }
        ratio = self.column("min_entropy_ratio")
        if np.all(np.isfinite(ratio)):
            out["min_entropy_ratio_max_rel_increase"] = float(np.max(ratio / ratio[0] - 1.0))
        return out

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(SERIES_COLUMNS)
            for row in zip(*(self.series[c] for c in SERIES_COLUMNS)):
                w.writerow([repr(float(v)) for v in row])

    def write_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.summary(), fh, indent=2, sort_keys=True, default=float)


class DiagnosticsRecorder:
    """Run observer that fills a :class:`DiagnosticsReport` step by step.

    ``chi`` selects the monitored renormalised entropy for the ideal gas; the
    default is the cutoff at the initial minimum of the specific entropy.
    """

    def __init__(self, config: SchemeConfig, chi: ChiSpec | None = None,
                 metadata: dict | None = None, C: float = RESIDUAL_C):
        self.config = config
        self.chi = chi
        self.C = C
        self.report = DiagnosticsReport(metadata=dict(metadata or {}))
        self.report.metadata.setdefault("jump_scaling", config.flux.jump_scaling)
        self.report.metadata.setdefault("weak_bv_jump_norm", "l1")
        self._prev: State | None = None

    def __call__(self, state: State):
        cfg = self.config
        eos = cfg.eos
        U = state.values
        if isinstance(eos, IdealGasEos) and self.chi is None:
            self.chi = default_cutoff_chi(eos, U)
            self.report.metadata.setdefault("chi", {"kind": self.chi.kind, "param": self.chi.param})
        rep = self.report
        tot = integrate(state.field)
        rho_min, p_min, _ = positivity_monitor(eos, U)
        if isinstance(eos, IdealGasEos):
            energy = float(tot[-1])
            ratio = min_entropy_ratio(eos, U)
        else:
            energy = _space_integral(state.grid, _eos.energy_entropy_baro(eos, U))
            ratio = math.nan
        bv = weak_bv_integrand(cfg, state)
        if self._prev is None:
            res_min, tol = math.nan, math.nan
        else:
            res = entropy_residual(cfg, self._prev, state, self.chi).values
            dt = state.time - self._prev.time
            scale = entropy_scale(eos, self._prev.values, U, self.chi)
            res_min = float(np.min(res))
            tol = entropy_tolerance(dt, state.grid.h, scale, self.C)
            rep.weak_bv += weak_bv_step(cfg, self._prev, state)
        row = {
            "time": state.time,
            "mass": float(tot[0]),
            "energy": energy,
            "entropy_total": _space_integral(state.grid, _eos.entropy(eos, U, self.chi)),
            "rho_min": rho_min,
            "rho_max": float(np.max(U[0])),
            "p_min": p_min,
            "entropy_residual_min": res_min,
            "weak_bv_integrand": bv,
            "min_entropy_ratio": ratio,
        }
        for c in SERIES_COLUMNS:
            rep.series[c].append(row[c])
        rep.residual_tol.append(tol)
        self._prev = state
