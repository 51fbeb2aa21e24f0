"""Self-check property suite: structural identities every build must satisfy.

Each property returns a :class:`PropertyResult`; :func:`run_checks` runs them
all, optionally under a named mutation that deliberately breaks one formula
(used to confirm that the suite is sensitive to it).
"""

from __future__ import annotations

import contextlib
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import eos as _eos
from .eos import BarotropicEos, ChiSpec, IdealGasEos
from .flux import FluxKind, numerical_entropy_flux, numerical_flux, physical_flux
from .grid import Field, GridSpec, diff, div_central, laplacian_h
from .scheme import SchemeConfig, State, rhs, rhs_central_form

__all__ = ["PropertyResult", "PROPERTIES", "MUTATIONS", "random_states", "run_checks"]

SEED = 20240611


@dataclass
class PropertyResult:
    name: str
    passed: bool
    value: float
    tolerance: float
    counterexample: str = ""

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        out = f"{tag} {self.name}: {self.value:.3e} (tol {self.tolerance:.1e})"
        return out if self.passed else f"{out}\n     counterexample: {self.counterexample}"


def random_states(eos, dim: int, count: int, rng) -> np.ndarray:
    """Admissible random states, shape ``(M, count)``."""
    rho = rng.uniform(0.2, 3.0, count)
    u = rng.uniform(-2.0, 2.0, (dim, count))
    parts = [rho[None], rho * u]
    if isinstance(eos, IdealGasEos):
        p = rng.uniform(0.1, 3.0, count)
        parts.append((p / (eos.gamma - 1.0) + 0.5 * rho * np.sum(u * u, axis=0))[None])
    return np.concatenate(parts)


def _cases(rng):
    """(label, eos, chi, dim) combinations exercised by the pointwise checks."""
    out = []
    for dim in (1, 2, 3):
        out.append((f"barotropic/{dim}d", BarotropicEos(a=rng.uniform(0.5, 2.0), gamma=1.4), None, dim))
        out.append((f"complete-capped/{dim}d", IdealGasEos(1.4), ChiSpec("capped", 50.0), dim))
        out.append((f"complete-cutoff/{dim}d", IdealGasEos(1.4), ChiSpec("cutoff", 50.0), dim))
    return out


def check_entropy_gradient(count: int = 100, tol: float = 1e-6) -> PropertyResult:
    """Entropy variables equal the central-difference gradient of the entropy."""
    rng = np.random.default_rng(SEED)
    worst, where = 0.0, ""
    for label, eos, chi, dim in _cases(rng):
        U = random_states(eos, dim, count, rng)
        V, _ = _eos.entropy_vars(eos, U, chi)
        for i in range(U.shape[0]):
            eps = 1e-6 * np.maximum(1.0, np.abs(U[i]))
            Up, Um = U.copy(), U.copy()
            Up[i] += eps
            Um[i] -= eps
            fd = (_eos.entropy(eos, Up, chi) - _eos.entropy(eos, Um, chi)) / (2 * eps)
            err = np.abs(fd - V[i]) / np.maximum(1.0, np.abs(fd))
            k = int(np.argmax(err))
            if err[k] > worst:
                worst, where = float(err[k]), f"{label} component {i} state {U[:, k].tolist()}"
    return PropertyResult("entropy-variable gradient", worst <= tol, worst, tol, where)


def check_flux_consistency(count: int = 100, tol: float = 1e-12) -> PropertyResult:
    """``F(w, w) = f(w)`` and ``Q(w, w) = q(w)`` for both variants and scalings."""
    rng = np.random.default_rng(SEED + 1)
    worst, where = 0.0, ""
    for label, eos, chi, dim in _cases(rng):
        U = random_states(eos, dim, count, rng)
        lam = rng.uniform(0.0, 5.0, count)
        q = _eos.entropy_flux(eos, U, chi)
        for kind in (FluxKind("local-lf", "paper"), FluxKind("global-lf", "classical")):
            for s in range(dim):
                f = physical_flux(eos, U, s)
                F = numerical_flux(kind, eos, U, U, s, lam)
                Q = numerical_entropy_flux(eos, U, U, F, s, chi)
                e1 = np.max(np.abs(F - f) / np.maximum(1.0, np.abs(f)))
                e2 = np.max(np.abs(Q - q[s]) / np.maximum(1.0, np.abs(q[s])))
                if max(e1, e2) > worst:
                    worst, where = float(max(e1, e2)), f"{label} {kind.variant} axis {s}"
    return PropertyResult("flux consistency F(w,w)=f(w), Q(w,w)=q(w)", worst <= tol, worst, tol, where)


def check_dual_assembly(tol: float = 1e-13) -> PropertyResult:
    """Face assembly with a global coefficient equals ``-div f + s lambda h lap U``."""
    rng = np.random.default_rng(SEED + 2)
    worst, where = 0.0, ""
    for label, eos, _, dim in _cases(rng):
        if "cutoff" in label:
            continue
        n = {1: 32, 2: 12, 3: 6}[dim]
        grid = GridSpec(dim, n)
        U = random_states(eos, dim, grid.num_cells, rng).reshape((-1,) + grid.shape)
        for scaling in ("paper", "classical"):
            cfg = SchemeConfig(eos, FluxKind("global-lf", scaling))
            speed = float(np.max(_eos.sound_speed(eos, U))) + 3.0
            state = State(0.0, Field(grid, U), speed)
            a = rhs(cfg, state).values
            b = rhs_central_form(cfg, state).values
            err = float(np.max(np.abs(a - b)) / np.max(np.abs(a)))
            if err > worst:
                worst, where = err, f"{label} scaling {scaling}"
    return PropertyResult("dual assembly (global lambda)", worst <= tol, worst, tol, where)


def check_telescoping(tol: float = 1e-12) -> PropertyResult:
    """Sums of discrete divergences, Laplacians and one-sided differences vanish,
    and forward/backward differences are adjoint (summation by parts)."""
    rng = np.random.default_rng(SEED + 3)
    worst, where = 0.0, ""
    for dim, n in ((1, 37), (2, 11), (3, 5)):
        grid = GridSpec(dim, n)
        g = Field(grid, rng.normal(size=(dim,) + grid.shape))
        f = Field(grid, rng.normal(size=(1,) + grid.shape))
        scale = 1.0 / grid.h
        vals = {
            "div_central": float(np.sum(div_central(g).values)) / scale,
            "laplacian": float(np.sum(laplacian_h(f).values)) / scale**2,
        }
        for s in range(dim):
            for mode in ("forward", "backward", "central"):
                vals[f"diff-{mode}-{s}"] = float(np.sum(diff(f, s, mode).values)) / scale
            gs = Field(grid, g.values[s : s + 1])
            sbp = np.sum(gs.values * diff(f, s, "forward").values) \
                + np.sum(diff(gs, s, "backward").values * f.values)
            vals[f"summation-by-parts-{s}"] = float(sbp) / scale
        for key, v in vals.items():
            v = abs(v) / grid.num_cells
            if v > worst:
                worst, where = v, f"{dim}d {key}"
    return PropertyResult("grid telescoping identities", worst <= tol, worst, tol, where)


def check_psi_identity(count: int = 100, tol: float = 1e-12) -> PropertyResult:
    """The potential from ``V . f - q`` matches ``a rho^(gamma-1) m`` (barotropic)
    and ``-chi'(S) m`` (complete)."""
    rng = np.random.default_rng(SEED + 4)
    worst, where = 0.0, ""
    for label, eos, chi, dim in _cases(rng):
        U = random_states(eos, dim, count, rng)
        _, psi = _eos.entropy_vars(eos, U, chi)
        m = U[1 : 1 + dim]
        if chi is None:
            closed = eos.a * U[0] ** (eos.gamma - 1.0) * m
        else:
            _, S = _eos.specific_entropy_arg(eos, U)
            closed = -chi.derivative(S) * m
        err = float(np.max(np.abs(psi - closed) / np.maximum(1.0, np.abs(closed))))
        if err > worst:
            worst, where = err, label
    return PropertyResult("entropy potential closed forms", worst <= tol, worst, tol, where)


PROPERTIES: dict[str, Callable[[], PropertyResult]] = {
    "entropy-gradient": check_entropy_gradient,
    "flux-consistency": check_flux_consistency,
    "dual-assembly": check_dual_assembly,
    "telescoping": check_telescoping,
    "psi-identity": check_psi_identity,
}


@contextlib.contextmanager
def _perturbed_entropy_vars(delta: float = 1e-3):
    original = _eos.entropy_vars

    def mutated(eos, U, chi=None):
        V, psi = original(eos, U, chi)
        V = V.copy()
        V[0] = V[0] * (1.0 + delta)
        return V, psi

    _eos.entropy_vars = mutated
    try:
        yield
    finally:
        _eos.entropy_vars = original


MUTATIONS = {"entropy-vars": _perturbed_entropy_vars}


def run_checks(mutation: str | None = None, stream=None) -> list[PropertyResult]:
    """Run every property, printing one line each to ``stream`` when given."""
    ctx = MUTATIONS[mutation]() if mutation else contextlib.nullcontext()
    results = []
    with ctx:
        for fn in PROPERTIES.values():
            t0 = time.perf_counter()
            res = fn()
            results.append(res)
            if stream is not None:
                print(f"{res.line()}  [{time.perf_counter() - t0:.2f}s]", file=stream)
    return results
