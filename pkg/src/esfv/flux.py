"""Physical fluxes, wave speeds and Lax-Friedrichs-type numerical fluxes."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import eos as _eos
from .eos import physical_flux

__all__ = [
    "FluxKind",
    "physical_flux",
    "max_wave_speed",
    "face_lambda",
    "numerical_flux",
    "numerical_entropy_flux",
    "face_fluxes",
]

VARIANTS = ("global-lf", "local-lf")
SCALINGS = {"paper": 1.0, "classical": 0.5}


@dataclass(frozen=True)
class FluxKind:
    """Diffusion variant and jump scaling of the Lax-Friedrichs flux.

    ``jump_scaling="paper"`` multiplies the jump by the full coefficient,
    ``"classical"`` by half of it (Rusanov's usual convention).
    """

    variant: str = "local-lf"
    jump_scaling: str = "paper"

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"flux.kind must be one of {VARIANTS}, got {self.variant!r}")
        if self.jump_scaling not in SCALINGS:
            raise ValueError(
                f"flux.jump_scaling must be one of {tuple(SCALINGS)}, got {self.jump_scaling!r}"
            )

    @property
    def scaling(self) -> float:
        return SCALINGS[self.jump_scaling]

    @property
    def is_global(self) -> bool:
        return self.variant == "global-lf"


def max_wave_speed(eos, U):
    """Per-cell bound ``max_s |u_s| + c`` on the directional eigenvalues."""
    U = np.asarray(U, dtype=float)
    c = _eos.sound_speed(eos, U)
    u = _eos.momentum(eos, U) / U[0]
    return np.max(np.abs(u), axis=0) + c


def face_lambda(kind: FluxKind, eos, left, right, global_max: float):
    if kind.is_global:
        return np.broadcast_to(np.float64(global_max), np.shape(left)[1:]).copy()
    return np.maximum(max_wave_speed(eos, left), max_wave_speed(eos, right))


def numerical_flux(kind: FluxKind, eos, left, right, axis: int, lambda_sigma):
    """``{{f(U)}} - scaling * lambda_sigma * (right - left)``."""
    left = np.asarray(left, dtype=float)
    right = np.asarray(right, dtype=float)
    lam = np.asarray(lambda_sigma, dtype=float)
    if np.any(lam < 0):
        raise ValueError("lambda_sigma must be non-negative")
    favg = 0.5 * (physical_flux(eos, left, axis) + physical_flux(eos, right, axis))
    return favg - kind.scaling * lam * (right - left)


def numerical_entropy_flux(eos, left, right, face_flux, axis: int, chi=None):
    """Tadmor entropy flux ``{{V}} . F - {{psi_axis}}`` on a face."""
    VL, psiL = _eos.entropy_vars(eos, left, chi)
    VR, psiR = _eos.entropy_vars(eos, right, chi)
    return np.sum(0.5 * (VL + VR) * face_flux, axis=0) - 0.5 * (psiL[axis] + psiR[axis])


def face_fluxes(kind: FluxKind, eos, U, global_lambda: float | None = None):
    """Numerical fluxes on the ``+e_s`` face of every cell, for every axis.

    Returns a list (one entry per axis) of ``(F, lam)`` where ``F[:, K]`` is the
    flux through the face between K and ``K + e_s`` and ``lam[K]`` its
    diffusion coefficient.
    """
    U = np.asarray(U, dtype=float)
    dim = _eos.space_dim(eos, U)
    if kind.is_global and global_lambda is None:
        global_lambda = float(np.max(max_wave_speed(eos, U)))
    speed = None if kind.is_global else max_wave_speed(eos, U)
    out = []
    for s in range(dim):
        right = np.roll(U, -1, axis=1 + s)
        if kind.is_global:
            lam = np.full(U.shape[1:], float(global_lambda))
        else:
            lam = np.maximum(speed, np.roll(speed, -1, axis=s))
        out.append((numerical_flux(kind, eos, U, right, s, lam), lam))
    return out
