"""Equations of state and entropy structure for barotropic and ideal-gas Euler.

States are numpy arrays with the conservative components on axis 0 and any
number of trailing (cell) axes::

    barotropic  U = [rho, m_1, ..., m_dim]
    ideal gas   U = [rho, m_1, ..., m_dim, E]

Every function here is vectorised over the trailing axes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "BarotropicEos",
    "IdealGasEos",
    "ChiSpec",
    "InadmissibleStateError",
    "space_dim",
    "density",
    "momentum",
    "kinetic_energy",
    "internal_energy",
    "check_admissible",
    "pressure",
    "temperature",
    "pressure_potential",
    "sound_speed",
    "specific_entropy_arg",
    "renorm_entropy",
    "energy_entropy_baro",
    "entropy",
    "entropy_flux",
    "entropy_vars",
    "entropy_hessian_baro",
]


class InadmissibleStateError(ValueError):
    """A state left the admissible set (non-positive density or internal energy)."""

    def __init__(self, message, index=None, state=None):
        super().__init__(message)
        self.index = index
        self.state = state


@dataclass(frozen=True)
class BarotropicEos:
    """``p = a * rho**gamma``."""

    a: float = 1.0
    gamma: float = 1.4

    def __post_init__(self):
        if not self.a > 0:
            raise ValueError(f"pressure coefficient a must be positive, got {self.a}")
        if not self.gamma > 1:
            raise ValueError(f"gamma must exceed 1, got {self.gamma}")

    system = "barotropic"

    def num_components(self, dim: int) -> int:
        return dim + 1


@dataclass(frozen=True)
class IdealGasEos:
    """Perfect gas ``p = (gamma - 1) rho e`` with ``c_v = 1/(gamma - 1)``."""

    gamma: float = 1.4

    def __post_init__(self):
        if not self.gamma > 1:
            raise ValueError(f"gamma must exceed 1, got {self.gamma}")

    system = "complete"

    @property
    def c_v(self) -> float:
        return 1.0 / (self.gamma - 1.0)

    def num_components(self, dim: int) -> int:
        return dim + 2


@dataclass(frozen=True)
class ChiSpec:
    """Increasing, concave, bounded-above renormalisation of the specific entropy.

    ``cutoff``: ``chi(z) = min(z - param, 0)``; ``capped``: ``chi(z) = min(z, param)``.
    At the kink the right derivative (0) is used.
    """

    kind: str = "cutoff"
    param: float = 0.0

    def __post_init__(self):
        if self.kind not in ("cutoff", "capped"):
            raise ValueError(f"unknown chi kind {self.kind!r}")

    def __call__(self, z):
        z = np.asarray(z, dtype=float)
        if self.kind == "cutoff":
            return np.minimum(z - self.param, 0.0)
        return np.minimum(z, self.param)

    def derivative(self, z):
        z = np.asarray(z, dtype=float)
        return np.where(z < self.param, 1.0, 0.0)

    @property
    def upper_bound(self) -> float:
        return 0.0 if self.kind == "cutoff" else self.param


def space_dim(eos, U) -> int:
    extra = 1 if isinstance(eos, BarotropicEos) else 2
    return np.shape(U)[0] - extra


def density(U):
    return np.asarray(U)[0]


def momentum(eos, U):
    U = np.asarray(U)
    return U[1 : 1 + space_dim(eos, U)]


def kinetic_energy(eos, U):
    rho = density(U)
    m = momentum(eos, U)
    return 0.5 * np.sum(m * m, axis=0) / rho


def internal_energy(eos: IdealGasEos, U):
    """Internal energy per unit volume, ``E - |m|^2 / (2 rho)``."""
    U = np.asarray(U)
    return U[-1] - kinetic_energy(eos, U)


def _first_bad(mask, values, what):
    idx = np.unravel_index(int(np.argmax(mask)), mask.shape) if mask.ndim else ()
    val = float(values[idx]) if np.ndim(values) else float(values)
    return InadmissibleStateError(
        f"inadmissible state: {what} = {val!r} at cell {tuple(int(i) for i in idx)}",
        index=tuple(int(i) for i in idx),
        state=val,
    )


def check_admissible(eos, U, rho_floor: float = 0.0, e_floor: float = 0.0):
    """Raise :class:`InadmissibleStateError` at the first cell (C order) that is
    not admissible; otherwise return None.

    Density must exceed ``rho_floor`` (strictly positive when the floor is 0);
    for the ideal gas the internal energy must exceed ``e_floor`` likewise.
    """
    U = np.asarray(U, dtype=float)
    bad = ~np.isfinite(U).all(axis=0)
    if bad.any():
        raise _first_bad(bad, U[0], "non-finite state, density")
    rho = U[0]
    bad = ~(rho > rho_floor) if rho_floor == 0 else rho < rho_floor
    if np.any(bad):
        raise _first_bad(np.asarray(bad), rho, "density")
    if isinstance(eos, IdealGasEos):
        e = internal_energy(eos, U)
        bad = ~(e > e_floor) if e_floor == 0 else e < e_floor
        if np.any(bad):
            raise _first_bad(np.asarray(bad), e, "internal energy")


def pressure(eos, U):
    U = np.asarray(U, dtype=float)
    check_admissible(eos, U)
    if isinstance(eos, BarotropicEos):
        return eos.a * U[0] ** eos.gamma
    return (eos.gamma - 1.0) * internal_energy(eos, U)


def temperature(eos: IdealGasEos, U):
    return pressure(eos, U) / density(U)


def pressure_potential(eos: BarotropicEos, rho, mode: str = "isentropic"):
    """Pressure potential ``P(rho)``.

    ``exact`` integrates ``rho * int_1^rho p(z)/z^2 dz``; ``isentropic`` drops the
    linear term and returns ``a rho^gamma / (gamma - 1)``.
    """
    rho = np.asarray(rho, dtype=float)
    if np.any(~(rho > 0)):
        raise _first_bad(np.asarray(~(rho > 0)), rho, "density")
    g = eos.gamma
    if mode == "isentropic":
        return eos.a * rho**g / (g - 1.0)
    if mode == "exact":
        return eos.a * rho * (rho ** (g - 1.0) - 1.0) / (g - 1.0)
    raise ValueError(f"unknown pressure potential mode {mode!r}")


def sound_speed(eos, U):
    U = np.asarray(U, dtype=float)
    p = pressure(eos, U)
    return np.sqrt(eos.gamma * p / U[0])


def specific_entropy_arg(eos: IdealGasEos, U):
    """Return ``(Z, S)`` with ``Z = p / rho**gamma`` and ``S = log(Z) / (gamma - 1)``."""
    U = np.asarray(U, dtype=float)
    p = pressure(eos, U)
    Z = p / U[0] ** eos.gamma
    return Z, np.log(Z) / (eos.gamma - 1.0)


def renorm_entropy(eos: IdealGasEos, chi: ChiSpec, U):
    """Renormalised entropy ``rho chi(S)`` and its flux ``m chi(S)``."""
    _, S = specific_entropy_arg(eos, U)
    c = chi(S)
    return density(U) * c, momentum(eos, U) * c


def energy_entropy_baro(eos: BarotropicEos, U, mode: str = "isentropic"):
    """Total energy density ``|m|^2/(2 rho) + P(rho)``."""
    U = np.asarray(U, dtype=float)
    return kinetic_energy(eos, U) + pressure_potential(eos, U[0], mode)


def entropy(eos, U, chi: ChiSpec | None = None):
    """The entropy used by the stability analysis.

    Barotropic: the (convex) energy. Ideal gas: the (concave) ``rho chi(S)``.
    """
    if isinstance(eos, BarotropicEos):
        return energy_entropy_baro(eos, U)
    if chi is None:
        raise ValueError("the complete system needs a ChiSpec")
    return renorm_entropy(eos, chi, U)[0]


def entropy_flux(eos, U, chi: ChiSpec | None = None):
    """Entropy flux ``q``, shape ``(dim, ...)``."""
    U = np.asarray(U, dtype=float)
    if isinstance(eos, BarotropicEos):
        eta = energy_entropy_baro(eos, U)
        p = pressure(eos, U)
        return momentum(eos, U) / U[0] * (eta + p)
    if chi is None:
        raise ValueError("the complete system needs a ChiSpec")
    return renorm_entropy(eos, chi, U)[1]


def physical_flux(eos, U, axis: int):
    """Physical flux ``f_axis(U)``; re-exported by :mod:`esfv.flux`."""
    U = np.asarray(U, dtype=float)
    p = pressure(eos, U)
    dim = space_dim(eos, U)
    u_s = U[1 + axis] / U[0]
    f = U * u_s
    f[1 + axis] += p
    if isinstance(eos, IdealGasEos):
        f[1 + dim] += p * u_s
    return f


def entropy_vars(eos, U, chi: ChiSpec | None = None):
    """Entropy variables ``V = grad_U eta`` and potential ``psi``.

    ``psi_s`` is defined through ``psi_s = V . f_s(U) - q_s(U)``, which makes the
    Tadmor entropy flux consistent by construction.

    Returns
    -------
    V : ndarray, shape ``U.shape``
    psi : ndarray, shape ``(dim,) + U.shape[1:]``
    """
    U = np.asarray(U, dtype=float)
    check_admissible(eos, U)
    dim = space_dim(eos, U)
    rho = U[0]
    m = U[1 : 1 + dim]
    V = np.empty_like(U)
    if isinstance(eos, BarotropicEos):
        g = eos.gamma
        V[0] = eos.a * g / (g - 1.0) * rho ** (g - 1.0) - 0.5 * np.sum(m * m, axis=0) / rho**2
        V[1:] = m / rho
    else:
        if chi is None:
            raise ValueError("the complete system needs a ChiSpec")
        g = eos.gamma
        p = pressure(eos, U)
        _, S = specific_entropy_arg(eos, U)
        c, dc = chi(S), chi.derivative(S)
        V[0] = c + dc * (0.5 * np.sum(m * m, axis=0) / (rho * p) - g / (g - 1.0))
        V[1 : 1 + dim] = -dc * m / p
        V[1 + dim] = dc * rho / p
    q = entropy_flux(eos, U, chi)
    psi = np.stack(
        [np.sum(V * physical_flux(eos, U, s), axis=0) - q[s] for s in range(dim)]
    )
    return V, psi


def entropy_hessian_baro(eos: BarotropicEos, rho, m_scalar):
    """Hessian of the energy restricted to ``(rho, m)`` along one direction.

    ``det = a gamma rho^(gamma-3)``, positive definite for ``rho > 0``.
    """
    rho = float(rho)
    if not rho > 0:
        raise InadmissibleStateError(f"inadmissible state: density = {rho!r}", state=rho)
    m = float(m_scalar)
    a, g = eos.a, eos.gamma
    return np.array(
        [
            [a * g * rho ** (g - 2.0) + m * m / rho**3, -m / rho**2],
            [-m / rho**2, 1.0 / rho],
        ]
    )
