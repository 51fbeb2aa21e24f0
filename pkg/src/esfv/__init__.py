"""Entropy-stable Lax-Friedrichs finite volume schemes for the barotropic and
complete Euler equations on the periodic unit torus, with conservation,
entropy and Young-measure diagnostics."""

from .cases import CaseSpec, make_case
from .eos import BarotropicEos, ChiSpec, IdealGasEos, InadmissibleStateError
from .flux import FluxKind
from .grid import Field, GridSpec
from .scheme import RunResult, SchemeConfig, State, StepError, init, rhs, run, step

__all__ = [
    "BarotropicEos",
    "CaseSpec",
    "ChiSpec",
    "Field",
    "FluxKind",
    "GridSpec",
    "IdealGasEos",
    "InadmissibleStateError",
    "RunResult",
    "SchemeConfig",
    "State",
    "StepError",
    "init",
    "make_case",
    "rhs",
    "run",
    "step",
]

__version__ = "0.1.0"
