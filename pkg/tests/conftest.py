import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from esfv.eos import BarotropicEos, IdealGasEos

settings.register_profile(
    "esfv", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("esfv")


@pytest.fixture
def ideal():
    return IdealGasEos(1.4)


@pytest.fixture
def baro():
    return BarotropicEos(a=1.0, gamma=2.0)


def admissible_state(eos, dim):
    """Hypothesis strategy for a single admissible conservative state."""
    rho = st.floats(0.1, 5.0)
    vel = st.lists(st.floats(-3.0, 3.0), min_size=dim, max_size=dim)
    if isinstance(eos, IdealGasEos):
        p = st.floats(0.05, 5.0)
        return st.tuples(rho, vel, p).map(
            lambda t: np.array(
                [t[0], *(t[0] * np.array(t[1])),
                 t[2] / (eos.gamma - 1) + 0.5 * t[0] * float(np.dot(t[1], t[1]))]
            )
        )
    return st.tuples(rho, vel).map(lambda t: np.array([t[0], *(t[0] * np.array(t[1]))]))


def random_field(eos, grid, rng):
    rho = rng.uniform(0.5, 2.0, grid.shape)
    u = rng.uniform(-1.0, 1.0, (grid.dim,) + grid.shape)
    parts = [rho[None], rho * u]
    if isinstance(eos, IdealGasEos):
        p = rng.uniform(0.5, 2.0, grid.shape)
        parts.append((p / (eos.gamma - 1) + 0.5 * rho * np.sum(u * u, axis=0))[None])
    return np.concatenate(parts)


_ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance_line():
    """Record a ``PASS``/``FAIL`` line shown in the terminal summary."""
    def record(label, passed, detail):
        line = f"{'PASS' if passed else 'FAIL'} {label}: {detail}"
        _ACCEPTANCE_LINES.append(line)
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES, key=lambda s: s.split(" ", 1)[1]):
            terminalreporter.write_line(line)
