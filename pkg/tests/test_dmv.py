import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import brentq

from esfv.cases import constant_state, isentropic_vortex_2d, sod
from esfv.diagnostics import Trajectory
from esfv.dmv import (
    SOD_SHOCK_SPEED,
    EmpiricalMeasure,
    SampleWindow,
    collect,
    dirac_collapse_study,
    dissipation_defect,
    measure_mean,
    moment,
    observable,
    oscillation,
    sod_shock_window,
    torus_distance,
    vortex_windows,
    window_mask,
)
from esfv.eos import BarotropicEos, IdealGasEos
from esfv.grid import Field, GridSpec
from esfv.scheme import SchemeConfig, run


def constant_snaps(n, value=(1.0, 0.0, 2.5), t=0.0, dim=1):
    grid = GridSpec(dim, n)
    U = np.broadcast_to(np.asarray(value).reshape((-1,) + (1,) * dim), (len(value),) + grid.shape)
    return [(t, Field(grid, U.copy()))]


class TestMeasure:
    def test_dirac(self):
        m = EmpiricalMeasure.dirac([1.0, 0.5, 2.0])
        assert oscillation(m) == 0.0
        np.testing.assert_array_equal(measure_mean(m), [1.0, 0.5, 2.0])

    def test_two_atoms(self):
        m = EmpiricalMeasure([[1.0, 0.0], [3.0, 2.0]], [0.25, 0.75])
        np.testing.assert_allclose(measure_mean(m), [2.5, 1.5])
        # variances 0.75 and 0.75
        assert oscillation(m) == pytest.approx(1.5)

    def test_unit_variance(self):
        m = EmpiricalMeasure.uniform([[0.0], [2.0]])
        assert oscillation(m) == pytest.approx(1.0)

    def test_zero_weight_atom_ignored(self):
        a = EmpiricalMeasure([[1.0, 0.0], [2.0, 0.0], [50.0, 7.0]], [0.5, 0.5, 0.0])
        b = EmpiricalMeasure.uniform([[1.0, 0.0], [2.0, 0.0]])
        assert oscillation(a) == pytest.approx(oscillation(b))
        np.testing.assert_allclose(measure_mean(a), measure_mean(b))

    @pytest.mark.parametrize("atoms, w", [([[1.0]], [0.5]), ([[1.0], [2.0]], [1.2, -0.2]),
                                          ([[-1.0]], [1.0]), ([[1.0]], [1.0, 0.0])])
    def test_invalid(self, atoms, w):
        with pytest.raises(ValueError):
            EmpiricalMeasure(atoms, w)

    @given(st.lists(st.floats(0.1, 5), min_size=1, max_size=6), st.floats(0, 1))
    def test_merge_with_self_invariant(self, rhos, w):
        m = EmpiricalMeasure.uniform(np.array(rhos)[:, None])
        mm = m.merge(m, w)
        assert oscillation(mm) == pytest.approx(oscillation(m), abs=1e-12)
        np.testing.assert_allclose(measure_mean(mm), measure_mean(m))

    @given(st.lists(st.floats(0.1, 5), min_size=2, max_size=6), st.floats(-3, 3), st.floats(0.1, 3))
    def test_oscillation_affine(self, rhos, shift, scale):
        a = np.array(rhos)[:, None]
        assert oscillation(EmpiricalMeasure.uniform(scale * a + abs(shift))) == \
            pytest.approx(scale**2 * oscillation(EmpiricalMeasure.uniform(a)), rel=1e-9, abs=1e-12)

    def test_moment_undefined(self, ideal):
        m = EmpiricalMeasure.uniform([[1.0, 0.0, -1.0]])
        with pytest.raises(ValueError):
            moment(m, observable("p", ideal))


class TestObservables:
    def test_values(self, ideal):
        m = EmpiricalMeasure.uniform([[1.0, 1.0, 3.0], [2.0, 0.0, 2.5]])
        assert moment(m, observable("rho", ideal)) == 1.5
        assert moment(m, observable("m1", ideal)) == 0.5
        assert moment(m, observable("E", ideal)) == 2.75
        assert moment(m, observable("kinetic", ideal)) == pytest.approx(0.25)
        assert moment(m, observable("p", ideal)) == pytest.approx(0.4 * (2.5 + 2.5) / 2)

    def test_unknown(self, ideal, baro):
        with pytest.raises(ValueError):
            observable("vorticity", ideal)
        with pytest.raises(ValueError):
            observable("E", baro)


class TestWindows:
    def test_torus_distance_wraps(self):
        assert torus_distance(np.array([[0.05]]), (0.95,))[0] == pytest.approx(0.1)
        assert torus_distance(np.array([[0.1], [0.9]]), (0.9, 0.1))[0] == pytest.approx(np.hypot(0.2, 0.2))

    def test_mask_counts(self):
        grid = GridSpec(1, 10)
        assert window_mask(grid, (0.0,), 0.1).sum() == 2
        assert window_mask(grid, (0.05,), 0.11).sum() == 3
        with pytest.raises(ValueError):
            window_mask(grid, (0.0, 0.0), 0.1)

    def test_radius_rules(self):
        w = SampleWindow((0.5,), 0.0)
        assert w.resolve_radius([0.01, 0.02]) == pytest.approx(0.06)
        with pytest.raises(ValueError):
            SampleWindow((0.5,), 0.0, radius=0.001).resolve_radius([0.01])

    def test_empty_window(self):
        with pytest.raises(ValueError, match="no cell"):
            collect(constant_snaps(4), SampleWindow((0.0,), 0.0), radius=0.1)

    def test_nearest_snapshot(self):
        snaps = constant_snaps(8, t=0.0) + constant_snaps(8, value=(2.0, 0.0, 5.0), t=0.1)
        m = collect(snaps, SampleWindow((0.5,), 0.09))
        assert m.time_mismatch == pytest.approx(0.01)
        assert measure_mean(m)[0] == 2.0
        with pytest.raises(ValueError):
            collect(snaps, SampleWindow((0.5,), 0.05), max_mismatch=0.01)

    def test_sod_shock_speed_oracle(self):
        # star pressure from the exact Riemann solver pressure function
        g = 1.4
        rl, pl, rr, pr = 1.0, 1.0, 0.125, 0.1
        cl = np.sqrt(g * pl / rl)

        def f_left(p):
            return 2 * cl / (g - 1) * ((p / pl) ** ((g - 1) / (2 * g)) - 1)

        def f_right(p):
            A, B = 2 / ((g + 1) * rr), (g - 1) / (g + 1) * pr
            return (p - pr) * np.sqrt(A / (p + B))

        ps = brentq(lambda p: f_left(p) + f_right(p), 1e-6, 1.0, xtol=1e-14)
        cr = np.sqrt(g * pr / rr)
        S = cr * np.sqrt((g + 1) / (2 * g) * ps / pr + (g - 1) / (2 * g))
        assert ps == pytest.approx(0.30313017805, rel=1e-9)
        assert SOD_SHOCK_SPEED == pytest.approx(S, rel=1e-7)

    def test_sod_window(self):
        w = sod_shock_window(0.1)
        assert w.center[0] == pytest.approx(0.5 + 0.1 * SOD_SHOCK_SPEED)
        with pytest.raises(ValueError):
            sod_shock_window(0.2)

    def test_vortex_windows(self, ideal):
        case = isentropic_vortex_2d(ideal)
        core, edge, bg = vortex_windows(case, 0.25)
        np.testing.assert_allclose(core.center, (0.75, 0.75))
        np.testing.assert_allclose(edge.center, (0.95, 0.75))
        np.testing.assert_allclose(bg.center, (0.25, 0.25))


class TestCollapseStudy:
    def test_constant_levels(self, ideal):
        levels = [constant_snaps(n) for n in (16, 32, 64)]
        out = dirac_collapse_study(levels, SampleWindow((0.3,), 0.0), ideal, ("rho", "p"))
        assert all(row["oscillation"] == 0 for row in out["levels"])
        assert out["oscillation_decreasing"] and out["moments_stabilize"]
        assert out["cauchy"]["p"] == [0.0, 0.0]
        assert out["window"]["radius"] == pytest.approx(3 / 16)

    def test_needs_three_levels(self, ideal):
        with pytest.raises(ValueError):
            dirac_collapse_study([constant_snaps(8)] * 2, SampleWindow((0.5,), 0.0), ideal)

    def test_exact_oscillation_reported(self, ideal):
        case = isentropic_vortex_2d(ideal)
        levels = []
        for n in (8, 16, 32):
            g = GridSpec(2, n)
            from esfv.grid import project

            levels.append([(0.0, project(case.sampler, g))])
        out = dirac_collapse_study(levels, vortex_windows(case, 0.0)[0], ideal, exact=case.exact)
        for row in out["levels"]:
            assert row["exact_oscillation"] == pytest.approx(row["oscillation"], rel=1e-12)


class TestDissipationDefect:
    def test_barotropic_sod_positive_increasing(self):
        eos = BarotropicEos(1.0, 1.4)
        traj = Trajectory()
        run(SchemeConfig(eos, t_end=0.1), GridSpec(1, 128), sod(eos).sampler, observers=[traj])
        d = dissipation_defect(traj, eos)
        assert d.values[0] == 0 and d.values[-1] > 0
        assert np.all(np.diff(d.values) >= -1e-14)

    def test_complete_energy_balanced(self, ideal):
        traj = Trajectory()
        run(SchemeConfig(ideal, t_end=0.1), GridSpec(1, 128), sod(ideal).sampler, observers=[traj])
        assert np.max(dissipation_defect(traj, ideal).values) <= 1e-11

    def test_constant_zero(self, baro):
        traj = Trajectory()
        run(SchemeConfig(baro, t_end=0.05), GridSpec(1, 16),
            constant_state(baro, 1, 1.0, [0.5]).sampler, observers=[traj])
        assert np.all(dissipation_defect(traj, baro).values == 0)
