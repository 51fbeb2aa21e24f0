"""
Sampling Young measures from a refinement sequence
==================================================

Cell values inside a small window form an empirical measure. Its mean
settles as the mesh is refined; its spread (the oscillation) tells whether
the limit looks like a single state.
"""

from esfv.cases import isentropic_vortex_2d, sod
from esfv.dmv import dirac_collapse_study, sod_shock_window, vortex_windows
from esfv.eos import IdealGasEos
from esfv.grid import GridSpec
from esfv.scheme import SchemeConfig, run

gas = IdealGasEos(1.4)

# a window that follows the Sod shock; on the torus the shocks meet near t = 0.143
t_star = 0.1
levels = [
    run(SchemeConfig(gas, t_end=t_star), GridSpec(1, n), sod(gas).sampler,
        snapshot_times=[t_star]).snapshots
    for n in (128, 256, 512)
]
study = dirac_collapse_study(levels, sod_shock_window(t_star), gas, ("rho", "p"))
for row in study["levels"]:
    print(f"n = {row['n']:4d}  cells {row['cells']:3d}  mean rho {row['moments']['rho']:.4f}  "
          f"oscillation {row['oscillation']:.4f}")
# the window always straddles the shock, so the spread does not vanish
print("rho Cauchy differences", study["cauchy"]["rho"])

# the same study on the smooth vortex, with the exact solution's window spread for reference
case = isentropic_vortex_2d(gas)
levels = [
    run(SchemeConfig(gas, t_end=t_star), GridSpec(2, n), case.sampler,
        snapshot_times=[t_star]).snapshots
    for n in (32, 64, 128)
]
for window in vortex_windows(case, t_star):
    study = dirac_collapse_study(levels, window, gas, exact=case.exact)
    osc = [f"{row['oscillation']:.4f}" for row in study["levels"]]
    print(f"{window.name:10s} oscillation {osc}  exact "
          f"{study['levels'][-1]['exact_oscillation']:.4f}")
