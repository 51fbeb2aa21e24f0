"""
Refinement study on the isentropic vortex
=========================================

The vortex is an exact smooth solution, so errors can be measured directly
against it on a sequence of meshes.
"""

import numpy as np

from esfv.cases import isentropic_vortex_2d
from esfv.diagnostics import error_norms
from esfv.eos import IdealGasEos
from esfv.grid import GridSpec
from esfv.scheme import SchemeConfig, run

gas = IdealGasEos(1.4)
case = isentropic_vortex_2d(gas)  # strength 5, radius 0.2, drifting along (1, 1)
t_end = 0.1
config = SchemeConfig(gas, t_end=t_end)

errors = []
for n in (32, 64, 128):
    state = run(config, GridSpec(2, n), case.sampler).state
    l1, linf = error_norms(state.field, case.exact, t_end)
    errors.append(l1[0])
    print(f"n = {n:4d}  L1(rho) = {l1[0]:.4e}  Linf(rho) = {linf[0]:.4e}")

# a first-order scheme should roughly halve the error per refinement
orders = np.log2(np.array(errors[:-1]) / np.array(errors[1:]))
print("observed orders", np.round(orders, 3))
