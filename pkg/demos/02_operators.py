"""Drift form versus self-adjoint form.

The gauge v = exp(G) u turns u'' + 2 b u' into v'' + c v.  Here the CE1
ground state exp(-B) is checked against both forms at random points.

Run:  python demos/02_operators.py
"""

import numpy as np

from critlab.criticality import ground_state, solution_residual
from critlab.operators import Preset, make_operator

rng = np.random.default_rng(0)
x = rng.uniform(-243, 243, 2000)

for preset in (Preset.CE1_SA, Preset.CE2_SA, Preset.LIMIT_SA):
    op = make_operator(preset)
    phi = ground_state(preset)
    c = np.asarray(op.potential(x), dtype=float)
    print(f"{preset.value:9s} potential range [{float(c.min()):+.3f}, {float(c.max()):+.3f}], "
          f"max ground-state residual {float(np.max(solution_residual(op, phi, x))):.2e}")
