"""Dirichlet principal eigenvalues on growing intervals.

For CE1 the eigenvalue on [-R, R] decreases towards 0 as R grows along
powers of three; a Laplacian run calibrates the solver against pi^2.

Run:  python demos/03_eigenvalues.py [out_dir]
"""

import math
import sys
from pathlib import Path

import numpy as np

from critlab import reporting
from critlab.operators import Operator1D, make_operator
from critlab.spectral import Grid, dirichlet_principal_eigenvalue, eigenvalue_sweep

out = Path(sys.argv[1] if len(sys.argv) > 1 else "out/demos")

lap = Operator1D(lambda x: np.zeros_like(np.asarray(x, dtype=float)))
for h in (1e-2, 5e-3, 2.5e-3):
    lam = dirichlet_principal_eigenvalue(lap, Grid.from_step(0, 1, h)).lam
    print(f"h={h:<7g} lambda={lam:.8f}  error={lam - math.pi**2:+.2e}")

for preset in ("ce1-sa", "ce2-sa"):
    sweep = eigenvalue_sweep(make_operator(preset), [9.0, 27.0, 81.0, 243.0])
    print(preset, " ".join(f"R={p.radius:g}:{p.lam:.4g}" for p in sweep.points),
          "decreasing" if sweep.strictly_decreasing() else "not decreasing")
    reporting.write_text(out / f"sweep_{preset}.csv", reporting.sweep_csv(sweep.points))
