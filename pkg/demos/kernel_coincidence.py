"""
What the parity flip looks like up close
========================================

At lambda = 0.8 the potential is q = 1 - 2 sech^2 t and the operator
d/dt - S has the explicit kernel solution (sech t, -sech t tanh t).
Two numerical fingerprints of the same fact:

  * the discretized operator has exactly one singular value that is
    zero to truncation accuracy, and
  * the stable space at t = 0 coincides with the unstable space,
    because the kernel solution decays in both directions.
"""

import numpy as np

from hetindex import discretize, gap_distance, kernel_dimension, subspace_at
from hetindex.suites import poschl_teller_family

fam = poschl_teller_family()

for lam in (0.3, 0.8, 1.0):
    op = discretize(fam, lam, tau=15.0, N=1500)
    rep = kernel_dimension(op)
    rel = ", ".join(f"{r:.2e}" for r in rep.relative)
    print(f"lambda = {lam}:  kernel dim {rep.dim}   rel sigma ({rel})")

# the subspace side of the coincidence
for lam in (0.3, 0.8):
    es = subspace_at(fam, lam, "stable", 0.0)
    eu = subspace_at(fam, lam, "unstable", 0.0)
    print(f"lambda = {lam}:  gap(E^s(0), E^u(0)) ="
          f" {gap_distance(es, eu):.2e}")

# against the exact kernel direction at t = 0: sech'(0) = 0, so the
# solution passes through (1, 0)
es = subspace_at(fam, 0.8, "stable", 0.0)
v = es.columns.ravel()
print("E^s(0) direction at the coincidence:", v.round(8).tolist())
