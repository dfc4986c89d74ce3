"""
From an odd index to a bifurcation verdict
==========================================

z'' = (1 - 2.5 lambda sech^2 t) z + z^3 has the zero branch for every
lambda.  Linearizing along it recovers the solvable family from the
other demos, so the linearized operator path changes determinant sign
once on [0, 1].  An odd index forces a connecting orbit to split off
the branch somewhere in the interval.
"""

import numpy as np

from hetindex import Branch, NonlinearFamily, detect_bifurcation, linearize_along

g = ["z2", "(1 - 2.5*lambda*sech(t)^2)*z1 + z1^3"]
nf = NonlinearFamily.from_sources(g, z_minus=[0.0, 0.0], z_plus=[0.0, 0.0])
branch = Branch.from_sources(["0", "0"])

# the linearization along the zero branch, sampled by hand
lf = linearize_along(nf, branch)
for lam in (0.0, 0.8):
    print(f"linearized S({lam}, 0) =", lf.evaluate(lam, 0.0).round(6).tolist())

verdict = detect_bifurcation(nf, branch)
print("bifurcates:", verdict.bifurcates)
print("index:", verdict.index)
print("candidate lambda values:", verdict.lam_candidates)
print("note:", verdict.note)

# the same family on [0, 0.5] never reaches the crossing at 0.8; an
# even (here zero) index proves nothing, and the verdict says so
half = detect_bifurcation(nf, branch, lam_range=(0.0, 0.5))
print("on [0, 0.5]: bifurcates", half.bifurcates,
      "index", half.index, "note:", half.note)
