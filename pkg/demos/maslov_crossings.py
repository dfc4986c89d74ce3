"""
Maslov index by crossing forms, checked against the Z2-index mod 2
==================================================================

Lagrangian planes in R^2k that are graphs of symmetric matrices cross
where det(B(t) - A(t)) = 0.  Each regular crossing contributes the
signature of d/dt (B - A) restricted to the kernel; the Z2-index only
sees the endpoint determinant signs.  They agree mod 2.
"""

import numpy as np

from hetindex import crossing_census, graph_path, mod2_compare

# one transversal crossing: graphs of t and -t
V = graph_path(lambda t: np.array([[t]]))
W = graph_path(lambda t: np.array([[-t]]))
rep = mod2_compare(V, W, interval=(-1.0, 1.0))
print("graphs of t and -t:   maslov", rep.maslov, " z2", rep.z2,
      " agree:", rep.agree)

# a cubic: B - A = t - t^3 crosses at -1, 0, 1 with slopes -2, 1, -2,
# so the signatures cancel down to -1
V = graph_path(lambda t: np.array([[t ** 3 - t]]))
W = graph_path(lambda t: np.array([[0.0]]))
rep = mod2_compare(V, W, interval=(-1.5, 1.5))
print("cubic against zero:   maslov", rep.maslov, " z2", rep.z2,
      " agree:", rep.agree)
for d in rep.crossings:
    print(f"  crossing at t = {d.instant: .6f}  signature {d.signature:+d}")

# a crossing the determinant cannot see: A = diag(t, -t) meets the
# zero section in a 2-dimensional kernel with indefinite form, so
# det(B - A) = -t^2 touches zero without changing sign
V = graph_path(lambda t: np.diag([t, -t]))
W = graph_path(lambda t: np.zeros((2, 2)))
census = crossing_census(V, W, interval=(-1.0, 1.0))
print("diag(t, -t) against zero:")
for d in census:
    print(f"  crossing at t = {d.instant: .2e}  kernel dim"
          f" {d.kernel.shape[1]}  signature {d.signature:+d}")
rep = mod2_compare(V, W, interval=(-1.0, 1.0))
print("  maslov", rep.maslov, " z2", rep.z2, " agree:", rep.agree)
