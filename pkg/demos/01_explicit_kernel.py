"""
A biharmonic function that is flat on half the circle
=====================================================

u(z) = (1 - |z|^2)^3 / |1 - z|^4 vanishes to third order on the unit circle
away from z = 1.  We check both facts with finite differences.
"""
import numpy as np

from holmgren import fieldlab
from holmgren.suite import root_check

k = fieldlab.explicit_kernel()

# biharmonic: the FD bilaplacian on an interior grid is at rounding level
res, _ = fieldlab.bilaplacian_residual(k, fieldlab.disk_grid(20, 0.8), 1e-2)
print(f"max |bilaplacian| on the grid: {res:.2e}")

# flat: u, du/dn and d2u/dn2 decay like t^3, t^2, t along inward normals
arc = fieldlab.CurveArc.circle(np.pi / 2, 3 * np.pi / 2)
rep = fieldlab.flatness_decay(k, arc)
print("decay exponents:", np.round(rep.exponents, 3), "passed:", rep.passed)

# the holomorphic pieces of d_z^2 u obey U1 + U2/z = 0 near the circle
print(f"root check residual: {root_check(k):.2e}")
