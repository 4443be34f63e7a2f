"""
Building a flat biharmonic function from a point-mass measure
==============================================================

Start from the disk map phi(zeta) = zeta and the arc |theta| < 3pi/4.
Point masses on the complementary arc determine V2 and then V1.
After subtracting an affine part, v = Re V1 + |phi|^2 Re V2 is flat on the arc.
"""
import numpy as np

from holmgren.arcflat import ArcSpec, construct, pole_constraints
from holmgren.polyrat import RationalMap

phi = RationalMap.polynomial([0, 1])
arc = ArcSpec(-3 * np.pi / 4, 3 * np.pi / 4)

# c(zeta) = conj(phi(1/conj zeta))/phi has a double pole at 0: V2' must vanish there
print(pole_constraints(phi).to_json())

sol = construct(phi, arc, check_flatness=False)
print("atoms:", len(sol.measure.atoms), "nullspace:", sol.diagnostics["nullspace_dim"])

for name, chk in sol.verify().items():
    print(f"{name:24s} {chk['measured']:.3e} {chk['relation']} {chk['tolerance']:g}")

# values near the arc shrink like distance^3
t = np.array([1e-1, 5e-2, 2.5e-2])
print("u along the inward normal at z = 1:", sol.u(1 - t, 0 * t))

# swap in phi = zeta + 0.3 zeta^2 for a cardioid-like domain; the pole at 0 is now triple
