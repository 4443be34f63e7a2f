"""
Quadrature identities on polynomial-map domains
===============================================

For phi = zeta + c zeta^2 the area integral of a harmonic h is
pi(1 + 2c^2) h(0) + Re(pi c h'(0)).  We fit the weights and compare.
"""
import numpy as np

from holmgren.polyrat import RationalMap
from holmgren.schwarz import QuadratureData, fit_quadrature_data, quadrature_residual

disk = RationalMap.polynomial([0, 1])
res, _ = quadrature_residual(disk, QuadratureData((0j,), (np.pi,), (0j,)))
print(f"disk mean value residual: {res:.1e}")

c = 0.3
data = fit_quadrature_data(RationalMap.polynomial([0, 1, c]), [0j])
print("fitted:", data.value_weights[0], data.derivative_weights[0])
print("expected:", np.pi * (1 + 2 * c * c), np.pi * c)
