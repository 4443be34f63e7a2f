"""
Operator matrices in three dimensions
=====================================

Two 3x3 matrices of second-order operators multiply to the bilaplacian.
A biharmonic u splits as v + x1 w with v, w harmonic.
"""
from holmgren._poly import RealPoly3
from holmgren.trilap import L, L_PRIME, LAPLACE, almansi3, diag, op_mul, x1_field

bil = LAPLACE * LAPLACE
print("L L' == diag(bilaplacian):", op_mul(L, L_PRIME) == diag(bil, bil, bil))

u = RealPoly3({(3, 0, 0): 1})
s = almansi3(u)
print("w for x1^3:", s.w.to_json())

# the X1 field vanishes on x1 = 0 and the Hessian of w there is nondegenerate
f = x1_field(u)
print("vanishes on patch:", f.vanishes_on_patch(), "degenerate:", f.degenerate)

g = x1_field(RealPoly3({(3, 1, 0): 1}), "lex")
print("x1^3 x2: degenerate", g.degenerate, "rank", g.rank)
