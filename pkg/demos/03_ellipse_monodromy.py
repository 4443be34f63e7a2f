"""
Why ellipses do not work
========================

The Schwarz function of an ellipse has square-root branch points at the foci.
Carrying it once around a focus flips the sheet; for a circle nothing happens.
"""
import numpy as np

from holmgren.schwarz import EllipseSpec, focus_loop_mismatch, meromorphy_report, monodromy_probe

for a, b in [(2.0, 1.0), (1.2, 1.0), (1.0, 1.0)]:
    spec = EllipseSpec(a, b)
    print(f"a={a} b={b}: boundary residual {spec.boundary_residual():.1e}, "
          f"focus loop mismatch {focus_loop_mismatch(spec):.3e}")

# loops that avoid the foci close up
print(monodromy_probe(EllipseSpec(2, 1), 0j, 0.5))

print(meromorphy_report(EllipseSpec(2, 1))["kind"])
