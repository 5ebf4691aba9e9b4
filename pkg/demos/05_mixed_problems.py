"""Dirichlet and mixed problems.

The direct representation formulas use fused kernels, and the composition
runs the two stages one after the other. Both give the same answer on the
same grids.
"""
import numpy as np

from koranyi import solver as S

disc = S.Discretization(16)
probes = S.interior_probes(32, seed=1, rho_max=0.7)

for h in ("1", "t"):
    w = S.solve_dirichlet(1, "0", [h], disc)
    exact = np.ones(len(probes)) if h == "1" else probes[:, 2]
    print(f"Dirichlet reproduction of {h}: max error {np.abs(w.evaluate(probes) - exact).max():.2e}")

for kind in ("neumann-dirichlet", "dirichlet-neumann"):
    spec = S.BVPSpec(kind, p=1, q=1, f="1 - gauge^4 + t", g=["t"], h=["r2"], resolution=16)
    report, direct = S.solve(spec, force=True)
    _, staged = S.solve(spec, force=True, method="composition")
    gap = np.abs(direct.values - staged.values).max()
    print(f"{report.summary()}; direct vs composition {gap:.1e}")

# Strict mode pairs the Poisson terms with data in reversed order, and the
# report says so.
strict = S.BVPSpec("nd", p=1, q=1, f="1", g=["0"], h=["0"], resolution=16, strict_paper=True)
print(S.check(strict).notes)
