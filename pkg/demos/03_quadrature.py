"""Grids on the gauge ball and its boundary, and Nyström kernel matrices."""
import numpy as np

from koranyi import kernels as K
from koranyi.quadrature import (ball_grid, boundary_grid, integrate_boundary, iterate, kernel_row, nystrom)

# Volume: the midpoint rule converges to pi^2/2 at second order.
for R in (8, 16, 32):
    g = ball_grid(R, circular=True)
    print(f"R={R:2d}  total weight {g.weights.sum():.6f}  error {g.weights.sum() / (np.pi ** 2 / 2) - 1:+.2e}")

# Boundary: the characteristic points [0, +-1] are cut out, and one scalar
# calibrates the measure so the Poisson kernel at the centre has mass one.
b = boundary_grid(64, delta_cap=0.05, circular=True)
print("calibration constant:", b.calibration)
for eta in ([0.3, 0, 0.2], [0.6, 0, -0.1]):
    print("Poisson mass at", eta, integrate_boundary(K.poisson(np.array(eta), b.nodes), b))

# Nyström matrices: rows are sources, columns targets; apply = K^T (w * f).
g = ball_grid(16, circular=True)
G = nystrom("green", g, g)
print("Green matrix", G.shape, "symmetric:", np.allclose(G.values, G.values.T))
print("int G(e, .) dv =", kernel_row("green", np.zeros(3), g) @ g.weights, " vs pi/4 =", np.pi / 4)

# Iterated kernels are weighted matrix products.
N = nystrom("neumann", g, g)
N2 = iterate(N, g.weights, 2)
print("N_2 corner entries:", N2.values[:2, :2])
