"""Fundamental solution, Green, Poisson and Neumann kernels of the gauge ball.

On H_1 the circular averages of the kernels have exact elliptic-integral
forms, so they are cheap to evaluate on whole grids.
"""
import numpy as np

from koranyi import kernels as K
from koranyi.calculus import sublaplacian_from_jet
from koranyi.group import multiply, koranyi_norm

e = np.zeros(3)
xi = np.array([[1.0, 0.0, 0.0], [1.0, 0.0, 1.0], [0.3, -0.2, 0.4]])
print("g_e(xi):", K.fundamental(e, xi), " a0 =", K.a0(1))

# Harmonicity away from the pole, with analytic second-order jets.
eta = np.array([0.2, 0.1, -0.3])
print("L0 g_eta(xi):", sublaplacian_from_jet(K.fundamental_jet(eta, xi), xi))

# The circular Green function vanishes on the boundary sphere.
psi = np.linspace(-1.4, 1.4, 9)
sphere = np.stack([np.sqrt(np.cos(psi)), 0 * psi, np.sin(psi)], -1)
print("max |G(eta, sphere)|:", np.abs(K.green(eta, sphere)).max())
print("gauge of sphere points:", koranyi_norm(sphere).round(12))

# Poisson kernel: positive, and concentrates as eta approaches the boundary.
for r in (0.0, 0.5, 0.9):
    print(f"P at eta=({r},0,0):", K.poisson(np.array([r, 0, 0]), sphere).round(3))

# At the centre the Neumann function is g_e shifted by the constant a0.
print("N(e, xi) - g_e(xi):", K.neumann(e, xi, correction="exact") - K.fundamental(e, xi))
print("gauge distance of eta to xi:", koranyi_norm(multiply(-eta, xi)))
