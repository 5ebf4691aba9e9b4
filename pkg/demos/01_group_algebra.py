"""The Heisenberg group H_1 in a few lines of numpy.

Points are arrays [x, y, t]. The product twists the t coordinate, so the
group is not commutative, but the gauge N behaves like a norm.
"""
import numpy as np

from koranyi.group import dilate, invert, kelvin, koranyi_norm, multiply, point, rotate

p = point([1j], 0.0)
q = point([1.0], 0.0)
print("p.q =", multiply(p, q), "  q.p =", multiply(q, p))  # t picks up +-2

# The gauge is homogeneous for the anisotropic dilation [r z, r^2 t].
rng = np.random.default_rng(0)
P = rng.normal(size=(5, 3))
print("N(2p) / N(p):", koranyi_norm(dilate(2.0, P)) / koranyi_norm(P))

# Inversion swaps the inside and outside of the unit gauge ball.
print("N(h(p)) * N(p):", koranyi_norm(invert(P)) * koranyi_norm(P))

# Kelvin transform of the constant function: N^{-2}.
print("K[1](0, 4) =", kelvin(lambda x: np.ones(x.shape[:-1]), point([0], 4.0)))

# The circle action z -> e^{i theta} z is a group automorphism.
a, b = P[0], P[1]
print("rotation commutes with the product:",
      np.allclose(rotate(multiply(a, b), 0.7), multiply(rotate(a, 0.7), rotate(b, 0.7))))
