"""Second-order jets (value, gradient, Hessian) with forward-mode arithmetic.

A :class:`Jet2` may carry a batch: ``value`` has shape ``S``, ``grad`` has
shape ``S + (d,)`` and ``hess`` has shape ``S + (d, d)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class Jet2:
    value: np.ndarray
    grad: np.ndarray
    hess: np.ndarray
    mode: str = field(default="analytic", compare=False)

    @property
    def dim(self) -> int:
        return self.grad.shape[-1]

    @staticmethod
    def constant(c, d: int, mode: str = "analytic") -> "Jet2":
        c = np.asarray(c)
        return Jet2(c, np.zeros(c.shape + (d,), dtype=c.dtype if c.dtype.kind == "c" else float),
                    np.zeros(c.shape + (d, d), dtype=c.dtype if c.dtype.kind == "c" else float), mode)

    @staticmethod
    def variable(values, index: int, d: int, mode: str = "analytic") -> "Jet2":
        v = np.asarray(values, dtype=float)
        g = np.zeros(v.shape + (d,))
        g[..., index] = 1.0
        return Jet2(v, g, np.zeros(v.shape + (d, d)), mode)

    def __getitem__(self, key):
        return Jet2(self.value[key], self.grad[key], self.hess[key], self.mode)

    # arithmetic ----------------------------------------------------------
    def __neg__(self):
        return Jet2(-self.value, -self.grad, -self.hess, self.mode)

    def __add__(self, other):
        if not isinstance(other, Jet2):
            return Jet2(self.value + other, self.grad, self.hess, self.mode)
        return Jet2(self.value + other.value, self.grad + other.grad, self.hess + other.hess, self.mode)

    __radd__ = __add__

    def __sub__(self, other):
        if not isinstance(other, Jet2):
            return Jet2(self.value - other, self.grad, self.hess, self.mode)
        return Jet2(self.value - other.value, self.grad - other.grad, self.hess - other.hess, self.mode)

    def __rsub__(self, other):
        return (-self).__add__(other)

    def __mul__(self, other):
        if not isinstance(other, Jet2):
            c = np.asarray(other)
            return Jet2(self.value * c, self.grad * c[..., None], self.hess * c[..., None, None], self.mode)
        u, v = self, other
        gu, gv = u.grad, v.grad
        cross = gu[..., :, None] * gv[..., None, :]
        hess = (u.hess * v.value[..., None, None] + v.hess * u.value[..., None, None]
                + cross + np.swapaxes(cross, -1, -2))
        grad = gu * v.value[..., None] + gv * u.value[..., None]
        return Jet2(u.value * v.value, grad, hess, self.mode)

    __rmul__ = __mul__

    def reciprocal(self) -> "Jet2":
        v = self.value
        return self._chain(1.0 / v, -1.0 / (v * v), 2.0 / (v * v * v))

    def __truediv__(self, other):
        if not isinstance(other, Jet2):
            c = np.asarray(other)
            return Jet2(self.value / c, self.grad / c[..., None], self.hess / c[..., None, None], self.mode)
        q = self * other.reciprocal()
        return Jet2(self.value / other.value, q.grad, q.hess, self.mode)

    def __rtruediv__(self, other):
        q = self.reciprocal() * other
        return Jet2(np.asarray(other) / self.value, q.grad, q.hess, self.mode)

    def __pow__(self, k):
        if not isinstance(k, (int, np.integer)):
            raise TypeError("jets support integer powers only")
        k = int(k)
        v = self.value
        if k == 0:
            return Jet2.constant(np.ones_like(v), self.dim, self.mode)
        f0 = v ** k
        f1 = k * v ** (k - 1)
        f2 = k * (k - 1) * v ** (k - 2) if k != 1 else np.zeros_like(v)
        return self._chain(f0, f1, f2)

    # elementary functions -------------------------------------------------
    def _chain(self, f0, f1, f2) -> "Jet2":
        g = self.grad
        grad = f1[..., None] * g
        hess = f1[..., None, None] * self.hess + f2[..., None, None] * (g[..., :, None] * g[..., None, :])
        return Jet2(f0, grad, hess, self.mode)

    def sin(self):
        v = self.value
        return self._chain(np.sin(v), np.cos(v), -np.sin(v))

    def cos(self):
        v = self.value
        return self._chain(np.cos(v), -np.sin(v), -np.cos(v))

    def exp(self):
        e = np.exp(self.value)
        return self._chain(e, e, e)

    def sqrt(self):
        s = np.sqrt(self.value)
        return self._chain(s, 0.5 / s, -0.25 / (s * self.value))

    def log(self):
        v = self.value
        return self._chain(np.log(v), 1.0 / v, -1.0 / (v * v))

    def power(self, a: float) -> "Jet2":
        """Real power ``v**a`` (used by kernels, not by the expression language)."""
        v = self.value
        return self._chain(v ** a, a * v ** (a - 1), a * (a - 1) * v ** (a - 2))

    # transforms ------------------------------------------------------------
    def pullback(self, A) -> "Jet2":
        """Jet of ``F(A x + c)`` given the jet of ``F`` at ``A x + c``."""
        A = np.asarray(A)
        grad = np.einsum("...i,ij->...j", self.grad, A)
        hess = np.einsum("ki,...kl,lj->...ij", A, self.hess, A)
        return Jet2(self.value, grad, hess, self.mode)

    def real(self) -> "Jet2":
        return Jet2(np.real(self.value), np.real(self.grad), np.real(self.hess), self.mode)

    def imag(self) -> "Jet2":
        return Jet2(np.imag(self.value), np.imag(self.grad), np.imag(self.hess), self.mode)


def sum_jets(jets) -> Jet2:
    jets = list(jets)
    out = jets[0]
    for j in jets[1:]:
        out = out + j
    return out


def variables(p) -> list[Jet2]:
    """Coordinate jets for every real coordinate of the point array ``p``."""
    p = np.asarray(p, dtype=float)
    d = p.shape[-1]
    return [Jet2.variable(p[..., i], i, d) for i in range(d)]


def fd_step(p) -> np.ndarray:
    return 1e-4 * (1.0 + np.abs(np.asarray(p, dtype=float)))


def fd_jet(f, p, h=None) -> Jet2:
    """Central finite-difference jet of a scalar field at a single point."""
    p = np.asarray(p, dtype=float)
    d = p.shape[-1]
    h = fd_step(p) if h is None else np.broadcast_to(np.asarray(h, dtype=float), p.shape)
    f0 = float(f(p))
    grad = np.zeros(d)
    hess = np.zeros((d, d))
    E = np.eye(d)
    for i in range(d):
        ei = E[i] * h[i]
        fp, fm = float(f(p + ei)), float(f(p - ei))
        grad[i] = (fp - fm) / (2 * h[i])
        hess[i, i] = (fp - 2 * f0 + fm) / (h[i] ** 2)
        for j in range(i):
            ej = E[j] * h[j]
            v = (float(f(p + ei + ej)) - float(f(p + ei - ej))
                 - float(f(p - ei + ej)) + float(f(p - ei - ej))) / (4 * h[i] * h[j])
            hess[i, j] = hess[j, i] = v
    return Jet2(np.asarray(f0), grad, hess, "fd")
