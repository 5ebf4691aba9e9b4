"""Algebra of the Heisenberg group H_n.

Points are stored as real arrays of shape ``(..., 2n+1)`` laid out as
``[x_1..x_n, y_1..y_n, t]`` with ``z_j = x_j + i y_j``.  Every function
broadcasts over leading axes, so a batch of points is just a 2-D array.
"""

from __future__ import annotations

import numpy as np


class DimensionError(ValueError):
    """Points from different dimensions were mixed."""


class PoleError(ValueError):
    """Evaluation at a singular point (pole) of a map or kernel."""


def _arr(p) -> np.ndarray:
    a = np.asarray(p, dtype=float)
    if a.ndim == 0 or a.shape[-1] < 3 or a.shape[-1] % 2 == 0:
        raise DimensionError(f"point arrays need a trailing axis of odd length >= 3, got shape {a.shape}")
    return a


def dimension(p) -> int:
    """Complex dimension n of a point array."""
    return (_arr(p).shape[-1] - 1) // 2


def point(z, t) -> np.ndarray:
    """Build a point from complex coordinates ``z`` (shape (..., n)) and real ``t``."""
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    t = np.asarray(t, dtype=float)
    out = np.concatenate([z.real, z.imag, t[..., None]], axis=-1)
    if not np.all(np.isfinite(out)):
        raise ValueError("point coordinates must be finite")
    return out


def split(p):
    """Return ``(z, t)`` with ``z`` complex of shape (..., n)."""
    p = _arr(p)
    n = (p.shape[-1] - 1) // 2
    return p[..., :n] + 1j * p[..., n:2 * n], p[..., 2 * n]


def identity(n: int) -> np.ndarray:
    return np.zeros(2 * n + 1)


def _same_dim(p, q):
    p, q = _arr(p), _arr(q)
    if p.shape[-1] != q.shape[-1]:
        raise DimensionError(f"dimension mismatch: {p.shape[-1]} vs {q.shape[-1]} real coordinates")
    return p, q


def multiply(p, q) -> np.ndarray:
    """Group product ``[z+w, t+s+2 Im(z . conj(w))]``."""
    p, q = _same_dim(p, q)
    n = (p.shape[-1] - 1) // 2
    xp, yp, tp = p[..., :n], p[..., n:2 * n], p[..., 2 * n]
    xq, yq, tq = q[..., :n], q[..., n:2 * n], q[..., 2 * n]
    twist = 2.0 * np.sum(yp * xq - xp * yq, axis=-1)
    out = np.empty(np.broadcast_shapes(p.shape, q.shape))
    out[..., :2 * n] = p[..., :2 * n] + q[..., :2 * n]
    out[..., 2 * n] = tp + tq + twist
    return out


def inverse(p) -> np.ndarray:
    return -_arr(p)


def koranyi_norm(p):
    """Gauge ``(|z|^4 + t^2)^(1/4)``."""
    p = _arr(p)
    n = (p.shape[-1] - 1) // 2
    # rescale to homogeneous size ~1 so |z|^4 neither underflows nor overflows
    m = np.maximum(np.max(np.abs(p[..., :2 * n]), axis=-1), np.sqrt(np.abs(p[..., 2 * n])))
    m = np.where(m > 0, m, 1.0)
    r2 = np.sum((p[..., :2 * n] / m[..., None]) ** 2, axis=-1)
    t = p[..., 2 * n] / m / m
    return m * (r2 * r2 + t * t) ** 0.25


def dilate(r: float, p) -> np.ndarray:
    """Anisotropic dilation ``[r z, r^2 t]``."""
    if not r > 0:
        raise ValueError(f"dilation factor must be positive, got {r}")
    p = _arr(p)
    n = (p.shape[-1] - 1) // 2
    out = p.copy()
    out[..., :2 * n] *= r
    out[..., 2 * n] *= r * r
    return out


def invert(p) -> np.ndarray:
    """Conformal inversion ``h([z,t]) = [-z/(|z|^2 - i t), -t/(|z|^4 + t^2)]``."""
    p = _arr(p)
    n = (p.shape[-1] - 1) // 2
    z, t = split(p)
    r2 = np.sum(p[..., :2 * n] ** 2, axis=-1)
    rho = r2 * r2 + t * t
    if np.any(rho == 0):
        raise PoleError("inversion is singular at the identity")
    w = -z / (r2 - 1j * t)[..., None]
    out = np.empty_like(p)
    out[..., :n] = w.real
    out[..., n:2 * n] = w.imag
    out[..., 2 * n] = -t / rho
    return out


def kelvin(f, p):
    """Kelvin transform ``N(p)^(-2n) f(h(p))``."""
    p = _arr(p)
    n = (p.shape[-1] - 1) // 2
    return koranyi_norm(p) ** (-2 * n) * f(invert(p))


def rotation_matrix(n: int, theta: float) -> np.ndarray:
    """Real matrix of the circle action ``z -> e^{i theta} z`` on the real chart."""
    c, s = np.cos(theta), np.sin(theta)
    R = np.zeros((2 * n + 1, 2 * n + 1))
    idx = np.arange(n)
    R[idx, idx] = c
    R[idx, n + idx] = -s
    R[n + idx, idx] = s
    R[n + idx, n + idx] = c
    R[2 * n, 2 * n] = 1.0
    return R


def rotate(p, theta: float) -> np.ndarray:
    p = _arr(p)
    return p @ rotation_matrix((p.shape[-1] - 1) // 2, theta).T


def circular_angles(ntheta: int) -> np.ndarray:
    if ntheta < 4:
        raise ValueError(f"ntheta must be >= 4, got {ntheta}")
    return 2.0 * np.pi * np.arange(ntheta) / ntheta


def circular_average(f, p, ntheta: int = 32):
    """Periodic trapezoid average of ``theta -> f([e^{i theta} z, t])``.

    ``f`` must accept point arrays with leading batch axes.
    """
    p = _arr(p)
    thetas = circular_angles(ntheta)
    vals = [np.asarray(f(rotate(p, th))) for th in thetas]
    return np.mean(vals, axis=0)
