"""Left-invariant vector fields, the sub-Laplacian and horizontal normals.

Scalar fields are callables on point arrays.  A field may expose a ``jet``
method returning a :class:`~koranyi.jets.Jet2`; otherwise second-order jets
are taken by central finite differences and tagged ``mode="fd"``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .group import PoleError, _arr
from .jets import Jet2, fd_jet

EPS_CHAR = 1e-6


class CharacteristicPointError(ValueError):
    """The horizontal gradient of the defining function vanishes."""


@dataclass(frozen=True)
class FieldId:
    kind: str
    j: int = 1

    def __post_init__(self):
        if self.kind not in ("X", "Y", "Z", "Zbar", "T"):
            raise ValueError(f"unknown vector field {self.kind!r}")
        if self.kind != "T" and self.j < 1:
            raise ValueError("field index starts at 1")


class Field:
    """Scalar field with an optional analytic jet rule."""

    def __init__(self, fn, jet=None, name: str = "field"):
        self._fn = fn
        self._jet = jet
        self.name = name

    def __call__(self, p):
        return self._fn(p)

    def __repr__(self):
        return f"Field({self.name})"

    @property
    def has_jet(self) -> bool:
        return self._jet is not None

    def jet(self, p) -> Jet2:
        if self._jet is None:
            return _fd_batch(self._fn, p)
        return self._jet(p)


def _fd_batch(f, p) -> Jet2:
    p = _arr(p)
    if p.ndim == 1:
        return fd_jet(f, p)
    flat = p.reshape(-1, p.shape[-1])
    jets = [fd_jet(f, q) for q in flat]
    d = p.shape[-1]
    return Jet2(np.array([j.value for j in jets]).reshape(p.shape[:-1]),
                np.array([j.grad for j in jets]).reshape(p.shape[:-1] + (d,)),
                np.array([j.hess for j in jets]).reshape(p.shape[:-1] + (d, d)), "fd")


def jet2(f, p) -> Jet2:
    """Second-order jet of ``f`` at ``p`` (analytic when ``f`` provides one)."""
    p = _arr(p)
    jet = getattr(f, "jet", None)
    if callable(jet) and getattr(f, "has_jet", True):
        out = jet(p)
    else:
        out = _fd_batch(f, p)
    if not (np.all(np.isfinite(out.value)) and np.all(np.isfinite(out.hess))):
        raise PoleError("jet evaluation hit a singular point of the field")
    return out


def _as_jet(f, p) -> Jet2:
    return f if isinstance(f, Jet2) else jet2(f, p)


def field_from_jet(J: Jet2, p, fid: FieldId):
    p = _arr(p)
    n = (p.shape[-1] - 1) // 2
    if fid.kind != "T" and fid.j > n:
        raise ValueError(f"field index {fid.j} exceeds dimension {n}")
    g = J.grad
    j = fid.j - 1
    dt = g[..., 2 * n]
    if fid.kind == "T":
        return dt
    X = g[..., j] + 2.0 * p[..., n + j] * dt
    Y = g[..., n + j] - 2.0 * p[..., j] * dt
    if fid.kind == "X":
        return X
    if fid.kind == "Y":
        return Y
    if fid.kind == "Z":
        return 0.5 * (X - 1j * Y)
    return 0.5 * (X + 1j * Y)


def apply_field(fid: FieldId, f, p):
    """Apply ``X_j``, ``Y_j``, ``Z_j``, ``Zbar_j`` or ``T`` to ``f`` at ``p``.

    ``f`` may also be a precomputed jet at ``p``.
    """
    return field_from_jet(_as_jet(f, p), p, fid)


def sublaplacian_from_jet(J: Jet2, p):
    p = _arr(p)
    n = (p.shape[-1] - 1) // 2
    H = J.hess
    x, y = p[..., :n], p[..., n:2 * n]
    k = 2 * n
    hxx = np.diagonal(H[..., :n, :n], axis1=-2, axis2=-1)
    hyy = np.diagonal(H[..., n:k, n:k], axis1=-2, axis2=-1)
    hxt = H[..., :n, k]
    hyt = H[..., n:k, k]
    htt = H[..., k, k]
    s = np.sum(hxx + hyy + 4.0 * y * hxt - 4.0 * x * hyt, axis=-1)
    s = s + 4.0 * np.sum(x * x + y * y, axis=-1) * htt
    return 0.25 * s


def sublaplacian(f, p):
    """``L_0 f = (1/4) sum_j (X_j^2 + Y_j^2) f``."""
    return sublaplacian_from_jet(_as_jet(f, p), p)


def horizontal_gradient_from_jet(J: Jet2, p) -> np.ndarray:
    p = _arr(p)
    n = (p.shape[-1] - 1) // 2
    g = J.grad
    dt = g[..., 2 * n : 2 * n + 1]
    X = g[..., :n] + 2.0 * p[..., n:2 * n] * dt
    Y = g[..., n:2 * n] - 2.0 * p[..., :n] * dt
    return np.concatenate([X, Y], axis=-1)


def horizontal_gradient(F, p) -> np.ndarray:
    """Coefficients ``(X_1 F..X_n F, Y_1 F..Y_n F)`` of the horizontal gradient."""
    return horizontal_gradient_from_jet(_as_jet(F, p), p)


def _rho_jet(p) -> Jet2:
    p = _arr(p)
    n = (p.shape[-1] - 1) // 2
    d = 2 * n + 1
    w = p[..., :2 * n]
    t = p[..., 2 * n]
    r2 = np.sum(w * w, axis=-1)
    val = r2 * r2 + t * t
    grad = np.zeros(p.shape)
    grad[..., :2 * n] = 4.0 * r2[..., None] * w
    grad[..., 2 * n] = 2.0 * t
    hess = np.zeros(p.shape[:-1] + (d, d))
    hess[..., :2 * n, :2 * n] = 8.0 * w[..., :, None] * w[..., None, :] + 4.0 * r2[..., None, None] * np.eye(2 * n)
    hess[..., 2 * n, 2 * n] = 2.0
    return Jet2(val, grad, hess)


def _rho_minus_one(p):
    p = _arr(p)
    n = (p.shape[-1] - 1) // 2
    r2 = np.sum(p[..., :2 * n] ** 2, axis=-1)
    return r2 * r2 + p[..., 2 * n] ** 2 - 1.0


#: Default defining function ``rho - 1`` of the Korányi ball, ``rho = |z|^4 + t^2``.
BALL_DEFINING = Field(_rho_minus_one, lambda p: _rho_jet(p) - 1.0, name="rho-1")


def normal_derivative(u, p, F=None, eps_char: float = EPS_CHAR):
    """Horizontal normal derivative ``<grad_0 u, grad_0 F>_0 / |grad_0 F|_0``."""
    p = _arr(p)
    F = BALL_DEFINING if F is None else F
    gF = horizontal_gradient(F, p)
    norm = np.linalg.norm(gF, axis=-1)
    if np.any(norm < eps_char):
        raise CharacteristicPointError("horizontal gradient of the defining function vanishes at a probe point")
    gu = horizontal_gradient(u, p)
    return np.sum(gu * gF, axis=-1) / norm


def is_characteristic(p, F=None, eps_char: float = EPS_CHAR):
    F = BALL_DEFINING if F is None else F
    return np.linalg.norm(horizontal_gradient(F, p), axis=-1) < eps_char
