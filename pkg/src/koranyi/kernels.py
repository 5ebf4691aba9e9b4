"""Two-point kernels of the Korányi ball: fundamental solution, Green,
Poisson and Neumann functions.

Every kernel is written ``K(eta, xi)`` with the pole ``eta`` first and
broadcasts over point arrays.  The ``*_jet`` variants return second-order
jets in ``xi``.  Circular versions average over the circle action in ``xi``;
on H_1 they default to the exact elliptic-integral forms in
:mod:`koranyi.circular`, elsewhere to a periodic trapezoid rule.
"""

from __future__ import annotations

import numpy as np
from scipy.special import gamma

from . import circular as _circ
from .calculus import Field, _rho_jet, horizontal_gradient_from_jet
from .group import PoleError, _arr, _same_dim, circular_angles, invert, koranyi_norm, multiply, rotation_matrix
from .harmonics import SeriesConfig, h_series
from .jets import Jet2


def a0(n: int) -> float:
    """Normalization ``2^{n-2} Gamma(n/2)^2 / pi^{n+1}`` of the fundamental solution."""
    if n < 1:
        raise ValueError("dimension must be >= 1")
    return 2.0 ** (n - 2) * gamma(n / 2) ** 2 / np.pi ** (n + 1)


def _dim(p) -> int:
    return (p.shape[-1] - 1) // 2


# fundamental solution ------------------------------------------------------

def fundamental(eta, xi):
    """``g_eta(xi) = a0 N(eta^{-1} xi)^{-2n}``."""
    eta, xi = _same_dim(eta, xi)
    n = _dim(xi)
    N = koranyi_norm(multiply(-eta, xi))
    if np.any(N == 0):
        raise PoleError("fundamental solution evaluated at its pole")
    return a0(n) * N ** (-2 * n)


def _translation_pullback(J: Jet2, eta) -> Jet2:
    """Jet in ``xi`` of ``F(eta^{-1} xi)`` from the jet of ``F`` at ``eta^{-1} xi``."""
    n = _dim(eta)
    c = np.zeros(eta.shape)
    c[..., :n] = -2.0 * eta[..., n:2 * n]
    c[..., n:2 * n] = 2.0 * eta[..., :n]
    g, H = J.grad, J.hess
    gt = g[..., 2 * n : 2 * n + 1]
    Ht = H[..., :, 2 * n]
    Htt = H[..., 2 * n, 2 * n][..., None, None]
    grad = g + gt * c
    outer = c[..., :, None] * Ht[..., None, :]
    hess = H + outer + np.swapaxes(outer, -1, -2) + Htt * (c[..., :, None] * c[..., None, :])
    return Jet2(J.value, grad, hess, J.mode)


def _ge_jet(v, n) -> Jet2:
    return _rho_jet(v).power(-n / 2.0) * a0(n)


def fundamental_jet(eta, xi) -> Jet2:
    eta, xi = _same_dim(eta, xi)
    eta, xi = np.broadcast_arrays(eta, xi)
    n = _dim(xi)
    v = multiply(-eta, xi)
    if np.any(koranyi_norm(v) == 0):
        raise PoleError("fundamental solution evaluated at its pole")
    return _translation_pullback(_ge_jet(v, n), eta)


# Kelvin term ---------------------------------------------------------------

def _star(eta):
    N = koranyi_norm(eta)
    pole = N == 0
    safe = np.where(pole[..., None], 1.0, eta)
    return invert(safe), np.where(pole, 1.0, N), pole


def kelvin_image(eta, xi):
    """``K(g_eta)(xi^{-1}) = N(eta)^{-2n} g_{eta*}(xi^{-1})``; ``a0`` at ``eta = e``."""
    eta, xi = _same_dim(eta, xi)
    n = _dim(xi)
    star, N, pole = _star(eta)
    v = multiply(-star, -xi)
    with np.errstate(divide="ignore"):
        val = N ** (-2 * n) * a0(n) * koranyi_norm(v) ** (-2 * n)
    return np.where(pole, a0(n), val)


def kelvin_image_jet(eta, xi) -> Jet2:
    eta, xi = _same_dim(eta, xi)
    eta, xi = np.broadcast_arrays(eta, xi)
    n = _dim(xi)
    star, N, pole = _star(eta)
    v = multiply(-star, -xi)
    J = _translation_pullback(_ge_jet(v, n), star)
    scale = np.where(pole, 0.0, N ** (-2 * n))
    # d/dxi of F(-xi) flips the gradient sign and keeps the Hessian
    J = Jet2(J.value, -J.grad, J.hess) * scale
    return J + np.where(pole, a0(n), 0.0)


# circular averaging ---------------------------------------------------------

def _average_over_xi(fn, eta, xi, ntheta):
    eta, xi = _same_dim(eta, xi)
    n = _dim(xi)
    vals = [fn(eta, xi @ rotation_matrix(n, th).T) for th in circular_angles(ntheta)]
    return np.mean(vals, axis=0)


def _average_jet_over_xi(jetfn, eta, xi, ntheta) -> Jet2:
    eta, xi = _same_dim(eta, xi)
    n = _dim(xi)
    acc = None
    for th in circular_angles(ntheta):
        R = rotation_matrix(n, th)
        J = jetfn(eta, xi @ R.T).pullback(R)
        acc = J if acc is None else acc + J
    return acc * (1.0 / ntheta)


def _use_closed(method: str, n: int) -> bool:
    if method not in ("auto", "closed", "trapezoid"):
        raise ValueError(f"unknown averaging method {method!r}")
    if method == "closed" and n != 1:
        raise ValueError("closed-form circular kernels exist for n = 1 only")
    return method == "closed" or (method == "auto" and n == 1)


def fundamental_bar(eta, xi, ntheta: int = 32, method: str = "auto"):
    eta, xi = _same_dim(eta, xi)
    if _use_closed(method, _dim(xi)):
        return _circ.fundamental_bar(*_circ.meridian(eta), *_circ.meridian(xi))
    return _average_over_xi(fundamental, eta, xi, ntheta)


def kelvin_image_bar(eta, xi, ntheta: int = 32, method: str = "auto"):
    eta, xi = _same_dim(eta, xi)
    if _use_closed(method, _dim(xi)):
        return _circ.kelvin_image_bar(*_circ.meridian(eta), *_circ.meridian(xi))
    return _average_over_xi(kelvin_image, eta, xi, ntheta)


# Green function ----------------------------------------------------------------

def green(eta, xi, circular: bool = True, ntheta: int = 32, method: str = "auto"):
    """Green function ``g_eta(xi) - K(g_eta)(xi^{-1})``.

    With ``circular=True`` (default) the kernel is averaged over the circle
    action in ``xi``; that average vanishes on the boundary sphere.
    """
    eta, xi = _same_dim(eta, xi)
    if not circular:
        return fundamental(eta, xi) - kelvin_image(eta, xi)
    if _use_closed(method, _dim(xi)):
        return _circ.green_bar(*_circ.meridian(eta), *_circ.meridian(xi))
    return _average_over_xi(lambda e, x: fundamental(e, x) - kelvin_image(e, x), eta, xi, ntheta)


def _green_pointwise_jet(eta, xi) -> Jet2:
    return fundamental_jet(eta, xi) - kelvin_image_jet(eta, xi)


def green_jet(eta, xi, circular: bool = True, ntheta: int = 32) -> Jet2:
    if not circular:
        return _green_pointwise_jet(eta, xi)
    return _average_jet_over_xi(_green_pointwise_jet, eta, xi, ntheta)


# Poisson kernel -----------------------------------------------------------------

def _boundary_normal(xi):
    """Unit horizontal normal coefficients of ``rho - 1`` at ``xi``."""
    xi = _arr(xi)
    g = horizontal_gradient_from_jet(_rho_jet(xi), xi)
    norm = np.linalg.norm(g, axis=-1)
    if np.any(norm < 1e-6):
        raise PoleError("Poisson kernel requested at a characteristic boundary point")
    return g / norm[..., None]


def poisson(eta, xi, circular: bool = True, ntheta: int = 32, method: str = "auto"):
    """``P(eta, xi) = -(1/4) d/dn_0 G(eta, .)`` at boundary points ``xi``."""
    eta, xi = _same_dim(eta, xi)
    if circular and _use_closed(method, _dim(xi)):
        _boundary_normal(xi)
        return _circ.poisson_bar(*_circ.meridian(eta), *_circ.meridian(xi))
    nu = _boundary_normal(xi)
    J = green_jet(eta, xi, circular=circular, ntheta=ntheta)
    xi_b = np.broadcast_to(xi, J.grad.shape)
    return -0.25 * np.sum(horizontal_gradient_from_jet(J, xi_b) * nu, axis=-1)


# Neumann function ---------------------------------------------------------------

def neumann(eta, xi, series: SeriesConfig | None = None, correction: str = "series",
            ntheta: int = 32, method: str = "auto"):
    """Neumann function ``gbar_eta(xi) + K(gbar_eta)(xi^{-1}) + h(eta, xi)``.

    ``correction="series"`` uses :func:`~koranyi.harmonics.h_series` with
    ``series`` (zero provider by default).  ``correction="exact"`` uses the
    closed-form correction available on H_1.
    """
    eta, xi = _same_dim(eta, xi)
    n = _dim(xi)
    base = fundamental_bar(eta, xi, ntheta, method) + kelvin_image_bar(eta, xi, ntheta, method)
    if correction == "exact":
        if n != 1:
            raise ValueError("the exact Neumann correction is available for n = 1 only")
        return base + _circ.neumann_correction(*_circ.meridian(eta), *_circ.meridian(xi))
    if correction != "series":
        raise ValueError(f"unknown Neumann correction {correction!r}")
    cfg = series if series is not None else SeriesConfig()
    if cfg.k_max == 0 or cfg.m_max == 0:
        return base + cfg.b0
    return base + h_series(eta, xi, cfg)


def neumann_jet(eta, xi, ntheta: int = 32) -> Jet2:
    """Jet in ``xi`` of ``gbar_eta + K(gbar_eta)(xi^{-1})`` (series part omitted)."""
    return _average_jet_over_xi(lambda e, x: fundamental_jet(e, x) + kelvin_image_jet(e, x), eta, xi, ntheta)


# fields ----------------------------------------------------------------------

def kernel_field(kind: str, eta, **opts) -> Field:
    """The map ``xi -> K(eta, xi)`` as a :class:`~koranyi.calculus.Field` with jets."""
    eta = _arr(eta)
    circ = opts.get("circular", True)
    nt = opts.get("ntheta", 32)
    if kind == "fundamental":
        return Field(lambda x: fundamental(eta, x), lambda x: fundamental_jet(eta, x), "fundamental")
    if kind == "green":
        return Field(lambda x: green(eta, x, circular=circ, ntheta=nt),
                     lambda x: green_jet(eta, x, circular=circ, ntheta=nt), "green")
    if kind == "neumann":
        return Field(lambda x: neumann(eta, x, ntheta=nt, method="trapezoid"),
                     lambda x: neumann_jet(eta, x, ntheta=nt), "neumann")
    raise ValueError(f"no field form for kernel {kind!r}")
