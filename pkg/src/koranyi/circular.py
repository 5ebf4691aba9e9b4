"""Closed-form circular kernels on H_1.

A circular function on H_1 depends on ``(s, t) = (|z|^2, t)`` only.  With
``X = (s, t)`` read as cylindrical coordinates (radius ``s``, height ``t``) of
R^3, the sub-Laplacian becomes ``L_0 U = s * Delta_3 U`` for axisymmetric
``U`` and the Korányi ball becomes the unit ball of R^3.  Circular averages of
the fundamental solution are then ring potentials, and the kernels below are
exact elliptic-integral expressions of those ring averages.

All functions broadcast over numpy arrays of meridian coordinates and take
the pole first: ``kernel(s_eta, t_eta, s_xi, t_xi)``.
"""

from __future__ import annotations

import numpy as np
from scipy.special import ellipe, ellipkm1

A0 = 1.0 / (2.0 * np.pi)


def meridian(p):
    """``(s, t) = (|z|^2, t)`` of H_1 point arrays."""
    p = np.asarray(p, dtype=float)
    if p.shape[-1] != 3:
        raise ValueError("closed-form circular kernels are available for n = 1 only")
    return p[..., 0] ** 2 + p[..., 1] ** 2, p[..., 2]


def _ap_am(s, t, s2, t2):
    dt2 = (t - t2) ** 2
    return (s + s2) ** 2 + dt2, (s - s2) ** 2 + dt2


def ring_mean(s, t, s2, t2):
    """Mean of ``1/|X - Y_alpha|`` over the ring of ``Y = (s2, t2)``."""
    ap, am = _ap_am(s, t, s2, t2)
    with np.errstate(divide="ignore", invalid="ignore"):
        return (2.0 / np.pi) * ellipkm1(am / ap) / np.sqrt(ap)


def ring_mean3(s, t, s2, t2):
    """Mean of ``1/|X - Y_alpha|^3`` over the ring of ``Y = (s2, t2)``."""
    ap, am = _ap_am(s, t, s2, t2)
    with np.errstate(divide="ignore", invalid="ignore"):
        return (2.0 / np.pi) * ellipe(1.0 - am / ap) / (am * np.sqrt(ap))


def fundamental_bar(se, te, sx, tx):
    """Circular average of ``g_eta`` evaluated at ``xi``."""
    return A0 * ring_mean(sx, tx, se, te)


def kelvin_image_bar(se, te, sx, tx):
    """``K(gbar_eta)(xi^{-1})``; equals ``a0`` when ``eta = e``."""
    se, te, sx, tx = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (se, te, sx, tx)))
    y2 = se * se + te * te
    pole = y2 == 0
    safe = np.where(pole, 1.0, y2)
    with np.errstate(divide="ignore", invalid="ignore"):
        val = A0 * ring_mean(sx, tx, se / safe, te / safe) / np.sqrt(safe)
    return np.where(pole, A0, val)


def green_bar(se, te, sx, tx):
    """Circularized Green function of the Korányi ball."""
    return fundamental_bar(se, te, sx, tx) - kelvin_image_bar(se, te, sx, tx)


def poisson_bar(se, te, sx, tx):
    """Circularized Poisson kernel, ``eta`` interior and ``xi`` on the unit sphere.

    Density with respect to the horizontal perimeter measure ``dsigma``.
    """
    x2 = se * se + te * te
    return np.sqrt(sx) * (1.0 - x2) / (4.0 * np.pi) * ring_mean3(se, te, sx, tx)


def graded_azimuth_rule(levels: int = 12, order: int = 8, ratio: float = 0.35):
    """Gauss rule on [0, pi] graded geometrically towards 0, normalized to mean."""
    x, w = np.polynomial.legendre.leggauss(order)
    edges = [0.0] + [np.pi * ratio ** k for k in range(levels)][::-1]
    nodes, weights = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        nodes.append(0.5 * (b - a) * x + 0.5 * (a + b))
        weights.append(0.5 * (b - a) * w)
    return np.concatenate(nodes), np.concatenate(weights) / np.pi


_ALPHA, _ALPHA_W = graded_azimuth_rule()
_COS, _SIN = np.cos(_ALPHA), np.sin(_ALPHA)


def neumann_correction(se, te, sx, tx):
    """Smooth correction turning ``gbar + K(gbar)`` into a Neumann function.

    Ring average of the logarithmic term of the classical Neumann function of
    the unit ball in R^3, scaled to the H_1 normalization.  It vanishes when
    ``eta = e``.
    """
    se, te, sx, tx = (np.asarray(a, dtype=float)[..., None] for a in (se, te, sx, tx))
    y2 = se * se + te * te
    yn = np.sqrt(y2)
    safe = np.where(yn > 0, yn, 1.0)
    dot = sx * se * _COS + tx * te
    d = np.sqrt((yn * sx - se * _COS / safe) ** 2 + (se * _SIN / safe) ** 2 + (yn * tx - te / safe) ** 2)
    d = np.where(yn > 0, d, 1.0)
    return A0 * np.sum(np.log(2.0 / (1.0 - dot + d)) * _ALPHA_W, axis=-1)


def neumann_bar(se, te, sx, tx):
    """Circular Neumann function ``gbar + K(gbar) + correction`` on H_1."""
    return (fundamental_bar(se, te, sx, tx) + kelvin_image_bar(se, te, sx, tx)
            + neumann_correction(se, te, sx, tx))


KERNELS = {
    "fundamental": fundamental_bar,
    "green": green_bar,
    "neumann": neumann_bar,
    "poisson": poisson_bar,
}
