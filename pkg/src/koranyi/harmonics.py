"""Spherical harmonics on C^n and the correction series of the Neumann function.

The series coefficients ``a_{m;k}`` and the constant ``b0`` are not known in
closed form here; they come from a pluggable provider (zero by default).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np
from scipy.special import binom

from .group import _arr


class DegenerateRecurrenceError(ValueError):
    """The coefficient recurrence divides by zero (n = 1 with min(k, l) >= 1)."""


def cq_rational(k: int, l: int, n: int) -> list[Fraction]:
    if k < 0 or l < 0:
        raise ValueError("degrees must be non-negative")
    r = min(k, l)
    c = [Fraction(1)]
    for q in range(r):
        den = (q + 1) * (n + q - 1)
        num = -(k - q) * (l - q) * c[q]
        if den == 0:
            raise DegenerateRecurrenceError(
                f"recurrence for (k, l) = ({k}, {l}) is degenerate in dimension n = {n}")
        c.append(num / den)
    return c


def cq_coefficients(k: int, l: int, n: int) -> list[float]:
    """Coefficients ``c_0..c_r`` of the representative harmonic ``Y_{k,l}``."""
    return [float(c) for c in cq_rational(k, l, n)]


@dataclass(frozen=True)
class HarmonicSpec:
    k: int
    l: int
    n: int
    coefficients: tuple

    @classmethod
    def build(cls, k: int, l: int, n: int) -> "HarmonicSpec":
        return cls(k, l, n, tuple(cq_coefficients(k, l, n)))


def harmonic_poly(c, k, l, z1, z1bar, zstar2):
    """Generic evaluation; works on complex arrays and on :class:`Jet2` values."""
    total = 0
    for q, cq in enumerate(c):
        term = cq * zstar2 ** q * z1 ** (k - q) * z1bar ** (l - q)
        total = term + total
    return total


def spherical_harmonic(spec: HarmonicSpec, z):
    """``sum_q c_q |z*|^{2q} z_1^{k-q} conj(z_1)^{l-q}`` with ``z* = (z_2..z_n)``."""
    z = np.asarray(z, dtype=complex)
    if z.shape[-1] != spec.n:
        raise ValueError(f"expected {spec.n} complex coordinates, got {z.shape[-1]}")
    z1 = z[..., 0]
    zs2 = np.sum(np.abs(z[..., 1:]) ** 2, axis=-1)
    return harmonic_poly(spec.coefficients, spec.k, spec.l, z1, np.conj(z1), zs2)


def harmonic_dimension_is_zero(k: int, l: int, n: int) -> bool:
    """True when H_{k,l}(C^n) is trivial (n = 1 and both degrees positive)."""
    return n == 1 and min(k, l) >= 1


def jacobi_like(m: int, alpha: float, beta: float, w):
    """Jacobi polynomial ``P_m^{(alpha, beta)}(w)`` by the three-term recurrence.

    Works for complex ``w``.
    """
    if int(m) != m or m < 0:
        raise ValueError(f"degree must be a non-negative integer, got {m}")
    m = int(m)
    w = np.asarray(w, dtype=complex)
    a, b = alpha, beta
    p0 = np.ones_like(w)
    if m == 0:
        return p0
    p1 = (a + 1) + (a + b + 2) * (w - 1) / 2
    for k in range(2, m + 1):
        s = 2 * k + a + b
        c1 = 2 * k * (k + a + b) * (s - 2)
        c2 = (s - 1) * (s * (s - 2) * w + a * a - b * b)
        c3 = 2 * (k + a - 1) * (k + b - 1) * s
        p0, p1 = p1, (c2 * p1 - c3 * p0) / c1
    return p1


def jacobi_direct(m: int, alpha: float, beta: float, w):
    """Explicit sum form of the Jacobi polynomial (cross-check)."""
    w = np.asarray(w, dtype=complex)
    out = np.zeros_like(w)
    for s in range(m + 1):
        out = out + binom(m + alpha, m - s) * binom(m + beta, s) * ((w - 1) / 2) ** s * ((w + 1) / 2) ** (m - s)
    return out


def zero_provider(m: int, k: int) -> float:
    return 0.0


@dataclass
class SeriesConfig:
    k_max: int = 0
    m_max: int = 0
    coeff_provider: Callable[[int, int], float] = zero_provider
    b0: float = 0.0
    jacobi: Callable = field(default=jacobi_like, repr=False)

    def __post_init__(self):
        if self.k_max < 0 or self.m_max < 0:
            raise ValueError("series truncations must be non-negative")

    @property
    def is_zero(self) -> bool:
        return self.coeff_provider is zero_provider and self.b0 == 0.0


def table_provider(entries) -> Callable[[int, int], float]:
    """Provider backed by a list of ``{"k":, "m":, "value":}`` records; missing pairs are 0."""
    table = {(int(e["m"]), int(e["k"])): float(e["value"]) for e in entries}

    def provider(m: int, k: int) -> float:
        return table.get((m, k), 0.0)

    provider.table = table
    return provider


def load_provider(path) -> Callable[[int, int], float]:
    with open(path) as fh:
        data = json.load(fh)
    if isinstance(data, dict):
        data = data.get("coefficients", [])
    return table_provider(data)


def h_series(eta, xi, cfg: SeriesConfig):
    """Truncated correction series ``h(eta, xi)`` (real part) plus ``b0``.

    Terms whose half-index ``(m - 2k)/2`` is negative or non-integer are
    skipped, and so are degrees whose harmonic space is trivial.
    """
    eta, xi = _arr(eta), _arr(xi)
    n = (eta.shape[-1] - 1) // 2
    shape = np.broadcast_shapes(eta.shape[:-1], xi.shape[:-1])
    total = np.zeros(shape, dtype=complex)
    z, t = eta[..., :n] + 1j * eta[..., n:2 * n], eta[..., 2 * n]
    zp, tp = xi[..., :n] + 1j * xi[..., n:2 * n], xi[..., 2 * n]
    w = t + 1j * np.sum(np.abs(z) ** 2, axis=-1)
    wp = tp + 1j * np.sum(np.abs(zp) ** 2, axis=-1)
    for k in range(1, cfg.k_max + 1):
        if harmonic_dimension_is_zero(k, k, n):
            continue
        spec = HarmonicSpec.build(k, k, n)
        Y = spherical_harmonic(spec, z)
        Yp = np.conj(spherical_harmonic(spec, zp))
        a = n / 2 + k
        for m in range(1, cfg.m_max + 1):
            if (m - 2 * k) < 0 or (m - 2 * k) % 2:
                continue
            coeff = cfg.coeff_provider(m, k)
            if coeff == 0.0:
                continue
            half = (m - 2 * k) // 2
            total = total + (2 * n / m) * coeff * cfg.jacobi(half, a, a, w) * Y * cfg.jacobi(m, a, a, wp) * Yp
    return np.real(total) + cfg.b0
