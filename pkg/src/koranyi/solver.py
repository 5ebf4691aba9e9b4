"""Solvability checks and representation formulas for polyharmonic Neumann
and mixed Neumann/Dirichlet problems on the Korányi ball of H_1.

Problem data are circular, so everything runs on circular ``(rho, psi)``
grids with the closed-form kernels of :mod:`koranyi.circular`.

Conventions.  The fundamental solution satisfies ``L_0 g_e = -delta``, so
convolving with a kernel inverts ``L_0`` up to the sign ``S_L = -1``, and the
divergence theorem for the horizontal normal reads
``int_B L_0 u dv = FLUX * int_dB du/dn_0 dsigma`` with ``FLUX = 1/4``.  With
these two constants the Neumann problem of order p
(``L_0^p u = f``, ``d/dn_0 L_0^j u = g_j`` on the boundary) has the solution

    u = S_L^p N_p*f - FLUX * sum_mu S_L^(mu+1) N^b_(mu+1)*g_mu

and the solvability conditions, for ``j = 0..p-1``,

    int_B W_(j+1) dv = FLUX * int_dB g_j dsigma,
    W_(j+1) = S_L^(p-j-1) N_(p-j-1)*f - FLUX * sum_(mu>j) S_L^(mu-j) N^b_(mu-j)*g_mu.

Kernel orders follow ``N_1 = N``, ``N_k = N_(k-1) W N`` and ``N_0 = id``.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Any

import numpy as np
from scipy.interpolate import RectBivariateSpline

from . import __version__
from .expr import Expr, is_circular, parse
from .harmonics import SeriesConfig
from .quadrature import (GridCache, KernelMatrix, KernelSpec, VolumeGrid, ball_grid,
                         boundary_grid, gauge_polar, iterate, mixed_kernels, nystrom)

S_L = -1.0
FLUX = 0.25

KINDS = {
    "neumann": "neumann", "neumann-m": "neumann", "n": "neumann",
    "neumann-dirichlet": "neumann-dirichlet", "neumanndirichlet": "neumann-dirichlet", "nd": "neumann-dirichlet",
    "dirichlet-neumann": "dirichlet-neumann", "dirichletneumann": "dirichlet-neumann", "dn": "dirichlet-neumann",
    "dirichlet": "dirichlet", "d": "dirichlet",
}


class SpecError(ValueError):
    """Invalid problem description (bad orders, non-circular data...)."""


class UnsolvableError(RuntimeError):
    """Solvability conditions fail and no override was given."""

    def __init__(self, report):
        super().__init__(f"solvability conditions fail ({report.summary()})")
        self.report = report


def _datum(x, n):
    if isinstance(x, (int, float)):
        return parse(repr(float(x)), n)
    if isinstance(x, str):
        return parse(x, n)
    if callable(x):
        return x
    raise SpecError(f"cannot interpret {x!r} as data")


def _label(x):
    if isinstance(x, Expr):
        return x.source
    return getattr(x, "name", repr(x))


@dataclass
class BVPSpec:
    """Boundary value problem description.

    ``p`` is the Neumann order, ``q`` the Dirichlet order; ``g`` holds the
    Neumann data and ``h`` the Dirichlet data.
    """

    kind: str
    p: int = 0
    q: int = 0
    f: Any = "0"
    g: list = field(default_factory=list)
    h: list = field(default_factory=list)
    n: int = 1
    resolution: int = 16
    boundary_resolution: int | None = None
    delta_cap: float = 0.05
    tol: float = 0.02
    series: SeriesConfig | None = None
    correction: str = "exact"
    strict_paper: bool = False

    def __post_init__(self):
        key = str(self.kind).lower().replace("_", "-")
        if key not in KINDS:
            raise SpecError(f"unknown problem kind {self.kind!r}")
        self.kind = KINDS[key]
        self.f = _datum(self.f, self.n)
        self.g = [_datum(x, self.n) for x in self.g]
        self.h = [_datum(x, self.n) for x in self.h]
        if self.boundary_resolution is None:
            self.boundary_resolution = max(64, 4 * self.resolution)

    def validate(self) -> "BVPSpec":
        if self.n != 1:
            raise SpecError("the solver runs on H_1 (n = 1)")
        if self.p < 0 or self.q < 0 or self.p + self.q < 1:
            raise SpecError("orders must satisfy p, q >= 0 and p + q >= 1")
        if self.kind == "neumann" and (self.p < 1 or self.q != 0):
            raise SpecError("a Neumann problem has p >= 1 and q = 0")
        if self.kind == "dirichlet" and (self.q < 1 or self.p != 0):
            raise SpecError("a Dirichlet problem has q >= 1 and p = 0")
        if self.kind in ("neumann-dirichlet", "dirichlet-neumann") and (self.p < 1 or self.q < 1):
            raise SpecError("mixed problems need p >= 1 and q >= 1")
        if len(self.g) != self.p:
            raise SpecError(f"expected {self.p} Neumann data g, got {len(self.g)}")
        if len(self.h) != self.q:
            raise SpecError(f"expected {self.q} Dirichlet data h, got {len(self.h)}")
        if self.resolution < 4 or self.boundary_resolution < 4:
            raise SpecError("resolutions must be >= 4")
        if not self.delta_cap > 0:
            raise SpecError("delta_cap must be positive")
        for name, datum in [("f", self.f)] + [(f"g{i}", x) for i, x in enumerate(self.g)] + \
                [(f"h{i}", x) for i, x in enumerate(self.h)]:
            if not is_circular(datum, 1e-8, n=self.n):
                raise SpecError(f"datum {name} = {_label(datum)} is not circular")
        return self

    @classmethod
    def from_dict(cls, d: dict) -> "BVPSpec":
        res = d.get("resolution", {})
        if isinstance(res, int):
            res = {"volume": res}
        series = d.get("series")
        cfg = None
        if series:
            from .harmonics import load_provider, table_provider
            provider = None
            if "coefficients" in series:
                provider = table_provider(series["coefficients"])
            elif "coeffs_file" in series:
                provider = load_provider(series["coeffs_file"])
            cfg = SeriesConfig(int(series.get("k_max", 0)), int(series.get("m_max", 0)),
                               provider or SeriesConfig().coeff_provider, float(series.get("b0", 0.0)))
        try:
            return cls(kind=d["kind"], p=int(d.get("p", 0)), q=int(d.get("q", 0)), f=d.get("f", "0"),
                       g=list(d.get("g", [])), h=list(d.get("h", [])), n=int(d.get("n", 1)),
                       resolution=int(res.get("volume", 16)), boundary_resolution=res.get("boundary"),
                       delta_cap=float(res.get("delta_cap", d.get("delta_cap", 0.05))),
                       tol=float(d.get("tol", 0.02)), series=cfg,
                       correction=d.get("neumann_correction", "exact"),
                       strict_paper=bool(d.get("strict_paper", False)))
        except KeyError as exc:
            raise SpecError(f"missing field {exc}") from None
        except (TypeError, ValueError, AttributeError) as exc:
            raise SpecError(f"malformed spec: {exc}") from None

    def to_dict(self) -> dict:
        d = {
            "kind": self.kind, "p": self.p, "q": self.q, "n": self.n,
            "f": _label(self.f), "g": [_label(x) for x in self.g], "h": [_label(x) for x in self.h],
            "resolution": {"volume": self.resolution, "boundary": self.boundary_resolution,
                           "delta_cap": self.delta_cap},
            "tol": self.tol, "neumann_correction": self.correction, "strict_paper": self.strict_paper,
        }
        if self.series is not None:
            d["series"] = {"k_max": self.series.k_max, "m_max": self.series.m_max, "b0": self.series.b0}
        return d


# discretization ------------------------------------------------------------------

class Discretization:
    """Circular grids plus lazily built, cached Nyström matrices."""

    _shared: dict = {}

    def __init__(self, resolution: int = 16, boundary_resolution: int | None = None, delta_cap: float = 0.05,
                 correction: str = "exact", series: SeriesConfig | None = None, threads: int | None = None,
                 cache: GridCache | None = None):
        self.resolution = resolution
        self.boundary_resolution = boundary_resolution or max(64, 4 * resolution)
        self.delta_cap = delta_cap
        self.correction = correction
        self.series = series
        self.threads = threads
        if cache is not None:
            self.vol = cache.volume(resolution, 1, True)
            self.bnd = cache.boundary(self.boundary_resolution, delta_cap, 1, True)
        else:
            self.vol = ball_grid(resolution, 1, circular=True)
            self.bnd = boundary_grid(self.boundary_resolution, delta_cap, 1, circular=True)
        self._mats: dict = {}

    @classmethod
    def for_spec(cls, spec: BVPSpec, threads: int | None = None, cache: GridCache | None = None) -> "Discretization":
        key = (spec.resolution, spec.boundary_resolution, spec.delta_cap, spec.correction)
        if spec.series is None and cache is None:
            if key not in cls._shared:
                cls._shared[key] = cls(*key, threads=threads)
            return cls._shared[key]
        return cls(*key, series=spec.series, threads=threads, cache=cache)

    @property
    def W(self) -> np.ndarray:
        return self.vol.weights

    def sigma(self, calibrated: bool = True) -> np.ndarray:
        return self.bnd.calibrated_weights if calibrated else self.bnd.weights

    @property
    def calibration(self) -> float:
        return self.bnd.calibration

    def _base(self, name: str) -> KernelMatrix:
        if name not in self._mats:
            if name == "N":
                spec = KernelSpec("neumann", self.correction, self.series)
                self._mats[name] = nystrom(spec, self.vol, self.vol, self.threads)
            elif name == "G":
                self._mats[name] = nystrom("green", self.vol, self.vol, self.threads)
            elif name == "Nb":
                spec = KernelSpec("neumann", self.correction, self.series)
                self._mats[name] = nystrom(spec, self.bnd, self.vol, self.threads)
            elif name == "P":
                self._mats[name] = nystrom("poisson", self.bnd, self.vol, self.threads)
        return self._mats[name]

    def _iterated(self, name: str, k: int, base: str, start: str) -> KernelMatrix | None:
        if k == 0:
            return None
        key = (name, k)
        if key not in self._mats:
            prev = self._base(start) if k == 1 else self._iterated(name, k - 1, base, start)
            self._mats[key] = prev if k == 1 else iterate(self._base(base), self.W, 2, start=prev)
        return self._mats[key]

    def N(self, k: int):
        """``N_k`` on volume x volume (``None`` for the identity at k = 0)."""
        return self._iterated("N", k, "N", "N")

    def G(self, k: int):
        return self._iterated("G", k, "G", "G")

    def Nb(self, k: int):
        """``N^b_k``: boundary source, volume target; ``N^b_1`` is the Neumann function."""
        return self._iterated("Nb", k, "N", "Nb")

    def P(self, k: int):
        """``P_k``: boundary source, volume target; ``P_1`` is the Poisson kernel."""
        return self._iterated("P", k, "G", "P")

    def apply(self, K: KernelMatrix | None, data, boundary: bool = False, calibrated: bool = True) -> np.ndarray:
        data = np.asarray(data, dtype=float)
        if K is None:
            return data
        w = self.sigma(calibrated) if boundary else self.W
        return K.apply(data, w)

    def vol_values(self, datum) -> np.ndarray:
        return np.broadcast_to(np.asarray(datum(self.vol.nodes), dtype=float), (self.vol.size,)).copy()

    def bnd_values(self, datum) -> np.ndarray:
        return np.broadcast_to(np.asarray(datum(self.bnd.nodes), dtype=float), (self.bnd.size,)).copy()


# reports -----------------------------------------------------------------------

@dataclass
class Condition:
    index: int
    lhs: float
    rhs: float
    abs_residual: float
    rel_residual: float
    scale: float
    passed: bool
    lhs_uncalibrated: float
    rhs_uncalibrated: float
    rel_residual_uncalibrated: float


@dataclass
class SolvabilityReport:
    kind: str
    conditions: list
    tol: float
    calibration: float
    notes: list = field(default_factory=list)

    @property
    def solvable(self) -> bool:
        return all(c.passed for c in self.conditions)

    def summary(self) -> str:
        worst = max((c.rel_residual for c in self.conditions), default=0.0)
        verdict = "solvable" if self.solvable else "not solvable"
        return f"{self.kind}: {verdict}, {len(self.conditions)} conditions, worst relative residual {worst:.3g}"

    def to_dict(self) -> dict:
        return {"kind": self.kind, "solvable": self.solvable, "tol": self.tol, "calibration": self.calibration,
                "conditions": [asdict(c) for c in self.conditions], "notes": list(self.notes)}


def _relative(lhs, rhs, scale):
    diff = abs(lhs - rhs)
    if scale < 1e-12:
        return diff
    return diff / max(abs(rhs), scale)


def _condition(index, parts, g_int, parts_u, g_int_u, tol):
    """``parts`` are the nodal volume contributions of W, ``g_int`` the boundary side."""
    lhs, abs_vol, rhs = parts
    lhs_u, abs_vol_u, rhs_u = parts_u
    scale = abs_vol + abs(g_int)
    rel = _relative(lhs, rhs, scale)
    rel_u = _relative(lhs_u, rhs_u, abs_vol_u + abs(g_int_u))
    return Condition(index, lhs, rhs, abs(lhs - rhs), rel, scale, bool(rel < tol), lhs_u, rhs_u, rel_u)


def _neumann_conditions(disc: Discretization, p: int, vol_terms, g_vals, tol: float, first_order=0):
    """Conditions for the Neumann stage of order ``p``.

    ``vol_terms(k)`` returns ``S_L^k N_k * (interior datum)`` at volume nodes.
    """
    out = []
    for j in range(p):
        by_cal = []
        for cal in (True, False):
            W = vol_terms(p - j - 1).copy()
            for mu in range(j + 1, p):
                k = mu - j
                W -= FLUX * S_L ** k * disc.apply(disc.Nb(k), g_vals[mu], boundary=True, calibrated=cal)
            lhs = float(np.dot(disc.W, W))
            absv = float(np.dot(disc.W, np.abs(W)))
            rhs = FLUX * float(np.dot(disc.sigma(cal), g_vals[j]))
            rhs_abs = FLUX * float(np.dot(disc.sigma(cal), np.abs(g_vals[j])))
            by_cal.append(((lhs, absv, rhs), rhs_abs))
        (pc, gc), (pu, gu) = by_cal
        out.append(_condition(j + first_order, pc, gc, pu, gu, tol))
    return out


# solution fields ------------------------------------------------------------------

@dataclass
class SolutionField:
    values: np.ndarray
    grid: VolumeGrid
    metadata: dict = field(default_factory=dict)

    @property
    def points(self) -> np.ndarray:
        return self.grid.nodes

    def spline(self, values=None) -> RectBivariateSpline:
        g = self.grid
        v = self.values if values is None else values
        k = min(5, len(g.rho) - 1, len(g.psi) - 1)
        return RectBivariateSpline(g.rho, g.psi, np.asarray(v).reshape(len(g.rho), len(g.psi)), kx=k, ky=k,
                                   bbox=[0.0, 1.0, -np.pi / 2, np.pi / 2])

    def evaluate(self, points) -> np.ndarray:
        """Interpolated values at arbitrary points (the solution is circular)."""
        rho, psi = gauge_polar(points)
        return self.spline().ev(rho, psi)

    def shifted(self, c: float) -> "SolutionField":
        return SolutionField(self.values + c, self.grid, dict(self.metadata))


def _meta(spec_like: dict, disc: Discretization, **extra) -> dict:
    meta = {"version": __version__, "resolution": disc.resolution,
            "boundary_resolution": disc.boundary_resolution, "delta_cap": disc.delta_cap,
            "calibration": disc.calibration, "neumann_correction": disc.correction,
            "sign": S_L, "flux": FLUX}
    meta.update(spec_like)
    meta.update(extra)
    return meta


# Neumann problem -------------------------------------------------------------------

def _disc(spec: BVPSpec, disc):
    return disc if disc is not None else Discretization.for_spec(spec)


def _neumann_vol_terms(disc, f_vals):
    return lambda k: S_L ** k * disc.apply(disc.N(k), f_vals)


def check_neumann(spec: BVPSpec, disc: Discretization | None = None) -> SolvabilityReport:
    spec.validate()
    if spec.kind != "neumann":
        raise SpecError("check_neumann expects a Neumann problem")
    disc = _disc(spec, disc)
    f_vals = disc.vol_values(spec.f)
    g_vals = [disc.bnd_values(g) for g in spec.g]
    conds = _neumann_conditions(disc, spec.p, _neumann_vol_terms(disc, f_vals), g_vals, spec.tol)
    return SolvabilityReport("neumann", conds, spec.tol, disc.calibration)


def neumann_direct(disc: Discretization, p: int, f_vals, g_vals) -> np.ndarray:
    u = S_L ** p * disc.apply(disc.N(p), f_vals)
    for mu in range(p):
        u = u - FLUX * S_L ** (mu + 1) * disc.apply(disc.Nb(mu + 1), g_vals[mu], boundary=True)
    return u


def neumann_staged(disc: Discretization, p: int, f_vals, g_vals) -> np.ndarray:
    """Same solution through ``p`` second-order Neumann solves."""
    w = np.asarray(f_vals, dtype=float)
    for j in range(p - 1, -1, -1):
        w = S_L * disc.apply(disc.N(1), w) - FLUX * S_L * disc.apply(disc.Nb(1), g_vals[j], boundary=True)
    return w


def solve_neumann(spec: BVPSpec, disc: Discretization | None = None, force: bool = False,
                  method: str = "direct") -> SolutionField:
    """Representation formula of the order-``p`` Neumann problem at the volume nodes."""
    report = check_neumann(spec, disc)
    if not report.solvable and not force:
        raise UnsolvableError(report)
    disc = _disc(spec, disc)
    f_vals = disc.vol_values(spec.f)
    g_vals = [disc.bnd_values(g) for g in spec.g]
    fn = neumann_direct if method == "direct" else neumann_staged
    u = fn(disc, spec.p, f_vals, g_vals)
    meta = _meta(spec.to_dict(), disc, method=method, forced=bool(force and not report.solvable),
                 report=report.to_dict())
    return SolutionField(u, disc.vol, meta)


# Dirichlet problem ------------------------------------------------------------------

def _poisson_pairing(q: int, strict: bool):
    """Index of the Dirichlet datum multiplying ``P_(s+1)``."""
    return [(q - s - 1) if strict else s for s in range(q)]


def dirichlet_direct(disc: Discretization, q: int, f_vals, h_vals, strict: bool = False) -> np.ndarray:
    w = S_L ** q * disc.apply(disc.G(q), f_vals)
    for s, idx in enumerate(_poisson_pairing(q, strict)):
        w = w + S_L ** s * disc.apply(disc.P(s + 1), h_vals[idx], boundary=True)
    return w


def dirichlet_staged(disc: Discretization, q: int, f_vals, h_vals) -> np.ndarray:
    v = np.asarray(f_vals, dtype=float)
    for s in range(q - 1, -1, -1):
        v = S_L * disc.apply(disc.G(1), v) + disc.apply(disc.P(1), h_vals[s], boundary=True)
    return v


def solve_dirichlet(q: int, f, h, disc: Discretization, strict_paper: bool = False,
                    method: str = "direct") -> SolutionField:
    """Polyharmonic Dirichlet problem ``L_0^q w = f``, ``L_0^s w = h_s`` on the boundary."""
    if q < 1 or len(h) != q:
        raise SpecError("Dirichlet problems need q >= 1 and q boundary data")
    f = _datum(f, 1)
    h = [_datum(x, 1) for x in h]
    f_vals = disc.vol_values(f)
    h_vals = [disc.bnd_values(x) for x in h]
    if method == "direct":
        w = dirichlet_direct(disc, q, f_vals, h_vals, strict_paper)
    else:
        w = dirichlet_staged(disc, q, f_vals, h_vals)
    meta = _meta({"kind": "dirichlet", "q": q, "f": _label(f), "h": [_label(x) for x in h]}, disc,
                 method=method, strict_paper=strict_paper)
    return SolutionField(w, disc.vol, meta)


# mixed problems ------------------------------------------------------------------

def _strict_notes(kind: str, strict: bool) -> list:
    if not strict:
        return []
    if kind == "dirichlet-neumann":
        return ["strict mode: Poisson terms take Neumann data g_(q-r-1) as written in the source formula; "
                "this is not the composition of the two stages"]
    return ["strict mode: Poisson terms take Dirichlet data in reversed order h_(q-s-1)"]


def _nd_vol_terms(disc, q, f_vals, h_vals, strict):
    """``S_L^k N_k * w`` with ``w`` the Dirichlet stage, through fused kernels."""
    def terms(k):
        Nk = disc.N(k)
        out = S_L ** (k + q) * disc.apply(mixed_kernels(disc.G(q), Nk, disc.W), f_vals)
        for s, idx in enumerate(_poisson_pairing(q, strict)):
            out = out + S_L ** (k + s) * disc.apply(mixed_kernels(disc.P(s + 1), Nk, disc.W), h_vals[idx],
                                                    boundary=True)
        return out
    return terms


def check_and_solve_nd(spec: BVPSpec, disc: Discretization | None = None, force: bool = False,
                       method: str = "direct"):
    """Neumann-Dirichlet problem: ``L_0^p u = w`` with Neumann data ``g``,
    ``L_0^q w = f`` with Dirichlet data ``h``."""
    spec.validate()
    if spec.kind != "neumann-dirichlet":
        raise SpecError("expected a neumann-dirichlet problem")
    disc = _disc(spec, disc)
    p, q, strict = spec.p, spec.q, spec.strict_paper
    f_vals = disc.vol_values(spec.f)
    g_vals = [disc.bnd_values(x) for x in spec.g]
    h_vals = [disc.bnd_values(x) for x in spec.h]
    conds = _neumann_conditions(disc, p, _nd_vol_terms(disc, q, f_vals, h_vals, strict), g_vals, spec.tol)
    report = SolvabilityReport("neumann-dirichlet", conds, spec.tol, disc.calibration,
                               _strict_notes(spec.kind, strict))
    if not report.solvable and not force:
        raise UnsolvableError(report)
    if method == "direct":
        u = _nd_vol_terms(disc, q, f_vals, h_vals, strict)(p)
        for mu in range(p):
            u = u - FLUX * S_L ** (mu + 1) * disc.apply(disc.Nb(mu + 1), g_vals[mu], boundary=True)
    else:
        w = dirichlet_staged(disc, q, f_vals, h_vals)
        u = neumann_staged(disc, p, w, g_vals)
    meta = _meta(spec.to_dict(), disc, method=method, forced=bool(force and not report.solvable),
                 report=report.to_dict())
    return report, SolutionField(u, disc.vol, meta)


def check_and_solve_dn(spec: BVPSpec, disc: Discretization | None = None, force: bool = False,
                       method: str = "direct"):
    """Dirichlet-Neumann problem: ``L_0^q u = w`` with Dirichlet data ``h``,
    ``L_0^p w = f`` with Neumann data ``g``."""
    spec.validate()
    if spec.kind != "dirichlet-neumann":
        raise SpecError("expected a dirichlet-neumann problem")
    disc = _disc(spec, disc)
    p, q, strict = spec.p, spec.q, spec.strict_paper
    f_vals = disc.vol_values(spec.f)
    g_vals = [disc.bnd_values(x) for x in spec.g]
    h_vals = [disc.bnd_values(x) for x in spec.h]
    conds = _neumann_conditions(disc, p, _neumann_vol_terms(disc, f_vals), g_vals, spec.tol)
    report = SolvabilityReport("dirichlet-neumann", conds, spec.tol, disc.calibration,
                               _strict_notes(spec.kind, strict))
    if strict and q > p:
        raise SpecError("strict mode pairs Poisson terms with Neumann data and needs q <= p")
    if not report.solvable and not force:
        raise UnsolvableError(report)
    poisson_data = [g_vals[q - r - 1] for r in range(q)] if strict else h_vals
    if method == "direct":
        Gq = disc.G(q)
        u = S_L ** (p + q) * disc.apply(mixed_kernels(disc.N(p), Gq, disc.W), f_vals)
        for mu in range(p):
            K = mixed_kernels(disc.Nb(mu + 1), Gq, disc.W)
            u = u - FLUX * S_L ** (q + mu + 1) * disc.apply(K, g_vals[mu], boundary=True)
        for r in range(q):
            u = u + S_L ** r * disc.apply(disc.P(r + 1), poisson_data[r], boundary=True)
    else:
        w = neumann_staged(disc, p, f_vals, g_vals)
        u = dirichlet_staged(disc, q, w, poisson_data)
    meta = _meta(spec.to_dict(), disc, method=method, forced=bool(force and not report.solvable),
                 report=report.to_dict())
    return report, SolutionField(u, disc.vol, meta)


def check(spec: BVPSpec, disc: Discretization | None = None) -> SolvabilityReport:
    """Solvability report for any problem kind (Dirichlet problems have no conditions)."""
    spec.validate()
    if spec.kind == "neumann":
        return check_neumann(spec, disc)
    if spec.kind == "dirichlet":
        disc = _disc(spec, disc)
        return SolvabilityReport("dirichlet", [], spec.tol, disc.calibration)
    fn = check_and_solve_nd if spec.kind == "neumann-dirichlet" else check_and_solve_dn
    try:
        return fn(spec, disc, force=True)[0]
    except UnsolvableError as exc:  # pragma: no cover - force=True never raises
        return exc.report


def solve(spec: BVPSpec, disc: Discretization | None = None, force: bool = False, method: str = "direct"):
    """Dispatch on the problem kind; returns ``(report, field)``."""
    spec.validate()
    disc = _disc(spec, disc)
    if spec.kind == "neumann":
        fld = solve_neumann(spec, disc, force, method)
        return check_neumann(spec, disc), fld
    if spec.kind == "dirichlet":
        fld = solve_dirichlet(spec.q, spec.f, spec.h, disc, spec.strict_paper, method)
        return SolvabilityReport("dirichlet", [], spec.tol, disc.calibration), fld
    if spec.kind == "neumann-dirichlet":
        return check_and_solve_nd(spec, disc, force, method)
    return check_and_solve_dn(spec, disc, force, method)


# verification -------------------------------------------------------------------

def polar_derivatives(spl: RectBivariateSpline, rho, psi):
    return {
        "u": spl.ev(rho, psi),
        "r": spl.ev(rho, psi, dx=1), "p": spl.ev(rho, psi, dy=1),
        "rr": spl.ev(rho, psi, dx=2), "pp": spl.ev(rho, psi, dy=2),
    }


def sublaplacian_polar(spl: RectBivariateSpline, rho, psi, n: int = 1):
    """``L_0`` of a circular function given as a spline in gauge polar ``(rho, psi)``."""
    d = polar_derivatives(spl, rho, psi)
    c, s = np.cos(psi), np.sin(psi)
    return (c / 4 * (d["rr"] + (2 * n + 1) * d["r"] / rho) - n * s * d["p"] / rho ** 2
            + c * d["pp"] / rho ** 2)


def horizontal_gradient_polar(spl: RectBivariateSpline, points):
    """Horizontal gradient ``(X U, Y U)`` of a circular spline at H_1 points."""
    points = np.asarray(points, dtype=float)
    rho, psi = gauge_polar(points)
    Ur, Up = spl.ev(rho, psi, dx=1), spl.ev(rho, psi, dy=1)
    Urr = Ur / (2 * rho)
    r2 = rho ** 2
    Us = np.cos(psi) * Urr - np.sin(psi) * Up / r2
    Ut = np.sin(psi) * Urr + np.cos(psi) * Up / r2
    x, y = points[..., 0], points[..., 1]
    return np.stack([2 * x * Us + 2 * y * Ut, 2 * y * Us - 2 * x * Ut], -1)


def _unit_normal(points):
    from .kernels import _boundary_normal
    return _boundary_normal(points)


def iterated_sublaplacian(fld: SolutionField, k: int) -> SolutionField:
    """``L_0^k u`` re-sampled at the grid nodes through repeated spline fits."""
    cur = fld.values
    g = fld.grid
    for _ in range(k):
        cur = sublaplacian_polar(fld.spline(cur), g.rho_nodes, g.psi_nodes)
    return SolutionField(cur, g, fld.metadata)


def interior_probes(count: int = 64, seed: int = 0, rho_max: float = 0.7):
    rng = np.random.default_rng(seed)
    rho = rng.uniform(0.15, rho_max, count)
    psi = rng.uniform(-1.3, 1.3, count)
    phi = rng.uniform(0, 2 * np.pi, count)
    r = rho * np.sqrt(np.cos(psi))
    return np.stack([r * np.cos(phi), r * np.sin(phi), rho ** 2 * np.sin(psi)], -1)


def _residual(values, reference) -> dict:
    values, reference = np.asarray(values, float), np.asarray(reference, float)
    diff = values - reference
    ref = float(np.max(np.abs(reference))) if reference.size else 0.0
    sup = float(np.max(np.abs(diff))) if diff.size else 0.0
    l2 = float(np.sqrt(np.mean(diff ** 2))) if diff.size else 0.0
    rel = sup / ref if ref >= 1e-12 else sup
    return {"sup": sup, "l2": l2, "reference_sup": ref, "relative_sup": rel}


def verify(fld: SolutionField, spec: BVPSpec, disc: Discretization | None = None, probes: int = 64,
           seed: int = 0) -> dict:
    """Residuals of the interior equation and each boundary condition.

    Derivatives come from tensor splines of the nodal values in
    ``(rho, psi)``; boundary values use the spline's extension to ``rho = 1``.
    """
    disc = _disc(spec, disc)
    total = spec.p + spec.q
    pts = interior_probes(probes, seed)
    rho, psi = gauge_polar(pts)
    lap = iterated_sublaplacian(fld, total - 1) if total > 1 else fld
    Lu = sublaplacian_polar(lap.spline(), rho, psi)
    report = {"interior": _residual(Lu, spec.f(pts)), "boundary": {}, "probes": probes, "seed": seed}
    bpts = disc.bnd.nodes
    bpsi = disc.bnd.psi_nodes
    nu = _unit_normal(bpts)

    def value_at_boundary(order):
        fo = iterated_sublaplacian(fld, order) if order else fld
        return fo.spline().ev(np.ones_like(bpsi), bpsi)

    def normal_at_boundary(order):
        fo = iterated_sublaplacian(fld, order) if order else fld
        return np.sum(horizontal_gradient_polar(fo.spline(), bpts) * nu, axis=-1)

    if spec.kind == "neumann":
        for j, g in enumerate(spec.g):
            report["boundary"][f"g{j}"] = _residual(normal_at_boundary(j), g(bpts))
    elif spec.kind == "dirichlet":
        for s, h in enumerate(spec.h):
            report["boundary"][f"h{s}"] = _residual(value_at_boundary(s), h(bpts))
    elif spec.kind == "neumann-dirichlet":
        for j, g in enumerate(spec.g):
            report["boundary"][f"g{j}"] = _residual(normal_at_boundary(j), g(bpts))
        for s, h in enumerate(spec.h):
            report["boundary"][f"h{s}"] = _residual(value_at_boundary(spec.p + s), h(bpts))
    else:
        for r, h in enumerate(spec.h):
            report["boundary"][f"h{r}"] = _residual(value_at_boundary(r), h(bpts))
        for j, g in enumerate(spec.g):
            report["boundary"][f"g{j}"] = _residual(normal_at_boundary(spec.q + j), g(bpts))
    return report


def fit_constant(values, reference) -> float:
    """Least-squares constant ``c`` minimizing ``|values + c - reference|``."""
    return float(np.mean(np.asarray(reference) - np.asarray(values)))
