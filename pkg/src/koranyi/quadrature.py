"""Quadrature on the Korányi ball and its boundary, and Nyström matrices.

Two grid families are provided.

* Full grids cover the ball in gauge polar coordinates ``(rho, psi, omega)``
  with ``|z| = rho sqrt(cos psi)``, ``t = rho^2 sin psi`` and ``omega`` on the
  unit sphere of C^n.
* Circular grids keep only ``(rho, psi)`` and fold the sphere into the
  weights.  They integrate circular functions exactly like the full grid and
  are what the solver uses: dense matrices on a 32 x 32 circular grid are
  cheap, while the full 32^3 grid is not.

Kernel matrices are stored as ``[source node, target node]``; applying one
to data means ``K.T @ (w * data)``.
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import gamma

from . import circular as _circ
from . import kernels as _k
from .harmonics import SeriesConfig, h_series


class NonFiniteError(ValueError):
    """An integrand or kernel produced a non-finite value at a node."""


def sphere_area(n: int) -> float:
    """Area of the unit sphere of C^n = R^{2n}."""
    return 2.0 * np.pi ** n / gamma(n)


def ball_volume(n: int) -> float:
    """Lebesgue volume of the Korányi unit ball (``pi^2/2`` for n = 1)."""
    c = np.sqrt(np.pi) * gamma(n / 2) / gamma((n + 1) / 2)
    return sphere_area(n) * c / (2 * n + 2)


def _midpoints(a: float, b: float, m: int) -> np.ndarray:
    return a + (np.arange(m) + 0.5) * (b - a) / m


def _sphere_rule(n: int, m: int):
    """Midpoint rule on the unit sphere of R^{2n} in hyperspherical angles."""
    d = 2 * n
    if d == 2:
        phi = _midpoints(0.0, 2 * np.pi, m)
        return np.stack([np.cos(phi), np.sin(phi)], -1), np.full(m, 2 * np.pi / m)
    axes = [_midpoints(0.0, np.pi, m) for _ in range(d - 2)] + [_midpoints(0.0, 2 * np.pi, m)]
    mesh = np.meshgrid(*axes, indexing="ij")
    ang = np.stack([a.ravel() for a in mesh], -1)
    w = np.full(len(ang), (np.pi / m) ** (d - 2) * (2 * np.pi / m))
    pts = np.ones((len(ang), d))
    sprod = np.ones(len(ang))
    for k in range(d - 1):
        pts[:, k] = sprod * np.cos(ang[:, k])
        if k < d - 2:
            w *= np.sin(ang[:, k]) ** (d - 2 - k)
        sprod = sprod * np.sin(ang[:, k])
    pts[:, d - 1] = sprod
    # reorder from (w1..w2n) to (x1..xn, y1..yn) with z_j = w_{2j-1} + i w_{2j}
    order = list(range(0, d, 2)) + list(range(1, d, 2))
    return pts[:, order], w


def _points_from(rho, psi, omega, n):
    r = rho * np.sqrt(np.cos(psi))
    out = np.empty(rho.shape + (2 * n + 1,))
    out[..., :2 * n] = r[..., None] * omega
    out[..., 2 * n] = rho ** 2 * np.sin(psi)
    return out


def _unit_direction(n: int, m: int = 1) -> np.ndarray:
    om = np.zeros((m, 2 * n))
    om[:, 0] = 1.0
    return om


@dataclass
class VolumeGrid:
    nodes: np.ndarray
    weights: np.ndarray
    n: int
    resolution: int
    circular: bool
    rho: np.ndarray
    psi: np.ndarray
    drho: float
    dpsi: float
    rho_index: np.ndarray = field(repr=False)
    psi_index: np.ndarray = field(repr=False)

    @property
    def key(self) -> str:
        return f"volume:n={self.n}:R={self.resolution}:{'circular' if self.circular else 'full'}"

    @property
    def size(self) -> int:
        return len(self.weights)

    @property
    def rho_nodes(self) -> np.ndarray:
        return self.rho[self.rho_index]

    @property
    def psi_nodes(self) -> np.ndarray:
        return self.psi[self.psi_index]


@dataclass
class BoundaryGrid:
    nodes: np.ndarray
    weights: np.ndarray
    n: int
    resolution: int
    circular: bool
    delta_cap: float
    psi: np.ndarray
    psi_cap: float
    calibration: float = 1.0
    psi_index: np.ndarray = field(default=None, repr=False)

    @property
    def key(self) -> str:
        kind = "circular" if self.circular else "full"
        return f"boundary:n={self.n}:R={self.resolution}:cap={self.delta_cap!r}:{kind}"

    @property
    def size(self) -> int:
        return len(self.weights)

    @property
    def calibrated_weights(self) -> np.ndarray:
        return self.calibration * self.weights

    @property
    def psi_nodes(self) -> np.ndarray:
        return self.psi[self.psi_index]


def ball_grid(resolution: int, n: int = 1, circular: bool = False) -> VolumeGrid:
    """Midpoint tensor grid on the Korányi ball.

    Nodes sit at cell midpoints in ``rho`` and ``psi`` (and in the sphere
    angles for the full grid).  The midpoint rule in ``rho`` is second order,
    so the total weight converges to the ball volume like ``resolution^-2``.
    """
    if resolution < 4:
        raise ValueError("resolution must be >= 4")
    R = resolution
    rho = _midpoints(0.0, 1.0, R)
    psi = _midpoints(-np.pi / 2, np.pi / 2, R)
    drho, dpsi = 1.0 / R, np.pi / R
    ri, pj = np.meshgrid(np.arange(R), np.arange(R), indexing="ij")
    ri, pj = ri.ravel(), pj.ravel()
    base_w = rho[ri] ** (2 * n + 1) * np.cos(psi[pj]) ** (n - 1) * drho * dpsi
    if circular:
        nodes = _points_from(rho[ri], psi[pj], _unit_direction(n, len(ri)), n)
        weights = base_w * sphere_area(n)
    else:
        omega, ow = _sphere_rule(n, R)
        m = len(ow)
        nodes = _points_from(np.repeat(rho[ri], m), np.repeat(psi[pj], m), np.tile(omega, (len(ri), 1)), n)
        weights = np.repeat(base_w, m) * np.tile(ow, len(ri))
        ri, pj = np.repeat(ri, m), np.repeat(pj, m)
    return VolumeGrid(nodes, weights, n, R, circular, rho, psi, drho, dpsi, ri, pj)


def cap_psi(delta_cap: float) -> float:
    """Latitude bound leaving out gauge balls of radius ``delta_cap`` around ``[0, +-1]``."""
    if not delta_cap > 0:
        raise ValueError("delta_cap must be positive")
    return float(np.arcsin(max(-1.0, 1.0 - 0.5 * delta_cap ** 4)))


def boundary_grid(resolution: int, delta_cap: float = 0.05, n: int = 1, circular: bool = False,
                  calibrate: bool = True) -> BoundaryGrid:
    """Midpoint grid on the unit sphere minus the characteristic caps.

    The weights discretize the horizontal perimeter measure
    ``dsigma = cos(psi)^{n-1/2} dpsi domega``.  With ``calibrate`` the grid
    also carries the scalar that makes the Poisson mass at the centre one.
    """
    if resolution < 4:
        raise ValueError("resolution must be >= 4")
    R = resolution
    pc = cap_psi(delta_cap)
    psi = _midpoints(-pc, pc, R)
    dpsi = 2 * pc / R
    base_w = np.cos(psi) ** (n - 0.5) * dpsi
    if circular:
        nodes = _points_from(np.ones(R), psi, _unit_direction(n, R), n)
        weights = base_w * sphere_area(n)
        pj = np.arange(R)
    else:
        omega, ow = _sphere_rule(n, R)
        m = len(ow)
        nodes = _points_from(np.ones(R * m), np.repeat(psi, m), np.tile(omega, (R, 1)), n)
        weights = np.repeat(base_w, m) * np.tile(ow, R)
        pj = np.repeat(np.arange(R), m)
    grid = BoundaryGrid(nodes, weights, n, R, circular, float(delta_cap), psi, pc, 1.0, pj)
    if calibrate:
        grid = replace(grid, calibration=calibration_constant(grid))
    return grid


def calibration_constant(grid: BoundaryGrid) -> float:
    """Scalar ``c`` with ``c * sum_k P(e, y_k) sigma_k = 1``."""
    e = np.zeros(2 * grid.n + 1)
    P = _k.poisson(e, grid.nodes, circular=grid.n == 1, method="auto") if grid.n == 1 \
        else _k.poisson(e, grid.nodes, circular=False)
    return float(1.0 / np.sum(P * grid.weights))


def _values(f, grid) -> np.ndarray:
    vals = np.asarray(f(grid.nodes) if callable(f) else f, dtype=float)
    vals = np.broadcast_to(vals, (grid.size,))
    bad = np.flatnonzero(~np.isfinite(vals))
    if bad.size:
        i = int(bad[0])
        raise NonFiniteError(f"non-finite integrand at node {i} {grid.nodes[i].tolist()}")
    return vals


def integrate_volume(f, grid: VolumeGrid) -> float:
    """Weighted sum of ``f`` (callable or nodal values) over a volume grid."""
    return float(np.dot(grid.weights, _values(f, grid)))


def integrate_boundary(f, grid: BoundaryGrid, calibrated: bool = True) -> float:
    w = grid.calibrated_weights if calibrated else grid.weights
    return float(np.dot(w, _values(f, grid)))


# kernel matrices ---------------------------------------------------------------

@dataclass
class KernelMatrix:
    values: np.ndarray
    source: str
    target: str
    kind: str
    singular_diagonal: bool = False

    @property
    def shape(self):
        return self.values.shape

    def apply(self, data, weights) -> np.ndarray:
        """``u(target) = sum_source K(source, target) w(source) data(source)``."""
        return self.values.T @ (np.asarray(weights) * np.asarray(data))


@dataclass(frozen=True)
class KernelSpec:
    """Which kernel to discretize and how."""

    kind: str
    correction: str = "exact"
    series: SeriesConfig | None = None
    circular: bool = True

    def __post_init__(self):
        if self.kind not in ("fundamental", "green", "poisson", "neumann"):
            raise ValueError(f"unknown kernel {self.kind!r}")


def _as_spec(kernel) -> KernelSpec:
    return kernel if isinstance(kernel, KernelSpec) else KernelSpec(kernel)


def reduced_kernel(spec: KernelSpec):
    """Kernel on meridian coordinates ``(s_src, t_src, s_dst, t_dst)`` (H_1)."""
    if spec.kind != "neumann":
        return _circ.KERNELS[spec.kind]
    if spec.correction == "exact":
        return _circ.neumann_bar
    cfg = spec.series if spec.series is not None else SeriesConfig()

    def kern(se, te, sx, tx):
        base = _circ.fundamental_bar(se, te, sx, tx) + _circ.kelvin_image_bar(se, te, sx, tx)
        if cfg.k_max == 0 or cfg.m_max == 0:
            return base + cfg.b0
        eta = np.stack(np.broadcast_arrays(np.sqrt(se), 0 * se, te), -1)
        xi = np.stack(np.broadcast_arrays(np.sqrt(sx), 0 * sx, tx), -1)
        return base + h_series(eta, xi, cfg)

    return kern


def _pointwise_kernel(spec: KernelSpec):
    if spec.kind == "fundamental":
        return _k.fundamental
    if spec.kind == "green":
        return lambda e, x: _k.green(e, x, circular=spec.circular)
    if spec.kind == "poisson":
        return lambda e, x: _k.poisson(e, x, circular=spec.circular)
    return lambda e, x: _k.neumann(e, x, series=spec.series, correction=spec.correction)


def _chunks(m: int, cols: int, budget: int = 4_000_000):
    step = max(1, budget // max(cols * 8, 1))
    return [(a, min(m, a + step)) for a in range(0, m, step)]


def _fill(fn, rows: int, cols: int, threads: int | None, per_entry: int = 1) -> np.ndarray:
    out = np.empty((rows, cols))
    parts = _chunks(rows, cols * per_entry)

    def work(ab):
        a, b = ab
        out[a:b] = fn(a, b)

    if threads and threads > 1 and len(parts) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(work, parts))
    else:
        for ab in parts:
            work(ab)
    return out


_GX, _GW = np.polynomial.legendre.leggauss(10)


def _duffy_rule(order: int):
    if order == 10:
        x, w = _GX, _GW
    else:
        x, w = np.polynomial.legendre.leggauss(order)
    u = 0.5 * (x + 1)
    wu = 0.5 * w
    U, V = np.meshgrid(u, u, indexing="ij")
    return U.ravel(), V.ravel(), np.outer(wu, wu).ravel()


def cell_integrals(kern, grid: VolumeGrid, cells, apex_rho, apex_psi, order: int = 10) -> np.ndarray:
    """``int_cell K(zeta, apex) dv(zeta)`` on circular-grid cells (H_1).

    Each cell is split into four triangles sharing the apex and mapped with a
    Duffy transform, which cancels the logarithmic or inverse-distance
    singularity of the ring kernels at the apex.
    """
    cells = np.asarray(cells)
    apex_rho, apex_psi = np.asarray(apex_rho, float), np.asarray(apex_psi, float)
    rc, pc = grid.rho_nodes[cells], grid.psi_nodes[cells]
    dr, dp = grid.drho, grid.dpsi
    U, V, WU = _duffy_rule(order)
    corners = [(-0.5, -0.5), (0.5, -0.5), (0.5, 0.5), (-0.5, 0.5)]
    se, te = apex_rho ** 2 * np.cos(apex_psi), apex_rho ** 2 * np.sin(apex_psi)
    total = np.zeros(len(cells))
    for i in range(4):
        ar, ap = rc + corners[i][0] * dr, pc + corners[i][1] * dp
        br, bp = rc + corners[(i + 1) % 4][0] * dr, pc + corners[(i + 1) % 4][1] * dp
        oa_r, oa_p = ar - apex_rho, ap - apex_psi
        ab_r, ab_p = br - ar, bp - ap
        det = np.abs(oa_r * ab_p - oa_p * ab_r)
        r = apex_rho[:, None] + U * oa_r[:, None] + (U * V) * ab_r[:, None]
        p = apex_psi[:, None] + U * oa_p[:, None] + (U * V) * ab_p[:, None]
        jac = U * det[:, None] * sphere_area(1) * r ** 3
        s, t = r ** 2 * np.cos(p), r ** 2 * np.sin(p)
        with np.errstate(divide="ignore", invalid="ignore"):
            vals = kern(s, t, se[:, None], te[:, None])
        vals = np.where(jac * WU > 0, vals, 0.0)
        total += np.sum(vals * jac * WU, axis=-1)
    return total


def _self_cells_circular(kern, grid: VolumeGrid, order: int) -> np.ndarray:
    m = grid.size
    out = np.empty(m)
    step = 64
    for a in range(0, m, step):
        idx = np.arange(a, min(m, a + step))
        out[idx] = cell_integrals(kern, grid, idx, grid.rho_nodes[idx], grid.psi_nodes[idx], order)
    return out / grid.weights


def cap_mean(n: int, volume: float) -> float:
    """Mean of ``a0 N^{-2n}`` over the gauge ball of the given volume."""
    r = (volume / ball_volume(n)) ** (1.0 / (2 * n + 2))
    return _k.a0(n) * (n + 1) * r ** (-2 * n)


def nystrom(kernel, src, dst, threads: int | None = None, cell_order: int = 10) -> KernelMatrix:
    """Dense Nyström matrix ``values[a, b] = K(src_a, dst_b)``.

    For the Poisson kernel the source is the boundary grid and the entry is
    ``P(dst_b, src_a)``.  When ``src is dst`` the singular diagonal is
    replaced by the cell average of the kernel: exactly (Duffy rule) on
    circular grids, and by the gauge-ball cap mean of ``a0 N^{-2n}`` plus the
    smooth remainder on full grids.
    """
    spec = _as_spec(kernel)
    if src.n != dst.n:
        raise ValueError("grids belong to different dimensions")
    if spec.kind == "poisson" and not isinstance(src, BoundaryGrid):
        raise ValueError("the Poisson kernel integrates over a boundary source grid")
    same = src is dst
    circ = getattr(src, "circular", False) and getattr(dst, "circular", False)
    if circ:
        if src.n != 1:
            raise ValueError("circular Nyström matrices need the closed-form kernels of n = 1")
        kern = reduced_kernel(spec)
        ss, ts = _circ.meridian(src.nodes)
        sd, td = _circ.meridian(dst.nodes)
        per = 96 if spec.kind == "neumann" else 1
        if spec.kind == "poisson":
            fn = lambda a, b: kern(sd[None, :], td[None, :], ss[a:b, None], ts[a:b, None])
        else:
            fn = lambda a, b: kern(ss[a:b, None], ts[a:b, None], sd[None, :], td[None, :])
        with np.errstate(divide="ignore", invalid="ignore"):
            vals = _fill(fn, src.size, dst.size, threads, per)
        if same:
            vals[np.diag_indices(src.size)] = _self_cells_circular(kern, src, cell_order)
    else:
        if spec.circular and spec.kind in ("green", "neumann") and isinstance(dst, VolumeGrid):
            raise ValueError("circularized kernels are singular on whole circles; use circular grids")
        pk = _pointwise_kernel(spec)
        S, D = src.nodes, dst.nodes
        if spec.kind == "poisson":
            fn = lambda a, b: pk(D[None, :, :], S[a:b, None, :])
        else:
            fn = lambda a, b: pk(S[a:b, None, :], D[None, :, :])
        if same:
            # move coincident pairs off the pole; the diagonal is overwritten below
            def fn(a, b, _pk=pk):
                e, x = S[a:b, None, :], D[None, :, :]
                x = np.where(np.all(e == x, axis=-1)[..., None], x + 0.5, x)
                return _pk(e, x)
        vals = _fill(fn, src.size, dst.size, threads, 2 * src.n + 1)
        if same:
            n = src.n
            diag = np.array([cap_mean(n, w) for w in src.weights])
            if spec.kind == "green":
                diag = diag - _k.kelvin_image(S, S)
            elif spec.kind != "fundamental":
                raise ValueError(f"no self-cell rule for {spec.kind!r} on full grids")
            vals[np.diag_indices(src.size)] = diag
    bad = np.argwhere(~np.isfinite(vals))
    if bad.size:
        a, b = bad[0]
        raise NonFiniteError(f"kernel pole between distinct nodes {int(a)} and {int(b)}")
    return KernelMatrix(vals, src.key, dst.key, spec.kind, same)


def locate_cell(grid: VolumeGrid, rho: float, psi: float):
    """Index of the circular-grid cell containing ``(rho, psi)``, or None."""
    i = int(np.floor(rho / grid.drho))
    j = int(np.floor((psi + np.pi / 2) / grid.dpsi))
    if not (0 <= i < len(grid.rho) and 0 <= j < len(grid.psi)):
        return None
    return i * len(grid.psi) + j


def gauge_polar(p):
    """``(rho, psi)`` gauge polar coordinates of point arrays."""
    p = np.asarray(p, dtype=float)
    n = (p.shape[-1] - 1) // 2
    r2 = np.sum(p[..., :2 * n] ** 2, axis=-1)
    t = p[..., 2 * n]
    return (r2 * r2 + t * t) ** 0.25, np.arctan2(t, r2)


def kernel_row(kernel, point, grid: VolumeGrid, cell_order: int = 10) -> np.ndarray:
    """``K(zeta_k, point)`` for every node of a circular grid.

    The entry of the cell containing ``point`` is replaced by the cell
    integral divided by the cell weight, so that ``row @ (w * f)`` stays
    accurate for off-grid points.
    """
    spec = _as_spec(kernel)
    if not grid.circular or grid.n != 1:
        raise ValueError("kernel_row works on circular H_1 grids")
    kern = reduced_kernel(spec)
    s, t = _circ.meridian(grid.nodes)
    sp, tp = _circ.meridian(np.asarray(point, dtype=float))
    with np.errstate(divide="ignore", invalid="ignore"):
        row = kern(s, t, sp, tp)
    rho, psi = gauge_polar(point)
    c = locate_cell(grid, float(rho), float(psi))
    if c is not None:
        row[c] = cell_integrals(kern, grid, [c], [rho], [psi], cell_order)[0] / grid.weights[c]
    return row


def iterate(base: KernelMatrix, weights, k: int, start: KernelMatrix | None = None) -> KernelMatrix:
    """``K_k = K_{k-1} diag(w) K_base`` with ``K_1 = start`` (``base`` by default)."""
    if k < 1:
        raise ValueError("iteration order starts at 1")
    w = np.asarray(weights)
    cur = base if start is None else start
    if cur.values.shape[1] != len(w) or base.values.shape[0] != len(w):
        raise ValueError("dimension mismatch between kernel matrices and weights")
    vals = cur.values
    for _ in range(k - 1):
        vals = (vals * w[None, :]) @ base.values
    return KernelMatrix(vals, cur.source, base.target, f"{cur.kind}^{k}", False)


def identity_kernel(grid) -> KernelMatrix:
    """Kernel of the identity operator on a grid: ``diag(1/w)``."""
    return KernelMatrix(np.diag(1.0 / grid.weights), grid.key, grid.key, "identity")


def mixed_kernels(first: KernelMatrix | None, second: KernelMatrix | None, weights) -> KernelMatrix:
    """``first diag(w) second``: apply ``first``, then ``second``.

    ``None`` stands for the identity kernel (order zero).
    """
    if first is None:
        return second
    if second is None:
        return first
    w = np.asarray(weights)
    if first.values.shape[1] != len(w) or second.values.shape[0] != len(w):
        raise ValueError("dimension mismatch between kernel matrices and weights")
    vals = (first.values * w[None, :]) @ second.values
    return KernelMatrix(vals, first.source, second.target, f"{first.kind}*{second.kind}")


# serialization -------------------------------------------------------------------

GRID_FORMAT = "koranyi-grid/1"


def grid_to_dict(grid) -> dict:
    d = {
        "format": GRID_FORMAT,
        "kind": "volume" if isinstance(grid, VolumeGrid) else "boundary",
        "n": grid.n,
        "resolution": grid.resolution,
        "circular": grid.circular,
        "nodes": grid.nodes.tolist(),
        "weights": grid.weights.tolist(),
    }
    if isinstance(grid, BoundaryGrid):
        d["delta_cap"] = grid.delta_cap
        d["calibration"] = grid.calibration
    return d


def grid_from_dict(d: dict):
    if d.get("format") != GRID_FORMAT:
        raise ValueError("not a serialized grid")
    if d["kind"] == "volume":
        g = ball_grid(d["resolution"], d["n"], d["circular"])
    else:
        g = boundary_grid(d["resolution"], d["delta_cap"], d["n"], d["circular"], calibrate=False)
        g = replace(g, calibration=float(d["calibration"]))
    nodes, weights = np.asarray(d["nodes"]), np.asarray(d["weights"])
    if nodes.shape != g.nodes.shape or not np.allclose(nodes, g.nodes, rtol=0, atol=1e-12):
        raise ValueError("serialized grid nodes do not match their descriptor")
    return replace(g, nodes=nodes, weights=weights)


def save_grid(grid, path) -> None:
    with open(path, "w") as fh:
        json.dump(grid_to_dict(grid), fh, sort_keys=True)


def load_grid(path):
    with open(path) as fh:
        return grid_from_dict(json.load(fh))


class GridCache:
    """JSON store of grids and calibration constants keyed by grid descriptor."""

    def __init__(self, path):
        self.path = path
        self.entries: dict = {}
        if path and os.path.exists(path):
            with open(path) as fh:
                self.entries = json.load(fh).get("grids", {})

    def save(self) -> None:
        if self.path:
            with open(self.path, "w") as fh:
                json.dump({"format": GRID_FORMAT, "grids": self.entries}, fh, sort_keys=True)

    def volume(self, resolution: int, n: int = 1, circular: bool = True) -> VolumeGrid:
        key = f"volume:n={n}:R={resolution}:{'circular' if circular else 'full'}"
        if key in self.entries:
            return grid_from_dict(self.entries[key])
        g = ball_grid(resolution, n, circular)
        self.entries[key] = grid_to_dict(g)
        return g

    def boundary(self, resolution: int, delta_cap: float, n: int = 1, circular: bool = True) -> BoundaryGrid:
        probe = boundary_grid(resolution, delta_cap, n, circular, calibrate=False)
        if probe.key in self.entries:
            return grid_from_dict(self.entries[probe.key])
        g = replace(probe, calibration=calibration_constant(probe))
        self.entries[g.key] = grid_to_dict(g)
        return g
