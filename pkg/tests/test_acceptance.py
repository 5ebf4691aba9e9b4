"""Acceptance criteria 1-12 at their stated tolerances (n = 1, resolutions <= 32).

Each test records one PASS/FAIL line; the lines are printed as they happen
and collected again in the terminal summary.
"""

import numpy as np

from koranyi import kernels as K
from koranyi import solver as S
from koranyi.calculus import Field, horizontal_gradient, normal_derivative, sublaplacian, sublaplacian_from_jet
from koranyi.expr import parse
from koranyi.group import (circular_average, dilate, identity, inverse, invert, kelvin, koranyi_norm, multiply,
                           rotate)
from koranyi.quadrature import ball_grid, boundary_grid, kernel_row

from conftest import ball_points, ball_points_on
from oracles import NEUMANN, meridian_of, nested_composition, point_of

RESULTS: dict = {}
VOL = np.pi ** 2 / 2
U0 = parse("(1 - gauge^4)^2")


def record(number, title, passed, detail):
    line = f"criterion {number:2d} {'PASS' if passed else 'FAIL'}: {title} ({detail})"
    RESULTS[number] = line
    print(line)
    assert passed, line


def relerr(a, b):
    a, b = np.asarray(a), np.asarray(b)
    return float(np.max(np.abs(a - b) / np.maximum(1.0, np.abs(b))))


def manufactured_neumann(resolution):
    f = Field(lambda P: sublaplacian(U0, P), name="L0 u0")
    g = Field(lambda P: normal_derivative(U0, P), name="dn u0")
    return S.BVPSpec("neumann", p=1, f=f, g=[g], resolution=resolution)


def test_c01_algebra():
    rng = np.random.default_rng(1)
    p, q, r = rng.normal(size=(3, 1000, 3))
    s = rng.uniform(0.1, 10, 1000)
    e = identity(1)
    errs = {
        "assoc": relerr(multiply(multiply(p, q), r), multiply(p, multiply(q, r))),
        "identity": relerr(multiply(p, e), p) + relerr(multiply(e, p), p),
        "inverse": relerr(multiply(p, inverse(p)), np.zeros_like(p)),
        "dilation": max(abs(koranyi_norm(dilate(si, pi)) / (si * koranyi_norm(pi)) - 1) for si, pi in zip(s, p)),
        "involution": relerr(invert(invert(p)), p),
        "reciprocity": float(np.max(np.abs(koranyi_norm(invert(p)) * koranyi_norm(p) - 1))),
    }
    worst = max(errs.values())
    record(1, "group algebra, 1000 cases per law", worst < 1e-12, f"max error {worst:.2e}")


def test_c02_kelvin_identity():
    rng = np.random.default_rng(2)
    worst = 0.0
    for n in (1, 2):
        eta, p = rng.normal(size=(2, 500, 2 * n + 1))
        lhs = kelvin(lambda x: K.fundamental(eta, x), p)
        rhs = koranyi_norm(eta) ** (-2 * n) * K.fundamental(invert(eta), p)
        worst = max(worst, float(np.max(np.abs(lhs - rhs) / np.abs(rhs))))
    record(2, "Kelvin transform of the fundamental solution, 500 pairs", worst < 1e-10, f"max rel error {worst:.2e}")


def test_c03_harmonicity():
    rng = np.random.default_rng(3)
    eta = rng.normal(size=(4000, 3)) * 0.8
    xi = rng.normal(size=(4000, 3)) * 0.8
    far = koranyi_norm(multiply(-eta, xi)) > 0.1
    e1, x1 = eta[far][:500], xi[far][:500]
    Lg = np.abs(sublaplacian_from_jet(K.fundamental_jet(e1, x1), x1)).max()
    e2 = ball_points(rng, 2000, 0.05, 0.85)
    x2 = ball_points(rng, 2000, 0.05, 0.95)
    far = koranyi_norm(multiply(-e2, x2)) > 0.1
    e2, x2 = e2[far][:500], x2[far][:500]
    LG = np.abs(sublaplacian_from_jet(K.green_jet(e2, x2, ntheta=256), x2)).max()
    ok = Lg < 1e-6 and LG < 1e-6 and len(e1) == 500 and len(e2) == 500
    record(3, "off-pole harmonicity of g and G with analytic jets", ok, f"|L0 g| {Lg:.1e}, |L0 G| {LG:.1e}")


def test_c04_green_boundary():
    rng = np.random.default_rng(4)
    eta = np.vstack([np.zeros(3), ball_points(rng, 19, 0.05, 0.9)])
    b = boundary_grid(64, circular=False)
    assert b.size >= 64
    psi = np.linspace(-1.45, 1.45, 64)
    bnd = ball_points_on(psi, rng.uniform(0, 2 * np.pi, 64))
    sup = float(np.abs(K.green(eta[:, None, :], bnd[None, :, :])).max())
    record(4, "Green function vanishes on a 64-point boundary grid, 20 poles", sup < 1e-9, f"sup {sup:.1e}")


def test_c05_volume():
    err = {R: abs(ball_grid(R, circular=True).weights.sum() / VOL - 1) for R in (16, 32)}
    errf = abs(ball_grid(32).weights.sum() / VOL - 1)
    ratio = err[16] / err[32]
    ok = err[32] < 0.005 and ratio >= 1.8 and errf < 0.005
    record(5, "grid volume vs pi^2/2", ok, f"error {err[32]:.2e} at 32, ratio {ratio:.2f}")


def test_c06_poisson_reproduction():
    disc = S.Discretization(24)
    probes = S.interior_probes(64, 6, rho_max=0.7)
    one = S.solve_dirichlet(1, "0", ["1"], disc).evaluate(probes)
    tee = S.solve_dirichlet(1, "0", ["t"], disc).evaluate(probes)
    e1 = float(np.abs(one - 1).max())
    et = float(np.abs(tee - probes[:, 2]).max() / np.abs(probes[:, 2]).max())
    cal = [boundary_grid(R, circular=True).calibration for R in (32, 64, 128)]
    spread = (max(cal) - min(cal)) / np.mean(cal)
    ok = e1 < 0.01 and et < 0.02 and spread < 0.005
    record(6, "Poisson reproduction of 1 and t, calibration stability", ok,
           f"err(1) {e1:.1e}, err(t) {et:.1e}, calibration spread {spread:.1e}")


def test_c07_kernel_iteration():
    pairs = [((0.45, 0.35), (0.25, -0.8)), ((0.3, 0.9), (0.65, -0.5)), ((0.6, 1.0), (0.2, 0.0)),
             ((0.5, -0.2), (0.55, -0.1)), ((0.8, 0.3), (0.4, 0.6))]
    g = ball_grid(32, circular=True)
    worst_pair = 0.0
    for eta, xi in pairs:
        ref = nested_composition(NEUMANN, NEUMANN, eta, xi)
        approx = np.dot(kernel_row("neumann", point_of(*eta), g) * g.weights, kernel_row("neumann", point_of(*xi), g))
        worst_pair = max(worst_pair, abs(approx / ref - 1))
    # L0 in xi of the interpolated N_2(eta, .) against -N_1(eta, .)
    eta = point_of(0.45, 0.35)
    pr = np.array([0.25, 0.3, 0.65, 0.6, 0.2])
    pp = np.array([-0.8, 0.9, -0.5, 1.0, 0.0])
    target = -NEUMANN(*meridian_of(0.45, 0.35), *meridian_of(pr, pp))
    errs = []
    for R in (16, 24, 32):
        disc = S.Discretization(R)
        row = kernel_row("neumann", eta, disc.vol) * disc.W
        n2 = S.SolutionField(row @ disc.N(1).values, disc.vol)
        L = S.sublaplacian_polar(n2.spline(), pr, pp)
        errs.append(float(np.abs(L - target).max() / np.abs(target).max()))
    ok = worst_pair < 0.01 and errs[0] > errs[1] > errs[2]
    record(7, "iterated Neumann kernel vs nested quadrature, L0 N_2 -> -N_1", ok,
           f"pair error {worst_pair:.1e}, L0 errors {', '.join(f'{e:.1e}' for e in errs)}")


def test_c08_solvability_detector():
    rep = S.check(S.BVPSpec("neumann", p=1, f="1", g=["0"], resolution=32))
    c = rep.conditions[0]
    vol_ok = (not rep.solvable) and abs(c.abs_residual / VOL - 1) < 0.01
    man = S.check(manufactured_neumann(24))
    ok = vol_ok and man.solvable and man.conditions[0].rel_residual < 0.02
    record(8, "solvability detector", ok,
           f"unit source residual {c.abs_residual:.4f} vs {VOL:.4f}, manufactured {man.conditions[0].rel_residual:.1e}")


def test_c09_manufactured_gradient():
    spec = manufactured_neumann(24)
    fld = S.solve_neumann(spec)
    probes = S.interior_probes(64, 9, rho_max=0.7)
    # constants do not change the gradient, so fitting one is a no-op here; keep it for the record
    c = S.fit_constant(fld.evaluate(probes), U0(probes))
    gu = S.horizontal_gradient_polar(fld.shifted(c).spline(), probes)
    ge = horizontal_gradient(U0, probes)
    err = float(np.abs(gu - ge).max() / np.abs(ge).max())
    record(9, "manufactured Neumann solve, horizontal gradient", err < 0.05, f"sup rel error {err:.1e}")


def test_c10_mixed_composition():
    out = []
    for kind in ("neumann-dirichlet", "dirichlet-neumann"):
        spec = S.BVPSpec(kind, p=1, q=1, f="1 - gauge^4 + t", g=["t"], h=["r2"], resolution=24)
        _, a = S.solve(spec, force=True)
        _, b = S.solve(spec, force=True, method="composition")
        probes = S.interior_probes(64, 10)
        va, vb = a.evaluate(probes), b.evaluate(probes)
        out.append(float(np.abs(va - vb).max() / np.abs(va).max()))
    record(10, "mixed problems: direct formula vs two-stage composition", max(out) < 0.01,
           f"ND {out[0]:.1e}, DN {out[1]:.1e}")


def test_c11_circularity():
    spec = S.BVPSpec("nd", p=1, q=1, f="1 - gauge^4 + t", g=["t"], h=["r2"], resolution=16)
    _, fld = S.solve(spec, force=True)
    probes = S.interior_probes(64, 11)
    avg = circular_average(fld.evaluate, probes, 32)
    rot = max(float(np.abs(fld.evaluate(rotate(probes, th)) - fld.evaluate(probes)).max()) for th in (0.3, 1.7, 4.0))
    err = max(float(np.abs(avg - fld.evaluate(probes)).max()), rot)
    record(11, "circular inputs give circular solutions", err < 1e-6, f"max deviation {err:.1e}")


def test_c12_cap_robustness():
    specs = {
        "neumann": dict(kind="neumann", p=1, f="1", g=["1.31"]),
        "dirichlet": dict(kind="dirichlet", q=1, f="1", h=["t"]),
        "nd": dict(kind="nd", p=1, q=1, f="1 - gauge^4 + t", g=["t"], h=["r2"]),
        "dn": dict(kind="dn", p=1, q=1, f="1 - gauge^4 + t", g=["t"], h=["r2"]),
    }
    worst = 0.0
    for kw in specs.values():
        (r1, f1), (r2, f2) = [S.solve(S.BVPSpec(resolution=16, delta_cap=dc, **kw), force=True) for dc in (0.05, 0.025)]
        worst = max(worst, float(np.abs(f1.values - f2.values).max() / np.abs(f1.values).max()))
        for a, b in zip(r1.conditions, r2.conditions):
            worst = max(worst, abs(a.lhs - b.lhs) / a.scale, abs(a.rhs - b.rhs) / a.scale)
    record(12, "halving the characteristic cap radius", worst < 0.01, f"max relative change {worst:.1e}")
