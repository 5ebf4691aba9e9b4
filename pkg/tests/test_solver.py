import numpy as np
import pytest
from numpy.testing import assert_allclose

from koranyi import solver as S
from koranyi.calculus import Field, horizontal_gradient, normal_derivative, sublaplacian
from koranyi.expr import parse
from koranyi.group import rotate

from oracles import nd_condition_unit_source

VOL = np.pi ** 2 / 2
U0 = parse("(1 - gauge^4)^2")


def manufactured_neumann(resolution):
    f = Field(lambda P: sublaplacian(U0, P), name="L0 u0")
    g = Field(lambda P: normal_derivative(U0, P), name="dn u0")
    return S.BVPSpec("neumann", p=1, f=f, g=[g], resolution=resolution)


def gradient_error(fld, probes):
    gu = S.horizontal_gradient_polar(fld.spline(), probes)
    ge = horizontal_gradient(U0, probes)
    return np.abs(gu - ge).max() / np.abs(ge).max()


# specs and validation ---------------------------------------------------------------

def test_spec_roundtrip_and_aliases():
    d = {"kind": "ND", "p": 1, "q": 1, "f": "1", "g": ["t"], "h": ["r2"],
         "resolution": {"volume": 12, "boundary": 48, "delta_cap": 0.04}}
    spec = S.BVPSpec.from_dict(d).validate()
    assert spec.kind == "neumann-dirichlet" and spec.boundary_resolution == 48 and spec.delta_cap == 0.04
    again = S.BVPSpec.from_dict(spec.to_dict())
    assert again.to_dict() == spec.to_dict()
    assert S.BVPSpec("n", p=1, g=["0"], resolution=20).boundary_resolution == 80


@pytest.mark.parametrize("kwargs,match", [
    (dict(kind="neumann", p=1, f="x1", g=["0"]), "not circular"),
    (dict(kind="neumann", p=1, f="0", g=[]), "Neumann data"),
    (dict(kind="neumann", p=0, f="0"), "orders"),
    (dict(kind="neumann", p=1, q=1, f="0", g=["0"], h=["0"]), "Neumann problem"),
    (dict(kind="dirichlet", q=1, f="0", h=["0"], n=2), "n = 1"),
    (dict(kind="nd", p=1, q=0, f="0", g=["0"]), "mixed"),
    (dict(kind="neumann", p=1, f="0", g=["0"], resolution=3), "resolution"),
    (dict(kind="neumann", p=1, f="0", g=["0"], delta_cap=0.0), "delta_cap"),
])
def test_validation_errors(kwargs, match):
    with pytest.raises(S.SpecError, match=match):
        S.BVPSpec(**kwargs).validate()


def test_malformed_specs():
    with pytest.raises(S.SpecError):
        S.BVPSpec.from_dict({"p": 1})
    with pytest.raises(S.SpecError):
        S.BVPSpec.from_dict({"kind": "neumann", "p": "one"})
    with pytest.raises(S.SpecError):
        S.BVPSpec("elliptic")
    with pytest.raises(ValueError):
        S.BVPSpec("neumann", p=1, f="1 +", g=["0"])


# Neumann ------------------------------------------------------------------------------

def test_zero_problem():
    spec = S.BVPSpec("neumann", p=2, f="0", g=["0", "0"], resolution=12)
    rep, fld = S.solve(spec)
    assert rep.solvable and all(c.abs_residual == 0 for c in rep.conditions)
    assert np.all(fld.values == 0)
    ver = S.verify(fld, spec)
    assert ver["interior"]["sup"] == 0 and all(v["sup"] == 0 for v in ver["boundary"].values())


def test_unit_source_is_unsolvable():
    spec = S.BVPSpec("neumann", p=1, f="1", g=["0"], resolution=16)
    rep = S.check(spec)
    assert not rep.solvable
    assert abs(rep.conditions[0].lhs / VOL - 1) < 0.01
    assert abs(rep.conditions[0].abs_residual / VOL - 1) < 0.01
    with pytest.raises(S.UnsolvableError) as info:
        S.solve(spec)
    assert info.value.report is not None
    _, fld = S.solve(spec, force=True)
    assert fld.metadata["forced"]


def test_calibrated_and_uncalibrated_residuals_reported():
    rep = S.check(S.BVPSpec("neumann", p=1, f="1", g=["1.3"], resolution=12))
    c = rep.conditions[0]
    assert c.rhs != c.rhs_uncalibrated
    assert abs(c.rhs / c.rhs_uncalibrated - rep.calibration) < 1e-12
    d = rep.to_dict()
    assert {"rel_residual_uncalibrated", "lhs_uncalibrated"} <= set(d["conditions"][0])


def test_manufactured_neumann_condition_and_gradient():
    spec = manufactured_neumann(24)
    rep = S.check(spec)
    assert rep.solvable and rep.conditions[0].rel_residual < 0.02
    fld = S.solve_neumann(spec)
    assert gradient_error(fld, S.interior_probes(64, 0)) < 0.05
    assert S.verify(fld, spec)["interior"]["relative_sup"] < 0.05


def test_manufactured_neumann_refines():
    probes = S.interior_probes(64, 0)
    errs = [gradient_error(S.solve_neumann(manufactured_neumann(R), force=True), probes) for R in (12, 16, 24)]
    assert errs[0] > errs[1] > errs[2]


def test_neumann_staged_equals_direct():
    spec = S.BVPSpec("neumann", p=2, f="1 - gauge^4 + t", g=["t", "r2"], resolution=12)
    a = S.solve_neumann(spec, force=True)
    b = S.solve_neumann(spec, force=True, method="staged")
    assert_allclose(a.values, b.values, rtol=1e-10, atol=1e-12)


# Dirichlet -----------------------------------------------------------------------------

@pytest.mark.parametrize("h", ["1", "t"])
def test_dirichlet_reproduces_harmonic_data(h):
    disc = S.Discretization(16)
    w = S.solve_dirichlet(1, "0", [h], disc)
    mask = disc.vol.rho_nodes < 0.7
    assert_allclose(w.values[mask], parse(h)(disc.vol.nodes)[mask], atol=0.02)
    spec = S.BVPSpec("dirichlet", q=1, f="0", h=[h], resolution=16)
    if h == "t":
        assert S.verify(w, spec, disc)["boundary"]["h0"]["relative_sup"] < 0.02


def test_dirichlet_manufactured():
    disc = S.Discretization(16)
    u0 = parse("1 - gauge^4")
    f = Field(lambda P: sublaplacian(u0, P))
    w = S.solve_dirichlet(1, f, ["0"], disc)
    assert np.abs(w.values - u0(disc.vol.nodes)).max() < 0.05


def test_dirichlet_order_two_staged():
    disc = S.Discretization(12)
    a = S.solve_dirichlet(2, "1", ["t", "r2"], disc)
    b = S.solve_dirichlet(2, "1", ["t", "r2"], disc, method="staged")
    assert_allclose(a.values, b.values, rtol=1e-10, atol=1e-12)
    c = S.solve_dirichlet(2, "1", ["t", "r2"], disc, strict_paper=True)
    assert np.abs(c.values - a.values).max() > 1e-3


# mixed problems --------------------------------------------------------------------------

def test_mixed_zero_problems():
    for kind in ("nd", "dn"):
        rep, fld = S.solve(S.BVPSpec(kind, p=1, q=1, f="0", g=["0"], h=["0"], resolution=12))
        assert rep.solvable and np.all(fld.values == 0)


@pytest.mark.parametrize("kind", ["neumann-dirichlet", "dirichlet-neumann"])
def test_mixed_composition_matches_direct(kind):
    spec = S.BVPSpec(kind, p=1, q=1, f="1 - gauge^4 + t", g=["t"], h=["r2"], resolution=16)
    _, a = S.solve(spec, force=True)
    _, b = S.solve(spec, force=True, method="composition")
    assert np.abs(a.values - b.values).max() / np.abs(a.values).max() < 0.01


def test_nd_condition_against_independent_oracle():
    rep = S.check(S.BVPSpec("nd", p=1, q=1, f="1", g=["0"], h=["0"], resolution=16))
    assert abs(rep.conditions[0].lhs / nd_condition_unit_source() - 1) < 0.01


def test_dn_unit_source_condition():
    rep = S.check(S.BVPSpec("dn", p=1, q=1, f="1", g=["0"], h=["0"], resolution=16))
    assert not rep.solvable
    assert abs(rep.conditions[0].abs_residual / VOL - 1) < 0.01


def test_strict_mode_notes_and_guard():
    spec = S.BVPSpec("nd", p=1, q=1, f="1", g=["0"], h=["0"], resolution=12, strict_paper=True)
    assert any("strict" in note for note in S.check(spec).notes)
    with pytest.raises(S.SpecError):
        S.solve(S.BVPSpec("dn", p=1, q=2, f="0", g=["0"], h=["0", "0"], resolution=12, strict_paper=True))


# fields ------------------------------------------------------------------------------------

def test_solution_field_is_circular_and_shiftable(rng):
    spec = S.BVPSpec("dirichlet", q=1, f="1", h=["t"], resolution=12)
    _, fld = S.solve(spec)
    pts = S.interior_probes(20, 3)
    base = fld.evaluate(pts)
    for th in rng.uniform(0, 2 * np.pi, 4):
        assert np.abs(fld.evaluate(rotate(pts, th)) - base).max() < 1e-12
    assert_allclose(fld.shifted(2.0).values, fld.values + 2.0)
    assert S.fit_constant(fld.values, fld.values + 3.0) == pytest.approx(3.0)
