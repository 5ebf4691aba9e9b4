import numpy as np
import pytest
from hypothesis import given
from numpy.testing import assert_allclose

from koranyi.calculus import (BALL_DEFINING, CharacteristicPointError, Field, FieldId, apply_field,
                              horizontal_gradient, is_characteristic, jet2, normal_derivative, sublaplacian)
from koranyi.group import PoleError, point
from koranyi.jets import Jet2, fd_jet, variables
from koranyi.kernels import fundamental, fundamental_jet

from conftest import ball_points_on, points

E1 = np.zeros(3)


def _t(p):
    return np.asarray(p)[..., -1]


def _r2(p):
    p = np.asarray(p)
    return p[..., 0] ** 2 + p[..., 1] ** 2


def _jetted(fn):
    return Field(fn, lambda p: fn(variables(p)), fn.__name__)


T = Field(_t, lambda p: variables(p)[-1], "t")
R2 = Field(_r2, lambda p: (lambda v: v[0] * v[0] + v[1] * v[1])(variables(p)), "r2")


def test_jet_of_t_and_r2():
    J = jet2(T, np.array([0.3, -0.2, 0.9]))
    assert J.value == 0.9
    assert_allclose(J.grad, [0, 0, 1])
    assert_allclose(J.hess, 0)
    J = jet2(R2, point([1 + 2j], 0.0))
    assert_allclose(J.grad, [2, 4, 0])
    assert_allclose(J.hess, np.diag([2, 2, 0]))


def test_fd_fallback_is_tagged():
    J = jet2(_r2, point([1 + 2j], 0.0))
    assert J.mode == "fd"
    assert_allclose(J.grad, [2, 4, 0], atol=1e-6)
    assert_allclose(J.hess, np.diag([2, 2, 0]), atol=1e-4)


def test_fundamental_analytic_vs_fd(rng):
    for _ in range(20):
        p = rng.normal(size=3) * 0.7
        f = lambda q: fundamental(E1, q)
        Ja, Jf = fundamental_jet(E1, p), fd_jet(f, p)
        scale = abs(Ja.value) + np.abs(Ja.hess).max()
        assert np.abs(Ja.hess - Jf.hess).max() < 1e-6 * max(scale, 1.0) * 10
        assert_allclose(Ja.grad, Jf.grad, rtol=1e-6, atol=1e-8)


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_jet_at_pole_raises():
    with pytest.raises(PoleError):
        jet2(Field(lambda p: 1 / _r2(p), lambda p: 1.0 / (lambda v: v[0] * v[0] + v[1] * v[1])(variables(p))), E1)


def test_vector_field_examples():
    p = point([1 + 2j], 3.0)
    assert_allclose(apply_field(FieldId("X"), T, p), 4.0)
    assert_allclose(apply_field(FieldId("Y"), T, p), -2.0)
    assert_allclose(apply_field(FieldId("T"), R2, p), 0.0)
    assert_allclose(apply_field(FieldId("Z"), T, p), 0.5 * (4 + 2j))
    with pytest.raises(ValueError):
        FieldId("W")
    with pytest.raises(ValueError):
        apply_field(FieldId("X", 2), T, p)


def test_commutator_of_x_and_y(rng):
    # X t = 2y and Y t = -2x, so [X, Y] t = X(-2x) - Y(2y) = -4 = -4 T t
    x_field = Field(lambda p: np.asarray(p)[..., 0], lambda p: variables(p)[0])
    y_field = Field(lambda p: np.asarray(p)[..., 1], lambda p: variables(p)[1])
    p = rng.normal(size=(5, 3))
    assert_allclose(apply_field(FieldId("X"), T, p), 2 * p[:, 1])
    assert_allclose(apply_field(FieldId("Y"), T, p), -2 * p[:, 0])
    xy = -2 * apply_field(FieldId("X"), x_field, p) - 2 * apply_field(FieldId("Y"), y_field, p)
    assert_allclose(xy, -4 * apply_field(FieldId("T"), T, p))


def test_sublaplacian_examples(rng):
    P = rng.normal(size=(10, 3))
    assert_allclose(sublaplacian(R2, P), 1.0)
    assert_allclose(sublaplacian(T, P), 0.0)
    R2_2 = Field(lambda p: np.sum(np.asarray(p)[..., :4] ** 2, -1),
                 lambda p: (lambda v: v[0] * v[0] + v[1] * v[1] + v[2] * v[2] + v[3] * v[3])(variables(p)))
    assert_allclose(sublaplacian(R2_2, rng.normal(size=(4, 5))), 2.0)


def test_fundamental_solution_is_harmonic_off_pole(rng):
    P = rng.normal(size=(400, 3))
    from koranyi.group import koranyi_norm
    P = P[(koranyi_norm(P) > 0.2) & (koranyi_norm(P) < 2)][:100]
    assert len(P) == 100
    L = sublaplacian_of_fundamental(P)
    assert np.abs(L).max() < 1e-6


def sublaplacian_of_fundamental(P):
    from koranyi.calculus import sublaplacian_from_jet
    return sublaplacian_from_jet(fundamental_jet(E1, P), P)


def test_horizontal_gradient_of_defining_function(rng):
    p = rng.normal(size=(50, 3))
    g = horizontal_gradient(BALL_DEFINING, p)
    x, y, t = p.T
    r2 = x * x + y * y
    assert_allclose(g[:, 0], 4 * (x * r2 + y * t), rtol=1e-12)
    assert_allclose(g[:, 1], 4 * (y * r2 - x * t), rtol=1e-12)
    assert_allclose(np.sum(g * g, -1), 16 * r2 * (r2 * r2 + t * t), rtol=1e-10)


def test_normal_derivative_examples(rng):
    psi = rng.uniform(-1.4, 1.4, 30)
    phi = rng.uniform(0, 2 * np.pi, 30)
    b = ball_points_on(psi, phi)
    nF = np.linalg.norm(horizontal_gradient(BALL_DEFINING, b), axis=-1)
    assert_allclose(normal_derivative(BALL_DEFINING, b), nF, rtol=1e-12)
    const = Field(lambda p: np.ones(np.shape(p)[:-1]), lambda p: Jet2.constant(np.ones(np.shape(p)[:-1]), 3))
    assert_allclose(normal_derivative(const, b), 0.0, atol=0)
    assert_allclose(normal_derivative(T, b), 2 * np.sin(psi) * np.sqrt(np.cos(psi)), rtol=1e-10, atol=1e-14)


def test_characteristic_points():
    assert is_characteristic(point([0], 1.0))
    assert is_characteristic(point([0], -1.0))
    assert not is_characteristic(point([1], 0.0))
    assert_allclose(np.linalg.norm(horizontal_gradient(BALL_DEFINING, point([1], 0.0))), 4.0)
    with pytest.raises(CharacteristicPointError):
        normal_derivative(T, point([0], 1.0))


@given(points(1))
def test_sublaplacian_left_invariant(q):
    # L_0 commutes with left translation: L_0(f o tau_q)(p) = (L_0 f)(q p)
    from koranyi.group import multiply
    p = np.array([0.4, -0.3, 0.2])
    f = lambda v: v[0] * v[0] * v[2] + v[1] * v[2] * v[2] + v[0] * v[1]

    def shifted(P):
        v = variables(P)
        c = np.asarray(q)
        x = v[0] + c[0]
        y = v[1] + c[1]
        t = v[2] + c[2] + 2.0 * (c[1] * v[0] - c[0] * v[1])
        return f([x, y, t])

    lhs = sublaplacian(Field(None, shifted), p)
    rhs = sublaplacian(Field(None, lambda P: f(variables(P))), multiply(q, p))
    assert_allclose(lhs, rhs, rtol=1e-9, atol=1e-9 * (1 + np.abs(q).max() ** 3))
