import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from strongconv.errors import DomainError, EvaluationError, IncompleteBasisError
from strongconv.poly import (
    ChebSeries,
    Poly,
    apply_functional,
    bernstein_rhs,
    build_test_function,
    cheb_expand,
    cheb_poly,
    chebyshev_to_monomial,
    extrapolation_bound,
    monomial_to_chebyshev,
    sup_norm,
)

small_fracs = st.fractions(min_value=-5, max_value=5, max_denominator=20)
polys = st.lists(small_fracs, min_size=1, max_size=9).map(Poly)


def test_cheb_poly_examples():
    assert cheb_poly("first", 0) == Poly([1])
    assert cheb_poly("first", 2) == Poly([-1, 0, 2])
    assert cheb_poly("second", 2) == Poly([-1, 0, 4])


@pytest.mark.parametrize("j", range(8))
def test_cheb_poly_trig_identities(j):
    th = np.linspace(0.1, 3.0, 17)
    assert np.allclose(cheb_poly("first", j).evalf(np.cos(th)), np.cos(j * th))
    assert np.allclose(cheb_poly("second", j).evalf(np.cos(th)) * np.sin(th), np.sin((j + 1) * th))


def test_poly_invariants():
    p = Poly([1, 2, 0, 0])
    assert p.degree == 1 and len(p.coeffs) == 2
    assert Poly([0, 0]).is_zero()
    assert (Poly([1, 1]) ** 3)(Fraction(1, 2)) == Fraction(27, 8)


@given(polys)
def test_poly_json_roundtrip(p):
    assert Poly.from_json(p.to_json()) == p


@given(polys, polys)
def test_series_div_inverts_mul(a, b):
    if b[0] == 0:
        b = b + 1
    n = a.degree + b.degree + 3
    q = (a * b).series_div(b, n)
    assert q.truncate(n) == a.truncate(n)


@given(polys)
def test_chebyshev_change_of_basis_roundtrip(p):
    assert chebyshev_to_monomial(monomial_to_chebyshev(p.coeffs)) == p


def test_cheb_expand_basis_elements():
    s = cheb_expand(lambda x: x, 1.0)
    assert abs(s.coeffs[1] - 1) < 1e-14
    assert np.all(np.abs(np.delete(s.coeffs, 1)) < 1e-14)
    t3 = cheb_poly("first", 3)
    s = cheb_expand(lambda x: t3.evalf(x / 2), 2.0)
    assert abs(s.coeffs[3] - 1) < 1e-14
    assert np.all(np.abs(np.delete(s.coeffs, 3)) < 1e-14)


def test_cheb_expand_exp_reconstruction():
    s = cheb_expand(np.exp, 1.0)
    x = np.random.default_rng(3).uniform(-1, 1, 32)
    assert np.max(np.abs(s(x) - np.exp(x))) < 1e-12


@given(st.lists(st.floats(-3, 3), min_size=1, max_size=30))
def test_cheb_expand_reproduces_polynomials(c):
    p = Poly([Fraction(v) for v in c])
    s = cheb_expand(p.evalf, 1.5, nodes=256)
    x = np.linspace(-1.5, 1.5, 41)
    scale = max(1.0, float(np.max(np.abs(p.evalf(x)))))
    assert np.max(np.abs(s(x) - p.evalf(x))) <= 1e-12 * scale * len(c)


def test_cheb_expand_rejects_nonfinite_and_bad_nodes():
    with pytest.raises(EvaluationError):
        cheb_expand(lambda x: np.where(x > 0.5, np.nan, x), 1.0, nodes=64)
    with pytest.raises(DomainError):
        cheb_expand(np.cos, 1.0, nodes=100)


def test_sup_norm_examples():
    assert abs(sup_norm(Poly([0, 0, 1]), -1, 1) - 1) < 1e-10
    assert abs(sup_norm(Poly([1, -1]), 0, 1) - 1) < 1e-10
    assert abs(sup_norm(cheb_poly("first", 5), -1, 1) - 1) < 1e-10


@given(polys, st.floats(-2, 2), st.floats(0.01, 2))
def test_sup_norm_dominates_dense_grid(p, a, w):
    b = a + w
    grid = np.linspace(a, b, 2001)
    dense = float(np.max(np.abs(p.evalf(grid))))
    s = sup_norm(p, a, b)
    assert s >= dense * (1 - 1e-12)
    assert s <= dense * (1 + 1e-3) + 1e-12


def test_bernstein_rhs_examples():
    assert bernstein_rhs(1, 1.0, 1, 0.0) == 2
    assert bernstein_rhs(3, 2.0, 2, 0.0) == 9
    with pytest.raises(DomainError):
        bernstein_rhs(3, 1.0, 1, 1.0)


@given(st.lists(st.integers(-9, 9), min_size=2, max_size=21), st.sampled_from([0.1, 1.0]),
       st.floats(-0.95, 0.95))
def test_bernstein_inequality(c, delta, t):
    h = Poly(c)
    if h.degree < 1:
        return
    x = t * delta
    lhs = abs(float(h.deriv()(Fraction(x))))
    rhs = bernstein_rhs(h.degree, delta, 1, x) * sup_norm(h, -delta, delta)
    assert lhs <= rhs * (1 + 1e-9)


def test_extrapolation_examples():
    assert abs(extrapolation_bound(Poly([0, 1]), 1.0, 2.0) - 4) < 1e-12
    t4 = cheb_poly("first", 4)
    assert extrapolation_bound(t4, 1.0, 1.5) >= abs(float(t4(Fraction(3, 2))))
    assert abs(extrapolation_bound(t4, 1.0, 1.5) - 81) < 1e-9
    with pytest.raises(DomainError):
        extrapolation_bound(t4, 1.0, 0.5)


@given(st.lists(st.integers(-9, 9), min_size=1, max_size=9), st.floats(1.0001, 3.0), st.booleans())
def test_extrapolation_inequality(c, t, neg):
    h = Poly(c)
    K = 1.3
    x = (-t if neg else t) * K
    assert abs(h.evalf(x)) <= extrapolation_bound(h, K, x) * (1 + 1e-9)


# test functions ---------------------------------------------------------------


def test_test_function_defining_properties():
    tf = build_test_function(6, 3.0, 2.0, 0.4, nodes=1024)
    x = np.linspace(-3, 3, 10_001)
    y = tf(x)
    assert np.all((y >= 0) & (y <= 1))
    assert np.all(y[np.abs(x) <= 2.2] == 0)
    assert np.all(y[np.abs(x) >= 2.4] == 1)
    assert tf(2.1) == 0 and tf(2.8) == 1
    ramp = (x >= 2.2) & (x <= 2.4)
    assert np.all(np.diff(y[ramp]) >= -1e-15)
    assert np.allclose(y, y[::-1])


def test_test_function_series_tracks_function():
    tf = build_test_function(8, 3.0, 2.0, 0.4, nodes=2048)
    x = np.linspace(-3, 3, 3001)
    err = np.max(np.abs(tf.series(x) - tf(x)))
    assert err <= 1e-6
    assert tf.series.truncation_error >= 0


def test_test_function_theta_derivative_matches_finite_differences():
    tf = build_test_function(8, 3.0, 2.0, 0.4)
    f = lambda th: tf(tf.radius * np.cos(th))  # noqa: E731
    th = np.linspace(0.2, 0.8, 301)
    h = 1e-4
    fd1 = (f(th + h) - f(th - h)) / (2 * h)
    fd2 = (f(th + h) - 2 * f(th) + f(th - h)) / h ** 2
    d1 = tf.theta_derivative(1, th)
    d2 = tf.theta_derivative(2, th)
    assert np.max(np.abs(fd1 - d1)) <= 1e-4 * max(1, np.max(np.abs(d1)))
    assert np.max(np.abs(fd2 - d2)) <= 1e-3 * max(1, np.max(np.abs(d2)))


def test_test_function_parameter_errors():
    with pytest.raises(DomainError):
        build_test_function(0, 3.0, 2.0, 0.4)
    with pytest.raises(DomainError):
        build_test_function(4, 2.3, 2.0, 0.4)
    with pytest.raises(DomainError):
        build_test_function(4, 3.0, 2.0, -0.1)


# functionals -----------------------------------------------------------------


def test_apply_functional_point_evaluation_and_delta():
    s = cheb_expand(lambda x: x * x, 1.0, nodes=64)
    point0 = [float(cheb_poly("first", j)(0)) for j in range(len(s.coeffs))]
    assert abs(apply_functional(point0, s).value) < 1e-14
    delta = [1.0] + [0.0] * (len(s.coeffs) - 1)
    assert apply_functional(delta, s).value == pytest.approx(s.coeffs[0])


def test_apply_functional_semicircle():
    # semicircle integrals of T_j(x/2): x = 2 cos t turns the density into
    # (2/pi) sin^2 t dt, integrated by the midpoint rule (exact for trig polynomials)
    t = (np.arange(512) + 0.5) * np.pi / 512
    s = cheb_expand(lambda x: x * x, 2.0, nodes=64)
    vals = [float(np.sum(np.cos(j * t) * np.sin(t) ** 2) * 2 / 512) for j in range(len(s.coeffs))]
    assert apply_functional(vals, s).value == pytest.approx(1.0, abs=1e-8)


@given(polys)
def test_apply_functional_matches_exact_on_polynomials(p):
    # functional = evaluation at x0, applied exactly to the Chebyshev coefficients
    x0 = Fraction(1, 3)
    cheb = monomial_to_chebyshev(p.coeffs)
    basis = [cheb_poly("first", j)(x0) for j in range(len(cheb))]
    exact = sum(a * b for a, b in zip(cheb, basis))
    assert exact == p(x0)
    s = ChebSeries(1.0, np.array([float(a) for a in cheb]), 0.0)
    assert apply_functional([float(b) for b in basis], s).value == pytest.approx(float(exact), abs=1e-9)


def test_apply_functional_missing_basis():
    s = ChebSeries(1.0, np.array([1.0, 0.0, 2.0]), 0.0)
    with pytest.raises(IncompleteBasisError):
        apply_functional({0: 1.0, 1: 0.0}, s)
