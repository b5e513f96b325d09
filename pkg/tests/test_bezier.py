import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from ssctraj.bezier import BezierSegment, bernstein, bernstein_matrix, difference_operator, hodograph, jerk_hessian
from ssctraj.errors import DomainError

U = sp.symbols("u")


def sym_curve(p):
    m = len(p) - 1
    return sum(sp.Rational(v) * sp.binomial(m, i) * U ** i * (1 - U) ** (m - i) for i, v in enumerate(p))


def sym_control_points(expr, n):
    """Bernstein coefficients of a degree-n polynomial (exact)."""
    poly = sp.Poly(sp.expand(expr), U)
    coeffs = [poly.coeff_monomial(U ** k) for k in range(n + 1)]
    # monomial u^k = sum_{i>=k} C(i,k)/C(n,k) b_n^i
    return [sum(coeffs[k] * sp.binomial(i, k) / sp.binomial(n, k) for k in range(i + 1)) for i in range(n + 1)]


def test_bernstein_examples():
    assert bernstein(5, 0, 0.0) == 1.0
    assert bernstein(5, 5, 1.0) == 1.0
    assert bernstein(5, 2, 0.5) == pytest.approx(10 * 0.5 ** 5, abs=1e-15)
    assert bernstein(5, 2, 0.5) == 0.3125


@pytest.mark.parametrize("u", [-0.01, 1.01, float("nan")])
def test_bernstein_domain(u):
    with pytest.raises(DomainError):
        bernstein(5, 1, u)


def test_bernstein_index_domain():
    with pytest.raises(DomainError):
        bernstein(5, 6, 0.5)


def test_partition_of_unity():
    u = np.linspace(0.0, 1.0, 1001)
    for m in range(1, 9):
        np.testing.assert_allclose(bernstein_matrix(m, u).sum(axis=1), 1.0, atol=1e-12)


def test_hodograph_examples():
    chain = hodograph([0, 1, 2, 3, 4, 5], 5)
    np.testing.assert_array_equal(chain[1], [5, 5, 5, 5, 5])
    np.testing.assert_array_equal(hodograph([2.0] * 6)[1], np.zeros(5))
    chain = hodograph([0, 0, 0, 0, 0, 1], 5)
    np.testing.assert_array_equal(chain[1], [0, 0, 0, 0, 5])
    np.testing.assert_array_equal(chain[2], [0, 0, 0, 20])
    np.testing.assert_array_equal(chain[3], [0, 0, 60])


@pytest.mark.parametrize("p", [[0, 0, 0, 0, 0, 1], [3, -1, 4, 1, -5, 9], [1, 2, 0, 7], [2, 7, 1, 8, 2, 8, 1]])
def test_hodograph_matches_symbolic_derivative(p):
    m = len(p) - 1
    chain = hodograph(p, m)
    expr = sym_curve(p)
    for k in range(1, 4):
        expr = sp.diff(expr, U)
        exact = sym_control_points(expr, m - k)
        np.testing.assert_allclose(chain[k], [float(v) for v in exact], rtol=1e-12, atol=1e-12)
        assert len(chain[k]) == m - k + 1


def test_difference_operator_matches_chain():
    rng = np.random.default_rng(0)
    p = rng.normal(size=6)
    chain = hodograph(p)
    for k in range(4):
        np.testing.assert_allclose(difference_operator(5, k) @ p, chain[k], rtol=1e-12)


def test_eval_constant_segment():
    seg = BezierSegment(np.full((2, 6), 3.0), alpha=2.0, t_start=1.0)
    t = np.linspace(1.0, 3.0, 11)
    np.testing.assert_allclose(seg.eval(t, 0, 0), 6.0)
    np.testing.assert_allclose(seg.eval(t, 1, 1), 0.0, atol=1e-12)


def test_eval_domain():
    seg = BezierSegment(np.zeros((2, 6)), alpha=1.0, t_start=0.0)
    with pytest.raises(DomainError):
        seg.eval(1.5)
    with pytest.raises(DomainError):
        seg.eval(0.5, k=4)


def test_eval_matches_symbolic_scaling():
    p = [1, 2, -1, 3, 0, 2]
    alpha, t0 = 1.7, 0.4
    seg = BezierSegment(np.vstack([p, p]), alpha, t0)
    T = sp.symbols("t")
    f = sp.Rational(17, 10) * sym_curve(p).subs(U, (T - sp.Rational(2, 5)) / sp.Rational(17, 10))
    for k in range(4):
        for tv in (0.4, 0.9, 2.1):
            assert seg.eval(tv, k) == pytest.approx(float(sp.diff(f, T, k).subs(T, tv)), rel=1e-10, abs=1e-10)


def test_derivatives_match_finite_differences():
    rng = np.random.default_rng(1)
    for _ in range(50):
        alpha = rng.uniform(0.2, 3.0)
        seg = BezierSegment(rng.normal(size=(1, 6)) * 5, alpha, rng.uniform(0, 5))
        t = seg.t_start + alpha * np.linspace(0.05, 0.95, 20)
        h = 1e-4 * alpha
        for k in range(1, 4):
            fd = (seg.eval(t + h, k - 1) - seg.eval(t - h, k - 1)) / (2 * h)
            ex = seg.eval(t, k)
            # relative to the derivative's magnitude over the segment
            assert np.max(np.abs(fd - ex)) <= 1e-5 * np.max(np.abs(ex))


def test_convex_hull():
    rng = np.random.default_rng(2)
    u = np.linspace(0.0, 1.0, 2001)
    B = bernstein_matrix(5, u)
    for _ in range(200):
        p = rng.normal(size=6) * rng.uniform(0.1, 100)
        f = B @ p
        assert f.min() >= p.min() - 1e-9 and f.max() <= p.max() + 1e-9


def _quadrature_cost(p, alpha):
    seg = BezierSegment(np.asarray(p)[None, :], alpha, 0.0)
    val, _ = quad(lambda t: seg.eval(t, 3) ** 2, 0.0, alpha, epsabs=0.0, epsrel=1e-13, limit=200)
    return val


def test_jerk_hessian_matches_quadrature():
    rng = np.random.default_rng(3)
    for _ in range(40):
        p = rng.normal(size=6)
        alpha = rng.uniform(0.1, 4.0)
        assert p @ jerk_hessian(5, alpha) @ p == pytest.approx(_quadrature_cost(p, alpha), rel=1e-8)


def test_jerk_hessian_structure():
    Q = jerk_hessian(5, 1.0)
    np.testing.assert_allclose(Q, Q.T)
    w = np.linalg.eigvalsh(Q)
    assert w.min() > -1e-9 * w.max()
    assert int(np.sum(w < 1e-9 * w.max())) == 3


def test_jerk_hessian_quadratic_has_zero_cost():
    # control points of a scaled quadratic: sample any quadratic in u
    u = np.linspace(0.0, 1.0, 6)
    target = 2.0 - 3.0 * u + 5.0 * u ** 2
    p = np.linalg.solve(bernstein_matrix(5, u), target)
    assert abs(p @ jerk_hessian(5, 2.5) @ p) < 1e-10


def test_jerk_hessian_alpha_scaling():
    p = np.array([0.0, 1.0, 0.5, 2.0, -1.0, 0.3])
    assert p @ jerk_hessian(5, 2.0) @ p == pytest.approx((p @ jerk_hessian(5, 1.0) @ p) / 8.0, rel=1e-12)


def test_jerk_hessian_domain():
    with pytest.raises(DomainError):
        jerk_hessian(2, 1.0)
    with pytest.raises(DomainError):
        jerk_hessian(5, 0.0)


@settings(max_examples=60, deadline=None)
@given(st.integers(3, 8), st.floats(0.2, 5.0))
def test_jerk_hessian_general_degree(m, alpha):
    rng = np.random.default_rng(m)
    p = rng.normal(size=m + 1)
    assert p @ jerk_hessian(m, alpha) @ p == pytest.approx(_quadrature_cost(p, alpha), rel=1e-7, abs=1e-12)
