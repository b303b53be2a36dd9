import random

import pytest
import sympy
from gmpy2 import mpq
from hypothesis import given, settings
from hypothesis import strategies as st

from oaesym.kernel import (
    Chart, NotClosed, ParseError, Polynomial, RationalMatrix, Singular, UnknownVariable, determinant, diff,
    homotopy_integrate_oneform, integrate_hessian, invert_matrix, matrix_rank, parse_polynomial, rational,
    serialize,
)

from conftest import polynomials, random_polynomial, to_sympy

C3 = Chart(3)


# -- rationals and charts -------------------------------------------------------

def test_rational_coercion():
    assert rational("3/6") == mpq(1, 2)
    assert rational(mpq(2, 4)).denominator == 2
    from fractions import Fraction
    assert rational(Fraction(-3, 9)) == mpq(-1, 3)
    with pytest.raises(TypeError):
        rational(0.5)


def test_chart_bounds():
    with pytest.raises(ValueError):
        Chart(0)
    assert Chart(4).names == ("x1", "x2", "x3", "x4")
    with pytest.raises(ValueError):
        Chart(2, ("a", "a"))


# -- parser ---------------------------------------------------------------------

def test_parse_zero():
    assert parse_polynomial("0", C3).is_zero()


def test_parse_half_coefficients():
    p = parse_polynomial("x1^2*x3/2 + x1*x2^2/2", C3)
    assert len(p.terms) == 2
    assert set(p.terms.values()) == {mpq(1, 2)}


def test_parse_unknown_variable():
    with pytest.raises(UnknownVariable) as err:
        parse_polynomial("x1 + x9", C3)
    assert err.value.offset == 5


@pytest.mark.parametrize("text", ["x1 +", "(x1", "x1 ** 2", "1/0", "x1^", "2 x1"])
def test_parse_syntax_errors(text):
    with pytest.raises((ParseError, ZeroDivisionError)):
        parse_polynomial(text, C3)


def test_parse_precedence_and_parentheses():
    p = parse_polynomial("-(x1 - 2/3)^2 + 3*x2*x3/4", C3)
    expr, (x1, x2, x3, *_) = to_sympy(p)
    assert sympy.expand(expr - (-(x1 - sympy.Rational(2, 3)) ** 2 + sympy.Rational(3, 4) * x2 * x3)) == 0


@given(polynomials())
def test_parser_round_trip(p):
    assert parse_polynomial(serialize(p), p.chart) == p


# -- arithmetic against an independent CAS --------------------------------------

@settings(max_examples=40, deadline=None)
@given(polynomials(max_terms=4), polynomials(max_terms=4))
def test_product_matches_sympy(p, q):
    ep, _ = to_sympy(p)
    eq, _ = to_sympy(q)
    er, _ = to_sympy(p * q)
    assert sympy.expand(ep * eq - er) == 0


def test_truncated_product_equals_truncated_full_product():
    rng = random.Random(5)
    for _ in range(30):
        p = random_polynomial(rng, C3, params=2)
        q = random_polynomial(rng, C3, params=2)
        for order in range(5):
            assert p.mul(q, order) == (p * q).truncate(order)


def test_flip_and_rename_params():
    lam = Polynomial.param(C3, "lam")
    p = (lam + 1) ** 3
    assert p.flip_param("lam") == (1 - lam) ** 3
    assert p.rename_param("lam", "mu") == (Polynomial.param(C3, "mu") + 1) ** 3


# -- differentiation -----------------------------------------------------------

def test_diff_constant_is_zero():
    assert diff(Polynomial.const(C3, 7), 0).is_zero()


def test_diff_power_rule():
    assert diff(parse_polynomial("x1^2*x2", C3), 0) == parse_polynomial("2*x1*x2", C3)


@given(polynomials(degree=5), st.integers(0, 2), st.integers(0, 2))
def test_mixed_partials_commute(p, a, b):
    assert diff(diff(p, a), b) == diff(diff(p, b), a)


@settings(max_examples=30, deadline=None)
@given(polynomials(), st.integers(0, 2))
def test_diff_matches_sympy(p, a):
    expr, syms = to_sympy(p)
    got, _ = to_sympy(diff(p, a))
    assert sympy.expand(sympy.diff(expr, syms[a]) - got) == 0


# -- homotopy integration -------------------------------------------------------

def test_integrate_zero_form():
    z = Polynomial.zero(C3)
    assert homotopy_integrate_oneform([z, z, z], C3).is_zero()


@given(polynomials())
def test_homotopy_round_trip(p):
    p = p - p.constant_term()
    omega = [diff(p, a) for a in range(3)]
    assert homotopy_integrate_oneform(omega, C3) == p


def test_not_closed_witness():
    c2 = Chart(2)
    x2 = Polynomial.var(c2, 1)
    with pytest.raises(NotClosed) as err:
        homotopy_integrate_oneform([x2, Polynomial.zero(c2)], c2)
    assert err.value.witness == (0, 1)
    assert err.value.difference == 1


def test_homotopy_keeps_params_as_constants():
    lam = Polynomial.param(C3, "lam")
    p = parse_polynomial("x1*x2 + x3^3", C3) * (lam + 2)
    assert homotopy_integrate_oneform([diff(p, a) for a in range(3)], C3) == p


@given(polynomials(degree=4))
def test_integrate_hessian_round_trip(p):
    # drop constant and linear part: the reconstruction is normalised there
    keep = {k: v for k, v in p.terms.items() if C3.x_degree(k) >= 2}
    p = Polynomial(C3, keep)
    hess = [[diff(diff(p, a), b) for b in range(3)] for a in range(3)]
    assert integrate_hessian(hess, C3) == p


def test_integrate_hessian_asymmetric_fails_at_gradient_stage():
    c2 = Chart(2)
    z = Polynomial.zero(c2)
    one = Polynomial.const(c2, 1)
    # columns are closed, but the integrated gradient is not: the Hessian is not symmetric
    with pytest.raises(NotClosed) as err:
        integrate_hessian([[z, one], [z, z]], c2)
    assert "gradient" in str(err.value)


# -- linear algebra -------------------------------------------------------------

def test_invert_identity():
    assert invert_matrix(RationalMatrix.identity(3)) == RationalMatrix.identity(3)


def test_invert_example():
    assert invert_matrix(RationalMatrix([[2, 1], [1, 1]])) == RationalMatrix([[1, -1], [-1, 2]])


def test_singular_matrix():
    with pytest.raises(Singular):
        invert_matrix(RationalMatrix([[1, 2], [2, 4]]))
    assert determinant(RationalMatrix([[1, 2], [2, 4]])) == 0


def test_non_square_rejected():
    with pytest.raises(ValueError):
        RationalMatrix([[1, 2]])


@st.composite
def matrices(draw, max_n=4):
    n = draw(st.integers(1, max_n))
    return RationalMatrix([[mpq(draw(st.integers(-6, 6)), draw(st.integers(1, 4))) for _ in range(n)] for _ in range(n)])


@settings(max_examples=60)
@given(matrices())
def test_inverse_and_determinant(m):
    oracle = sympy.Matrix([[sympy.Rational(int(x.numerator), int(x.denominator)) for x in r] for r in m.rows])
    det = determinant(m)
    assert sympy.Rational(int(det.numerator), int(det.denominator)) == oracle.det()
    if det == 0:
        with pytest.raises(Singular):
            invert_matrix(m)
    else:
        assert m @ invert_matrix(m) == RationalMatrix.identity(m.n)


def test_matrix_rank():
    assert matrix_rank([[1, 2], [2, 4]]) == 1
    assert matrix_rank([[1, 0, 1], [0, 1, 1], [1, 1, 2]]) == 2
    assert matrix_rank([[0, 0]]) == 0
    assert matrix_rank([[1, 2, 3], [mpq(1, 2), 1, 0]]) == 2
