import itertools
import random

import pytest
import sympy
from gmpy2 import mpq

from oaesym.kernel import Chart, Polynomial, RationalMatrix, parse_polynomial
from oaesym.model import (
    ConnectionField, DisplacementField, Metric, Prepotential, connection_from_displacement,
    constant_quadratic_displacement, gradient_reduce, lower_oae_residual, residual_oae, residual_structure,
    residual_wdvv,
)

from conftest import random_polynomial, to_sympy


def field(n, *texts):
    chart = Chart(n)
    return DisplacementField(chart, tuple(parse_polynomial(t, chart) for t in texts))


def test_linear_field_is_a_solution():
    assert residual_oae(field(3, "x1 + 2*x2", "x3", "-x1")).is_zero


def test_nonassociative_field_witness():
    res = residual_oae(field(2, "0", "x1*x2 + 1/2*x2^2"))
    assert not res.is_zero
    assert res.witness == (1, 0, 0, 1)
    assert res.witness_entry() == 1


def test_residual_oae_matches_sympy_oracle():
    rng = random.Random(11)
    chart = Chart(3)
    xs = sympy.symbols("x1 x2 x3")
    for _ in range(5):
        K = DisplacementField(chart, tuple(random_polynomial(rng, chart, degree=3, terms=4) for _ in range(3)))
        S = [to_sympy(k)[0] for k in K.components]
        res = residual_oae(K)
        for nu, a, b, g in itertools.product(range(3), repeat=4):
            want = sum(
                sympy.diff(S[nu], xs[a], xs[r]) * sympy.diff(S[r], xs[b], xs[g])
                - sympy.diff(S[r], xs[a], xs[b]) * sympy.diff(S[nu], xs[r], xs[g])
                for r in range(3)
            )
            assert sympy.expand(want - to_sympy(res.entries[(nu, a, b, g)])[0]) == 0


def test_residual_antisymmetry():
    rng = random.Random(2)
    chart = Chart(3)
    for _ in range(10):
        K = DisplacementField(chart, tuple(random_polynomial(rng, chart, degree=4) for _ in range(3)))
        e = residual_oae(K).entries
        for nu, a, b, g in itertools.product(range(3), repeat=4):
            assert e[(nu, a, b, g)] + e[(nu, g, b, a)] == 0


def test_connection_rejects_asymmetry():
    chart = Chart(2)
    table = [[[0, 1], [0, 0]], [[0, 0], [0, 0]]]
    with pytest.raises(ValueError):
        ConnectionField.constant(chart, table)


def test_structure_residuals_of_constant_algebra():
    chart = Chart(2)
    # e1 identity, e2^2 = 0
    table = [[[1, 0], [0, 0]], [[0, 1], [1, 0]]]
    c = ConnectionField.constant(chart, table)
    assoc, potential = residual_structure(c)
    assert assoc.is_zero and potential.is_zero
    K = constant_quadratic_displacement(chart, table)
    assert connection_from_displacement(K).entries == c.entries
    assert residual_oae(K).is_zero


def test_metric_validation():
    with pytest.raises(ValueError):
        Metric(RationalMatrix([[1, 2], [3, 1]]))
    with pytest.raises(ValueError):
        Metric(RationalMatrix([[1, 1], [1, 1]]))
    m = Metric.antidiagonal(3)
    assert m.upper @ m.lower == RationalMatrix.identity(3)


def test_a3_prepotential():
    chart = Chart(3)
    F = Prepotential(chart, parse_polynomial("x1^2*x3/2 + x1*x2^2/2 + x2^2*x3^2/4 + x3^5/60", chart),
                     Metric.antidiagonal(3))
    assert residual_wdvv(F).is_zero
    assert residual_oae(gradient_reduce(F)).is_zero


def test_wdvv_and_reduced_oae_agree_on_non_solutions():
    """Lowering the reduced residual with the metric reproduces the WDVV residual entry by entry."""
    rng = random.Random(20)
    chart = Chart(3)
    metrics = [Metric.antidiagonal(3), Metric.identity(3),
               Metric(RationalMatrix([[2, 1, 0], [1, 0, 0], [0, 0, mpq(-1, 3)]]))]
    found = 0
    for i in range(200):
        F = Prepotential(chart, random_polynomial(rng, chart, degree=5, terms=6), metrics[i % 3])
        w = residual_wdvv(F)
        if w.is_zero:
            continue
        reduced = residual_oae(gradient_reduce(F))
        assert not reduced.is_zero
        lowered = lower_oae_residual(reduced, F.metric)
        assert all(lowered.entries[k] == w.entries[k] for k in w.entries)
        found += 1
        if found == 20:
            break
    assert found == 20


def test_wdvv_counterexample_witness():
    chart = Chart(3)
    F = Prepotential(chart, parse_polynomial("x1*x2*x3 + x1^3", chart), Metric.identity(3))
    res = residual_wdvv(F)
    assert res.witness == (0, 0, 1, 1)
    assert res.witness_entry() == -1


def test_displacement_shape_checked():
    chart = Chart(2)
    with pytest.raises(ValueError):
        DisplacementField(chart, (Polynomial.zero(chart),))
