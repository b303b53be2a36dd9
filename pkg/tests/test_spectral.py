import itertools

import pytest
import sympy
from gmpy2 import mpq

from oaesym.kernel import Polynomial
from oaesym.model import DisplacementField
from oaesym.solutions import SOLUTIONS
from oaesym.spectral import (
    NotASolution, assemble_chi, assemble_psi, build_tower, covector_from_scalar, gradient_psi, normalized_chi,
    seed_sets, seeds_from_covector, verify_covector_spectral, verify_scalar_spectral, verify_vector_spectral,
)

from conftest import to_sympy


def _sympy_line_integral(omega, xs):
    """P(x) = int_0^1 omega_a(t x) x^a dt, done by the CAS."""
    t = sympy.Symbol("t")
    sub = {x: t * x for x in xs}
    integrand = sum(w.subs(sub, simultaneous=True) * x for w, x in zip(omega, xs))
    return sympy.expand(sympy.integrate(sympy.expand(integrand), (t, 0, 1)))


def test_w_tower_against_cas_oracle(bundles):
    b = bundles("a3-wdvv")
    K = b.displacement
    n = K.n
    tower = b.tower(3)
    xs = sympy.symbols(K.chart.names)
    S = [to_sympy(k)[0] for k in K.components]
    H = [[[sympy.diff(S[a], xs[p], xs[q]) for q in range(n)] for p in range(n)] for a in range(n)]
    w = [[[sympy.Integer(int(i == j)) for j in range(n)] for i in range(n)],
         [[sympy.diff(S[i], xs[j]) for j in range(n)] for i in range(n)]]
    for k in range(2, 4):
        prev = w[-1]
        w.append([[_sympy_line_integral([sum(H[bb][a][r] * prev[r][g] for r in range(n)) for a in range(n)], xs)
                   for g in range(n)] for bb in range(n)])
    for k in range(4):
        for i, j in itertools.product(range(n), repeat=2):
            assert sympy.expand(to_sympy(tower.w[k][i][j])[0] - w[k][i][j]) == 0


@pytest.mark.parametrize("name", SOLUTIONS)
def test_towers_satisfy_recursions(bundles, name):
    b = bundles(name)
    K, tower = b.displacement, b.tower(4)
    n, H = K.n, K.hessian
    for k in range(1, 5):
        for bb, g, a in itertools.product(range(n), repeat=3):
            if k >= 2:
                rhs = sum((H[bb][a][r] * tower.w[k - 1][r][g] for r in range(n)), Polynomial.zero(K.chart))
                assert tower.w[k][bb][g].diff(a) == rhs
        for bb, a, c in itertools.product(range(n), repeat=3):
            if k >= 2:
                rhs = sum((H[nu][a][c] * tower.v[k - 1][bb].diff(nu) for nu in range(n)), Polynomial.zero(K.chart))
                assert tower.v[k][bb].diff(a).diff(c) == rhs
    # normalisation at the base point: w_k(0) = 0, v_k(0) = 0, grad v_k(0) = 0 for k >= 2
    for k in range(2, 5):
        assert all(tower.w[k][i][j].constant_term() == 0 for i in range(n) for j in range(n))
        assert all(tower.v[k][i].constant_term() == 0 for i in range(n))
        assert all(tower.v[k][i].diff(a).constant_term() == 0 for i in range(n) for a in range(n))


def test_linear_towers_are_trivial(bundles):
    tower = bundles("linear-n3").tower(4)
    for k in range(2, 5):
        assert all(p.is_zero() for row in tower.w[k] for p in row)
        assert all(p.is_zero() for p in tower.v[k])


def test_tower_rejects_non_solution(bundles):
    with pytest.raises(NotASolution):
        build_tower(bundles("nonassoc-n2", trust=False).displacement, 2)


@pytest.mark.parametrize("name", SOLUTIONS)
def test_spectral_problems_vanish(bundles, name):
    b = bundles(name)
    K, tower = b.displacement, b.tower(4)
    for s in seed_sets(7, K.n, 4):
        psi = assemble_psi(tower, s.h)
        chi = assemble_chi(tower, s.b, s.d)
        assert verify_vector_spectral(K, psi).is_zero
        assert verify_scalar_spectral(K, chi).is_zero
        assert verify_covector_spectral(K, covector_from_scalar(chi)).is_zero


def test_psi_coefficient_recursion(bundles):
    b = bundles("commuting-cubic")
    K, tower = b.displacement, b.tower(4)
    psi = assemble_psi(tower, seed_sets(1, 3, 4)[0].h)
    H = K.hessian
    for k in range(1, 5):
        for a, bb in itertools.product(range(3), repeat=2):
            rhs = sum((H[a][bb][g] * psi.coeffs[k - 1][g] for g in range(3)), Polynomial.zero(K.chart))
            assert psi.coeffs[k][a].diff(bb) == rhs
    assert all(p.is_constant() for p in psi.coeffs[0])


def test_perturbed_psi_is_detected(bundles):
    b = bundles("a3-wdvv")
    K, tower = b.displacement, b.tower(4)
    psi = assemble_psi(tower, seed_sets(0, 3, 4)[0].h)
    x1 = Polynomial.var(K.chart, 0)
    bad_coeffs = list(psi.coeffs)
    bad_coeffs[3] = (bad_coeffs[3][0] + x1 * x1,) + bad_coeffs[3][1:]
    bad = type(psi)(psi.order, tuple(bad_coeffs), psi.seeds)
    res = verify_vector_spectral(K, bad)
    assert not res.is_zero
    assert res.witness == (0, 0)


def test_gradient_reduction_of_spectral_problem(bundles):
    b = bundles("a3-wdvv")
    tower = b.tower(4)
    for s in seed_sets(3, 3, 4):
        chi = assemble_chi(tower, s.b, s.d)
        assert gradient_psi(chi, b.metric).coeffs == assemble_psi(tower, seeds_from_covector(s.d, b.metric)).coeffs


def test_normalized_chi_starts_at_coordinate(bundles):
    tower = bundles("a3-wdvv").tower(3)
    for a in range(3):
        chi = normalized_chi(tower, a)
        assert chi.normalized
        assert chi.coeffs[0] == Polynomial.var(tower.K.chart, a)
        assert chi.coeffs[1] == tower.K[a]


def test_seed_sets_are_reproducible():
    assert seed_sets(4, 3, 4) == seed_sets(4, 3, 4)
    assert seed_sets(4, 3, 4) != seed_sets(5, 3, 4)
    for s in seed_sets(9, 3, 4, count=5):
        assert any(s.h[0]) and any(s.d[0])
        assert all(isinstance(x, type(mpq(0))) for x in s.b)


def test_short_seed_lists_are_padded(bundles):
    tower = bundles("algebra-n2").tower(3)
    psi = assemble_psi(tower, [[1, 0]])
    assert len(psi.coeffs) == 4
    assert verify_vector_spectral(tower.K, psi).is_zero


def test_tower_builder_checks_its_input():
    from oaesym.kernel import Chart, parse_polynomial
    chart = Chart(2)
    K = DisplacementField(chart, (parse_polynomial("x2^3", chart), parse_polynomial("x1^2*x2", chart)))
    with pytest.raises(NotASolution):
        build_tower(K, 3)
