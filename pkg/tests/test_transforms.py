import itertools

import pytest
import sympy
from gmpy2 import mpq

from oaesym.kernel import Chart, NotClosed, Polynomial, parse_polynomial
from oaesym.model import Metric, Prepotential, residual_wdvv
from oaesym.spectral import NotASolution, assemble_psi, seed_sets, seeds_from_covector
from oaesym.transforms import (
    ConditionFailed, NoUsablePoints, backlund_oae, darboux_verify, intermediate_integral_first,
    intermediate_integral_second, inverse_series, leading_jacobian_determinant,
    leading_jacobian_determinant_polynomial, sample_points,
    symmetry_condition, wdvv_condition, wdvv_to_oae, wdvv_to_oae_via_reduction,
)

from conftest import to_sympy


def psi_for(b, order=4, which=0, seed=0):
    s = seed_sets(seed, b.chart.n, order)[which]
    h = seeds_from_covector(s.d, b.metric) if b.kind == "wdvv" else s.h
    return assemble_psi(b.tower(order), h)


# -- Darboux ---------------------------------------------------------------------

def test_inverse_series():
    M = [[[2, 1], [1, 1]], [[0, 1], [3, 0]], [[mpq(1, 2), 0], [0, -1]]]
    inv = inverse_series(M, 5)
    for k in range(5):
        acc = [[mpq(0)] * 2 for _ in range(2)]
        for j in range(k + 1):
            if j < len(M):
                for i, l, m in itertools.product(range(2), repeat=3):
                    acc[i][l] += M[j][i][m] * inv[k - j][m][l]
        assert acc == ([[1, 0], [0, 1]] if k == 0 else [[0, 0], [0, 0]])


@pytest.mark.parametrize("name", ["algebra-n2", "a3-wdvv", "commuting-cubic", "bad-input"])
def test_darboux_vanishes(bundles, name):
    b = bundles(name)
    for which in range(3):
        psi = psi_for(b, which=which)
        rep = darboux_verify(b.displacement, psi, count=10, seed=which)
        assert rep.is_zero, rep.describe()
        assert len(rep.points) == 10
        assert rep.precision == 5
        assert all(leading_jacobian_determinant(psi, p.point) != 0 for p in rep.points)


def test_darboux_linear_solution_is_degenerate(bundles):
    b = bundles("linear-n3")
    rep = darboux_verify(b.displacement, psi_for(b))
    assert rep.degenerate and rep.is_zero
    assert "zero connection" in rep.describe()


def test_darboux_higher_precision_and_instantiation(bundles):
    b = bundles("a3-wdvv")
    rep = darboux_verify(b.displacement, psi_for(b), count=3, precision=9, lam0=mpq(1, 3))
    assert rep.is_zero
    for p in rep.points:
        assert p.instantiated[1:] == (0, 0)


def test_darboux_perturbed_psi_fails(bundles):
    b = bundles("a3-wdvv")
    psi = psi_for(b)
    x2 = Polynomial.var(b.chart, 1)
    coeffs = list(psi.coeffs)
    coeffs[2] = (coeffs[2][0] + x2 * x2,) + coeffs[2][1:]
    bad = type(psi)(psi.order, tuple(coeffs), psi.seeds)
    rep = darboux_verify(b.displacement, bad, count=4)
    assert not rep.is_zero
    assert rep.witness[1] in ("symmetry", "associativity")


def test_darboux_skips_singular_points(bundles):
    b = bundles("algebra-n2")
    # h_0 = e2: M_0 = c(e2) is nilpotent, singular everywhere
    psi = assemble_psi(b.tower(4), [[0, 1], [1, 0]])
    with pytest.raises(NoUsablePoints) as err:
        darboux_verify(b.displacement, psi, points=[(0, 0), (1, 2)])
    assert err.value.identically_singular
    assert not leading_jacobian_determinant_polynomial(psi)
    good = assemble_psi(b.tower(4), [[1, 0], [0, 1]])
    rep = darboux_verify(b.displacement, good, points=[(0, 0), (1, 2)])
    assert len(rep.points) == 2 and not rep.skipped


def test_darboux_only_singular_samples_is_not_identically_singular(bundles):
    b = bundles("a3-wdvv")
    psi = psi_for(b)
    det = leading_jacobian_determinant_polynomial(psi)
    assert det
    bad = [p for p in itertools.islice(sample_points(3, 0), 400) if not det.evaluate_x(p).value()]
    if not bad:
        pytest.skip("det M_0 has no zero among the sampled points")
    with pytest.raises(NoUsablePoints) as err:
        darboux_verify(b.displacement, psi, points=bad[:3])
    assert not err.value.identically_singular


def test_darboux_requires_solution(bundles):
    b = bundles("nonassoc-n2", trust=False)
    with pytest.raises(NotASolution):
        darboux_verify(b.displacement, psi_for(bundles("algebra-n2")))


def test_sample_points_are_deterministic():
    a = list(itertools.islice(sample_points(3, 4), 20))
    assert a == list(itertools.islice(sample_points(3, 4), 20))
    assert a[0] == (0, 0, 0)
    assert len(set(a)) == len(a)


@pytest.mark.parametrize("name", ["algebra-n2", "a3-wdvv"])
def test_darboux_against_cas_oracle(bundles, name):
    """Exact rational-function check of c~ = c J^-1 at one point, independent of the series machinery."""
    b = bundles(name)
    K = b.displacement
    n = K.n
    psi = psi_for(b)
    point = tuple(sympy.Rational(i + 1, 2) for i in range(n))
    lam = sympy.Symbol("lam")
    xs = sympy.symbols(K.chart.names)
    at = dict(zip(xs, point))
    comps = [to_sympy(psi.component(a))[0] for a in range(n)]
    syms = sympy.symbols(K.chart.slot_names())
    comps = [c.subs(syms[n], lam) for c in comps]
    J = sympy.Matrix(n, n, lambda a, bb: sympy.diff(comps[a], xs[bb]).subs(at))
    Jinv = J.inv()
    S = [to_sympy(k)[0] for k in K.components]
    c = [[[sympy.diff(S[a], xs[p], xs[q]).subs(at) for q in range(n)] for p in range(n)] for a in range(n)]
    ct = [[[sympy.cancel(sum(c[a][g][e] * Jinv[e, bb] for e in range(n))) for g in range(n)] for bb in range(n)]
          for a in range(n)]
    for a, bb, g in itertools.product(range(n), repeat=3):
        assert sympy.cancel(ct[a][bb][g] - ct[a][g][bb]) == 0
    for a, bb, r, nu in itertools.product(range(n), repeat=4):
        lhs = sum(ct[a][bb][m] * ct[m][r][nu] - ct[a][r][m] * ct[m][bb][nu] for m in range(n))
        assert sympy.cancel(lhs) == 0


# -- intermediate integrals ------------------------------------------------------------

@pytest.mark.parametrize("name", ["algebra-n2", "a3-wdvv", "commuting-cubic"])
def test_intermediate_integrals_equal_second_tower_level(bundles, name):
    b = bundles(name)
    tower = b.tower(2)
    first = intermediate_integral_first(b.displacement).first
    second = intermediate_integral_second(b.displacement).second
    n = b.chart.n
    assert all(first[i][j] == tower.w[2][i][j] for i in range(n) for j in range(n))
    assert all(second[i] == tower.v[2][i] for i in range(n))


def test_first_integral_defining_equation(bundles):
    K = bundles("commuting-cubic").displacement
    G = intermediate_integral_first(K).first
    n = K.n
    for bb, a, g in itertools.product(range(n), repeat=3):
        rhs = sum((K.hessian[bb][a][r] * K.jacobian[r][g] for r in range(n)), Polynomial.zero(K.chart))
        assert G[bb][g].diff(a) == rhs


def test_intermediate_integrals_reject_non_solutions(bundles):
    K = bundles("nonassoc-n2", trust=False).displacement
    with pytest.raises((NotClosed, NotASolution)):
        intermediate_integral_first(K)
    with pytest.raises((NotClosed, NotASolution)):
        intermediate_integral_second(K)


# -- Backlund-type maps ----------------------------------------------------------------

def test_backlund_on_algebra(bundles):
    b = bundles("algebra-n2")
    out = backlund_oae(b.displacement)
    assert out.residual.is_zero
    assert [str(h) for h in out.H] == ["1/6*x1^3", "1/2*x1^2*x2"]


def test_wdvv_map_on_commuting_cubic(bundles):
    b = bundles("commuting-cubic")
    assert wdvv_condition(b.payload).is_zero
    out = wdvv_to_oae(b.payload)
    assert out.residual.is_zero
    via = wdvv_to_oae_via_reduction(b.payload)
    assert via.H == out.H


def test_backlund_condition_failure_witness(bundles):
    b = bundles("bad-input")
    with pytest.raises(ConditionFailed) as err:
        backlund_oae(b.displacement)
    assert err.value.witness == (0, 0, 1)
    assert err.value.labels == ("beta", "alpha", "gamma")
    assert err.value.difference == 1
    # the witness is a genuine entry of the condition tensor
    assert symmetry_condition(b.displacement).entries[err.value.witness] == err.value.difference


def test_a3_fails_both_side_conditions(bundles):
    b = bundles("a3-wdvv")
    with pytest.raises(ConditionFailed) as sym:
        backlund_oae(b.displacement)
    assert sym.value.witness == (0, 0, 1)
    assert str(sym.value.difference) == "-x2*x3"
    with pytest.raises(ConditionFailed) as wd:
        wdvv_to_oae(b.payload)
    assert wd.value.witness == (1, 0, 1)
    assert str(wd.value.difference) == "-1/2*x3^2"


@pytest.mark.parametrize("name", ["linear-n3", "algebra-n2", "a3-wdvv", "commuting-cubic", "bad-input"])
def test_condition_fails_iff_integrator_reports_gradient_defect(bundles, name):
    K = bundles(name).displacement
    failed = not symmetry_condition(K).is_zero
    try:
        backlund_oae(K, check_condition=False)
        closed = True
    except NotClosed as exc:
        assert "gradient" in str(exc)
        closed = False
    assert failed != closed


def test_wdvv_map_rejects_non_solution(bundles):
    with pytest.raises(ValueError):
        wdvv_to_oae(bundles("bad-wdvv", trust=False).payload)


def test_cubic_wdvv_solutions_satisfy_the_condition():
    """Small brute-force family: every cubic solution found also satisfies the prepotential condition."""
    chart = Chart(3)
    base = parse_polynomial("1/2*x1^2*x3 + 1/2*x1*x2^2", chart)
    monos = [parse_polynomial(m, chart) for m in ("x2^3", "x2^2*x3", "x2*x3^2", "x3^3")]
    metric = Metric.antidiagonal(3)
    solutions = 0
    for coeffs in itertools.product((0, 1, -1), repeat=4):
        F = Prepotential(chart, base + sum((m.scale(c) for m, c in zip(monos, coeffs)), Polynomial.zero(chart)),
                         metric)
        if residual_wdvv(F).is_zero:
            solutions += 1
            assert wdvv_condition(F).is_zero
            assert wdvv_to_oae(F).residual.is_zero
    assert solutions >= 2
