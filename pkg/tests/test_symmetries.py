import itertools
import random

import pytest
import sympy
from gmpy2 import mpq

from oaesym.kernel import Polynomial
from oaesym.solutions import SOLUTIONS
from oaesym.spectral import assemble_chi, assemble_psi, seed_sets, seeds_from_covector
from oaesym.symmetries import (
    SymmetryGenerator, coefficient_symmetries, linearized_residual, make_sigma_symmetry, make_tau_symmetry,
    make_wdvv_chi_symmetry, make_wdvv_chichi_symmetry, make_zeta_symmetry, sigma_coefficients,
    vector_from_scalar, wdvv_coefficient_symmetries, wdvv_linearized_residual,
)

from conftest import random_polynomial, to_sympy


def _spectral(b, order=4, seed=0, which=0):
    tower = b.tower(order)
    s = seed_sets(seed, b.chart.n, order)[which]
    h = seeds_from_covector(s.d, b.metric) if b.kind == "wdvv" else s.h
    return tower, assemble_psi(tower, h), assemble_chi(tower, s.b, s.d)


@pytest.mark.parametrize("name", SOLUTIONS)
def test_nonlocal_symmetries(bundles, name):
    b = bundles(name)
    K = b.displacement
    for which in range(3):
        _, psi, chi = _spectral(b, which=which)
        assert linearized_residual(K, make_tau_symmetry(psi)).is_zero
        assert linearized_residual(K, make_sigma_symmetry(psi, chi)).is_zero
        assert linearized_residual(K, make_zeta_symmetry(psi, chi)).is_zero


def test_linearized_residual_is_linear(bundles):
    b = bundles("a3-wdvv")
    K = b.displacement
    rng = random.Random(3)
    for _ in range(5):
        g1 = SymmetryGenerator("g", tuple(random_polynomial(rng, K.chart, params=1) for _ in range(3)), 3)
        g2 = SymmetryGenerator("g", tuple(random_polynomial(rng, K.chart, params=1) for _ in range(3)), 3)
        a, c = mpq(rng.randint(-4, 4), 3), mpq(rng.randint(-4, 4), 5)
        left = linearized_residual(K, g1.combine(g2, a, c))
        r1, r2 = linearized_residual(K, g1), linearized_residual(K, g2)
        for key in left.entries:
            assert left.entries[key] == r1.entries[key].scale(a) + r2.entries[key].scale(c)


def test_linearized_residual_matches_cas(bundles):
    """Directional derivative of the residual, computed by the CAS with a symbolic epsilon."""
    b = bundles("algebra-n2")
    K = b.displacement
    rng = random.Random(8)
    G = SymmetryGenerator("g", tuple(random_polynomial(rng, K.chart, degree=3) for _ in range(2)))
    xs = sympy.symbols(K.chart.names)
    eps = sympy.Symbol("eps")
    S = [to_sympy(k)[0] + eps * to_sympy(g)[0] for k, g in zip(K.components, G.components)]
    res = linearized_residual(K, G)
    for nu, a, bb, g in itertools.product(range(2), repeat=4):
        full = sum(sympy.diff(S[nu], xs[a], xs[r]) * sympy.diff(S[r], xs[bb], xs[g])
                   - sympy.diff(S[r], xs[a], xs[bb]) * sympy.diff(S[nu], xs[r], xs[g]) for r in range(2))
        want = sympy.expand(full).coeff(eps, 1)
        assert sympy.expand(want - to_sympy(res.entries[(nu, a, bb, g)])[0]) == 0


def test_non_symmetry_is_rejected(bundles):
    K = bundles("a3-wdvv").displacement
    x1 = Polynomial.var(K.chart, 0)
    z = Polynomial.zero(K.chart)
    res = linearized_residual(K, SymmetryGenerator("g", (z, x1 * x1 * x1, z)))
    assert not res.is_zero


def test_perturbed_tau_is_rejected(bundles):
    b = bundles("commuting-cubic")
    _, psi, _ = _spectral(b)
    G = make_tau_symmetry(psi)
    lam = Polynomial.param(b.chart, "lam")
    x2 = Polynomial.var(b.chart, 1)
    bad = SymmetryGenerator("tau", (G.components[0] + (x2 ** 3) * lam ** 2,) + G.components[1:], G.order)
    assert not linearized_residual(b.displacement, bad).is_zero


@pytest.mark.parametrize("name", ["algebra-n2", "commuting-cubic", "bad-input"])
def test_coefficient_symmetries(bundles, name):
    b = bundles(name)
    tower = b.tower(4)
    for k in range(5):
        gens = coefficient_symmetries(tower, k)
        assert len(gens) == b.chart.n + b.chart.n ** 2
        for g in gens:
            assert linearized_residual(b.displacement, g, check=False).is_zero, g.label()


def test_coefficient_symmetry_beyond_tower_is_an_error(bundles):
    with pytest.raises(ValueError):
        coefficient_symmetries(bundles("algebra-n2").tower(2), 3)


def test_sigma_coefficients_are_lam_coefficients(bundles):
    b = bundles("a3-wdvv")
    _, psi, chi = _spectral(b)
    rho = sigma_coefficients(psi, chi)
    G = make_sigma_symmetry(psi, chi)
    for a in range(3):
        for k in range(5):
            assert G.components[a].param_coefficient("lam", k) == rho[k][a]
        # psi(lam) chi(-lam) agrees with the coefficient sum up to lam^4
        full = psi.component(a).mul(chi.polynomial("lam", -1), 4)
        assert full == G.components[a]


def test_cks_symmetries_on_prepotential(bundles):
    b = bundles("a3-wdvv")
    F = b.payload
    for which in range(3):
        _, psi, chi = _spectral(b, which=which)
        assert wdvv_linearized_residual(F, make_wdvv_chi_symmetry(chi)).is_zero
        assert wdvv_linearized_residual(F, make_wdvv_chichi_symmetry(chi)).is_zero
        # the gradient of a scalar symmetry is a displacement symmetry
        assert linearized_residual(b.displacement, vector_from_scalar(make_wdvv_chi_symmetry(chi), F)).is_zero
        assert vector_from_scalar(make_wdvv_chi_symmetry(chi), F).components == make_tau_symmetry(psi).components


def test_perturbed_chi_is_rejected(bundles):
    b = bundles("a3-wdvv")
    _, _, chi = _spectral(b)
    g = make_wdvv_chi_symmetry(chi)
    x3 = Polynomial.var(b.chart, 2)
    bad = SymmetryGenerator("wdvv-chi", (g.scalar + x3 ** 4 * Polynomial.param(b.chart, "lam"),), g.order)
    assert not wdvv_linearized_residual(b.payload, bad).is_zero


def test_prepotential_coefficient_symmetries(bundles):
    b = bundles("a3-wdvv")
    tower = b.tower(4)
    for k in range(5):
        for g in wdvv_coefficient_symmetries(tower, k):
            assert wdvv_linearized_residual(b.payload, g, check=False).is_zero, g.label()


def test_wdvv_residual_requires_solution(bundles):
    b = bundles("bad-wdvv", trust=False)
    g = SymmetryGenerator("Xt", (Polynomial.zero(b.chart),))
    with pytest.raises(ValueError):
        wdvv_linearized_residual(b.payload, g)
