"""Truncated solutions of the vector and scalar spectral problems and the
nonlocal potential towers ``w_k`` and ``v_k`` that generate them.

The spectral parameter is the formal slot ``lam`` of the chart; a series of
order ``N`` stores coefficients ``0..N`` and is meaningful modulo
``lam^(N+1)``.
"""
from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from typing import Sequence

from gmpy2 import mpq

from .kernel import NotClosed, Polynomial, homotopy_integrate_oneform, integrate_hessian, rational
from .model import DisplacementField, Metric, ResidualTensor, residual_oae

DEFAULT_ORDER = 4


class NotASolution(ValueError):
    """Raised when a displacement field fails the oriented associativity equations."""

    def __init__(self, residual: ResidualTensor):
        super().__init__(f"input is not a solution: residual {residual.describe()}")
        self.residual = residual


def require_solution(K: DisplacementField) -> None:
    res = residual_oae(K)
    if not res.is_zero:
        raise NotASolution(res)


def series_polynomial(coeffs: Sequence[Polynomial], param: str = "lam", sign: int = 1) -> Polynomial:
    """``sum_k coeffs[k] * (sign*param)^k``."""
    chart = coeffs[0].chart
    out = Polynomial.zero(chart)
    for k, c in enumerate(coeffs):
        if c:
            term = c * Polynomial.param(chart, param, k)
            out = out + (term if sign > 0 or k % 2 == 0 else -term)
    return out


@dataclass(frozen=True)
class PotentialTower:
    """``w[k][b][g] = (w_k)^b_g`` and ``v[k][b] = v_k^b`` for ``k = 0..order``."""

    K: DisplacementField = field(repr=False)
    order: int
    w: tuple = field(repr=False, default=())
    v: tuple = field(repr=False, default=())

    @property
    def n(self) -> int:
        return self.K.n

    def w_or_zero(self, k: int):
        """``w_k`` with the convention ``w_{-1} = 0``."""
        if k < 0:
            z = Polynomial.zero(self.K.chart)
            return tuple(tuple(z for _ in range(self.n)) for _ in range(self.n))
        return self.w[k]


def build_w_tower(K: DisplacementField, N: int = DEFAULT_ORDER, *, check: bool = True) -> tuple:
    """``w_0 = delta``, ``w_1 = dK``, and ``d(w_k)^b_g/dx^a = K^b_{,a r}(w_{k-1})^r_g`` for k >= 2."""
    if check:
        require_solution(K)
    chart, n, H = K.chart, K.n, K.hessian
    w0 = tuple(tuple(Polynomial.const(chart, int(b == g)) for g in range(n)) for b in range(n))
    tower = [w0]
    if N >= 1:
        tower.append(K.jacobian)
    for k in range(2, N + 1):
        prev = tower[-1]
        level = []
        for b in range(n):
            row = []
            for g in range(n):
                omega = []
                for a in range(n):
                    acc = Polynomial.zero(chart)
                    for r in range(n):
                        if H[b][a][r] and prev[r][g]:
                            acc = acc + H[b][a][r] * prev[r][g]
                    omega.append(acc)
                row.append(homotopy_integrate_oneform(omega, chart))
            level.append(tuple(row))
        tower.append(tuple(level))
    return tuple(tower)


def build_v_tower(K: DisplacementField, N: int = DEFAULT_ORDER, *, check: bool = True) -> tuple:
    """``v_0 = x``, ``v_1 = K``, ``d^2 v_k^b/dx^a dx^c = K^nu_{,ac} dv_{k-1}^b/dx^nu`` for k >= 2."""
    if check:
        require_solution(K)
    chart, n, H = K.chart, K.n, K.hessian
    tower = [tuple(Polynomial.var(chart, b) for b in range(n))]
    if N >= 1:
        tower.append(K.components)
    for k in range(2, N + 1):
        prev = tower[-1]
        level = []
        for b in range(n):
            grad = [prev[b].diff(nu) for nu in range(n)]
            hess = []
            for a in range(n):
                row = []
                for c in range(n):
                    acc = Polynomial.zero(chart)
                    for nu in range(n):
                        if H[nu][a][c] and grad[nu]:
                            acc = acc + H[nu][a][c] * grad[nu]
                    row.append(acc)
                hess.append(row)
            level.append(integrate_hessian(hess, chart))
        tower.append(tuple(level))
    return tuple(tower)


def build_tower(K: DisplacementField, N: int = DEFAULT_ORDER) -> PotentialTower:
    require_solution(K)
    return PotentialTower(K, N, build_w_tower(K, N, check=False), build_v_tower(K, N, check=False))


# -- spectral series --------------------------------------------------------

@dataclass(frozen=True)
class VectorSpectralSeries:
    order: int
    coeffs: tuple  # coeffs[k][a] = psi_k^a
    seeds: tuple = ()  # seeds[j][g] = h_j^g

    def component(self, a: int, param: str = "lam", sign: int = 1) -> Polynomial:
        return series_polynomial([c[a] for c in self.coeffs], param, sign)

    def components(self, param: str = "lam", sign: int = 1) -> list[Polynomial]:
        return [self.component(a, param, sign) for a in range(len(self.coeffs[0]))]


@dataclass(frozen=True)
class ScalarSpectralSeries:
    order: int
    coeffs: tuple  # chi_k
    b: tuple = ()
    d: tuple = ()
    normalized: bool = False

    def polynomial(self, param: str = "lam", sign: int = 1) -> Polynomial:
        return series_polynomial(self.coeffs, param, sign)

    def flipped(self) -> ScalarSpectralSeries:
        """``chi(-lam)`` by the coefficient sign flip ``(-1)^k``."""
        return ScalarSpectralSeries(
            self.order, tuple(c if k % 2 == 0 else -c for k, c in enumerate(self.coeffs)),
            self.b, self.d, self.normalized,
        )


@dataclass(frozen=True)
class CovectorSpectralSeries:
    order: int
    coeffs: tuple  # coeffs[k][a] = phi_{k,a}

    def component(self, a: int, param: str = "lam", sign: int = 1) -> Polynomial:
        return series_polynomial([c[a] for c in self.coeffs], param, sign)


def _pad(seq, length, make_zero):
    seq = list(seq)
    return seq + [make_zero() for _ in range(length - len(seq))]


def assemble_psi(tower: PotentialTower, h: Sequence[Sequence]) -> VectorSpectralSeries:
    """``psi_k^a = sum_{j<=k} h_j^g (w_{k-j})^a_g``."""
    n, N = tower.n, tower.order
    h = tuple(tuple(rational(x) for x in hj) for hj in _pad(h, N + 1, lambda: [0] * n))[: N + 1]
    chart = tower.K.chart
    coeffs = []
    for k in range(N + 1):
        comp = []
        for a in range(n):
            acc = Polynomial.zero(chart)
            for j in range(k + 1):
                wk = tower.w[k - j]
                for g in range(n):
                    if h[j][g]:
                        acc = acc + wk[a][g].scale(h[j][g])
            comp.append(acc)
        coeffs.append(tuple(comp))
    return VectorSpectralSeries(N, tuple(coeffs), h)


def assemble_chi(tower: PotentialTower, b: Sequence, d: Sequence[Sequence]) -> ScalarSpectralSeries:
    """``chi_k = b_k + sum_{j<=k} d_{k-j,g} v_j^g``."""
    n, N = tower.n, tower.order
    chart = tower.K.chart
    b = tuple(rational(x) for x in _pad(b, N + 1, lambda: 0))[: N + 1]
    d = tuple(tuple(rational(x) for x in dj) for dj in _pad(d, N + 1, lambda: [0] * n))[: N + 1]
    coeffs = []
    for k in range(N + 1):
        acc = Polynomial.const(chart, b[k])
        for j in range(k + 1):
            for g in range(n):
                if d[k - j][g]:
                    acc = acc + tower.v[j][g].scale(d[k - j][g])
        coeffs.append(acc)
    normalized = all(x == 0 for x in b) and all(all(x == 0 for x in dj) for dj in d[1:]) and (
        sorted(d[0]) == [0] * (n - 1) + [1]
    )
    return ScalarSpectralSeries(N, tuple(coeffs), b, d, normalized)


def normalized_chi(tower: PotentialTower, alpha: int) -> ScalarSpectralSeries:
    """The flat coordinate ``chi^alpha`` with ``chi^alpha|_{lam=0} = x^alpha``."""
    d0 = [int(g == alpha) for g in range(tower.n)]
    return assemble_chi(tower, [], [d0])


def covector_from_scalar(chi: ScalarSpectralSeries) -> CovectorSpectralSeries:
    """``phi_{k,a} = d chi_k / dx^a``."""
    n = chi.coeffs[0].chart.n
    return CovectorSpectralSeries(chi.order, tuple(tuple(c.diff(a) for a in range(n)) for c in chi.coeffs))


def seeds_from_covector(d: Sequence[Sequence], metric: Metric) -> tuple:
    """``h_j^a = eta^{ab} d_{j,b}``: vector seeds matching scalar seeds under the gradient reduction."""
    return tuple(tuple(metric.raise_index([rational(x) for x in dj])) for dj in d)


def gradient_psi(chi: ScalarSpectralSeries, metric: Metric) -> VectorSpectralSeries:
    """``psi^a = eta^{ab} d chi / dx^b`` coefficient-wise."""
    n = metric.n
    coeffs = tuple(tuple(metric.raise_index([c.diff(b) for b in range(n)])) for c in chi.coeffs)
    return VectorSpectralSeries(chi.order, coeffs, seeds_from_covector(chi.d, metric))


# -- verification -------------------------------------------------------------

def verify_vector_spectral(K: DisplacementField, psi: VectorSpectralSeries, param: str = "lam") -> ResidualTensor:
    """Entries ``(a,b)``: ``dpsi^a/dx^b - lam K^a_{,bg} psi^g`` modulo ``lam^(N+1)``."""
    n, N, H = K.n, psi.order, K.hessian
    chart = K.chart
    lam = Polynomial.param(chart, param)
    comps = psi.components(param)

    def entry(a, b):
        acc = comps[a].diff(b)
        rhs = Polynomial.zero(chart)
        for g in range(n):
            if H[a][b][g]:
                rhs = rhs + H[a][b][g] * comps[g]
        return (acc - lam.mul(rhs, N)).truncate(N)

    return ResidualTensor.build(("alpha", "beta"), itertools.product(range(n), repeat=2), entry)


def verify_scalar_spectral(K: DisplacementField, chi: ScalarSpectralSeries, param: str = "lam") -> ResidualTensor:
    """Entries ``(a,c)``: ``chi_{,ac} - lam K^nu_{,ac} chi_{,nu}`` modulo ``lam^(N+1)``."""
    n, N, H = K.n, chi.order, K.hessian
    chart = K.chart
    lam = Polynomial.param(chart, param)
    p = chi.polynomial(param)
    grad = [p.diff(nu) for nu in range(n)]

    def entry(a, c):
        rhs = Polynomial.zero(chart)
        for nu in range(n):
            if H[nu][a][c]:
                rhs = rhs + H[nu][a][c] * grad[nu]
        return (grad[a].diff(c) - lam.mul(rhs, N)).truncate(N)

    return ResidualTensor.build(("alpha", "gamma"), itertools.product(range(n), repeat=2), entry)


def verify_covector_spectral(K: DisplacementField, phi: CovectorSpectralSeries, param: str = "lam") -> ResidualTensor:
    """Entries ``(a,b)``: ``dphi_a/dx^b - lam c^d_{ab} phi_d`` modulo ``lam^(N+1)``."""
    n, N, H = K.n, phi.order, K.hessian
    chart = K.chart
    lam = Polynomial.param(chart, param)
    comps = [phi.component(a, param) for a in range(n)]

    def entry(a, b):
        rhs = Polynomial.zero(chart)
        for d in range(n):
            if H[d][a][b]:
                rhs = rhs + H[d][a][b] * comps[d]
        return (comps[a].diff(b) - lam.mul(rhs, N)).truncate(N)

    return ResidualTensor.build(("alpha", "beta"), itertools.product(range(n), repeat=2), entry)


# -- seeds ------------------------------------------------------------------------

@dataclass(frozen=True)
class SeedSet:
    """Integration constants: ``h`` for psi, ``b`` and ``d`` for chi."""

    h: tuple
    b: tuple
    d: tuple


def _small_rational(rng: random.Random):
    return mpq(rng.randint(-5, 5), rng.randint(1, 4))


def random_seeds(rng: random.Random, n: int, N: int) -> SeedSet:
    """Seeds with small random rationals; ``h_0`` and ``d_0`` are kept nonzero."""
    def vec(nonzero=False):
        while True:
            v = tuple(_small_rational(rng) for _ in range(n))
            if not nonzero or any(v):
                return v

    h = tuple(vec(nonzero=(j == 0)) for j in range(N + 1))
    b = tuple(_small_rational(rng) for _ in range(N + 1))
    d = tuple(vec(nonzero=(j == 0)) for j in range(N + 1))
    return SeedSet(h, b, d)


def seed_sets(seed: int, n: int, N: int, count: int = 3) -> list[SeedSet]:
    rng = random.Random(seed)
    return [random_seeds(rng, n, N) for _ in range(count)]


__all__ = [
    "DEFAULT_ORDER", "CovectorSpectralSeries", "NotASolution", "NotClosed", "PotentialTower",
    "ScalarSpectralSeries", "SeedSet", "VectorSpectralSeries", "assemble_chi", "assemble_psi",
    "build_tower", "build_v_tower", "build_w_tower", "covector_from_scalar", "gradient_psi",
    "normalized_chi", "random_seeds", "require_solution", "seed_sets", "seeds_from_covector",
    "series_polynomial", "verify_covector_spectral", "verify_scalar_spectral", "verify_vector_spectral",
]
