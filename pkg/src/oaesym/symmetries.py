"""Linearized associativity equations and the nonlocal symmetry families.

Generators are plain data; :func:`linearized_residual` and
:func:`wdvv_linearized_residual` decide whether they are symmetries.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .kernel import Polynomial
from .model import DisplacementField, Prepotential, ResidualTensor
from .spectral import PotentialTower, ScalarSpectralSeries, VectorSpectralSeries, require_solution


@dataclass(frozen=True)
class SymmetryGenerator:
    """``G^a d/dK^a`` (vector) or ``g d/dF`` (scalar), possibly a truncated lam-series.

    ``order`` is the lam-truncation order (``None`` for lam-free generators).
    """

    kind: str
    components: tuple
    order: int | None = None
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def is_scalar(self) -> bool:
        return len(self.components) == 1 and self.kind.startswith(("wdvv", "Xt", "Zt"))

    @property
    def scalar(self) -> Polynomial:
        return self.components[0]

    def label(self) -> str:
        if not self.meta:
            return self.kind
        return self.kind + "[" + ",".join(f"{k}={v}" for k, v in sorted(self.meta.items())) + "]"

    def combine(self, other: SymmetryGenerator, a, b) -> SymmetryGenerator:
        """``a*self + b*other`` componentwise."""
        comps = tuple(p.scale(a) + q.scale(b) for p, q in zip(self.components, other.components))
        orders = [o for o in (self.order, other.order) if o is not None]
        return SymmetryGenerator("combination", comps, min(orders) if orders else None)


def _second(p: Polynomial, n: int):
    d1 = [p.diff(a) for a in range(n)]
    out = [[None] * n for _ in range(n)]
    for a in range(n):
        for b in range(a, n):
            out[a][b] = out[b][a] = d1[a].diff(b)
    return out


def linearized_residual(K: DisplacementField, G: SymmetryGenerator, *, check: bool = True) -> ResidualTensor:
    """Linearization of the oriented associativity equations at ``K`` in direction ``G``.

    Entry ``(nu,a,b,g) = G^nu_{,ar}K^r_{,bg} + K^nu_{,ar}G^r_{,bg} - G^r_{,ab}K^nu_{,rg} - K^r_{,ab}G^nu_{,rg}``,
    truncated at ``G.order`` in ``lam``.
    """
    if check:
        require_solution(K)
    n = K.n
    if len(G.components) != n:
        raise ValueError(f"generator has {len(G.components)} components, chart has {n}")
    N = G.order
    H = K.hessian
    GH = [_second(p, n) for p in G.components]
    zero = Polynomial.zero(K.chart)

    def entry(nu, a, b, g):
        acc = zero
        for r in range(n):
            acc = (
                acc
                + GH[nu][a][r].mul(H[r][b][g], N)
                + H[nu][a][r].mul(GH[r][b][g], N)
                - GH[r][a][b].mul(H[nu][r][g], N)
                - H[r][a][b].mul(GH[nu][r][g], N)
            )
        return acc

    return ResidualTensor.build(("nu", "alpha", "beta", "gamma"), itertools.product(range(n), repeat=4), entry)


def make_tau_symmetry(psi: VectorSpectralSeries) -> SymmetryGenerator:
    """``G^a = psi^a(lam)``."""
    return SymmetryGenerator("tau", tuple(psi.components("lam")), psi.order)


def sigma_coefficients(psi: VectorSpectralSeries, chi: ScalarSpectralSeries) -> list[list[Polynomial]]:
    """``rho_k^a = sum_j (-1)^j chi_j psi^a_{k-j}``, the lam-coefficients of ``psi(lam) chi(-lam)``."""
    if psi.order != chi.order:
        raise ValueError(f"order mismatch: psi has order {psi.order}, chi has order {chi.order}")
    n = len(psi.coeffs[0])
    rho = []
    for k in range(psi.order + 1):
        comp = []
        for a in range(n):
            acc = Polynomial.zero(chi.coeffs[0].chart)
            for j in range(k + 1):
                term = chi.coeffs[j] * psi.coeffs[k - j][a]
                acc = acc - term if j % 2 else acc + term
            comp.append(acc)
        rho.append(comp)
    return rho


def make_sigma_symmetry(psi: VectorSpectralSeries, chi: ScalarSpectralSeries) -> SymmetryGenerator:
    """``G^a = psi^a(lam) chi(-lam)`` truncated at ``lam^N``."""
    rho = sigma_coefficients(psi, chi)
    chart = chi.coeffs[0].chart
    n = len(rho[0])
    comps = []
    for a in range(n):
        acc = Polynomial.zero(chart)
        for k, r in enumerate(rho):
            acc = acc + r[a] * Polynomial.param(chart, "lam", k)
        comps.append(acc)
    return SymmetryGenerator("sigma", tuple(comps), psi.order)


def make_zeta_symmetry(psi: VectorSpectralSeries, chi: ScalarSpectralSeries) -> SymmetryGenerator:
    """``G^a = psi^a(lam) chi(-lam) + psi^a(-lam) chi(lam)``."""
    if psi.order != chi.order:
        raise ValueError("order mismatch between psi and chi")
    N = psi.order
    plus, minus = chi.polynomial("lam"), chi.polynomial("lam", -1)
    comps = tuple(
        psi.component(a, "lam").mul(minus, N) + psi.component(a, "lam", -1).mul(plus, N)
        for a in range(len(psi.coeffs[0]))
    )
    return SymmetryGenerator("zeta", comps, N)


def coefficient_symmetries(tower: PotentialTower, k: int) -> list[SymmetryGenerator]:
    """``X_{k,b}: G^a = (w_k)^a_b`` and ``Y^b_{k,g}: G^a = sum_j (-1)^j v_j^b (w_{k-j})^a_g``."""
    if k > tower.order:
        raise ValueError(f"tower order {tower.order} < {k}")
    n = tower.n
    out = []
    for b in range(n):
        out.append(SymmetryGenerator("X", tuple(tower.w[k][a][b] for a in range(n)), None, {"k": k, "beta": b + 1}))
    for b in range(n):
        for g in range(n):
            comps = []
            for a in range(n):
                acc = Polynomial.zero(tower.K.chart)
                for j in range(k + 1):
                    term = tower.v[j][b] * tower.w[k - j][a][g]
                    acc = acc - term if j % 2 else acc + term
                comps.append(acc)
            out.append(SymmetryGenerator("Y", tuple(comps), None, {"k": k, "beta": b + 1, "gamma": g + 1}))
    return out


# -- WDVV reduction ---------------------------------------------------------------

def _third(g: Polynomial, n: int) -> dict:
    out = {}
    for a in range(n):
        ga = g.diff(a)
        for b in range(a, n):
            gab = ga.diff(b)
            for c in range(b, n):
                out[(a, b, c)] = gab.diff(c)
    return out


def wdvv_linearized_residual(F: Prepotential, g: SymmetryGenerator, *, check: bool = True) -> ResidualTensor:
    """Linearization of the WDVV system at ``F`` in the scalar direction ``g``.

    Entry ``(a,b,nu,rho)``: ``g_{abd} eta^{dc} F_{c nu rho} + F_{abd} eta^{dc} g_{c nu rho}``
    minus the same with ``b`` and ``nu`` exchanged.
    """
    from .model import residual_wdvv

    if check:
        res = residual_wdvv(F)
        if not res.is_zero:
            raise ValueError(f"prepotential is not a WDVV solution: {res.describe()}")
    n = F.chart.n
    N = g.order
    eta = F.metric.upper
    G3 = _third(g.scalar, n)

    def d3(table, a, b, c):
        return table[tuple(sorted((a, b, c)))]

    pairs = [(d, c, eta[d, c]) for d in range(n) for c in range(n) if eta[d, c]]

    def half(a, b, nu, r):
        acc = Polynomial.zero(F.chart)
        for d, c, e in pairs:
            acc = acc + (
                d3(G3, a, b, d).mul(F.d3(c, nu, r), N) + F.d3(a, b, d).mul(d3(G3, c, nu, r), N)
            ).scale(e)
        return acc

    return ResidualTensor.build(
        ("alpha", "beta", "nu", "rho"), itertools.product(range(n), repeat=4),
        lambda a, b, nu, r: half(a, b, nu, r) - half(a, nu, b, r),
    )


def make_wdvv_chi_symmetry(chi: ScalarSpectralSeries) -> SymmetryGenerator:
    """``g = chi(lam)``."""
    return SymmetryGenerator("wdvv-chi", (chi.polynomial("lam"),), chi.order)


def make_wdvv_chichi_symmetry(chi: ScalarSpectralSeries) -> SymmetryGenerator:
    """``g = chi(lam) chi(-lam)``."""
    N = chi.order
    return SymmetryGenerator("wdvv-chichi", (chi.polynomial("lam").mul(chi.polynomial("lam", -1), N),), N)


def wdvv_coefficient_symmetries(tower: PotentialTower, k: int) -> list[SymmetryGenerator]:
    """``Xt^b_k: g = v_k^b`` and ``Zt^{ab}_k: g = sum_j (-1)^j v_j^a v_{k-j}^b``."""
    if k > tower.order:
        raise ValueError(f"tower order {tower.order} < {k}")
    n = tower.n
    out = [SymmetryGenerator("Xt", (tower.v[k][b],), None, {"k": k, "beta": b + 1}) for b in range(n)]
    for a in range(n):
        for b in range(n):
            acc = Polynomial.zero(tower.K.chart)
            for j in range(k + 1):
                term = tower.v[j][a] * tower.v[k - j][b]
                acc = acc - term if j % 2 else acc + term
            out.append(SymmetryGenerator("Zt", (acc,), None, {"k": k, "alpha": a + 1, "beta": b + 1}))
    return out


def vector_from_scalar(g: SymmetryGenerator, F: Prepotential) -> SymmetryGenerator:
    """``G^a = eta^{ab} dg/dx^b``: the displacement-level image of a scalar generator."""
    n = F.chart.n
    comps = tuple(F.metric.raise_index([g.scalar.diff(b) for b in range(n)]))
    return SymmetryGenerator(g.kind + "-grad", comps, g.order, dict(g.meta))
