"""Darboux-type change of independent variables and the intermediate-integral
and Backlund-type constructions.

Darboux check.  With ``x~ = psi(lam)`` and ``J = d psi / dx`` the new
structure constants are ``c~^a_{bg} = c^a_{ge} (J^-1)^e_b``.  Because
``psi_0`` is constant, ``J = lam * M(lam)``; we work with
``c^ = lam * c~ = c * M^-1`` where ``M^-1`` is a formal power series in
``lam`` obtained from ``M_0^-1`` by the usual recursion.  The symmetry and
associativity residuals of ``c~`` are ``lam^-1`` and ``lam^-2`` times those of
``c^``, so vanishing is decided on ``c^``.

A truncated series of order ``N`` still has ``d psi^a/dx^b = lam c^a_{bg} Psi^g``
exactly, with ``Psi = sum_{k<N} lam^k psi_k``, and that is the only property
the symmetry and associativity argument uses.  So the residuals of the
truncated map vanish to every order in ``lam``; they are checked modulo
``lam^precision`` (default ``N + 1``).
"""
from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

from gmpy2 import mpq

from .kernel import (
    NotClosed, Polynomial, RationalMatrix, Singular, determinant, homotopy_integrate_oneform,
    integrate_hessian, invert_matrix, rational,
)
from .model import DisplacementField, Prepotential, ResidualTensor, gradient_reduce, residual_oae, residual_wdvv
from .spectral import VectorSpectralSeries, require_solution


class ConditionFailed(ValueError):
    """A side condition of a Backlund-type construction does not hold.

    ``witness`` is a 0-based index tuple and ``difference`` the nonzero
    polynomial found there.
    """

    def __init__(self, condition: str, labels: Sequence[str], witness: tuple, difference: Polynomial):
        idx = ",".join(str(i + 1) for i in witness)
        super().__init__(f"{condition} fails at ({idx}) [{','.join(labels)}]: {difference}")
        self.condition = condition
        self.labels = tuple(labels)
        self.witness = witness
        self.difference = difference


class NoUsablePoints(ValueError):
    """No sampled point has a nonsingular ``M_0``.

    ``identically_singular`` is set when ``det M_0`` is the zero polynomial,
    so that no point at all can be used with this ``psi``.
    """

    def __init__(self, message: str, identically_singular: bool = False):
        super().__init__(message)
        self.identically_singular = identically_singular


# -- Darboux ------------------------------------------------------------------------

def _mat_mul(a, b):
    n = len(a)
    return [[sum((a[i][k] * b[k][j] for k in range(n)), mpq(0)) for j in range(n)] for i in range(n)]


def _mat_add(a, b):
    return [[x + y for x, y in zip(ra, rb)] for ra, rb in zip(a, b)]


def _zero_matrix(n):
    return [[mpq(0)] * n for _ in range(n)]


def inverse_series(M: Sequence, order: int) -> list:
    """Coefficients ``0..order-1`` of ``M(lam)^-1`` given ``M[k]`` (lists of rows).

    Raises :class:`Singular` when ``M[0]`` is not invertible.
    """
    n = len(M[0])
    inv0 = [list(r) for r in invert_matrix(RationalMatrix(M[0])).rows]
    out = [inv0]
    for k in range(1, order):
        acc = _zero_matrix(n)
        for j in range(1, k + 1):
            if j < len(M):
                acc = _mat_add(acc, _mat_mul(M[j], out[k - j]))
        out.append([[-x for x in r] for r in _mat_mul(inv0, acc)])
    return out


@dataclass
class DarbouxPoint:
    point: tuple
    jacobian: list  # jacobian[k] = coefficient of lam^k in d psi / dx (rows = components)
    inverse: list  # inverse[k] = coefficient of lam^k in M^-1
    connection: list  # connection[k][a][b][g] = coefficient of lam^k in c^ = lam * c~
    symmetry: ResidualTensor
    associativity: ResidualTensor
    instantiated: tuple | None = None  # (lam0, max |sym residual|, max |assoc residual|) of c~ itself

    @property
    def is_zero(self) -> bool:
        return self.symmetry.is_zero and self.associativity.is_zero


@dataclass
class DarbouxReport:
    order: int  # order of psi
    precision: int  # residuals are exact modulo lam^precision
    points: list = field(default_factory=list)
    skipped: list = field(default_factory=list)  # (point, reason)
    degenerate: bool = False  # zero connection: c~ = 0 identically

    @property
    def witness(self):
        for p in self.points:
            if not p.symmetry.is_zero:
                return p.point, "symmetry", p.symmetry
            if not p.associativity.is_zero:
                return p.point, "associativity", p.associativity
        return None

    @property
    def is_zero(self) -> bool:
        return self.witness is None

    @property
    def verdict(self) -> str:
        return "zero" if self.is_zero else "nonzero"

    def describe(self) -> str:
        if self.degenerate:
            return f"zero connection: transformed constants vanish identically ({len(self.points)} points)"
        w = self.witness
        if w is None:
            return (f"zero mod lam^{self.precision} at {len(self.points)} points"
                    f" ({len(self.skipped)} singular points skipped)")
        point, kind, res = w
        return f"{kind} residual nonzero at point {_fmt_point(point)}: {res.describe()}"


def _fmt_point(p) -> str:
    return "(" + ",".join(str(x) for x in p) + ")"


def sample_points(n: int, seed: int) -> Iterator[tuple]:
    """Deterministic lattice points followed by seeded random rational points."""
    lattice = [tuple(mpq(0) for _ in range(n))]
    lattice += [tuple(mpq(1 if i == j else 0) for i in range(n)) for j in range(n)]
    lattice += [tuple(mpq(1) for _ in range(n)), tuple(mpq(i + 1, 2) for i in range(n))]
    yield from lattice
    rng = random.Random(seed)
    while True:
        yield tuple(mpq(rng.randint(-6, 6), rng.randint(1, 3)) for _ in range(n))


def _series_matrices(psi: VectorSpectralSeries, point) -> list:
    """``J_k[a][b] = d psi_k^a / dx^b`` at ``point``, ``k = 0..order``."""
    n = len(psi.coeffs[0])
    out = []
    for coeff in psi.coeffs:
        out.append([[coeff[a].diff(b).evaluate_x(point).value() for b in range(n)] for a in range(n)])
    return out


def _lam_poly(chart, values: Sequence) -> Polynomial:
    acc = Polynomial.zero(chart)
    for k, v in enumerate(values):
        if v:
            acc = acc + Polynomial.param(chart, "lam", k).scale(v)
    return acc


def _darboux_at(K: DisplacementField, psi: VectorSpectralSeries, point, P: int, lam0=None) -> DarbouxPoint:
    n = K.n
    chart = K.chart
    c = [[[K.hessian[a][b][g].evaluate_x(point).value() for g in range(n)] for b in range(n)] for a in range(n)]
    J = _series_matrices(psi, point)
    M = J[1:]
    inv = inverse_series(M, P)
    # hat[k][a][b][g] = sum_e c^a_{g e} (M^-1_k)^e_b
    hat = [
        [[[sum((c[a][g][e] * inv[k][e][b] for e in range(n)), mpq(0)) for g in range(n)] for b in range(n)]
         for a in range(n)]
        for k in range(P)
    ]

    def sym(a, b, g):
        return _lam_poly(chart, [hat[k][a][b][g] - hat[k][a][g][b] for k in range(P)])

    def assoc(a, b, r, nu):
        vals = []
        for k in range(P):
            s = mpq(0)
            for i in range(k + 1):
                for g in range(n):
                    s += hat[i][a][b][g] * hat[k - i][g][r][nu] - hat[i][a][nu][g] * hat[k - i][g][r][b]
            vals.append(s)
        return _lam_poly(chart, vals)

    symmetry = ResidualTensor.build(("alpha", "beta", "gamma"), itertools.product(range(n), repeat=3), sym)
    associativity = ResidualTensor.build(
        ("alpha", "beta", "rho", "nu"), itertools.product(range(n), repeat=4), assoc
    )
    inst = None
    if lam0 is not None:
        inst = _instantiate(c, J, rational(lam0))
    return DarbouxPoint(tuple(point), J, inv, hat, symmetry, associativity, inst)


def _instantiate(c, J, lam0) -> tuple:
    """Residual sizes of ``c~`` with ``lam`` replaced by a number (order-``P`` approximation)."""
    n = len(c)
    Jv = _zero_matrix(n)
    for k, Jk in enumerate(J):
        Jv = _mat_add(Jv, [[x * lam0 ** k for x in r] for r in Jk])
    inv = invert_matrix(RationalMatrix(Jv)).rows
    ct = [[[sum((c[a][g][e] * inv[e][b] for e in range(n)), mpq(0)) for g in range(n)] for b in range(n)]
          for a in range(n)]
    s = max(abs(ct[a][b][g] - ct[a][g][b]) for a, b, g in itertools.product(range(n), repeat=3))
    t = max(
        abs(sum((ct[a][b][g] * ct[g][r][nu] - ct[a][nu][g] * ct[g][r][b] for g in range(n)), mpq(0)))
        for a, b, r, nu in itertools.product(range(n), repeat=4)
    )
    return lam0, s, t


def darboux_verify(
    K: DisplacementField,
    psi: VectorSpectralSeries,
    points: Iterable | None = None,
    *,
    count: int = 10,
    seed: int = 0,
    lam0=None,
    precision: int | None = None,
    max_attempts: int | None = None,
) -> DarbouxReport:
    """Pointwise exact check that ``c~`` is symmetric and associative modulo ``lam^precision``.

    ``points`` defaults to :func:`sample_points`; points where ``M_0`` is
    singular are skipped and listed.  Collection stops after ``count`` usable
    points.  ``lam0`` additionally reports residual sizes of the numerically
    instantiated transformation; those are informational only.
    """
    require_solution(K)
    if psi.order < 1:
        raise ValueError("psi must have order >= 1")
    n = K.n
    P = psi.order + 1 if precision is None else precision
    report = DarbouxReport(psi.order, P)
    if all(not K.hessian[a][b][g] for a, b, g in itertools.product(range(n), repeat=3)):
        # J vanishes identically; the transformed constants are c * J^-1 = 0 in any reading
        report.degenerate = True
        src = sample_points(n, seed) if points is None else iter(points)
        zero_chart = K.chart
        for p in itertools.islice(src, count):
            z3 = ResidualTensor.build(("alpha", "beta", "gamma"), itertools.product(range(n), repeat=3),
                                      lambda *_: Polynomial.zero(zero_chart))
            z4 = ResidualTensor.build(("alpha", "beta", "rho", "nu"), itertools.product(range(n), repeat=4),
                                      lambda *_: Polynomial.zero(zero_chart))
            report.points.append(DarbouxPoint(tuple(p), [], [], [], z3, z4))
        return report
    if not leading_jacobian_determinant_polynomial(psi):
        raise NoUsablePoints("det M_0 vanishes identically for this psi", identically_singular=True)
    src = sample_points(n, seed) if points is None else iter(points)
    limit = max_attempts if max_attempts is not None else 20 * count
    for attempt, p in enumerate(src):
        if len(report.points) >= count or attempt >= limit:
            break
        p = tuple(rational(x) for x in p)
        try:
            report.points.append(_darboux_at(K, psi, p, P, lam0))
        except Singular:
            report.skipped.append((p, "leading Jacobian coefficient is singular"))
    if not report.points:
        raise NoUsablePoints(f"no nonsingular point among {len(report.skipped)} tried")
    return report


def leading_jacobian_determinant(psi: VectorSpectralSeries, point) -> mpq:
    """``det M_0`` at ``point``: the point is usable iff this is nonzero."""
    return determinant(RationalMatrix(_series_matrices(psi, point)[1]))


def leading_jacobian_determinant_polynomial(psi: VectorSpectralSeries) -> Polynomial:
    """``det M_0`` as a polynomial in ``x`` (Leibniz expansion, fine for small ``n``)."""
    row = psi.coeffs[1]
    n = len(row)
    M = [[row[a].diff(b) for b in range(n)] for a in range(n)]
    total = Polynomial.zero(row[0].chart)
    for perm in itertools.permutations(range(n)):
        inversions = sum(perm[i] > perm[j] for i in range(n) for j in range(i + 1, n))
        term = M[0][perm[0]]
        for a in range(1, n):
            term = term * M[a][perm[a]]
        total = total - term if inversions % 2 else total + term
    return total


# -- intermediate integrals and Backlund-type constructions ---------------------------

@dataclass
class PotentialPair:
    """Potentials produced from a solution; unused parts stay ``None``.

    ``first[b][g]`` is ``G^b_g``, ``second[b]`` is ``G^b`` and ``H[b]`` the
    Backlund image.  ``residual`` is ``residual_oae`` of ``H`` when computed.
    """

    first: tuple | None = None
    second: tuple | None = None
    H: tuple | None = None
    residual: ResidualTensor | None = None


def _first_kind_rhs(K: DisplacementField):
    """``S[b][a][g] = K^b_{,a r} K^r_{,g}``."""
    n = K.n
    Hs, Jc = K.hessian, K.jacobian
    out = []
    for b in range(n):
        rows = []
        for a in range(n):
            row = []
            for g in range(n):
                acc = Polynomial.zero(K.chart)
                for r in range(n):
                    if Hs[b][a][r] and Jc[r][g]:
                        acc = acc + Hs[b][a][r] * Jc[r][g]
                row.append(acc)
            rows.append(row)
        out.append(rows)
    return out


def intermediate_integral_first(K: DisplacementField) -> PotentialPair:
    """``G^b_g`` with ``dG^b_g/dx^a = K^b_{,a r} K^r_{,g}`` and ``G(0) = 0``.

    Closedness of the integrands is equivalent to the oriented associativity
    equations, so a non-solution surfaces as :class:`NotClosed`.
    """
    n = K.n
    S = _first_kind_rhs(K)
    G = []
    for b in range(n):
        row = []
        for g in range(n):
            try:
                row.append(homotopy_integrate_oneform([S[b][a][g] for a in range(n)], K.chart))
            except NotClosed as exc:
                raise NotClosed(*exc.witness, exc.difference, what=f"first-kind integrand ({b + 1},{g + 1})") from None
        G.append(tuple(row))
    return PotentialPair(first=tuple(G))


def intermediate_integral_second(K: DisplacementField) -> PotentialPair:
    """``G^b`` with ``d^2 G^b / dx^a dx^g = K^nu_{,a g} K^b_{,nu}``, ``G(0) = 0``, ``grad G(0) = 0``."""
    n = K.n
    Hs, Jc = K.hessian, K.jacobian
    out = []
    for b in range(n):
        hess = [[None] * n for _ in range(n)]
        for a in range(n):
            for g in range(n):
                acc = Polynomial.zero(K.chart)
                for nu in range(n):
                    if Hs[nu][a][g] and Jc[b][nu]:
                        acc = acc + Hs[nu][a][g] * Jc[b][nu]
                hess[a][g] = acc
        out.append(integrate_hessian(hess, K.chart))
    return PotentialPair(second=tuple(out))


def symmetry_condition(K: DisplacementField) -> ResidualTensor:
    """Entry ``(b,a,g) = K^b_{,a r}K^r_{,g} - K^b_{,g r}K^r_{,a}``."""
    n = K.n
    S = _first_kind_rhs(K)
    return ResidualTensor.build(
        ("beta", "alpha", "gamma"), itertools.product(range(n), repeat=3),
        lambda b, a, g: S[b][a][g] - S[b][g][a],
    )


def _raise_condition(name: str, res: ResidualTensor):
    if not res.is_zero:
        raise ConditionFailed(name, res.labels, res.witness, res.witness_entry())


def _integrate_components(S, chart) -> tuple:
    return tuple(integrate_hessian(S[b], chart) for b in range(len(S)))


def backlund_oae(K: DisplacementField, *, check_condition: bool = True) -> PotentialPair:
    """``H^b`` with ``d^2 H^b/dx^a dx^g = K^b_{,a r} K^r_{,g}``, plus ``residual_oae(H)``.

    With ``check_condition=False`` the side condition is not tested up front
    and its failure shows up as :class:`NotClosed` from the integrator.
    """
    require_solution(K)
    if check_condition:
        _raise_condition("symmetry condition", symmetry_condition(K))
    H = _integrate_components(_first_kind_rhs(K), K.chart)
    return PotentialPair(H=H, residual=residual_oae(DisplacementField(K.chart, H)))


def wdvv_condition(F: Prepotential) -> ResidualTensor:
    """Entry ``(nu,a,g) = eta^{rk}F_{,a r nu}F_{,g k} - eta^{rk}F_{,g r nu}F_{,a k}``."""
    T = _wdvv_T(F)
    n = F.chart.n
    return ResidualTensor.build(
        ("nu", "alpha", "gamma"), itertools.product(range(n), repeat=3),
        lambda nu, a, g: T[nu][a][g] - T[nu][g][a],
    )


def _wdvv_T(F: Prepotential):
    """``T[nu][a][g] = eta^{r k} F_{,a r nu} F_{,g k}``."""
    n = F.chart.n
    eta = F.metric.upper
    F2 = F.second
    pairs = [(r, k, eta[r, k]) for r in range(n) for k in range(n) if eta[r, k]]
    out = []
    for nu in range(n):
        rows = []
        for a in range(n):
            row = []
            for g in range(n):
                acc = Polynomial.zero(F.chart)
                for r, k, e in pairs:
                    f3 = F.d3(a, r, nu)
                    if f3 and F2[g][k]:
                        acc = acc + (f3 * F2[g][k]).scale(e)
                row.append(acc)
            rows.append(row)
        out.append(rows)
    return out


def wdvv_to_oae(F: Prepotential, *, check_condition: bool = True) -> PotentialPair:
    """``H^b`` with ``d^2 H^b/dx^a dx^g = eta^{b nu} eta^{r k} F_{,a r nu} F_{,g k}``, plus ``residual_oae(H)``."""
    res = residual_wdvv(F)
    if not res.is_zero:
        raise ValueError(f"prepotential is not a WDVV solution: {res.describe()}")
    if check_condition:
        _raise_condition("prepotential condition", wdvv_condition(F))
    n = F.chart.n
    T = _wdvv_T(F)
    S = [[[F.metric.raise_index([T[nu][a][g] for nu in range(n)])[b] for g in range(n)] for a in range(n)]
         for b in range(n)]
    H = _integrate_components(S, F.chart)
    return PotentialPair(H=H, residual=residual_oae(DisplacementField(F.chart, H)))


def wdvv_to_oae_via_reduction(F: Prepotential) -> PotentialPair:
    """The same construction routed through ``backlund_oae(gradient_reduce(F))``."""
    return backlund_oae(gradient_reduce(F))


__all__ = [
    "ConditionFailed", "DarbouxPoint", "DarbouxReport", "NoUsablePoints", "PotentialPair",
    "backlund_oae", "darboux_verify", "intermediate_integral_first", "intermediate_integral_second",
    "inverse_series", "leading_jacobian_determinant",
    "leading_jacobian_determinant_polynomial", "sample_points", "symmetry_condition",
    "wdvv_condition", "wdvv_to_oae", "wdvv_to_oae_via_reduction",
]
