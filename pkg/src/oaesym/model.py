"""Solutions of the oriented associativity equations and of their gradient
(WDVV) reduction, with exact residual evaluators.

Index conventions: all indices are 0-based in code and 1-based in printed
output.  ``c[a][b][g]`` is the structure "constant" ``c^a_{bg}``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Iterable, Sequence


from .kernel import Chart, Polynomial, RationalMatrix, Singular, invert_matrix, rational


@dataclass(frozen=True)
class ResidualTensor:
    """Residual entries indexed by tuples; ``is_zero`` iff every entry vanishes."""

    labels: tuple[str, ...]
    entries: dict[tuple, Polynomial] = field(repr=False)

    @classmethod
    def build(cls, labels: Sequence[str], indices: Iterable[tuple], fn: Callable[..., Polynomial]) -> ResidualTensor:
        return cls(tuple(labels), {idx: fn(*idx) for idx in indices})

    @cached_property
    def witness(self) -> tuple | None:
        for idx in sorted(self.entries):
            if self.entries[idx]:
                return idx
        return None

    @property
    def is_zero(self) -> bool:
        return self.witness is None

    def witness_entry(self) -> Polynomial | None:
        return None if self.witness is None else self.entries[self.witness]

    def nonzero_count(self) -> int:
        return sum(1 for p in self.entries.values() if p)

    def describe(self) -> str:
        if self.is_zero:
            return f"zero ({len(self.entries)} entries)"
        idx = ",".join(str(i + 1) if isinstance(i, int) else str(i) for i in self.witness)
        return f"nonzero at ({idx}) [{','.join(self.labels)}]: {self.witness_entry()}"

    def __repr__(self):
        return f"ResidualTensor({','.join(self.labels)}: {self.describe()})"


@dataclass(frozen=True)
class Metric:
    """Constant nondegenerate symmetric ``eta^{ab}`` together with its inverse ``eta_{ab}``."""

    upper: RationalMatrix

    def __post_init__(self):
        if not self.upper.is_symmetric():
            raise ValueError("metric must be symmetric")
        try:
            lower = invert_matrix(self.upper)
        except Singular:
            raise ValueError("metric must be nondegenerate") from None
        object.__setattr__(self, "lower", lower)

    @classmethod
    def antidiagonal(cls, n: int) -> Metric:
        return cls(RationalMatrix([[1 if i + j == n - 1 else 0 for j in range(n)] for i in range(n)]))

    @classmethod
    def identity(cls, n: int) -> Metric:
        return cls(RationalMatrix.identity(n))

    @property
    def n(self) -> int:
        return self.upper.n

    def raise_index(self, covector: Sequence) -> list:
        """``eta^{ab} w_b`` for a list of polynomials or rationals."""
        n = self.n
        out = []
        for a in range(n):
            acc = None
            for b in range(n):
                e = self.upper[a, b]
                if e:
                    term = covector[b] * e
                    acc = term if acc is None else acc + term
            out.append(acc if acc is not None else covector[0] * 0)
        return out


@dataclass(frozen=True)
class DisplacementField:
    """The displacement vector ``K^a`` on a chart."""

    chart: Chart
    components: tuple[Polynomial, ...]

    def __post_init__(self):
        comps = tuple(self.components)
        if len(comps) != self.chart.n:
            raise ValueError(f"expected {self.chart.n} components, got {len(comps)}")
        if any(p.chart != self.chart for p in comps):
            raise ValueError("components must live on the field's chart")
        object.__setattr__(self, "components", comps)

    @property
    def n(self) -> int:
        return self.chart.n

    def __getitem__(self, a: int) -> Polynomial:
        return self.components[a]

    @cached_property
    def jacobian(self) -> tuple[tuple[Polynomial, ...], ...]:
        """``J[a][b] = dK^a/dx^b``."""
        return tuple(tuple(k.diff(b) for b in range(self.n)) for k in self.components)

    @cached_property
    def hessian(self) -> tuple:
        """``H[a][b][g] = d^2 K^a / dx^b dx^g``, built symmetric."""
        n = self.n
        out = []
        for a in range(n):
            rows = [[None] * n for _ in range(n)]
            for b in range(n):
                for g in range(b, n):
                    rows[b][g] = rows[g][b] = self.jacobian[a][b].diff(g)
            out.append(tuple(tuple(r) for r in rows))
        return tuple(out)

    def degree(self) -> int:
        return max(p.degree() for p in self.components)


@dataclass(frozen=True)
class ConnectionField:
    """Structure constants ``c^a_{bg}``; asymmetric input is rejected."""

    chart: Chart
    entries: tuple

    def __post_init__(self):
        n = self.chart.n
        entries = tuple(tuple(tuple(row) for row in block) for block in self.entries)
        if len(entries) != n or any(len(b) != n or any(len(r) != n for r in b) for b in entries):
            raise ValueError("connection must have shape n x n x n")
        for a, b, g in itertools.product(range(n), repeat=3):
            if b < g and entries[a][b][g] != entries[a][g][b]:
                raise ValueError(f"connection not symmetric in lower indices at ({a + 1};{b + 1},{g + 1})")
        object.__setattr__(self, "entries", entries)

    def __getitem__(self, abg):
        a, b, g = abg
        return self.entries[a][b][g]

    @classmethod
    def constant(cls, chart: Chart, table) -> ConnectionField:
        """From a nested table of rationals ``table[a][b][g]``."""
        return cls(chart, [[[Polynomial.const(chart, x) for x in r] for r in b] for b in table])


@dataclass(frozen=True)
class Prepotential:
    chart: Chart
    F: Polynomial
    metric: Metric

    def __post_init__(self):
        if self.metric.n != self.chart.n:
            raise ValueError("metric size does not match chart dimension")

    @cached_property
    def third(self) -> dict[tuple[int, int, int], Polynomial]:
        """Third derivatives ``F_{,abc}`` keyed by sorted index triples."""
        n = self.chart.n
        out = {}
        for a in range(n):
            fa = self.F.diff(a)
            for b in range(a, n):
                fab = fa.diff(b)
                for c in range(b, n):
                    out[(a, b, c)] = fab.diff(c)
        return out

    def d3(self, a: int, b: int, c: int) -> Polynomial:
        return self.third[tuple(sorted((a, b, c)))]

    @cached_property
    def second(self) -> tuple:
        n = self.chart.n
        return tuple(tuple(self.F.diff(a).diff(b) for b in range(n)) for a in range(n))


# -- operations -----------------------------------------------------------

def connection_from_displacement(K: DisplacementField) -> ConnectionField:
    return ConnectionField(K.chart, K.hessian)


def _assoc(c, n: int, nu: int, a: int, b: int, g: int, truncate=None) -> Polynomial:
    acc = Polynomial.zero(c[0][0][0].chart)
    for r in range(n):
        acc = acc + c[nu][a][r].mul(c[r][b][g], truncate) - c[r][a][b].mul(c[nu][r][g], truncate)
    return acc


def residual_oae(K: DisplacementField) -> ResidualTensor:
    """Entry ``(nu,a,b,g) = K^nu_{,a r} K^r_{,b g} - K^r_{,a b} K^nu_{,r g}``.

    Sign convention: ``entry(nu,a,b,g) + entry(nu,g,b,a) == 0`` identically.
    """
    n = K.n
    c = K.hessian
    return ResidualTensor.build(
        ("nu", "alpha", "beta", "gamma"), itertools.product(range(n), repeat=4),
        lambda nu, a, b, g: _assoc(c, n, nu, a, b, g),
    )


def residual_structure(c: ConnectionField) -> tuple[ResidualTensor, ResidualTensor]:
    """(associativity residual, potentiality residual) of a connection."""
    n = c.chart.n
    e = c.entries
    assoc = ResidualTensor.build(
        ("nu", "alpha", "beta", "gamma"), itertools.product(range(n), repeat=4),
        lambda nu, a, b, g: _assoc(e, n, nu, a, b, g),
    )
    potential = ResidualTensor.build(
        ("alpha", "beta", "gamma", "rho"), itertools.product(range(n), repeat=4),
        lambda a, b, g, r: e[a][b][g].diff(r) - e[a][r][g].diff(b),
    )
    return assoc, potential


def gradient_reduce(F: Prepotential) -> DisplacementField:
    """``K^a = eta^{ab} dF/dx^b``."""
    grad = [F.F.diff(b) for b in range(F.chart.n)]
    return DisplacementField(F.chart, tuple(F.metric.raise_index(grad)))


def _contract_eta(F: Prepotential, left: tuple, right: tuple, truncate=None) -> Polynomial:
    """``F_{,left d} eta^{dg} F_{,g right}`` (left/right are index pairs)."""
    n = F.chart.n
    eta = F.metric.upper
    acc = Polynomial.zero(F.chart)
    for d in range(n):
        fl = F.d3(left[0], left[1], d)
        if not fl:
            continue
        for g in range(n):
            e = eta[d, g]
            if e:
                acc = acc + fl.mul(F.d3(g, right[0], right[1]), truncate).scale(e)
    return acc


def residual_wdvv(F: Prepotential) -> ResidualTensor:
    """Entry ``(a,b,nu,rho) = F_{,a b d} eta^{dg} F_{,g nu rho} - F_{,a nu d} eta^{dg} F_{,g b rho}``."""
    n = F.chart.n
    return ResidualTensor.build(
        ("alpha", "beta", "nu", "rho"), itertools.product(range(n), repeat=4),
        lambda a, b, nu, r: _contract_eta(F, (a, b), (nu, r)) - _contract_eta(F, (a, nu), (b, r)),
    )


def lower_oae_residual(res: ResidualTensor, metric: Metric) -> ResidualTensor:
    """Map an OAE residual of a gradient-reduced field onto WDVV index layout.

    ``eta_{m nu} E(nu,a,b,g) = W(a,m,b,g)``; used to cross-check the two
    residual evaluators.
    """
    n = metric.n
    low = metric.lower

    def entry(a, m, b, g):
        acc = None
        for nu in range(n):
            e = low[m, nu]
            if e:
                t = res.entries[(nu, a, b, g)].scale(e)
                acc = t if acc is None else acc + t
        return acc

    return ResidualTensor.build(("alpha", "beta", "nu", "rho"), itertools.product(range(n), repeat=4), entry)


def constant_quadratic_displacement(chart: Chart, table) -> DisplacementField:
    """``K^a = 1/2 A^a_{bg} x^b x^g`` for a constant symmetric table ``A``."""
    n = chart.n
    xs = [Polynomial.var(chart, i) for i in range(n)]
    comps = []
    for a in range(n):
        acc = Polynomial.zero(chart)
        for b in range(n):
            for g in range(n):
                v = table[a][b][g]
                if v:
                    acc = acc + (xs[b] * xs[g]).scale(rational(v) / 2)
        comps.append(acc)
    return DisplacementField(chart, tuple(comps))
