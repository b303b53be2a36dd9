"""Extended flows and exact commutation checks with cleared denominators.

Flow right-hand sides are kept symbolic: a sum of terms, each a rational
coefficient in the spectral parameters times a product of *atoms*.  An atom is
a field (``K``, ``F``, ``psi``, ``chi``, ``w``) with its indices, its spectral
argument (``+lam``, ``-mu``, ...) and an x-derivative multi-index.  A flow
acts on an atom by evaluating its right-hand side on the concrete bundle and
differentiating in ``x`` (flows and ``d/dx`` commute), and on products by the
Leibniz rule.  A mixed second derivative ``D_A D_B u`` is therefore
``D_A`` applied to the symbolic expression ``rhs_B(u)``.

Coefficients such as ``lam*mu/(lam+mu)`` are stored as a numerator
polynomial in the parameters plus a tuple of linear-form denominators.  A
commutator is reported as the numerator over the least common multiple of
all denominators met (together with any prescribed clearing factors),
truncated at a total parameter degree, so the asserted identity is
polynomial in ``(x, lam, mu, zeta)``.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

from .kernel import PARAMS, Chart, Polynomial
from .model import DisplacementField, Metric, Prepotential
from .spectral import PotentialTower, ScalarSpectralSeries, VectorSpectralSeries, series_polynomial

LinearForm = tuple  # coefficients over PARAMS, first nonzero positive


class Arg(NamedTuple):
    """Spectral argument ``sign * param``."""

    param: str
    sign: int = 1

    def __neg__(self):
        return Arg(self.param, -self.sign)

    def form(self) -> tuple:
        v = [0] * len(PARAMS)
        v[PARAMS.index(self.param)] = self.sign
        return tuple(v)

    def __str__(self):
        return ("-" if self.sign < 0 else "") + self.param


class Atom(NamedTuple):
    field: str
    index: tuple = ()
    arg: Arg | None = None
    derivs: tuple = ()

    def d(self, *idx: int) -> Atom:
        return self._replace(derivs=tuple(sorted(self.derivs + idx)))

    def base(self) -> Atom:
        return self._replace(derivs=())

    def __str__(self):
        s = self.field
        if self.index:
            s += "^" + ".".join(str(i + 1) for i in self.index)
        if self.arg is not None:
            s += f"({self.arg})"
        if self.derivs:
            s += "_," + "".join(str(i + 1) for i in self.derivs)
        return s


def K(a: int) -> Atom:
    return Atom("K", (a,))


def psi(a: int, arg: Arg) -> Atom:
    return Atom("psi", (a,), arg)


def chi(arg: Arg) -> Atom:
    return Atom("chi", (), arg)


def w(level: int, a: int, b: int) -> Atom:
    return Atom("w", (level, a, b))


F_ATOM = Atom("F")


def _add_forms(*forms) -> tuple:
    return tuple(sum(c) for c in zip(*forms))


def canonical_form(form: Sequence[int]) -> tuple[LinearForm, int]:
    """Normalize a linear form so its first nonzero coefficient is positive."""
    form = tuple(form)
    lead = next((c for c in form if c), 0)
    if lead == 0:
        raise ZeroDivisionError("denominator linear form vanishes identically")
    if lead < 0:
        return tuple(-c for c in form), -1
    return form, 1


def form_polynomial(chart: Chart, form: LinearForm) -> Polynomial:
    out = Polynomial.zero(chart)
    for name, c in zip(PARAMS, form):
        if c:
            out = out + Polynomial.param(chart, name).scale(c)
    return out


def form_str(form: LinearForm) -> str:
    parts = []
    for name, c in zip(PARAMS, form):
        if not c:
            continue
        mag = "" if abs(c) == 1 else f"{abs(c)}*"
        parts.append(("-" if c < 0 else "+") + mag + name)
    s = "".join(parts)
    return s[1:] if s.startswith("+") else s


@dataclass(frozen=True)
class Coef:
    """``scalar * prod(factors) / prod(dens)``, kept symbolic.

    ``factors`` holds signed spectral arguments (``lam``, ``-mu``) and pending
    metric entries ``("eta", nu, b)``; ``dens`` is a sorted tuple of canonical
    linear forms.
    """

    scalar: object = 1
    factors: tuple = ()  # Args multiplied into the numerator
    dens: tuple = ()

    def __mul__(self, other: Coef) -> Coef:
        return Coef(self.scalar * other.scalar, self.factors + other.factors, tuple(sorted(self.dens + other.dens)))



def frac(num_args: Sequence[Arg], den_args: Sequence[Arg] = (), scalar=1) -> Coef:
    """``scalar * prod(num_args) / (sum(den_args))`` (empty ``den_args`` means no denominator)."""
    dens = ()
    if den_args:
        form, sign = canonical_form(_add_forms(*(a.form() for a in den_args)))
        dens = (form,)
        scalar = scalar * sign
    return Coef(scalar, tuple(num_args), dens)


class Term(NamedTuple):
    coef: Coef
    atoms: tuple


Expression = list  # list[Term]


# -- cleared values -----------------------------------------------------------

@dataclass
class Cleared:
    """Sum of ``numerator / prod(dens)`` pieces, grouped by denominator multiset."""

    chart: Chart
    order: int | None
    parts: dict = field(default_factory=dict)  # dens tuple -> Polynomial numerator

    def add(self, dens: tuple, num: Polynomial, sign: int = 1):
        # zero numerators are kept: a part that vanishes only modulo the
        # truncation still limits the precision of the cleared sum
        num = num if sign > 0 else -num
        cur = self.parts.get(dens)
        self.parts[dens] = num if cur is None else cur + num

    def extend(self, other: Cleared, sign: int = 1):
        for dens, num in other.parts.items():
            self.add(dens, num, sign)

    def map(self, fn) -> Cleared:
        out = Cleared(self.chart, self.order)
        for dens, num in self.parts.items():
            out.add(dens, fn(num))
        return out

    def clearing_factor(self, extra: Sequence[LinearForm] = ()) -> tuple:
        """Least common multiple of all denominators (and ``extra``) as a sorted multiset."""
        need: Counter = Counter(extra)
        for dens in self.parts:
            for form, m in Counter(dens).items():
                need[form] = max(need[form], m)
        return tuple(sorted(need.elements()))

    def precision(self, factor: tuple) -> int | None:
        """Total parameter degree up to which ``numerator_over(factor)`` is exact.

        Each numerator is exact modulo degree ``order + 1``; multiplying it by
        ``factor / dens`` (degree ``e``) keeps it exact modulo ``order + 1 + e``.
        """
        if self.order is None:
            return None
        if not self.parts:
            return self.order + len(factor)
        return self.order + min(len(factor) - len(dens) for dens in self.parts)

    def numerator_over(self, factor: tuple) -> Polynomial:
        """``sum(num * factor / dens)``, truncated at :meth:`precision`."""
        top = self.precision(factor)
        total = Polynomial.zero(self.chart)
        fc = Counter(factor)
        for dens, num in self.parts.items():
            dc = Counter(dens)
            if dc - fc:
                raise ValueError("clearing factor does not cover a denominator")
            p = num
            for form in (fc - dc).elements():
                p = p.mul(form_polynomial(self.chart, form), top)
            total = total + p
        return total.truncate(top)


# -- bundles --------------------------------------------------------------------

@dataclass
class FlowBundle:
    """A concrete solution with the spectral data the flows act on."""

    K: DisplacementField
    tower: PotentialTower
    psi: VectorSpectralSeries | None = None
    chi: ScalarSpectralSeries | None = None
    F: Prepotential | None = None
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def chart(self) -> Chart:
        return self.K.chart

    @property
    def n(self) -> int:
        return self.K.n

    @property
    def metric(self) -> Metric:
        if self.F is None:
            raise ValueError("bundle has no metric (not gradient-reduced)")
        return self.F.metric

    def evaluate(self, atom: Atom) -> Polynomial:
        p = self._cache.get(atom)
        if p is not None:
            return p
        if atom.derivs:
            p = self.evaluate(atom._replace(derivs=atom.derivs[:-1])).diff(atom.derivs[-1])
        elif atom.field == "K":
            p = self.K[atom.index[0]]
        elif atom.field == "F":
            p = self.F.F
        elif atom.field == "psi":
            coeffs = [c[atom.index[0]] for c in self.psi.coeffs]
            p = series_polynomial(coeffs, atom.arg.param, atom.arg.sign)
        elif atom.field == "chi":
            p = series_polynomial(self.chi.coeffs, atom.arg.param, atom.arg.sign)
        elif atom.field == "w":
            level, a, b = atom.index
            p = Polynomial.zero(self.chart) if level < 0 else self.tower.w[level][a][b]
        else:
            raise KeyError(f"unknown field {atom.field}")
        self._cache[atom] = p
        return p


# -- flows ------------------------------------------------------------------------

@dataclass(frozen=True)
class FlowSpec:
    """One flow of the hierarchy.

    ``kind`` is one of ``tau``, ``sigma``, ``zeta`` (displacement flows with
    spectral parameter ``param``), ``tau_k`` (coefficient flow with ``k`` and
    ``beta``), ``sigma_k`` (``k``, ``beta``, ``gamma``), ``wdvv-tau`` and
    ``wdvv-zeta`` (prepotential flows).
    """

    kind: str
    param: str | None = None
    k: int | None = None
    beta: int | None = None
    gamma: int | None = None

    def label(self) -> str:
        if self.param is not None:
            return f"{self.kind}({self.param})"
        idx = ",".join(str(x) for x in (self.k, self.beta, self.gamma) if x is not None)
        return f"{self.kind}[{idx}]"

    def rhs(self, atom: Atom, n: int) -> Expression:
        """Symbolic right-hand side of the flow on a base atom."""
        if atom.derivs:
            raise ValueError("rhs is defined on base atoms; derivatives follow by prolongation")
        handler = getattr(self, "_rhs_" + self.kind.replace("-", "_"))
        out = handler(atom, n)
        if out is None:
            raise NotImplementedError(f"flow {self.label()} has no printed action on {atom.field}")
        return out

    # displacement flows -------------------------------------------------------
    def _rhs_tau(self, atom, n):
        lam = Arg(self.param)
        if atom.field == "K":
            return [Term(Coef(), (psi(atom.index[0], lam),))]
        if atom.field == "psi":
            a, s = atom.index[0], atom.arg
            c = frac([lam, s])
            return [
                Term(c, (K(a).d(nu, ka), psi(nu, lam), psi(ka, s)))
                for nu in range(n) for ka in range(n)
            ]
        if atom.field == "chi":
            s = atom.arg
            c = frac([lam, s], [lam, s])
            return [Term(c, (psi(nu, lam), chi(s).d(nu))) for nu in range(n)]
        return None

    def _rhs_sigma(self, atom, n):
        lam = Arg(self.param)
        if atom.field == "K":
            return [Term(Coef(), (psi(atom.index[0], lam), chi(-lam)))]
        if atom.field == "psi":
            a, s = atom.index[0], atom.arg
            c1 = frac([lam, s])
            c2 = frac([lam, s], [lam, -s])
            out = [
                Term(c1, (K(a).d(nu, ka), psi(nu, lam), psi(ka, s), chi(-lam)))
                for nu in range(n) for ka in range(n)
            ]
            out += [Term(c2, (chi(-lam).d(b), psi(b, s), psi(a, lam))) for b in range(n)]
            return out
        if atom.field == "chi":
            s = atom.arg
            c = frac([lam, s], [lam, s])
            return [Term(c, (psi(nu, lam), chi(s).d(nu), chi(-lam))) for nu in range(n)]
        return None

    def _rhs_zeta(self, atom, n):
        lam = Arg(self.param)
        if atom.field == "K":
            a = atom.index[0]
            return [Term(Coef(), (psi(a, lam), chi(-lam))), Term(Coef(), (psi(a, -lam), chi(lam)))]
        return None

    # coefficient flows ---------------------------------------------------------
    def _rhs_tau_k(self, atom, n):
        k, b = self.k, self.beta
        if atom.field == "K":
            return [Term(Coef(), (w(k, atom.index[0], b),))]
        if atom.field == "w":
            level, a, p = atom.index
            if k - 1 < 0 or level - 1 < 0:
                return []
            return [
                Term(Coef(), (K(a).d(nu, r), w(k - 1, nu, b), w(level - 1, r, p)))
                for nu in range(n) for r in range(n)
            ]
        return None

    def _rhs_sigma_k(self, atom, n):
        if atom.field == "K":
            raise NotImplementedError("sigma_k flows are evaluated at the K level only (see coefficient_flow_rhs)")
        return None

    # prepotential flows --------------------------------------------------------
    def _rhs_wdvv_tau(self, atom, n):
        lam = Arg(self.param)
        if atom.field == "F":
            return [Term(Coef(), (chi(lam),))]
        if atom.field == "chi":
            s = atom.arg
            c = frac([lam, s], [lam, s])
            return [Term(_eta(c, nu, b), (chi(lam).d(b), chi(s).d(nu))) for nu in range(n) for b in range(n)]
        return None

    def _rhs_wdvv_zeta(self, atom, n):
        lam = Arg(self.param)
        if atom.field == "F":
            return [Term(Coef(), (chi(lam), chi(-lam)))]
        if atom.field == "chi":
            s = atom.arg
            c1 = frac([lam, s], [lam, s])
            c2 = frac([lam, s], [lam, -s])
            out = [Term(_eta(c1, nu, b), (chi(lam).d(b), chi(s).d(nu), chi(-lam))) for nu in range(n) for b in range(n)]
            out += [Term(_eta(c2, nu, b), (chi(-lam).d(b), chi(s).d(nu), chi(lam))) for nu in range(n) for b in range(n)]
            return out
        return None


def _eta(c: Coef, nu: int, b: int) -> Coef:
    """Tag a coefficient with a pending metric entry ``eta^{nu b}``."""
    return Coef(c.scalar, c.factors + (("eta", nu, b),), c.dens)


def _resolve(coef: Coef, chart: Chart, metric: Metric | None) -> tuple[Polynomial, tuple]:
    """Numerator polynomial (with metric entries substituted) and denominators."""
    p = Polynomial.const(chart, coef.scalar)
    for f in coef.factors:
        if isinstance(f, Arg):
            p = p * Polynomial.param(chart, f.param).scale(f.sign)
        else:
            _, nu, b = f
            p = p.scale(metric.upper[nu, b])
    return p, coef.dens


class FlowEngine:
    """Evaluates flow right-hand sides and mixed derivatives on a bundle."""

    def __init__(self, bundle: FlowBundle, order: int | None):
        self.bundle = bundle
        self.order = order
        self._rhs_cache: dict = {}

    def _metric(self):
        return self.bundle.F.metric if self.bundle.F is not None else None

    def evaluate_expression(self, expr: Expression) -> Cleared:
        out = Cleared(self.bundle.chart, self.order)
        for term in expr:
            num, dens = _resolve(term.coef, self.bundle.chart, self._metric())
            if not num:
                continue
            p = num
            for atom in sorted(term.atoms, key=lambda a: len(self.bundle.evaluate(a))):
                p = p.mul(self.bundle.evaluate(atom), self.order)
            out.add(dens, p)
        return out

    def act(self, flow: FlowSpec, atom: Atom) -> Cleared:
        """``D_flow(atom)``: the rhs on the base atom, differentiated along ``atom.derivs``."""
        key = (flow, atom)
        hit = self._rhs_cache.get(key)
        if hit is not None:
            return hit
        if atom.derivs:
            parent = self.act(flow, atom._replace(derivs=atom.derivs[:-1]))
            last = atom.derivs[-1]
            result = parent.map(lambda num: num.diff(last))
        else:
            result = self.evaluate_expression(flow.rhs(atom, self.bundle.n))
        self._rhs_cache[key] = result
        return result

    def act_on_expression(self, flow: FlowSpec, expr: Expression) -> Cleared:
        """Leibniz rule: ``D(sum c * a_1...a_m) = sum c * sum_i (prod_{j!=i} a_j) D(a_i)``."""
        out = Cleared(self.bundle.chart, self.order)
        for term in expr:
            num, dens = _resolve(term.coef, self.bundle.chart, self._metric())
            if not num:
                continue
            atoms = term.atoms
            for i, ai in enumerate(atoms):
                rest = num
                for j, aj in enumerate(atoms):
                    if j != i:
                        rest = rest.mul(self.bundle.evaluate(aj), self.order)
                d = self.act(flow, ai)
                for dd, dnum in d.parts.items():
                    out.add(tuple(sorted(dd + dens)), dnum.mul(rest, self.order))
        return out

    def mixed(self, first: FlowSpec, second: FlowSpec, target: Atom) -> Cleared:
        """``D_first D_second (target)`` = ``D_first`` applied to ``rhs_second(target)``."""
        return self.act_on_expression(first, second.rhs(target, self.bundle.n))

    def commutator(self, a: FlowSpec, b: FlowSpec, target: Atom) -> Cleared:
        out = self.mixed(a, b, target)
        out.extend(self.mixed(b, a, target), -1)
        return out


# -- reports ----------------------------------------------------------------------

@dataclass
class CommutationReport:
    """Cleared-denominator commutator residuals for a family of flow pairs."""

    name: str
    order: int | None
    entries: dict = field(default_factory=dict)  # (pair label, target label) -> Polynomial
    factors: dict = field(default_factory=dict)  # same keys -> clearing factor (tuple of forms)
    precisions: dict = field(default_factory=dict)  # same keys -> exact up to this parameter degree
    informational: bool = False

    def record(self, pair: str, target: str, value: Cleared, extra: Sequence[LinearForm] = ()):
        factor = value.clearing_factor(extra)
        self.entries[(pair, target)] = value.numerator_over(factor)
        self.factors[(pair, target)] = factor
        self.precisions[(pair, target)] = value.precision(factor)

    @property
    def witness(self):
        for key in sorted(self.entries):
            if self.entries[key]:
                return key
        return None

    @property
    def is_zero(self) -> bool:
        return self.witness is None

    @property
    def verdict(self) -> str:
        return "zero" if self.is_zero else "nonzero"

    @property
    def exact_degree(self) -> int | None:
        """Largest total parameter degree up to which every recorded residual is exact."""
        vals = [p for p in self.precisions.values() if p is not None]
        return min(vals) if vals else None

    def describe(self) -> str:
        if self.is_zero:
            scope = "exact" if self.exact_degree is None else f"exact through total parameter degree {self.exact_degree}"
            return f"zero ({len(self.entries)} cleared residuals, {scope})"
        pair, target = self.witness
        factor = "*".join(f"({form_str(f)})" for f in self.factors[(pair, target)]) or "1"
        return f"nonzero for {pair} on {target} (cleared by {factor}): {self.entries[(pair, target)]}"

    def __repr__(self):
        return f"CommutationReport({self.name}: {self.describe()})"


LAM, MU, ZETA = Arg("lam"), Arg("mu"), Arg("zeta")
TAU_TAU_CLEARING = tuple(sorted(canonical_form(_add_forms(x.form(), y.form()))[0] for x, y in ((LAM, MU), (LAM, ZETA), (MU, ZETA))))


def extended_flow_rhs(bundle: FlowBundle, spec: FlowSpec, order: int | None = None) -> dict:
    """Evaluated right-hand sides of ``spec`` on ``K``, ``psi(mu)`` and ``chi(mu)`` (or ``F``, ``chi(mu)``).

    Values are :class:`Cleared` pieces keyed by a target label.
    """
    engine = FlowEngine(bundle, order)
    n = bundle.n
    out = {}
    if spec.kind.startswith("wdvv"):
        out["F"] = engine.act(spec, F_ATOM)
        out["chi(mu)"] = engine.act(spec, chi(MU))
        return out
    for a in range(n):
        out[f"K^{a + 1}"] = engine.act(spec, K(a))
    if spec.kind in ("tau", "sigma"):
        for a in range(n):
            out[f"psi^{a + 1}(mu)"] = engine.act(spec, psi(a, MU))
        out["chi(mu)"] = engine.act(spec, chi(MU))
    return out


def check_tau_tau(bundle: FlowBundle, truncation: int = 4) -> CommutationReport:
    """The three equalities for the extended tau flows: on ``K``, ``psi(zeta)`` and ``chi(zeta)``.

    Each residual is multiplied through by ``(lam+mu)(lam+zeta)(mu+zeta)``.
    """
    engine = FlowEngine(bundle, truncation)
    t1, t2 = FlowSpec("tau", "lam"), FlowSpec("tau", "mu")
    report = CommutationReport("tau-tau", truncation)
    pair = "tau(lam),tau(mu)"
    targets = [K(a) for a in range(bundle.n)] + [psi(a, ZETA) for a in range(bundle.n)] + [chi(ZETA)]
    for t in targets:
        report.record(pair, str(t), engine.commutator(t1, t2, t), TAU_TAU_CLEARING)
    return report


def check_sigma_pairs(bundle: FlowBundle, truncation: int = 4) -> CommutationReport:
    """Displacement-level commutativity of ``tau(lam)``/``sigma(mu)`` and ``sigma(lam)``/``sigma(mu)``."""
    engine = FlowEngine(bundle, truncation)
    report = CommutationReport("sigma-pairs", truncation)
    pairs = [
        (FlowSpec("tau", "lam"), FlowSpec("sigma", "mu")),
        (FlowSpec("sigma", "lam"), FlowSpec("sigma", "mu")),
    ]
    for a_flow, b_flow in pairs:
        label = f"{a_flow.label()},{b_flow.label()}"
        for a in range(bundle.n):
            report.record(label, str(K(a)), engine.commutator(a_flow, b_flow, K(a)))
    return report


def explore_sigma_extended(bundle: FlowBundle, truncation: int = 4) -> CommutationReport:
    """Extended-level commutators involving sigma flows on ``psi(zeta)`` and ``chi(zeta)``.

    Not implied by the displacement-level statements; reported, never asserted.
    """
    engine = FlowEngine(bundle, truncation)
    report = CommutationReport("sigma-extended", truncation, informational=True)
    pairs = [
        (FlowSpec("tau", "lam"), FlowSpec("sigma", "mu")),
        (FlowSpec("sigma", "lam"), FlowSpec("sigma", "mu")),
    ]
    for a_flow, b_flow in pairs:
        label = f"{a_flow.label()},{b_flow.label()}"
        targets = [psi(a, ZETA) for a in range(bundle.n)] + [chi(ZETA)]
        for t in targets:
            report.record(label, str(t), engine.commutator(a_flow, b_flow, t))
    return report


def check_w_hierarchy(bundle: FlowBundle, k: int, l: int) -> CommutationReport:
    """Coefficient flows ``tau^b_k`` and ``tau^g_l`` on ``K`` and on ``w_m``, ``m <= max(k,l)+1``.

    Needs a tower of order at least ``max(k, l) + 1``.
    """
    top = max(k, l) + 1
    if bundle.tower.order < top:
        raise ValueError(f"tower order {bundle.tower.order} < {top}")
    n = bundle.n
    engine = FlowEngine(bundle, None)
    report = CommutationReport(f"w-hierarchy({k},{l})", None)
    for b in range(n):
        for g in range(n):
            fa, fb = FlowSpec("tau_k", k=k, beta=b), FlowSpec("tau_k", k=l, beta=g)
            label = f"tau^{b + 1}_{k},tau^{g + 1}_{l}"
            for a in range(n):
                report.record(label, str(K(a)), engine.commutator(fa, fb, K(a)))
            for m in range(top + 1):
                for a in range(n):
                    for p in range(n):
                        report.record(label, str(w(m, a, p)), engine.commutator(fa, fb, w(m, a, p)))
    return report


def check_wdvv_flows(bundle: FlowBundle, truncation: int = 4) -> CommutationReport:
    """Extended prepotential flows: ``tau(lam)``/``tau(mu)`` on ``F`` and ``chi(zeta)``, and the
    ``F``-level equalities for ``tau``/``zeta`` and ``zeta``/``zeta``."""
    if bundle.F is None:
        raise ValueError("check_wdvv_flows needs a gradient-reduced bundle")
    engine = FlowEngine(bundle, truncation)
    report = CommutationReport("wdvv-flows", truncation)
    t1, t2 = FlowSpec("wdvv-tau", "lam"), FlowSpec("wdvv-tau", "mu")
    z1, z2 = FlowSpec("wdvv-zeta", "lam"), FlowSpec("wdvv-zeta", "mu")
    report.record("tau(lam),tau(mu)", "F", engine.commutator(t1, t2, F_ATOM))
    report.record("tau(lam),tau(mu)", str(chi(ZETA)), engine.commutator(t1, t2, chi(ZETA)), TAU_TAU_CLEARING)
    report.record("tau(lam),zeta(mu)", "F", engine.commutator(t1, z2, F_ATOM))
    report.record("zeta(lam),zeta(mu)", "F", engine.commutator(z1, z2, F_ATOM))
    return report


def coefficient_flow_rhs(tower: PotentialTower, spec: FlowSpec) -> list[Polynomial]:
    """Displacement-level right-hand sides of ``tau^b_k`` and ``sigma^g_{k,b}``."""
    n = tower.n
    if spec.kind == "tau_k":
        return [tower.w[spec.k][a][spec.beta] for a in range(n)]
    if spec.kind == "sigma_k":
        out = []
        for a in range(n):
            acc = Polynomial.zero(tower.K.chart)
            for j in range(spec.k + 1):
                term = tower.v[j][spec.beta] * tower.w[spec.k - j][a][spec.gamma]
                acc = acc - term if j % 2 else acc + term
            out.append(acc)
        return out
    raise ValueError(f"not a coefficient flow: {spec.kind}")
