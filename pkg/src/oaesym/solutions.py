"""Solution files and the bundled example registry.

File format, one directive per line, ``#`` starts a comment::

    dim 3
    kind wdvv
    eta 0 0 1  0 1 0  1 0 0
    F x1^2*x3/2 + x1*x2^2/2

or, for ``kind oae``, one ``K<a> <expr>`` line per component.
"""
from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, field
from functools import cached_property
from importlib import resources
from pathlib import Path

from .kernel import Chart, ParseError, RationalMatrix, parse_polynomial, rational, serialize
from .model import (
    DisplacementField, Metric, Prepotential, ResidualTensor, gradient_reduce, residual_oae, residual_wdvv,
)
from .spectral import PotentialTower, build_tower

BUNDLED = (
    "linear-n3", "algebra-n2", "a3-wdvv", "commuting-cubic",
    "bad-wdvv", "nonassoc-n2", "bad-input",
)
SOLUTIONS = ("linear-n3", "algebra-n2", "a3-wdvv", "commuting-cubic", "bad-input")
COUNTEREXAMPLES = ("bad-wdvv", "nonassoc-n2")


class SolutionFormatError(ValueError):
    def __init__(self, message: str, line: int, column: int | None = None, source: str = "<input>"):
        where = f"{source}:{line}" + (f":{column}" if column is not None else "")
        super().__init__(f"{where}: {message}")
        self.line = line
        self.column = column
        self.source = source


class RejectedSolution(ValueError):
    """The payload parsed but its residual is not zero."""

    def __init__(self, bundle_id: str, kind: str, residual: ResidualTensor):
        super().__init__(f"{bundle_id}: residual {residual.describe()}")
        self.bundle_id = bundle_id
        self.kind = kind
        self.residual = residual


@dataclass
class SolutionBundle:
    id: str
    kind: str  # "oae" or "wdvv"
    chart: Chart
    payload: object  # DisplacementField or Prepotential
    text: str = field(repr=False, default="")
    trusted: bool = False
    _towers: dict = field(default_factory=dict, repr=False)

    @property
    def metric(self) -> Metric | None:
        return self.payload.metric if self.kind == "wdvv" else None

    @property
    def prepotential(self) -> Prepotential | None:
        return self.payload if self.kind == "wdvv" else None

    @cached_property
    def displacement(self) -> DisplacementField:
        return gradient_reduce(self.payload) if self.kind == "wdvv" else self.payload

    @property
    def digest(self) -> str:
        return hashlib.sha256(self.text.encode()).hexdigest()

    def residual(self) -> ResidualTensor:
        return residual_wdvv(self.payload) if self.kind == "wdvv" else residual_oae(self.payload)

    def tower(self, order: int) -> PotentialTower:
        """Tower of at least ``order``, cached; shorter requests reuse a longer tower's prefix."""
        for have, t in self._towers.items():
            if have >= order:
                return t if have == order else PotentialTower(t.K, order, t.w[: order + 1], t.v[: order + 1])
        t = build_tower(self.displacement, order)
        self._towers[order] = t
        return t


_DIRECTIVE = re.compile(r"^(dim|kind|eta|F|K(\d+))\b\s*(.*)$")


def parse_solution(text: str, bundle_id: str = "<input>", *, source: str | None = None) -> SolutionBundle:
    """Parse without checking residuals (``trusted`` is left ``False``)."""
    source = source or bundle_id
    dim = kind = eta = F = None
    K: dict[int, tuple[str, int, int]] = {}
    F_at = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0]
        if not line.strip():
            continue
        stripped = line.lstrip()
        indent = len(line) - len(stripped)
        m = _DIRECTIVE.match(stripped)
        if not m:
            raise SolutionFormatError(f"unknown directive {stripped.split()[0]!r}", lineno, indent + 1, source)
        word, comp, rest = m.group(1), m.group(2), m.group(3)
        col = indent + m.start(3) + 1
        if word == "dim":
            if dim is not None:
                raise SolutionFormatError("duplicate 'dim'", lineno, indent + 1, source)
            try:
                dim = int(rest.strip())
                Chart(dim)
            except ValueError as exc:
                raise SolutionFormatError(f"bad dimension: {exc}", lineno, col, source) from None
        elif word == "kind":
            if rest.strip() not in ("oae", "wdvv"):
                raise SolutionFormatError("kind must be 'oae' or 'wdvv'", lineno, col, source)
            kind = rest.strip()
        elif word == "eta":
            try:
                eta = [rational(tok) for tok in rest.split()]
            except (ValueError, TypeError, ZeroDivisionError):
                raise SolutionFormatError("eta entries must be rationals", lineno, col, source) from None
            eta_at = (lineno, col)
        elif word == "F":
            if F is not None:
                raise SolutionFormatError("duplicate 'F'", lineno, indent + 1, source)
            F, F_at = rest, (lineno, col)
        else:
            a = int(comp)
            if a in K:
                raise SolutionFormatError(f"duplicate 'K{a}'", lineno, indent + 1, source)
            K[a] = (rest, lineno, col)
    if dim is None:
        raise SolutionFormatError("missing 'dim'", 0, None, source)
    if kind is None:
        raise SolutionFormatError("missing 'kind'", 0, None, source)
    chart = Chart(dim)

    def expr(body, lineno, col):
        try:
            return parse_polynomial(body, chart)
        except ParseError as exc:
            msg = str(exc).rsplit(" at byte offset", 1)[0]
            raise SolutionFormatError(msg, lineno, col + exc.offset, source) from None

    if kind == "wdvv":
        if K:
            raise SolutionFormatError("'K' lines are not allowed for kind wdvv", min(v[1] for v in K.values()), None, source)
        if F is None:
            raise SolutionFormatError("missing 'F'", 0, None, source)
        if eta is None:
            raise SolutionFormatError("missing 'eta'", 0, None, source)
        if len(eta) != dim * dim:
            raise SolutionFormatError(f"eta needs {dim * dim} entries, got {len(eta)}", *eta_at, source)
        try:
            metric = Metric(RationalMatrix([eta[i * dim:(i + 1) * dim] for i in range(dim)]))
        except ValueError as exc:
            raise SolutionFormatError(str(exc), *eta_at, source) from None
        payload = Prepotential(chart, expr(F, *F_at), metric)
    else:
        if F is not None or eta is not None:
            raise SolutionFormatError("'F'/'eta' lines are not allowed for kind oae", 0, None, source)
        missing = [a for a in range(1, dim + 1) if a not in K]
        extra = [a for a in K if not 1 <= a <= dim]
        if missing or extra:
            raise SolutionFormatError(f"need exactly K1..K{dim} (missing {missing}, out of range {extra})", 0, None, source)
        payload = DisplacementField(chart, tuple(expr(*K[a]) for a in range(1, dim + 1)))
    return SolutionBundle(bundle_id, kind, chart, payload, text)


def _read(path_or_id: str) -> tuple[str, str]:
    if path_or_id in BUNDLED:
        text = resources.files("oaesym.data").joinpath(f"{path_or_id}.sol").read_text()
        return text, path_or_id
    p = Path(path_or_id)
    if not p.is_file():
        raise FileNotFoundError(f"no bundled solution or file named {path_or_id!r}")
    return p.read_text(), p.stem


def load_solution(path_or_id: str, *, trust: bool = True) -> SolutionBundle:
    """Load a bundled id or a file.  With ``trust`` the residual must vanish."""
    text, bundle_id = _read(path_or_id)
    bundle = parse_solution(text, bundle_id, source=path_or_id)
    if trust:
        res = bundle.residual()
        if not res.is_zero:
            raise RejectedSolution(bundle_id, bundle.kind, res)
        bundle.trusted = True
    return bundle


def bundled_text(bundle_id: str) -> str:
    return _read(bundle_id)[0]


def format_solution(payload, comment: str | None = None) -> str:
    """Inverse of :func:`parse_solution` for parameter-free payloads."""
    lines = [f"# {comment}"] if comment else []
    chart = payload.chart
    lines.append(f"dim {chart.n}")
    if isinstance(payload, Prepotential):
        lines.append("kind wdvv")
        lines.append("eta " + " ".join(str(x) for row in payload.metric.upper.rows for x in row))
        lines.append(f"F {serialize(payload.F)}")
    else:
        lines.append("kind oae")
        lines += [f"K{a + 1} {serialize(p)}" for a, p in enumerate(payload.components)]
    return "\n".join(lines) + "\n"


def reduce_bundle(bundle: SolutionBundle) -> str:
    """Text of the gradient-reduced oriented bundle of a prepotential bundle."""
    if bundle.kind != "wdvv":
        raise ValueError(f"{bundle.id} is not a prepotential bundle")
    return format_solution(bundle.displacement, f"gradient reduction of {bundle.id}")


__all__ = [
    "BUNDLED", "COUNTEREXAMPLES", "SOLUTIONS", "RejectedSolution", "SolutionBundle", "SolutionFormatError",
    "bundled_text", "format_solution", "load_solution", "parse_solution", "reduce_bundle",
]
