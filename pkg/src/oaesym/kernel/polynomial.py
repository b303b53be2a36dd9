"""Sparse multivariate polynomials with exact rational coefficients.

A polynomial lives on a :class:`Chart`: ``n`` coordinates ``x1..xn`` plus the
three formal spectral parameters ``lam``, ``mu`` and ``zeta``.  Exponent
vectors are packed into a single integer (16 bits per slot), so monomial
multiplication is one integer addition.  Coefficients are ``gmpy2.mpq``.

Values are immutable once built; every operation returns a new polynomial.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping

from gmpy2 import mpq

Rational = type(mpq(0))

PARAMS: tuple[str, ...] = ("lam", "mu", "zeta")
MAX_DIM = 12

_BITS = 16
_MASK = (1 << _BITS) - 1
_LIMIT = _MASK // 2


def rational(value) -> Rational:
    """Coerce ints, strings like ``'3/4'``, Fractions and mpq to ``mpq``."""
    if isinstance(value, Rational):
        return value
    if isinstance(value, str):
        return mpq(value.strip())
    if hasattr(value, "numerator") and hasattr(value, "denominator"):
        return mpq(int(value.numerator), int(value.denominator))
    if isinstance(value, float):
        raise TypeError("floating point values are not accepted; use exact rationals")
    return mpq(value)


@dataclass(frozen=True)
class Chart:
    """Coordinate chart ``x1..xn`` (with the fixed parameter slots appended)."""

    n: int
    names: tuple[str, ...] = field(default=())

    def __post_init__(self):
        if not 1 <= self.n <= MAX_DIM:
            raise ValueError(f"chart dimension must be in 1..{MAX_DIM}, got {self.n}")
        if not self.names:
            object.__setattr__(self, "names", tuple(f"x{i + 1}" for i in range(self.n)))
        if len(self.names) != self.n or len(set(self.names)) != self.n:
            raise ValueError("chart variable names must be unique and number n")

    @property
    def nslots(self) -> int:
        return self.n + len(PARAMS)

    def slot_names(self) -> tuple[str, ...]:
        return self.names + PARAMS

    def param_slot(self, name: str) -> int:
        return self.n + PARAMS.index(name)

    def pack(self, exps: Iterable[int]) -> int:
        key = 0
        for i, e in enumerate(exps):
            if e < 0 or e > _LIMIT:
                raise OverflowError(f"exponent {e} out of range")
            key |= e << (_BITS * i)
        return key

    def unpack(self, key: int) -> tuple[int, ...]:
        return tuple((key >> (_BITS * i)) & _MASK for i in range(self.nslots))

    def x_degree(self, key: int) -> int:
        return sum((key >> (_BITS * i)) & _MASK for i in range(self.n))

    def param_degree(self, key: int) -> int:
        return sum((key >> (_BITS * i)) & _MASK for i in range(self.n, self.nslots))

    def exponent(self, key: int, slot: int) -> int:
        return (key >> (_BITS * slot)) & _MASK

    def unit(self, slot: int, power: int = 1) -> int:
        return power << (_BITS * slot)


class Polynomial:
    """Immutable sparse polynomial over the rationals.

    ``terms`` maps packed exponent keys to nonzero ``mpq`` coefficients.
    Use the classmethods :meth:`zero`, :meth:`const`, :meth:`var` and
    :meth:`param` (or :func:`oaesym.kernel.parser.parse_polynomial`) to build
    values.
    """

    __slots__ = ("chart", "terms", "_hash")

    def __init__(self, chart: Chart, terms: Mapping[int, Rational] | None = None, *, _trusted=False):
        self.chart = chart
        if _trusted:
            self.terms = terms
        else:
            self.terms = {k: rational(v) for k, v in (terms or {}).items() if v != 0}
        self._hash = None

    # -- construction -----------------------------------------------------
    @classmethod
    def zero(cls, chart: Chart) -> Polynomial:
        return cls(chart, {}, _trusted=True)

    @classmethod
    def const(cls, chart: Chart, value) -> Polynomial:
        value = rational(value)
        return cls(chart, {0: value} if value != 0 else {}, _trusted=True)

    @classmethod
    def var(cls, chart: Chart, index: int) -> Polynomial:
        """The coordinate ``x^(index+1)`` (indices are 0-based)."""
        if not 0 <= index < chart.n:
            raise IndexError(f"variable index {index} outside chart of dimension {chart.n}")
        return cls(chart, {chart.unit(index): mpq(1)}, _trusted=True)

    @classmethod
    def param(cls, chart: Chart, name: str, power: int = 1) -> Polynomial:
        return cls(chart, {chart.unit(chart.param_slot(name), power): mpq(1)}, _trusted=True)

    @classmethod
    def from_exponents(cls, chart: Chart, items: Iterable[tuple[Iterable[int], object]]) -> Polynomial:
        terms: dict[int, Rational] = {}
        for exps, coef in items:
            exps = tuple(exps)
            if len(exps) < chart.nslots:
                exps = exps + (0,) * (chart.nslots - len(exps))
            key = chart.pack(exps)
            terms[key] = terms.get(key, mpq(0)) + rational(coef)
        return cls(chart, {k: v for k, v in terms.items() if v != 0}, _trusted=True)

    # -- inspection -------------------------------------------------------
    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self):
        return bool(self.terms)

    def __len__(self):
        return len(self.terms)

    def items(self) -> Iterator[tuple[tuple[int, ...], Rational]]:
        """Yield ``(exponent tuple, coefficient)`` in canonical order."""
        for key in self._sorted_keys():
            yield self.chart.unpack(key), self.terms[key]

    def _sorted_keys(self) -> list[int]:
        unpack = self.chart.unpack
        return sorted(self.terms, key=lambda k: (-sum(unpack(k)), tuple(-e for e in unpack(k))))

    def degree(self) -> int:
        """Total degree in the x-variables (``-1`` for the zero polynomial)."""
        if not self.terms:
            return -1
        return max(self.chart.x_degree(k) for k in self.terms)

    def param_degree(self) -> int:
        if not self.terms:
            return -1
        return max(self.chart.param_degree(k) for k in self.terms)

    def _max_total(self) -> int:
        if not self.terms:
            return 0
        return max(sum(self.chart.unpack(k)) for k in self.terms)

    def constant_term(self) -> Rational:
        return self.terms.get(0, mpq(0))

    def is_constant(self) -> bool:
        return all(k == 0 for k in self.terms)

    def has_params(self) -> bool:
        n = self.chart.n
        return any(k >> (_BITS * n) for k in self.terms)

    # -- equality ---------------------------------------------------------
    def __eq__(self, other):
        if isinstance(other, Polynomial):
            return self.chart == other.chart and self.terms == other.terms
        if isinstance(other, (int, Rational)) or hasattr(other, "denominator"):
            return self.terms == ({0: rational(other)} if other != 0 else {})
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.chart, frozenset(self.terms.items())))
        return self._hash

    # -- arithmetic -------------------------------------------------------
    def _coerce(self, other) -> Polynomial:
        if isinstance(other, Polynomial):
            if other.chart != self.chart:
                raise ValueError("polynomials live on different charts")
            return other
        return Polynomial.const(self.chart, other)

    def __add__(self, other):
        other = self._coerce(other)
        if len(other.terms) > len(self.terms):
            big, small = other.terms, self.terms
        else:
            big, small = self.terms, other.terms
        out = dict(big)
        for k, v in small.items():
            s = out.get(k)
            if s is None:
                out[k] = v
            else:
                s = s + v
                if s:
                    out[k] = s
                else:
                    del out[k]
        return Polynomial(self.chart, out, _trusted=True)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial(self.chart, {k: -v for k, v in self.terms.items()}, _trusted=True)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def scale(self, c) -> Polynomial:
        c = rational(c)
        if c == 0:
            return Polynomial.zero(self.chart)
        return Polynomial(self.chart, {k: v * c for k, v in self.terms.items()}, _trusted=True)

    def __mul__(self, other):
        if not isinstance(other, Polynomial):
            return self.scale(other)
        return self.mul(other)

    __rmul__ = __mul__

    def mul(self, other: Polynomial, truncate: int | None = None) -> Polynomial:
        """Product, optionally dropping terms of total parameter degree > ``truncate``."""
        other = self._coerce(other)
        if not self.terms or not other.terms:
            return Polynomial.zero(self.chart)
        if self._max_total() + other._max_total() > _LIMIT:
            raise OverflowError("polynomial degree exceeds packed exponent range")
        out: dict[int, Rational] = {}
        get = out.get
        if truncate is None:
            for k1, v1 in self.terms.items():
                for k2, v2 in other.terms.items():
                    k = k1 + k2
                    s = get(k)
                    out[k] = v1 * v2 if s is None else s + v1 * v2
        else:
            pdeg = self.chart.param_degree
            a = [(k, v, pdeg(k)) for k, v in self.terms.items()]
            b = [(k, v, pdeg(k)) for k, v in other.terms.items()]
            b.sort(key=lambda t: t[2])
            for k1, v1, d1 in a:
                room = truncate - d1
                if room < 0:
                    continue
                for k2, v2, d2 in b:
                    if d2 > room:
                        break
                    k = k1 + k2
                    s = get(k)
                    out[k] = v1 * v2 if s is None else s + v1 * v2
        return Polynomial(self.chart, {k: v for k, v in out.items() if v}, _trusted=True)

    def __pow__(self, e: int):
        if e < 0:
            raise ValueError("negative powers are not polynomials")
        result = Polynomial.const(self.chart, 1)
        base = self
        while e:
            if e & 1:
                result = result * base
            base = base * base
            e >>= 1
        return result

    # -- calculus ---------------------------------------------------------
    def diff(self, index: int) -> Polynomial:
        """Partial derivative with respect to ``x^(index+1)``."""
        chart = self.chart
        if not 0 <= index < chart.n:
            raise IndexError(f"variable index {index} outside chart of dimension {chart.n}")
        shift = _BITS * index
        one = 1 << shift
        out = {}
        for k, v in self.terms.items():
            e = (k >> shift) & _MASK
            if e:
                out[k - one] = v * e
        return Polynomial(chart, out, _trusted=True)

    def diff_multi(self, indices: Iterable[int]) -> Polynomial:
        p = self
        for i in indices:
            p = p.diff(i)
        return p

    # -- parameter handling ----------------------------------------------
    def truncate(self, order: int | None) -> Polynomial:
        """Drop terms whose total parameter degree exceeds ``order``."""
        if order is None:
            return self
        pdeg = self.chart.param_degree
        return Polynomial(self.chart, {k: v for k, v in self.terms.items() if pdeg(k) <= order}, _trusted=True)

    def param_coefficient(self, name: str, power: int) -> Polynomial:
        """Coefficient of ``name**power`` (other slots untouched)."""
        slot = self.chart.param_slot(name)
        shift = _BITS * slot
        out = {}
        for k, v in self.terms.items():
            if (k >> shift) & _MASK == power:
                out[k - (power << shift)] = v
        return Polynomial(self.chart, out, _trusted=True)

    def flip_param(self, name: str) -> Polynomial:
        """Substitute ``name -> -name``."""
        shift = _BITS * self.chart.param_slot(name)
        return Polynomial(
            self.chart,
            {k: (-v if (k >> shift) & 1 else v) for k, v in self.terms.items()},
            _trusted=True,
        )

    def rename_param(self, src: str, dst: str) -> Polynomial:
        """Move the ``src`` exponent slot onto ``dst`` (``dst`` must be absent)."""
        if src == dst:
            return self
        s = _BITS * self.chart.param_slot(src)
        d = _BITS * self.chart.param_slot(dst)
        out = {}
        for k, v in self.terms.items():
            if (k >> d) & _MASK:
                raise ValueError(f"target parameter {dst} already present")
            e = (k >> s) & _MASK
            out[k - (e << s) + (e << d)] = v
        return Polynomial(self.chart, out, _trusted=True)

    def evaluate_x(self, point: Iterable) -> Polynomial:
        """Substitute rational values for every x-variable."""
        point = [rational(p) for p in point]
        chart = self.chart
        if len(point) != chart.n:
            raise ValueError("point dimension does not match chart")
        shift_p = _BITS * chart.n
        out: dict[int, Rational] = {}
        for k, v in self.terms.items():
            val = v
            for i in range(chart.n):
                e = (k >> (_BITS * i)) & _MASK
                if e:
                    val = val * point[i] ** e
            if val:
                key = (k >> shift_p) << shift_p
                out[key] = out.get(key, mpq(0)) + val
        return Polynomial(chart, {k: v for k, v in out.items() if v}, _trusted=True)

    def value(self) -> Rational:
        """The value of a constant polynomial."""
        if not self.is_constant():
            raise ValueError("polynomial is not constant")
        return self.constant_term()

    # -- output -----------------------------------------------------------
    def __str__(self):
        return serialize(self)

    def __repr__(self):
        return f"Polynomial({serialize(self)!r}, n={self.chart.n})"


def serialize(p: Polynomial) -> str:
    """Canonical text form (graded lexicographic, highest degree first).

    The output stays inside the expression grammar accepted by
    :func:`oaesym.kernel.parser.parse_polynomial` whenever ``p`` carries no
    spectral parameters.
    """
    if not p.terms:
        return "0"
    names = p.chart.slot_names()
    parts = []
    for exps, coef in p.items():
        factors = [n if e == 1 else f"{n}^{e}" for n, e in zip(names, exps) if e]
        mag = abs(coef)
        if not factors:
            body = str(mag)
        elif mag == 1:
            body = "*".join(factors)
        else:
            body = str(mag) + "*" + "*".join(factors)
        parts.append(("-" if coef < 0 else "+", body))
    sign, body = parts[0]
    out = ("-" if sign == "-" else "") + body
    for sign, body in parts[1:]:
        out += f" {sign} {body}"
    return out
