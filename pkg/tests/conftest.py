import random

import pytest
import sympy
from gmpy2 import mpq
from hypothesis import strategies as st

from oaesym.kernel import Chart, Polynomial
from oaesym.solutions import load_solution


def random_polynomial(rng: random.Random, chart: Chart, degree: int = 4, terms: int = 6, params: int = 0) -> Polynomial:
    """Random polynomial with small rational coefficients; ``params`` spectral slots may appear."""
    items = []
    for _ in range(rng.randint(0, terms)):
        exps = [0] * chart.nslots
        for _ in range(rng.randint(0, degree)):
            exps[rng.randrange(chart.n)] += 1
        for slot in range(params):
            exps[chart.n + slot] = rng.randint(0, 2)
        items.append((exps, mpq(rng.randint(-9, 9), rng.randint(1, 5))))
    return Polynomial.from_exponents(chart, items)


@st.composite
def polynomials(draw, n=3, degree=4, max_terms=6):
    chart = Chart(n)
    count = draw(st.integers(0, max_terms))
    items = []
    for _ in range(count):
        exps = draw(st.lists(st.integers(0, degree), min_size=n, max_size=n))
        num = draw(st.integers(-20, 20))
        den = draw(st.integers(1, 7))
        items.append((exps, mpq(num, den)))
    return Polynomial.from_exponents(chart, items)


def to_sympy(p: Polynomial):
    """Independent representation used as an oracle."""
    syms = sympy.symbols(p.chart.slot_names())
    expr = sympy.Integer(0)
    for exps, coef in p.items():
        term = sympy.Rational(int(coef.numerator), int(coef.denominator))
        for s, e in zip(syms, exps):
            term *= s ** e
        expr += term
    return sympy.expand(expr), syms


@pytest.fixture(scope="session")
def bundles():
    cache = {}

    def get(name, trust=True):
        key = (name, trust)
        if key not in cache:
            cache[key] = load_solution(name, trust=trust)
        return cache[key]

    return get


# one line per acceptance criterion, printed after the run
ACCEPTANCE: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: (int(k.split(".")[0]), k)):
        terminalreporter.write_line(ACCEPTANCE[key])
