"""Poincare homotopy integration of closed polynomial forms, basepoint 0."""
from __future__ import annotations

from typing import Sequence

from gmpy2 import mpq

from .polynomial import Chart, Polynomial


class NotClosed(ArithmeticError):
    """A form handed to the integrator fails its closedness test.

    ``witness`` is ``(alpha, beta)`` (0-based) and ``difference`` is the
    nonzero polynomial ``d omega_alpha/dx^beta - d omega_beta/dx^alpha``.
    """

    def __init__(self, alpha: int, beta: int, difference: Polynomial, what: str = "one-form"):
        super().__init__(
            f"{what} is not closed: component pair ({alpha + 1},{beta + 1}) differs by {difference}"
        )
        self.witness = (alpha, beta)
        self.difference = difference


def closedness_defect(omega: Sequence[Polynomial]) -> tuple[int, int, Polynomial] | None:
    """First ``(alpha, beta, d_beta omega_alpha - d_alpha omega_beta)`` that is nonzero."""
    n = len(omega)
    for a in range(n):
        for b in range(a + 1, n):
            d = omega[a].diff(b) - omega[b].diff(a)
            if d:
                return a, b, d
    return None


def homotopy_integrate_oneform(omega: Sequence[Polynomial], chart: Chart | None = None) -> Polynomial:
    """Return ``P`` with ``dP/dx^alpha = omega[alpha]`` and ``P(0) = 0``.

    Uses ``P(x) = int_0^1 omega_alpha(t x) x^alpha dt``: a monomial of
    x-degree ``m`` in ``omega_alpha`` contributes ``x^alpha / (m + 1)`` times
    itself.  Spectral parameters ride along as constants.
    """
    if chart is None:
        if not omega:
            raise ValueError("empty one-form needs an explicit chart")
        chart = omega[0].chart
    if len(omega) != chart.n:
        raise ValueError(f"one-form has {len(omega)} components on a {chart.n}-dimensional chart")
    defect = closedness_defect(omega)
    if defect is not None:
        raise NotClosed(*defect)
    terms: dict[int, object] = {}
    for a, comp in enumerate(omega):
        unit = chart.unit(a)
        for k, v in comp.terms.items():
            m = chart.x_degree(k)
            key = k + unit
            c = v * mpq(1, m + 1)
            terms[key] = terms.get(key, 0) + c
    return Polynomial(chart, {k: v for k, v in terms.items() if v}, _trusted=True)


def integrate_hessian(hessian: Sequence[Sequence[Polynomial]], chart: Chart | None = None) -> Polynomial:
    """Return ``P`` with ``d^2 P/dx^a dx^c = hessian[a][c]``, ``P(0) = 0``, ``grad P(0) = 0``.

    Two nested homotopy integrations: first each column ``c`` is integrated
    to ``u_c``, then ``(u_c)`` is integrated.  ``NotClosed`` from the second
    stage carries ``what='gradient'``; it fires exactly when the prescribed
    Hessian is not symmetric.
    """
    n = len(hessian)
    chart = chart or hessian[0][0].chart
    grad = []
    for c in range(n):
        column = [hessian[a][c] for a in range(n)]
        try:
            grad.append(homotopy_integrate_oneform(column, chart))
        except NotClosed as exc:
            raise NotClosed(*exc.witness, exc.difference, what=f"column {c + 1} of Hessian") from None
    defect = closedness_defect(grad)
    if defect is not None:
        raise NotClosed(*defect, what="gradient")
    return homotopy_integrate_oneform(grad, chart)


def gradient(p: Polynomial) -> list[Polynomial]:
    return [p.diff(a) for a in range(p.chart.n)]
