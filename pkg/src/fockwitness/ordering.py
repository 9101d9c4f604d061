"""Normally ordered polynomials in bosonic ladder operators.

A polynomial is a dict mapping a word ``(p_0, q_0, p_1, q_1, ...)`` to its
coefficient, the word standing for ``prod_i (a_i^dag)^p_i a_i^q_i``.  Products
are reordered with the single-mode identity

    a^q (a^dag)^p = sum_k C(q, k) C(p, k) k! (a^dag)^(p-k) a^(q-k).
"""

from __future__ import annotations

import math
from collections import defaultdict
from typing import Callable, Mapping

Poly = dict[tuple[int, ...], complex]


def constant(value: complex, n_modes: int) -> Poly:
    return {(0,) * (2 * n_modes): complex(value)}


def ladder(mode: int, dagger: bool, n_modes: int) -> Poly:
    word = [0] * (2 * n_modes)
    word[2 * mode + (0 if dagger else 1)] = 1
    return {tuple(word): 1 + 0j}


def add(*polys: Poly) -> Poly:
    out: dict = defaultdict(complex)
    for poly in polys:
        for w, c in poly.items():
            out[w] += c
    return {w: c for w, c in out.items() if c != 0}


def scale(poly: Poly, factor: complex) -> Poly:
    return {w: c * factor for w, c in poly.items() if c * factor != 0}


def linear(n_modes: int, terms: Mapping[tuple[int, bool], complex], const: complex = 0) -> Poly:
    """sum c * a_mode (dagger=False) or c * a_mode^dag (dagger=True), plus a constant."""
    parts = [scale(ladder(m, d, n_modes), c) for (m, d), c in terms.items()]
    if const:
        parts.append(constant(const, n_modes))
    return add(*parts)


def _single_mode_product(p1: int, q1: int, p2: int, q2: int) -> list[tuple[int, int, int]]:
    # (a^dag)^p1 a^q1 (a^dag)^p2 a^q2 -> [(coef, p, q), ...]
    return [
        (math.comb(q1, k) * math.comb(p2, k) * math.factorial(k), p1 + p2 - k, q1 + q2 - k)
        for k in range(min(q1, p2) + 1)
    ]


def multiply(x: Poly, y: Poly) -> Poly:
    out: dict = defaultdict(complex)
    for wx, cx in x.items():
        for wy, cy in y.items():
            partial = [(cx * cy, ())]
            for i in range(0, len(wx), 2):
                expanded = _single_mode_product(wx[i], wx[i + 1], wy[i], wy[i + 1])
                partial = [
                    (c * k, word + (p, q)) for c, word in partial for k, p, q in expanded
                ]
            for c, word in partial:
                out[word] += c
    return {w: c for w, c in out.items() if c != 0}


def product(*polys: Poly) -> Poly:
    result = polys[0]
    for poly in polys[1:]:
        result = multiply(result, poly)
    return result


def dagger(poly: Poly) -> Poly:
    """Hermitian adjoint; normal order is preserved by swapping p and q per mode."""
    out = {}
    for w, c in poly.items():
        swapped = []
        for i in range(0, len(w), 2):
            swapped += [w[i + 1], w[i]]
        out[tuple(swapped)] = c.conjugate()
    return out


def evaluate(poly: Poly, word_moment: Callable[[tuple[int, ...]], complex]) -> complex:
    """Expectation of ``poly`` given a callback that returns the moment of one word."""
    return complex(sum(c * word_moment(w) for w, c in poly.items()))


def product_state_moments(
    a_table: Mapping[tuple[int, int], complex], b_amplitude: complex = 0j
) -> Callable[[tuple[int, ...]], complex]:
    """Word moments for ``rho_a (x) |beta><beta|`` on two modes.

    The a-mode enters through its table of ``<(a^dag)^j a^k>``; the b-mode is a
    coherent state (vacuum for ``b_amplitude = 0``), so ``b -> beta``.
    """
    beta = complex(b_amplitude)

    def word_moment(word: tuple[int, ...]) -> complex:
        pa, qa, pb, qb = word
        if (pa, qa) not in a_table:
            raise KeyError(f"a-mode moment <(a^dag)^{pa} a^{qa}> not supplied")
        return a_table[(pa, qa)] * beta.conjugate() ** pb * beta**qb

    return word_moment
