import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fockwitness import ordering
from fockwitness.fock import PureState, expect, Monomial

import oracles as O


def test_commutator():
    a = ordering.ladder(0, False, 1)
    ad = ordering.ladder(0, True, 1)
    comm = ordering.add(ordering.multiply(a, ad), ordering.scale(ordering.multiply(ad, a), -1))
    assert comm == {(0, 0): 1 + 0j}


def test_cross_mode_operators_commute():
    a = ordering.ladder(0, False, 2)
    bd = ordering.ladder(1, True, 2)
    assert ordering.multiply(a, bd) == ordering.multiply(bd, a)


def test_dagger_involution():
    poly = ordering.linear(2, {(0, False): 1 + 2j, (1, True): -0.5j}, const=0.3)
    sq = ordering.product(poly, poly)
    assert ordering.dagger(ordering.dagger(sq)) == sq


def dense_of_poly(poly, cutoffs):
    ops = O.ladders(cutoffs)
    total = np.zeros_like(ops[0])
    for word, c in poly.items():
        mono = np.eye(ops[0].shape[0], dtype=complex)
        for i, a in enumerate(ops):
            p, q = word[2 * i], word[2 * i + 1]
            mono = mono @ np.linalg.matrix_power(a.conj().T, p) @ np.linalg.matrix_power(a, q)
        total = total + c * mono
    return total


@settings(max_examples=30, deadline=None)
@given(st.lists(st.complex_numbers(max_magnitude=2, allow_nan=False, allow_infinity=False),
                min_size=4, max_size=4))
def test_normal_ordering_matches_matrices(coefs):
    x = ordering.linear(2, {(0, False): coefs[0], (1, True): coefs[1]})
    y = ordering.linear(2, {(0, True): coefs[2], (1, False): coefs[3]})
    prod = ordering.product(x, y, x)
    # compare expectation values on a low-photon state where truncation is exact
    rng = np.random.default_rng(0)
    amps = np.zeros((8, 8), dtype=complex)
    amps[:3, :3] = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    amps /= np.linalg.norm(amps)
    psi = PureState(amps)
    via_words = ordering.evaluate(prod, lambda w: expect(psi, Monomial(((w[0], w[1]), (w[2], w[3])))))
    ops = O.ladders((7, 7))
    a, b = ops
    X = coefs[0] * a + coefs[1] * b.conj().T
    Y = coefs[2] * a.conj().T + coefs[3] * b
    vec = amps.reshape(-1)
    direct = vec.conj() @ (X @ Y @ X) @ vec
    assert via_words == pytest.approx(direct, abs=1e-9)


def test_product_state_moments_coherent_b():
    # a-mode is |1>: <a^dag a> = 1, everything else off-diagonal vanishes
    table = {(j, k): (1.0 if j == k and j <= 1 else 0.0) for j in range(3) for k in range(3)}
    wm = ordering.product_state_moments(table, 2j)
    assert wm((1, 1, 1, 1)) == pytest.approx(4)
    assert wm((0, 0, 0, 1)) == pytest.approx(2j)
    assert wm((0, 0, 1, 0)) == pytest.approx(-2j)
    with pytest.raises(KeyError):
        wm((5, 0, 0, 0))
