import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fockwitness import states as S
from fockwitness.errors import InvalidMode, ShapeMismatch, TruncationOverflow
from fockwitness.fock import (
    DensityOperator,
    Mixture,
    Monomial,
    PureState,
    Truncation,
    apply_ladder,
    basis_state,
    central_expect,
    embed,
    expect,
    fidelity,
    inner,
    moment,
    moment_table,
    partial_trace,
    quadrature_stats,
    quadrature_uv_variance,
    tensor,
    to_density,
    to_mixture,
    vacuum,
)

import oracles as O


def random_state(seed: int, cutoffs) -> PureState:
    rng = np.random.default_rng(seed)
    amps = rng.normal(size=tuple(c + 1 for c in cutoffs)) + 1j * rng.normal(size=tuple(c + 1 for c in cutoffs))
    return PureState(amps / np.linalg.norm(amps))


def test_truncation_dims_and_size():
    tr = Truncation((2, 0, 3))
    assert tr.dims == (3, 1, 4)
    assert tr.size == 12
    assert tr.n_modes == 3


@pytest.mark.parametrize("bad", [(), (-1,), (2, -3)])
def test_truncation_rejects_bad_cutoffs(bad):
    with pytest.raises(ShapeMismatch):
        Truncation(bad)


def test_pure_state_requires_normalization():
    with pytest.raises(ValueError):
        PureState(np.array([1.0, 1.0]))
    raw = PureState(np.array([1.0, 1.0]), normalized=False)
    assert raw.norm() == pytest.approx(math.sqrt(2))


def test_amplitudes_are_read_only():
    psi = basis_state((1, 0), (2, 2))
    with pytest.raises(ValueError):
        psi.amplitudes[0, 0] = 1


def test_density_validation():
    with pytest.raises(ValueError):
        DensityOperator(np.array([[0.5, 0.3], [0.1, 0.5]]), Truncation((1,)))
    with pytest.raises(ValueError):
        DensityOperator(np.diag([1.5, -0.5]), Truncation((1,)))
    with pytest.raises(ShapeMismatch):
        DensityOperator(np.eye(3) / 3, Truncation((1,)))


def test_annihilation_on_coherent_is_eigenvalue():
    psi = S.coherent(1.0, cutoff=25)
    lowered = apply_ladder(psi, 0, "annihilation").amplitudes
    assert np.linalg.norm(lowered - psi.amplitudes) < 1e-10


def test_creation_overflow_is_reported():
    psi = basis_state((2,), (2,))
    with pytest.raises(TruncationOverflow):
        apply_ladder(psi, 0, "creation")
    ok = apply_ladder(basis_state((1,), (2,)), 0, "creation")
    assert ok.amplitudes[2] == pytest.approx(math.sqrt(2))


def test_invalid_mode():
    with pytest.raises(InvalidMode):
        apply_ladder(vacuum(2, (1, 1)), 2, "annihilation")
    with pytest.raises(InvalidMode):
        Monomial.of(2, {3: (1, 0)})


def test_tensor_embed_inner():
    a, b = S.coherent(0.5), S.number(2)
    ab = tensor(a, b)
    assert ab.cutoffs == (a.cutoffs[0], 2)
    big = embed(ab, (ab.cutoffs[0] + 3, 5))
    assert inner(big, big) == pytest.approx(1)
    assert fidelity(ab, big) == pytest.approx(1)
    with pytest.raises(ShapeMismatch):
        embed(ab, (0, 0))


@pytest.mark.parametrize("powers", [[(0, 1), (1, 0)], [(1, 1), (1, 1)], [(2, 0), (0, 1)],
                                    [(2, 2), (0, 0)], [(0, 3), (2, 1)], [(1, 2), (3, 3)]])
def test_expect_matches_dense_matrices(powers):
    psi = random_state(3, (4, 5))
    mono = Monomial(tuple(powers))
    ref = O.dense_expect(psi, powers)
    assert expect(psi, mono) == pytest.approx(ref, abs=1e-12)
    rho = to_density(psi)
    assert expect(rho, mono) == pytest.approx(ref, abs=1e-12)
    mix = Mixture((0.3, 0.7), (psi, random_state(4, (4, 5))))
    ref_mix = 0.3 * ref + 0.7 * O.dense_expect(random_state(4, (4, 5)), powers)
    assert expect(mix, mono) == pytest.approx(ref_mix, abs=1e-12)
    assert expect(to_density(mix), mono) == pytest.approx(ref_mix, abs=1e-12)


def test_expect_near_cutoff_is_exact():
    # <n|a^dag a|n> at the top of the truncation must still be n
    psi = basis_state((3,), (3,))
    assert moment(psi, {0: (1, 1)}) == pytest.approx(3)
    assert moment(psi, {0: (3, 3)}) == pytest.approx(6)


def test_adjoint_relation():
    psi = random_state(11, (3, 3))
    mono = Monomial(((2, 1), (0, 2)))
    assert expect(psi, mono.adjoint()) == pytest.approx(np.conj(expect(psi, mono)), abs=1e-12)


def test_moment_table_of_number_state():
    table = moment_table(S.number(4), 4)
    for k in range(5):
        assert table[(k, k)] == pytest.approx(math.perm(4, k))
    assert table[(0, 1)] == 0


def test_partial_trace_agrees_across_representations():
    psi = random_state(5, (2, 3, 1))
    ref = partial_trace(psi, [0, 2]).matrix
    assert np.allclose(partial_trace(to_density(psi), [0, 2]).matrix, ref)
    mix = Mixture((1.0,), (psi,))
    assert np.allclose(partial_trace(mix, [2, 0]).matrix, ref)
    assert np.trace(ref) == pytest.approx(1)


def test_partial_trace_of_product_is_factor():
    a, b = S.coherent(0.3 + 0.2j), S.number(1)
    red = partial_trace(tensor(a, b), [1]).matrix
    assert np.allclose(red, np.outer(b.amplitudes, b.amplitudes.conj()))


def test_to_mixture_round_trip():
    mix = Mixture((0.25, 0.75), (random_state(1, (2, 2)), random_state(2, (2, 2))))
    rho = to_density(mix)
    back = to_density(to_mixture(rho))
    assert np.allclose(back.matrix, rho.matrix, atol=1e-12)


def test_central_moment_invariant_under_displacement():
    from fockwitness.states import displaced

    bell = S.single_photon_bell()
    mono = Monomial(((1, 1), (1, 1)))
    base = central_expect(bell, mono)
    moved = central_expect(displaced(bell, [0.7, -0.4j]), mono)
    assert moved == pytest.approx(base, abs=1e-10)


def test_quadrature_stats_vacuum_and_coherent():
    for psi in (vacuum(2, (3, 3)), S.product_coherent(0.5, -1j)):
        st = quadrature_stats(psi)
        for v in (st.var_xa, st.var_pa, st.var_xb, st.var_pb):
            assert v == pytest.approx(0.5)
        assert st.cov_x == pytest.approx(0, abs=1e-12)
        u, v = quadrature_uv_variance(psi, 2.0)
        assert u + v == pytest.approx(4 + 1 / 4)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 3), st.integers(1, 3))
def test_number_operator_expectation_is_real_and_bounded(seed, ca, cb):
    psi = random_state(seed, (ca, cb))
    na = moment(psi, {0: (1, 1)})
    assert abs(na.imag) < 1e-12
    assert -1e-12 <= na.real <= ca + 1e-12


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_cauchy_schwarz_on_random_states(seed):
    psi = random_state(seed, (3, 3))
    lhs = abs(moment(psi, {0: (0, 1), 1: (1, 0)})) ** 2
    # <a^dag a b b^dag> = <N_a N_b> + <N_a>
    rhs = moment(psi, {0: (1, 1), 1: (1, 1)}).real + moment(psi, {0: (1, 1)}).real
    assert lhs <= rhs + 1e-12
