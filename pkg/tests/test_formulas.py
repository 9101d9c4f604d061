import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fockwitness import devices, formulas
from fockwitness import states as S
from fockwitness import witnesses as W
from fockwitness.errors import BranchViolation, DomainViolation, InvalidEta, InvalidOrder
from fockwitness.fock import moment_table, tensor
from fockwitness.params import AmplifierParams, BeamSplitterParams, MomentSet, SqueezerParams

amplitude = st.complex_numbers(max_magnitude=1.5, allow_nan=False, allow_infinity=False)


# -- photon-added pair --------------------------------------------------------------


def test_photon_added_reference_and_exact_at_unit_amplitude():
    assert formulas.photon_added_witness(1, 1) == pytest.approx(-13 / 6)
    assert formulas.photon_added_witness_exact(1, 1) == pytest.approx(-13 / 36)


def test_photon_added_vacuum_limit_is_bell_state():
    # alpha = beta = 0 gives (|1,0> + |0,1>)/sqrt2 with margin 1/4
    assert formulas.photon_added_witness_exact(0, 0) == pytest.approx(-0.25)
    assert W.hz_product(S.single_photon_bell()).margin == pytest.approx(0.25)


@settings(max_examples=25, deadline=None)
@given(amplitude, amplitude)
def test_photon_added_exact_form_matches_fock(a, b):
    margin = W.hz_product(S.photon_added_pair(a, b)).margin
    assert margin == pytest.approx(-formulas.photon_added_witness_exact(a, b), abs=1e-9)


# -- cat pair ---------------------------------------------------------------------


@settings(max_examples=25, deadline=None)
@given(amplitude, amplitude)
def test_cat_general_form_matches_fock(a, b):
    fock = -W.hz_product(S.cat_pair(a, b)).margin
    assert formulas.cat_witness_general(a, b) == pytest.approx(fock, abs=1e-9)


def test_cat_real_positive_form_domain_and_discrepancy():
    with pytest.raises(DomainViolation):
        formulas.cat_witness_real_positive(1.0, 1j)
    with pytest.raises(DomainViolation):
        formulas.cat_witness_real_positive(1.0, -0.5)
    res = formulas.cat_witness(1.3, 0.4)
    x = formulas.coherent_overlap_sq(1.3, 0.4)
    # general form has the x-linear term -4x|ab|(|a|-|b|)^2 where the reduced form has -2x
    expected = -2 * x * 1.3 * 0.4 * (1.3 - 0.4) ** 2 / (4 * (1 + x) ** 2)
    assert res.values["discrepancy"] == pytest.approx(expected)
    assert not formulas.cat_witness(1.0, 1j).flags["real_positive_domain"]


def test_cat_equal_amplitudes_is_product():
    assert formulas.cat_witness_general(0.7, 0.7) == pytest.approx(0)


# -- number pairs -----------------------------------------------------------------


def test_number_pair_values():
    res = formulas.number_pair_values(3, 0)
    assert res.values["lhs"] == 9 and res.values["rhs"] == 0 and res.values["detected"]
    assert not res.flags["overlap_branch"]
    res = formulas.number_pair_values(4, 2)
    assert res.flags["overlap_branch"]
    assert res.values["lhs"] == pytest.approx(36) and res.values["rhs"] == pytest.approx(24)
    assert res.values["detected"]
    with pytest.raises(InvalidOrder):
        formulas.number_pair_values(2, 3)


def test_number_pair_large_k_uses_log_gamma():
    res = formulas.number_pair_values(30, 20)
    ratio = math.factorial(30) ** 2 / (4 * math.factorial(20) ** 2)
    assert res.values["lhs"] == pytest.approx(ratio, rel=1e-10)


# -- W states ---------------------------------------------------------------------


def test_w_coherent_closed_form_peak():
    alphas = np.linspace(0.05, 3, 2000)
    vals = np.array([formulas.w_coherent_ab_dag(a) ** 2 for a in alphas])
    peak = alphas[np.argmax(vals)]
    # d/dmu [mu e^-mu / (1 + 2 e^-mu)] = 0  <=>  e^mu (1 - mu) + 2 = 0
    mu = peak**2
    assert abs(math.exp(mu) * (1 - mu) + 2) < 0.02
    assert 1.1 < peak < 1.3


# -- beam splitter ----------------------------------------------------------------


@pytest.mark.parametrize("a_state", [S.number(2), S.coherent(0.8j), S.number_superposition({0: 1, 3: 1}),
                                     S.squeezed_vacuum(0.6, 0.4)])
def test_bs_m2_moments_match_fock(a_state):
    p = BeamSplitterParams.from_angle(0.7, 0.2, -0.3)
    out = devices.beam_splitter(tensor(a_state, S.number(0)), (0, 1), p)
    rep = W.hz_product(out, 2, 2)
    res = formulas.bs_m2_moments(moment_table(a_state, 4), p.t, p.r)
    assert res.values["lhs"] == pytest.approx(rep.lhs, abs=1e-10)
    assert res.values["rhs"] == pytest.approx(rep.rhs, abs=1e-10)
    assert res.flags["reduced_condition"] == rep.detected


def test_balanced_leading_requires_balanced_splitter():
    table = moment_table(S.squeezed_vacuum(0.5), 4)
    p = BeamSplitterParams.from_angle(0.3)
    with pytest.raises(BranchViolation):
        formulas.bs_coherent_leading_balanced(8, p.t, p.r, table)
    b = BeamSplitterParams.balanced()
    assert formulas.bs_coherent_leading_balanced(8, b.t, b.r, table) == pytest.approx(
        formulas.bs_coherent_leading(8, b.t, b.r, table))


def test_leading_term_converges_with_beta():
    """The relative gap between Fock and the leading term shrinks roughly like 1/|beta|."""
    b = BeamSplitterParams.balanced()
    a = S.squeezed_vacuum(0.5)
    table = moment_table(a, 4)
    phase = formulas.optimal_beta_phase(b.t, b.r, table)
    gaps = []
    for mag in (2.0, 4.0, 8.0):
        beta = mag * cmath.exp(1j * phase)
        out = devices.beam_splitter(tensor(a, S.coherent(beta)), (0, 1), b)
        lead = formulas.bs_coherent_leading(beta, b.t, b.r, table)
        gaps.append(abs(W.hz_product(out).margin - lead) / abs(lead))
    assert gaps[0] > gaps[1] > gaps[2]


def test_optimal_phase_maximizes_leading_term():
    b = BeamSplitterParams.from_angle(0.6, 0.5, -0.2)
    table = moment_table(S.squeezed_vacuum(0.4, 1.1), 4)
    best = formulas.optimal_beta_phase(b.t, b.r, table)
    values = [formulas.bs_coherent_leading(3 * cmath.exp(1j * ph), b.t, b.r, table)
              for ph in np.linspace(0, 2 * math.pi, 361)]
    at_best = formulas.bs_coherent_leading(3 * cmath.exp(1j * best), b.t, b.r, table)
    assert at_best >= max(values) - 1e-9


@pytest.mark.parametrize("r", [0.3, 1.0])
def test_duan_chain_matches_numeric_witness(r):
    b = BeamSplitterParams.from_angle(0.5, 0.0, 0.0)
    a = S.squeezed_vacuum(r)
    out = devices.beam_splitter(tensor(a, S.number(0)), (0, 1), b)
    chain = formulas.duan_bs_chain(moment_table(a, 2), b.t, b.r, xi=1.3)
    assert W.duan_simon(out).margin == pytest.approx(-2 * chain.values["minimized"], abs=1e-8)
    at_xi = W.duan_simon(out, xi=1.3)
    assert at_xi.lhs == pytest.approx(chain.values["expression"], abs=1e-10)
    assert chain.flags["detected"] and chain.flags["squeezed"]


def test_duan_chain_not_detected_for_coherent_input():
    b = BeamSplitterParams.balanced()
    chain = formulas.duan_bs_chain(moment_table(S.coherent(1.0), 2), b.t, b.r)
    assert chain.values["minimized"] == pytest.approx(0, abs=1e-12)
    assert not chain.flags["squeezed"]


# -- parametric amplifier ---------------------------------------------------------


def test_paramp_conditions():
    p = SqueezerParams.from_r(1.0)
    assert formulas.paramp_m1_condition(p).flags["holds"]
    assert not formulas.paramp_m1_condition(SqueezerParams(1.0, 0)).flags["holds"]
    assert formulas.paramp_m2_condition(3.0, p).flags["holds"]


@pytest.mark.parametrize("phase, expected", [(0.0, True), (math.pi / 2, False), (math.pi, True)])
def test_duan_parametric_phase(phase, expected):
    p = SqueezerParams.from_r(0.7, phase)
    assert formulas.duan_parametric(1.0, p).flags["holds"] == expected
    with pytest.raises(InvalidEta):
        formulas.duan_parametric(0.5, p)


def test_eta_from_table():
    assert formulas.eta_from_table(moment_table(S.coherent(1.3), 2)) == pytest.approx(1)
    assert formulas.eta_from_table(moment_table(S.number(2), 2)) == pytest.approx(5)


def test_squeezer_m2_extra_matches_formula():
    p = SqueezerParams.from_r(0.5)
    a = S.number(3)
    mapped = devices.squeezer_moment_map(a, p)
    assert mapped.extra["m2_condition"] == pytest.approx(formulas.paramp_m2_condition(3.0, p).values["value"])


# -- linear amplifier -------------------------------------------------------------


def test_amp_branches():
    m0 = MomentSet.from_state(S.single_photon_bell())
    with pytest.raises(BranchViolation):
        formulas.amp_loss_scaled(m0, AmplifierParams(0.1, 0.2, 0, 0.1, 1))
    with pytest.raises(BranchViolation):
        formulas.amp_high_gain(m0, AmplifierParams(0.1, 0.2, 0.3, 0.1, 1))
    with pytest.raises(BranchViolation):
        formulas.amp_witness_forms(m0, AmplifierParams(0.1, 0.2, 0.3, 0.1, 1))
    loss, high = formulas.amp_witness_forms(m0, AmplifierParams(0, 0.2, 0, 0.1, 1))
    assert high is None and loss == pytest.approx(0.25 * math.exp(-0.3))


def test_amp_exact_witness_reduces_to_branches():
    m0 = MomentSet.from_state(S.photon_added_pair(0.5, 0.5))
    loss = AmplifierParams(0, 0.2, 0, 0.1, 2.0)
    assert formulas.amp_exact_witness(m0, loss) == pytest.approx(formulas.amp_loss_scaled(m0, loss))
    gain = AmplifierParams(0.5, 0.1, 0.6, 0.2, 40.0)
    exact = formulas.amp_exact_witness(m0, gain)
    lead = formulas.amp_high_gain(m0, gain).values["value"]
    assert exact == pytest.approx(lead, rel=1e-6)


def test_amp_exact_witness_matches_linear_moments():
    m0 = MomentSet.from_state(S.cat_pair(1, 0.5))
    p = AmplifierParams(0.3, 0.1, 0.2, 0.25, 1.7)
    assert formulas.amp_exact_witness(m0, p) == pytest.approx(devices.linear_amp_moments(m0, p).witness)
