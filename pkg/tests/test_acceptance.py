"""End-to-end acceptance checks, one or more tests per criterion.

Each test is tagged with ``@pytest.mark.criterion``; conftest prints one
PASS/FAIL line per criterion at the end of the run.  Runtimes are asserted
against the stated budgets.
"""

from __future__ import annotations

import cmath
import math
import time

import numpy as np
import pytest

from fockwitness import devices, formulas
from fockwitness import states as S
from fockwitness import witnesses as W
from fockwitness.fock import Mixture, Monomial, PureState, expect, moment_table, partial_trace, tensor, to_density
from fockwitness.params import AmplifierParams, BeamSplitterParams, MomentSet, SqueezerParams
from fockwitness.reproduce import CAT_GRID, COHERENT_GRID, adjudicate_cat, photon_added_grid

import oracles as O

criterion = pytest.mark.criterion


class Budget:
    def __init__(self, seconds: float):
        self.seconds = seconds

    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.start
        if exc[0] is None:
            assert self.elapsed < self.seconds, f"took {self.elapsed:.2f} s, budget {self.seconds} s"


# -- 1 ----------------------------------------------------------------------------


@criterion(1, "coherent products saturate the product condition")
def test_coherent_saturation():
    with Budget(1.0):
        margins = [W.hz_product(S.product_coherent(a, b)).margin for a, b in COHERENT_GRID]
    assert len(margins) == 10
    assert max(abs(m) for m in margins) <= 1e-10


# -- 2 ----------------------------------------------------------------------------


@criterion(2, "photon-added coherent pair detection")
def test_photon_added_detected_with_derived_value():
    with Budget(5.0):
        grid = photon_added_grid()
        reports = [W.hz_product(S.photon_added_pair(a, b)) for a, b in grid]
        unit = W.hz_product(S.photon_added_pair(1, 1))
    assert len(grid) == 20
    assert all((a.conjugate() * b).real > 0 for a, b in grid)
    assert all(r.detected for r in reports)
    # independent dense-matrix value at alpha = beta = 1: <a b^dag> = 11/6, <N_a N_b> = 3
    ab_dag = O.dense_expect(S.photon_added_pair(1, 1), [(0, 1), (1, 0)])
    na_nb = O.dense_expect(S.photon_added_pair(1, 1), [(1, 1), (1, 1)])
    assert abs(ab_dag - 11 / 6) < 1e-12 and abs(na_nb - 3) < 1e-12
    assert abs(unit.margin - 13 / 36) <= 1e-9


@criterion(2, "photon-added coherent pair detection")
def test_photon_added_matches_corrected_closed_form():
    grid = photon_added_grid()
    err = max(abs(W.hz_product(S.photon_added_pair(a, b)).margin + formulas.photon_added_witness_exact(a, b))
              for a, b in grid)
    assert err <= 1e-9


@criterion(2, "photon-added coherent pair detection")
@pytest.mark.xfail(strict=True, reason="the reference closed form divides by one power of "
                   "(|alpha+beta|^2 + 2) instead of two; at alpha = beta = 1 it gives 13/6 where "
                   "the state has 13/36")
def test_photon_added_matches_reference_closed_form():
    grid = photon_added_grid()
    err = max(abs(W.hz_product(S.photon_added_pair(a, b)).margin + formulas.photon_added_witness(a, b))
              for a, b in grid)
    assert err <= 1e-9
    assert abs(W.hz_product(S.photon_added_pair(1, 1)).margin - 13 / 6) <= 1e-9


# -- 3 ----------------------------------------------------------------------------


@criterion(3, "cat-state form adjudication")
def test_cat_adjudication(tmp_path):
    from fockwitness.reproduce import run_section
    import json

    with Budget(5.0):
        res = adjudicate_cat(CAT_GRID, 1e-9)
    assert res["matches"] == ["general"]
    assert res["canonical"] == "general"
    assert res["real_positive_error"] > 1e-3
    # the grid stays on the real-positive domain of the special form
    for a, b in CAT_GRID:
        prod = complex(a) * complex(b).conjugate()
        assert abs(prod.imag) < 1e-12 and prod.real > 0
    run_section("II", tmp_path, "csv")
    manifest = json.loads((tmp_path / "II_manifest.json").read_text())
    assert manifest["cat_canonical_form"] == "general"


# -- 4 ----------------------------------------------------------------------------


@criterion(4, "number-pair boundary")
def test_number_pair_boundary():
    cutoff = 12
    with Budget(30.0):
        rows = []
        for k1 in range(1, 11):
            for k2 in range(k1):
                d = k1 - k2
                state = S.number_pair(k1, k2, headroom=cutoff - k1)
                assert state.cutoffs == (cutoff, cutoff)
                rows.append((k1, k2, W.hz_product(state, d, d), formulas.number_pair_values(k1, k2)))
    assert len(rows) == 55
    for k1, k2, rep, closed in rows:
        assert rep.detected == closed.values["detected"], (k1, k2)
        assert rep.lhs == pytest.approx(closed.values["lhs"], rel=1e-9, abs=1e-12)
        assert rep.rhs == pytest.approx(closed.values["rhs"], rel=1e-9, abs=1e-12)
    rep30 = next(r for k1, k2, r, _ in rows if (k1, k2) == (3, 0))
    assert abs(rep30.lhs - 9) <= 1e-10 and abs(rep30.rhs) <= 1e-10 and rep30.detected
    rep42 = next(r for k1, k2, r, _ in rows if (k1, k2) == (4, 2))
    assert rep42.detected


# -- 5 ----------------------------------------------------------------------------

SPLITTERS = [BeamSplitterParams.balanced(), BeamSplitterParams.from_angle(0.3, 0.4, -1.2),
             BeamSplitterParams.from_angle(1.1, -0.7, 2.0)]


def bs_suite():
    return {
        "number_3": S.number(3),
        "coherent_1": S.coherent(1.0),
        "coherent_complex": S.coherent(0.6 - 0.9j),
        "squeezed_0.5": S.squeezed_vacuum(0.5),
        "zero_three": S.number_superposition({0: 1, 3: 1}),
    }


@criterion(5, "beam-splitter oracle equivalence")
def test_beam_splitter_moment_maps():
    with Budget(10.0):
        worst = 0.0
        mismatched = []
        for bs in SPLITTERS:
            for name, a in bs_suite().items():
                out = devices.beam_splitter(tensor(a, S.number(0)), (0, 1), bs)
                fock = MomentSet.from_state(out)
                table = moment_table(a, 4)
                closed = formulas.bs_output_moments_vacuum(table, bs.t, bs.r)
                mapped = devices.beam_splitter_moment_map(table, bs)
                for ref in (closed, mapped):
                    worst = max(worst, abs(fock.ab_dag - ref.ab_dag), abs(fock.na_nb - ref.na_nb),
                                abs(fock.na - ref.na), abs(fock.nb - ref.nb))
                predicted = W.input_predicates(a)["sub_poissonian"].holds
                if predicted != W.hz_product(out).detected:
                    mismatched.append((name, bs))
    assert worst <= 1e-10
    assert not mismatched


# -- 6 ----------------------------------------------------------------------------


@criterion(6, "fourth-moment detection")
def test_fourth_moment_detection():
    with Budget(2.0):
        state = tensor(S.number_superposition({0: 1, 3: 1}), S.number(0))
        out = devices.beam_splitter(state, (0, 1), BeamSplitterParams.balanced())
        m1 = W.hz_product(out, 1, 1, tolerance=1e-10)
        m2 = W.hz_product(out, 2, 2, tolerance=1e-10)
    assert not m1.detected
    assert m2.detected


# -- 7 ----------------------------------------------------------------------------


@criterion(7, "large-beta squeezing criterion")
def test_large_beta_leading_term():
    bs = BeamSplitterParams.balanced()
    with Budget(60.0):
        a = S.squeezed_vacuum(0.5)
        table = moment_table(a, 4)
        beta = 8 * cmath.exp(1j * formulas.optimal_beta_phase(bs.t, bs.r, table))
        b = S.coherent(beta, headroom=10)
        out = devices.beam_splitter(tensor(a, b), (0, 1), bs)
        fock = W.hz_product(out).margin
        lead = formulas.bs_coherent_leading_balanced(beta, bs.t, bs.r, table)
    assert abs(beta) == pytest.approx(8)
    assert fock > 0
    assert abs(fock - lead) / abs(lead) <= 0.05


# -- 8 ----------------------------------------------------------------------------


def squeezer_inputs():
    th = S.thermal(0.5)
    return {
        "vacuum": tensor(S.number(0), S.number(0)),
        "coherent_1": tensor(S.coherent(1.0), S.number(0)),
        "number_2": tensor(S.number(2), S.number(0)),
        "thermal_0.5": Mixture(th.weights, tuple(tensor(s, S.number(0)) for s in th.states)),
    }


@criterion(8, "parametric amplifier always entangles")
def test_parametric_always_entangled():
    with Budget(30.0):
        sum_missed, duan_bad, map_err = [], [], 0.0
        for r in (0.2, 1.0, 2.0):
            real_p = SqueezerParams(math.cosh(r), math.sinh(r))
            imag_p = SqueezerParams(math.cosh(r), 1j * math.sinh(r))
            for name, st in squeezer_inputs().items():
                real = devices.two_mode_squeezer(st, (0, 1), real_p)
                imag = devices.two_mode_squeezer(st, (0, 1), imag_p)
                if not W.hz_sum(real).detected:
                    sum_missed.append((r, name))
                if not (W.duan_simon(real).detected and not W.duan_simon(imag).detected):
                    duan_bad.append((r, name))
                closed = devices.squeezer_moment_map(partial_trace(st, [0]), real_p)
                fock = MomentSet.from_state(real)
                map_err = max(map_err, abs(fock.na - closed.na) / (1 + closed.na),
                              abs(fock.na_nb - closed.na_nb) / (1 + closed.na_nb))
    assert not sum_missed
    assert not duan_bad
    assert map_err <= 1e-9


# -- 9 ----------------------------------------------------------------------------


def suite_states():
    return {
        "bell": S.single_photon_bell(),
        "photon_added": S.photon_added_pair(1, 1),
        "cat": S.cat_pair(1, 0.5),
        "number_pair_3_1": S.number_pair(3, 1),
        "number_pair_4_2": S.number_pair(4, 2),
        "coherent": S.product_coherent(1, 0.5j),
    }


@criterion(9, "amplifier moment oracle")
def test_lindblad_matches_closed_form():
    bell = S.single_photon_bell()
    p = AmplifierParams(0.2, 0.1, 0.3, 0.1, 1.0)
    with Budget(120.0):
        rho = devices.lindblad_evolve(bell, p, cutoff=24)
    num = MomentSet.from_state(rho)
    ref = devices.linear_amp_moments(MomentSet.from_state(bell), p)
    for field in ("ab_dag", "na_nb", "na", "nb"):
        assert abs(getattr(num, field) - getattr(ref, field)) <= 1e-6, field


@criterion(9, "amplifier moment oracle")
def test_lindblad_at_cutoff_15_reports_overflow():
    """At cutoff 15 the top Fock population at t = 1 exceeds the overflow bound and is reported."""
    from fockwitness.errors import NumericalFailure

    with pytest.raises(NumericalFailure):
        devices.lindblad_evolve(S.single_photon_bell(), AmplifierParams(0.2, 0.1, 0.3, 0.1, 1.0), cutoff=15)


@criterion(9, "amplifier moment oracle")
def test_loss_only_scaling():
    bell = S.single_photon_bell()
    m0 = MomentSet.from_state(bell)
    with Budget(120.0):
        for p in (AmplifierParams(0.0, 0.3, 0.0, 0.2, 1.5), AmplifierParams(0.0, 0.05, 0.0, 0.4, 3.0)):
            evolved = MomentSet.from_state(devices.lindblad_evolve(bell, p, cutoff=15)).witness
            expected = m0.witness * math.exp(-(p.C_a + p.C_b) * p.t)
            assert abs(evolved - expected) <= 1e-8
            assert abs(formulas.amp_loss_scaled(m0, p) - expected) <= 1e-12


@criterion(9, "amplifier moment oracle")
def test_high_gain_bracket_non_positive():
    gains = [AmplifierParams(0.4, 0.1, 0.5, 0.2), AmplifierParams(1.0, 0.0, 0.3, 0.1),
             AmplifierParams(0.21, 0.2, 2.0, 1.0)]
    states = list(suite_states().values())
    brackets = [formulas.amp_high_gain(MomentSet.from_state(s), g).values["bracket"]
                for s in states for g in gains]
    assert max(brackets) <= 0


@criterion(9, "amplifier moment oracle")
def test_no_detection_after_classicality_thresholds():
    bell = S.single_photon_bell()
    with Budget(120.0):
        for A, C, t, cutoff in ((0.2, 0.1, 7.0, 50), (0.15, 0.1, 8.5, 60), (0.5, 0.4, 2.5, 50)):
            base = AmplifierParams(A, C, A, C)
            ta, tb = devices.classicality_threshold(base)
            assert ta == pytest.approx(math.log(A / C) / (A - C), rel=1e-12) and tb == ta
            assert t > ta
            p = base.with_time(t)
            assert devices.is_classical(p)
            rho = devices.lindblad_evolve(bell, p, cutoff=cutoff)
            reports = W.all_pair_witnesses(rho, orders=((1, 1), (2, 2), (1, 2), (2, 1)))
            assert not any(r.detected for r in reports), [r for r in reports if r.detected]


# -- 10 ---------------------------------------------------------------------------


@criterion(10, "tripartite W states")
def test_tripartite():
    with Budget(20.0):
        res = W.tripartite_genuine(S.w_single_photon())
        alphas = np.linspace(0.1, 3.0, 30)
        margins = np.array([W.tripartite_genuine(S.w_coherent(a)).ab.margin for a in alphas])
        bc = np.array([W.tripartite_genuine(S.w_coherent(a)).bc.margin for a in alphas])
    assert abs(res.ab.margin - 1 / 9) <= 1e-12
    assert abs(res.bc.margin - 1 / 9) <= 1e-12
    assert res.genuine
    assert np.all(margins > 0) and np.all(bc > 0)
    closed = np.array([abs(formulas.w_coherent_ab_dag(a)) ** 2 for a in alphas])
    assert np.max(np.abs(margins - closed)) <= 1e-10
    peak = alphas[np.argmax(margins)]
    assert abs(peak - 1.0) <= 0.5


# -- 11 ---------------------------------------------------------------------------


def measurement_suite():
    states = list(suite_states().values())
    states += [S.product_coherent(1, 1), S.w_single_photon(), S.w_coherent(0.8)]
    th = S.thermal(0.3)
    states.append(Mixture(th.weights, tuple(tensor(s, S.coherent(0.4j, cutoff=10)) for s in th.states)))
    states.append(to_density(S.cat_pair(0.7, -0.4)))
    states.append(devices.beam_splitter(tensor(S.squeezed_vacuum(0.4), S.coherent(1.0)), (0, 1),
                                        BeamSplitterParams.balanced()))
    return states


@criterion(11, "measurement scheme")
def test_measurement_scheme():
    with Budget(5.0):
        pairs = []
        for st in measurement_suite():
            measured = devices.measure_ab_dagger(st, (0, 1))
            direct = expect(st, Monomial.of(st.n_modes, {0: (0, 1), 1: (1, 0)}))
            pairs.append((measured, direct))
    assert len(pairs) >= 10
    for measured, direct in pairs:
        assert abs(measured - direct) <= 1e-10


# -- 12 ---------------------------------------------------------------------------


def random_separable(rng: np.random.Generator, index: int):
    """Products and mixtures of products of random single-mode states."""
    kind = index % 4

    def single():
        pick = rng.integers(4)
        if pick == 0:
            return S.coherent(complex(*rng.normal(scale=1.0, size=2)))
        if pick == 1:
            return PureState(O.random_pure(rng, int(rng.integers(1, 6))))
        if pick == 2:
            return S.squeezed_vacuum(float(rng.uniform(0.05, 0.8)), float(rng.uniform(0, 2 * math.pi)))
        return S.number(int(rng.integers(0, 4)))

    if kind == 0:
        return tensor(single(), single())
    if kind == 1:
        return tensor(single(), single(), single())
    n = int(rng.integers(2, 5))
    w = rng.dirichlet(np.ones(n))
    comps = tuple(tensor(single(), single()) for _ in range(n))
    mix = Mixture(tuple(w), comps)
    return to_density(mix) if kind == 3 else mix


@criterion(12, "separability soundness")
def test_separable_states_never_detected():
    rng = np.random.default_rng(20240611)
    with Budget(60.0):
        worst = -math.inf
        count = 0
        for i in range(200):
            st = random_separable(rng, i)
            count += 1
            pairs = [(0, 1)] if st.n_modes == 2 else [(0, 1), (1, 2), (0, 2)]
            for modes in pairs:
                for rep in W.all_pair_witnesses(st, modes, orders=((1, 1), (2, 2), (1, 2), (2, 1))):
                    assert not (rep.detected and rep.margin > 1e-10), (i, rep)
                    worst = max(worst, rep.margin)
            if st.n_modes == 3:
                assert not W.tripartite_genuine(st).genuine
    assert count == 200
    assert worst <= 1e-10
