"""Entanglement witnesses evaluated on truncated Fock states.

Every witness returns a :class:`WitnessReport` whose ``margin`` is positive
exactly when the state is certified entangled.  All of them are one-sided:
a non-positive margin makes no claim.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Literal

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import WrongModeCount, ZeroXi
from .fock import Monomial, State, central_expect, moment, quadrature_stats
from .formulas import FormulaResult, duan_parametric, eta_from_table
from .params import SqueezerParams

MARGIN_TOL = 1e-10
LOG_XI_RANGE = (-10.0, 10.0)

Verdict = Literal["detected", "not_detected", "inconclusive"]


def verdict_for(margin: float, tolerance: float = MARGIN_TOL) -> Verdict:
    if abs(margin) <= tolerance:
        return "inconclusive"
    return "detected" if margin > 0 else "not_detected"


@dataclass(frozen=True)
class WitnessReport:
    condition: str
    lhs: float
    rhs: float
    margin: float
    verdict: Verdict
    m: int | None = None
    n: int | None = None
    xi: float | None = None
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def detected(self) -> bool:
        return self.verdict == "detected"

    def record(self) -> dict:
        """Flat record for CSV/JSON output."""
        out = asdict(self)
        out.pop("meta")
        return out


def _report(condition, lhs, rhs, margin, tolerance=MARGIN_TOL, **kw) -> WitnessReport:
    return WitnessReport(condition, float(lhs), float(rhs), float(margin), verdict_for(margin, tolerance), **kw)


def _pair_check(state: State, modes: tuple[int, int]) -> tuple[int, int]:
    ia, ib = modes
    if state.n_modes < 2:
        raise WrongModeCount("witness needs at least two modes")
    return ia, ib


def hz_product(state: State, m: int = 1, n: int = 1, modes: tuple[int, int] = (0, 1),
               tolerance: float = MARGIN_TOL) -> WitnessReport:
    """|<a^m (b^dag)^n>|^2 > <(a^dag)^m a^m (b^dag)^n b^n>."""
    ia, ib = _pair_check(state, modes)
    lhs = abs(moment(state, {ia: (0, m), ib: (n, 0)})) ** 2
    rhs = moment(state, {ia: (m, m), ib: (n, n)}).real
    return _report("hz_product", lhs, rhs, lhs - rhs, tolerance, m=m, n=n)


def hz_sum(state: State, m: int = 1, n: int = 1, modes: tuple[int, int] = (0, 1),
           tolerance: float = MARGIN_TOL) -> WitnessReport:
    """|<a^m b^n>|^2 > <(a^dag)^m a^m> <(b^dag)^n b^n>."""
    ia, ib = _pair_check(state, modes)
    lhs = abs(moment(state, {ia: (0, m), ib: (0, n)})) ** 2
    rhs = moment(state, {ia: (m, m)}).real * moment(state, {ib: (n, n)}).real
    return _report("hz_sum", lhs, rhs, lhs - rhs, tolerance, m=m, n=n)


def hz_central(state: State, modes: tuple[int, int] = (0, 1), tolerance: float = MARGIN_TOL) -> WitnessReport:
    """The m = n = 1 product condition with a -> a - <a> and b -> b - <b>."""
    ia, ib = _pair_check(state, modes)
    k = state.n_modes
    lhs = abs(central_expect(state, Monomial.of(k, {ia: (0, 1), ib: (1, 0)}))) ** 2
    rhs = central_expect(state, Monomial.of(k, {ia: (1, 1), ib: (1, 1)})).real
    return _report("hz_central", lhs, rhs, lhs - rhs, tolerance, m=1, n=1)


def _duan_terms(state: State, modes) -> tuple[float, float, float, object]:
    st = quadrature_stats(state, modes)
    P = st.var_xa + st.var_pa - 1
    Q = st.var_xb + st.var_pb - 1
    K = st.cov_x - st.cov_p
    return P, Q, K, st


def duan_simon(state: State, xi: float | str = "auto", modes: tuple[int, int] = (0, 1),
               tolerance: float = MARGIN_TOL) -> WitnessReport:
    """(Delta u)^2 + (Delta v)^2 < xi^2 + 1/xi^2 with u = |xi| x_a + x_b/xi, v = |xi| p_a - p_b/xi.

    With ``xi="auto"`` the gap is minimized over log|xi| in [-10, 10] for each
    sign of xi (bounded Brent search, then three Newton steps); the margin is
    ``rhs - lhs`` at the best xi.
    """
    _pair_check(state, modes)
    P, Q, K, st = _duan_terms(state, modes)
    meta: dict = {"closed_form_margin": -(2 * math.sqrt(max(P * Q, 0.0)) - 2 * abs(K))}
    if xi != "auto":
        xi = float(xi)
        if xi == 0:
            raise ZeroXi("xi must be nonzero")
        var_u, var_v = st.uv_variances(xi)
        lhs, rhs = var_u + var_v, xi**2 + 1 / xi**2
        return _report("duan_simon", lhs, rhs, rhs - lhs, tolerance, xi=xi, meta=meta)

    lo, hi = LOG_XI_RANGE

    def gap(u: float, sign: float) -> float:
        return P * math.exp(2 * u) + Q * math.exp(-2 * u) + 2 * sign * K

    scale = max(abs(P), abs(Q), abs(K))
    if scale <= tolerance * 1e-3:
        # flat gap (vacuum-like noise on both modes): every xi is optimal, keep xi = 1
        var_u, var_v = st.uv_variances(1.0)
        meta["optimized"] = True
        return _report("duan_simon", var_u + var_v, 2.0, -(P + Q + 2 * abs(K)), tolerance, xi=1.0, meta=meta)

    best = None
    for sign in (1.0, -1.0):
        res = minimize_scalar(gap, bounds=(lo, hi), args=(sign,), method="bounded",
                              options={"xatol": 1e-10})
        u = float(res.x)
        for _ in range(3):
            d1 = 2 * P * math.exp(2 * u) - 2 * Q * math.exp(-2 * u)
            d2 = 4 * P * math.exp(2 * u) + 4 * Q * math.exp(-2 * u)
            if d2 <= 0:
                break
            u = min(max(u - d1 / d2, lo), hi)
        value = gap(u, sign)
        if best is None or value < best[0]:
            best = (value, sign * math.exp(u))
    value, xi_opt = best
    var_u, var_v = st.uv_variances(xi_opt)
    lhs, rhs = var_u + var_v, xi_opt**2 + 1 / xi_opt**2
    meta["optimized"] = True
    # -gap equals rhs - lhs but avoids cancellation between two large numbers at extreme xi
    return _report("duan_simon", lhs, rhs, -value, tolerance, xi=xi_opt, meta=meta)


@dataclass(frozen=True)
class TripartiteResult:
    ab: WitnessReport
    bc: WitnessReport
    genuine: bool

    def __iter__(self):
        return iter((self.ab, self.bc, self.genuine))


def tripartite_genuine(state: State, tolerance: float = MARGIN_TOL) -> TripartiteResult:
    """Both pairwise m = n = 1 product conditions on (a, b) and (b, c).

    ``genuine`` is true only when both detect; false carries no claim.
    """
    if state.n_modes != 3:
        raise WrongModeCount(f"tripartite test needs three modes, got {state.n_modes}")
    ab = hz_product(state, 1, 1, (0, 1), tolerance)
    bc = hz_product(state, 1, 1, (1, 2), tolerance)
    ab = WitnessReport("tripartite_ab", ab.lhs, ab.rhs, ab.margin, ab.verdict, 1, 1)
    bc = WitnessReport("tripartite_bc", bc.lhs, bc.rhs, bc.margin, bc.verdict, 1, 1)
    return TripartiteResult(ab, bc, ab.detected and bc.detected)


def tripartite_relabelled(state: State, order: tuple[int, int, int],
                          tolerance: float = MARGIN_TOL) -> TripartiteResult:
    """Run :func:`tripartite_genuine` with modes taken in ``order`` as (a, b, c)."""
    from .fock import DensityOperator, Mixture, PureState

    if state.n_modes != 3:
        raise WrongModeCount(f"tripartite test needs three modes, got {state.n_modes}")
    order = tuple(int(i) for i in order)
    if sorted(order) != [0, 1, 2]:
        raise WrongModeCount(f"order must be a permutation of (0, 1, 2), got {order}")

    def permute(s):
        if isinstance(s, PureState):
            return PureState(np.transpose(s.amplitudes, order))
        if isinstance(s, Mixture):
            return Mixture(s.weights, tuple(permute(x) for x in s.states))
        tens = np.transpose(s.tensor, order + tuple(3 + i for i in order))
        size = s.truncation.size
        return DensityOperator(tens.reshape(size, size), tuple(s.cutoffs[i] for i in order))

    return tripartite_genuine(permute(state), tolerance)


@dataclass(frozen=True)
class Predicate:
    holds: bool
    lhs: float
    rhs: float


def input_predicates(state: State, mode: int = 0, tolerance: float = MARGIN_TOL) -> dict[str, Predicate]:
    """Single-mode input conditions that control detection after a device.

    sub_poissonian   <N> > (Delta N)^2
    squeezing        |<a^2> - <a>^2| > <N> - |<a>|^2
    fourth_moment    <N(N-1)>^2 > <N(N-1)(N-2)(N-3)>
    pair_moment      |<a^2>| > <N>
    """
    mean = moment(state, {mode: (0, 1)})
    n1 = moment(state, {mode: (1, 1)}).real
    f2 = moment(state, {mode: (2, 2)}).real
    f4 = moment(state, {mode: (4, 4)}).real
    a2 = moment(state, {mode: (0, 2)})
    var_n = f2 + n1 - n1**2

    def pred(lhs, rhs):
        return Predicate(bool(lhs - rhs > tolerance), float(lhs), float(rhs))

    return {
        "sub_poissonian": pred(n1, var_n),
        "squeezing": pred(abs(a2 - mean**2), n1 - abs(mean) ** 2),
        "fourth_moment": pred(f2**2, f4),
        "pair_moment": pred(abs(a2), n1),
    }


def duan_parametric_condition(eta_or_state, params: SqueezerParams) -> FormulaResult:
    """Squeezer-output quadrature condition expressed through the a-input noise eta.

    Accepts eta directly or a single-mode input state, from which
    eta = 2(<N_a> - |<a>|^2) + 1 is computed.
    """
    if isinstance(eta_or_state, (int, float)):
        eta = float(eta_or_state)
    else:
        state = eta_or_state
        table = {(0, 1): moment(state, {0: (0, 1)}), (1, 1): moment(state, {0: (1, 1)}),
                 (0, 2): moment(state, {0: (0, 2)})}
        eta = eta_from_table(table)
    return duan_parametric(eta, params)


def all_pair_witnesses(state: State, modes: tuple[int, int] = (0, 1), orders=((1, 1), (2, 2))) -> list[WitnessReport]:
    """Every two-mode witness at the given (m, n) orders; used by scans and soundness checks."""
    out = []
    for m, n in orders:
        out.append(hz_product(state, m, n, modes))
        out.append(hz_sum(state, m, n, modes))
    out.append(hz_central(state, modes))
    out.append(duan_simon(state, "auto", modes))
    return out
