"""Closed-form witness and moment expressions.

These are scalar oracles for the Fock-space pipeline.  Inputs that describe
an a-mode state are passed as a moment table ``{(j, k): <(a^dag)^j a^k>}``
(see :func:`fockwitness.fock.moment_table`).  Each expression is kept in its
reference form even where it disagrees with direct numerics; the
disagreement is tested, and an exact companion is provided next to it.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Mapping

from .errors import BranchViolation, DomainViolation, InvalidEta, InvalidOrder
from .params import AmplifierParams, MomentSet, SqueezerParams, added_noise, growth

Table = Mapping[tuple[int, int], complex]

# strict inequalities below are decided with this absolute slack so that
# boundary inputs (coherent states, phase-matched squeezers) do not flip on rounding
COND_TOL = 1e-10


@dataclass(frozen=True)
class FormulaResult:
    formula: str
    inputs: dict
    values: dict
    flags: dict = field(default_factory=dict)

    @property
    def value(self):
        return next(iter(self.values.values()))


def _factorial(k: int) -> float:
    if k <= 20:
        return float(math.factorial(k))
    return math.exp(math.lgamma(k + 1))


def coherent_overlap_sq(alpha: complex, beta: complex) -> float:
    """|<alpha|beta>|^2 = exp(-|alpha - beta|^2)."""
    return math.exp(-abs(complex(alpha) - complex(beta)) ** 2)


# -- non-Gaussian two-mode states -------------------------------------------------


def photon_added_witness(alpha: complex, beta: complex) -> float:
    """<N_a N_b> - |<a b^dag>|^2 for the photon-added coherent pair, reference form.

    The bracket is divided by a single power of |alpha + beta|^2 + 2.
    """
    a, b = complex(alpha), complex(beta)
    cross = (a.conjugate() * b + a * b.conjugate()).real
    bracket = (
        -4 * abs(a) ** 2 * abs(b) ** 2
        - cross * (abs(a) ** 2 + abs(b) ** 2)
        - 2 * cross
        - 1
    )
    return bracket / (abs(a + b) ** 2 + 2)


def photon_added_witness_exact(alpha: complex, beta: complex) -> float:
    """The same bracket over the squared norm (|alpha + beta|^2 + 2)^2.

    Both moments carry the normalization of the state, so the bracket picks
    up the norm twice; :func:`photon_added_witness` divides only once.
    """
    norm_sq = photon_added_norm_sq(alpha, beta)
    return photon_added_witness(alpha, beta) / norm_sq


def photon_added_norm_sq(alpha: complex, beta: complex) -> float:
    """|(a^dag + b^dag)|alpha>|beta>|^2 = |alpha + beta|^2 + 2."""
    return abs(complex(alpha) + complex(beta)) ** 2 + 2


def cat_witness_general(alpha: complex, beta: complex) -> float:
    """General-phase cat-pair witness <N_a N_b> - |<a b^dag>|^2.

    The x-linear group enters with a plus sign.
    """
    a, b = complex(alpha), complex(beta)
    x = coherent_overlap_sq(a, b)
    first = -((a.conjugate() * b - a * b.conjugate()) ** 2)
    second = 2 * x * (
        4 * abs(a * b) ** 2 - (a * b.conjugate() + a.conjugate() * b) * (abs(a) ** 2 + abs(b) ** 2)
    )
    third = -(x**2) * (abs(a) ** 2 - abs(b) ** 2) ** 2
    return ((first + second + third) / (4 * (1 + x) ** 2)).real


def cat_witness_real_positive(alpha: complex, beta: complex) -> float:
    """Cat-pair witness in the reduced form for real, non-negative alpha beta*.

    On that domain the general form has x-linear term -4x|alpha beta|(|alpha| - |beta|)^2;
    this form keeps the reference coefficient -2x.
    """
    a, b = complex(alpha), complex(beta)
    prod = a * b.conjugate()
    if abs(prod.imag) > 1e-12 * max(1.0, abs(prod)) or prod.real < 0:
        raise DomainViolation("this form requires alpha * conj(beta) real and non-negative")
    x = coherent_overlap_sq(a, b)
    num = -2 * x * abs(a * b) * (abs(a) - abs(b)) ** 2 - x**2 * (abs(a) ** 2 - abs(b) ** 2) ** 2
    return num / (4 * (1 + x) ** 2)


def cat_witness(alpha: complex, beta: complex) -> FormulaResult:
    """Both cat-pair forms and their discrepancy on the common domain."""
    general = cat_witness_general(alpha, beta)
    try:
        special = cat_witness_real_positive(alpha, beta)
    except DomainViolation:
        special = None
    values = {"general": general, "real_positive": special}
    if special is not None:
        values["discrepancy"] = general - special
    return FormulaResult(
        "cat_witness",
        {"alpha": complex(alpha), "beta": complex(beta)},
        values,
        {"real_positive_domain": special is not None},
    )


def number_pair_values(k1: int, k2: int) -> FormulaResult:
    """|<a^d (b^dag)^d>|^2 and <(a^dag)^d a^d (b^dag)^d b^d> with d = k1 - k2."""
    if k2 < 0 or k1 <= k2:
        raise InvalidOrder(f"need k1 > k2 >= 0, got ({k1}, {k2})")
    lhs = _factorial(k1) ** 2 / (4 * _factorial(k2) ** 2)
    overlap_branch = 2 * k2 >= k1
    rhs = _factorial(k1) / _factorial(2 * k2 - k1) if overlap_branch else 0.0
    boundary = (
        _factorial(k1) * _factorial(2 * k2 - k1) > 4 * _factorial(k2) ** 2
        if overlap_branch
        else None
    )
    detected = True if not overlap_branch else bool(boundary)
    return FormulaResult(
        "number_pair",
        {"k1": k1, "k2": k2, "m": k1 - k2, "n": k1 - k2},
        {"lhs": lhs, "rhs": rhs, "boundary": boundary, "detected": detected},
        {"overlap_branch": overlap_branch},
    )


def w_coherent_ab_dag(alpha: complex) -> float:
    """<a b^dag> for the coherent W family, eta^2 |alpha|^2 e^{-|alpha|^2}."""
    mu = abs(alpha) ** 2
    eta_sq = 1 / (3 * (1 + 2 * math.exp(-mu)))
    return eta_sq * mu * math.exp(-mu)


# -- beam splitter ----------------------------------------------------------------


def _mean(table: Table) -> complex:
    return complex(table[(0, 1)])


def _centered(table: Table) -> tuple[float, complex]:
    """(<N> - |<a>|^2, <a^2> - <a>^2)."""
    mean = _mean(table)
    return table[(1, 1)].real - abs(mean) ** 2, complex(table[(0, 2)]) - mean**2


def bs_output_moments_vacuum(table: Table, t: complex, r: complex) -> MomentSet:
    """Output moments for an arbitrary a-mode and vacuum b-mode input."""
    n = table[(1, 1)].real
    n_sq = table[(2, 2)].real + n
    return MomentSet(
        ab_dag=-r * t * n,
        na_nb=abs(t * r) ** 2 * (n_sq - n),
        na=abs(t) ** 2 * n,
        nb=abs(r) ** 2 * n,
    )


def bs_m2_moments(table: Table, t: complex, r: complex) -> FormulaResult:
    """The m = n = 2 product condition on the beam-splitter output (vacuum b input).

    lhs = |(rt)^2 (<N^2> - <N>)|^2,
    rhs = |tr|^4 (<N^2 (N-1)^2> - 4 <N (N-1)^2> + 2 <N (N-1)>),
    and the reduced input condition <N(N-1)>^2 > <N(N-1)(N-2)(N-3)>.
    """
    f2, f3, f4 = (table[(k, k)].real for k in (2, 3, 4))
    n_nm1 = f2
    n_nm1_sq = f3 + f2  # N (N-1)^2
    nsq_nm1_sq = f4 + 4 * f3 + 2 * f2  # N^2 (N-1)^2
    lhs = abs((r * t) ** 2 * n_nm1) ** 2
    rhs = abs(t * r) ** 4 * (nsq_nm1_sq - 4 * n_nm1_sq + 2 * n_nm1)
    return FormulaResult(
        "bs_m2",
        {"t": complex(t), "r": complex(r)},
        {
            "lhs": lhs,
            "rhs": rhs,
            "a2_b2dag": (r * t) ** 2 * n_nm1,
            "reduced_lhs": n_nm1**2,
            "reduced_rhs": f4,
        },
        {"reduced_condition": n_nm1**2 - f4 > COND_TOL},
    )


def bs_coherent_leading(beta: complex, t: complex, r: complex, table: Table) -> float:
    """Order-|beta|^2 term of |<a b^dag>|^2 - <N_a N_b> for a coherent b input."""
    beta, t, r = complex(beta), complex(t), complex(r)
    mean = _mean(table)
    n = table[(1, 1)].real
    a2 = complex(table[(0, 2)])
    value = (
        abs(beta) ** 2 * (abs(r) ** 4 + abs(t) ** 4) * (abs(mean) ** 2 - n)
        - (t * r.conjugate()) ** 2 * beta.conjugate() ** 2 * (mean**2 - a2)
        - (t.conjugate() * r) ** 2 * beta**2 * (mean.conjugate() ** 2 - a2.conjugate())
    )
    return value.real


def bs_coherent_leading_balanced(beta: complex, t: complex, r: complex, table: Table) -> float:
    """The same term in the |t| = |r| = 1/sqrt2 form, phi = 2(theta_t - theta_r - theta_beta)."""
    t, r, beta = complex(t), complex(r), complex(beta)
    if abs(abs(t) - 1 / math.sqrt(2)) > 1e-12 or abs(abs(r) - 1 / math.sqrt(2)) > 1e-12:
        raise BranchViolation("balanced form requires |t| = |r| = 1/sqrt(2)")
    phi = 2 * (cmath.phase(t) - cmath.phase(r) - cmath.phase(beta))
    mean = _mean(table)
    n = table[(1, 1)].real
    a2 = complex(table[(0, 2)])
    bracket = (
        2 * (abs(mean) ** 2 - n)
        - cmath.exp(1j * phi) * (mean**2 - a2)
        - cmath.exp(-1j * phi) * (mean.conjugate() ** 2 - a2.conjugate())
    )
    return (abs(beta) ** 2 / 4 * bracket).real


def optimal_beta_phase(t: complex, r: complex, table: Table) -> float:
    """theta_beta that maximizes the leading coherent-input term."""
    _, m_c = _centered(table)
    return cmath.phase(t) - cmath.phase(r) + cmath.phase(m_c) / 2


def duan_bs_output_sum(table: Table, t: complex, r: complex, xi: float) -> float:
    """(Delta u)^2 + (Delta v)^2 on the beam-splitter output for vacuum b input."""
    if xi == 0:
        raise ValueError("xi must be nonzero")
    t, r = complex(t), complex(r)
    mean = _mean(table)
    a2 = complex(table[(0, 2)])
    n = table[(1, 1)].real
    cross = t * r.conjugate() * (a2 - mean**2) + t.conjugate() * r * (
        a2.conjugate() - mean.conjugate() ** 2
    )
    value = (
        -2 * abs(xi) / xi * cross
        + (abs(t * xi) ** 2 + abs(r) ** 2 / xi**2) * (2 * (n - abs(mean) ** 2) + 1)
        + (abs(r * xi) ** 2 + abs(t) ** 2 / xi**2)
    )
    return value.real


def duan_bs_chain(table: Table, t: complex, r: complex, xi: float | None = None) -> FormulaResult:
    """Quadrature criterion for the beam splitter with vacuum b input.

    ``minimized`` is the xi-minimized detection expression (negative means
    detected); the xi-optimized margin of the quadrature witness equals
    ``-2 * minimized``.  ``phase_optimized`` additionally optimizes an input
    phase shift and reduces to the squeezing condition.
    """
    t, r = complex(t), complex(r)
    n_c, m_c = _centered(table)
    cross = (t * r.conjugate() * m_c + t.conjugate() * r * m_c.conjugate()).real
    minimized = -abs(cross) + 2 * abs(r * t) * n_c
    phase_optimized = 2 * abs(r * t) * (n_c - abs(m_c))
    values = {"minimized": minimized, "phase_optimized": phase_optimized}
    if xi is not None:
        values["expression"] = duan_bs_output_sum(table, t, r, xi)
        values["margin_at_xi"] = xi**2 + 1 / xi**2 - values["expression"]
    return FormulaResult(
        "duan_bs_chain",
        {"t": t, "r": r, "xi": xi},
        values,
        {
            "detected": minimized < -COND_TOL,
            "squeezed": abs(m_c) - n_c > COND_TOL,
            "squeezing_lhs": abs(m_c),
            "squeezing_rhs": n_c,
        },
    )


# -- parametric amplifier ---------------------------------------------------------


def paramp_m1_condition(params: SqueezerParams) -> FormulaResult:
    """hz_sum with m = n = 1 on the amplifier output: detected iff c > |s| (and |s| > 0)."""
    c, s = params.c, abs(params.s)
    return FormulaResult("paramp_m1", {"c": c, "s": params.s}, {"lhs": c, "rhs": s}, {"holds": c > s and s > 0})


def paramp_m2_condition(n_a: float, params: SqueezerParams) -> FormulaResult:
    """2(1 - |s|^2/c^2) <N_a> + (1 - |s|^4/c^4), positive for every input."""
    ratio = abs(params.s) ** 2 / params.c**2
    value = 2 * (1 - ratio) * n_a + (1 - ratio**2)
    return FormulaResult("paramp_m2", {"n_a": n_a, "c": params.c, "s": params.s}, {"value": value}, {"holds": value > 0})


def eta_from_table(table: Table) -> float:
    """eta = 2(<N_a> - |<a>|^2) + 1."""
    n_c, _ = _centered(table)
    return 2 * n_c + 1


def duan_parametric(eta: float, params: SqueezerParams) -> FormulaResult:
    """2|s| (eta c^2 + |s|^2 - 1)^{1/2} < c |s + s*| (eta + 1)^{1/2}."""
    if eta < 1 - 1e-12:
        raise InvalidEta(f"eta must be >= 1, got {eta}")
    eta = max(eta, 1.0)
    c, s = params.c, params.s
    lhs = 2 * abs(s) * math.sqrt(eta * c**2 + abs(s) ** 2 - 1)
    rhs = c * abs(s + s.conjugate()) * math.sqrt(eta + 1)
    return FormulaResult("duan_parametric", {"eta": eta, "c": c, "s": s}, {"lhs": lhs, "rhs": rhs}, {"holds": rhs - lhs > COND_TOL})


# -- linear amplifier -------------------------------------------------------------


def amp_loss_scaled(m0: MomentSet, params: AmplifierParams) -> float:
    """Loss-only witness e^{-(C_a + C_b) t} (|<a b^dag>_0|^2 - <N_a N_b>_0)."""
    if params.A_a != 0 or params.A_b != 0:
        raise BranchViolation("loss-only form requires A_a = A_b = 0")
    return math.exp(-(params.C_a + params.C_b) * params.t) * m0.witness


def amp_high_gain(m0: MomentSet, params: AmplifierParams) -> FormulaResult:
    """Leading G_ab^2 term of the witness when both modes have net gain."""
    Aa, Ca, Ab, Cb = params.A_a, params.C_a, params.A_b, params.C_b
    if not (Aa > Ca and Ab > Cb):
        raise BranchViolation("high-gain form requires A_a > C_a and A_b > C_b")
    ka = Aa / (Aa - Ca)
    kb = Ab / (Ab - Cb)
    bracket = m0.witness - ka * m0.nb - kb * m0.na - ka * kb
    g_ab_sq = math.exp((Aa + Ab - Ca - Cb) * params.t)
    return FormulaResult(
        "amp_high_gain",
        {"t": params.t},
        {"value": g_ab_sq * bracket, "bracket": bracket, "G_ab_sq": g_ab_sq},
        {"non_positive": bracket <= 0},
    )


def amp_witness_forms(m0: MomentSet, params: AmplifierParams) -> tuple[float | None, FormulaResult | None]:
    """(loss-only scaled witness, high-gain expression); ``None`` where a branch does not apply."""
    try:
        loss = amp_loss_scaled(m0, params)
    except BranchViolation:
        loss = None
    try:
        high = amp_high_gain(m0, params)
    except BranchViolation:
        high = None
    if loss is None and high is None:
        raise BranchViolation("neither the loss-only nor the high-gain branch applies")
    return loss, high


def amp_exact_witness(m0: MomentSet, params: AmplifierParams) -> float:
    """Witness from the full closed-form moment solution (all orders in t)."""
    ga = growth(params.A_a, params.C_a, params.t)
    gb = growth(params.A_b, params.C_b, params.t)
    ha = added_noise(params.A_a, params.C_a, params.t)
    hb = added_noise(params.A_b, params.C_b, params.t)
    ab = abs(m0.ab_dag) ** 2 * ga * gb
    nn = ga * gb * m0.na_nb + ha * gb * m0.nb + ga * hb * m0.na + ha * hb
    return ab - nn
