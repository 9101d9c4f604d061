"""Optical devices acting on truncated Fock states, plus their moment maps.

Unitaries follow the Heisenberg conventions

    beam splitter   a -> t a + r b,        b -> -r* a + t* b
    squeezer        a -> c a + s b^dag,    b -> c b + s a^dag
    phase shifter   b -> e^{-i phi} b

and are applied in the Schrodinger picture, ``|psi> -> U |psi>``.  The beam
splitter conserves total photon number, so each fixed-N block is built
exactly.  The squeezer conserves n_a - n_b and displacement is tridiagonal in
the number basis; both are exponentiated exactly through a symmetric
tridiagonal eigendecomposition.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Mapping

import numpy as np
from scipy.special import gammaln
from scipy.linalg import eigh_tridiagonal

from . import ordering
from .errors import (
    InvalidMode,
    LeakageExceeded,
    NegativeRate,
    ShapeMismatch,
    TraceDrift,
    TruncationOverflow,
    UnknownInputClass,
)
from .fock import (
    OVERFLOW_TOL,
    DensityOperator,
    Mixture,
    PureState,
    State,
    Truncation,
    expect,
    moment,
    moment_table,
    to_density,
    to_mixture,
)
from .params import (
    AmplifierParams,
    BeamSplitterParams,
    MomentSet,
    SqueezerParams,
    added_noise,
    growth,
)

Table = Mapping[tuple[int, int], complex]

SQUEEZER_LEAK_TARGET = 1e-13
SQUEEZER_LEAK_BOUND = 1e-8
DISPLACEMENT_LEAK_TARGET = 1e-14
TRACE_DRIFT_BOUND = 1e-6
TOP_POPULATION_BOUND = 1e-8


def _check_pair(modes, n_modes: int) -> tuple[int, int]:
    ia, ib = (int(m) for m in modes)
    for m in (ia, ib):
        if not 0 <= m < n_modes:
            raise InvalidMode(f"mode {m} out of range for {n_modes} modes")
    if ia == ib:
        raise InvalidMode("device needs two distinct modes")
    return ia, ib


def _map_pure(state: PureState, axes: tuple[int, ...], fn) -> tuple[np.ndarray, float]:
    """Move ``axes`` last, apply ``fn(arr) -> (arr, leak)``, move them back."""
    n = state.n_modes
    rest = [i for i in range(n) if i not in axes]
    order = rest + list(axes)
    arr = np.transpose(state.amplitudes, order)
    out, leak = fn(arr)
    return np.transpose(out, np.argsort(order)), leak


def _map_density(rho: DensityOperator, axes: tuple[int, ...], fn) -> tuple[np.ndarray, Truncation, float]:
    """U rho U^dag for a map ``fn`` acting on the trailing mode axes of an array."""
    n = rho.n_modes
    order = [i for i in range(n) if i not in axes] + list(axes)
    # ket side, with the bra axes as batch
    arr = np.transpose(rho.tensor, [n + i for i in range(n)] + order)
    arr, leak_ket = fn(arr)
    # bra side: ket axes (already in ``order``) become the batch
    arr = np.conj(np.transpose(arr, list(range(n, 2 * n)) + order))
    arr, leak_bra = fn(arr)
    inv = [int(i) for i in np.argsort(order)]
    arr = np.transpose(np.conj(arr), inv + [n + i for i in inv])
    trunc = Truncation(tuple(d - 1 for d in arr.shape[:n]))
    return arr.reshape(trunc.size, trunc.size), trunc, max(leak_ket, leak_bra)


# -- phase shifter ------------------------------------------------------------------


def phase_shift(state: State, mode: int, phi: float) -> State:
    """Multiply the amplitude with ``n`` photons in ``mode`` by ``exp(-i n phi)``."""
    if not 0 <= mode < state.n_modes:
        raise InvalidMode(f"mode {mode} out of range for {state.n_modes} modes")
    if isinstance(state, Mixture):
        return Mixture(state.weights, tuple(phase_shift(s, mode, phi) for s in state.states))

    def phases(dim: int, ndim: int, axis: int) -> np.ndarray:
        shape = [1] * ndim
        shape[axis] = dim
        return np.exp(-1j * phi * np.arange(dim)).reshape(shape)

    if isinstance(state, PureState):
        amps = state.amplitudes
        return PureState(amps * phases(amps.shape[mode], amps.ndim, mode))
    n = state.n_modes
    tens = state.tensor
    out = tens * phases(tens.shape[mode], 2 * n, mode)
    out = out * np.conj(phases(tens.shape[n + mode], 2 * n, n + mode))
    return DensityOperator(out.reshape(state.matrix.shape), state.truncation)


# -- beam splitter ------------------------------------------------------------------


@lru_cache(maxsize=16)
def _bs_blocks(t: complex, r: complex, n_max: int) -> tuple[np.ndarray, ...]:
    """Blocks B_N[j, n] = <j, N-j| U |n, N-n> for N = 0..n_max.

    Built from U a^dag U^dag = t a^dag - r* b^dag and U b^dag U^dag = r a^dag + t* b^dag.
    """
    blocks = [np.ones((1, 1), dtype=complex)]
    for N in range(1, n_max + 1):
        prev = blocks[-1]
        lift_a = np.zeros((N + 1, N), dtype=complex)
        lift_b = np.zeros((N + 1, N), dtype=complex)
        lift_a[1:] = np.sqrt(np.arange(1, N + 1))[:, None] * prev
        lift_b[:N] = np.sqrt(np.arange(N, 0, -1))[:, None] * prev
        new = np.empty((N + 1, N + 1), dtype=complex)
        new[:, 1:] = (t * lift_a - np.conj(r) * lift_b) / np.sqrt(np.arange(1, N + 1))
        new[:, 0] = (r * lift_a[:, 0] + np.conj(t) * lift_b[:, 0]) / math.sqrt(N)
        blocks.append(new)
    return tuple(blocks)


def _support_total(arr: np.ndarray) -> int:
    """Largest n_a + n_b carrying nonzero weight on the trailing two axes."""
    mask = np.any(arr != 0, axis=tuple(range(arr.ndim - 2))) if arr.ndim > 2 else arr != 0
    na, nb = np.nonzero(mask)
    return int(np.max(na + nb)) if na.size else 0


def _bs_apply(arr: np.ndarray, t: complex, r: complex, out_cut: tuple[int, int] | None):
    da, db = arr.shape[-2:]
    n_max = _support_total(arr)
    oa, ob = out_cut if out_cut is not None else (n_max, n_max)
    blocks = _bs_blocks(complex(t), complex(r), n_max)
    out = np.zeros(arr.shape[:-2] + (oa + 1, ob + 1), dtype=complex)
    leak = 0.0
    for N in range(n_max + 1):
        n_in = np.arange(max(0, N - db + 1), min(N, da - 1) + 1)
        if n_in.size == 0:
            continue
        vec = arr[..., n_in, N - n_in]
        res = vec @ blocks[N][:, n_in].T
        j = np.arange(N + 1)
        keep = (j <= oa) & (N - j <= ob)
        out[..., j[keep], N - j[keep]] = res[..., keep]
        if not keep.all():
            leak += float(np.sum(np.abs(res[..., ~keep]) ** 2))
    return out, leak


def _apply_two_mode(state: State, modes, fn, leak_tol: float, err=TruncationOverflow):
    ia, ib = _check_pair(modes, state.n_modes)
    if isinstance(state, Mixture):
        parts = [_apply_two_mode(s, modes, fn, leak_tol, err) for s in state.states]
        return Mixture(state.weights, tuple(parts))
    if isinstance(state, PureState):
        amps, leak = _map_pure(state, (ia, ib), fn)
        if leak > leak_tol:
            raise err(f"device output lost weight {leak:.3e} to truncation")
        return PureState(amps / np.linalg.norm(amps)) if leak else PureState(amps)
    mat, trunc, leak = _map_density(state, (ia, ib), fn)
    if leak > leak_tol:
        raise err(f"device output lost weight {leak:.3e} to truncation")
    return DensityOperator(mat / np.trace(mat), trunc)


def beam_splitter(
    state: State,
    modes: tuple[int, int],
    params: BeamSplitterParams,
    *,
    cutoffs: tuple[int, int] | None = None,
) -> State:
    """Apply the beam splitter to ``modes``.

    By default both output cutoffs equal the largest total photon number in
    the input support, so the map is exact.  Explicit ``cutoffs`` that would
    discard more than ``OVERFLOW_TOL`` of weight raise :class:`TruncationOverflow`.
    """
    def fn(arr):
        return _bs_apply(arr, params.t, params.r, cutoffs)

    return _apply_two_mode(state, modes, fn, OVERFLOW_TOL)


# -- tridiagonal exponentials ------------------------------------------------------


@lru_cache(maxsize=64)
def _tridiag_eig(kind: str, d: int, size: int) -> tuple[np.ndarray, np.ndarray]:
    k = np.arange(size - 1)
    if kind == "squeeze":
        na = k + max(d, 0)
        nb = k + max(-d, 0)
        off = np.sqrt((na + 1.0) * (nb + 1.0))
    else:
        off = np.sqrt(k + 1.0)
    if size == 1:
        return np.zeros(1), np.ones((1, 1))
    return eigh_tridiagonal(np.zeros(size), off)


def _tridiag_exp_columns(kind: str, d: int, size: int, zeta: complex, n_cols: int) -> np.ndarray:
    """First ``n_cols`` columns of exp(zeta X - zeta* X^T), X the lower-bidiagonal raising map.

    exp(G) = W V exp(-i|zeta| L) V^T W^*, with W = diag(exp(i k (arg zeta + pi/2))).
    """
    lam, vecs = _tridiag_eig(kind, d, size)
    mag, theta = abs(zeta), np.angle(zeta)
    w = np.exp(1j * np.arange(size) * (theta + math.pi / 2))
    cols = (vecs * np.exp(-1j * mag * lam)) @ vecs[:n_cols].T
    return w[:, None] * cols * np.conj(w[:n_cols])[None, :]


# -- displacement -------------------------------------------------------------------


def _displace_apply(arr: np.ndarray, alpha: complex, out_cut: int, pad: int):
    dim = arr.shape[-1]
    size = out_cut + 1 + pad
    cols = _tridiag_exp_columns("displace", 0, size, alpha, dim)
    res = arr @ cols.T
    leak = float(np.sum(np.abs(res[..., out_cut + 1 :]) ** 2))
    return res[..., : out_cut + 1], leak


def displacement(
    state: State,
    mode: int,
    alpha: complex,
    *,
    cutoff: int | None = None,
    leak_target: float = DISPLACEMENT_LEAK_TARGET,
    leak_bound: float = SQUEEZER_LEAK_BOUND,
) -> State:
    """Apply D(alpha) = exp(alpha a^dag - alpha* a) to one mode.

    The output cutoff grows until the weight pushed past it is below
    ``leak_target``; a fixed ``cutoff`` that leaks more than ``leak_bound``
    raises :class:`TruncationOverflow`.
    """
    alpha = complex(alpha)
    if not 0 <= mode < state.n_modes:
        raise InvalidMode(f"mode {mode} out of range for {state.n_modes} modes")
    if alpha == 0:
        return state
    if isinstance(state, Mixture):
        parts = [displacement(s, mode, alpha, cutoff=cutoff, leak_target=leak_target) for s in state.states]
        return Mixture(state.weights, tuple(parts))
    if isinstance(state, DensityOperator):
        return displacement(to_mixture(state), mode, alpha, cutoff=cutoff, leak_target=leak_target)

    c_in = state.cutoffs[mode]
    mag = abs(alpha)
    extra = int(math.ceil(mag**2 + 12 * mag * math.sqrt(c_in + 1) + 20))
    while True:
        out_cut = cutoff if cutoff is not None else c_in + extra
        pad = max(20, out_cut // 2)
        amps, leak = _map_pure(state, (mode,), lambda a: _displace_apply(a, alpha, out_cut, pad))
        if cutoff is not None or leak <= leak_target or extra > 4096:
            break
        extra *= 2
    if leak > leak_bound:
        raise TruncationOverflow(f"displacement leaked {leak:.3e} past cutoff {out_cut}")
    return PureState(amps / np.linalg.norm(amps))


# -- two-mode squeezer ---------------------------------------------------------------


def _squeeze_apply(arr: np.ndarray, zeta: complex, extra: int):
    da, db = arr.shape[-2:]
    oa, ob = da - 1 + extra, db - 1 + extra
    out = np.zeros(arr.shape[:-2] + (oa + 1, ob + 1), dtype=complex)
    leak = 0.0
    for d in range(-(db - 1), da):
        da0, db0 = max(d, 0), max(-d, 0)
        k_in = min(da - 1 - da0, db - 1 - db0) + 1
        vec = arr[..., da0 + np.arange(k_in), db0 + np.arange(k_in)]
        if not np.any(vec):
            continue
        k_out = min(oa - da0, ob - db0) + 1
        size = k_out + extra
        cols = _tridiag_exp_columns("squeeze", d, size, zeta, k_in)
        res = vec @ cols.T
        k = np.arange(k_out)
        out[..., da0 + k, db0 + k] = res[..., :k_out]
        leak += float(np.sum(np.abs(res[..., k_out:]) ** 2))
    return out, leak


def squeezer_zeta(params: SqueezerParams) -> complex:
    """Generator amplitude zeta with |zeta| = arcosh c and arg zeta = arg s."""
    s = params.s
    return math.acosh(params.c) * (s / abs(s)) if s != 0 else 0j


def _squeezer_extra(params: SqueezerParams, target: float, pops: np.ndarray | None = None) -> int:
    """Smallest k with sum_N pops[N] C(N + k, k) ratio^k (1 - ratio)^N < target.

    ratio = |s|^2/c^2.  The summand is (up to a constant) the negative-binomial
    tail of photons added to |N, 0>; ``pops[N]`` is the input weight with N
    photons on the squeezed pair (vacuum if omitted).
    """
    ratio = abs(params.s) ** 2 / params.c**2
    base = max(8, math.ceil(4 * abs(params.s) ** 2))
    if ratio <= 0:
        return base
    pops = np.array([1.0]) if pops is None else np.asarray(pops, dtype=float)
    ns = np.nonzero(pops > 0)[0]
    log_p = np.log(pops[ns])
    log_t, log_r, log_q = math.log(target), math.log(ratio), math.log1p(-ratio)
    k = max(1, math.ceil(log_t / log_r))
    while True:
        terms = log_p + gammaln(ns + k + 1) - gammaln(k + 1) - gammaln(ns + 1) + k * log_r + ns * log_q
        if np.logaddexp.reduce(terms) < log_t:
            return max(base, k)
        k += max(1, k // 64)


def two_mode_squeezer(
    state: State,
    modes: tuple[int, int],
    params: SqueezerParams,
    *,
    extra: int | None = None,
    leak_target: float = SQUEEZER_LEAK_TARGET,
    leak_bound: float = SQUEEZER_LEAK_BOUND,
    return_leak: bool = False,
):
    """Apply exp(zeta a^dag b^dag - zeta* a b) to ``modes``.

    Each output cutoff is the input cutoff plus ``extra`` photons.  When
    ``extra`` is not given it starts from the geometric tail of the two-mode
    squeezed vacuum and grows by a quarter until the leaked weight is below
    ``leak_target``.  Leakage above ``leak_bound`` raises
    :class:`LeakageExceeded`.  Mixed inputs return a :class:`Mixture`.
    """
    ia, ib = _check_pair(modes, state.n_modes)
    zeta = squeezer_zeta(params)
    if zeta == 0:
        return (state, 0.0) if return_leak else state
    if isinstance(state, DensityOperator):
        state = to_mixture(state)
    if isinstance(state, Mixture):
        # the leak budget is shared across components in proportion to weight
        n = len(state.states)
        parts = [
            two_mode_squeezer(s, modes, params, extra=extra,
                              leak_target=leak_target / max(w * n, 1e-300),
                              leak_bound=math.inf, return_leak=True)
            for w, s in state
        ]
        out = Mixture(state.weights, tuple(p for p, _ in parts))
        leak = sum(w * lk for w, (_, lk) in zip(state.weights, parts))
        if leak > leak_bound:
            raise LeakageExceeded(f"squeezer leaked {leak:.3e} from a mixed input")
        return (out, leak) if return_leak else out

    fixed = extra is not None
    if fixed:
        ext = extra
    else:
        probs = np.abs(np.moveaxis(state.amplitudes, (ia, ib), (0, 1))) ** 2
        probs = probs.reshape(probs.shape[0], probs.shape[1], -1).sum(axis=2)
        total = np.add.outer(np.arange(probs.shape[0]), np.arange(probs.shape[1]))
        ext = _squeezer_extra(params, leak_target, np.bincount(total.ravel(), probs.ravel()))
    while True:
        amps, leak = _map_pure(state, (ia, ib), lambda a: _squeeze_apply(a, zeta, ext))
        if fixed or leak <= min(leak_target, 0.5) or ext > 8192:
            break
        ext += max(8, ext // 4)
    if leak > leak_bound:
        raise LeakageExceeded(f"squeezer leaked {leak:.3e} with {ext} extra photons per mode")
    out = PureState(amps / np.linalg.norm(amps))
    return (out, leak) if return_leak else out


# -- moment maps --------------------------------------------------------------------


def _as_table(input_moments, order: int) -> Table:
    if isinstance(input_moments, (PureState, DensityOperator, Mixture)):
        if input_moments.n_modes != 1:
            raise ShapeMismatch("moment maps take a single-mode a-input")
        return moment_table(input_moments, order)
    return input_moments


def _out_moments(a_out, b_out, word_moment) -> dict[str, complex]:
    a_dag, b_dag = ordering.dagger(a_out), ordering.dagger(b_out)
    na = ordering.product(a_dag, a_out)
    nb = ordering.product(b_dag, b_out)
    ev = lambda poly: ordering.evaluate(poly, word_moment)  # noqa: E731
    return {
        "ab_dag": ev(ordering.product(a_out, b_dag)),
        "ab": ev(ordering.product(a_out, b_out)),
        "na_nb": ev(ordering.product(na, nb)).real,
        "na": ev(na).real,
        "nb": ev(nb).real,
        "a2_b2dag": ev(ordering.product(a_out, a_out, b_dag, b_dag)),
        "a2_b2": ev(ordering.product(a_out, a_out, b_out, b_out)),
        "na2_nb2": ev(ordering.product(a_dag, a_dag, a_out, a_out, b_dag, b_dag, b_out, b_out)).real,
        "na2": ev(ordering.product(a_dag, a_dag, a_out, a_out)).real,
        "nb2": ev(ordering.product(b_dag, b_dag, b_out, b_out)).real,
    }


def _to_moment_set(values: dict, **extra) -> MomentSet:
    rest = {k: v for k, v in values.items() if k not in ("ab_dag", "na_nb", "na", "nb")}
    rest.update(extra)
    return MomentSet(values["ab_dag"], values["na_nb"], values["na"], values["nb"], rest)


def beam_splitter_moment_map(
    input_moments,
    params: BeamSplitterParams,
    input_class: str = "vacuum",
    beta: complex = 0j,
) -> MomentSet:
    """Closed-form output moments for an a-mode input and a vacuum or coherent b-mode.

    ``input_moments`` is a table ``{(j, k): <(a^dag)^j a^k>}`` up to order 4
    (or a single-mode state).  For ``input_class="coherent"`` the leading
    order-|beta|^2 part of the product witness is stored in ``extra["leading"]``.
    """
    from .formulas import bs_coherent_leading

    if input_class not in ("vacuum", "coherent"):
        raise UnknownInputClass(f"unknown beam-splitter input class {input_class!r}")
    table = _as_table(input_moments, 4)
    b_amp = 0j if input_class == "vacuum" else complex(beta)
    t, r = params.t, params.r
    a_out = ordering.linear(2, {(0, False): t, (1, False): r})
    b_out = ordering.linear(2, {(0, False): -np.conj(r), (1, False): np.conj(t)})
    values = _out_moments(a_out, b_out, ordering.product_state_moments(table, b_amp))
    if input_class == "coherent":
        return _to_moment_set(values, leading=bs_coherent_leading(b_amp, t, r, table))
    return _to_moment_set(values)


def squeezer_moment_map(input_moments, params: SqueezerParams) -> MomentSet:
    """Closed-form output moments of the squeezer with the b-mode in vacuum.

    Extras include ``ab``, the m = n = 2 moments and ``m2_condition``,
    2(1 - |s|^2/c^2)<N_a> + (1 - |s|^4/c^4) evaluated on the input.
    """
    table = _as_table(input_moments, 4)
    c, s = params.c, params.s
    a_out = ordering.linear(2, {(0, False): c, (1, True): s})
    b_out = ordering.linear(2, {(1, False): c, (0, True): s})
    values = _out_moments(a_out, b_out, ordering.product_state_moments(table))
    ratio = abs(s) ** 2 / c**2
    cond = 2 * (1 - ratio) * table[(1, 1)].real + (1 - ratio**2)
    return _to_moment_set(values, m2_condition=cond)


def linear_amp_moments(m0: MomentSet, params: AmplifierParams) -> MomentSet:
    """Moments after the gain/loss channel, from the closed-form solution."""
    ga = growth(params.A_a, params.C_a, params.t)
    gb = growth(params.A_b, params.C_b, params.t)
    ha = added_noise(params.A_a, params.C_a, params.t)
    hb = added_noise(params.A_b, params.C_b, params.t)
    return MomentSet(
        ab_dag=math.sqrt(ga * gb) * m0.ab_dag,
        na_nb=ga * gb * m0.na_nb + ha * gb * m0.nb + ga * hb * m0.na + ha * hb,
        na=ga * m0.na + ha,
        nb=gb * m0.nb + hb,
    )


def classicality_threshold(params: AmplifierParams) -> tuple[float | None, float | None]:
    """Per mode, the first time with e^{(A-C)t} >= A/C; ``None`` if it never happens."""

    def one(A: float, C: float) -> float | None:
        if A <= C or C == 0:
            return None
        return math.log(A / C) / (A - C)

    return one(params.A_a, params.C_a), one(params.A_b, params.C_b)


def is_classical(params: AmplifierParams) -> bool:
    """True once both single-mode gains have crossed the classicality threshold."""
    ta, tb = classicality_threshold(params)
    return ta is not None and tb is not None and params.t >= max(ta, tb)


# -- master-equation integration -----------------------------------------------------


@dataclass
class _ModeRates:
    diag: np.ndarray
    up: np.ndarray
    down: np.ndarray


def _mode_rates(A: float, C: float, k: int, dim: int) -> _ModeRates:
    # sector k = n - m, indexed by l = min(n, m)
    length = dim - abs(k)
    l = np.arange(length, dtype=float)
    n = l + max(k, 0)
    m = l + max(-k, 0)
    down = C * np.sqrt((n + 1) * (m + 1))
    down[-1] = 0.0
    return _ModeRates(
        diag=-(A / 2) * (n + m + 2) - (C / 2) * (n + m),
        up=A * np.sqrt(n * m),
        down=down,
    )


def _sector_rhs(X: np.ndarray, diag: np.ndarray, ra: _ModeRates, rb: _ModeRates) -> np.ndarray:
    d = diag * X
    d[1:, :] += ra.up[1:, None] * X[:-1, :]
    d[:-1, :] += ra.down[:-1, None] * X[1:, :]
    d[:, 1:] += rb.up[None, 1:] * X[:, :-1]
    d[:, :-1] += rb.down[None, :-1] * X[:, 1:]
    return d


def _sector_index(k: int, length: int) -> tuple[np.ndarray, np.ndarray]:
    l = np.arange(length)
    return l + max(k, 0), l + max(-k, 0)


def lindblad_evolve(
    rho: State,
    params: AmplifierParams,
    dt: float | None = None,
    *,
    cutoff: int | None = None,
) -> DensityOperator:
    """Integrate the two-mode gain/loss master equation up to ``params.t``.

    The generator preserves n_a - m_a and n_b - m_b, so the density matrix is
    evolved sector by sector with fixed-step RK4; only one sector of each
    Hermitian-conjugate pair is stored.  Weight driven above ``cutoff`` shows
    up as trace loss, which is bounded by ``TRACE_DRIFT_BOUND``.
    """
    if rho.n_modes != 2:
        raise ShapeMismatch("the amplifier acts on exactly two modes")
    if dt is not None and dt <= 0:
        raise NegativeRate("dt must be positive")
    rho = to_density(rho)
    dim_in = rho.truncation.dims
    D = max(max(dim_in), 16) if cutoff is None else int(cutoff) + 1
    if max(dim_in) > D:
        raise ShapeMismatch(f"input cutoffs {rho.cutoffs} exceed cutoff {D - 1}")
    tens = rho.tensor

    sectors: dict[tuple[int, int], np.ndarray] = {}
    for ka in range(0, dim_in[0]):
        for kb in range(-(dim_in[1] - 1), dim_in[1]):
            if ka == 0 and kb < 0:
                continue
            la_n, la_m = _sector_index(ka, dim_in[0] - abs(ka))
            lb_n, lb_m = _sector_index(kb, dim_in[1] - abs(kb))
            block = tens[la_n[:, None], lb_n[None, :], la_m[:, None], lb_m[None, :]]
            if not np.any(block):
                continue
            X = np.zeros((D - abs(ka), D - abs(kb)), dtype=complex)
            X[: block.shape[0], : block.shape[1]] = block
            sectors[(ka, kb)] = X

    total = params.t
    if total > 0 and params.max_rate > 0:
        step = dt if dt is not None else min(0.01, 0.1 / params.max_rate)
        n_steps = max(1, math.ceil(total / step - 1e-9))
        h = total / n_steps
        for (ka, kb), X in sectors.items():
            ra = _mode_rates(params.A_a, params.C_a, ka, D)
            rb = _mode_rates(params.A_b, params.C_b, kb, D)
            diag = ra.diag[:, None] + rb.diag[None, :]
            f = lambda Y: _sector_rhs(Y, diag, ra, rb)  # noqa: E731
            for _ in range(n_steps):
                k1 = f(X)
                k2 = f(X + (h / 2) * k1)
                k3 = f(X + (h / 2) * k2)
                k4 = f(X + h * k3)
                X = X + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
                if ka == 0 and kb == 0:
                    X = X.real.astype(complex)
            sectors[(ka, kb)] = X

    diag_sector = sectors.get((0, 0))
    trace = float(diag_sector.real.sum()) if diag_sector is not None else 0.0
    if abs(trace - 1) > TRACE_DRIFT_BOUND:
        raise TraceDrift(f"trace drifted to {trace!r}; raise the cutoff above {D - 1}")
    if diag_sector is not None:
        top = float(diag_sector[-1, :].real.sum() + diag_sector[:-1, -1].real.sum())
        if top > TOP_POPULATION_BOUND:
            raise TruncationOverflow(f"population {top:.3e} at cutoff {D - 1}")

    out = np.zeros((D, D, D, D), dtype=complex)
    for (ka, kb), X in sectors.items():
        la_n, la_m = _sector_index(ka, D - abs(ka))
        lb_n, lb_m = _sector_index(kb, D - abs(kb))
        out[la_n[:, None], lb_n[None, :], la_m[:, None], lb_m[None, :]] = X
        if (ka, kb) != (0, 0):
            out[la_m[:, None], lb_m[None, :], la_n[:, None], lb_n[None, :]] = np.conj(X)
    out /= trace
    return DensityOperator(out.reshape(D * D, D * D), Truncation((D - 1, D - 1)))


# -- measurement scheme --------------------------------------------------------------


def measure_ab_dagger(state: State, modes: tuple[int, int] = (0, 1)) -> complex:
    """Reconstruct <a b^dag> from two photon-number-difference readings.

    The b-mode passes a phase shifter (phi = 0, then -pi/2) and the pair
    meets on a 50:50 splitter; each reading is <N_a - N_b> at the output and
    <a b^dag> = (D_0 + i D_{-pi/2}) / 2.
    """
    ia, ib = _check_pair(modes, state.n_modes)
    bs = BeamSplitterParams.balanced()
    readings = []
    for phi in (0.0, -math.pi / 2):
        out = beam_splitter(phase_shift(state, ib, phi), (ia, ib), bs)
        diff = moment(out, {ia: (1, 1)}) - moment(out, {ib: (1, 1)})
        readings.append(diff.real)
    return complex(readings[0], readings[1]) / 2
