"""Dense truncated Fock-space linear algebra.

States are stored as complex tensors indexed by per-mode photon numbers,
``amplitudes[n_0, n_1, ...]``.  Every moment is evaluated by applying
annihilation operators only (to the bra and ket sides separately), so a
normally ordered monomial is exact inside the truncated subspace.
"""

from __future__ import annotations

import itertools
import math
import string
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence, Union

import numpy as np

from .errors import InvalidMode, ShapeMismatch, TruncationOverflow, ZeroXi

NORM_TOL = 1e-10
HERMITIAN_TOL = 1e-10
PSD_TOL = 1e-10
OVERFLOW_TOL = 1e-12
# eigenvalue check is skipped above this Hilbert-space dimension
PSD_CHECK_MAX_DIM = 1024


@dataclass(frozen=True)
class Truncation:
    """Per-mode inclusive photon-number cutoffs."""

    cutoffs: tuple[int, ...]

    def __post_init__(self):
        cutoffs = tuple(int(c) for c in self.cutoffs)
        if not cutoffs:
            raise ShapeMismatch("a truncation needs at least one mode")
        if any(c < 0 for c in cutoffs):
            raise ShapeMismatch(f"cutoffs must be non-negative, got {cutoffs}")
        object.__setattr__(self, "cutoffs", cutoffs)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(c + 1 for c in self.cutoffs)

    @property
    def n_modes(self) -> int:
        return len(self.cutoffs)

    @property
    def size(self) -> int:
        return math.prod(self.dims)


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=complex)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class PureState:
    """State vector on a truncated multimode Fock space.

    ``normalized=False`` marks intermediates such as ``a|psi>`` that are not
    expected to have unit norm.
    """

    amplitudes: np.ndarray
    normalized: bool = True
    norm_tolerance: float = NORM_TOL

    def __post_init__(self):
        amps = _frozen(self.amplitudes)
        if amps.ndim == 0:
            raise ShapeMismatch("amplitudes must have at least one mode axis")
        object.__setattr__(self, "amplitudes", amps)
        if self.normalized:
            norm2 = float(np.vdot(amps, amps).real)
            if abs(norm2 - 1.0) > self.norm_tolerance:
                raise ValueError(f"state is not normalized: |psi|^2 = {norm2!r}")

    @property
    def truncation(self) -> Truncation:
        return Truncation(tuple(d - 1 for d in self.amplitudes.shape))

    @property
    def n_modes(self) -> int:
        return self.amplitudes.ndim

    @property
    def cutoffs(self) -> tuple[int, ...]:
        return self.truncation.cutoffs

    def norm(self) -> float:
        return float(np.sqrt(np.vdot(self.amplitudes, self.amplitudes).real))

    def __repr__(self) -> str:
        return f"PureState(cutoffs={self.cutoffs}, normalized={self.normalized})"


@dataclass(frozen=True, eq=False)
class DensityOperator:
    """Hermitian, unit-trace, positive operator stored as a ``D x D`` matrix."""

    matrix: np.ndarray
    truncation: Truncation
    tolerance: float = HERMITIAN_TOL
    validate: bool = True

    def __post_init__(self):
        mat = _frozen(self.matrix)
        trunc = self.truncation
        if not isinstance(trunc, Truncation):
            trunc = Truncation(tuple(trunc))
            object.__setattr__(self, "truncation", trunc)
        if mat.shape != (trunc.size, trunc.size):
            raise ShapeMismatch(
                f"matrix shape {mat.shape} does not match truncation {trunc.cutoffs}"
            )
        object.__setattr__(self, "matrix", mat)
        if self.validate:
            self.check()

    def check(self, psd: bool | None = None) -> None:
        mat = self.matrix
        scale = max(1.0, float(np.max(np.abs(mat))))
        if np.max(np.abs(mat - mat.conj().T)) > self.tolerance * scale:
            raise ValueError("density operator is not Hermitian")
        tr = np.trace(mat)
        if abs(tr - 1.0) > self.tolerance:
            raise ValueError(f"density operator trace is {tr!r}, expected 1")
        if psd is None:
            psd = self.truncation.size <= PSD_CHECK_MAX_DIM
        if psd:
            lowest = np.linalg.eigvalsh(mat)[0]
            if lowest < -PSD_TOL:
                raise ValueError(f"density operator has eigenvalue {lowest!r} < 0")

    @property
    def tensor(self) -> np.ndarray:
        dims = self.truncation.dims
        return self.matrix.reshape(dims + dims)

    @property
    def n_modes(self) -> int:
        return self.truncation.n_modes

    @property
    def cutoffs(self) -> tuple[int, ...]:
        return self.truncation.cutoffs

    def trace(self) -> complex:
        return complex(np.trace(self.matrix))

    def __repr__(self) -> str:
        return f"DensityOperator(cutoffs={self.cutoffs})"


@dataclass(frozen=True, eq=False)
class Mixture:
    """Convex combination of pure states, kept as an ensemble.

    Components may have different truncations; moments are weighted sums, so
    large device outputs never need a dense density matrix.
    """

    weights: tuple[float, ...]
    states: tuple[PureState, ...]

    def __post_init__(self):
        weights = tuple(float(w) for w in self.weights)
        states = tuple(self.states)
        if len(weights) != len(states) or not states:
            raise ShapeMismatch("weights and states must be non-empty and equal length")
        if any(w < 0 for w in weights):
            raise ValueError("mixture weights must be non-negative")
        if abs(sum(weights) - 1.0) > NORM_TOL:
            raise ValueError(f"mixture weights sum to {sum(weights)!r}")
        if len({s.n_modes for s in states}) != 1:
            raise ShapeMismatch("mixture components must have the same mode count")
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "states", states)

    @property
    def n_modes(self) -> int:
        return self.states[0].n_modes

    @property
    def cutoffs(self) -> tuple[int, ...]:
        return tuple(max(c) for c in zip(*(s.cutoffs for s in self.states)))

    def __iter__(self):
        return iter(zip(self.weights, self.states))

    def __repr__(self) -> str:
        return f"Mixture(components={len(self.states)}, cutoffs={self.cutoffs})"


State = Union[PureState, DensityOperator, Mixture]


@dataclass(frozen=True)
class Monomial:
    """Normally ordered monomial ``prod_i (a_i^dag)^p_i a_i^q_i``.

    ``powers[i] = (p_i, q_i)``: creation power first, annihilation second.
    """

    powers: tuple[tuple[int, int], ...]

    def __post_init__(self):
        powers = tuple((int(p), int(q)) for p, q in self.powers)
        if any(p < 0 or q < 0 for p, q in powers):
            raise ValueError(f"monomial powers must be non-negative: {powers}")
        object.__setattr__(self, "powers", powers)

    @classmethod
    def of(cls, n_modes: int, terms: Mapping[int, tuple[int, int]]) -> "Monomial":
        """Build from a sparse ``{mode: (p, q)}`` mapping."""
        powers = [(0, 0)] * n_modes
        for mode, pq in terms.items():
            if not 0 <= mode < n_modes:
                raise InvalidMode(f"mode {mode} out of range for {n_modes} modes")
            powers[mode] = tuple(pq)
        return cls(tuple(powers))

    def adjoint(self) -> "Monomial":
        return Monomial(tuple((q, p) for p, q in self.powers))

    @property
    def n_modes(self) -> int:
        return len(self.powers)


# -- ladder action --------------------------------------------------------------


def _falling_sqrt(n: np.ndarray, k: int) -> np.ndarray:
    """sqrt(n (n-1) ... (n-k+1)) elementwise, zero where n < k."""
    out = np.ones_like(n, dtype=float)
    for i in range(k):
        out = out * np.sqrt(np.clip(n - i, 0, None))
    return out


def _shape_along(axis: int, ndim: int, length: int) -> tuple[int, ...]:
    shape = [1] * ndim
    shape[axis] = length
    return tuple(shape)


def _lower(arr: np.ndarray, axis: int, q: int) -> np.ndarray:
    """Apply ``a^q`` along ``axis``; result keeps the input shape."""
    if q == 0:
        return arr
    dim = arr.shape[axis]
    out = np.zeros_like(arr)
    if q >= dim:
        return out
    n = np.arange(q, dim)
    coef = _falling_sqrt(n, q).reshape(_shape_along(axis, arr.ndim, dim - q))
    src = [slice(None)] * arr.ndim
    dst = [slice(None)] * arr.ndim
    src[axis] = slice(q, dim)
    dst[axis] = slice(0, dim - q)
    out[tuple(dst)] = coef * arr[tuple(src)]
    return out


def _raise(arr: np.ndarray, axis: int, p: int) -> tuple[np.ndarray, float]:
    """Apply ``(a^dag)^p`` along ``axis``; returns (result, weight pushed past the cutoff)."""
    if p == 0:
        return arr, 0.0
    dim = arr.shape[axis]
    n_out = np.arange(dim + p)
    coef = _falling_sqrt(n_out[p:], p)
    full = np.moveaxis(arr, axis, 0)
    lifted = coef.reshape((-1,) + (1,) * (arr.ndim - 1)) * full
    kept = np.zeros_like(full)
    keep = max(dim - p, 0)
    kept[p:] = lifted[:keep]
    overflow = float(np.sum(np.abs(lifted[keep:]) ** 2))
    return np.moveaxis(kept, 0, axis), overflow


def _check_mode(mode: int, n_modes: int) -> None:
    if not (isinstance(mode, (int, np.integer)) and 0 <= mode < n_modes):
        raise InvalidMode(f"mode {mode!r} out of range for {n_modes} modes")


def apply_ladder(
    state: PureState,
    mode: int,
    kind: str,
    power: int = 1,
    overflow_tolerance: float = OVERFLOW_TOL,
) -> PureState:
    """Apply ``a^power`` or ``(a^dag)^power`` to one mode.

    The result is unnormalized.  Creation weight pushed above the cutoff raises
    :class:`TruncationOverflow` if it exceeds ``overflow_tolerance``.
    """
    _check_mode(mode, state.n_modes)
    if power < 0:
        raise ValueError("power must be non-negative")
    if kind in ("annihilation", "a"):
        out = _lower(state.amplitudes, mode, power)
    elif kind in ("creation", "adag"):
        out, overflow = _raise(state.amplitudes, mode, power)
        if overflow > overflow_tolerance:
            raise TruncationOverflow(
                f"creation^{power} on mode {mode} pushed weight {overflow:.3e} above "
                f"cutoff {state.cutoffs[mode]}"
            )
    else:
        raise ValueError(f"unknown ladder kind {kind!r}")
    return PureState(out, normalized=False)


# -- basic constructors and conversions ------------------------------------------


def basis_state(occupations: Sequence[int], cutoffs: Sequence[int] | None = None) -> PureState:
    occupations = tuple(int(n) for n in occupations)
    if cutoffs is None:
        cutoffs = occupations
    trunc = Truncation(tuple(cutoffs))
    if any(n < 0 or n > c for n, c in zip(occupations, trunc.cutoffs)):
        raise ShapeMismatch(f"occupations {occupations} exceed cutoffs {trunc.cutoffs}")
    amps = np.zeros(trunc.dims, dtype=complex)
    amps[occupations] = 1.0
    return PureState(amps)


def vacuum(n_modes: int, cutoffs: Sequence[int] | None = None) -> PureState:
    return basis_state((0,) * n_modes, cutoffs if cutoffs is not None else (0,) * n_modes)


def normalize(state: PureState) -> PureState:
    norm = state.norm()
    if norm == 0:
        raise ValueError("cannot normalize the zero vector")
    return PureState(state.amplitudes / norm)


def embed(state: PureState, cutoffs: Sequence[int]) -> PureState:
    """Zero-pad a state into larger per-mode cutoffs."""
    cutoffs = tuple(int(c) for c in cutoffs)
    if len(cutoffs) != state.n_modes:
        raise ShapeMismatch("cutoff count does not match mode count")
    if any(c < old for c, old in zip(cutoffs, state.cutoffs)):
        raise ShapeMismatch(f"cannot embed cutoffs {state.cutoffs} into {cutoffs}")
    amps = np.zeros(tuple(c + 1 for c in cutoffs), dtype=complex)
    amps[tuple(slice(0, d) for d in state.amplitudes.shape)] = state.amplitudes
    return PureState(amps, normalized=state.normalized, norm_tolerance=state.norm_tolerance)


def tensor(*states: PureState) -> PureState:
    """Tensor product of pure states; mode order follows argument order."""
    if not states:
        raise ShapeMismatch("tensor() needs at least one state")
    amps = states[0].amplitudes
    for s in states[1:]:
        amps = np.multiply.outer(amps, s.amplitudes)
    return PureState(amps, normalized=all(s.normalized for s in states))


def inner(s1: PureState, s2: PureState) -> complex:
    """<s1|s2>, conjugate-linear in ``s1``."""
    if s1.amplitudes.shape != s2.amplitudes.shape:
        raise ShapeMismatch(f"truncations differ: {s1.cutoffs} vs {s2.cutoffs}")
    return complex(np.vdot(s1.amplitudes, s2.amplitudes))


def fidelity(s1: PureState, s2: PureState) -> float:
    """|<s1|s2>|^2 after zero-padding both to common cutoffs."""
    cut = tuple(max(a, b) for a, b in zip(s1.cutoffs, s2.cutoffs))
    return abs(inner(embed(s1, cut), embed(s2, cut))) ** 2


def to_density(state: PureState | Mixture | DensityOperator) -> DensityOperator:
    if isinstance(state, DensityOperator):
        return state
    if isinstance(state, PureState):
        vec = state.amplitudes.reshape(-1)
        return DensityOperator(np.outer(vec, vec.conj()), state.truncation)
    cut = state.cutoffs
    size = math.prod(c + 1 for c in cut)
    mat = np.zeros((size, size), dtype=complex)
    for w, s in state:
        vec = embed(s, cut).amplitudes.reshape(-1)
        mat += w * np.outer(vec, vec.conj())
    return DensityOperator(mat, Truncation(cut))


def to_mixture(rho: DensityOperator, cutoff_eigenvalue: float = 1e-15) -> Mixture:
    """Eigen-decompose a density operator into an ensemble of pure states."""
    vals, vecs = np.linalg.eigh(rho.matrix)
    keep = vals > cutoff_eigenvalue
    vals = vals[keep]
    vecs = vecs[:, keep]
    weights = vals / vals.sum()
    dims = rho.truncation.dims
    states = tuple(PureState(vecs[:, i].reshape(dims)) for i in range(vecs.shape[1]))
    return Mixture(tuple(weights), states)


def _pad_matrix(rho: DensityOperator, cutoffs: tuple[int, ...]) -> np.ndarray:
    dims_old = rho.truncation.dims
    dims = tuple(c + 1 for c in cutoffs)
    tens = np.zeros(dims + dims, dtype=complex)
    tens[tuple(slice(0, d) for d in dims_old) * 2] = rho.tensor
    return tens


def partial_trace(state: State, keep: Iterable[int]) -> DensityOperator:
    """Reduced density operator on the modes in ``keep`` (kept in ascending order)."""
    n = state.n_modes
    keep = sorted(set(int(k) for k in keep))
    for k in keep:
        _check_mode(k, n)
    if not keep:
        raise ShapeMismatch("keep at least one mode")
    drop = [i for i in range(n) if i not in keep]
    if isinstance(state, PureState):
        amps = np.moveaxis(state.amplitudes, keep + drop, list(range(n)))
        kept_dims = amps.shape[: len(keep)]
        mat = amps.reshape(math.prod(kept_dims), -1)
        return DensityOperator(mat @ mat.conj().T, Truncation(tuple(d - 1 for d in kept_dims)))
    if isinstance(state, Mixture):
        cut = state.cutoffs
        kept_cut = tuple(cut[k] for k in keep)
        size = math.prod(c + 1 for c in kept_cut)
        mat = np.zeros((size, size), dtype=complex)
        for w, s in state:
            mat += w * partial_trace(embed(s, cut), keep).matrix
        return DensityOperator(mat, Truncation(kept_cut))
    letters = string.ascii_letters
    ket = list(letters[:n])
    bra = list(letters[n : 2 * n])
    for i in drop:
        bra[i] = ket[i]
    out = "".join(ket[i] for i in keep) + "".join(bra[i] for i in keep)
    red = np.einsum("".join(ket) + "".join(bra) + "->" + out, state.tensor)
    kept_cut = tuple(state.cutoffs[k] for k in keep)
    size = math.prod(c + 1 for c in kept_cut)
    return DensityOperator(red.reshape(size, size), Truncation(kept_cut))


# -- moments ---------------------------------------------------------------------


def _expect_pure(amps: np.ndarray, monomial: Monomial) -> complex:
    bra = amps
    ket = amps
    for axis, (p, q) in enumerate(monomial.powers):
        bra = _lower(bra, axis, p)
        ket = _lower(ket, axis, q)
    return complex(np.vdot(bra, ket))


def _expect_density(rho: DensityOperator, monomial: Monomial) -> complex:
    # Tr(rho (a^dag)^p a^q) = sum_z rho[z+q, z+p] sqrt((z+q)!/z!) sqrt((z+p)!/z!)
    n = rho.n_modes
    tens = rho.tensor
    ket_sl, bra_sl, coefs = [], [], []
    for dim, (p, q) in zip(rho.truncation.dims, monomial.powers):
        length = dim - max(p, q)
        if length <= 0:
            return 0j
        z = np.arange(length)
        ket_sl.append(slice(q, q + length))
        bra_sl.append(slice(p, p + length))
        coefs.append(_falling_sqrt(z + q, q) * _falling_sqrt(z + p, p))
    sub = tens[tuple(ket_sl) + tuple(bra_sl)]
    idx = string.ascii_letters[:n]
    expr = idx + idx + "," + ",".join(idx) + "->"
    return complex(np.einsum(expr, sub, *coefs))


def expect(state: State, monomial: Monomial) -> complex:
    """Expectation value of a normally ordered monomial."""
    if monomial.n_modes != state.n_modes:
        raise ShapeMismatch(
            f"monomial has {monomial.n_modes} modes, state has {state.n_modes}"
        )
    if isinstance(state, PureState):
        return _expect_pure(state.amplitudes, monomial)
    if isinstance(state, DensityOperator):
        return _expect_density(state, monomial)
    return complex(sum(w * _expect_pure(s.amplitudes, monomial) for w, s in state))


def moment(state: State, terms: Mapping[int, tuple[int, int]]) -> complex:
    """Shorthand: ``moment(psi, {0: (0, 1), 1: (1, 0)})`` is ``<a b^dag>``."""
    return expect(state, Monomial.of(state.n_modes, terms))


def central_expect(state: State, monomial: Monomial) -> complex:
    """Moment with every ``a_i`` replaced by ``a_i - <a_i>`` (``a_i^dag`` conjugately).

    Expanded binomially into plain normally ordered moments.
    """
    n = state.n_modes
    if monomial.n_modes != n:
        raise ShapeMismatch("monomial and state mode counts differ")
    means = [
        moment(state, {i: (0, 1)}) if p or q else 0j
        for i, (p, q) in enumerate(monomial.powers)
    ]
    per_mode = []
    for (p, q), mu in zip(monomial.powers, means):
        terms = []
        for j in range(p + 1):
            for k in range(q + 1):
                c = math.comb(p, j) * math.comb(q, k)
                c *= (-mu.conjugate()) ** (p - j) * (-mu) ** (q - k)
                terms.append(((j, k), c))
        per_mode.append(terms)
    total = 0j
    for combo in itertools.product(*per_mode):
        coef = math.prod(c for _, c in combo)
        if coef == 0:
            continue
        total += coef * expect(state, Monomial(tuple(pq for pq, _ in combo)))
    return complex(total)


def moment_table(state: State, order: int, mode: int = 0) -> dict[tuple[int, int], complex]:
    """``{(j, k): <(a^dag)^j a^k>}`` for one mode, ``0 <= j, k <= order``."""
    _check_mode(mode, state.n_modes)
    return {
        (j, k): moment(state, {mode: (j, k)})
        for j in range(order + 1)
        for k in range(order + 1)
    }


@dataclass(frozen=True)
class QuadratureStats:
    """Second-order quadrature statistics of a mode pair, x = (a + a^dag)/sqrt2, p = i(a^dag - a)/sqrt2."""

    var_xa: float
    var_pa: float
    var_xb: float
    var_pb: float
    cov_x: float
    cov_p: float
    extras: dict = field(default_factory=dict, compare=False)

    def uv_variances(self, xi: float) -> tuple[float, float]:
        if xi == 0:
            raise ZeroXi("xi must be nonzero")
        sign = 1.0 if xi > 0 else -1.0
        var_u = xi**2 * self.var_xa + self.var_xb / xi**2 + 2 * sign * self.cov_x
        var_v = xi**2 * self.var_pa + self.var_pb / xi**2 - 2 * sign * self.cov_p
        return var_u, var_v


def quadrature_stats(state: State, modes: tuple[int, int] = (0, 1)) -> QuadratureStats:
    ia, ib = modes
    n = state.n_modes
    _check_mode(ia, n)
    _check_mode(ib, n)
    if ia == ib:
        raise InvalidMode("quadrature pair needs two distinct modes")
    mean_a = moment(state, {ia: (0, 1)})
    mean_b = moment(state, {ib: (0, 1)})
    na = moment(state, {ia: (1, 1)}).real
    nb = moment(state, {ib: (1, 1)}).real
    a2 = moment(state, {ia: (0, 2)})
    b2 = moment(state, {ib: (0, 2)})
    ab = moment(state, {ia: (0, 1), ib: (0, 1)})
    ab_dag = moment(state, {ia: (0, 1), ib: (1, 0)})
    return QuadratureStats(
        var_xa=a2.real + na + 0.5 - 2 * mean_a.real**2,
        var_pa=-a2.real + na + 0.5 - 2 * mean_a.imag**2,
        var_xb=b2.real + nb + 0.5 - 2 * mean_b.real**2,
        var_pb=-b2.real + nb + 0.5 - 2 * mean_b.imag**2,
        cov_x=ab.real + ab_dag.real - 2 * mean_a.real * mean_b.real,
        cov_p=-ab.real + ab_dag.real - 2 * mean_a.imag * mean_b.imag,
    )


def quadrature_uv_variance(
    state: State, xi: float, modes: tuple[int, int] = (0, 1)
) -> tuple[float, float]:
    """((Delta u)^2, (Delta v)^2) for u = |xi| x_a + x_b/xi, v = |xi| p_a - p_b/xi."""
    if xi == 0:
        raise ZeroXi("xi must be nonzero")
    return quadrature_stats(state, modes).uv_variances(xi)
