"""Constructors for the two- and three-mode state families.

Each constructor picks its own truncation: coherent amplitudes are cut where
the Poisson tail drops below ``COHERENT_TAIL``, plus any requested headroom.
Superpositions are renormalized numerically; analytic prefactors are only
used as cross-checks in the tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

import numpy as np
from scipy.special import gammaln
from scipy.stats import poisson

from .errors import ConfigError, InvalidOrder
from .fock import Mixture, PureState, apply_ladder, embed, normalize, tensor

COHERENT_TAIL = 1e-15


def coherent_cutoff(alpha: complex, tail: float = COHERENT_TAIL) -> int:
    """Smallest N with sum_{n>N} e^{-|a|^2} |a|^{2n}/n! < tail."""
    mu = abs(alpha) ** 2
    if mu == 0:
        return 0
    upper = int(mu + 20 * math.sqrt(mu) + 60)
    ns = np.arange(upper + 1)
    below = np.nonzero(poisson.sf(ns, mu) < tail)[0]
    return int(below[0]) if below.size else upper


def coherent_amplitudes(alpha: complex, cutoff: int) -> np.ndarray:
    """Unnormalized-by-truncation coefficients e^{-|a|^2/2} a^n / sqrt(n!)."""
    n = np.arange(cutoff + 1)
    alpha = complex(alpha)
    if alpha == 0:
        out = np.zeros(cutoff + 1, dtype=complex)
        out[0] = 1.0
        return out
    log_mag = -abs(alpha) ** 2 / 2 + n * math.log(abs(alpha)) - gammaln(n + 1) / 2
    return np.exp(log_mag) * np.exp(1j * n * np.angle(alpha))


def coherent(alpha: complex, *, cutoff: int | None = None, headroom: int = 0) -> PureState:
    """Single-mode coherent state, renormalized after truncation."""
    base = coherent_cutoff(alpha) if cutoff is None else int(cutoff)
    amps = np.zeros(base + headroom + 1, dtype=complex)
    amps[: base + 1] = coherent_amplitudes(alpha, base)
    return PureState(amps / np.linalg.norm(amps))


def number(n: int, *, cutoff: int | None = None, headroom: int = 0) -> PureState:
    if n < 0:
        raise ConfigError(f"photon number must be >= 0, got {n}")
    dim = (n if cutoff is None else int(cutoff)) + headroom + 1
    if n >= dim:
        raise ConfigError(f"cutoff {dim - 1} is below photon number {n}")
    amps = np.zeros(dim, dtype=complex)
    amps[n] = 1.0
    return PureState(amps)


def number_superposition(
    coefficients: Mapping[int, complex], *, cutoff: int | None = None
) -> PureState:
    """Normalized single-mode superposition ``sum_n c_n |n>``, e.g. ``{0: 1, 3: 1}``."""
    top = max(coefficients)
    dim = (top if cutoff is None else int(cutoff)) + 1
    amps = np.zeros(dim, dtype=complex)
    for n, c in coefficients.items():
        amps[int(n)] = complex(c)
    return normalize(PureState(amps, normalized=False))


def thermal(nbar: float, *, tail: float = COHERENT_TAIL) -> Mixture:
    """Thermal state as an ensemble of number states, truncated at a geometric tail."""
    if nbar < 0:
        raise ConfigError("mean photon number must be >= 0")
    if nbar == 0:
        return Mixture((1.0,), (number(0),))
    ratio = nbar / (1 + nbar)
    top = max(0, math.ceil(math.log(tail) / math.log(ratio)) - 1)
    weights = ratio ** np.arange(top + 1)
    weights /= weights.sum()
    return Mixture(tuple(weights), tuple(number(n) for n in range(top + 1)))


def product_coherent(*alphas: complex, headroom: int = 0) -> PureState:
    return tensor(*(coherent(a, headroom=headroom) for a in alphas))


def photon_added_pair(
    alpha: complex, beta: complex, *, headroom: int = 0
) -> PureState:
    """(a^dag + b^dag)|alpha>|beta>, normalized; cutoffs get one extra photon."""
    ca, cb = coherent_cutoff(alpha), coherent_cutoff(beta)
    base = tensor(coherent(alpha, cutoff=ca), coherent(beta, cutoff=cb))
    base = embed(base, (ca + 1 + headroom, cb + 1 + headroom))
    raised = apply_ladder(base, 0, "creation").amplitudes + apply_ladder(
        base, 1, "creation"
    ).amplitudes
    return normalize(PureState(raised, normalized=False))


def cat_pair(alpha: complex, beta: complex, *, headroom: int = 0) -> PureState:
    """Symmetric superposition |alpha>|beta> + |beta>|alpha>, normalized numerically."""
    cut = max(coherent_cutoff(alpha), coherent_cutoff(beta))
    va = coherent_amplitudes(alpha, cut)
    vb = coherent_amplitudes(beta, cut)
    amps = np.multiply.outer(va, vb) + np.multiply.outer(vb, va)
    state = normalize(PureState(amps, normalized=False))
    return embed(state, (cut + headroom,) * 2) if headroom else state


def number_pair(k1: int, k2: int, *, headroom: int = 0) -> PureState:
    """(|k1,k2> + |k2,k1>)/sqrt2 with k1 > k2 >= 0."""
    if k2 < 0 or k1 <= k2:
        raise InvalidOrder(f"number_pair needs k1 > k2 >= 0, got ({k1}, {k2})")
    dim = k1 + headroom + 1
    amps = np.zeros((dim, dim), dtype=complex)
    amps[k1, k2] = amps[k2, k1] = 1 / math.sqrt(2)
    return PureState(amps)


def single_photon_bell(*, headroom: int = 0) -> PureState:
    """(|0,1> + |1,0>)/sqrt2."""
    dim = 2 + headroom
    amps = np.zeros((dim, dim), dtype=complex)
    amps[0, 1] = amps[1, 0] = 1 / math.sqrt(2)
    return PureState(amps)


def displaced(state: PureState, alphas: Sequence[complex]) -> PureState:
    """Apply D(alpha_i) to every mode i (modes with alpha_i = 0 are untouched)."""
    from .devices import displacement

    if len(alphas) != state.n_modes:
        raise ConfigError("need one displacement amplitude per mode")
    for mode, alpha in enumerate(alphas):
        if alpha != 0:
            state = displacement(state, mode, alpha)
    return state


def w_single_photon(*, headroom: int = 0) -> PureState:
    """(|0,0,1> + |0,1,0> + |1,0,0>)/sqrt3."""
    dim = 2 + headroom
    amps = np.zeros((dim,) * 3, dtype=complex)
    for occ in ((0, 0, 1), (0, 1, 0), (1, 0, 0)):
        amps[occ] = 1 / math.sqrt(3)
    return PureState(amps)


def w_coherent_eta(alpha: complex) -> float:
    """Analytic normalization [3(1 + 2 e^{-|alpha|^2})]^{-1/2}."""
    return 1 / math.sqrt(3 * (1 + 2 * math.exp(-abs(alpha) ** 2)))


def w_coherent(alpha: complex, *, headroom: int = 0) -> PureState:
    """eta(|0,0,alpha> + |0,alpha,0> + |alpha,0,0>), normalized numerically."""
    cut = coherent_cutoff(alpha)
    va = coherent_amplitudes(alpha, cut)
    v0 = coherent_amplitudes(0, cut)
    outer = np.multiply.outer
    amps = outer(outer(v0, v0), va) + outer(outer(v0, va), v0) + outer(outer(va, v0), v0)
    state = normalize(PureState(amps, normalized=False))
    return embed(state, (cut + headroom,) * 3) if headroom else state


def squeezed_vacuum(
    r: float, theta: float = 0.0, *, cutoff: int | None = None, tail: float = COHERENT_TAIL
) -> PureState:
    """Single-mode squeezed vacuum with <a^2> = -e^{i theta} sinh r cosh r."""
    if r < 0:
        raise ConfigError("squeezing parameter r must be >= 0")
    if r == 0:
        return number(0, cutoff=cutoff or 0)
    lam = math.tanh(r)
    k_max = int(math.ceil(70 / -math.log(lam**2))) + 10
    k = np.arange(k_max + 1)
    log_mag = (
        gammaln(2 * k + 1) / 2 - k * math.log(2) - gammaln(k + 1)
        + k * math.log(lam) - 0.5 * math.log(math.cosh(r))
    )
    coeffs = np.exp(log_mag) * np.exp(1j * k * (theta + math.pi))
    if cutoff is None:
        probs = np.abs(coeffs) ** 2
        tails = np.cumsum(probs[::-1])[::-1]
        # tails[j] = weight at photon numbers >= 2j
        keep = int(np.nonzero(tails < tail)[0][0])
        cutoff = 2 * (keep - 1)
    amps = np.zeros(cutoff + 1, dtype=complex)
    n_even = min(cutoff // 2, k_max)
    amps[0 : 2 * n_even + 1 : 2] = coeffs[: n_even + 1]
    return normalize(PureState(amps, normalized=False))


# -- declarative specs ------------------------------------------------------------


def as_complex(value: Any) -> complex:
    """Accept numbers, strings like ``"1+2j"``, or ``[re, im]`` pairs."""
    if isinstance(value, (list, tuple)):
        if len(value) != 2:
            raise ConfigError(f"complex pair must have two entries: {value!r}")
        return complex(float(value[0]), float(value[1]))
    if isinstance(value, str):
        return complex(value.replace(" ", "").replace("i", "j"))
    return complex(value)


@dataclass(frozen=True)
class StateSpec:
    """Family name plus parameters; the unit of state configuration."""

    family: str
    params: dict = field(default_factory=dict)

    def build(self):
        return build_state(self)


def _two_complex(p, *names):
    return [as_complex(p[n]) for n in names]


def build_state(spec: StateSpec | Mapping[str, Any]):
    """Construct the state described by a spec (or an equivalent mapping)."""
    if not isinstance(spec, StateSpec):
        spec = StateSpec(spec["family"], dict(spec.get("params", {})))
    fam = spec.family
    p = dict(spec.params)
    headroom = int(p.pop("headroom", 0))
    try:
        if fam == "coherent":
            return coherent(as_complex(p["alpha"]), headroom=headroom)
        if fam == "number":
            return number(int(p["n"]), headroom=headroom)
        if fam == "vacuum":
            return tensor(*(number(0, headroom=headroom) for _ in range(int(p.get("modes", 2)))))
        if fam == "photon_added_pair":
            return photon_added_pair(*_two_complex(p, "alpha", "beta"), headroom=headroom)
        if fam == "cat_pair":
            return cat_pair(*_two_complex(p, "alpha", "beta"), headroom=headroom)
        if fam == "number_pair":
            return number_pair(int(p["k1"]), int(p["k2"]), headroom=headroom)
        if fam == "single_photon_bell":
            return single_photon_bell(headroom=headroom)
        if fam == "squeezed_vacuum":
            return squeezed_vacuum(float(p["r"]), float(p.get("theta", 0.0)))
        if fam == "w_single_photon":
            return w_single_photon(headroom=headroom)
        if fam == "w_coherent":
            return w_coherent(as_complex(p["alpha"]), headroom=headroom)
        if fam == "number_superposition":
            coeffs = {int(k): as_complex(v) for k, v in p["coefficients"].items()}
            return number_superposition(coeffs)
        if fam == "thermal":
            return thermal(float(p["nbar"]))
        if fam == "product":
            parts = [build_state(s) for s in p["modes"]]
            if any(not isinstance(s, PureState) for s in parts):
                raise ConfigError("product specs accept pure single-mode factors only")
            return tensor(*parts)
        if fam == "displaced":
            base = build_state(p["base"])
            return displaced(base, [as_complex(a) for a in p["alphas"]])
    except KeyError as exc:
        raise ConfigError(f"state family {fam!r} is missing parameter {exc}") from None
    raise ConfigError(f"unknown state family {fam!r}")
