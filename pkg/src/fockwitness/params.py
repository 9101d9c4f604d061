"""Parameter records for the optical devices and the moment bundle they evolve."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import ConfigError, NegativeRate

UNITARITY_TOL = 1e-12
# |A - C| below this fraction of max(A, C, 1) uses the analytic A*t limit
DEGENERATE_RATE_TOL = 1e-12


@dataclass(frozen=True)
class BeamSplitterParams:
    """Heisenberg map a_out = t a + r b, b_out = -r* a + t* b."""

    t: complex
    r: complex

    def __post_init__(self):
        t, r = complex(self.t), complex(self.r)
        if abs(abs(t) ** 2 + abs(r) ** 2 - 1) > UNITARITY_TOL:
            raise ConfigError(f"|t|^2 + |r|^2 must be 1, got {abs(t)**2 + abs(r)**2!r}")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "r", r)

    @classmethod
    def balanced(cls) -> "BeamSplitterParams":
        return cls(1 / math.sqrt(2), 1 / math.sqrt(2))

    @classmethod
    def from_angle(cls, theta: float, phase_t: float = 0.0, phase_r: float = 0.0):
        return cls(
            math.cos(theta) * complex(math.cos(phase_t), math.sin(phase_t)),
            math.sin(theta) * complex(math.cos(phase_r), math.sin(phase_r)),
        )


@dataclass(frozen=True)
class SqueezerParams:
    """Heisenberg map a_out = c a + s b^dag, b_out = c b + s a^dag with c^2 - |s|^2 = 1."""

    c: float
    s: complex

    def __post_init__(self):
        c, s = float(self.c), complex(self.s)
        if c < 1:
            raise ConfigError(f"c must be >= 1, got {c}")
        if abs(c**2 - abs(s) ** 2 - 1) > UNITARITY_TOL * max(1.0, c**2):
            raise ConfigError(f"c^2 - |s|^2 must be 1, got {c**2 - abs(s)**2!r}")
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "s", s)

    @classmethod
    def from_r(cls, r: float, phase: float = 0.0) -> "SqueezerParams":
        return cls(math.cosh(r), math.sinh(r) * complex(math.cos(phase), math.sin(phase)))

    @property
    def r(self) -> float:
        return math.acosh(self.c)


@dataclass(frozen=True)
class AmplifierParams:
    """Gain (A) and loss (C) rates per mode and the evolution time."""

    A_a: float
    C_a: float
    A_b: float
    C_b: float
    t: float = 0.0

    def __post_init__(self):
        for name in ("A_a", "C_a", "A_b", "C_b", "t"):
            value = float(getattr(self, name))
            if value < 0:
                raise NegativeRate(f"{name} must be >= 0, got {value}")
            object.__setattr__(self, name, value)

    def with_time(self, t: float) -> "AmplifierParams":
        return AmplifierParams(self.A_a, self.C_a, self.A_b, self.C_b, t)

    def mode(self, which: str) -> tuple[float, float]:
        return (self.A_a, self.C_a) if which == "a" else (self.A_b, self.C_b)

    @staticmethod
    def degenerate(A: float, C: float) -> bool:
        return abs(A - C) < DEGENERATE_RATE_TOL * max(A, C, 1.0)

    @property
    def max_rate(self) -> float:
        return max(self.A_a, self.C_a, self.A_b, self.C_b)


def growth(A: float, C: float, t: float) -> float:
    """e^{(A-C)t}, the single-mode intensity gain G(t)^2."""
    return math.exp((A - C) * t)


def added_noise(A: float, C: float, t: float) -> float:
    """A (e^{(A-C)t} - 1)/(A - C), with the A*t limit when A = C."""
    if AmplifierParams.degenerate(A, C):
        return A * t
    return A * math.expm1((A - C) * t) / (A - C)


@dataclass(frozen=True)
class MomentSet:
    """<a b^dag>, <N_a N_b>, <N_a>, <N_b> plus optional named extras."""

    ab_dag: complex
    na_nb: float
    na: float
    nb: float
    extra: dict = field(default_factory=dict, compare=False)

    @property
    def witness(self) -> float:
        """|<a b^dag>|^2 - <N_a N_b>; positive means the product condition detects."""
        return abs(self.ab_dag) ** 2 - self.na_nb

    @classmethod
    def from_state(cls, state, modes: tuple[int, int] = (0, 1)) -> "MomentSet":
        from .fock import moment

        ia, ib = modes
        return cls(
            ab_dag=moment(state, {ia: (0, 1), ib: (1, 0)}),
            na_nb=moment(state, {ia: (1, 1), ib: (1, 1)}).real,
            na=moment(state, {ia: (1, 1)}).real,
            nb=moment(state, {ib: (1, 1)}).real,
        )
