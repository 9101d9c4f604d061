"""Entanglement witnesses for bosonic modes on truncated Fock spaces."""

from .devices import (
    beam_splitter,
    beam_splitter_moment_map,
    classicality_threshold,
    displacement,
    lindblad_evolve,
    linear_amp_moments,
    measure_ab_dagger,
    phase_shift,
    squeezer_moment_map,
    two_mode_squeezer,
)
from .errors import ConfigError, FockError, NumericalFailure
from .fock import (
    DensityOperator,
    Mixture,
    Monomial,
    PureState,
    Truncation,
    expect,
    moment,
    moment_table,
    partial_trace,
    tensor,
)
from .params import AmplifierParams, BeamSplitterParams, MomentSet, SqueezerParams
from .states import StateSpec, build_state
from .witnesses import (
    WitnessReport,
    duan_simon,
    hz_central,
    hz_product,
    hz_sum,
    input_predicates,
    tripartite_genuine,
)

__version__ = "0.1.0"
