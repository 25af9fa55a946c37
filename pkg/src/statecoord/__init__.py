"""Finite-alphabet coordination and state-communication toolkit.

Implements empirical coordination of actions in a two-agent network with a
state-dependent channel: feasibility of target joint laws under non-causal
and causal observation of the state, payoff optimization, a power-control
benchmark scenario, minimal-distortion state communication, and a
Monte-Carlo simulator of the block-Markov covering/packing codec.
"""

from ._typbackend import HAVE_EXT
from .codec import (
    BlockCodeParams,
    CausalDecoder,
    Codebooks,
    CodebookSizeError,
    CoveringFailure,
    PackingFailure,
    RateChoice,
    SimResult,
    decode_block_end,
    decode_symbol,
    encode_block,
    generate_codebooks,
    is_typical,
    make_codec_laws,
    rate_region_check,
    run_simulation,
)
from .coordination import (
    AuxChannel,
    CoordinationProblem,
    FeasibilityReport,
    WrongMarginalError,
    baselines,
    cardinality_stress,
    constraint_slack,
    is_implementable_causal,
    is_implementable_noncausal,
    max_constraint_slack,
    optimize_payoff_causal,
    optimize_payoff_noncausal,
    simulate_causal_scheme,
)
from .power_control import (
    PowerControlConfig,
    SweepRow,
    build_problem,
    p_max_from_snr_db,
    sinr,
    snr_sweep,
    state_gains,
    sweep_to_csv,
)
from .probability import (
    Alphabet,
    CondPmf,
    DimensionMismatch,
    InternalConsistencyError,
    InvalidDistribution,
    JointPmf,
    compose,
)
from .simplexopt import OptConfig
from .state_comm import (
    DistortionReport,
    StateCommProblem,
    min_dist_c_enc_c_dec,
    min_dist_c_enc_sc_dec,
    min_dist_nc_enc_c_dec,
    min_dist_nc_enc_sc_dec,
)

__version__ = "0.1.0"

__all__ = [
    "Alphabet",
    "AuxChannel",
    "BlockCodeParams",
    "CausalDecoder",
    "Codebooks",
    "CodebookSizeError",
    "CondPmf",
    "CoordinationProblem",
    "CoveringFailure",
    "DimensionMismatch",
    "DistortionReport",
    "FeasibilityReport",
    "HAVE_EXT",
    "InternalConsistencyError",
    "InvalidDistribution",
    "JointPmf",
    "OptConfig",
    "PackingFailure",
    "PowerControlConfig",
    "RateChoice",
    "SimResult",
    "StateCommProblem",
    "SweepRow",
    "WrongMarginalError",
    "baselines",
    "build_problem",
    "cardinality_stress",
    "compose",
    "constraint_slack",
    "decode_block_end",
    "decode_symbol",
    "encode_block",
    "generate_codebooks",
    "is_implementable_causal",
    "is_implementable_noncausal",
    "is_typical",
    "make_codec_laws",
    "max_constraint_slack",
    "min_dist_c_enc_c_dec",
    "min_dist_c_enc_sc_dec",
    "min_dist_nc_enc_c_dec",
    "min_dist_nc_enc_sc_dec",
    "optimize_payoff_causal",
    "optimize_payoff_noncausal",
    "p_max_from_snr_db",
    "rate_region_check",
    "run_simulation",
    "simulate_causal_scheme",
    "sinr",
    "snr_sweep",
    "state_gains",
    "sweep_to_csv",
]
