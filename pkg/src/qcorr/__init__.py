"""Correlation rank, quantum discord and local creation of discord for
bipartite quantum states."""

__version__ = "0.1.0"

from .channels import (  # noqa: E402
    QuantumChannel,
    apply,
    apply_local,
    l_monotonicity_trial,
    random_channel,
    reduce_classical,
    state_preparation_channel,
    synthesize_local_creation,
)
from .correlation import (  # noqa: E402
    analyze,
    correlation_matrix,
    ensemble_rank_theorem_check,
    reduce_dependent_ensemble,
    witness_report,
)
from .discord import discord, discord_sweep, mutual_information  # noqa: E402
from .geometry import classify, counting_report, f_monotonicity_check, monte_carlo_regions  # noqa: E402
from .states import (  # noqa: E402
    DensityMatrix,
    ProductEnsemble,
    assemble,
    classical_state,
    load_state,
    random_ensemble,
    random_state,
    rho_c,
    rho_l,
    save_state,
    schmidt_rank2_pure,
    werner_state,
)
