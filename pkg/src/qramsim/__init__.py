"""Sparse-state simulation of noisy quantum random access memories.

Bucket-brigade, fanout, QROM and hybrid QRAM circuits only permute and
phase computational basis states, so a state is a short list of labelled
amplitudes. Noise is sampled as Monte-Carlo error configurations and the
query fidelity is averaged over them.
"""

from .channels import ChannelKind, ErrorConfig, KrausChannel, inject_error, make_channel, sample_round, verify_channel
from .circuits import (
    Block,
    Circuit,
    ClassicalData,
    CopyVariant,
    Variant,
    build_bb_circuit,
    build_circuit,
    build_double_query_circuit,
    build_fanout_circuit,
    build_hybrid_circuit,
    build_qrom_circuit,
    ideal_output,
)
from .experiments import ExperimentConfig, gen_dataset, run_sweep
from .fidelity import BoundReport, ScalingFit, bounds, config_fidelity, entropy_profile, loglog_fit
from .montecarlo import FidelityEstimate, enumerate_configs_fidelity, estimate_fidelity, run_trajectory, uniform_query
from .oracle import DenseDensityMatrix, DenseState, dense_channel_sim, dense_unitary_sim
from .sparse import (
    Gate,
    GateKind,
    SparseState,
    WireLayout,
    apply_gate,
    apply_gates,
    entanglement_entropy,
    inner_product,
    make_state,
    reduced_density_matrix,
)

__version__ = "0.1.0"
