"""Behavioral simulator of a 64-spin all-to-all current-mode Ising machine."""

from .core import (
    COEFF_LEVELS,
    COEFF_MAX,
    MAX_SPINS,
    MaxCutGraph,
    ProblemInstance,
    cut_value,
    hamiltonian,
    local_field,
    maxcut_to_ising,
    quantize_coeff,
)
from .dynamics import (
    DynamicsConfig,
    LfsrState,
    MachineState,
    RunResult,
    anneal_many,
    euler_step,
    init_spins,
    lfsr_next,
    node_derivative,
    quantize_spin,
    run_anneal,
)
from .instances import EnsembleSpec, generate_random_qubo, read_instance, write_instance
from .metrics import aggregate_batch, ets, is_success, normalized_ets, normalized_spin_area, tts
from .perturbation import (
    ColumnStatus,
    PerturbationSchedule,
    advance_schedule,
    dac_enabled,
    effective_matrix,
    leak_factor,
    selected_column,
)
from .solvers import OracleResult, TabuParams, best_known, brute_force, tabu_search

__version__ = "0.1.0"
