"""Spin Sampling Toolkit - boson sampling reproduced by hard-core spin dynamics."""

from .models import (
    SectorKind,
    ModeUnitary,
    OccupationConfig,
    SectorBasis,
    ProductFormState,
    BosonState,
    SpinHamiltonian,
    SpinState,
    ProbabilityTable,
    ExperimentRecord,
    IsingModel,
    CellSummary,
    InstanceSnapshot
)
from .errors import (
    SpinSamplingError,
    InvalidDimensionError,
    CapacityError,
    BasisMismatchError,
    SectorError,
    DomainError,
    SupportMismatchError,
    DegeneratePostselectionError,
    UnsupportedCouplingError,
    ConvergenceError,
    ConfigError
)
from .haar import sample_haar_unitary, unitarity_defect, from_matrix, trial_seed
from .fockspace import (
    enumerate_sector,
    sector_size,
    initial_config,
    locate,
    project,
    hop_pattern,
    DEFAULT_CAPACITY
)
from .bosondyn import (
    permanent,
    naive_permanent,
    amplitude,
    config_amplitudes,
    assemble_state,
    evolve_full,
    sector_weight,
    expansion_weights,
    canonical_modes,
    final_state_amplitude,
    output_distribution
)
from .spindyn import (
    build_spin_hamiltonian,
    initial_spin_state,
    propagate,
    evolve_spin,
    sampling_error_delta,
    delta_trace,
    delta_equation_residual,
    postselect_success,
    backscatter_weight,
    spin_output_distribution
)
from .analysis import (
    p_hcb_formula,
    p_hcb_exact,
    p_hcb_all_times,
    bunching_error_bound,
    operator_norm_qhp,
    norm_scaling_experiment,
    variation_distance,
    error_bound_report,
    instance_snapshot,
    fit_loglog_slope
)
from .isingmap import (
    sample_haar_orthogonal,
    build_ising_from_r,
    propagate_ising,
    rotating_frame,
    rwa_fidelity
)
from .experiments import TrialRunner, CellResult
from .scenarios import get_scenario, get_all_scenarios, SUBCOMMANDS

__all__ = [
    # Models
    'SectorKind',
    'ModeUnitary',
    'OccupationConfig',
    'SectorBasis',
    'ProductFormState',
    'BosonState',
    'SpinHamiltonian',
    'SpinState',
    'ProbabilityTable',
    'ExperimentRecord',
    'IsingModel',
    'CellSummary',
    'InstanceSnapshot',

    # Errors
    'SpinSamplingError',
    'InvalidDimensionError',
    'CapacityError',
    'BasisMismatchError',
    'SectorError',
    'DomainError',
    'SupportMismatchError',
    'DegeneratePostselectionError',
    'UnsupportedCouplingError',
    'ConvergenceError',
    'ConfigError',

    # Instances and bases
    'sample_haar_unitary',
    'unitarity_defect',
    'from_matrix',
    'trial_seed',
    'enumerate_sector',
    'sector_size',
    'initial_config',
    'locate',
    'project',
    'hop_pattern',
    'DEFAULT_CAPACITY',

    # Boson dynamics
    'permanent',
    'naive_permanent',
    'amplitude',
    'config_amplitudes',
    'assemble_state',
    'evolve_full',
    'sector_weight',
    'expansion_weights',
    'canonical_modes',
    'final_state_amplitude',
    'output_distribution',

    # Spin dynamics
    'build_spin_hamiltonian',
    'initial_spin_state',
    'propagate',
    'evolve_spin',
    'sampling_error_delta',
    'delta_trace',
    'delta_equation_residual',
    'postselect_success',
    'backscatter_weight',
    'spin_output_distribution',

    # Analysis
    'p_hcb_formula',
    'p_hcb_exact',
    'p_hcb_all_times',
    'bunching_error_bound',
    'operator_norm_qhp',
    'norm_scaling_experiment',
    'variation_distance',
    'error_bound_report',
    'instance_snapshot',
    'fit_loglog_slope',

    # Ising mapping
    'sample_haar_orthogonal',
    'build_ising_from_r',
    'propagate_ising',
    'rotating_frame',
    'rwa_fidelity',

    # Runs
    'TrialRunner',
    'CellResult',
    'get_scenario',
    'get_all_scenarios',
    'SUBCOMMANDS',
]
