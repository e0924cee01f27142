"""Differential atom interferometry with mode-swapped spin squeezing."""

from sqswap.estimation import (
    NoiseConfig,
    clock_experiment,
    differential_experiment,
    invert_phases,
    sample_shots,
)
from sqswap.fock import (
    FockBasis,
    PairOperator,
    ProtocolConfig,
    StateVector,
    apply_mode_swap,
    build_basis,
    encode_phases,
    evolve_squeezing,
    load_state,
    moments,
    outcome_distribution,
    pair_spin_operator,
    prepare_initial,
    save_state,
)
from sqswap.gaussian import (
    GaussianConfig,
    MSMatrix,
    chi_angles,
    gain_analytic,
    gain_max,
    ms_matrix_from_protocol,
    no_squeezing_closed_forms,
    quadrature_variance,
    sensitivity_general,
    squeezing_parameter,
)
from sqswap.optimizer import (
    f_objective,
    nu_min_analytic,
    nu_min_numeric,
    optimal_conditions,
    optimize_protocol,
    tau_ref,
)
from sqswap.protocol import (
    SensitivityReport,
    average_gain,
    bandwidth,
    fringe_kernel,
    midfringe_sensitivity,
    run_mepe,
    run_separable,
    sensitivity_linear_combination,
    spin_squeezing_xi2,
)

__version__ = "0.1.0"

__all__ = [
    "FockBasis",
    "StateVector",
    "PairOperator",
    "ProtocolConfig",
    "build_basis",
    "prepare_initial",
    "pair_spin_operator",
    "evolve_squeezing",
    "apply_mode_swap",
    "encode_phases",
    "moments",
    "outcome_distribution",
    "save_state",
    "load_state",
    "SensitivityReport",
    "run_mepe",
    "run_separable",
    "sensitivity_linear_combination",
    "midfringe_sensitivity",
    "bandwidth",
    "average_gain",
    "fringe_kernel",
    "spin_squeezing_xi2",
    "GaussianConfig",
    "MSMatrix",
    "ms_matrix_from_protocol",
    "chi_angles",
    "sensitivity_general",
    "gain_analytic",
    "gain_max",
    "no_squeezing_closed_forms",
    "quadrature_variance",
    "squeezing_parameter",
    "f_objective",
    "nu_min_analytic",
    "nu_min_numeric",
    "optimal_conditions",
    "optimize_protocol",
    "tau_ref",
    "NoiseConfig",
    "sample_shots",
    "invert_phases",
    "differential_experiment",
    "clock_experiment",
    "__version__",
]
