"""transferkit: free energy and Gibbs marginals of infinite translation-invariant
1D quantum chains via the spectral radius of a finite noncommutative transfer map."""

from .chain import (
    ChainModel,
    block_sites,
    build_interval_hamiltonian,
    ising_model,
    rescale_to_unit_beta,
    xy_coupling_term,
    xy_model,
    zero_model,
)
from .errors import (
    DomainError,
    HermiticityError,
    NumericalBreakdownError,
    OracleValidationError,
    ResourceBudgetError,
    TransferKitError,
)
from .operator_core import (
    herm_expm,
    hilbert_metric,
    kron,
    partial_trace,
    permute_sites,
    trace_distance,
    two_site_op,
)
from .states import DensityMatrix, project_to_density
from .thermo import (
    FreeEnergyEstimate,
    choose_L,
    conditional_mutual_information,
    entropy,
    expectation_by_derivative,
    free_energy,
    gibbs_marginal,
    mutual_information,
    pair_expectation,
    two_sided_energy,
    two_sided_model,
    unwind_two_sided,
)
from .transfer import (
    SpectralResult,
    TransferMap,
    apply_adjoint,
    apply_transfer,
    build_E,
    dense_superoperator,
    spectral_radius,
)
from .oracles import (
    FiniteChainResult,
    classical_transfer_free_energy,
    exact_diag_free_energy,
    gibbs_marginal_bruteforce,
    ising_free_energy,
    richardson_extrapolate,
    thermal_state,
    xy_exact,
    xy_exact_energy,
    xy_exact_validated,
)

__version__ = "0.1.0"

__all__ = [
    "ChainModel",
    "DensityMatrix",
    "DomainError",
    "FiniteChainResult",
    "FreeEnergyEstimate",
    "HermiticityError",
    "NumericalBreakdownError",
    "OracleValidationError",
    "ResourceBudgetError",
    "SpectralResult",
    "TransferKitError",
    "TransferMap",
    "apply_adjoint",
    "apply_transfer",
    "block_sites",
    "build_E",
    "build_interval_hamiltonian",
    "choose_L",
    "classical_transfer_free_energy",
    "conditional_mutual_information",
    "dense_superoperator",
    "entropy",
    "exact_diag_free_energy",
    "expectation_by_derivative",
    "free_energy",
    "gibbs_marginal",
    "gibbs_marginal_bruteforce",
    "herm_expm",
    "hilbert_metric",
    "ising_free_energy",
    "ising_model",
    "kron",
    "mutual_information",
    "pair_expectation",
    "partial_trace",
    "permute_sites",
    "project_to_density",
    "rescale_to_unit_beta",
    "richardson_extrapolate",
    "spectral_radius",
    "thermal_state",
    "trace_distance",
    "two_sided_energy",
    "two_sided_model",
    "two_site_op",
    "unwind_two_sided",
    "xy_coupling_term",
    "xy_exact",
    "xy_exact_energy",
    "xy_exact_validated",
    "xy_model",
    "zero_model",
]
