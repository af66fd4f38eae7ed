"""ghostspec: precision of quantum vs. classical ghost spectrometry.

Quantifies how well a heralded photon-pair scheme and a split multimode
thermal scheme estimate a set of per-mode transmittivities, from exact
photon-counting statistics through error propagation, Fisher information
and Cramer-Rao bounds, with Monte Carlo and enumeration oracles.
"""

__version__ = "0.1.0"

from .photon_stats import (
    single_mode_joint,
    single_mode_joint_table,
    thermal_pmf,
    thermal_pmf_vector,
    triple_pmf,
)
from .jets import (
    MomentSet,
    TaylorJet,
    correlation_stats,
    extract_moment,
    extract_moment_derivative,
    g_k_jet,
    g_th_jet,
    mgf_product,
)
from .joint_pmf import (
    JointPMF,
    TruncationError,
    TruncationSpec,
    joint_pmf_convolve,
    joint_pmf_enumerate,
    pmf_moments,
    truncation_bound,
)
from .metrology import (
    ComparisonRow,
    ResourceBudget,
    classical_variance_propagation,
    compare_modes,
    crb_bound,
    fisher_hellinger,
    fisher_hellinger_sweep,
    fisher_loglik_fd,
    hellinger_distance,
    klyshko_estimate,
    quantum_variance_at_budget,
)
from .montecarlo import (
    ClassicalRunSummary,
    EmpiricalMoments,
    QuantumRunSummary,
    RunConfig,
    empirical_stats,
    merge_summaries,
    sample_thermal,
    simulate_classical_run,
    simulate_quantum_run,
)
from .workbench import (
    CountRecord,
    TransmissionProfile,
    load_counts,
    load_profile,
    rebin,
    run_comparison,
    save_counts,
    save_profile,
    supergaussian_profile,
    uniform_grid,
    write_report,
)

__all__ = [name for name in dir() if not name.startswith("_")]
