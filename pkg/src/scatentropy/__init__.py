"""Perturbative subsystem-entropy change in bipartite scattering.

Closed-form predictions for the entropy change of subsystem A under
S = exp(i*lam*T1), a classifier for the monotonicity criteria, and an exact
unitary-evolution oracle that validates every coefficient.
"""

from .criteria import (
    Guarantee,
    GuaranteeVerdict,
    ProductForm,
    Witness,
    check_commutation,
    check_special_form,
    check_t_criterion,
    classify,
    product_eigenbasis,
)
from .errors import (
    BasisMismatch,
    ConfigError,
    ConflictingAssignment,
    DegeneracyLeak,
    DimensionMismatch,
    DimensionOverflow,
    EnergyViolation,
    IllConditionedFit,
    IllConditionedSpectrum,
    InvalidDensity,
    NoConvergence,
    NonHermitianInput,
    NonUnitary,
    PreconditionViolated,
    ScatentropyError,
)
from .harness import (
    DemonResult,
    ProbeResult,
    Report,
    demon_search,
    guarantee_probe,
    render_text,
    report_to_dict,
    report_to_json,
    run_scenario,
    write_csv,
)
from .linalg import Spectrum, eig_hermitian, kron, matexp_skew, partial_trace_b
from .oracle import DEFAULT_GRID, SweepFit, evolve_exact, exact_delta_entropy, sweep_and_fit
from .perturb import (
    Branch,
    PerturbationBlock,
    PerturbativePrediction,
    delta_rho_a_first,
    first_order_entropy,
    full_rank_contributions,
    full_rank_second_order,
    log_coefficient,
    log_coefficient_forms,
    perturbation_matrix,
    predict,
    thermal_delta_s,
    trace_identity_check,
)
from .qstate import (
    ASpectralData,
    BipartiteState,
    a_spectral_data,
    reduced_a,
    von_neumann_entropy,
)
from .scenarios import ScenarioConfig, builtin, builtin_library, parse_scenario_file
from .smatrix import (
    TElementView,
    TMatrixPair,
    UnitarityReport,
    complete_second_order,
    exact_s,
    random_hermitian,
    structured_t1,
    verify_unitarity,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
