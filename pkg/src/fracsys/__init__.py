"""Caputo fractional LTI systems: expansions, structural tests, sampling."""

from .analysis import (
    ControlPlan, StructuralReport, controllability_gramian,
    controllability_matrix, min_energy_control, observability_gramian,
    observability_matrix, pbh_test, rank_test, structural_report,
)
from .errors import (
    AllCandidatesSingular, EigenSolverFailure, FracsysError, GramianSingular,
    HorizonExceeded, NonSquare, NumericalRankAmbiguous,
    QuadratureNonConvergence, RankDeficient, SeriesDivergence,
    SingularCoefficientMatrix, SystemDefinitionError, TestDisagreement,
)
from .expansion import BetaSet, beta_companion, beta_series, companion_matrix, expm_via_expansion
from .fractional import (
    CaputoSystem, ControlSignal, EvolutionOperators, InitialData,
    constant_control, output, phi_alpha, phi_alpha_j,
    piecewise_constant_control, sine_control, solve_forced,
    solve_homogeneous, solve_homogeneous_batch, zero_control,
)
from .minpoly import MinimalExpansion, closed_form_check, minimal_expansion, power_via_expansion
from .quad import QuadratureSpec
from .sampling import (
    ReconstructionResult, SampledControllabilityResult, SamplingPlan,
    build_observation_operator, conditioning_search, forced_sample_adjust,
    max_eigenfrequency, propose_instants, reconstruct_x0, reduced_reconstruct,
    sampled_controllability_check,
)

__version__ = "0.1.0"
