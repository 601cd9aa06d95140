"""Limit-cycle and nonlinear stability analysis of friction-damped
bladed-disk sectors under flutter.

The package solves for flutter-induced limit cycle oscillations of
reduced sector models with elastic dry-friction contacts, in the
frequency domain:

- two energy methods (``energy``): the conventional one at the fixed
  sticking mode, and a refined one along the nonlinear-mode backbone
  computed by ``epmc``;
- a fully coupled alternating fluid/structure harmonic-balance solver
  (``coupled``) with a pluggable aerodynamic provider (``aero``);
- a time-domain oracle (``timedomain``) for independent cross checks,
  a deterministic two-config benchmark generator (``benchmark``), JSON
  and CSV input/output (``io``), a command line front end (``cli``) and
  a built-in verification suite (``acceptance``).
"""

from .aero import (
    AeroInfluenceModel,
    DirectAeroProvider,
    ExactInfluenceAero,
    SurrogateFluidSolver,
    aero_work,
    damping_ratio,
    harmonic_supplied_work,
    influence_force,
    influence_matrix,
    surrogate_fluid_solve,
)
from .acceptance import CriterionResult, format_results, run_acceptance
from .benchmark import BenchmarkCase, flutter_curve, generate_benchmark
from .contact import (
    AftConfig,
    ContactMarchError,
    contact_dissipated_work,
    contact_force_and_jacobian,
    contact_force_fourier,
    contact_jacobian,
    jenkins_march,
    max_potential_energy,
    steady_contact_samples,
)
from .coupled import (
    LINEARIZATION_VARIANTS,
    CoupledConfig,
    CoupledDivergenceError,
    CouplingTrace,
    LcoSolution,
    coupled_solve,
    initialize_from_backbone,
    linearize_aero,
)
from .energy import (
    OUTCOME_LCOS,
    OUTCOME_STABLE,
    OUTCOME_UNBOUNDED,
    EnergyCurve,
    EnergyLco,
    EnergyMethodResult,
    classify_stability,
    conventional_energy_lco,
    energy_balance_residual,
    mac,
    refined_energy_lco,
)
from .epmc import (
    Backbone,
    BackbonePoint,
    ContinuationConfig,
    ContinuationError,
    backbone_point_at,
    backbone_query,
    continue_backbone,
    epmc_residual,
    solve_epmc_point,
)
from .harmonics import HarmonicSet, flatten_count
from .hb import (
    AnchorError,
    NewtonConfig,
    NewtonDivergenceError,
    PhaseAnchor,
    StructuralSolution,
    hb_block_matrix,
    rotate_to_anchor,
    solve_structural,
    structural_residual,
)
from .io import (
    CaseValidationError,
    case_from_dict,
    case_to_dict,
    emit_curve,
    emit_results,
    emit_timing,
    lco_record,
    load_case,
    model_from_dict,
    model_to_dict,
    save_case,
)
from .model import (
    ContactElement,
    LinearMode,
    ReducedModel,
    assemble_dynamic_stiffness,
    craig_bampton_reduce,
    linear_eigen,
    recover_sensor_amplitude,
)
from .timedomain import (
    BracketError,
    NonStationaryError,
    TimeSeries,
    extract_lco,
    find_stability_limit,
    time_integrate,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # harmonics
    "HarmonicSet", "flatten_count",
    # model
    "ReducedModel", "ContactElement", "LinearMode", "linear_eigen",
    "assemble_dynamic_stiffness", "craig_bampton_reduce",
    "recover_sensor_amplitude",
    # contact / AFT
    "AftConfig", "ContactMarchError", "jenkins_march",
    "contact_force_fourier", "contact_force_and_jacobian",
    "contact_jacobian", "contact_dissipated_work", "max_potential_energy",
    "steady_contact_samples",
    # structural harmonic balance
    "PhaseAnchor", "NewtonConfig", "NewtonDivergenceError", "AnchorError",
    "StructuralSolution", "structural_residual", "hb_block_matrix",
    "solve_structural", "rotate_to_anchor",
    # nonlinear modes
    "Backbone", "BackbonePoint", "ContinuationConfig", "ContinuationError",
    "epmc_residual", "solve_epmc_point", "continue_backbone",
    "backbone_query", "backbone_point_at",
    # aero
    "AeroInfluenceModel", "influence_matrix", "influence_force",
    "aero_work", "harmonic_supplied_work", "damping_ratio",
    "surrogate_fluid_solve", "SurrogateFluidSolver", "DirectAeroProvider",
    "ExactInfluenceAero",
    # energy methods
    "EnergyLco", "EnergyCurve", "EnergyMethodResult", "OUTCOME_LCOS",
    "OUTCOME_STABLE", "OUTCOME_UNBOUNDED", "mac", "classify_stability",
    "energy_balance_residual", "conventional_energy_lco",
    "refined_energy_lco",
    # coupled solver
    "CoupledConfig", "CouplingTrace", "LcoSolution",
    "CoupledDivergenceError", "LINEARIZATION_VARIANTS", "coupled_solve",
    "linearize_aero", "initialize_from_backbone",
    # time-domain oracle
    "TimeSeries", "NonStationaryError", "BracketError", "time_integrate",
    "extract_lco", "find_stability_limit",
    # benchmark
    "BenchmarkCase", "generate_benchmark", "flutter_curve",
    # io
    "CaseValidationError", "model_to_dict", "model_from_dict",
    "case_to_dict", "case_from_dict", "save_case", "load_case",
    "lco_record", "emit_results", "emit_curve", "emit_timing",
    # verification
    "CriterionResult", "run_acceptance", "format_results",
]
