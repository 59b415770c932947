"""State-space view of adaptive gradient optimizers.

The package has three layers:

- continuous time: a nine-parameter family of optimizer flows (core, flow)
  with validation of the convergence conditions and fixed-step integrators;
- discrete time: the matching steppers (discrete), including the two-state
  second-moment methods and classical baselines;
- analysis and tooling: transfer-function/pole-zero analysis of the
  second-moment dynamic (analysis), synthetic objectives with gradient
  oracles (objectives), and a JSON-config experiment harness with a CLI
  (harness, cli).
"""

from .analysis import (
    DegreeError,
    RationalTF,
    SecondMomentLTI,
    adamssm_tf,
    dc_gain,
    impulse_response,
    poles_zeros,
    second_moment_response,
    stability_quantity_p,
    state_transition_entries,
    state_transition_matrix,
    step_response,
)
from .core import (
    DomainError,
    FlowState,
    OptimizerParams,
    PresetKind,
    PresetParams,
    PsiFunction,
    PsiKind,
    ValidationError,
    alpha_g,
    initial_flow_state,
    make_psi,
    map_preset_to_general,
    validate_params,
    validate_preset,
)
from .discrete import (
    BIAS_MODES,
    InstabilityError,
    LrSchedule,
    RunReport,
    StepperState,
    bias_alpha,
    bias_denominators,
    initial_stepper_state,
    run_discrete,
    step_adabelief,
    step_adam,
    step_adamssm,
    step_gadagrad,
    step_sgd_momentum,
)
from .flow import (
    FlowProblem,
    PresetMismatch,
    StepFailure,
    Trajectory,
    gadagrad_energy_residual,
    integrate_euler,
    integrate_reference,
    make_flow_problem,
    preset_flow,
    rhs_general,
)
from .harness import (
    ExperimentConfig,
    ObjectiveSpec,
    OptimizerSpec,
    ParseError,
    build_objective,
    default_x0,
    emit_summary,
    load_config,
    run_compare,
    run_experiment,
    run_flows,
)
from .objectives import (
    Objective,
    finite_diff_grad,
    make_logistic,
    make_quadratic,
    make_rosenbrock,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # core
    "DomainError",
    "FlowState",
    "OptimizerParams",
    "PresetKind",
    "PresetParams",
    "PsiFunction",
    "PsiKind",
    "ValidationError",
    "alpha_g",
    "initial_flow_state",
    "make_psi",
    "map_preset_to_general",
    "validate_params",
    "validate_preset",
    # flow
    "FlowProblem",
    "PresetMismatch",
    "StepFailure",
    "Trajectory",
    "gadagrad_energy_residual",
    "integrate_euler",
    "integrate_reference",
    "make_flow_problem",
    "preset_flow",
    "rhs_general",
    # discrete
    "BIAS_MODES",
    "InstabilityError",
    "LrSchedule",
    "RunReport",
    "StepperState",
    "bias_alpha",
    "bias_denominators",
    "initial_stepper_state",
    "run_discrete",
    "step_adabelief",
    "step_adam",
    "step_adamssm",
    "step_gadagrad",
    "step_sgd_momentum",
    # analysis
    "DegreeError",
    "RationalTF",
    "SecondMomentLTI",
    "adamssm_tf",
    "dc_gain",
    "impulse_response",
    "poles_zeros",
    "second_moment_response",
    "stability_quantity_p",
    "state_transition_entries",
    "state_transition_matrix",
    "step_response",
    # objectives
    "Objective",
    "finite_diff_grad",
    "make_logistic",
    "make_quadratic",
    "make_rosenbrock",
    # harness
    "ExperimentConfig",
    "ObjectiveSpec",
    "OptimizerSpec",
    "ParseError",
    "build_objective",
    "default_x0",
    "emit_summary",
    "load_config",
    "run_compare",
    "run_experiment",
    "run_flows",
]
