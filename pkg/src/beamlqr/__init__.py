"""LQR boundary control of the damped beam: closed-form synthesis,
kernel assembly with convergence diagnostics, and spectral closed-loop
simulation with quadratic-cost verification."""

from .exceptions import (
    BeamLqrError,
    BetaZero,
    ConfigError,
    GridTooCoarse,
    HorizonTooLong,
    IllConditioned,
    InvalidProfile,
    MissingModes,
    NegativeDiscriminant,
    NotDecayed,
    NotStabilizable,
)
from .modal import (
    BeamParams,
    EigenPair,
    ModalGain,
    ModalRiccati,
    ModalWeight,
    closed_loop_eigenvalues,
    closed_loop_matrix,
    mode_gain,
    open_loop_eigenvalues,
    riccati_residuals,
    solve_mode_riccati,
)
from .care import care_oracle, care_residual, solve_lyapunov_2x2
from .kernels import (
    ConvergenceReport,
    ModeSynthesis,
    SineKernel,
    WeightProfile,
    assemble_feedback_kernel,
    assemble_kernel,
    mode_sign,
    synthesize_modal_weights,
    synthesize_modes,
    tail_report,
)
from .sim import (
    CostIdentityReport,
    InitialData,
    ModalState,
    SimConfig,
    Trajectory,
    boundary_control_signal,
    evolve_coupled,
    evolve_decoupled,
    gains_from_solutions,
    input_coefficient,
    modal_energy,
    project_initial,
    pure_mode_state,
    reconstruct,
    run_cost_quadrature,
    simulate,
    spillover_summary,
    verify_cost_identity,
    zero_gains,
)
from .config import RunConfig, load_config, parse_config, serialize_config

__version__ = "0.1.0"

__all__ = [
    "BeamLqrError",
    "BetaZero",
    "ConfigError",
    "GridTooCoarse",
    "HorizonTooLong",
    "IllConditioned",
    "InvalidProfile",
    "MissingModes",
    "NegativeDiscriminant",
    "NotDecayed",
    "NotStabilizable",
    "BeamParams",
    "EigenPair",
    "ModalGain",
    "ModalRiccati",
    "ModalWeight",
    "closed_loop_eigenvalues",
    "closed_loop_matrix",
    "mode_gain",
    "open_loop_eigenvalues",
    "riccati_residuals",
    "solve_mode_riccati",
    "care_oracle",
    "care_residual",
    "solve_lyapunov_2x2",
    "ConvergenceReport",
    "ModeSynthesis",
    "SineKernel",
    "WeightProfile",
    "assemble_feedback_kernel",
    "assemble_kernel",
    "mode_sign",
    "synthesize_modal_weights",
    "synthesize_modes",
    "tail_report",
    "CostIdentityReport",
    "InitialData",
    "ModalState",
    "SimConfig",
    "Trajectory",
    "boundary_control_signal",
    "evolve_coupled",
    "evolve_decoupled",
    "gains_from_solutions",
    "input_coefficient",
    "modal_energy",
    "project_initial",
    "pure_mode_state",
    "reconstruct",
    "run_cost_quadrature",
    "simulate",
    "spillover_summary",
    "verify_cost_identity",
    "zero_gains",
    "RunConfig",
    "load_config",
    "parse_config",
    "serialize_config",
    "__version__",
]
