"""Asymptotic risk theory and Monte Carlo simulation for random-features ridge regression.

The package computes the exact proportional-asymptotics test error, training
error, and coefficient norm of ridge-regularized random-features regression,
and simulates the finite-dimensional model to validate those predictions.
"""

__version__ = "0.1.0"

from .activations import (
    Activation,
    DegenerateActivation,
    HermiteStats,
    QuadratureFailure,
    gauss_hermite_expectation,
    hermite_stats,
)
from .selfconsistent import (
    InconsistentChi,
    InvariantViolation,
    NoConvergence,
    RootSelectionAmbiguous,
    SingularDenominator,
    SolverConfig,
    SpectralParams,
    SpectralPoint,
    chi_scalar_oracle,
    fixed_point_map,
    nu_from_chi,
    solve_at,
)
from .risk import (
    ChiDisagreement,
    DenominatorVanishes,
    NonUnimodalWarning,
    PhaseQuantities,
    RiskDecomposition,
    TargetSpec,
    ThresholdSingularity,
    optimal_lambda,
    ridgeless_chi,
    risk_general,
    risk_large_sample,
    risk_ridgeless,
    risk_wide,
    test_error,
    wide_omega,
    wide_phase,
    wide_risk_in_omega,
)
from .training import TrainingAsymptotics, training_theory
from .simulate import (
    AggregateResult,
    FitResult,
    IllConditionedWarning,
    InsufficientTrials,
    SimConfig,
    SmallTestSetWarning,
    TargetKind,
    TrialResult,
    aggregate,
    build_design,
    nonlinear_power,
    ridge_fit,
    run_gaussian_covariates_trial,
    run_trial,
    run_trials,
    sample_sphere,
    substream,
)

__all__ = [name for name in dir() if not name.startswith("_")]
