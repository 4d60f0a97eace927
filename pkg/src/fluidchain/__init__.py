"""Random-walk Metropolis chains on heavy-shouldered planar targets:
drift fields, fluid-limit flows, scaling experiments, and subgeometric
rate utilities."""

__version__ = "0.1.0"

from .chain import (ChainConfig, Trajectory, acceptance_rate_from,
                    martingale_noise_quantile, max_partial_sum_stat, simulate,
                    srwm_step)
from .densities import DENSITY_KEYS, TargetDensity, make_density
from .drift import (FieldEstimate, VectorField, delta_infinity, delta_mc,
                    field_grid, h_field, make_delta_infinity_field,
                    make_h_field)
from .errors import (BudgetError, ConfigError, CoverageError, FluidchainError,
                     InvalidArgumentError, NumericError, SingularConeError,
                     SingularityError, StiffnessError)
from .flow import (FluidPath, SweepResult, branch_flow, closed_absorption_time,
                   closed_form_flow, integrate_flow, stability_sweep)
from .proposals import PROPOSAL_KEYS, Proposal, make_proposal
from .rates import (Custom, DriftReport, KappaReport, Polynomial, drift_check,
                    ergodic_exponents, kappa_diagnostics, rate_sequence)
from .scaling import (ScalingExperiment, ScalingReport, ensemble_experiment,
                      scaled_path, sup_distance)
from .seeding import make_rng, mix64

__all__ = [
    "BudgetError", "ChainConfig", "ConfigError", "CoverageError", "Custom",
    "DENSITY_KEYS", "DriftReport", "FieldEstimate", "FluidPath",
    "FluidchainError", "InvalidArgumentError", "KappaReport", "NumericError",
    "PROPOSAL_KEYS", "Polynomial", "Proposal", "ScalingExperiment",
    "ScalingReport", "SingularConeError", "SingularityError", "StiffnessError",
    "SweepResult", "TargetDensity", "Trajectory", "VectorField",
    "acceptance_rate_from", "branch_flow", "closed_absorption_time",
    "closed_form_flow", "delta_infinity", "delta_mc", "drift_check",
    "ensemble_experiment", "ergodic_exponents", "field_grid", "h_field",
    "integrate_flow", "kappa_diagnostics", "make_delta_infinity_field",
    "make_density", "make_h_field", "make_proposal", "make_rng",
    "martingale_noise_quantile", "max_partial_sum_stat", "mix64",
    "rate_sequence", "scaled_path", "simulate", "srwm_step",
    "stability_sweep", "sup_distance", "__version__",
]
