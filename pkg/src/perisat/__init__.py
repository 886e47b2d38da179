"""Structured periodic output-feedback synthesis and satellite attitude-control validation."""

from .analysis import (brl_gamma_certificate, closed_loop_maps, frozen_frequency_response,
                       is_periodically_stable, loop_margins, shape_compliance)
from .coprime import coisometry_residual, normalized_coprime_factorization
from .errors import (Blowup, NoBracket, NoConvergence, PerisatError, RdeError,
                     SimulationBlowup, UpperBoundInfeasible)
from .kernels import BACKEND
from .ltp import (GriddedMatrixFunction, LtpSystem, PeriodicMatrixFunction, TimeGrid,
                  TrigMatrixFunction, feedback, lft, series)
from .pipeline import WeightedSynthesis, synthesize_weighted
from .rde import solve_periodic_controller_rde, solve_periodic_filter_rde, solve_periodic_rde
from .satellite import (AbacusParams, DisturbanceModel, build_abacus, simulate_closed_loop,
                        uncertainty_sweep)
from .synthesis import (BisectionConfig, StructuredController, assemble_structured_controller,
                        bisect_gamma)
from .weighting import (ScalingSet, build_weighted_design_plant, make_control_weight,
                        make_sensitivity_weight)

__version__ = "0.1.0"

__all__ = [
    "AbacusParams", "BACKEND", "BisectionConfig", "Blowup", "DisturbanceModel",
    "GriddedMatrixFunction", "LtpSystem", "NoBracket", "NoConvergence", "PerisatError",
    "PeriodicMatrixFunction", "RdeError", "ScalingSet", "SimulationBlowup",
    "StructuredController", "TimeGrid", "TrigMatrixFunction", "UpperBoundInfeasible",
    "WeightedSynthesis", "assemble_structured_controller", "bisect_gamma",
    "brl_gamma_certificate", "build_abacus", "build_weighted_design_plant", "closed_loop_maps",
    "coisometry_residual", "feedback", "frozen_frequency_response", "is_periodically_stable",
    "lft", "loop_margins", "make_control_weight", "make_sensitivity_weight",
    "normalized_coprime_factorization", "series", "shape_compliance", "simulate_closed_loop",
    "solve_periodic_controller_rde", "solve_periodic_filter_rde", "solve_periodic_rde",
    "synthesize_weighted", "uncertainty_sweep",
]
