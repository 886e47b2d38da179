"""End-to-end weighted synthesis: filter RDE, coprime gain, bisection, controller assembly."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

from .coprime import _filter_gain
from .ltp import LtpSystem, PeriodicMatrixFunction, TimeGrid
from .rde import DEFAULT_MAX_PERIODS, DEFAULT_TOL, PeriodicRdeSolution, solve_periodic_filter_rde
from .synthesis import BisectionConfig, BisectionResult, StructuredController, bisect_state_feedback
from .weighting import (ScalingSet, WeightedDesignPlant, assemble_weighted_controller,
                        build_weighted_design_plant, weighted_closed_loop)

__all__ = ["WeightedSynthesis", "synthesize_weighted"]


@dataclass(eq=False)
class WeightedSynthesis:
    design: WeightedDesignPlant
    Y: PeriodicRdeSolution
    L: PeriodicMatrixFunction
    bisection: BisectionResult
    controller: StructuredController
    timings: dict = field(default_factory=dict)

    @property
    def gamma_opt(self) -> float:
        return self.bisection.gamma_opt

    @property
    def gamma_achieved(self) -> float:
        return self.bisection.gamma_achieved

    def closed_loop(self) -> LtpSystem:
        return weighted_closed_loop(self.design, self.controller)


def synthesize_weighted(plant: LtpSystem, We: LtpSystem, Wu: LtpSystem, scalings: ScalingSet,
                        grid: TimeGrid, cfg: BisectionConfig | None = None,
                        tol: float = DEFAULT_TOL, max_periods: int = DEFAULT_MAX_PERIODS,
                        substeps: int | None = None) -> WeightedSynthesis:
    """Filter gain on the scaled plant, then the bisected state-feedback gain on the augmented state."""
    cfg = cfg or BisectionConfig()
    timings = {}
    t0 = time.perf_counter()
    design = build_weighted_design_plant(plant, We, Wu, scalings)
    Y = solve_periodic_filter_rde(design.filter_system, grid, tol, max_periods, substeps)
    L = _filter_gain(design.filter_system, Y)
    t1 = time.perf_counter()
    timings["filter_s"] = t1 - t0
    result = bisect_state_feedback(design.state_feedback_problem(L), cfg, grid, tol,
                                   max_periods, substeps)
    t2 = time.perf_counter()
    timings["bisection_s"] = t2 - t1
    controller = assemble_weighted_controller(plant, L, result.F, We, Wu, scalings,
                                              result.gamma_achieved, result.gamma_opt)
    timings["synthesis_total_s"] = time.perf_counter() - t0
    return WeightedSynthesis(design, Y, L, result, controller, timings)
