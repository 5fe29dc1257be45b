"""Stochastic simulator and analysis toolkit for a self-oscillating
single-electron shuttle engine.

The package evolves the coupled oscillator-dot jump-diffusion dynamics,
keeps full trajectory-level heat/work/entropy ledgers, provides the reduced
driven-dot model and its limit cycle, decomposes the cycle into idealized
strokes, and ships a batch CLI that writes CSV datasets with manifests.
"""

__version__ = "0.1.0"

from .config import ConfigError, ExperimentConfig, load_config, parse_config, validate_config
from .model import ParameterError, Params, fermi, jump_rates, level_energy, rate_matrix, sm_defaults, tunneling_rate
from .reduced import (
    GridMismatchError,
    LimitCycle,
    NoLimitCycleError,
    ReducedTrace,
    StabilityFault,
    compare_to_autonomous,
    limit_cycle,
    parametric_loop_area,
    reduced_laws,
    shoelace_area,
    solve_reduced,
)
from .strokes import StrokeSchedule, build_schedule, cycle_propagate, steady_cycle, stroke_integral, stroke_thermo
from .thermo import PhaseHistogram, ThermoReport, build_report, cycle_matching_conditions, entropies, second_law_check
from .trajectory import EnsembleSeries, ShuttleState, SimulationFault, TrajectoryResult, simulate_ensemble, simulate_trajectory, step

__all__ = [
    "__version__",
    "ConfigError",
    "EnsembleSeries",
    "ExperimentConfig",
    "GridMismatchError",
    "LimitCycle",
    "NoLimitCycleError",
    "ParameterError",
    "Params",
    "PhaseHistogram",
    "ReducedTrace",
    "ShuttleState",
    "SimulationFault",
    "StabilityFault",
    "StrokeSchedule",
    "ThermoReport",
    "TrajectoryResult",
    "build_report",
    "build_schedule",
    "compare_to_autonomous",
    "cycle_matching_conditions",
    "cycle_propagate",
    "entropies",
    "fermi",
    "jump_rates",
    "level_energy",
    "limit_cycle",
    "load_config",
    "parametric_loop_area",
    "parse_config",
    "rate_matrix",
    "reduced_laws",
    "second_law_check",
    "shoelace_area",
    "simulate_ensemble",
    "simulate_trajectory",
    "sm_defaults",
    "solve_reduced",
    "steady_cycle",
    "step",
    "stroke_integral",
    "stroke_thermo",
    "tunneling_rate",
    "validate_config",
]
