"""Design-time building-evacuation planning toolkit."""

from .plan import BuildingPlan, Door, Room, load_plan, load_plan_file, save_plan
from .grid import (
    NetworkParams,
    RiskSchedule,
    build_grid,
    build_static_network,
    select_cell_size,
    time_expand,
)
from .evac import (
    CongestionCurve,
    EvacuationProblem,
    evacuation_profile,
    exit_width_sweep,
    max_outflow,
    min_evac_time,
    problem_from_plan,
    shortest_path_subgraph,
    time_decomposed_solve,
)

__version__ = "0.1.0"

__all__ = [
    "BuildingPlan", "Door", "Room", "load_plan", "load_plan_file", "save_plan",
    "NetworkParams", "RiskSchedule", "build_grid", "build_static_network",
    "select_cell_size", "time_expand",
    "CongestionCurve", "EvacuationProblem", "evacuation_profile",
    "exit_width_sweep", "max_outflow", "min_evac_time", "problem_from_plan",
    "shortest_path_subgraph", "time_decomposed_solve",
]
