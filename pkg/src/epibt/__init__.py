"""Multi-action PIBT solver and lifelong simulator for grid MAPF with rotations."""

from .distance import (
    DistanceCache,
    DistanceMap,
    EdgeWeights,
    WeightsParseError,
    build_distance_map,
    generate_lane_weights,
    h_after,
    parse_edge_weights,
)
from .grid import (
    AgentState,
    GridMap,
    MapParseError,
    Orientation,
    Scenario,
    ScenarioParseError,
    check_cycle_condition,
    format_scenario,
    load_map,
    load_scenario,
)
from .lns import LnsBudget, LnsStats, improve, lns_metric
from .logcheck import LogParseError, Violation, parse_action_log, validate_log
from .operations import (
    Operation,
    OperationSet,
    apply_operation,
    enumerate_operations,
    format_operations,
    pibt5_operation_set,
    reachable_stats,
)
from .planner import (
    Planner,
    PlanState,
    SolverConfig,
    StepResult,
    inherit_ops,
    order_operations,
)
from .reservation import ReservationConflictError, ReservationTable
from .simulator import (
    InternalCollisionError,
    SimConfig,
    SimMetrics,
    assign_next_task,
    run_lifelong,
)

__all__ = [
    "AgentState",
    "DistanceCache",
    "DistanceMap",
    "EdgeWeights",
    "GridMap",
    "InternalCollisionError",
    "LnsBudget",
    "LnsStats",
    "LogParseError",
    "MapParseError",
    "Operation",
    "OperationSet",
    "Orientation",
    "Planner",
    "PlanState",
    "ReservationConflictError",
    "ReservationTable",
    "Scenario",
    "ScenarioParseError",
    "SimConfig",
    "SimMetrics",
    "SolverConfig",
    "StepResult",
    "Violation",
    "WeightsParseError",
    "apply_operation",
    "assign_next_task",
    "build_distance_map",
    "check_cycle_condition",
    "enumerate_operations",
    "format_operations",
    "format_scenario",
    "generate_lane_weights",
    "h_after",
    "improve",
    "inherit_ops",
    "lns_metric",
    "load_map",
    "load_scenario",
    "order_operations",
    "parse_action_log",
    "parse_edge_weights",
    "pibt5_operation_set",
    "reachable_stats",
    "run_lifelong",
    "validate_log",
]

__version__ = "0.1.0"
