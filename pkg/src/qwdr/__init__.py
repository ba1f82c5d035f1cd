"""Queue-weighted discrete-review control of multihop wireless networks.

The package simulates a slotted multihop network governed by a discrete
review policy: at backlog-dependent review instants a weighted allocation
problem is solved by distributed incremental gradient ascent, the resulting
time fractions are frozen into an interference-free slot schedule, and the
slot engine moves packets until the next review. Exact desk-scale references
(basic-solution LP, active-set projection, capacity membership) validate the
solver and the stability behaviour.
"""

from .network import (
    FlowSpec,
    LinkFlowIndex,
    NetworkModel,
    QueueMatrix,
    QueueSnapshot,
    SimulationInvariantError,
    build_interference_sets,
    build_link_flow_index,
    differential_backlog,
)
from .oracle import (
    CapacityQuery,
    CapacityResult,
    LinearProgramInstance,
    SizeError,
    capacity_membership,
    enumerate_activation_sets,
    lp_solve_exact,
    mean_rates_from_channel,
    qp_project_exact,
)
from .scenario import (
    ConfigError,
    ScenarioConfig,
    load_scenario,
    make_paper15_scenario,
    scenario_from_dict,
)
from .metrics import FlowMetrics, collect_metrics, compare_runs, flow_metrics, round_half_away_from_zero
from .simulate import RunResult, SlotSchedule, create_schedule, next_review_period, run, step_slot
from .solver import (
    HalfspaceConstraint,
    SolverConfig,
    WeightConfig,
    allocation_objective,
    alternating_projection_pair,
    gradient,
    gradient_vector,
    node_constraints,
    project_onto_halfspace,
    project_pair,
    solve_allocation,
    suboptimality_bound,
    weight,
)
from .stochastic import ArrivalProcess, ChannelModel, ChannelState, achievable_rate

__version__ = "0.1.0"

__all__ = [
    "ArrivalProcess",
    "CapacityQuery",
    "CapacityResult",
    "ChannelModel",
    "ChannelState",
    "ConfigError",
    "FlowMetrics",
    "FlowSpec",
    "HalfspaceConstraint",
    "LinearProgramInstance",
    "LinkFlowIndex",
    "NetworkModel",
    "QueueMatrix",
    "QueueSnapshot",
    "RunResult",
    "ScenarioConfig",
    "SimulationInvariantError",
    "SizeError",
    "SlotSchedule",
    "SolverConfig",
    "WeightConfig",
    "achievable_rate",
    "allocation_objective",
    "alternating_projection_pair",
    "build_interference_sets",
    "build_link_flow_index",
    "capacity_membership",
    "collect_metrics",
    "compare_runs",
    "create_schedule",
    "differential_backlog",
    "enumerate_activation_sets",
    "flow_metrics",
    "gradient",
    "gradient_vector",
    "load_scenario",
    "lp_solve_exact",
    "make_paper15_scenario",
    "mean_rates_from_channel",
    "next_review_period",
    "node_constraints",
    "project_onto_halfspace",
    "project_pair",
    "qp_project_exact",
    "round_half_away_from_zero",
    "run",
    "scenario_from_dict",
    "solve_allocation",
    "step_slot",
    "suboptimality_bound",
    "weight",
]
