"""Deterministic discrete-event simulator for the allocation schemes."""

from .engine import EventPhase, EventScheduler, Network, NonQuiescent, SimEvent
from .metrics import Distribution, JoinMetrics, JoinOutcome, MetricsCollector, MetricsRecord
from .scenario import Scheme, SimOptions, Simulation, run_scenario
from .topology import (
    ScheduleKind,
    SimulationError,
    Topology,
    TopologyKind,
    TopologySpec,
    TopologyUnsatisfiable,
    build_topology,
    join_schedule,
)

__all__ = [
    "EventPhase",
    "EventScheduler",
    "Network",
    "NonQuiescent",
    "SimEvent",
    "Distribution",
    "JoinMetrics",
    "JoinOutcome",
    "MetricsCollector",
    "MetricsRecord",
    "Scheme",
    "SimOptions",
    "Simulation",
    "run_scenario",
    "ScheduleKind",
    "SimulationError",
    "Topology",
    "TopologyKind",
    "TopologySpec",
    "TopologyUnsatisfiable",
    "build_topology",
    "join_schedule",
]
