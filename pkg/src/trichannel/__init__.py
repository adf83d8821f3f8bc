"""Channel-sequence spatial constraints for motion planning in dynamic scenes."""

from .events import EventReport, compute_event_time, neighbors_of
from .funnel import PathPolyline, funnel
from .geometry import (InCircleResult, InCircleSide, NodeKind, NodeState,
                       incircle, orient2d, position_at)
from .mesh import (DegenerateInputError, DualGraph, Mesh, Triangle, build_dual,
                   build_mesh, generate_virtual_nodes, locate)
from .scenario import (ObjectTrack, Scenario, ScenarioFormatError,
                       SyntheticParams, generate_synthetic)
from .search import Channel, astar, edge_gap_at, timed_astar
from .sequencer import (ChannelSegment, ChannelSequence, SequenceFailure,
                        SequencerConfig, generate_sequence)
from .simulate import (Metrics, MethodId, SimConfig, aggregate, plan,
                       run_scenario)
from .transmission import TransmissionConfig, project_velocity, transmit

__version__ = "0.1.0"

__all__ = [
    "Channel",
    "ChannelSegment",
    "ChannelSequence",
    "DegenerateInputError",
    "DualGraph",
    "EventReport",
    "InCircleResult",
    "InCircleSide",
    "Mesh",
    "Metrics",
    "MethodId",
    "NodeKind",
    "NodeState",
    "ObjectTrack",
    "PathPolyline",
    "Scenario",
    "ScenarioFormatError",
    "SequenceFailure",
    "SequencerConfig",
    "SimConfig",
    "SyntheticParams",
    "TransmissionConfig",
    "Triangle",
    "aggregate",
    "astar",
    "build_dual",
    "build_mesh",
    "compute_event_time",
    "edge_gap_at",
    "funnel",
    "generate_sequence",
    "generate_synthetic",
    "generate_virtual_nodes",
    "incircle",
    "locate",
    "neighbors_of",
    "orient2d",
    "plan",
    "position_at",
    "project_velocity",
    "run_scenario",
    "timed_astar",
    "transmit",
]
