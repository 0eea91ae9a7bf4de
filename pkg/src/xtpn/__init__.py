"""Extended time Petri nets: model, exact-time simulation, transformations and file formats."""

from .engine import SimConfig, SimulationError, ZeroTimeCascadeError, collect_stats, next_relevant, simulate, step
from .multiset import ReadArcMode, RemovalPolicy, TokenBag
from .net import Arc, ArcKind, PlaceSpec, TransitionSpec, Violation, XtpnNet, validate
from .netio import ParseError, parse_net, read_trace, serialize_net, write_stats, write_trace
from .sampling import FixedSampler, SeededSampler
from .state import Active, Inactive, NetState, Producing, initial_state, is_active
from .timeval import INF, format_time, parse_time
from .trace import EventKind, Trace, TraceRecord
from .transform import ElementClass, classify_net, transform_element

__version__ = "0.1.0"

__all__ = [
    "Active", "Arc", "ArcKind", "ElementClass", "EventKind", "FixedSampler", "INF", "Inactive",
    "NetState", "ParseError", "PlaceSpec", "Producing", "ReadArcMode", "RemovalPolicy",
    "SeededSampler", "SimConfig", "SimulationError", "TokenBag", "Trace", "TraceRecord",
    "TransitionSpec", "Violation", "XtpnNet", "ZeroTimeCascadeError", "classify_net",
    "collect_stats", "format_time", "initial_state", "is_active", "next_relevant", "parse_net",
    "parse_time", "read_trace", "serialize_net", "simulate", "step", "transform_element",
    "validate", "write_stats", "write_trace",
]
