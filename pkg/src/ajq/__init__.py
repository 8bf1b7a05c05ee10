"""Adversarial job queueing: static job analysis, exact-time simulation and stability checks."""
from .adversary import (Injection, InjectionTrace, RbBound, from_aqt, from_caqt, generate_bounded_trace,
                        make_trace, min_burstiness, verify_rb_bound)
from .engine import Scenario, emit_event_log, run, simulate
from .model import (JobSpec, LayerMap, Limits, TaskSpec, TopologyGraph, assign_layers, distance_from_source,
                    distance_to_go, feed_forward_order, is_doable, make_job, skeleton, system_topology,
                    validate_job)
from .policies import PolicyId, QueueEntry, select

__all__ = [
    "Injection", "InjectionTrace", "RbBound", "from_aqt", "from_caqt", "generate_bounded_trace", "make_trace",
    "min_burstiness", "verify_rb_bound", "Scenario", "emit_event_log", "run", "simulate", "JobSpec", "LayerMap",
    "Limits", "TaskSpec", "TopologyGraph", "assign_layers", "distance_from_source", "distance_to_go",
    "feed_forward_order", "is_doable", "make_job", "skeleton", "system_topology", "validate_job", "PolicyId",
    "QueueEntry", "select",
]
