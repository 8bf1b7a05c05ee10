"""Static job model: tasks, feasibility functions, layers, skeletons and topologies.

A job is a finite set of tasks. Each task runs on one server, waits an
activation delay once it becomes feasible, and then needs ``processing_time``
units of service. A task's feasibility sets express OR-of-AND dependencies:
the task becomes feasible as soon as every task of *some* set has completed.
"""
from __future__ import annotations

import heapq
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

ServerId = str


def server_sort_key(server: ServerId):
    """Natural ordering for server identifiers (``s2`` before ``s10``)."""
    parts = re.split(r"(\d+)", str(server))
    return tuple((0, int(p)) if p.isdigit() else (1, p) for p in parts if p)


@dataclass(frozen=True)
class TaskSpec:
    task_id: int
    server: ServerId
    activation_delay: Fraction
    processing_time: Fraction
    feasibility: tuple[frozenset[int], ...] = (frozenset(),)

    @property
    def is_initial(self) -> bool:
        return frozenset() in self.feasibility


@dataclass(frozen=True)
class JobSpec:
    name: str
    tasks: tuple[TaskSpec, ...]

    @property
    def length(self) -> int:
        return len(self.tasks)

    @property
    def feasibility(self) -> dict[int, tuple[frozenset[int], ...]]:
        return {t.task_id: t.feasibility for t in self.tasks}

    def task(self, task_id: int) -> TaskSpec:
        for t in self.tasks:
            if t.task_id == task_id:
                return t
        raise KeyError(task_id)

    def server_loads(self) -> dict[ServerId, Fraction]:
        loads: dict[ServerId, Fraction] = {}
        for t in self.tasks:
            loads[t.server] = loads.get(t.server, Fraction(0)) + t.processing_time
        return loads


def make_job(name: str, rows: Iterable[tuple], default_server: ServerId = "s1") -> JobSpec:
    """Build a job from compact rows ``(task_id, feasibility[, server[, delay[, time]]])``.

    ``feasibility`` is an iterable of iterables of task ids; ``[[]]`` marks an
    initial task.
    """
    tasks = []
    for row in rows:
        task_id, sets, *rest = row
        server = rest[0] if len(rest) > 0 else default_server
        delay = Fraction(rest[1]) if len(rest) > 1 else Fraction(0)
        ptime = Fraction(rest[2]) if len(rest) > 2 else Fraction(1)
        tasks.append(TaskSpec(task_id, server, delay, ptime, tuple(frozenset(s) for s in sets)))
    return JobSpec(name, tuple(tasks))


@dataclass(frozen=True)
class Limits:
    """Declared system-wide limits. ``None`` means unconstrained."""

    max_length: int | None = None
    t_min: Fraction | None = None
    t_max: Fraction | None = None
    d_max: Fraction | None = None
    burstiness: Fraction | None = None


def validate_job(job: JobSpec, servers: Iterable[ServerId] | None = None,
                 limits: Limits | None = None) -> list[str]:
    """Return human-readable violations; an empty list means the job is well formed."""
    problems: list[str] = []
    known_servers = set(servers) if servers is not None else None
    limits = limits or Limits()
    ids = [t.task_id for t in job.tasks]
    id_set = set(ids)

    if not job.tasks:
        problems.append(f"job {job.name}: must contain at least one task")
    if len(id_set) != len(ids):
        problems.append(f"job {job.name}: duplicate task ids")
    if limits.max_length is not None and job.length > limits.max_length:
        problems.append(f"job {job.name}: {job.length} tasks exceeds maximum job length {limits.max_length}")

    for t in job.tasks:
        where = f"job {job.name} task {t.task_id}"
        if t.processing_time <= 0:
            problems.append(f"{where}: processing_time must be positive")
        if t.activation_delay < 0:
            problems.append(f"{where}: activation_delay must be nonnegative")
        if known_servers is not None and t.server not in known_servers:
            problems.append(f"{where}: unknown server {t.server!r}")
        if not t.feasibility:
            problems.append(f"{where}: feasibility function has no feasibility sets")
        for fs in t.feasibility:
            if not fs <= id_set:
                missing = sorted(fs - id_set)
                problems.append(f"{where}: feasibility set references unknown task {missing}")
            if t.task_id in fs:
                problems.append(f"{where}: feasibility set contains the task itself")
        if limits.t_min is not None and t.processing_time < limits.t_min:
            problems.append(f"{where}: processing_time {t.processing_time} below declared T_min {limits.t_min}")
        if limits.t_max is not None and t.processing_time > limits.t_max:
            problems.append(f"{where}: processing_time {t.processing_time} above declared T_max {limits.t_max}")
        if limits.d_max is not None and t.activation_delay > limits.d_max:
            problems.append(f"{where}: activation_delay {t.activation_delay} above declared D_max {limits.d_max}")
        if limits.burstiness is not None and t.processing_time > limits.burstiness:
            problems.append(f"{where}: processing_time {t.processing_time} exceeds burstiness {limits.burstiness}")
    return problems


@dataclass(frozen=True)
class LayerMap:
    layers: Mapping[int, int]
    unassigned: frozenset[int]
    passes: int = 0
    set_checks: int = 0

    @property
    def doable(self) -> bool:
        return not self.unassigned

    @property
    def layer_count(self) -> int:
        return max(self.layers.values(), default=0)


def assign_layers(job: JobSpec) -> LayerMap:
    """Layer closure: layer ``j`` holds the tasks that become feasible once
    layers ``1..j-1`` are complete. Tasks never reached stay unassigned."""
    layers: dict[int, int] = {}
    pending = [t for t in job.tasks]
    done: set[int] = set()
    passes = checks = 0
    level = 0
    while pending:
        level += 1
        passes += 1
        reached, rest = [], []
        for t in pending:
            hit = False
            for fs in t.feasibility:
                checks += 1
                if fs <= done:
                    hit = True
                    break
            (reached if hit else rest).append(t)
        if not reached:
            break
        for t in reached:
            layers[t.task_id] = level
        done.update(t.task_id for t in reached)
        pending = rest
    return LayerMap(layers, frozenset(t.task_id for t in pending), passes, checks)


def is_doable(job: JobSpec) -> bool:
    return assign_layers(job).doable


def distance_from_source(job: JobSpec, task_id: int, layer_map: LayerMap | None = None) -> int:
    lm = layer_map or assign_layers(job)
    if task_id not in lm.layers:
        raise ValueError(f"task {task_id} of job {job.name} has no layer")
    return lm.layers[task_id] - 1


def distance_to_go(job: JobSpec, task_id: int, layer_map: LayerMap | None = None) -> int:
    lm = layer_map or assign_layers(job)
    if not lm.doable or task_id not in lm.layers:
        raise ValueError(f"job {job.name} is not doable; distance to go is undefined")
    return lm.layer_count - lm.layers[task_id]


@dataclass(frozen=True)
class TopologyGraph:
    """Simple directed graph (edge multiplicity dropped; self-loops allowed)."""

    nodes: frozenset = field(default_factory=frozenset)
    edges: frozenset = field(default_factory=frozenset)

    def successors(self, node) -> list:
        return [v for (u, v) in self.edges if u == node]

    def sorted_edges(self, key=None) -> list[tuple]:
        key = key or (lambda x: x)
        return sorted(self.edges, key=lambda e: (key(e[0]), key(e[1])))


def skeleton(job: JobSpec) -> TopologyGraph:
    edges = {(dep, t.task_id) for t in job.tasks for fs in t.feasibility for dep in fs}
    return TopologyGraph(frozenset(t.task_id for t in job.tasks), frozenset(edges))


def job_topology(job: JobSpec) -> TopologyGraph:
    server_of = {t.task_id: t.server for t in job.tasks}
    sk = skeleton(job)
    return TopologyGraph(frozenset(server_of.values()),
                         frozenset((server_of[u], server_of[v]) for u, v in sk.edges))


def system_topology(jobs: Iterable[JobSpec], servers: Iterable[ServerId] = ()) -> TopologyGraph:
    nodes = set(servers)
    edges = set()
    for job in jobs:
        topo = job_topology(job)
        nodes |= topo.nodes
        edges |= topo.edges
    return TopologyGraph(frozenset(nodes), frozenset(edges))


def feed_forward_order(topology: TopologyGraph) -> list[ServerId] | None:
    """Topological order of the servers, or ``None`` if the digraph has a cycle.

    A self-loop is a cycle. Ready nodes are released in natural identifier order.
    """
    if any(u == v for u, v in topology.edges):
        return None
    indegree = {n: 0 for n in topology.nodes}
    succ: dict = {n: [] for n in topology.nodes}
    for u, v in topology.edges:
        indegree.setdefault(u, 0)
        indegree[v] = indegree.get(v, 0) + 1
        succ.setdefault(u, []).append(v)
        succ.setdefault(v, [])
    ready = [(server_sort_key(n), n) for n, d in indegree.items() if d == 0]
    heapq.heapify(ready)
    order = []
    while ready:
        _, n = heapq.heappop(ready)
        order.append(n)
        for m in succ[n]:
            indegree[m] -= 1
            if indegree[m] == 0:
                heapq.heappush(ready, (server_sort_key(m), m))
    return order if len(order) == len(indegree) else None


def derive_limits(jobs: Sequence[JobSpec]) -> Limits:
    """Limits computed from the jobs themselves (T_min, T_max, D_max, L)."""
    tasks = [t for j in jobs for t in j.tasks]
    if not tasks:
        return Limits(0, None, None, Fraction(0))
    return Limits(
        max_length=max(j.length for j in jobs),
        t_min=min(t.processing_time for t in tasks),
        t_max=max(t.processing_time for t in tasks),
        d_max=max(t.activation_delay for t in tasks),
    )
