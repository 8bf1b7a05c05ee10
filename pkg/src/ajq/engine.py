"""Exact-time event-driven simulation of an adversarial job queueing system.

All instants are :class:`fractions.Fraction`. Within one instant the engine
runs fixed phases, in this order:

1. service completions
2. removal of jobs whose tasks are all complete
3. feasibility re-evaluation (blocked -> delayed)
4. activations whose delay expires now (delayed -> active)
5. injections scheduled now (initial tasks become feasible at once)
6. every idle server with active work starts its policy's choice

Service is non-preemptive and servers are work conserving.
"""
from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable

from .adversary import InjectionTrace
from .model import JobSpec, ServerId, assign_layers, server_sort_key
from .policies import PolicyId, QueueEntry, priority_key

BLOCKED, DELAYED, ACTIVE, IN_SERVICE, COMPLETED = "blocked", "delayed", "active", "in-service", "completed"

PHASE_COMPLETE, PHASE_REMOVE, PHASE_FEASIBLE, PHASE_ACTIVATE, PHASE_INJECT, PHASE_SCHEDULE = range(1, 7)
PHASE_END = 7


@dataclass(frozen=True)
class Scenario:
    servers: tuple[ServerId, ...]
    trace: InjectionTrace
    policy: PolicyId
    horizon: Fraction

    def __post_init__(self):
        object.__setattr__(self, "policy", PolicyId.parse(self.policy))
        object.__setattr__(self, "horizon", Fraction(self.horizon))
        object.__setattr__(self, "servers", tuple(sorted(self.servers, key=server_sort_key)))


@dataclass(frozen=True)
class SimEvent:
    time: Fraction
    phase: int
    kind: str  # injected | feasible | active | start | complete | job-done | truncated
    job: int
    task: int | None = None
    server: ServerId | None = None


@dataclass
class StepSeries:
    """Right-continuous step function stored as change points."""

    points: list = field(default_factory=list)

    def record(self, t, value):
        if self.points and self.points[-1][1] == value:
            return
        if self.points and self.points[-1][0] == t:
            self.points[-1] = (t, value)
            if len(self.points) > 1 and self.points[-2][1] == value:
                self.points.pop()
        else:
            self.points.append((t, value))

    def value_at(self, t):
        value = 0
        for pt, v in self.points:
            if pt > t:
                break
            value = v
        return value

    def peak(self):
        return max((v for _, v in self.points), default=0)

    def final(self):
        return self.points[-1][1] if self.points else 0


@dataclass
class JobRecord:
    sequence: int
    name: str
    injected: Fraction
    completed: Fraction | None = None
    task_completions: dict = field(default_factory=dict)

    @property
    def sojourn(self) -> Fraction | None:
        return None if self.completed is None else self.completed - self.injected


@dataclass
class MetricsSeries:
    servers: tuple
    horizon: Fraction
    queue: dict = field(default_factory=dict)  # Q_s(t): active tasks waiting
    drain: dict = field(default_factory=dict)  # tau_s(t): sum of t_i of uncompleted tasks
    total_queued: StepSeries = field(default_factory=StepSeries)
    oldest_age: list = field(default_factory=list)  # (T, T - g_T) sampled before removals
    max_age: Fraction = Fraction(0)  # running maximum of T - g_T
    jobs: dict = field(default_factory=dict)  # sequence -> JobRecord

    def completed_jobs(self) -> list[JobRecord]:
        return [j for j in self.jobs.values() if j.completed is not None]

    def peak_queue(self, server) -> int:
        return self.queue[server].peak()

    def peak_drain(self, server):
        return self.drain[server].peak()


@dataclass
class RunResult:
    scenario: Scenario
    events: list
    metrics: MetricsSeries
    truncated: list  # (job sequence, task id) in service at the horizon


class _Task:
    __slots__ = ("job", "spec", "layer", "state", "since", "entry")

    def __init__(self, job, spec, layer):
        self.job = job
        self.spec = spec
        self.layer = layer
        self.state = BLOCKED
        self.since = None
        self.entry = None


class _Job:
    __slots__ = ("seq", "spec", "injected", "layers", "tasks", "done", "record")

    def __init__(self, seq, spec, injected, layer_map, record):
        self.seq = seq
        self.spec = spec
        self.injected = injected
        self.layers = layer_map.layer_count
        self.tasks = {t.task_id: _Task(self, t, layer_map.layers.get(t.task_id)) for t in spec.tasks}
        self.done = set()
        self.record = record


class Simulator:
    def __init__(self, scenario: Scenario, require_doable: bool = True):
        self.scenario = scenario
        self.policy = scenario.policy
        self.horizon = scenario.horizon
        problems = scenario.trace.problems()
        if not require_doable:
            problems = [p for p in problems if "not doable" not in p]
        known = set(scenario.servers)
        for inj in scenario.trace:
            for t in inj.job.tasks:
                if t.server not in known:
                    problems.append(f"injection {inj.sequence}: task {t.task_id} uses unknown server {t.server!r}")
        if problems:
            raise ValueError("invalid trace: " + "; ".join(problems))

    def run(self) -> RunResult:
        sc = self.scenario
        servers = sc.servers
        events: list[SimEvent] = []
        metrics = MetricsSeries(servers, self.horizon)
        for s in servers:
            metrics.queue[s] = StepSeries()
            metrics.drain[s] = StepSeries()
        queues = {s: [] for s in servers}
        busy: dict[ServerId, _Task | None] = {s: None for s in servers}
        drain = {s: Fraction(0) for s in servers}
        completions: dict[Fraction, list] = {}
        expiries: dict[Fraction, list] = {}
        instants: list[Fraction] = []
        pending_instants = set()
        in_system: dict[int, _Job] = {}  # insertion order == injection order
        layer_cache: dict[int, object] = {}
        counter = itertools.count()
        injections = list(sc.trace)
        next_inj = 0

        def at(t, table, item):
            table.setdefault(t, []).append(item)
            if t not in pending_instants:
                pending_instants.add(t)
                heapq.heappush(instants, t)

        def log(t, phase, kind, job, task=None, server=None):
            events.append(SimEvent(t, phase, kind, job, task, server))

        def activate(task, t, phase):
            task.state = ACTIVE
            task.since = t
            spec = task.spec
            entry = QueueEntry(task.job.injected, task.job.seq, spec.task_id, t, spec.activation_delay,
                               spec.processing_time, task.layer, task.job.layers)
            heapq.heappush(queues[spec.server], (priority_key(entry, self.policy), next(counter), task))
            log(t, phase, "active", task.job.seq, spec.task_id, spec.server)

        def make_feasible(task, t, phase, zero_delay):
            task.state = DELAYED
            task.since = t
            log(t, phase, "feasible", task.job.seq, task.spec.task_id, task.spec.server)
            if task.spec.activation_delay == 0:
                zero_delay.append(task)
            else:
                at(t + task.spec.activation_delay, expiries, task)

        while True:
            t_heap = instants[0] if instants else None
            t_inj = injections[next_inj].time if next_inj < len(injections) else None
            candidates = [x for x in (t_heap, t_inj) if x is not None]
            if not candidates:
                break
            t = min(candidates)
            if t > self.horizon:
                break
            if t_heap == t:
                heapq.heappop(instants)
                pending_instants.discard(t)

            if in_system:
                oldest = next(iter(in_system.values()))
                age = t - oldest.injected
                metrics.oldest_age.append((t, age))
                if age > metrics.max_age:
                    metrics.max_age = age

            # 1. service completions
            touched: dict[int, _Job] = {}
            for task in sorted(completions.pop(t, []), key=lambda x: server_sort_key(x.spec.server)):
                spec = task.spec
                task.state = COMPLETED
                task.since = t
                busy[spec.server] = None
                drain[spec.server] -= spec.processing_time
                job = task.job
                job.done.add(spec.task_id)
                job.record.task_completions[spec.task_id] = t
                touched[job.seq] = job
                log(t, PHASE_COMPLETE, "complete", job.seq, spec.task_id, spec.server)

            # 2. job removal
            for seq in sorted(touched):
                job = touched[seq]
                if len(job.done) == len(job.tasks):
                    job.record.completed = t
                    del in_system[seq]
                    log(t, PHASE_REMOVE, "job-done", seq)

            # 3. feasibility
            zero_delay: list[_Task] = []
            for seq in sorted(touched):
                job = touched[seq]
                if seq not in in_system:
                    continue
                for tid in sorted(job.tasks):
                    task = job.tasks[tid]
                    if task.state is BLOCKED and any(fs <= job.done for fs in task.spec.feasibility):
                        make_feasible(task, t, PHASE_FEASIBLE, zero_delay)

            # 4. activations
            ready = zero_delay + expiries.pop(t, [])
            for task in sorted(ready, key=lambda x: (x.job.seq, x.spec.task_id)):
                activate(task, t, PHASE_ACTIVATE)

            # 5. injections
            while next_inj < len(injections) and injections[next_inj].time == t:
                inj = injections[next_inj]
                next_inj += 1
                key = id(inj.job)
                if key not in layer_cache:
                    layer_cache[key] = (inj.job, assign_layers(inj.job))
                job = _Job(inj.sequence, inj.job, t, layer_cache[key][1],
                           JobRecord(inj.sequence, inj.job.name, t))
                metrics.jobs[job.seq] = job.record
                in_system[job.seq] = job
                log(t, PHASE_INJECT, "injected", job.seq)
                zero_delay = []
                for tid in sorted(job.tasks):
                    task = job.tasks[tid]
                    drain[task.spec.server] += task.spec.processing_time
                    if task.spec.is_initial:
                        make_feasible(task, t, PHASE_INJECT, zero_delay)
                for task in zero_delay:
                    activate(task, t, PHASE_INJECT)

            # 6. scheduling
            for s in servers:
                if busy[s] is None and queues[s]:
                    _, _, task = heapq.heappop(queues[s])
                    task.state = IN_SERVICE
                    task.since = t
                    busy[s] = task
                    at(t + task.spec.processing_time, completions, task)
                    log(t, PHASE_SCHEDULE, "start", task.job.seq, task.spec.task_id, s)

            total = 0
            for s in servers:
                q = len(queues[s])
                total += q
                metrics.queue[s].record(t, q)
                metrics.drain[s].record(t, drain[s])
            metrics.total_queued.record(t, total)

        if in_system:
            oldest = next(iter(in_system.values()))
            age = self.horizon - oldest.injected
            metrics.oldest_age.append((self.horizon, age))
            metrics.max_age = max(metrics.max_age, age)

        truncated = []
        for s in servers:
            task = busy[s]
            if task is not None:
                truncated.append((task.job.seq, task.spec.task_id))
                log(self.horizon, PHASE_END, "truncated", task.job.seq, task.spec.task_id, s)
        return RunResult(sc, events, metrics, truncated)


def run(scenario: Scenario, require_doable: bool = True) -> RunResult:
    return Simulator(scenario, require_doable).run()


def simulate(servers: Iterable[ServerId], trace: InjectionTrace, policy, horizon) -> RunResult:
    return run(Scenario(tuple(servers), trace, PolicyId.parse(policy), Fraction(horizon)))


def format_time(t: Fraction) -> str:
    t = Fraction(t)
    return str(t.numerator) if t.denominator == 1 else f"{t.numerator}/{t.denominator}"


LOG_HEADER = "# ajq event log v1\ntime,phase,kind,job,task,server\n"


def emit_event_log(events: list[SimEvent]) -> str:
    """Canonical text form: one CSV record per transition, in engine order."""
    lines = [LOG_HEADER]
    for e in events:
        task = "-" if e.task is None else str(e.task)
        server = "-" if e.server is None else e.server
        lines.append(f"{format_time(e.time)},{e.phase},{e.kind},{e.job},{task},{server}\n")
    return "".join(lines)
