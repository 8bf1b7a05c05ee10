"""Injection traces, (r, b) load-bound verification, generators and AQT/CAQT translation."""
from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Hashable, Iterable, Mapping, Sequence

from .model import JobSpec, ServerId, TaskSpec, assign_layers, server_sort_key


@dataclass(frozen=True)
class Injection:
    time: Fraction
    sequence: int
    job: JobSpec


@dataclass(frozen=True)
class InjectionTrace:
    injections: tuple[Injection, ...] = ()

    def __len__(self) -> int:
        return len(self.injections)

    def __iter__(self):
        return iter(self.injections)

    @property
    def jobs(self) -> list[JobSpec]:
        return [inj.job for inj in self.injections]

    def problems(self) -> list[str]:
        out = []
        for prev, cur in zip(self.injections, self.injections[1:]):
            if cur.time < prev.time:
                out.append(f"injection {cur.sequence}: time {cur.time} precedes {prev.time}")
            if cur.sequence <= prev.sequence:
                out.append(f"injection {cur.sequence}: sequence numbers must increase")
        for inj in self.injections:
            if inj.time < 0:
                out.append(f"injection {inj.sequence}: negative time")
            lm = assign_layers(inj.job)
            if not lm.doable:
                out.append(f"injection {inj.sequence}: job {inj.job.name} is not doable "
                           f"(unassigned tasks {sorted(lm.unassigned)})")
        return out


def make_trace(pairs: Iterable[tuple]) -> InjectionTrace:
    """Number ``(time, job)`` pairs in input order; times must already be nondecreasing."""
    injections = []
    for seq, (time, job) in enumerate(pairs):
        t = Fraction(time)
        if injections and t < injections[-1].time:
            raise ValueError(f"injection times must be nondecreasing ({t} after {injections[-1].time})")
        injections.append(Injection(t, seq, job))
    return InjectionTrace(tuple(injections))


@dataclass(frozen=True)
class RbBound:
    r: Fraction
    b: Fraction

    def __post_init__(self):
        object.__setattr__(self, "r", Fraction(self.r))
        object.__setattr__(self, "b", Fraction(self.b))
        if not (0 < self.r <= 1):
            raise ValueError(f"injection rate must satisfy 0 < r <= 1, got {self.r}")
        if not self.b > 1:
            raise ValueError(f"burstiness must satisfy b > 1, got {self.b}")


@dataclass(frozen=True)
class Violation:
    server: ServerId
    start: Fraction
    end: Fraction
    load: Fraction
    allowed: Fraction


def server_arrivals(trace: InjectionTrace) -> dict[ServerId, list[tuple[Fraction, Fraction]]]:
    """Per server: sorted ``(instant, total load injected at that instant)``."""
    acc: dict[ServerId, dict[Fraction, Fraction]] = {}
    for inj in trace:
        for server, load in inj.job.server_loads().items():
            per = acc.setdefault(server, {})
            per[inj.time] = per.get(inj.time, Fraction(0)) + load
    return {s: sorted(per.items()) for s, per in acc.items()}


def _max_slack(points: list[tuple[Fraction, Fraction]], r: Fraction) -> Fraction:
    # max over a <= c of load(t_a..t_c) - r (t_c - t_a), in one sweep
    best = None
    best_start = None  # max over a <= c of r t_a - prefix(a-1)
    prefix = Fraction(0)
    for t, load in points:
        cand_start = r * t - prefix
        if best_start is None or cand_start > best_start:
            best_start = cand_start
        prefix += load
        val = prefix - r * t + best_start
        if best is None or val > best:
            best = val
    return best if best is not None else Fraction(0)


def min_burstiness(trace: InjectionTrace, r) -> Fraction:
    """Smallest ``b`` for which the trace satisfies the (r, b) bound at rate ``r``."""
    r = Fraction(r)
    arrivals = server_arrivals(trace)
    return max((_max_slack(pts, r) for pts in arrivals.values()), default=Fraction(0))


def verify_rb_bound(trace: InjectionTrace, bound: RbBound) -> list[Violation]:
    """Every (server, closed interval) whose injected load exceeds ``r|I| + b``.

    Intervals are enumerated with injection instants as endpoints, which is
    exhaustive because load only arrives at those instants.
    """
    out = []
    for server, pts in sorted(server_arrivals(trace).items(), key=lambda kv: server_sort_key(kv[0])):
        if _max_slack(pts, bound.r) <= bound.b:
            continue
        for a in range(len(pts)):
            load = Fraction(0)
            for c in range(a, len(pts)):
                load += pts[c][1]
                allowed = bound.r * (pts[c][0] - pts[a][0]) + bound.b
                if load > allowed:
                    out.append(Violation(server, pts[a][0], pts[c][0], load, allowed))
    return out


def chain_job(name: str, servers: Sequence[ServerId], lengths, delays) -> JobSpec:
    tasks = []
    for i, server in enumerate(servers, start=1):
        sets = (frozenset(),) if i == 1 else (frozenset({i - 1}),)
        tasks.append(TaskSpec(i, server, Fraction(delays[i - 1]), Fraction(lengths[i - 1]), sets))
    return JobSpec(name, tuple(tasks))


def from_aqt(paths: Sequence[Sequence[Hashable]], injections: Iterable[tuple]) -> InjectionTrace:
    """Translate packets into chain jobs: one unit-time, zero-delay task per link.

    ``injections`` holds ``(time, path_index)`` pairs; each link is its own server.
    """
    return from_caqt(paths, [(time, idx, 1) for time, idx in injections])


def from_caqt(paths: Sequence[Sequence[Hashable]], injections: Iterable[tuple],
              link_delays: Mapping[Hashable, object] | None = None) -> InjectionTrace:
    """Continuous-AQT translation.

    ``injections`` holds ``(time, path_index, packet_length)``; every task of the
    packet's job takes ``packet_length`` and waits the propagation delay of its
    link as activation delay.
    """
    link_delays = link_delays or {}
    for i, path in enumerate(paths):
        if not path:
            raise ValueError(f"path {i} is empty")
    pairs = []
    for k, (time, idx, length) in enumerate(injections):
        length = Fraction(length)
        if length <= 0:
            raise ValueError(f"packet {k}: length must be positive, got {length}")
        path = paths[idx]
        delays = [Fraction(link_delays.get(link, 0)) for link in path]
        if any(d < 0 for d in delays):
            raise ValueError(f"packet {k}: negative propagation delay")
        pairs.append((time, chain_job(f"p{k}", [str(link) for link in path], [length] * len(path), delays)))
    return make_trace(pairs)


def generate_bounded_trace(seed: int, servers: Iterable[ServerId], bound: RbBound,
                           templates: Sequence[JobSpec], horizon, step=Fraction(1, 4),
                           attempts: int = 1, spread: int = 1) -> InjectionTrace:
    """Seeded random trace that satisfies the (r, b) bound by construction.

    Per-server token buckets fill at rate ``r`` up to ``b``; a job drawn from
    ``templates`` is injected only if every server it loads holds enough tokens.
    Candidate instants advance by ``step`` times a random factor in ``1..spread``.
    """
    rng = random.Random(seed)
    servers = set(servers)
    loads = [tpl.server_loads() for tpl in templates]
    for tpl, load in zip(templates, loads):
        if not assign_layers(tpl).doable:
            raise ValueError(f"template {tpl.name} is not doable")
        for s, amount in load.items():
            if s not in servers:
                raise ValueError(f"template {tpl.name} uses unknown server {s!r}")
            if amount > bound.b:
                raise ValueError(f"template {tpl.name} puts load {amount} on {s}, above burst cap {bound.b}")
    tokens = {s: bound.b for s in servers}
    horizon = Fraction(horizon)
    step = Fraction(step)
    t = last = Fraction(0)
    pairs = []
    while t <= horizon:
        for s in tokens:
            tokens[s] = min(bound.b, tokens[s] + bound.r * (t - last))
        last = t
        for _ in range(attempts):
            k = rng.randrange(len(templates))
            if all(tokens[s] >= amount for s, amount in loads[k].items()):
                for s, amount in loads[k].items():
                    tokens[s] -= amount
                pairs.append((t, templates[k]))
        t += step * rng.randint(1, spread)
    return make_trace(pairs)
