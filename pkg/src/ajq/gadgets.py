"""Instability gadgets authored for this package.

Every gadget uses the same two-route priority-inversion layout on four servers::

    route A:  s1 -> s2 -> s4 (exit work on s4)
    route B:  s4 -> s3 -> s1 (exit work on s1)

Each route's exit work totals two time units against one unit of entry work.
The gadget gives exit work priority over the other route's entry task. While
s1 drains route-A entries, s4 is busy with the A exits arriving at rate 1 and
starves route-B entries, and the mirror image happens next. The exit loads sum
to ``4r/3 > 1`` for ``r > 3/4``, so backlog alternates between s1 and s4 and
grows cycle after cycle.

The steady periodic stream alone stays bounded; a one-off burst of route-A
jobs at ``burst_time`` tips the system into growth.

``variant`` selects how exit priority is encoded:

* ``"length"``: exit tasks take 2 time units, entries 1 (LCT-LIS)
* ``"distance"``: two unit exit tasks sit further from the source (NTG, FFS)
* ``"delay"``: entries carry an activation delay, exits none (SAD-NFS)
"""
from __future__ import annotations

from fractions import Fraction

from .adversary import InjectionTrace, make_trace, min_burstiness
from .model import JobSpec, make_job

SERVERS = ("s1", "s2", "s3", "s4")

DEFAULT_POLICY = {"length": "LCT-LIS", "distance": "NTG", "delay": "SAD-NFS"}


def route_jobs(variant: str) -> tuple[JobSpec, JobSpec]:
    if variant == "length":
        a = make_job("A", [(1, [[]], "s1", 0, 1), (2, [[1]], "s2", 0, 1), (3, [[2]], "s4", 0, 2)])
        b = make_job("B", [(1, [[]], "s4", 0, 1), (2, [[1]], "s3", 0, 1), (3, [[2]], "s1", 0, 2)])
    elif variant == "distance":
        a = make_job("A", [(1, [[]], "s1"), (2, [[1]], "s2"), (3, [[2]], "s4"), (4, [[3]], "s4")])
        b = make_job("B", [(1, [[]], "s4"), (2, [[1]], "s3"), (3, [[2]], "s1"), (4, [[3]], "s1")])
    elif variant == "delay":
        a = make_job("A", [(1, [[]], "s1", 1, 1), (2, [[1]], "s2", 0, 1),
                           (3, [[2]], "s4", 0, 1), (4, [[3]], "s4", 0, 1)])
        b = make_job("B", [(1, [[]], "s4", 1, 1), (2, [[1]], "s3", 0, 1),
                           (3, [[2]], "s1", 0, 1), (4, [[3]], "s1", 0, 1)])
    else:
        raise ValueError(f"unknown gadget variant {variant!r}")
    return a, b


def priority_inversion_trace(variant: str = "length", rate=Fraction(4, 5), horizon=4000,
                             burst: int = 10, burst_time=1000) -> InjectionTrace:
    """One A and one B job every ``3/rate`` time units, plus ``burst`` A jobs at ``burst_time``.

    Both routes put three units of work on s1 and on s4, so the stream runs at
    exactly ``rate`` on those servers.
    """
    rate, horizon, burst_time = Fraction(rate), Fraction(horizon), Fraction(burst_time)
    a, b = route_jobs(variant)
    period = 3 / rate
    pairs = []
    t = Fraction(0)
    burst_done = burst == 0
    while t <= horizon:
        if not burst_done and burst_time <= t:
            pairs += [(burst_time, a)] * burst
            burst_done = True
        pairs += [(t, a), (t, b)]
        t += period
    if not burst_done and burst_time <= horizon:
        pairs += [(burst_time, a)] * burst
    pairs.sort(key=lambda p: p[0])
    return make_trace(pairs)


def required_burstiness(trace: InjectionTrace, rate) -> Fraction:
    return min_burstiness(trace, rate)
