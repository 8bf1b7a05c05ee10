"""Runtime checks over simulation metrics: LIS sojourn bound, feed-forward
potential bound, drain-time bounds, and empirical growth / oscillation."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .engine import MetricsSeries, StepSeries
from .model import JobSpec, ServerId, feed_forward_order, system_topology


def lis_sojourn_bound(r, b, t_min, t_max, d_max) -> Fraction | None:
    """Sojourn bound for LIS, or ``None`` when ``r >= T_min / (T_max + D_max)``."""
    r, b, t_min, t_max, d_max = map(Fraction, (r, b, t_min, t_max, d_max))
    denom = t_min - r * (t_max + d_max)
    if denom <= 0:
        return None
    return (d_max * t_min + r * b * (t_max + d_max)) / denom


@dataclass
class LisReport:
    bound: Fraction | None
    declined: bool = False
    reason: str = ""
    jobs_checked: int = 0
    margins: dict = field(default_factory=dict)  # job sequence -> bound - sojourn
    violations: list = field(default_factory=list)  # (job sequence, sojourn)
    max_sojourn: Fraction | None = None

    @property
    def ok(self) -> bool:
        return not self.declined and not self.violations


def check_lis_sojourn(metrics: MetricsSeries, r, b, t_min, t_max, d_max) -> LisReport:
    bound = lis_sojourn_bound(r, b, t_min, t_max, d_max)
    if bound is None:
        return LisReport(None, True, f"r={Fraction(r)} is not below T_min/(T_max+D_max); bound is vacuous")
    rep = LisReport(bound)
    for rec in metrics.completed_jobs():
        soj = rec.sojourn
        rep.jobs_checked += 1
        rep.margins[rec.sequence] = bound - soj
        if rep.max_sojourn is None or soj > rep.max_sojourn:
            rep.max_sojourn = soj
        if not soj < bound:
            rep.violations.append((rec.sequence, soj))
    return rep


@dataclass
class PhiTable:
    order: list
    phi0: Fraction
    values: dict  # server -> Phi(j)
    t_min: Fraction

    def queue_bound(self, server) -> Fraction:
        return self.values[server] / self.t_min


def potential_values(order: Sequence[ServerId], b, t_min, t_max, d_max, max_length: int,
                     initial_drain: Mapping[ServerId, object] | None = None) -> PhiTable:
    """Potential for servers listed in feed-forward order."""
    b, t_min, t_max, d_max = map(Fraction, (b, t_min, t_max, d_max))
    initial_drain = initial_drain or {}
    phi0 = d_max + b
    values = {}
    upstream = Fraction(0)
    for server in order:
        tau0 = Fraction(initial_drain.get(server, 0))
        values[server] = tau0 + phi0 + upstream / t_min * max_length * (t_max + d_max) + b
        upstream += values[server]
    return PhiTable(list(order), phi0, values, t_min)


def compute_phi(servers: Iterable[ServerId], jobs: Iterable[JobSpec], b, t_min, t_max, d_max,
                max_length: int, initial_drain=None) -> PhiTable | None:
    """Potential per server, or ``None`` when the system topology is not feed-forward."""
    order = feed_forward_order(system_topology(jobs, servers))
    if order is None:
        return None
    return potential_values(order, b, t_min, t_max, d_max, max_length, initial_drain)


@dataclass
class BoundReport:
    declined: bool = False
    reason: str = ""
    instants_checked: int = 0
    violations: list = field(default_factory=list)  # (server, time, observed, limit, series)

    @property
    def ok(self) -> bool:
        return not self.declined and not self.violations


def check_drain_bound(metrics: MetricsSeries, limits: Mapping[ServerId, object]) -> BoundReport:
    """Assert ``tau_s(t) <= limits[s]`` at every recorded change point."""
    rep = BoundReport()
    for s, limit in limits.items():
        for t, value in metrics.drain[s].points:
            rep.instants_checked += 1
            if value > limit:
                rep.violations.append((s, t, value, limit, "drain"))
    return rep


def check_feed_forward(metrics: MetricsSeries, phi: PhiTable | None) -> BoundReport:
    if phi is None:
        return BoundReport(True, "topology is not feed-forward")
    rep = check_drain_bound(metrics, phi.values)
    for s in phi.order:
        limit = phi.queue_bound(s)
        for t, q in metrics.queue[s].points:
            rep.instants_checked += 1
            if q > limit:
                rep.violations.append((s, t, q, limit, "queue"))
    return rep


def independent_drain_limits(servers, b, d_max, initial_drain=None) -> dict:
    """``tau_s(0) + D_max + 2b`` per server: the fully-independent bound."""
    initial_drain = initial_drain or {}
    return {s: Fraction(initial_drain.get(s, 0)) + Fraction(d_max) + 2 * Fraction(b) for s in servers}


def _sample(series: StepSeries, start: Fraction, end: Fraction, n: int) -> list[tuple[float, float]]:
    out = []
    pts = series.points
    i = 0
    value = 0
    for k in range(n):
        t = start + (end - start) * k / (n - 1)
        while i < len(pts) and pts[i][0] <= t:
            value = pts[i][1]
            i += 1
        out.append((float(t), float(value)))
    return out


@dataclass
class GrowthReport:
    verdict: str  # growing | not-growing | inconclusive
    slope: float
    start_total: int
    final_total: int
    change_points: int
    window_start: Fraction


def detect_growth(metrics: MetricsSeries, window=Fraction(1, 2), samples: int = 400) -> GrowthReport:
    """Least-squares trend of total queued tasks over the trailing ``window`` of the run."""
    window = Fraction(window)
    end = metrics.horizon
    start = end * (1 - window)
    series = metrics.total_queued
    inside = sum(1 for t, _ in series.points if start <= t <= end)
    start_total = series.value_at(start)
    final_total = series.value_at(end)
    if end <= start or inside < 10:
        if not any(v for _, v in series.points):
            return GrowthReport("not-growing", 0.0, start_total, final_total, inside, start)
        return GrowthReport("inconclusive", 0.0, start_total, final_total, inside, start)
    pts = _sample(series, start, end, samples)
    n = len(pts)
    mx = sum(x for x, _ in pts) / n
    my = sum(y for _, y in pts) / n
    sxx = sum((x - mx) ** 2 for x, _ in pts)
    sxy = sum((x - mx) * (y - my) for x, y in pts)
    slope = sxy / sxx if sxx else 0.0
    growing = slope > 0 and final_total > 2 * start_total
    return GrowthReport("growing" if growing else "not-growing", slope, start_total, final_total, inside, start)


@dataclass
class OscillationReport:
    epochs: list  # (leader server, peak queue within the epoch)
    alternations: int
    increasing: bool

    @property
    def ok(self) -> bool:
        return self.alternations >= 3 and self.increasing


def oscillation(metrics: MetricsSeries, first: ServerId, second: ServerId, samples: int = 2000) -> OscillationReport:
    """Split the run into epochs by which of two servers holds the longer queue.

    ``increasing`` holds when each server's successive epoch peaks never shrink.
    """
    a = _sample(metrics.queue[first], Fraction(0), metrics.horizon, samples)
    b = _sample(metrics.queue[second], Fraction(0), metrics.horizon, samples)
    epochs: list[list] = []
    for (_, qa), (_, qb) in zip(a, b):
        if qa == qb:
            continue
        leader, value = (first, qa) if qa > qb else (second, qb)
        if epochs and epochs[-1][0] == leader:
            epochs[-1][1] = max(epochs[-1][1], value)
        else:
            epochs.append([leader, value])
    # drop tiny epochs caused by sampling noise at crossovers
    peak = max((v for _, v in epochs), default=0)
    merged: list[list] = []
    for leader, value in epochs:
        if value < max(2, peak / 20):
            continue
        if merged and merged[-1][0] == leader:
            merged[-1][1] = max(merged[-1][1], value)
        else:
            merged.append([leader, value])
    increasing = True
    for server in (first, second):
        peaks = [v for s, v in merged if s == server]
        if any(y < x for x, y in zip(peaks, peaks[1:])):
            increasing = False
    return OscillationReport([tuple(e) for e in merged], max(0, len(merged) - 1), increasing)
