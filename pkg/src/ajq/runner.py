"""Run a scenario file end to end: build the trace, simulate, apply checkers, write outputs."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from .adversary import InjectionTrace, min_burstiness, verify_rb_bound
from .checkers import (check_drain_bound, check_feed_forward, check_lis_sojourn, compute_phi, detect_growth,
                       independent_drain_limits, oscillation)
from .engine import RunResult, Scenario, emit_event_log, format_time, run
from .model import Limits
from .policies import PolicyId
from .scenario import ScenarioError, ScenarioFile, build_trace, effective_limits, validate_scenario

PASS, FAIL, DECLINED, INFO = "pass", "fail", "declined", "info"


def _t(x) -> str:
    return format_time(Fraction(x))


@dataclass
class ScenarioRun:
    scenario: ScenarioFile
    trace: InjectionTrace
    limits: Limits
    result: RunResult
    checks: dict

    @property
    def failed(self) -> bool:
        return any(c["status"] == FAIL for c in self.checks.values())


def prepare(sc: ScenarioFile, seed: int | None = None) -> tuple[InjectionTrace, Limits]:
    trace = build_trace(sc, seed)
    problems = validate_scenario(sc, trace)
    if problems:
        raise ScenarioError("; ".join(problems[:20]) + (f" (+{len(problems) - 20} more)" if len(problems) > 20 else ""))
    return trace, effective_limits(sc, trace)


def rb_report(trace: InjectionTrace, sc: ScenarioFile) -> dict:
    if sc.bound is None:
        return {"status": DECLINED, "reason": "scenario declares no bound"}
    violations = verify_rb_bound(trace, sc.bound)
    return {
        "status": PASS if not violations else FAIL,
        "r": _t(sc.bound.r), "b": _t(sc.bound.b),
        "min_burstiness": _t(min_burstiness(trace, sc.bound.r)),
        "violations": len(violations),
        "first_violations": [
            {"server": v.server, "start": _t(v.start), "end": _t(v.end), "load": _t(v.load), "allowed": _t(v.allowed)}
            for v in violations[:10]
        ],
    }


def run_checks(sc: ScenarioFile, trace: InjectionTrace, limits: Limits, result: RunResult) -> dict:
    checks = {}
    m = result.metrics
    if sc.checker("rb-verify") is not None:
        checks["rb-verify"] = rb_report(trace, sc)

    if sc.checker("lis-bound") is not None:
        if sc.policy is not PolicyId.LIS:
            checks["lis-bound"] = {"status": DECLINED, "reason": f"policy is {sc.policy}, not LIS"}
        elif sc.bound is None or limits.t_min is None:
            checks["lis-bound"] = {"status": DECLINED, "reason": "needs a bound and a nonempty trace"}
        else:
            rep = check_lis_sojourn(m, sc.bound.r, sc.bound.b, limits.t_min, limits.t_max, limits.d_max)
            if rep.declined:
                checks["lis-bound"] = {"status": DECLINED, "reason": rep.reason}
            else:
                checks["lis-bound"] = {
                    "status": PASS if rep.ok else FAIL, "bound": _t(rep.bound), "jobs_checked": rep.jobs_checked,
                    "max_sojourn": None if rep.max_sojourn is None else _t(rep.max_sojourn),
                    "min_margin": _t(min(rep.margins.values())) if rep.margins else None,
                    "violations": len(rep.violations),
                }

    if sc.checker("phi-bound") is not None:
        if sc.bound is None or limits.t_min is None:
            checks["phi-bound"] = {"status": DECLINED, "reason": "needs a bound and a nonempty trace"}
        else:
            phi = compute_phi(sc.servers, trace.jobs, sc.bound.b, limits.t_min, limits.t_max, limits.d_max,
                              limits.max_length, sc.initial_drain)
            rep = check_feed_forward(m, phi)
            if rep.declined:
                checks["phi-bound"] = {"status": DECLINED, "reason": rep.reason}
            else:
                checks["phi-bound"] = {
                    "status": PASS if rep.ok else FAIL, "order": phi.order,
                    "phi": {s: _t(v) for s, v in phi.values.items()},
                    "peak_drain": {s: _t(m.peak_drain(s)) for s in phi.order},
                    "peak_queue": {s: m.peak_queue(s) for s in phi.order},
                    "instants_checked": rep.instants_checked, "violations": len(rep.violations),
                }

    if sc.checker("independent-bound") is not None:
        if sc.bound is None or limits.d_max is None:
            checks["independent-bound"] = {"status": DECLINED, "reason": "needs a bound and a nonempty trace"}
        elif any(not t.is_initial for j in trace.jobs for t in j.tasks):
            checks["independent-bound"] = {"status": DECLINED, "reason": "some task is not initial"}
        else:
            lim = independent_drain_limits(sc.servers, sc.bound.b, limits.d_max, sc.initial_drain)
            rep = check_drain_bound(m, lim)
            checks["independent-bound"] = {"status": PASS if rep.ok else FAIL,
                                           "limits": {s: _t(v) for s, v in lim.items()},
                                           "violations": len(rep.violations)}

    params = sc.checker("growth")
    if params is not None:
        rep = detect_growth(m, Fraction(params.get("window", Fraction(1, 2))))
        expect = params.get("expect")
        status = INFO if expect is None else (PASS if rep.verdict == expect else FAIL)
        checks["growth"] = {"status": status, "verdict": rep.verdict, "slope": rep.slope,
                            "window_start": _t(rep.window_start), "start_total": rep.start_total,
                            "final_total": rep.final_total, "change_points": rep.change_points,
                            **({"expect": expect} if expect else {})}

    params = sc.checker("oscillation")
    if params is not None:
        first, second = params.get("servers", [sc.servers[0], sc.servers[-1]])
        rep = oscillation(m, str(first), str(second))
        expect = params.get("expect")
        status = INFO if expect is None else (PASS if rep.ok == bool(expect) else FAIL)
        checks["oscillation"] = {"status": status, "alternations": rep.alternations,
                                 "increasing": rep.increasing, "epochs": [list(e) for e in rep.epochs]}
    return checks


def simulate_scenario(sc: ScenarioFile, seed: int | None = None) -> ScenarioRun:
    trace, limits = prepare(sc, seed)
    result = run(Scenario(tuple(sc.servers), trace, sc.policy, sc.horizon))
    return ScenarioRun(sc, trace, limits, result, run_checks(sc, trace, limits, result))


def metrics_csv(result: RunResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["series", "time", "time_decimal", "value", "value_decimal"])
    m = result.metrics
    series = []
    for s in m.servers:
        series.append((f"Q:{s}", m.queue[s].points))
    for s in m.servers:
        series.append((f"tau:{s}", m.drain[s].points))
    series.append(("total_queued", m.total_queued.points))
    series.append(("oldest_age", m.oldest_age))
    for name, pts in series:
        for t, v in pts:
            w.writerow([name, _t(t), f"{float(t):.6f}", _t(v), f"{float(v):.6f}"])
    return buf.getvalue()


def jobs_csv(result: RunResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["job", "name", "injected", "injected_decimal", "completed", "completed_decimal",
                "sojourn", "sojourn_decimal"])
    for rec in result.metrics.jobs.values():
        done = rec.completed is not None
        w.writerow([rec.sequence, rec.name, _t(rec.injected), f"{float(rec.injected):.6f}",
                    _t(rec.completed) if done else "", f"{float(rec.completed):.6f}" if done else "",
                    _t(rec.sojourn) if done else "", f"{float(rec.sojourn):.6f}" if done else ""])
    return buf.getvalue()


def summary(run_: ScenarioRun) -> dict:
    m = run_.result.metrics
    completed = m.completed_jobs()
    return {
        "name": run_.scenario.name,
        "policy": run_.scenario.policy.value,
        "horizon": _t(run_.scenario.horizon),
        "servers": list(m.servers),
        "injected_jobs": len(run_.trace),
        "completed_jobs": len(completed),
        "max_sojourn": _t(max((j.sojourn for j in completed), default=0)),
        "max_oldest_age": _t(m.max_age),
        "peak_queue": {s: m.peak_queue(s) for s in m.servers},
        "peak_drain": {s: _t(m.peak_drain(s)) for s in m.servers},
        "peak_total_queued": m.total_queued.peak(),
        "final_total_queued": m.total_queued.final(),
        "truncated_tasks": len(run_.result.truncated),
        "limits": {"L": run_.limits.max_length,
                   "T_min": None if run_.limits.t_min is None else _t(run_.limits.t_min),
                   "T_max": None if run_.limits.t_max is None else _t(run_.limits.t_max),
                   "D_max": None if run_.limits.d_max is None else _t(run_.limits.d_max)},
        "status": FAIL if run_.failed else PASS,
    }


def write_outputs(run_: ScenarioRun, out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "events.log").write_text(emit_event_log(run_.result.events))
    (out / "metrics.csv").write_text(metrics_csv(run_.result))
    (out / "jobs.csv").write_text(jobs_csv(run_.result))
    (out / "checks.json").write_text(json.dumps(run_.checks, indent=2, sort_keys=True) + "\n")
    (out / "summary.json").write_text(json.dumps(summary(run_), indent=2, sort_keys=True) + "\n")
    return out
