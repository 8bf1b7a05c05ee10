"""Scenario files (YAML): parsing, validation, serialization and trace materialization.

Example::

    name: or_dependence
    servers: [s1]
    policy: FIFO
    horizon: 20
    bound: {r: 1/2, b: 5}
    limits: derive                   # or {L: 5, T_min: 1, T_max: 1, D_max: 0}
    jobs:
      K:
        tasks:
          - {id: 1, server: s1, feasibility: [[]]}
          - {id: 2, server: s1, feasibility: [[1], [5]], time: 1, delay: 0}
    adversary:
      trace:
        - {time: 0, job: K}
    checkers:
      rb-verify: on
      growth: {window: 1/2}

Exactly one adversary source is allowed: ``trace``, ``generator``, ``aqt``,
``caqt`` or ``gadget``. Times are integers, decimal literals or ``"p/q"``
strings and are always held as exact fractions.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any

import yaml

from .adversary import InjectionTrace, RbBound, from_aqt, from_caqt, generate_bounded_trace, make_trace
from .engine import format_time
from .gadgets import priority_inversion_trace
from .model import JobSpec, Limits, TaskSpec, derive_limits, validate_job
from .policies import PolicyId

ADVERSARY_KINDS = ("trace", "generator", "aqt", "caqt", "gadget")
CHECKERS = ("rb-verify", "lis-bound", "phi-bound", "independent-bound", "growth", "oscillation")


class ScenarioError(ValueError):
    """Malformed or inconsistent scenario; the message names the offending field."""


def parse_time(value, where: str) -> Fraction:
    if isinstance(value, bool):
        raise ScenarioError(f"{where}: expected a number, got {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(repr(value))
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError):
            pass
    raise ScenarioError(f"{where}: cannot read {value!r} as an exact number")


def dump_time(value: Fraction):
    value = Fraction(value)
    return value.numerator if value.denominator == 1 else format_time(value)


def _require(mapping, key, where):
    if not isinstance(mapping, dict):
        raise ScenarioError(f"{where}: expected a mapping")
    if key not in mapping:
        raise ScenarioError(f"{where}: missing field '{key}'")
    return mapping[key]


def parse_job(name: str, raw, where: str) -> JobSpec:
    tasks_raw = _require(raw, "tasks", where)
    if not isinstance(tasks_raw, list) or not tasks_raw:
        raise ScenarioError(f"{where}.tasks: expected a nonempty list")
    tasks = []
    for i, t in enumerate(tasks_raw):
        tw = f"{where}.tasks[{i}]"
        tid = _require(t, "id", tw)
        if not isinstance(tid, int) or isinstance(tid, bool):
            raise ScenarioError(f"{tw}.id: expected an integer")
        server = str(_require(t, "server", tw))
        sets = t.get("feasibility", [[]])
        if not isinstance(sets, list) or not all(isinstance(s, list) for s in sets):
            raise ScenarioError(f"{tw}.feasibility: expected a list of lists of task ids")
        tasks.append(TaskSpec(
            tid, server,
            parse_time(t.get("delay", 0), f"{tw}.delay"),
            parse_time(t.get("time", 1), f"{tw}.time"),
            tuple(frozenset(int(x) for x in s) for s in sets),
        ))
    return JobSpec(str(name), tuple(tasks))


def dump_job(job: JobSpec) -> dict:
    tasks = []
    for t in job.tasks:
        tasks.append({
            "id": t.task_id,
            "server": t.server,
            "delay": dump_time(t.activation_delay),
            "time": dump_time(t.processing_time),
            "feasibility": [sorted(s) for s in t.feasibility],
        })
    return {"tasks": tasks}


def _normalize(value):
    """Canonical form for adversary/checker parameters (exact numbers, plain containers)."""
    if isinstance(value, dict):
        return {str(k): _normalize(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_normalize(v) for v in value]
    if isinstance(value, float):
        return dump_time(Fraction(repr(value)))
    if isinstance(value, str) and "/" in value:
        try:
            return dump_time(Fraction(value))
        except (ValueError, ZeroDivisionError):
            return value
    return value


@dataclass
class ScenarioFile:
    servers: list
    policy: PolicyId
    horizon: Fraction
    adversary_kind: str
    adversary: dict
    name: str = "scenario"
    jobs: dict = field(default_factory=dict)
    bound: RbBound | None = None
    limits: Limits | None = None  # None: derive from trace
    initial_drain: dict = field(default_factory=dict)
    checkers: dict = field(default_factory=dict)

    def checker(self, name: str) -> dict | None:
        """Parameters of an enabled checker, or ``None`` when it is off."""
        value = self.checkers.get(name)
        if value is None or value is False or value == "off":
            return None
        if value is True or value == "on":
            return {}
        return dict(value)


def _parse_checkers(raw, where="checkers") -> dict:
    if raw is None:
        return {}
    if not isinstance(raw, dict):
        raise ScenarioError(f"{where}: expected a mapping of checker name to on/off or parameters")
    out = {}
    for name, value in raw.items():
        if name not in CHECKERS:
            raise ScenarioError(f"{where}.{name}: unknown checker; expected one of {list(CHECKERS)}")
        if value is True or value == "on":
            out[name] = "on"
        elif value is False or value == "off" or value is None:
            out[name] = "off"
        elif isinstance(value, dict):
            out[name] = _normalize(value)
        else:
            raise ScenarioError(f"{where}.{name}: expected on, off or a parameter mapping")
    return out


def _parse_limits(raw) -> Limits | None:
    if raw is None or raw == "derive" or raw == "derive-from-trace":
        return None
    if not isinstance(raw, dict):
        raise ScenarioError("limits: expected 'derive' or a mapping with L/T_min/T_max/D_max")
    known = {"L", "T_min", "T_max", "D_max"}
    extra = set(raw) - known
    if extra:
        raise ScenarioError(f"limits: unknown keys {sorted(extra)}")

    def opt(key):
        return None if raw.get(key) is None else parse_time(raw[key], f"limits.{key}")

    length = raw.get("L")
    if length is not None and (not isinstance(length, int) or length < 1):
        raise ScenarioError("limits.L: expected a positive integer")
    return Limits(length, opt("T_min"), opt("T_max"), opt("D_max"))


def parse_scenario(data: Any) -> ScenarioFile:
    if not isinstance(data, dict):
        raise ScenarioError("scenario: top level must be a mapping")
    servers = _require(data, "servers", "scenario")
    if not isinstance(servers, list) or not servers:
        raise ScenarioError("servers: expected a nonempty list")
    servers = [str(s) for s in servers]
    if len(set(servers)) != len(servers):
        raise ScenarioError("servers: duplicate identifiers")
    try:
        policy = PolicyId.parse(_require(data, "policy", "scenario"))
    except ValueError as exc:
        raise ScenarioError(f"policy: {exc}") from None
    horizon = parse_time(_require(data, "horizon", "scenario"), "horizon")
    if horizon < 0:
        raise ScenarioError("horizon: must be nonnegative")

    bound = None
    if data.get("bound") is not None:
        braw = data["bound"]
        try:
            bound = RbBound(parse_time(_require(braw, "r", "bound"), "bound.r"),
                            parse_time(_require(braw, "b", "bound"), "bound.b"))
        except ValueError as exc:
            if isinstance(exc, ScenarioError):
                raise
            raise ScenarioError(f"bound: {exc}") from None

    jobs = {}
    for name, raw in (data.get("jobs") or {}).items():
        jobs[str(name)] = parse_job(str(name), raw, f"jobs.{name}")

    adv = _require(data, "adversary", "scenario")
    if not isinstance(adv, dict):
        raise ScenarioError("adversary: expected a mapping")
    kinds = [k for k in adv if k in ADVERSARY_KINDS]
    unknown = [k for k in adv if k not in ADVERSARY_KINDS]
    if unknown:
        raise ScenarioError(f"adversary: unknown source {unknown}; expected one of {list(ADVERSARY_KINDS)}")
    if len(kinds) != 1:
        raise ScenarioError(f"adversary: exactly one source required, found {kinds or 'none'}")
    kind = kinds[0]
    params = adv[kind]
    if kind == "trace":
        if not isinstance(params, list):
            raise ScenarioError("adversary.trace: expected a list of {time, job}")
        norm = []
        for i, item in enumerate(params):
            w = f"adversary.trace[{i}]"
            t = parse_time(_require(item, "time", w), f"{w}.time")
            job = _require(item, "job", w)
            if isinstance(job, dict):
                inline = parse_job(job.get("name", f"inline{i}"), job, f"{w}.job")
                norm.append({"time": dump_time(t), "job": {"name": inline.name, **dump_job(inline)}})
            else:
                if str(job) not in jobs:
                    raise ScenarioError(f"{w}.job: unknown job {job!r}")
                norm.append({"time": dump_time(t), "job": str(job)})
        params = norm
    elif not isinstance(params, dict):
        raise ScenarioError(f"adversary.{kind}: expected a mapping")
    else:
        params = _normalize(params)

    limits = _parse_limits(data.get("limits"))
    drain = {str(k): parse_time(v, f"initial_drain.{k}") for k, v in (data.get("initial_drain") or {}).items()}
    return ScenarioFile(servers, policy, horizon, kind, params if kind != "trace" else {"trace": params},
                        str(data.get("name", "scenario")), jobs, bound, limits, drain,
                        _parse_checkers(data.get("checkers")))


def load_scenario(path) -> ScenarioFile:
    text = Path(path).read_text()
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"line {mark.line + 1}, column {mark.column + 1}: " if mark else ""
        raise ScenarioError(f"{path}: {where}{getattr(exc, 'problem', exc)}") from None
    return parse_scenario(data)


def scenario_to_dict(sc: ScenarioFile) -> dict:
    out: dict = {"name": sc.name, "servers": list(sc.servers), "policy": sc.policy.value,
                 "horizon": dump_time(sc.horizon)}
    if sc.bound is not None:
        out["bound"] = {"r": dump_time(sc.bound.r), "b": dump_time(sc.bound.b)}
    if sc.limits is None:
        out["limits"] = "derive"
    else:
        lim = {"L": sc.limits.max_length, "T_min": sc.limits.t_min, "T_max": sc.limits.t_max,
               "D_max": sc.limits.d_max}
        out["limits"] = {k: (v if k == "L" or v is None else dump_time(v)) for k, v in lim.items() if v is not None}
    if sc.initial_drain:
        out["initial_drain"] = {k: dump_time(v) for k, v in sc.initial_drain.items()}
    if sc.jobs:
        out["jobs"] = {name: dump_job(job) for name, job in sc.jobs.items()}
    if sc.adversary_kind == "trace":
        out["adversary"] = {"trace": sc.adversary["trace"]}
    else:
        out["adversary"] = {sc.adversary_kind: sc.adversary}
    if sc.checkers:
        out["checkers"] = sc.checkers
    return out


def dump_scenario(sc: ScenarioFile) -> str:
    return yaml.safe_dump(scenario_to_dict(sc), sort_keys=False, default_flow_style=None, width=100)


def _fraction(params, key, where, default=None) -> Fraction:
    if key not in params:
        if default is None:
            raise ScenarioError(f"{where}: missing field '{key}'")
        return Fraction(default)
    return parse_time(params[key], f"{where}.{key}")


def build_trace(sc: ScenarioFile, seed: int | None = None) -> InjectionTrace:
    """Materialize the scenario's adversary as a concrete injection trace."""
    kind, p = sc.adversary_kind, sc.adversary
    where = f"adversary.{kind}"
    try:
        if kind == "trace":
            pairs = []
            for i, item in enumerate(p["trace"]):
                job = item["job"]
                spec = sc.jobs[job] if isinstance(job, str) else parse_job(job["name"], job, f"{where}[{i}].job")
                pairs.append((parse_time(item["time"], f"{where}[{i}].time"), spec))
            return make_trace(pairs)
        if kind == "generator":
            if sc.bound is None:
                raise ScenarioError(f"{where}: a generator needs the scenario 'bound'")
            names = p.get("templates") or list(sc.jobs)
            missing = [n for n in names if n not in sc.jobs]
            if missing:
                raise ScenarioError(f"{where}.templates: unknown jobs {missing}")
            return generate_bounded_trace(
                int(seed if seed is not None else p.get("seed", 0)), sc.servers, sc.bound,
                [sc.jobs[n] for n in names], _fraction(p, "horizon", where, sc.horizon),
                step=_fraction(p, "step", where, Fraction(1, 4)),
                attempts=int(p.get("attempts", 1)), spread=int(p.get("spread", 1)))
        if kind == "aqt":
            paths = _require(p, "paths", where)
            inj = [(parse_time(t, f"{where}.injections"), int(i)) for t, i in _require(p, "injections", where)]
            return from_aqt(paths, inj)
        if kind == "caqt":
            paths = _require(p, "paths", where)
            inj = [(parse_time(t, f"{where}.injections"), int(i), parse_time(n, f"{where}.injections"))
                   for t, i, n in _require(p, "injections", where)]
            delays = {k: parse_time(v, f"{where}.delays.{k}") for k, v in (p.get("delays") or {}).items()}
            return from_caqt(paths, inj, delays)
        if kind == "gadget":
            return priority_inversion_trace(
                p.get("variant", "length"), _fraction(p, "rate", where, Fraction(4, 5)),
                _fraction(p, "horizon", where, sc.horizon), int(p.get("burst", 10)),
                _fraction(p, "burst_time", where, sc.horizon / 4))
    except ScenarioError:
        raise
    except (ValueError, TypeError, KeyError, IndexError) as exc:
        raise ScenarioError(f"{where}: {exc}") from None
    raise ScenarioError(f"adversary: unsupported source {kind!r}")


def effective_limits(sc: ScenarioFile, trace: InjectionTrace) -> Limits:
    derived = derive_limits(trace.jobs)
    if sc.limits is None:
        return derived
    lim = sc.limits
    return Limits(
        lim.max_length if lim.max_length is not None else derived.max_length,
        lim.t_min if lim.t_min is not None else derived.t_min,
        lim.t_max if lim.t_max is not None else derived.t_max,
        lim.d_max if lim.d_max is not None else derived.d_max,
    )


def validate_scenario(sc: ScenarioFile, trace: InjectionTrace) -> list[str]:
    """Semantic problems: malformed jobs, undeclared servers, limits not dominating the trace."""
    problems = []
    limits = sc.limits or Limits()
    if sc.bound is not None:
        limits = Limits(limits.max_length, limits.t_min, limits.t_max, limits.d_max, sc.bound.b)
    seen = set()
    for name, job in sc.jobs.items():
        problems += validate_job(job, sc.servers, limits)
        seen.add(id(job))
    for inj in trace:
        if id(inj.job) in seen:
            continue
        seen.add(id(inj.job))
        problems += validate_job(inj.job, sc.servers, limits)
    problems += trace.problems()
    return problems
