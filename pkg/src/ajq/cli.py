"""Command-line front end.

Exit codes: 0 ok, 1 a check failed, 2 usage or parse error.
"""
from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .adversary import min_burstiness, verify_rb_bound
from .engine import format_time
from .model import (assign_layers, feed_forward_order, server_sort_key, skeleton, system_topology)
from .policies import PolicyId
from .runner import FAIL, simulate_scenario, summary, write_outputs
from .scenario import CHECKERS, ScenarioError, build_trace, load_scenario, parse_time, validate_scenario

EXIT_OK, EXIT_CHECK, EXIT_USAGE = 0, 1, 2


def _load(args):
    sc = load_scenario(args.scenario)
    if getattr(args, "policy", None):
        try:
            sc.policy = PolicyId.parse(args.policy)
        except ValueError as exc:
            raise ScenarioError(f"--policy: {exc}") from None
    if getattr(args, "horizon", None) is not None:
        sc.horizon = parse_time(args.horizon, "--horizon")
    for item in getattr(args, "checker", None) or []:
        name, _, state = item.partition("=")
        if name not in CHECKERS or state not in ("on", "off"):
            raise ScenarioError(f"--checker {item!r}: expected <name>=on|off with name in {list(CHECKERS)}")
        if state == "off":
            sc.checkers[name] = "off"
        elif sc.checker(name) is None:
            sc.checkers[name] = "on"
    return sc


def cmd_validate(args) -> int:
    sc = _load(args)
    trace = build_trace(sc, args.seed)
    problems = validate_scenario(sc, trace)
    if problems:
        for p in problems:
            print(f"error: {p}")
        return EXIT_USAGE
    print(f"{args.scenario}: ok ({len(sc.servers)} servers, {len(trace)} injections, policy {sc.policy})")
    return EXIT_OK


def _jobs_for_listing(sc, seed):
    if sc.jobs:
        return list(sc.jobs.values())
    seen, jobs = set(), []
    for inj in build_trace(sc, seed):
        if id(inj.job) not in seen:
            seen.add(id(inj.job))
            jobs.append(inj.job)
    return jobs


def cmd_layers(args) -> int:
    sc = _load(args)
    for job in _jobs_for_listing(sc, args.seed):
        lm = assign_layers(job)
        if lm.doable:
            print(f"{job.name}: doable, {lm.layer_count} layers")
        else:
            print(f"{job.name}: not doable (tasks {', '.join(map(str, sorted(lm.unassigned)))} unassigned)")
        for t in job.tasks:
            layer = lm.layers.get(t.task_id, "-")
            print(f"  task {t.task_id}: server {t.server} layer {layer}")
        edges = sorted(skeleton(job).edges)
        print(f"  skeleton: {' '.join(f'{u}->{v}' for u, v in edges) or '(no edges)'}")
    return EXIT_OK


def cmd_topology(args) -> int:
    sc = _load(args)
    jobs = [inj.job for inj in build_trace(sc, args.seed)] or list(sc.jobs.values())
    topo = system_topology(jobs, sc.servers)
    for u, v in topo.sorted_edges(server_sort_key):
        print(f"{u} -> {v}")
    order = feed_forward_order(topo)
    if order is None:
        print("verdict: not feed-forward")
    else:
        print(f"verdict: feed-forward (order {' '.join(order)})")
    return EXIT_OK


def cmd_verify_adversary(args) -> int:
    sc = _load(args)
    trace = build_trace(sc, args.seed)
    if sc.bound is None:
        print("error: scenario declares no bound {r, b}")
        return EXIT_USAGE
    r, b = sc.bound.r, sc.bound.b
    need = min_burstiness(trace, r)
    violations = verify_rb_bound(trace, sc.bound)
    print(f"injections: {len(trace)}")
    print(f"min burstiness at r={format_time(r)}: {format_time(need)} (~{float(need):.4f})")
    if not violations:
        print(f"conforms to (r,b) = ({format_time(r)}, {format_time(b)})")
        return EXIT_OK
    print(f"violates (r,b) = ({format_time(r)}, {format_time(b)}) on {len(violations)} intervals")
    for v in violations[:20]:
        print(f"  {v.server} [{format_time(v.start)}, {format_time(v.end)}]: load {format_time(v.load)} "
              f"> {format_time(v.allowed)}")
    return EXIT_CHECK


def _print_checks(checks: dict) -> None:
    for name, c in checks.items():
        detail = {k: v for k, v in c.items() if k not in ("status", "epochs", "first_violations", "phi",
                                                          "peak_drain", "peak_queue", "limits")}
        print(f"  {name:18s} {c['status']:9s} {json.dumps(detail, sort_keys=True)}")


def cmd_simulate(args) -> int:
    sc = _load(args)
    run_ = simulate_scenario(sc, args.seed)
    out = args.output or f"runs/{sc.name}"
    write_outputs(run_, out)
    s = summary(run_)
    print(f"{sc.name}: policy {s['policy']}, horizon {s['horizon']}, {s['injected_jobs']} jobs injected, "
          f"{s['completed_jobs']} completed, peak total queued {s['peak_total_queued']}")
    _print_checks(run_.checks)
    print(f"outputs written to {out}")
    return EXIT_CHECK if run_.failed else EXIT_OK


def cmd_report(args) -> int:
    run_dir = Path(args.run_dir)
    try:
        s = json.loads((run_dir / "summary.json").read_text())
        checks = json.loads((run_dir / "checks.json").read_text())
    except FileNotFoundError as exc:
        print(f"error: {exc.filename} not found; is {run_dir} a simulate output directory?")
        return EXIT_USAGE
    print(f"scenario   {s['name']}")
    print(f"policy     {s['policy']}")
    print(f"horizon    {s['horizon']}")
    print(f"jobs       {s['injected_jobs']} injected, {s['completed_jobs']} completed, "
          f"max sojourn {s['max_sojourn']}, max oldest-job age {s['max_oldest_age']}")
    print(f"limits     " + ", ".join(f"{k}={v}" for k, v in s["limits"].items()))
    print("server     peak Q   peak tau")
    for srv in s["servers"]:
        print(f"  {srv:8s} {s['peak_queue'][srv]:6d}   {s['peak_drain'][srv]}")
    print(f"total queued: peak {s['peak_total_queued']}, final {s['final_total_queued']}")
    if s["truncated_tasks"]:
        print(f"truncated  {s['truncated_tasks']} task(s) in service at the horizon")
    print("checks:")
    _print_checks(checks)
    print(f"status     {s['status']}")
    return EXIT_CHECK if s["status"] == FAIL else EXIT_OK


def _batch_one(path: str, out_root: str, seed, policy, horizon, checker) -> tuple[str, int, str]:
    ns = argparse.Namespace(scenario=path, seed=seed, policy=policy, horizon=horizon, checker=checker)
    try:
        sc = _load(ns)
        run_ = simulate_scenario(sc, seed)
    except (ScenarioError, OSError) as exc:
        return path, EXIT_USAGE, str(exc)
    out = Path(out_root) / Path(path).stem
    write_outputs(run_, out)
    return path, EXIT_CHECK if run_.failed else EXIT_OK, str(out)


def cmd_batch(args) -> int:
    out_root = args.output or "runs"
    jobs = [(p, out_root, args.seed, args.policy, args.horizon, args.checker) for p in args.scenarios]
    worst = EXIT_OK
    if args.jobs == 1:
        results = [_batch_one(*j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_batch_one, *zip(*jobs)))
    for path, code, info in results:
        label = {EXIT_OK: "ok", EXIT_CHECK: "check-failed", EXIT_USAGE: "error"}[code]
        print(f"{label:12s} {path} -> {info}")
        worst = max(worst, code)
    return worst


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ajq", description="Adversarial job queueing simulator and analyzer")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, simulate=False):
        p.add_argument("--seed", type=int, default=None, help="override the generator seed (u64)")
        if simulate:
            p.add_argument("--policy", help="override the scenario policy")
            p.add_argument("--horizon", help="override the horizon (integer, decimal or p/q)")
            p.add_argument("--checker", action="append", metavar="NAME=on|off",
                           help=f"toggle a checker ({', '.join(CHECKERS)})")
            p.add_argument("--output", help="output directory")

    for name, fn, helptext in [("validate", cmd_validate, "check a scenario file"),
                               ("layers", cmd_layers, "per-job layer tables"),
                               ("topology", cmd_topology, "system topology and feed-forward verdict"),
                               ("verify-adversary", cmd_verify_adversary, "check the (r,b) injection bound")]:
        p = sub.add_parser(name, help=helptext)
        p.add_argument("scenario")
        common(p)
        p.set_defaults(func=fn)

    p = sub.add_parser("simulate", help="run a scenario and write log, metrics and checker reports")
    p.add_argument("scenario")
    common(p, simulate=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("report", help="summarize a simulate output directory")
    p.add_argument("run_dir")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("batch", help="simulate several scenarios, one output directory each")
    p.add_argument("scenarios", nargs="+")
    common(p, simulate=True)
    p.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    p.set_defaults(func=cmd_batch)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return args.func(args)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
