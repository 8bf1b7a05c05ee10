"""Acceptance criteria, one test each. A PASS/FAIL line per criterion is printed
in the terminal summary (see conftest)."""
import random
import time
from fractions import Fraction
from pathlib import Path

from ajq.adversary import RbBound, from_aqt, generate_bounded_trace, make_trace, min_burstiness, verify_rb_bound
from ajq.checkers import (check_drain_bound, check_feed_forward, check_lis_sojourn, compute_phi, detect_growth,
                          independent_drain_limits, oscillation)
from ajq.engine import Scenario, emit_event_log, run, simulate
from ajq.model import JobSpec, TaskSpec, assign_layers, derive_limits, is_doable, make_job, skeleton
from ajq.policies import PolicyId
from ajq.runner import simulate_scenario
from ajq.scenario import load_scenario

from .conftest import ACCEPTANCE_RESULTS, feas_dict, random_job
from .oracles import aqt_fifo, brute_rb, completable, merged_busy

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"


def record(name, ok, detail):
    ACCEPTANCE_RESULTS.append((name, bool(ok), detail))
    assert ok, detail


def test_c1_doability_matches_single_job_simulation():
    rng = random.Random(20240601)
    began = time.perf_counter()
    mismatches, cyclic, or_sets, doable = [], 0, 0, 0
    n = 600
    for k in range(n):
        job = random_job(rng, 6, ("s1", "s2", "s3"), times=(1, 2, Fraction(1, 2)),
                         delays=(0, 0, 1, Fraction(1, 3)), name=f"k{k}")
        horizon = sum(t.processing_time + t.activation_delay for t in job.tasks) + 1
        cyclic += any(t.task_id in fs for t in job.tasks for fs in t.feasibility) or not completable(feas_dict(job))
        or_sets += any(len(t.feasibility) > 1 for t in job.tasks)
        expected = is_doable(job)
        doable += expected
        for policy in ("FIFO", "LIS"):
            res = run(Scenario(("s1", "s2", "s3"), make_trace([(0, job)]), policy, horizon), require_doable=False)
            finished = res.metrics.jobs[0].completed is not None
            if finished != expected:
                mismatches.append((k, policy))
    elapsed = time.perf_counter() - began
    record("C1 doability oracle equivalence", not mismatches and elapsed < 60 and cyclic and or_sets,
           f"{n} jobs x 2 policies ({doable} doable, {cyclic} non-completable, {or_sets} with OR-sets), "
           f"{len(mismatches)} mismatches, {elapsed:.1f}s")


def test_c2_fixture_jobs_j_and_k(job_j, job_k):
    j, k = assign_layers(job_j), assign_layers(job_k)
    ok = (not j.doable and j.unassigned == {2, 3, 4, 5} and k.doable
          and dict(k.layers) == {i: i for i in range(1, 6)} and skeleton(job_j) == skeleton(job_k))
    record("C2 fixture jobs J and K", ok,
           f"J unassigned {sorted(j.unassigned)}, K layers {dict(k.layers)}, "
           f"skeletons equal: {skeleton(job_j) == skeleton(job_k)}")


def _random_trace(rng, max_inj=20):
    t = Fraction(0)
    pairs = []
    for k in range(rng.randint(1, max_inj)):
        t += Fraction(rng.randint(0, 3), rng.choice([1, 2, 3]))
        rows = [(i, [[]], rng.choice(["s1", "s2"]), 0, Fraction(rng.randint(1, 3), rng.choice([1, 2])))
                for i in range(1, rng.randint(1, 3) + 1)]
        pairs.append((t, make_job(f"j{k}", rows)))
    return make_trace(pairs)


def test_c3_verifier_matches_brute_force():
    rng = random.Random(77)
    n, bad_v, bad_b, flagged = 250, 0, 0, 0
    for _ in range(n):
        trace = _random_trace(rng)
        r = Fraction(rng.randint(1, 10), 10)
        b = Fraction(rng.randint(11, 40), 10)
        expected, slack = brute_rb([(i.time, i.job.server_loads()) for i in trace], r, b)
        got = {(v.server, v.start, v.end) for v in verify_rb_bound(trace, RbBound(r, b))}
        flagged += bool(got)
        bad_v += got != expected
        bad_b += min_burstiness(trace, r) != slack
    record("C3 adversary verifier oracle", bad_v == 0 and bad_b == 0 and 0 < flagged < n,
           f"{n} traces ({flagged} violating), {bad_v} violation-set mismatches, {bad_b} min_burstiness mismatches")


def test_c4_lis_sojourn_bound():
    servers = ["s1", "s2", "s3", "s4"]
    templates = [make_job(f"u{s}", [(1, [[]], s)]) for s in servers] + [
        make_job("c123", [(1, [[]], "s1"), (2, [[1]], "s2"), (3, [[2]], "s3")]),
        make_job("c42", [(1, [[]], "s4"), (2, [[1]], "s2")]),
    ]
    b = Fraction(2)
    total, details, failures = 0, [], 0
    for r in (Fraction(1, 8), Fraction(1, 4), Fraction(49, 100)):
        horizon = int(26000 / (8 * r))
        trace = generate_bounded_trace(11, servers, RbBound(r, b), templates, horizon, attempts=2, spread=3)
        assert verify_rb_bound(trace, RbBound(r, b)) == []
        lim = derive_limits(trace.jobs)
        assert (lim.t_min, lim.t_max, lim.d_max) == (1, 1, 0)
        res = simulate(servers, trace, "LIS", horizon + 50)
        rep = check_lis_sojourn(res.metrics, r, b, lim.t_min, lim.t_max, lim.d_max)
        total += rep.jobs_checked
        failures += len(rep.violations)
        details.append(f"r={r}: bound {rep.bound} ({float(rep.bound):.3f}), max sojourn {rep.max_sojourn}, "
                       f"{len(rep.violations)}/{rep.jobs_checked} violations")
    record("C4 LIS sojourn bound", failures == 0 and total >= 10**4 * 3, "; ".join(details))


def feed_forward_job(rng, servers, name, dag):
    """Random doable job whose dependences only point to later servers."""
    n = rng.randint(1, 5)
    placed = sorted(rng.choice(range(len(servers))) for _ in range(n)) if dag else \
        sorted(rng.sample(range(len(servers)), min(n, len(servers))))
    tasks = []
    for i, pos in enumerate(placed, start=1):
        earlier = [k for k, p in enumerate(placed, start=1) if p < pos]
        if not dag:
            earlier = [i - 1] if i > 1 else []
        sets = []
        if earlier:
            for _ in range(rng.randint(1, 2)):
                sets.append(frozenset(rng.sample(earlier, rng.randint(1, min(2, len(earlier))))))
        else:
            sets.append(frozenset())
        tasks.append(TaskSpec(i, servers[pos], Fraction(rng.choice([0, 0, Fraction(1, 2), 1])),
                              Fraction(rng.choice([Fraction(1, 2), 1, 1, 2])), tuple(sets)))
    return JobSpec(name, tuple(tasks))


def test_c5_feed_forward_potential_bound():
    rng = random.Random(5)
    runs, checked, violations = 0, 0, []
    for case in range(24):
        dag = case % 2 == 1
        servers = [f"s{i}" for i in range(1, rng.randint(2, 6) + 1)]
        templates = [feed_forward_job(rng, servers, f"t{i}", dag) for i in range(rng.randint(2, 5))]
        templates = [t for t in templates if max(t.server_loads().values()) <= 3]
        if not templates:
            continue
        b = Fraction(3)
        for r in (Fraction(1, 2), Fraction(1)):
            trace = generate_bounded_trace(case, servers, RbBound(r, b), templates, 400, attempts=3, spread=2)
            lim = derive_limits(trace.jobs)
            phi = compute_phi(servers, trace.jobs, b, lim.t_min, lim.t_max, lim.d_max, lim.max_length)
            assert phi is not None
            res = simulate(servers, trace, "FIFO" if case % 3 else "LIFO", 400)
            rep = check_feed_forward(res.metrics, phi)
            runs += 1
            checked += rep.instants_checked
            violations += rep.violations
    record("C5 feed-forward potential bound", runs >= 40 and not violations,
           f"{runs} runs (chains and layered DAGs, <=6 servers, r in {{1/2, 1}}), "
           f"{checked} instants checked, {len(violations)} violations")


def test_c6_independent_tasks_stable():
    rng = random.Random(6)
    servers = ["s1", "s2", "s3"]
    runs, checked, violations = 0, 0, []
    for case in range(8):
        templates = []
        for k in range(rng.randint(1, 4)):
            rows = [(i, [[]], rng.choice(servers), rng.choice([0, Fraction(1, 2), 1, 2]),
                     rng.choice([Fraction(1, 2), 1, Fraction(3, 2)])) for i in range(1, rng.randint(1, 3) + 1)]
            job = make_job(f"i{k}", rows)
            if max(job.server_loads().values()) <= 2:
                templates.append(job)
        if not templates:
            continue
        b = Fraction(2)
        trace = generate_bounded_trace(case, servers, RbBound(1, b), templates, 300, attempts=3)
        lim = derive_limits(trace.jobs)
        limits = independent_drain_limits(servers, b, lim.d_max)
        for policy in PolicyId:
            rep = check_drain_bound(simulate(servers, trace, policy, 300).metrics, limits)
            runs += 1
            checked += rep.instants_checked
            violations += rep.violations
    record("C6 fully-independent stability", runs >= 7 * 7 and not violations,
           f"{runs} runs over all policies at r=1, {checked} instants, {len(violations)} violations")


def test_c7_aqt_translation_fidelity():
    rng = random.Random(7)
    links = ["l1", "l2", "l3", "l4"]
    cases, mismatches, order_bad = 0, 0, 0
    for _ in range(150):
        paths = [rng.sample(links, rng.randint(1, 4)) for _ in range(rng.randint(1, 4))]
        pkts = sorted((rng.randint(0, 8), rng.randrange(len(paths))) for _ in range(rng.randint(1, 20)))
        expected = aqt_fifo(paths, pkts, 200)
        trace = from_aqt(paths, pkts)
        res = simulate(links, trace, "FIFO", 200)
        starts = {(e.job, e.task - 1): e.time for e in res.events if e.kind == "start"}
        done = {(e.job, e.task - 1): e.time for e in res.events if e.kind == "complete"}
        for (seq, hop), t in starts.items():
            if hop and t < done[(seq, hop - 1)]:
                order_bad += 1
        busy_sim, busy_ref = {}, {}
        for (seq, hop), t in starts.items():
            busy_sim.setdefault(paths[pkts[seq][1]][hop], []).append((t, t + 1))
        for (seq, hop), t in expected.items():
            busy_ref.setdefault(paths[pkts[seq][1]][hop], []).append((t, t + 1))
        same = starts == expected and all(merged_busy(busy_sim.get(l, [])) == merged_busy(busy_ref.get(l, []))
                                          for l in links)
        mismatches += not same
        cases += 1
    record("C7 AQT translation fidelity", mismatches == 0 and order_bad == 0,
           f"{cases} instances (<=4 links, <=20 packets), {mismatches} busy-period mismatches, "
           f"{order_bad} out-of-path-order starts")


def test_c8_lct_lis_gadget_instability():
    sc = load_scenario(SCENARIOS / "lct_lis_gadget.yaml")
    sr = simulate_scenario(sc)
    m = sr.result.metrics
    growth = detect_growth(m)
    mid = m.total_queued.value_at(m.horizon / 2)
    final = m.total_queued.value_at(m.horizon)
    osc = oscillation(m, "s1", "s4")
    ok = (len(sc.servers) == 4 and sc.policy is PolicyId.LCT_LIS and sc.bound.r == Fraction(4, 5)
          and growth.verdict == "growing" and final >= 2 * mid and osc.ok)
    record("C8 LCT-LIS gadget instability", ok,
           f"verdict {growth.verdict}, total queued mid {mid} -> final {final}, "
           f"{osc.alternations} s1/s4 alternations, increasing peaks: {osc.increasing}")


def test_c9_determinism():
    paths = sorted(SCENARIOS.glob("*.yaml"))
    differing = []
    for path in paths:
        sc = load_scenario(path)
        first = emit_event_log(simulate_scenario(sc).result.events)
        second = emit_event_log(simulate_scenario(load_scenario(path)).result.events)
        if first != second:
            differing.append(path.stem)
    servers = ["s1", "s2", "s3"]
    tpl = [make_job("c", [(1, [[]], "s1"), (2, [[1]], "s2"), (3, [[1], [2]], "s3", Fraction(1, 3))])]
    for policy in PolicyId:
        logs = {emit_event_log(simulate(servers, generate_bounded_trace(9, servers, RbBound(1, 2), tpl, 200,
                                                                         attempts=2), policy, 200).events)
                for _ in range(2)}
        if len(logs) != 1:
            differing.append(f"generated/{policy}")
    record("C9 determinism", not differing,
           f"{len(paths)} shipped scenarios + {len(PolicyId)} generated runs, twice each; differing: {differing or 'none'}")
