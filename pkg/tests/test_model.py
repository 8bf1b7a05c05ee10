import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from ajq.model import (JobSpec, Limits, TaskSpec, TopologyGraph, assign_layers, distance_from_source,
                       distance_to_go, feed_forward_order, is_doable, job_topology, make_job, skeleton,
                       system_topology, validate_job)

from .conftest import feas_dict, random_job
from .oracles import completable, layers_minmax


def test_validate_rejects_zero_processing_time():
    job = make_job("z", [(1, [[]], "s1", 0, 0)])
    problems = validate_job(job, ["s1"])
    assert any("processing_time must be positive" in p for p in problems)


def test_validate_accepts_job_k(job_k):
    assert validate_job(job_k, ["s1"]) == []


def test_validate_unknown_feasibility_reference():
    job = make_job("bad", [(1, [[]]), (2, [[9]]), (3, [[1]]), (4, [[1]]), (5, [[1]])])
    problems = validate_job(job, ["s1"])
    assert any("task 2" in p and "feasibility set references unknown task" in p for p in problems)


def test_validate_other_invariants():
    job = JobSpec("x", (TaskSpec(1, "s9", Fraction(-1), Fraction(3), (frozenset({1}),)),))
    problems = validate_job(job, ["s1"], Limits(max_length=1, t_max=Fraction(2), burstiness=Fraction(2)))
    text = " | ".join(problems)
    assert "activation_delay must be nonnegative" in text
    assert "unknown server" in text
    assert "contains the task itself" in text
    assert "above declared T_max" in text
    assert "exceeds burstiness" in text
    long_job = make_job("long", [(i, [[]]) for i in range(1, 4)])
    assert any("maximum job length" in p for p in validate_job(long_job, ["s1"], Limits(max_length=2)))


def test_layers_j_and_k(job_j, job_k):
    k = assign_layers(job_k)
    assert dict(k.layers) == {1: 1, 2: 2, 3: 3, 4: 4, 5: 5}
    assert k.unassigned == frozenset()
    j = assign_layers(job_j)
    assert dict(j.layers) == {1: 1}
    assert j.unassigned == {2, 3, 4, 5}


def test_layers_job_r_matches_oracle(job_r):
    expected = layers_minmax(feas_dict(job_r))
    # frozen from the min-max oracle
    assert expected == {1: 1, 2: 1, 3: 2, 4: 3, 5: 4, 6: 3}
    lm = assign_layers(job_r)
    assert dict(lm.layers) == expected and lm.doable and lm.layer_count == 4


def test_layers_job_m_matches_oracle(job_m):
    expected = layers_minmax(feas_dict(job_m))
    assert expected == {1: 1, 2: 2, 3: 2, 4: 3, 5: 3}
    assert dict(assign_layers(job_m).layers) == expected


def test_mutual_dependence_is_unassigned():
    job = make_job("ab", [(1, [[2]]), (2, [[1]])])
    assert assign_layers(job).unassigned == {1, 2}
    assert not is_doable(job)


def test_is_doable_examples(job_j, job_k):
    assert not is_doable(job_j)
    assert is_doable(job_k)
    assert is_doable(make_job("one", [(1, [[]])]))


def test_skeletons():
    j = make_job("J", [(1, [[]]), (2, [[1, 5]]), (3, [[2]]), (4, [[3]]), (5, [[4]])])
    k = make_job("K", [(1, [[]]), (2, [[1], [5]]), (3, [[2]]), (4, [[3]]), (5, [[4]])])
    assert skeleton(j) == skeleton(k)
    free = make_job("free", [(i, [[]]) for i in range(1, 4)])
    assert skeleton(free).edges == frozenset()


def test_skeleton_job_r(job_r):
    assert skeleton(job_r).edges == {(1, 3), (1, 4), (2, 4), (3, 4), (4, 5), (3, 6), (5, 6)}


def test_system_topology_two_jobs(job_r, job_m):
    topo = system_topology([job_r, job_m])
    solid = {("s1", "s1"), ("s1", "s2"), ("s1", "s4"), ("s2", "s3"), ("s3", "s4")}
    dashed = {("s4", "s3"), ("s4", "s2"), ("s3", "s2"), ("s4", "s1"), ("s3", "s1"), ("s2", "s1")}
    assert job_topology(job_r).edges == solid
    assert job_topology(job_m).edges == dashed
    assert topo.edges == solid | dashed
    assert feed_forward_order(topo) is None


def test_system_topology_trivial():
    assert system_topology([]) == TopologyGraph()
    chain = make_job("c", [(1, [[]], "a"), (2, [[1]], "b")])
    assert system_topology([chain]).edges == {("a", "b")}


def test_feed_forward_order():
    chain = TopologyGraph(frozenset({"s1", "s2", "s3"}), frozenset({("s1", "s2"), ("s2", "s3")}))
    assert feed_forward_order(chain) == ["s1", "s2", "s3"]
    ring = TopologyGraph(frozenset({"s1", "s2"}), frozenset({("s1", "s2"), ("s2", "s1")}))
    assert feed_forward_order(ring) is None
    loop = TopologyGraph(frozenset({"s1"}), frozenset({("s1", "s1")}))
    assert feed_forward_order(loop) is None
    # ties released in natural identifier order
    wide = TopologyGraph(frozenset({"s10", "s2", "s1"}), frozenset({("s10", "s1")}))
    assert feed_forward_order(wide) == ["s2", "s10", "s1"]


def test_distances(job_k, job_r):
    assert distance_from_source(job_k, 3) == 2
    assert distance_to_go(job_k, 3) == 2
    assert distance_from_source(job_k, 1) == 0
    assert (distance_from_source(job_r, 6), distance_to_go(job_r, 6)) == (2, 1)
    with pytest.raises(ValueError):
        distance_to_go(make_job("ab", [(1, [[]]), (2, [[3]]), (3, [[2]])]), 1)


def _job_from_seed(seed):
    return random_job(random.Random(seed))


@settings(max_examples=300, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_layers_agree_with_minmax_oracle(seed):
    job = _job_from_seed(seed)
    lm = assign_layers(job)
    oracle = layers_minmax(feas_dict(job))
    assert {i: v for i, v in oracle.items() if v != float("inf")} == dict(lm.layers)
    assert lm.unassigned == {i for i, v in oracle.items() if v == float("inf")}
    assert lm.doable == completable(feas_dict(job))


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_layer_soundness_and_determinism(seed):
    job = _job_from_seed(seed)
    lm = assign_layers(job)
    assert lm == assign_layers(job)
    for t in job.tasks:
        if t.task_id not in lm.layers:
            continue
        ell = lm.layers[t.task_id]
        below = {k for k, v in lm.layers.items() if v < ell}
        assert any(fs <= below for fs in t.feasibility)
        if ell > 1:
            strictly = {k for k, v in lm.layers.items() if v < ell - 1}
            assert not any(fs <= strictly for fs in t.feasibility)
        assert (ell == 1) == t.is_initial
    assert lm.layer_count <= job.length


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(0, 2**32 - 1))
def test_adding_feasibility_set_is_monotone(seed, pick):
    job = _job_from_seed(seed)
    rng = random.Random(pick)
    target = rng.choice(job.tasks)
    others = [t.task_id for t in job.tasks if t.task_id != target.task_id]
    extra = frozenset(rng.sample(others, rng.randint(0, len(others))))
    tasks = tuple(
        TaskSpec(t.task_id, t.server, t.activation_delay, t.processing_time, t.feasibility + (extra,))
        if t is target else t for t in job.tasks)
    before, after = assign_layers(job), assign_layers(JobSpec(job.name, tasks))
    if target.task_id in before.layers:
        assert after.layers[target.task_id] <= before.layers[target.task_id]
    if before.doable:
        assert after.doable


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_layer_passes_are_polynomial(seed):
    job = _job_from_seed(seed)
    lm = assign_layers(job)
    total_sets = sum(len(t.feasibility) for t in job.tasks)
    assert lm.passes <= job.length
    assert lm.set_checks <= lm.passes * total_sets


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_skeleton_ignores_how_dependencies_are_grouped(seed):
    """Regrouping the same dependence pairs into different sets keeps the skeleton."""
    job = _job_from_seed(seed)
    regrouped = []
    for t in job.tasks:
        deps = sorted(set().union(*t.feasibility))
        sets = tuple(frozenset({d}) for d in deps) or (frozenset(),)
        regrouped.append(TaskSpec(t.task_id, t.server, t.activation_delay, t.processing_time, sets))
    assert skeleton(JobSpec("g", tuple(regrouped))) == skeleton(job)
