import random
from fractions import Fraction

import pytest

from ajq.model import JobSpec, TaskSpec, make_job

ACCEPTANCE_RESULTS: list[tuple[str, bool, str]] = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in ACCEPTANCE_RESULTS:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")


@pytest.fixture
def job_k():
    return make_job("K", [(1, [[]]), (2, [[1], [5]]), (3, [[2]]), (4, [[3]]), (5, [[4]])])


@pytest.fixture
def job_j():
    return make_job("J", [(1, [[]]), (2, [[1, 5]]), (3, [[2]]), (4, [[3]]), (5, [[4]])])


@pytest.fixture
def job_r():
    return make_job("R", [(1, [[]], "s1"), (2, [[]], "s1"), (3, [[1]], "s1"), (4, [[1, 2, 3]], "s2"),
                          (5, [[4]], "s3"), (6, [[3], [5]], "s4")])


@pytest.fixture
def job_m():
    return make_job("M", [(1, [[]], "s4"), (2, [[1]], "s3"), (3, [[1]], "s3"), (4, [[1, 2]], "s2"),
                          (5, [[1, 3], [4]], "s1")])


def random_job(rng: random.Random, max_tasks=6, servers=("s1", "s2", "s3"), times=(1,), delays=(0,),
               name="rand") -> JobSpec:
    """Random feasibility function: cycles, OR-sets and non-doable jobs all occur."""
    n = rng.randint(1, max_tasks)
    tasks = []
    for i in range(1, n + 1):
        others = [k for k in range(1, n + 1) if k != i]
        sets = []
        if rng.random() < 0.3:
            sets.append(frozenset())
        for _ in range(rng.randint(0 if sets else 1, 2)):
            if others:
                sets.append(frozenset(rng.sample(others, rng.randint(1, min(3, len(others))))))
            else:
                sets.append(frozenset())
        tasks.append(TaskSpec(i, rng.choice(servers), Fraction(rng.choice(delays)),
                              Fraction(rng.choice(times)), tuple(sets)))
    return JobSpec(name, tuple(tasks))


def feas_dict(job: JobSpec) -> dict:
    return {t.task_id: [set(s) for s in t.feasibility] for t in job.tasks}
