from __future__ import annotations

import pytest

from stepcoin.lexicon import Domain, Lexicon, Step, Task, validate_lexicon


def make_lexicon(steps_per_task: list[int], domains: int = 1) -> Lexicon:
    """Dense toy lexicon; task t gets steps_per_task[t] steps, domains cycled."""
    domain_objs = tuple(Domain(id=d, name=f"domain {d}") for d in range(domains))
    tasks = tuple(
        Task(id=t, domain_id=t % domains, name=f"task {t}")
        for t in range(len(steps_per_task))
    )
    steps = []
    step_id = 0
    for t, count in enumerate(steps_per_task):
        for j in range(count):
            steps.append(Step(id=step_id, task_id=t, phrase=f"step {j} of task {t}"))
            step_id += 1
    lexicon = Lexicon(domains=domain_objs, tasks=tasks, steps=tuple(steps), version="test")
    validate_lexicon(lexicon)
    return lexicon


@pytest.fixture
def tiny_lexicon() -> Lexicon:
    """Two domains, three tasks; steps {0,1}, {2,3,4}, {5}."""
    return make_lexicon([2, 3, 1], domains=2)


@pytest.fixture
def two_task_lexicon() -> Lexicon:
    """Steps {0,1} -> task 0 and step {2} -> task 1."""
    return make_lexicon([2, 1])
