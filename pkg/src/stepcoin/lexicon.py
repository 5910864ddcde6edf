"""Three-level step taxonomy (domain -> task -> step) and its incidence matrix.

The lexicon is the shared vocabulary of the toolkit: score vectors are indexed
by step id, task prediction by task id.  Step ids must be dense ``0..K-1`` and
task ids dense ``0..M-1`` so that positional score vectors line up; the file
format therefore carries explicit ids rather than relying on entry order.
"""

from __future__ import annotations

import io
import json
import os
from dataclasses import dataclass
from typing import Any, BinaryIO

import numpy as np

from .errors import ParseError, UnknownTask, ValidationError

LEXICON_FORMAT = "stepcoin-lex-v1"

# Domain names used by the reference-shaped 12/180/778 sample taxonomy.
REFERENCE_DOMAIN_NAMES = (
    "nursing & caring",
    "vehicles",
    "leisure & performance",
    "gadgets",
    "electric appliances",
    "household items",
    "science & craft",
    "plants & fruits",
    "snacks & drinks",
    "dishes",
    "sports",
    "housework",
)


@dataclass(frozen=True)
class Domain:
    id: int
    name: str


@dataclass(frozen=True)
class Task:
    id: int
    domain_id: int
    name: str


@dataclass(frozen=True)
class Step:
    id: int
    task_id: int
    phrase: str


@dataclass(frozen=True)
class Lexicon:
    """Validated taxonomy; immutable, safe to share across threads."""

    domains: tuple[Domain, ...]
    tasks: tuple[Task, ...]
    steps: tuple[Step, ...]
    version: str

    @property
    def num_tasks(self) -> int:
        return len(self.tasks)

    @property
    def num_steps(self) -> int:
        return len(self.steps)

    def task_of_step(self, step_id: int) -> int:
        return self.steps[step_id].task_id

    def domain_of_task(self, task_id: int) -> int:
        return self.tasks[task_id].domain_id


@dataclass(frozen=True)
class StepTaskMatrix:
    """Binary K x M matrix; entry ``[i, j]`` is 1 iff step i belongs to task j."""

    entries: np.ndarray
    num_steps: int
    num_tasks: int

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, StepTaskMatrix):
            return NotImplemented
        return (
            self.num_steps == other.num_steps
            and self.num_tasks == other.num_tasks
            and np.array_equal(self.entries, other.entries)
        )


def _read_source(source: bytes | str | os.PathLike | BinaryIO) -> bytes:
    """Accept raw bytes, a filesystem path, or a binary file-like object."""
    if isinstance(source, bytes):
        return source
    if isinstance(source, (str, os.PathLike)):
        with open(source, "rb") as handle:
            return handle.read()
    if isinstance(source, io.TextIOBase):
        return source.read().encode("utf-8")
    return source.read()


def _parse_json(raw: bytes, what: str) -> dict[str, Any]:
    try:
        doc = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ParseError(f"{what}: not valid UTF-8 JSON ({exc})") from exc
    if not isinstance(doc, dict):
        raise ParseError(f"{what}: top level must be a JSON object")
    return doc


def _require(doc: dict[str, Any], key: str, kind: type, what: str) -> Any:
    if key not in doc:
        raise ParseError(f"{what}: missing key '{key}'")
    value = doc[key]
    if not isinstance(value, kind) or isinstance(value, bool):
        raise ParseError(f"{what}: key '{key}' must be {kind.__name__}")
    return value


def validate_lexicon(lexicon: Lexicon) -> None:
    """Raise ValidationError naming the first violated invariant."""
    seen_domains: set[int] = set()
    for d in lexicon.domains:
        if d.id in seen_domains:
            raise ValidationError(f"duplicate domain id {d.id}")
        seen_domains.add(d.id)
        if not d.name:
            raise ValidationError(f"domain {d.id}: empty name")

    task_ids = [t.id for t in lexicon.tasks]
    if sorted(task_ids) != list(range(len(task_ids))):
        raise ValidationError("task ids must be dense integers 0..M-1")
    for t in lexicon.tasks:
        if t.domain_id not in seen_domains:
            raise ValidationError(
                f"task {t.id}: unresolvable domain_id {t.domain_id}"
            )

    step_ids = [s.id for s in lexicon.steps]
    if sorted(step_ids) != list(range(len(step_ids))):
        raise ValidationError("step ids must be dense integers 0..K-1")
    phrases_per_task: dict[int, set[str]] = {}
    tasks_with_steps: set[int] = set()
    for s in lexicon.steps:
        if not (0 <= s.task_id < len(lexicon.tasks)):
            raise ValidationError(f"step {s.id}: unresolvable task_id {s.task_id}")
        if not s.phrase:
            raise ValidationError(f"step {s.id}: empty phrase")
        known = phrases_per_task.setdefault(s.task_id, set())
        if s.phrase in known:
            raise ValidationError(
                f"task {s.task_id}: duplicate step phrase '{s.phrase}'"
            )
        known.add(s.phrase)
        tasks_with_steps.add(s.task_id)

    for t in lexicon.tasks:
        if t.id not in tasks_with_steps:
            raise ValidationError(f"task {t.id}: has no steps")


def load_lexicon(source: bytes | str | os.PathLike | BinaryIO) -> Lexicon:
    """Parse and validate a lexicon file; entries are normalized to id order."""
    doc = _parse_json(_read_source(source), "lexicon")
    version = _require(doc, "version", str, "lexicon")
    domains_raw = _require(doc, "domains", list, "lexicon")
    tasks_raw = _require(doc, "tasks", list, "lexicon")
    steps_raw = _require(doc, "steps", list, "lexicon")

    try:
        domains = tuple(
            sorted(
                (Domain(id=int(d["id"]), name=str(d["name"])) for d in domains_raw),
                key=lambda d: d.id,
            )
        )
        tasks = tuple(
            sorted(
                (
                    Task(
                        id=int(t["id"]),
                        domain_id=int(t["domain_id"]),
                        name=str(t["name"]),
                    )
                    for t in tasks_raw
                ),
                key=lambda t: t.id,
            )
        )
        steps = tuple(
            sorted(
                (
                    Step(
                        id=int(s["id"]),
                        task_id=int(s["task_id"]),
                        phrase=str(s["phrase"]),
                    )
                    for s in steps_raw
                ),
                key=lambda s: s.id,
            )
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"lexicon: malformed entry ({exc})") from exc

    lexicon = Lexicon(domains=domains, tasks=tasks, steps=steps, version=version)
    validate_lexicon(lexicon)
    return lexicon


def serialize_lexicon(lexicon: Lexicon) -> bytes:
    doc = {
        "version": lexicon.version,
        "domains": [{"id": d.id, "name": d.name} for d in lexicon.domains],
        "tasks": [
            {"id": t.id, "domain_id": t.domain_id, "name": t.name}
            for t in lexicon.tasks
        ],
        "steps": [
            {"id": s.id, "task_id": s.task_id, "phrase": s.phrase}
            for s in lexicon.steps
        ],
    }
    return (json.dumps(doc, indent=2, sort_keys=True) + "\n").encode("utf-8")


def build_incidence_matrix(lexicon: Lexicon) -> StepTaskMatrix:
    """Map each step to its owning task as a binary K x M matrix.

    Pure function of the lexicon: identical input produces a bit-identical
    matrix.  Every row sums to exactly 1 (steps are task-exclusive) and every
    column sums to that task's step count.
    """
    k, m = lexicon.num_steps, lexicon.num_tasks
    entries = np.zeros((k, m), dtype=np.int8)
    for step in lexicon.steps:
        entries[step.id, step.task_id] = 1
    return StepTaskMatrix(entries=entries, num_steps=k, num_tasks=m)


def steps_of_task(lexicon: Lexicon, task_id: int) -> list[int]:
    """Step ids of one task, ascending."""
    if not (0 <= task_id < lexicon.num_tasks):
        raise UnknownTask(f"task id {task_id} out of range 0..{lexicon.num_tasks - 1}")
    return [s.id for s in lexicon.steps if s.task_id == task_id]


def reference_shaped_lexicon(version: str = "reference-shape-1") -> Lexicon:
    """Placeholder taxonomy with the reference shape: 12 domains, 180 tasks,
    778 steps (15 tasks per domain; step counts balanced to total 778)."""
    domains = tuple(Domain(id=i, name=name) for i, name in enumerate(REFERENCE_DOMAIN_NAMES))
    tasks = tuple(
        Task(id=i, domain_id=i // 15, name=f"task {i:03d}") for i in range(180)
    )
    # 778 = 180 * 4 + 58: give the first 58 tasks five steps, the rest four.
    steps = []
    step_id = 0
    for task in tasks:
        count = 5 if task.id < 58 else 4
        for j in range(count):
            steps.append(
                Step(id=step_id, task_id=task.id, phrase=f"step {j + 1} of task {task.id:03d}")
            )
            step_id += 1
    lexicon = Lexicon(domains=domains, tasks=tasks, steps=tuple(steps), version=version)
    validate_lexicon(lexicon)
    return lexicon
