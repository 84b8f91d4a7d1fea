"""Parsers for curriculum and decision responses."""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass

from ..errors import CurriculumTooLong, IndexOutOfRange, MissingField, NoDecisionFound, NoTasksFound

logger = logging.getLogger(__name__)

MAX_TASKS = 8
RECOMMENDED_TASKS = 5
FIELDS = ("Name", "Description", "Reason")


@dataclass(frozen=True)
class TaskSpec:
    index: int
    name: str
    description: str
    reason: str

    def __post_init__(self):
        for f in ("name", "description", "reason"):
            if not getattr(self, f).strip():
                raise ValueError(f"TaskSpec.{f} must be non-empty")

    def to_dict(self) -> dict:
        return {"index": self.index, "name": self.name, "description": self.description,
                "reason": self.reason}

    @classmethod
    def from_dict(cls, data: dict) -> "TaskSpec":
        return cls(data["index"], data["name"], data["description"], data["reason"])


@dataclass(frozen=True)
class Curriculum:
    tasks: tuple[TaskSpec, ...]

    def __post_init__(self):
        if not self.tasks:
            raise NoTasksFound()
        if len(self.tasks) > MAX_TASKS:
            raise CurriculumTooLong(len(self.tasks), MAX_TASKS)

    def __len__(self):
        return len(self.tasks)

    def __iter__(self):
        return iter(self.tasks)

    def __getitem__(self, i):
        return self.tasks[i]

    @property
    def target(self) -> TaskSpec:
        return self.tasks[-1]

    def to_dict(self) -> dict:
        return {"tasks": [t.to_dict() for t in self.tasks]}

    @classmethod
    def from_dict(cls, data: dict) -> "Curriculum":
        return cls(tuple(TaskSpec.from_dict(t) for t in data["tasks"]))


@dataclass(frozen=True)
class Decision:
    agent_index: int
    reason: str


_HEADER = re.compile(r"^task\s+(\d+)\s*:?$", re.IGNORECASE)
_FIELD = re.compile(r"^(name|description|reason)\s*:\s*(.*)$", re.IGNORECASE)


def _clean(line: str) -> str:
    line = line.strip()
    line = re.sub(r"^#+\s*", "", line)
    line = re.sub(r"^[-•]\s+", "", line)
    # emphasis markers only at the edges or around a field label
    line = re.sub(r"^(\*\*|__|\*)+", "", line)
    line = re.sub(r"(\*\*|__|\*)+$", "", line)
    line = re.sub(r"^(name|description|reason)\s*(\*\*|__|\*)?\s*:\s*(\*\*|__|\*)?", r"\1: ", line,
                  flags=re.IGNORECASE)
    return line.strip()


def parse_curriculum(text: str) -> Curriculum:
    """Read ``Task <n>`` blocks with ``Name:``, ``Description:`` and ``Reason:`` fields."""
    blocks: list[dict[str, list[str]]] = []
    current_field = None
    for raw in text.splitlines():
        line = _clean(raw)
        if _HEADER.match(line):
            blocks.append({})
            current_field = None
            continue
        if not blocks:
            continue
        m = _FIELD.match(line)
        if m:
            current_field = m.group(1).capitalize()
            blocks[-1].setdefault(current_field, [])
            if m.group(2).strip():
                blocks[-1][current_field].append(m.group(2).strip())
        elif current_field is not None and line:
            blocks[-1][current_field].append(line)
    if not blocks:
        raise NoTasksFound()
    tasks = []
    for i, block in enumerate(blocks, start=1):
        values = {}
        for f in FIELDS:
            value = " ".join(block.get(f, [])).strip()
            if not value:
                raise MissingField(i, f)
            values[f.lower()] = value
        tasks.append(TaskSpec(i, **values))
    if len(tasks) > MAX_TASKS:
        raise CurriculumTooLong(len(tasks), MAX_TASKS)
    if len(tasks) > RECOMMENDED_TASKS:
        logger.warning("curriculum has %d tasks; at most %d are recommended", len(tasks), RECOMMENDED_TASKS)
    return Curriculum(tuple(tasks))


def render_curriculum(curriculum: Curriculum) -> str:
    """Inverse of :func:`parse_curriculum` for well-formed task specs."""
    blocks = []
    for i, t in enumerate(curriculum, start=1):
        blocks.append(f"Task {i}\nName: {t.name}\nDescription: {t.description}\nReason: {t.reason}")
    return "\n\n".join(blocks) + "\n"


_DECISION = re.compile(r"Decision\s*:?\s*\**\s*Agent\s*\[?\s*(\d+)\s*\]?", re.IGNORECASE)
_REASON = re.compile(r"Reason\s*:\s*(.*)", re.IGNORECASE | re.DOTALL)


def parse_decision(text: str, k: int) -> Decision:
    if k < 1:
        raise ValueError("need at least one candidate")
    m = _DECISION.search(text)
    if m is None:
        raise NoDecisionFound()
    digits = m.group(1)
    index = int(digits) if len(digits) <= 9 else k + 10**9
    if index >= k:
        raise IndexOutOfRange(index, k)
    r = _REASON.search(text, m.end())
    return Decision(index, r.group(1).strip() if r else "")
