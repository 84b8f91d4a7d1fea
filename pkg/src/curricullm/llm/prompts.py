"""Prompt templates for the three LLM stages.

Templates are plain strings with ``<<Placeholder>>`` markers. Rendering is a
deterministic substitution, so identical context yields an identical
:class:`~curricullm.llm.backends.ChatRequest`.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from ..errors import MissingContextField
from .backends import ChatRequest
from .parsing import TaskSpec

CURRICULUM, TASK_CODE, EVALUATION = "curriculum", "task_code", "evaluation"
STAGES = (CURRICULUM, TASK_CODE, EVALUATION)

DEFAULT_TEMPERATURE = {CURRICULUM: 1.0, TASK_CODE: 1.0, EVALUATION: 0.0}
DEFAULT_MODEL = "gpt-4-turbo"
DEFAULT_HISTORY_BUDGET = 6000

DSL_GRAMMAR_CARD = """\
Reward programs are written in a small expression language:

    program := binding* "return" expr
    binding := NAME "=" expr
    expr    := numbers, variables, + - * /, unary minus, parentheses and function calls
    var     := NAME for a scalar variable, NAME[i] for component i of a vector (0-based)

Functions: abs(x), sq(x), sqrt(x), exp(x), tanh(x), min(x, y), max(x, y), clip(x, lo, hi).
Reductions over a whole vector variable: norm(v), sum(v), sum_sq(v), mean(v).
Vector variables must be indexed or reduced; scalars cannot be indexed.
All state variables refer to the state after the action. `action` is the action vector.
Division by values with magnitude below 1e-9 is an error. Lines starting with # are comments.

Goal ranges are written one per line as `NAME: [lo, hi]` and must stay inside the allowed range.

Example:
```reward
progress = -abs(dist_to_goal + 1)
effort = sum_sq(action)
return 1.0 * progress - 0.05 * effort
```
```goal
goal_distance: [0, 2]
```
"""

_CURRICULUM_SYSTEM = "You design training curricula for reinforcement learning agents."

_CURRICULUM_USER = """\
Break the target task of the environment below into a short sequence of training tasks that
lets an agent learn the target task efficiently.

Guidelines:
(1) Every task needs a concrete objective; random exploration is not a task.
(2) Use as few tasks as possible.
(3) Use at most 5 tasks.
(4) The final task must be the target task itself.
(5) Earlier tasks should build basic, reliable behaviour; later tasks should close in on the target.

Describe each task only with the state variables and goal dimensions listed below; do not invent
new variables. State the goal distribution range each task should use.

Answer in exactly this format:
Task 1
Name: <short name>
Description: <what the agent must achieve, including goal ranges>
Reason: <why this task helps>

Task 2
Name: ...
Description: ...
Reason: ...

The last task should be named "Original task".

Environment:
<<Environment>>
Target task:
<<Target>>
"""

_TASK_CODE_SYSTEM = "You write reward programs for reinforcement learning tasks."

_TASK_CODE_USER = """\
Write the reward program and goal distribution for one task of a curriculum. Earlier tasks of the
curriculum and the programs chosen for them are shown when available.

Put the reward program in a ```reward fenced block and the goal ranges in a ```goal fenced block.

Guidelines:
(1) Only use the variables listed in the environment description and `action`.
(2) All variables are normalized to [-1, 1]; a distance of 0 corresponds to -1.
(3) Give each reward term an explicit weight, applied outside of any squashing function.
(4) Weight the current task most, but keep smaller terms for earlier tasks so they are not forgotten.
(5) Episodes that end on success stop collecting reward, so keep per-step rewards non-positive
    when reaching the goal should end the episode.

<<Grammar>>
Environment:
<<Environment>>
Write the reward program and goal ranges for
Task Name: <<Task_Name>>
Description: <<Task_Description>>
Reason: <<Task_Reason>>
<<History>>"""

_TASK_CODE_HISTORY = """\

Previously learned tasks (most recent first):
<<Entries>>"""

_HISTORY_ENTRY = """\
Task Name: <<Task_Name>>
Description: <<Task_Description>>
Reason: <<Task_Reason>>
Code:
<<Task_Code>>
"""

_EVALUATION_SYSTEM = "You evaluate trained robot policies from their trajectory statistics."

_EVALUATION_USER = """\
Several agents were trained for the task below. Each agent block lists the mean of every
normalized state variable over its evaluation rollouts, the mean episode length and the
fraction of episodes that reached the goal. Pick the agent that best accomplishes the task.

The task belongs to a curriculum: judge mainly by the current task, but prefer agents that still
do well on the earlier tasks. Episodes end when the goal is reached, so a short episode with a
high success_rate is good, while a short episode without success is not.

Answer in exactly this format:
Decision: Agent [number]
Reason: <one paragraph>

Task Name: <<Task_Name>>
Description: <<Task_Description>>
Reason: <<Task_Reason>>
<<History>>
<<Summaries>>"""

_EVALUATION_HISTORY = """\

Earlier tasks in the curriculum (most recent first):
<<Entries>>"""

_EVALUATION_ENTRY = """\
Task Name: <<Task_Name>>
Description: <<Task_Description>>
Reason: <<Task_Reason>>
"""


@dataclass(frozen=True)
class HistoryItem:
    task: TaskSpec
    code: str


_PLACEHOLDER = re.compile(r"<<(\w+)>>")


def _fill(template: str, values: dict[str, str]) -> str:
    # single pass: substituted text is never re-scanned for placeholders
    return _PLACEHOLDER.sub(lambda m: values.get(m.group(1), m.group(0)), template)


def _task_fields(task: TaskSpec) -> dict[str, str]:
    return {"Task_Name": task.name, "Task_Description": task.description, "Task_Reason": task.reason}


def render_history(history, entry_template: str, budget: int) -> list[str]:
    """Entries most recent first; the oldest are dropped once ``budget`` characters are used."""
    out, used = [], 0
    for item in reversed(list(history)):
        values = _task_fields(item.task)
        values["Task_Code"] = item.code.strip()
        text = _fill(entry_template, values)
        if out and used + len(text) > budget:
            break
        out.append(text)
        used += len(text)
    return out


def _require(stage, context, *names):
    for name in names:
        if context.get(name) is None:
            raise MissingContextField(stage, name)


def render_prompt(stage: str, context: dict) -> ChatRequest:
    """Expand the template for ``stage`` with ``context`` into a chat request."""
    model = context.get("model") or DEFAULT_MODEL
    temperature = context.get("temperature", DEFAULT_TEMPERATURE.get(stage, 1.0))
    budget = context.get("history_char_budget", DEFAULT_HISTORY_BUDGET)
    if stage == CURRICULUM:
        _require(stage, context, "environment", "target")
        system = _CURRICULUM_SYSTEM
        user = _fill(_CURRICULUM_USER, {"Environment": context["environment"].rstrip() + "\n",
                                        "Target": context["target"].strip()})
    elif stage == TASK_CODE:
        _require(stage, context, "task", "environment", "history", "grammar")
        entries = render_history(context["history"], _HISTORY_ENTRY, budget)
        history = _fill(_TASK_CODE_HISTORY, {"Entries": "\n".join(entries)}) if entries else ""
        values = _task_fields(context["task"])
        values.update({"Grammar": context["grammar"].rstrip() + "\n",
                       "Environment": context["environment"].rstrip() + "\n",
                       "History": history})
        system = _TASK_CODE_SYSTEM
        user = _fill(_TASK_CODE_USER, values)
    elif stage == EVALUATION:
        _require(stage, context, "task", "history", "summaries")
        entries = render_history(context["history"], _EVALUATION_ENTRY, budget)
        history = _fill(_EVALUATION_HISTORY, {"Entries": "\n".join(entries)}) if entries else ""
        values = _task_fields(context["task"])
        values["Summaries"] = context["summaries"].rstrip() + "\n"
        values["History"] = history
        system = _EVALUATION_SYSTEM
        user = _fill(_EVALUATION_USER, values)
    else:
        raise ValueError(f"unknown prompt stage {stage!r}")
    return ChatRequest(model=model, messages=(("system", system), ("user", user)),
                       temperature=float(temperature), candidate_count=1)
