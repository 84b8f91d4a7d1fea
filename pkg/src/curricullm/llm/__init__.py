"""LLM gateway: prompt rendering, chat backends and response parsing."""

from .backends import (
    Backend,
    ChatRequest,
    Gateway,
    LiveBackend,
    ReplayBackend,
    ScriptedBackend,
    parse_backend_spec,
)
from .parsing import Curriculum, Decision, TaskSpec, parse_curriculum, parse_decision, render_curriculum
from .prompts import (
    CURRICULUM,
    DSL_GRAMMAR_CARD,
    EVALUATION,
    TASK_CODE,
    HistoryItem,
    render_prompt,
)

__all__ = [
    "Backend",
    "CURRICULUM",
    "ChatRequest",
    "Curriculum",
    "DSL_GRAMMAR_CARD",
    "Decision",
    "EVALUATION",
    "Gateway",
    "HistoryItem",
    "LiveBackend",
    "ReplayBackend",
    "ScriptedBackend",
    "TASK_CODE",
    "TaskSpec",
    "parse_backend_spec",
    "parse_curriculum",
    "parse_decision",
    "render_curriculum",
    "render_prompt",
]
