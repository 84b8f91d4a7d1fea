"""Reward-expression DSL: the executable form of LLM-generated task code."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

from ..envs import EnvironmentDefinition, GoalDistributionSpec
from .ast import RewardProgram
from .evaluate import CompiledReward, evaluate_reward
from .parser import GoalLine, ParsedTaskCode, parse_goal_lines, parse_program, parse_task_code, pretty_print
from .typecheck import TypedProgram, typecheck

__all__ = [
    "CompiledReward",
    "GoalLine",
    "ParsedTaskCode",
    "RewardProgram",
    "TaskCode",
    "TypedProgram",
    "compile_task_code",
    "evaluate_reward",
    "parse_goal_lines",
    "parse_program",
    "parse_task_code",
    "pretty_print",
    "typecheck",
    "validate_goal_spec",
]


def validate_goal_spec(lines, env: EnvironmentDefinition) -> GoalDistributionSpec:
    spec = GoalDistributionSpec({g.name: (g.lo, g.hi) for g in lines})
    return spec.validate(env)


@dataclass(frozen=True, eq=False)
class TaskCode:
    """A typechecked reward program together with its goal distribution."""

    program: TypedProgram
    goal_spec: GoalDistributionSpec
    raw: str

    @property
    def env(self) -> EnvironmentDefinition:
        return self.program.env

    @cached_property
    def compiled(self) -> CompiledReward:
        return CompiledReward(self.program)

    def canonical(self) -> str:
        """Canonical reward and goal fences, suitable for re-parsing."""
        return (
            "```reward\n" + pretty_print(self.program.program) + "\n```\n"
            "```goal\n" + self.goal_spec.to_text() + "\n```\n"
        )

    def rewards(self, obs, action, success):
        return self.compiled(obs, action)


def compile_task_code(text: str, env: EnvironmentDefinition) -> TaskCode:
    """Parse, typecheck and validate a full LLM response against ``env``."""
    parsed = parse_task_code(text)
    typed = typecheck(parsed.program, env)
    spec = validate_goal_spec(parsed.goal_lines, env)
    return TaskCode(typed, spec, text)
