from __future__ import annotations

from dataclasses import dataclass

from ..envs import EnvironmentDefinition
from ..errors import (
    BadIndex,
    BadReduction,
    ScalarIndexed,
    ShadowedVariable,
    UnknownVariable,
    VectorUsedAsScalar,
)
from .ast import Index, Reduce, RewardProgram, Var, walk

ACTION = "action"


@dataclass(frozen=True)
class Reference:
    """A resolved read of an environment variable or the action vector.

    ``index`` is the component for indexed (or one-dimensional) reads and
    ``None`` when ``reduction`` names a reduction over the whole vector.
    """

    name: str
    index: int | None
    reduction: str | None = None


@dataclass(frozen=True, eq=False)
class TypedProgram:
    program: RewardProgram
    env: EnvironmentDefinition
    references: tuple[Reference, ...]

    @property
    def source(self) -> str:
        return self.program.source


def _dims(env: EnvironmentDefinition) -> dict[str, int]:
    dims = {v.name: v.dims for v in env.variables}
    dims[ACTION] = env.action_dims
    return dims


def typecheck(program: RewardProgram, env: EnvironmentDefinition) -> TypedProgram:
    """Resolve every name in ``program`` against ``env``'s registry plus ``action``."""
    dims = _dims(env)
    scope: set[str] = set()
    refs: list[Reference] = []

    def check(expr):
        for node in walk(expr):
            if isinstance(node, Var):
                if node.name in scope:
                    continue
                if node.name not in dims:
                    raise UnknownVariable(node.name)
                if dims[node.name] != 1:
                    raise VectorUsedAsScalar(node.name)
                refs.append(Reference(node.name, 0))
            elif isinstance(node, Index):
                if node.name in scope:
                    raise ScalarIndexed(node.name)
                if node.name not in dims:
                    raise UnknownVariable(node.name)
                if dims[node.name] == 1:
                    raise ScalarIndexed(node.name)
                if node.index >= dims[node.name]:
                    raise BadIndex(node.name, node.index, dims[node.name])
                refs.append(Reference(node.name, node.index))
            elif isinstance(node, Reduce):
                if node.name in scope:
                    raise BadReduction(node.name)
                if node.name not in dims:
                    raise UnknownVariable(node.name)
                if dims[node.name] == 1:
                    raise BadReduction(node.name)
                refs.append(Reference(node.name, None, node.fn))

    for name, expr in program.bindings:
        if name in dims:
            raise ShadowedVariable(name)
        check(expr)
        scope.add(name)
    check(program.result)
    return TypedProgram(program, env, tuple(refs))
