"""Vectorized evaluation of typed reward programs.

A program is compiled once into nested closures over numpy arrays, then
evaluated for a whole batch of transitions at a time. Faults are tracked per
element: the first fault in evaluation order wins, so a batch of one reports
the same fault a step-by-step interpreter would.
"""

from __future__ import annotations

import numpy as np

from ..envs import Transition
from ..errors import DivisionByNearZero, NonFiniteResult
from .ast import BinOp, Call, Index, Neg, Num, Reduce, Var
from .typecheck import ACTION, TypedProgram

DIVISION_GUARD = 1e-9

OK, DIVISION_FAULT, NONFINITE_FAULT = 0, 1, 2


class _Frame:
    __slots__ = ("obs", "action", "faults", "scope")

    def __init__(self, obs, action, n):
        self.obs = obs
        self.action = action
        self.faults = np.zeros(n, dtype=np.int8)
        self.scope = {}

    def read(self, name):
        return self.action if name == ACTION else self.obs[name]

    def fault(self, mask, code):
        self.faults = np.where((self.faults == OK) & mask, np.int8(code), self.faults)


def _compile(node, bound):
    if isinstance(node, Num):
        value = float(node.value)
        return lambda f: np.full(len(f.faults), value)
    if isinstance(node, Var):
        name = node.name
        if name in bound:
            return lambda f: f.scope[name]
        return lambda f: f.read(name)[:, 0]
    if isinstance(node, Index):
        name, i = node.name, node.index
        return lambda f: f.read(name)[:, i]
    if isinstance(node, Reduce):
        name = node.name
        if node.fn == "sum":
            return lambda f: f.read(name).sum(axis=1)
        if node.fn == "mean":
            return lambda f: f.read(name).mean(axis=1)
        if node.fn == "sum_sq":
            return lambda f: (f.read(name) ** 2).sum(axis=1)
        return lambda f: np.sqrt((f.read(name) ** 2).sum(axis=1))
    if isinstance(node, Neg):
        inner = _compile(node.operand, bound)
        return lambda f: -inner(f)
    if isinstance(node, BinOp):
        left, right = _compile(node.left, bound), _compile(node.right, bound)
        if node.op == "+":
            return lambda f: left(f) + right(f)
        if node.op == "-":
            return lambda f: left(f) - right(f)
        if node.op == "*":
            return lambda f: left(f) * right(f)

        def divide(f):
            a, b = left(f), right(f)
            bad = np.abs(b) < DIVISION_GUARD
            f.fault(bad, DIVISION_FAULT)
            return np.where(bad, np.nan, a / np.where(bad, 1.0, b))

        return divide
    if isinstance(node, Call):
        args = [_compile(a, bound) for a in node.args]
        fn = node.fn
        if fn == "abs":
            return lambda f: np.abs(args[0](f))
        if fn == "sq":
            return lambda f: np.square(args[0](f))
        if fn == "sqrt":
            return lambda f: np.sqrt(np.maximum(args[0](f), 0.0))
        if fn == "exp":
            return lambda f: np.exp(args[0](f))
        if fn == "tanh":
            return lambda f: np.tanh(args[0](f))
        if fn == "min":
            return lambda f: np.minimum(args[0](f), args[1](f))
        if fn == "max":
            return lambda f: np.maximum(args[0](f), args[1](f))
        if fn == "clip":
            # clip(x, lo, hi) = min(max(x, lo), hi), also when lo > hi
            return lambda f: np.minimum(np.maximum(args[0](f), args[1](f)), args[2](f))
    raise TypeError(f"cannot compile {node!r}")


class CompiledReward:
    """Batch evaluator for one :class:`TypedProgram`."""

    def __init__(self, typed: TypedProgram):
        self.typed = typed
        bound = set()
        self._bindings = []
        for name, expr in typed.program.bindings:
            self._bindings.append((name, _compile(expr, frozenset(bound))))
            bound.add(name)
        self._result = _compile(typed.program.result, frozenset(bound))

    def __call__(self, obs, action):
        """Evaluate on ``N`` transitions.

        ``obs`` maps variable names to ``(N, dims)`` arrays of the next
        observation; ``action`` is ``(N, action_dims)``. Returns
        ``(values, faults)`` where faulted entries of ``values`` are NaN and
        ``faults`` holds 0 (ok), 1 (division) or 2 (non-finite).
        """
        action = np.asarray(action, dtype=float)
        frame = _Frame(obs, action, len(action))
        with np.errstate(all="ignore"):
            for name, fn in self._bindings:
                value = fn(frame)
                frame.fault(~np.isfinite(value), NONFINITE_FAULT)
                frame.scope[name] = value
            result = self._result(frame)
            frame.fault(~np.isfinite(result), NONFINITE_FAULT)
        result = np.where(frame.faults == OK, result, np.nan)
        return result, frame.faults


def raise_fault(code: int):
    if code == DIVISION_FAULT:
        raise DivisionByNearZero()
    if code == NONFINITE_FAULT:
        raise NonFiniteResult()


def evaluate_reward(program: TypedProgram | CompiledReward, transition: Transition) -> float:
    """Reward for one transition: variables bind to ``s'``, ``action`` to ``a``."""
    compiled = program if isinstance(program, CompiledReward) else CompiledReward(program)
    env = compiled.typed.env
    obs = {v.name: np.asarray(transition.next_observation[v.name], dtype=float).reshape(1, v.dims)
           for v in env.variables}
    action = np.asarray(transition.action, dtype=float).reshape(1, env.action_dims)
    values, faults = compiled(obs, action)
    raise_fault(int(faults[0]))
    return float(values[0])
