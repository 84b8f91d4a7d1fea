from __future__ import annotations

from dataclasses import dataclass

UNARY_FUNCTIONS = frozenset({"abs", "sq", "sqrt", "exp", "tanh"})
BINARY_FUNCTIONS = frozenset({"min", "max"})
TERNARY_FUNCTIONS = frozenset({"clip"})
REDUCTIONS = frozenset({"norm", "sum", "sum_sq", "mean"})
FUNCTIONS = UNARY_FUNCTIONS | BINARY_FUNCTIONS | TERNARY_FUNCTIONS | REDUCTIONS
KEYWORDS = frozenset({"return"})

ARITY = {
    **{f: 1 for f in UNARY_FUNCTIONS},
    **{f: 2 for f in BINARY_FUNCTIONS},
    **{f: 3 for f in TERNARY_FUNCTIONS},
}


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Index:
    name: str
    index: int


@dataclass(frozen=True)
class Neg:
    operand: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Call:
    fn: str
    args: tuple["Expr", ...]


@dataclass(frozen=True)
class Reduce:
    fn: str
    name: str


Expr = Num | Var | Index | Neg | BinOp | Call | Reduce


@dataclass(frozen=True)
class RewardProgram:
    bindings: tuple[tuple[str, Expr], ...]
    result: Expr
    source: str = ""

    def structure(self):
        """Everything except the raw source, for structural comparison."""
        return self.bindings, self.result


def walk(expr):
    yield expr
    if isinstance(expr, Neg):
        yield from walk(expr.operand)
    elif isinstance(expr, BinOp):
        yield from walk(expr.left)
        yield from walk(expr.right)
    elif isinstance(expr, Call):
        for arg in expr.args:
            yield from walk(arg)
