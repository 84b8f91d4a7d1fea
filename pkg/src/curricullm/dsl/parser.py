"""Tokenizer, recursive-descent parser and canonical printer for reward programs.

Grammar::

    program := binding* "return" expr
    binding := IDENT "=" expr
    expr    := term (("+" | "-") term)*
    term    := unary (("*" | "/") unary)*
    unary   := "-" unary | atom
    atom    := NUMBER | IDENT | IDENT "[" INT "]" | FN "(" args ")" | "(" expr ")"

Newlines are insignificant and ``#`` starts a comment that runs to the end
of the line.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

from ..errors import EmptyProgram, MissingFence, TaskCodeSyntaxError
from .ast import (
    ARITY,
    FUNCTIONS,
    KEYWORDS,
    REDUCTIONS,
    BinOp,
    Call,
    Index,
    Neg,
    Num,
    Reduce,
    RewardProgram,
    Var,
)

_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>\#[^\n]*)
  | (?P<number>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/=()\[\],])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str  # "number", "ident", "op" or "eof"
    text: str
    line: int
    column: int


def tokenize(source: str, line_offset: int = 0) -> list[Token]:
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(source):
        m = _TOKEN.match(source, pos)
        if m is None:
            raise TaskCodeSyntaxError(
                f"unexpected character {source[pos]!r}", line + line_offset, pos - line_start + 1
            )
        kind = m.lastgroup
        if kind not in ("ws", "comment"):
            tokens.append(Token(kind, m.group(), line + line_offset, pos - line_start + 1))
        for i, ch in enumerate(m.group()):
            if ch == "\n":
                line += 1
                line_start = pos + i + 1
        pos = m.end()
    if tokens:
        # report end of input just past the last token rather than after trailing blank lines
        last = tokens[-1]
        tokens.append(Token("eof", "", last.line, last.column + len(last.text)))
    else:
        tokens.append(Token("eof", "", line + line_offset, pos - line_start + 1))
    return tokens


class _Parser:
    def __init__(self, tokens):
        self.tokens = tokens
        self.i = 0

    def peek(self, ahead=0) -> Token:
        return self.tokens[min(self.i + ahead, len(self.tokens) - 1)]

    def advance(self) -> Token:
        tok = self.tokens[self.i]
        self.i = min(self.i + 1, len(self.tokens) - 1)
        return tok

    def error(self, message, tok=None):
        tok = tok or self.peek()
        return TaskCodeSyntaxError(message, tok.line, tok.column)

    def expect(self, text):
        tok = self.peek()
        if tok.text != text or tok.kind not in ("op", "ident"):
            found = "end of input" if tok.kind == "eof" else repr(tok.text)
            raise self.error(f"expected {text!r}, found {found}")
        return self.advance()

    def program(self, source):
        if self.peek().kind == "eof":
            raise EmptyProgram()
        bindings = []
        seen = set()
        while True:
            tok = self.peek()
            if tok.kind == "eof":
                raise self.error("expected 'return' statement")
            if tok.kind == "ident" and tok.text == "return":
                self.advance()
                result = self.expr()
                if self.peek().kind != "eof":
                    raise self.error(f"unexpected {self.peek().text!r} after return expression")
                return RewardProgram(tuple(bindings), result, source)
            if tok.kind != "ident":
                raise self.error(f"expected a binding or 'return', found {tok.text!r}")
            if tok.text in FUNCTIONS:
                raise self.error(f"cannot bind reserved function name {tok.text!r}")
            if tok.text in seen:
                raise self.error(f"duplicate binding {tok.text!r}")
            self.advance()
            self.expect("=")
            bindings.append((tok.text, self.expr()))
            seen.add(tok.text)

    def expr(self):
        node = self.term()
        while self.peek().kind == "op" and self.peek().text in "+-":
            op = self.advance().text
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek().kind == "op" and self.peek().text in "*/":
            op = self.advance().text
            node = BinOp(op, node, self.unary())
        return node

    def unary(self):
        if self.peek().kind == "op" and self.peek().text == "-":
            self.advance()
            return Neg(self.unary())
        return self.atom()

    def atom(self):
        tok = self.peek()
        if tok.kind == "number":
            self.advance()
            value = float(tok.text)
            if not math.isfinite(value):
                raise self.error(f"numeric literal {tok.text} is out of range", tok)
            return Num(value)
        if tok.kind == "op" and tok.text == "(":
            self.advance()
            node = self.expr()
            self.expect(")")
            return node
        if tok.kind == "ident":
            if tok.text in KEYWORDS:
                raise self.error("'return' cannot appear inside an expression", tok)
            self.advance()
            if self.peek().text == "(" and self.peek().kind == "op":
                return self.call(tok)
            if tok.text in FUNCTIONS:
                raise self.error(f"function {tok.text!r} must be called", tok)
            if self.peek().text == "[" and self.peek().kind == "op":
                self.advance()
                idx = self.peek()
                if idx.kind != "number" or not idx.text.isdigit():
                    raise self.error("index must be a non-negative integer literal", idx)
                self.advance()
                self.expect("]")
                return Index(tok.text, int(idx.text))
            return Var(tok.text)
        found = "end of input" if tok.kind == "eof" else repr(tok.text)
        raise self.error(f"expected an expression, found {found}")

    def call(self, fn_tok):
        fn = fn_tok.text
        if fn not in FUNCTIONS:
            raise self.error(f"unknown function {fn!r}", fn_tok)
        self.expect("(")
        if fn in REDUCTIONS:
            arg = self.peek()
            if arg.kind != "ident" or arg.text in FUNCTIONS or arg.text in KEYWORDS:
                raise self.error(f"{fn}() takes a bare vector variable name", arg)
            self.advance()
            if self.peek().text != ")":
                raise self.error(f"{fn}() takes a bare vector variable name")
            self.expect(")")
            return Reduce(fn, arg.text)
        args = [self.expr()]
        while self.peek().kind == "op" and self.peek().text == ",":
            self.advance()
            args.append(self.expr())
        close = self.expect(")")
        if len(args) != ARITY[fn]:
            raise self.error(f"{fn}() takes {ARITY[fn]} argument(s), got {len(args)}", close)
        return Call(fn, tuple(args))


def parse_program(source: str, line_offset: int = 0) -> RewardProgram:
    """Parse the body of a reward block into a :class:`RewardProgram`."""
    return _Parser(tokenize(source, line_offset)).program(source)


# --- canonical printing --------------------------------------------------------------

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}


def _prec(node):
    if isinstance(node, BinOp):
        return _PREC[node.op]
    if isinstance(node, Neg):
        return 3
    return 4


def format_number(value: float) -> str:
    return repr(float(value))


def format_expr(node) -> str:
    if isinstance(node, Num):
        return format_number(node.value)
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Index):
        return f"{node.name}[{node.index}]"
    if isinstance(node, Reduce):
        return f"{node.fn}({node.name})"
    if isinstance(node, Call):
        return f"{node.fn}({', '.join(format_expr(a) for a in node.args)})"
    if isinstance(node, Neg):
        inner = format_expr(node.operand)
        return f"-({inner})" if _prec(node.operand) < 3 else f"-{inner}"
    if isinstance(node, BinOp):
        p = _PREC[node.op]
        left = format_expr(node.left)
        right = format_expr(node.right)
        if _prec(node.left) < p:
            left = f"({left})"
        # operators are left-associative, so an equal-precedence right child needs parens
        if _prec(node.right) <= p:
            right = f"({right})"
        return f"{left} {node.op} {right}"
    raise TypeError(f"not an expression node: {node!r}")


def pretty_print(program: RewardProgram) -> str:
    lines = [f"{name} = {format_expr(expr)}" for name, expr in program.bindings]
    lines.append(f"return {format_expr(program.result)}")
    return "\n".join(lines)


# --- fenced task code --------------------------------------------------------------------

_GOAL_LINE = re.compile(
    r"^\s*(?P<name>[A-Za-z_][A-Za-z_0-9]*)\s*:\s*\[\s*(?P<lo>[-+]?[^,\]\s]+)\s*,\s*(?P<hi>[-+]?[^,\]\s]+)\s*\]\s*$"
)


def _fence(text: str, tag: str):
    m = re.search(r"```[ \t]*" + tag + r"[ \t]*\r?\n(.*?)```", text, re.DOTALL)
    if m is None:
        raise MissingFence(tag)
    return m.group(1), text.count("\n", 0, m.start(1))


@dataclass(frozen=True)
class GoalLine:
    name: str
    lo: float
    hi: float
    line: int


def parse_goal_lines(block: str, line_offset: int = 0) -> list[GoalLine]:
    out = []
    for i, raw in enumerate(block.splitlines(), start=1):
        stripped = raw.split("#", 1)[0]
        if not stripped.strip():
            continue
        m = _GOAL_LINE.match(stripped)
        if m is None:
            col = len(raw) - len(raw.lstrip()) + 1
            raise TaskCodeSyntaxError("expected 'NAME: [lo, hi]'", i + line_offset, col)
        try:
            lo, hi = float(m.group("lo")), float(m.group("hi"))
        except ValueError:
            raise TaskCodeSyntaxError("range bounds must be decimal numbers", i + line_offset,
                                      m.start("lo") + 1) from None
        if not (math.isfinite(lo) and math.isfinite(hi)):
            raise TaskCodeSyntaxError("range bounds must be finite", i + line_offset, m.start("lo") + 1)
        if any(g.name == m.group("name") for g in out):
            raise TaskCodeSyntaxError(f"duplicate goal dimension {m.group('name')!r}",
                                      i + line_offset, 1)
        out.append(GoalLine(m.group("name"), lo, hi, i + line_offset))
    return out


@dataclass(frozen=True)
class ParsedTaskCode:
    program: RewardProgram
    goal_lines: tuple[GoalLine, ...]
    raw: str


def parse_task_code(text: str) -> ParsedTaskCode:
    """Extract and parse the first ```reward and ```goal fenced blocks of an LLM response."""
    reward_src, reward_offset = _fence(text, "reward")
    goal_src, goal_offset = _fence(text, "goal")
    program = parse_program(reward_src, reward_offset)
    goals = parse_goal_lines(goal_src, goal_offset)
    return ParsedTaskCode(program, tuple(goals), text)
