"""Boolean guard expressions for scenario choices.

Infix grammar with keywords ``and``, ``or``, ``not``, comparisons
(``== != < <= > >=``), integer/boolean/string literals, and declared
variables.  Precedence, loosest first: ``or``, ``and``, comparison,
``not``.  Comparisons are non-associative (``a == b == c`` is a syntax
error) and there is no arithmetic, which keeps evaluation total.

An absent or empty expression means "always true".
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Union

from .errors import ExprSyntaxError, TypeMismatch, UndeclaredVariable

Value = Union[int, bool, str]


@dataclass(frozen=True)
class Lit:
    value: Value


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Not:
    operand: "ConditionExpr"


@dataclass(frozen=True)
class BoolOp:
    op: str  # "and" | "or"
    left: "ConditionExpr"
    right: "ConditionExpr"


@dataclass(frozen=True)
class Compare:
    op: str  # "==" "!=" "<" "<=" ">" ">="
    left: "ConditionExpr"
    right: "ConditionExpr"


ConditionExpr = Union[Lit, Var, Not, BoolOp, Compare]

ALWAYS_TRUE: ConditionExpr = Lit(True)

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<int>-?\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<str>"[^"\n]*"|'[^'\n]*')
  | (?P<op>==|!=|<=|>=|<|>|\(|\))
    """,
    re.VERBOSE,
)

_KEYWORDS = {"and", "or", "not", "true", "false"}
_ORDER_OPS = {"<", "<=", ">", ">="}


def _tokenize(text: str) -> list[tuple[str, str]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ExprSyntaxError(f"unexpected character {text[pos]!r}", offset=pos)
        pos = m.end()
        kind = m.lastgroup
        if kind == "ws":
            continue
        tokens.append((kind, m.group()))
    tokens.append(("end", ""))
    return tokens


class _Parser:
    def __init__(self, tokens: list[tuple[str, str]]):
        self.tokens = tokens
        self.i = 0

    def peek(self) -> tuple[str, str]:
        return self.tokens[self.i]

    def next(self) -> tuple[str, str]:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect_op(self, op: str) -> None:
        kind, text = self.next()
        if kind != "op" or text != op:
            raise ExprSyntaxError(f"expected {op!r}, found {text!r}")

    def parse(self) -> ConditionExpr:
        expr = self.or_expr()
        kind, text = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"trailing input at {text!r}")
        return expr

    def or_expr(self) -> ConditionExpr:
        left = self.and_expr()
        while self.peek() == ("ident", "or"):
            self.next()
            left = BoolOp("or", left, self.and_expr())
        return left

    def and_expr(self) -> ConditionExpr:
        left = self.cmp_expr()
        while self.peek() == ("ident", "and"):
            self.next()
            left = BoolOp("and", left, self.cmp_expr())
        return left

    def cmp_expr(self) -> ConditionExpr:
        left = self.not_expr()
        kind, text = self.peek()
        if kind == "op" and text in ("==", "!=", "<", "<=", ">", ">="):
            self.next()
            return Compare(text, left, self.not_expr())
        return left

    def not_expr(self) -> ConditionExpr:
        if self.peek() == ("ident", "not"):
            self.next()
            return Not(self.not_expr())
        return self.primary()

    def primary(self) -> ConditionExpr:
        kind, text = self.next()
        if kind == "int":
            return Lit(int(text))
        if kind == "str":
            return Lit(text[1:-1])
        if kind == "ident":
            if text == "true":
                return Lit(True)
            if text == "false":
                return Lit(False)
            if text in _KEYWORDS:
                raise ExprSyntaxError(f"unexpected keyword {text!r}")
            return Var(text)
        if kind == "op" and text == "(":
            expr = self.or_expr()
            self.expect_op(")")
            return expr
        raise ExprSyntaxError(f"unexpected token {text!r}" if text else "unexpected end of expression")


def parse_expression(text: str | None) -> ConditionExpr:
    """Parse syntax only; names are not checked against any variable table."""
    if text is None or text.strip() == "":
        return ALWAYS_TRUE
    return _Parser(_tokenize(text)).parse()


def value_type(value: Value) -> str:
    # bool subclasses int, so check it first
    if isinstance(value, bool):
        return "bool"
    if isinstance(value, int):
        return "int"
    if isinstance(value, str):
        return "str"
    raise TypeMismatch(f"unsupported value {value!r}")


def check_types(expr: ConditionExpr, var_types: dict[str, str]) -> str:
    """Return the expression's type, raising on undeclared names or misuse."""
    if isinstance(expr, Lit):
        return value_type(expr.value)
    if isinstance(expr, Var):
        if expr.name not in var_types:
            raise UndeclaredVariable(f"variable {expr.name!r} is not declared")
        return var_types[expr.name]
    if isinstance(expr, Not):
        t = check_types(expr.operand, var_types)
        if t != "bool":
            raise TypeMismatch(f"'not' needs a boolean operand, got {t}")
        return "bool"
    if isinstance(expr, BoolOp):
        for side in (expr.left, expr.right):
            t = check_types(side, var_types)
            if t != "bool":
                raise TypeMismatch(f"{expr.op!r} needs boolean operands, got {t}")
        return "bool"
    if isinstance(expr, Compare):
        lt = check_types(expr.left, var_types)
        rt = check_types(expr.right, var_types)
        if lt != rt:
            raise TypeMismatch(f"cannot compare {lt} with {rt}")
        if expr.op in _ORDER_OPS and lt != "int":
            raise TypeMismatch(f"{expr.op!r} only orders integers, got {lt}")
        return "bool"
    raise TypeMismatch(f"unknown expression node {expr!r}")


def parse_condition(text: str | None, variables: dict[str, Value]) -> ConditionExpr:
    """Parse and type-check an expression against declared variables.

    Empty or absent text yields the always-true expression.
    """
    expr = parse_expression(text)
    var_types = {name: value_type(v) for name, v in variables.items()}
    t = check_types(expr, var_types)
    if t != "bool":
        raise TypeMismatch(f"condition must be boolean, got {t}")
    return expr


def eval_condition(expr: ConditionExpr, variables: dict[str, Value]) -> bool:
    """Evaluate a type-checked expression; total over declared variables."""
    result = _eval(expr, variables)
    assert isinstance(result, bool)
    return result


def _eval(expr: ConditionExpr, variables: dict[str, Value]) -> Value:
    if isinstance(expr, Lit):
        return expr.value
    if isinstance(expr, Var):
        return variables[expr.name]
    if isinstance(expr, Not):
        return not _eval(expr.operand, variables)
    if isinstance(expr, BoolOp):
        if expr.op == "and":
            return bool(_eval(expr.left, variables)) and bool(_eval(expr.right, variables))
        return bool(_eval(expr.left, variables)) or bool(_eval(expr.right, variables))
    if isinstance(expr, Compare):
        lv = _eval(expr.left, variables)
        rv = _eval(expr.right, variables)
        if expr.op == "==":
            return lv == rv
        if expr.op == "!=":
            return lv != rv
        if expr.op == "<":
            return lv < rv
        if expr.op == "<=":
            return lv <= rv
        if expr.op == ">":
            return lv > rv
        return lv >= rv
    raise AssertionError(f"unreachable: {expr!r}")


def referenced_variables(expr: ConditionExpr) -> set[str]:
    if isinstance(expr, Var):
        return {expr.name}
    if isinstance(expr, Not):
        return referenced_variables(expr.operand)
    if isinstance(expr, (BoolOp, Compare)):
        return referenced_variables(expr.left) | referenced_variables(expr.right)
    return set()
