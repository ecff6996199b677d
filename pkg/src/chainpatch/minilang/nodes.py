"""AST node classes for the bundled imperative language."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union


@dataclass(frozen=True)
class Type:
    name: str  # "int", "bool", "string" or "array"
    length: int = 0  # arrays only

    @property
    def is_array(self) -> bool:
        return self.name == "array"

    def __str__(self) -> str:
        return f"int[{self.length}]" if self.is_array else self.name


INT = Type("int")
BOOL = Type("bool")
STRING = Type("string")
VOID = Type("void")


@dataclass(eq=False)
class Node:
    line: int
    col: int
    start: int  # source offsets [start, end)
    end: int


# -- expressions -------------------------------------------------------------

@dataclass(eq=False)
class Expr(Node):
    type: Optional[Type] = field(default=None, init=False)


@dataclass(eq=False)
class IntLit(Expr):
    value: int = 0


@dataclass(eq=False)
class BoolLit(Expr):
    value: bool = False


@dataclass(eq=False)
class StrLit(Expr):
    value: str = ""


@dataclass(eq=False)
class Var(Expr):
    name: str = ""
    scope: str = field(default="", init=False)  # "local" or "global", set by the checker


@dataclass(eq=False)
class Index(Expr):
    name: str = ""
    index: Expr = None
    scope: str = field(default="", init=False)


@dataclass(eq=False)
class Call(Expr):
    name: str = ""
    args: list = field(default_factory=list)
    uid: int = field(default=-1, init=False)  # dense per program, set by the checker


@dataclass(eq=False)
class Unary(Expr):
    op: str = ""
    operand: Expr = None


@dataclass(eq=False)
class Binary(Expr):
    op: str = ""
    left: Expr = None
    right: Expr = None


# -- statements --------------------------------------------------------------

@dataclass(eq=False)
class Stmt(Node):
    sid: int = field(default=-1, init=False)


@dataclass(eq=False)
class VarDecl(Stmt):
    name: str = ""
    decl_type: Type = None
    init: Union[Expr, list, None] = None  # list of ints for array literals


@dataclass(eq=False)
class Assign(Stmt):
    name: str = ""
    value: Expr = None
    scope: str = field(default="", init=False)


@dataclass(eq=False)
class IndexAssign(Stmt):
    name: str = ""
    index: Expr = None
    value: Expr = None
    scope: str = field(default="", init=False)


@dataclass(eq=False)
class If(Stmt):
    cond: Expr = None
    then: list = field(default_factory=list)
    orelse: list = field(default_factory=list)
    lparen: int = 0  # offsets of the parentheses around cond
    rparen: int = 0
    pid: int = field(default=-1, init=False)


@dataclass(eq=False)
class While(Stmt):
    cond: Expr = None
    body: list = field(default_factory=list)
    lparen: int = 0
    rparen: int = 0
    pid: int = field(default=-1, init=False)


@dataclass(eq=False)
class Return(Stmt):
    value: Optional[Expr] = None


@dataclass(eq=False)
class Print(Stmt):
    value: Expr = None


@dataclass(eq=False)
class ExprStmt(Stmt):
    value: Expr = None


# -- top level ---------------------------------------------------------------

@dataclass(eq=False)
class Param:
    name: str
    type: Type


@dataclass(eq=False)
class GlobalDecl(Node):
    name: str = ""
    decl_type: Type = None
    init: Union[int, bool, str, list, None] = None


@dataclass(eq=False)
class FunctionDecl(Node):
    name: str = ""
    params: list = field(default_factory=list)
    return_type: Type = VOID
    body: list = field(default_factory=list)
    locals: dict = field(default_factory=dict)  # name -> Type, declared locals only

    @property
    def param_names(self) -> list:
        return [p.name for p in self.params]


def child_blocks(stmt: Stmt) -> list:
    if isinstance(stmt, If):
        return [stmt.then, stmt.orelse]
    if isinstance(stmt, While):
        return [stmt.body]
    return []


def walk_stmts(block: list):
    """Pre-order traversal of a statement list."""
    for stmt in block:
        yield stmt
        for sub in child_blocks(stmt):
            yield from walk_stmts(sub)


def walk_expr(expr):
    yield expr
    if isinstance(expr, Index):
        yield from walk_expr(expr.index)
    elif isinstance(expr, Call):
        for arg in expr.args:
            yield from walk_expr(arg)
    elif isinstance(expr, Unary):
        yield from walk_expr(expr.operand)
    elif isinstance(expr, Binary):
        yield from walk_expr(expr.left)
        yield from walk_expr(expr.right)


def stmt_exprs(stmt: Stmt) -> list:
    """Expressions evaluated directly by a statement (not its sub-blocks)."""
    if isinstance(stmt, VarDecl):
        return [stmt.init] if isinstance(stmt.init, Expr) else []
    if isinstance(stmt, Assign):
        return [stmt.value]
    if isinstance(stmt, IndexAssign):
        return [stmt.index, stmt.value]
    if isinstance(stmt, (If, While)):
        return [stmt.cond]
    if isinstance(stmt, Return):
        return [stmt.value] if stmt.value is not None else []
    if isinstance(stmt, (Print, ExprStmt)):
        return [stmt.value]
    return []
