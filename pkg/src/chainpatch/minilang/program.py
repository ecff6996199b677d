"""Static checking, identifier assignment and the analyzed ``Program`` unit."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Optional

from chainpatch.errors import Diagnostic, ParseError
from chainpatch.minilang import nodes as ast
from chainpatch.minilang.parser import parse_unit

INT_MIN = -(1 << 63)
INT_MAX = (1 << 63) - 1

STMT_KINDS = {
    ast.VarDecl: "decl",
    ast.Assign: "assign",
    ast.IndexAssign: "assign",
    ast.If: "if",
    ast.While: "while",
    ast.Return: "return",
    ast.Print: "print",
    ast.ExprStmt: "expr",
}


@dataclass(frozen=True)
class StatementInfo:
    sid: int
    kind: str
    function: str
    line: int
    col: int


@dataclass(frozen=True)
class PredicateInfo:
    pid: int
    sid: int
    function: str
    line: int
    col: int
    start: int
    end: int


def content_digest(source: str) -> int:
    return int.from_bytes(hashlib.blake2b(source.encode("utf-8"), digest_size=8).digest(), "big")


class Program:
    """A parsed, statically checked program with dense statement/predicate ids."""

    def __init__(self, source, filename, globals_, functions, statements, stmt_function):
        self.source = source
        self.filename = filename
        self.globals = globals_
        self.functions = functions
        self.function_map = {f.name: f for f in functions}
        self.statements = statements  # index == StatementId
        self.statement_table = [
            StatementInfo(s.sid, STMT_KINDS[type(s)], stmt_function[s.sid], s.line, s.col)
            for s in statements
        ]
        self.predicate_table = []
        for s in statements:
            if isinstance(s, (ast.If, ast.While)):
                self.predicate_table.append(PredicateInfo(
                    s.pid, s.sid, stmt_function[s.sid], s.line, s.col, s.start, s.end))
        self.source_digest = content_digest(source)

    @property
    def digest_hex(self) -> str:
        return f"{self.source_digest:016x}"

    def predicate_stmt(self, pid: int) -> ast.Stmt:
        return self.statements[self.predicate_table[pid].sid]

    def pid_of_sid(self, sid: int) -> Optional[int]:
        stmt = self.statements[sid]
        return stmt.pid if isinstance(stmt, (ast.If, ast.While)) else None

    def is_predicate_sid(self, sid: int) -> bool:
        return isinstance(self.statements[sid], (ast.If, ast.While))

    @property
    def main(self) -> ast.FunctionDecl:
        return self.function_map["main"]

    def __repr__(self) -> str:
        return (f"Program({self.filename!r}, functions={len(self.functions)}, "
                f"statements={len(self.statements)}, predicates={len(self.predicate_table)})")


def parse(source: str, filename: str = "<source>") -> Program:
    """Parse and check ``source``; raises ParseError with positioned diagnostics."""
    source = source.replace("\r\n", "\n")
    globals_, functions = parse_unit(source, filename)
    checker = _Checker(filename, globals_, functions)
    checker.run()
    if checker.diagnostics:
        raise ParseError(checker.diagnostics)
    return Program(source, filename, globals_, functions, checker.statements, checker.stmt_function)


def parse_file(path) -> Program:
    with open(path, encoding="utf-8") as fh:
        return parse(fh.read(), str(path))


def predicate_sites(program: Program) -> list[int]:
    return [p.pid for p in program.predicate_table]


class _Checker:
    def __init__(self, filename, globals_, functions):
        self.filename = filename
        self.globals = globals_
        self.functions = functions
        self.diagnostics = []
        self.statements = []
        self.stmt_function = []
        self.next_pid = 0
        self.next_call = 0
        self.global_types = {}
        self.signatures = {}

    def err(self, node, msg):
        self.diagnostics.append(Diagnostic(self.filename, node.line, node.col, msg))

    def run(self):
        for g in self.globals:
            if g.name in self.global_types:
                self.err(g, f"duplicate declaration of global '{g.name}'")
                continue
            self.check_global(g)
            self.global_types[g.name] = g.decl_type
        for f in self.functions:
            if f.name in self.signatures:
                self.err(f, f"duplicate declaration of function '{f.name}'")
                continue
            if f.name in self.global_types:
                self.err(f, f"function '{f.name}' clashes with a global variable")
            for p in f.params:
                if p.type.is_array:
                    self.err(f, f"parameter '{p.name}' must have a scalar type")
            if f.return_type.is_array:
                self.err(f, f"function '{f.name}' must return a scalar type")
            self.signatures[f.name] = f
        if "main" not in self.signatures:
            self.diagnostics.append(Diagnostic(self.filename, 1, 1, "missing function 'main'"))
        else:
            main = self.signatures["main"]
            for p in main.params:
                if p.type != ast.INT:
                    self.err(main, f"main parameter '{p.name}' must be int")
        for f in self.functions:
            if self.signatures.get(f.name) is f:
                self.check_function(f)

    def check_global(self, g):
        t = g.decl_type
        if t.is_array:
            if t.length <= 0:
                self.err(g, "array length must be positive")
            if g.init is not None and len(g.init) != t.length:
                self.err(g, f"array literal has {len(g.init)} elements, expected {t.length}")
            return
        if g.init is None:
            return
        ok = (t == ast.BOOL and isinstance(g.init, bool)) or \
             (t == ast.STRING and isinstance(g.init, str)) or \
             (t == ast.INT and isinstance(g.init, int) and not isinstance(g.init, bool))
        if not ok:
            self.err(g, f"type mismatch: cannot initialize {t} with {g.init!r}")
        elif t == ast.INT and not INT_MIN <= g.init <= INT_MAX:
            self.err(g, "integer literal out of range")

    # -- functions -----------------------------------------------------------

    def check_function(self, f):
        self.fn = f
        self.declared = {}  # name -> Type, function-wide uniqueness
        for p in f.params:
            if p.name in self.declared:
                self.err(f, f"duplicate declaration of parameter '{p.name}'")
            elif p.name in self.global_types:
                self.err(f, f"parameter '{p.name}' shadows a global variable")
            self.declared[p.name] = p.type
        scope = [set(p.name for p in f.params)]
        self.check_block(f.body, scope)
        f.locals = {name: t for name, t in self.declared.items() if name not in f.param_names}

    def check_block(self, block, scope):
        scope.append(set())
        for stmt in block:
            self.check_stmt(stmt, scope)
        scope.pop()

    def lookup(self, node, name, scope):
        for frame in scope:
            if name in frame:
                return "local", self.declared[name]
        if name in self.global_types:
            return "global", self.global_types[name]
        if name in self.declared:
            self.err(node, f"use of '{name}' before its declaration")
        else:
            self.err(node, f"use of undeclared variable '{name}'")
        return None, None

    def check_stmt(self, stmt, scope):
        stmt.sid = len(self.statements)
        self.statements.append(stmt)
        self.stmt_function.append(self.fn.name)

        if isinstance(stmt, ast.VarDecl):
            t = stmt.decl_type
            if stmt.name in self.declared:
                self.err(stmt, f"duplicate declaration of '{stmt.name}'")
            elif stmt.name in self.global_types:
                self.err(stmt, f"local '{stmt.name}' shadows a global variable")
            if t.is_array:
                if t.length <= 0:
                    self.err(stmt, "array length must be positive")
                if stmt.init is not None and len(stmt.init) != t.length:
                    self.err(stmt, f"array literal has {len(stmt.init)} elements, expected {t.length}")
            elif stmt.init is not None:
                self.expect_type(stmt.init, t, scope)
            if stmt.name not in self.declared:
                self.declared[stmt.name] = t
            scope[-1].add(stmt.name)
        elif isinstance(stmt, ast.Assign):
            where, t = self.lookup(stmt, stmt.name, scope)
            stmt.scope = where or ""
            if t is not None and t.is_array:
                self.err(stmt, f"cannot assign to array '{stmt.name}' as a whole")
            elif t is not None:
                self.expect_type(stmt.value, t, scope)
            else:
                self.expr(stmt.value, scope)
        elif isinstance(stmt, ast.IndexAssign):
            where, t = self.lookup(stmt, stmt.name, scope)
            stmt.scope = where or ""
            if t is not None and not t.is_array:
                self.err(stmt, f"'{stmt.name}' is not an array")
            self.expect_type(stmt.index, ast.INT, scope)
            self.expect_type(stmt.value, ast.INT, scope)
        elif isinstance(stmt, (ast.If, ast.While)):
            stmt.pid = self.next_pid
            self.next_pid += 1
            self.expect_type(stmt.cond, ast.BOOL, scope)
            if isinstance(stmt, ast.If):
                self.check_block(stmt.then, scope)
                self.check_block(stmt.orelse, scope)
            else:
                self.check_block(stmt.body, scope)
        elif isinstance(stmt, ast.Return):
            rt = self.fn.return_type
            if stmt.value is None:
                if rt != ast.VOID:
                    self.err(stmt, f"function '{self.fn.name}' must return a {rt} value")
            elif rt == ast.VOID:
                self.err(stmt, f"function '{self.fn.name}' does not return a value")
                self.expr(stmt.value, scope)
            else:
                self.expect_type(stmt.value, rt, scope)
        elif isinstance(stmt, ast.Print):
            t = self.expr(stmt.value, scope)
            if t is not None and (t.is_array or t == ast.VOID):
                self.err(stmt, f"cannot print a value of type {t}")
        elif isinstance(stmt, ast.ExprStmt):
            if not isinstance(stmt.value, ast.Call):
                self.err(stmt, "expression statement must be a function call")
            self.expr(stmt.value, scope, allow_void=True)

    # -- expressions ---------------------------------------------------------

    def expect_type(self, expr, want, scope):
        got = self.expr(expr, scope)
        if got is not None and got != want:
            self.err(expr, f"type mismatch: expected {want}, found {got}")

    def expr(self, e, scope, allow_void=False):
        t = self._expr(e, scope, allow_void)
        e.type = t
        return t

    def _expr(self, e, scope, allow_void):
        if isinstance(e, ast.IntLit):
            if e.value > INT_MAX:
                self.err(e, "integer literal out of range")
            return ast.INT
        if isinstance(e, ast.BoolLit):
            return ast.BOOL
        if isinstance(e, ast.StrLit):
            return ast.STRING
        if isinstance(e, ast.Var):
            where, t = self.lookup(e, e.name, scope)
            e.scope = where or ""
            if t is not None and t.is_array:
                self.err(e, f"array '{e.name}' cannot be used as a value")
                return None
            return t
        if isinstance(e, ast.Index):
            where, t = self.lookup(e, e.name, scope)
            e.scope = where or ""
            if t is not None and not t.is_array:
                self.err(e, f"'{e.name}' is not an array")
            self.expect_type(e.index, ast.INT, scope)
            return ast.INT
        if isinstance(e, ast.Call):
            e.uid = self.next_call
            self.next_call += 1
            f = self.signatures.get(e.name)
            if f is None:
                self.err(e, f"call to undeclared function '{e.name}'")
                for a in e.args:
                    self.expr(a, scope)
                return None
            if len(e.args) != len(f.params):
                self.err(e, f"'{e.name}' expects {len(f.params)} arguments, got {len(e.args)}")
            for a, p in zip(e.args, f.params):
                self.expect_type(a, p.type, scope)
            for a in e.args[len(f.params):]:
                self.expr(a, scope)
            if f.return_type == ast.VOID and not allow_void:
                self.err(e, f"function '{e.name}' does not return a value")
                return None
            return f.return_type
        if isinstance(e, ast.Unary):
            if e.op == "-":
                self.expect_type(e.operand, ast.INT, scope)
                return ast.INT
            self.expect_type(e.operand, ast.BOOL, scope)
            return ast.BOOL
        if isinstance(e, ast.Binary):
            op = e.op
            if op in ("+", "-", "*", "/", "%"):
                self.expect_type(e.left, ast.INT, scope)
                self.expect_type(e.right, ast.INT, scope)
                return ast.INT
            if op in ("<", "<=", ">", ">="):
                self.expect_type(e.left, ast.INT, scope)
                self.expect_type(e.right, ast.INT, scope)
                return ast.BOOL
            if op in ("&&", "||"):
                self.expect_type(e.left, ast.BOOL, scope)
                self.expect_type(e.right, ast.BOOL, scope)
                return ast.BOOL
            lt = self.expr(e.left, scope)
            rt = self.expr(e.right, scope)
            if lt is not None and rt is not None and lt != rt:
                self.err(e, f"type mismatch: cannot compare {lt} with {rt}")
            return ast.BOOL
        raise AssertionError(f"unknown expression {e!r}")
