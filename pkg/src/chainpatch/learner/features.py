"""Static feature schemas and reduction of runtime values to 64-bit numbers.

For a predicate ``p`` inside function ``f`` the schema lists, in order:

1. ``used-in-p``: variables and call results appearing in ``p``'s condition;
2. ``formal-param``: ``f``'s parameters;
3. ``local-or-global-used-or-defined``: scalar int/bool locals of ``f`` and
   scalar globals read or written in ``f``;
4. ``array-or-string-reduced``: remaining arrays and strings used or defined
   in ``f`` (reduced to one number each).

A variable listed in several categories keeps the lowest one. Within a
category descriptors are sorted by name. A variable that has no value yet
when the snapshot is taken (local not declared so far, call short-circuited
away) reads as ``UNINITIALIZED`` (the minimum signed 64-bit integer).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

from chainpatch.minilang import INT_MIN, Program
from chainpatch.minilang import nodes as ast
from chainpatch.minilang.printer import render

CATEGORIES = (
    "used-in-p",
    "formal-param",
    "local-or-global-used-or-defined",
    "array-or-string-reduced",
)

UNINITIALIZED = INT_MIN

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
MASK64 = (1 << 64) - 1

_MISSING = object()


def _signed(h: int) -> int:
    return h - (1 << 64) if h >= 1 << 63 else h


def _fnv1a(data: bytes, h: int = FNV_OFFSET) -> int:
    for b in data:
        h = ((h ^ b) * FNV_PRIME) & MASK64
    return h


def string_digest(s: str) -> int:
    """FNV-1a-64 of the UTF-8 bytes, as a signed 64-bit integer."""
    return _signed(_fnv1a(s.encode("utf-8")))


def array_fold(values) -> int:
    """Order-sensitive FNV-1a-64 over the elements' little-endian encodings."""
    h = _fnv1a(struct.pack("<q", len(values)))
    for v in values:
        h = _fnv1a(struct.pack("<q", v), h)
    return _signed(h)


def reduce_value(v) -> int:
    if v is _MISSING or v is None:
        return UNINITIALIZED
    if isinstance(v, bool):
        return int(v)
    if isinstance(v, int):
        return v
    if isinstance(v, str):
        return string_digest(v)
    if isinstance(v, list):
        return array_fold(v)
    raise TypeError(f"cannot featurize {type(v).__name__}")


def featurize(values) -> tuple:
    """Map raw runtime values (in schema order) to a numeric vector."""
    return tuple(reduce_value(v) for v in values)


@dataclass(frozen=True)
class VariableDescriptor:
    name: str
    category: str
    reduction: str  # "int", "bool", "fnv1a64" or "fold64"
    kind: str = "var"  # "var" or "call"
    scope: str = "local"  # "local" or "global" for vars
    uid: int = -1  # call uid for kind == "call"


@dataclass(frozen=True)
class FeatureSchema:
    predicate: int
    descriptors: tuple

    def __len__(self):
        return len(self.descriptors)

    @property
    def names(self) -> list:
        return [d.name for d in self.descriptors]

    def read(self, frame, globals_) -> tuple:
        out = []
        for d in self.descriptors:
            if d.kind == "call":
                v = frame.callvals.get(d.uid, _MISSING)
            elif d.scope == "global":
                v = globals_.get(d.name, _MISSING)
            else:
                v = frame.vars.get(d.name, _MISSING)
            out.append(reduce_value(v))
        return tuple(out)

    def to_json(self) -> list:
        return [{"name": d.name, "category": d.category, "reduction": d.reduction}
                for d in self.descriptors]


def _reduction(t: ast.Type) -> str:
    if t.is_array:
        return "fold64"
    return {"int": "int", "bool": "bool", "string": "fnv1a64"}[t.name]


def _var_type(program: Program, fn: ast.FunctionDecl, name: str, scope: str) -> ast.Type:
    if scope == "global":
        return next(g.decl_type for g in program.globals if g.name == name)
    for p in fn.params:
        if p.name == name:
            return p.type
    return fn.locals[name]


def build_schema(program: Program, pid: int) -> FeatureSchema:
    pinfo = program.predicate_table[pid]
    fn = program.function_map[pinfo.function]
    pred = program.statements[pinfo.sid]
    entries = {}  # (kind, key) -> (category index, descriptor)

    def add(cat, name, reduction, kind="var", scope="local", uid=-1):
        key = (kind, uid if kind == "call" else name)
        if key in entries and entries[key][0] <= cat:
            return
        entries[key] = (cat, VariableDescriptor(name, CATEGORIES[cat], reduction, kind, scope, uid))

    # 1: uses in the condition, including values returned by calls
    call_texts = {}
    for e in ast.walk_expr(pred.cond):
        if isinstance(e, (ast.Var, ast.Index)):
            add(0, e.name, _reduction(_var_type(program, fn, e.name, e.scope)), scope=e.scope)
        elif isinstance(e, ast.Call):
            text = render(e)
            k = call_texts.get(text, 0)
            call_texts[text] = k + 1
            name = text if k == 0 else f"{text}#{k}"
            add(0, name, _reduction(program.function_map[e.name].return_type), "call", uid=e.uid)
    # 2: formal parameters
    for p in fn.params:
        add(1, p.name, _reduction(p.type))
    # 3 and 4: locals and globals used or defined in the function
    touched = {}
    for name in fn.locals:
        touched[name] = "local"
    for stmt in ast.walk_stmts(fn.body):
        if isinstance(stmt, (ast.Assign, ast.IndexAssign)) and stmt.scope == "global":
            touched[stmt.name] = "global"
        for expr in ast.stmt_exprs(stmt):
            for e in ast.walk_expr(expr):
                if isinstance(e, (ast.Var, ast.Index)) and e.scope == "global":
                    touched[e.name] = "global"
    for name, scope in touched.items():
        t = _var_type(program, fn, name, scope)
        cat = 3 if (t.is_array or t.name == "string") else 2
        add(cat, name, _reduction(t), scope=scope)

    ordered = sorted(entries.values(), key=lambda ce: (ce[0], ce[1].name))
    return FeatureSchema(pid, tuple(d for _, d in ordered))
