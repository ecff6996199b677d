"""Canonical rendering of expressions (used for patched-source output and reports)."""

from __future__ import annotations

from chainpatch.minilang import nodes as ast

_LEVEL = {"||": 0, "&&": 1, "==": 2, "!=": 2, "<": 3, "<=": 3, ">": 3, ">=": 3,
          "+": 4, "-": 4, "*": 5, "/": 5, "%": 5}


def _quote(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n").replace("\t", "\\t") + '"'


def render(e: ast.Expr, parent_level: int = -1) -> str:
    if isinstance(e, ast.IntLit):
        return str(e.value)
    if isinstance(e, ast.BoolLit):
        return "true" if e.value else "false"
    if isinstance(e, ast.StrLit):
        return _quote(e.value)
    if isinstance(e, ast.Var):
        return e.name
    if isinstance(e, ast.Index):
        return f"{e.name}[{render(e.index)}]"
    if isinstance(e, ast.Call):
        return f"{e.name}({', '.join(render(a) for a in e.args)})"
    if isinstance(e, ast.Unary):
        return e.op + render(e.operand, 6)
    if isinstance(e, ast.Binary):
        level = _LEVEL[e.op]
        # left-associative: the right operand needs parens at equal level
        text = f"{render(e.left, level)} {e.op} {render(e.right, level + 1)}"
        return f"({text})" if level < parent_level else text
    raise TypeError(f"cannot render {e!r}")
