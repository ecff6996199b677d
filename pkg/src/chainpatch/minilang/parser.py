"""Recursive-descent parser producing an unchecked AST."""

from __future__ import annotations

from chainpatch.errors import Diagnostic, ParseError
from chainpatch.minilang import nodes as ast
from chainpatch.minilang.lexer import Token, tokenize

# binary operator precedence, lowest first
PRECEDENCE = [
    ("||",),
    ("&&",),
    ("==", "!="),
    ("<", "<=", ">", ">="),
    ("+", "-"),
    ("*", "/", "%"),
]


class Parser:
    def __init__(self, source: str, filename: str = "<source>"):
        self.filename = filename
        self.tokens = tokenize(source, filename)
        self.pos = 0

    # -- token helpers -------------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def at(self, *texts) -> bool:
        t = self.tok
        return t.kind in ("punct", "kw") and t.text in texts

    def advance(self) -> Token:
        t = self.tokens[self.pos]
        if t.kind != "eof":
            self.pos += 1
        return t

    def error(self, expected) -> ParseError:
        t = self.tok
        exp = ", ".join(sorted(repr(e) if not e.startswith("<") else e for e in expected))
        msg = f"expected one of {exp} but found {t.describe()}" if len(expected) > 1 else \
            f"expected {exp} but found {t.describe()}"
        return ParseError([Diagnostic(self.filename, t.line, t.col, msg)])

    def expect(self, text: str) -> Token:
        if not self.at(text):
            raise self.error([text])
        return self.advance()

    def expect_ident(self) -> Token:
        if self.tok.kind != "ident":
            raise self.error(["<identifier>"])
        return self.advance()

    def span(self, first: Token, node_cls, **kw):
        last = self.tokens[self.pos - 1]
        return node_cls(first.line, first.col, first.start, last.end, **kw)

    # -- top level -----------------------------------------------------------

    def parse_unit(self):
        globals_, functions = [], []
        while self.tok.kind != "eof":
            if self.at("var"):
                globals_.append(self.parse_global())
            elif self.at("func"):
                functions.append(self.parse_function())
            else:
                raise self.error(["func", "var"])
        return globals_, functions

    def parse_type(self) -> ast.Type:
        if self.at("int"):
            self.advance()
            if self.at("["):
                self.advance()
                if self.tok.kind != "int":
                    raise self.error(["<array length>"])
                length = self.advance().value
                self.expect("]")
                return ast.Type("array", length)
            return ast.INT
        if self.at("bool"):
            self.advance()
            return ast.BOOL
        if self.at("string"):
            self.advance()
            return ast.STRING
        raise self.error(["int", "bool", "string"])

    def parse_literal(self):
        """Constant initializer for globals: int, bool or string literal."""
        neg = False
        if self.at("-"):
            self.advance()
            neg = True
        t = self.tok
        if t.kind == "int":
            self.advance()
            return -t.value if neg else t.value
        if not neg and self.at("true", "false"):
            self.advance()
            return t.text == "true"
        if not neg and t.kind == "string":
            self.advance()
            return t.value
        raise self.error(["<literal>"])

    def parse_array_literal(self) -> list:
        self.expect("[")
        values = []
        if not self.at("]"):
            while True:
                v = self.parse_literal()
                if not isinstance(v, int) or isinstance(v, bool):
                    t = self.tokens[self.pos - 1]
                    raise ParseError([Diagnostic(self.filename, t.line, t.col,
                                                 "array literal elements must be integers")])
                values.append(v)
                if not self.at(","):
                    break
                self.advance()
        self.expect("]")
        return values

    def parse_global(self) -> ast.GlobalDecl:
        first = self.expect("var")
        name = self.expect_ident().text
        self.expect(":")
        typ = self.parse_type()
        init = None
        if self.at("="):
            self.advance()
            init = self.parse_array_literal() if typ.is_array else self.parse_literal()
        self.expect(";")
        return self.span(first, ast.GlobalDecl, name=name, decl_type=typ, init=init)

    def parse_function(self) -> ast.FunctionDecl:
        first = self.expect("func")
        name = self.expect_ident().text
        self.expect("(")
        params = []
        if not self.at(")"):
            while True:
                pname = self.expect_ident().text
                self.expect(":")
                params.append(ast.Param(pname, self.parse_type()))
                if not self.at(","):
                    break
                self.advance()
        self.expect(")")
        ret = ast.VOID
        if self.at(":"):
            self.advance()
            ret = self.parse_type()
        body = self.parse_block()
        return self.span(first, ast.FunctionDecl, name=name, params=params,
                         return_type=ret, body=body)

    # -- statements ----------------------------------------------------------

    def parse_block(self) -> list:
        self.expect("{")
        stmts = []
        while not self.at("}"):
            if self.tok.kind == "eof":
                raise self.error(["}"])
            stmts.append(self.parse_stmt())
        self.advance()
        return stmts

    def parse_body(self) -> list:
        """Braced block or a single statement (as in `if (c) print(0);`)."""
        if self.at("{"):
            return self.parse_block()
        return [self.parse_stmt()]

    def parse_stmt(self) -> ast.Stmt:
        first = self.tok
        if self.at("var"):
            self.advance()
            name = self.expect_ident().text
            self.expect(":")
            typ = self.parse_type()
            init = None
            if self.at("="):
                self.advance()
                init = self.parse_array_literal() if typ.is_array else self.parse_expr()
            self.expect(";")
            return self.span(first, ast.VarDecl, name=name, decl_type=typ, init=init)
        if self.at("if"):
            self.advance()
            lp = self.expect("(")
            cond = self.parse_expr()
            rp = self.expect(")")
            then = self.parse_body()
            orelse = []
            if self.at("else"):
                self.advance()
                orelse = self.parse_body()
            return self.span(first, ast.If, cond=cond, then=then, orelse=orelse,
                             lparen=lp.start, rparen=rp.start)
        if self.at("while"):
            self.advance()
            lp = self.expect("(")
            cond = self.parse_expr()
            rp = self.expect(")")
            body = self.parse_body()
            return self.span(first, ast.While, cond=cond, body=body,
                             lparen=lp.start, rparen=rp.start)
        if self.at("return"):
            self.advance()
            value = None if self.at(";") else self.parse_expr()
            self.expect(";")
            return self.span(first, ast.Return, value=value)
        if self.at("print"):
            self.advance()
            self.expect("(")
            value = self.parse_expr()
            self.expect(")")
            self.expect(";")
            return self.span(first, ast.Print, value=value)
        if self.tok.kind == "ident":
            nxt = self.tokens[self.pos + 1]
            if nxt.kind == "punct" and nxt.text == "=":
                name = self.advance().text
                self.advance()
                value = self.parse_expr()
                self.expect(";")
                return self.span(first, ast.Assign, name=name, value=value)
            if nxt.kind == "punct" and nxt.text == "[":
                # could be `a[i] = e;` or an expression statement starting with a[i]
                save = self.pos
                name = self.advance().text
                self.advance()
                index = self.parse_expr()
                self.expect("]")
                if self.at("="):
                    self.advance()
                    value = self.parse_expr()
                    self.expect(";")
                    return self.span(first, ast.IndexAssign, name=name, index=index, value=value)
                self.pos = save
            value = self.parse_expr()
            self.expect(";")
            return self.span(first, ast.ExprStmt, value=value)
        raise self.error(["var", "if", "while", "return", "print", "<identifier>", "}"])

    # -- expressions ---------------------------------------------------------

    def parse_expr(self, level: int = 0) -> ast.Expr:
        if level == len(PRECEDENCE):
            return self.parse_unary()
        first = self.tok
        left = self.parse_expr(level + 1)
        ops = PRECEDENCE[level]
        while self.tok.kind == "punct" and self.tok.text in ops:
            op = self.advance().text
            right = self.parse_expr(level + 1)
            left = ast.Binary(first.line, first.col, left.start, right.end,
                              op=op, left=left, right=right)
        return left

    def parse_unary(self) -> ast.Expr:
        first = self.tok
        if self.at("-", "!"):
            op = self.advance().text
            operand = self.parse_unary()
            return ast.Unary(first.line, first.col, first.start, operand.end,
                             op=op, operand=operand)
        return self.parse_primary()

    def parse_primary(self) -> ast.Expr:
        t = self.tok
        if t.kind == "int":
            self.advance()
            return self.span(t, ast.IntLit, value=t.value)
        if t.kind == "string":
            self.advance()
            return self.span(t, ast.StrLit, value=t.value)
        if self.at("true", "false"):
            self.advance()
            return self.span(t, ast.BoolLit, value=(t.text == "true"))
        if self.at("("):
            self.advance()
            inner = self.parse_expr()
            self.expect(")")
            return inner
        if t.kind == "ident":
            self.advance()
            if self.at("("):
                self.advance()
                args = []
                if not self.at(")"):
                    while True:
                        args.append(self.parse_expr())
                        if not self.at(","):
                            break
                        self.advance()
                self.expect(")")
                return self.span(t, ast.Call, name=t.text, args=args)
            if self.at("["):
                self.advance()
                index = self.parse_expr()
                self.expect("]")
                return self.span(t, ast.Index, name=t.text, index=index)
            return self.span(t, ast.Var, name=t.text)
        raise self.error(["<expression>"])


def parse_unit(source: str, filename: str = "<source>"):
    """Parse source into (globals, functions) without static checking."""
    return Parser(source, filename).parse_unit()
