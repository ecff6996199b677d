from __future__ import annotations

from dataclasses import dataclass

from chainpatch.errors import Diagnostic, ParseError

KEYWORDS = {
    "func", "var", "if", "else", "while", "return", "print",
    "true", "false", "int", "bool", "string",
}

# longest first so that "<=" wins over "<"
PUNCT = [
    "&&", "||", "==", "!=", "<=", ">=",
    "(", ")", "{", "}", "[", "]", ",", ";", ":",
    "=", "<", ">", "+", "-", "*", "/", "%", "!",
]

ESCAPES = {"n": "\n", "t": "\t", "\\": "\\", '"': '"'}


@dataclass(frozen=True)
class Token:
    kind: str  # "ident", "int", "string", "kw", "punct", "eof"
    text: str
    value: object
    line: int
    col: int
    start: int
    end: int

    def describe(self) -> str:
        if self.kind == "eof":
            return "end of input"
        return repr(self.text)


def tokenize(source: str, filename: str = "<source>") -> list[Token]:
    tokens = []
    i, line, col = 0, 1, 1
    n = len(source)

    def fail(msg):
        raise ParseError([Diagnostic(filename, line, col, msg)])

    while i < n:
        ch = source[i]
        if ch == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if source.startswith("//", i):
            while i < n and source[i] != "\n":
                i += 1
            continue
        if source.startswith("/*", i):
            close = source.find("*/", i + 2)
            if close < 0:
                fail("unterminated block comment")
            for c in source[i:close + 2]:
                if c == "\n":
                    line += 1
                    col = 1
                else:
                    col += 1
            i = close + 2
            continue

        start, start_line, start_col = i, line, col
        if ch.isdigit():
            while i < n and source[i].isdigit():
                i += 1
            text = source[start:i]
            if i < n and (source[i].isalpha() or source[i] == "_"):
                fail(f"malformed number {source[start:i + 1]!r}")
            tokens.append(Token("int", text, int(text), start_line, start_col, start, i))
        elif ch.isalpha() or ch == "_":
            while i < n and (source[i].isalnum() or source[i] == "_"):
                i += 1
            text = source[start:i]
            kind = "kw" if text in KEYWORDS else "ident"
            tokens.append(Token(kind, text, text, start_line, start_col, start, i))
        elif ch == '"':
            i += 1
            chars = []
            while True:
                if i >= n or source[i] == "\n":
                    fail("unterminated string literal")
                c = source[i]
                if c == '"':
                    i += 1
                    break
                if c == "\\":
                    if i + 1 >= n or source[i + 1] not in ESCAPES:
                        fail("invalid escape sequence in string literal")
                    chars.append(ESCAPES[source[i + 1]])
                    i += 2
                else:
                    chars.append(c)
                    i += 1
            text = source[start:i]
            tokens.append(Token("string", text, "".join(chars), start_line, start_col, start, i))
        else:
            for p in PUNCT:
                if source.startswith(p, i):
                    i += len(p)
                    tokens.append(Token("punct", p, p, start_line, start_col, start, i))
                    break
            else:
                fail(f"unexpected character {ch!r}")
        col += i - start

    tokens.append(Token("eof", "", None, line, col, n, n))
    return tokens
