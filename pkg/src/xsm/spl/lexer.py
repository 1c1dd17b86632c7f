"""Tokenizer for SPL source text."""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import CompileError

KEYWORDS = frozenset(
    """alias define if then else endif while do endwhile breakpoint halt ireturn
    push pop call return load loadi store storei print in ini out encrypt backup
    restore tsl start""".split()
)

KEYWORD = "keyword"
IDENTIFIER = "identifier"
INTEGER = "integer"
STRING = "string"
OPERATOR = "operator"
PUNCTUATION = "punctuation"

_TOKEN = re.compile(
    r"""
    (?P<space>[ \t\r\f\v]+)
  | (?P<newline>\n)
  | (?P<comment>//[^\n]*)
  | (?P<string>"[^"\n]*")
  | (?P<badstring>")
  | (?P<integer>[0-9]+)
  | (?P<identifier>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<operator>==|!=|<=|>=|[<>=+\-*/%])
  | (?P<punctuation>[;,()\[\]])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int


def tokenize(source: str) -> list[Token]:
    """Split ``source`` into tokens.

    Keywords are matched case-insensitively and reported in lower case;
    identifiers keep their case.
    """
    tokens: list[Token] = []
    line = 1
    pos = 0
    while pos < len(source):
        m = _TOKEN.match(source, pos)
        if m is None:
            raise CompileError(f"illegal character {source[pos]!r}", line)
        kind = m.lastgroup
        text = m.group()
        if kind == "newline":
            line += 1
        elif kind == "badstring":
            raise CompileError("unterminated string", line)
        elif kind == "string":
            tokens.append(Token(STRING, text[1:-1], line))
        elif kind == "identifier":
            if text.lower() in KEYWORDS:
                tokens.append(Token(KEYWORD, text.lower(), line))
            else:
                tokens.append(Token(IDENTIFIER, text, line))
        elif kind in (INTEGER, OPERATOR, PUNCTUATION):
            tokens.append(Token(kind, text, line))
        pos = m.end()
    return tokens
