"""Recursive-descent parser for SPL."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..isa import REGISTERS, SCRATCH_REGISTERS
from . import ast
from .errors import CompileError
from .lexer import IDENTIFIER, INTEGER, KEYWORD, OPERATOR, PUNCTUATION, STRING, Token, tokenize

COMPARISONS = ("<", ">", "<=", ">=", "==", "!=")

# keyword -> (opcode, argument shapes); "e" is an expression, "p" a place
_MACHINE_OPS = {
    "load": ("LOAD", "(e,e)"),
    "loadi": ("LOADI", "(e,e)"),
    "store": ("STORE", "(e,e)"),
    "storei": ("STOREI", "(e,e)"),
    "print": ("PRINT", "e"),
    "out": ("OUT", "e"),
    "in": ("IN", ""),
    "ini": ("INI", "p"),
    "encrypt": ("ENCRYPT", "p"),
    "backup": ("BACKUP", ""),
    "restore": ("RESTORE", ""),
    "tsl": ("TSL", "p,e"),
    "start": ("START", "e"),
}

_SIMPLE = {
    "breakpoint": ast.Breakpoint,
    "halt": ast.Halt,
    "ireturn": ast.IReturn,
    "return": ast.Return,
}


@dataclass
class SymbolTable:
    aliases: dict[str, str] = field(default_factory=dict)
    constants: dict[str, ast.Num | ast.Str] = field(default_factory=dict)

    def __contains__(self, name: str) -> bool:
        return name in self.aliases or name in self.constants


class Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0
        self.symbols = SymbolTable()

    # -- token helpers ---------------------------------------------------

    @property
    def current(self) -> Token | None:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    @property
    def line(self) -> int:
        tok = self.current
        if tok is not None:
            return tok.line
        return self.tokens[-1].line if self.tokens else 1

    def error(self, message: str) -> CompileError:
        return CompileError(message, self.line)

    def at(self, kind: str, text: str | None = None) -> bool:
        tok = self.current
        return tok is not None and tok.kind == kind and (text is None or tok.text == text)

    def at_keyword(self, *words: str) -> bool:
        tok = self.current
        return tok is not None and tok.kind == KEYWORD and tok.text in words

    def advance(self) -> Token:
        tok = self.current
        if tok is None:
            raise self.error("unexpected end of input")
        self.pos += 1
        return tok

    def expect(self, kind: str, text: str | None = None) -> Token:
        if not self.at(kind, text):
            tok = self.current
            found = "end of input" if tok is None else repr(tok.text)
            raise self.error(f"expected {text or kind}, found {found}")
        return self.advance()

    def expect_semicolon(self) -> None:
        self.expect(PUNCTUATION, ";")

    # -- statements ------------------------------------------------------

    def parse_program(self) -> ast.Seq:
        body = self.parse_block(())
        if self.current is not None:
            raise self.error(f"unexpected {self.current.text!r}")
        return ast.Seq(body)

    def parse_block(self, terminators: tuple[str, ...]) -> list:
        body = []
        while self.current is not None and not self.at_keyword(*terminators):
            stmt = self.parse_statement()
            if stmt is not None:
                body.append(stmt)
        return body

    def parse_statement(self):
        tok = self.current
        line = tok.line
        if tok.kind == KEYWORD:
            word = tok.text
            if word == "alias":
                self.parse_alias()
                return None
            if word == "define":
                self.parse_define()
                return None
            if word == "if":
                return self.parse_if()
            if word == "while":
                return self.parse_while()
            if word in _SIMPLE:
                self.advance()
                self.expect_semicolon()
                return _SIMPLE[word](line)
            if word == "push":
                self.advance()
                expr = self.parse_expr()
                self.expect_semicolon()
                return ast.Push(expr, line)
            if word == "pop":
                self.advance()
                place = self.parse_place()
                self.expect_semicolon()
                return ast.Pop(place, line)
            if word == "call":
                self.advance()
                expr = self.parse_expr()
                self.expect_semicolon()
                return ast.Call(expr, line)
            if word in _MACHINE_OPS:
                return self.parse_machine_op()
            raise self.error(f"unexpected keyword {word!r}")
        if tok.kind == IDENTIFIER or self.at(PUNCTUATION, "["):
            place = self.parse_place()
            self.expect(OPERATOR, "=")
            expr = self.parse_expr()
            self.expect_semicolon()
            return ast.Assign(place, expr, line)
        raise self.error(f"unexpected {tok.text!r}")

    def _new_name(self) -> str:
        name = self.expect(IDENTIFIER).text
        if name in REGISTERS:
            raise self.error(f"{name} is a register name")
        if name in self.symbols:
            raise self.error(f"duplicate definition of {name!r}")
        return name

    def parse_alias(self) -> None:
        self.advance()
        name = self._new_name()
        reg = self.expect(IDENTIFIER).text
        if reg not in REGISTERS:
            raise self.error(f"{reg!r} is not a register")
        if reg in SCRATCH_REGISTERS:
            raise self.error(f"{reg} is reserved for the compiler and cannot be aliased")
        self.expect_semicolon()
        self.symbols.aliases[name] = reg

    def parse_define(self) -> None:
        self.advance()
        name = self._new_name()
        if self.at(STRING):
            value = ast.Str(self.advance().text)
        else:
            negative = self.at(OPERATOR, "-")
            if negative:
                self.advance()
            digits = int(self.expect(INTEGER).text)
            value = ast.Num(-digits if negative else digits)
        self.expect_semicolon()
        self.symbols.constants[name] = value

    def parse_if(self) -> ast.If:
        line = self.advance().line
        cond = self.parse_condition()
        self.expect(KEYWORD, "then")
        then = self.parse_block(("else", "endif"))
        orelse = []
        if self.at_keyword("else"):
            self.advance()
            orelse = self.parse_block(("endif",))
        self.expect(KEYWORD, "endif")
        self.expect_semicolon()
        return ast.If(cond, then, orelse, line)

    def parse_while(self) -> ast.While:
        line = self.advance().line
        cond = self.parse_condition()
        self.expect(KEYWORD, "do")
        body = self.parse_block(("endwhile",))
        self.expect(KEYWORD, "endwhile")
        self.expect_semicolon()
        return ast.While(cond, body, line)

    def parse_condition(self) -> ast.Expr:
        self.expect(PUNCTUATION, "(")
        cond = self.parse_expr()
        self.expect(PUNCTUATION, ")")
        return cond

    def parse_machine_op(self) -> ast.MachineOp:
        tok = self.advance()
        opcode, shape = _MACHINE_OPS[tok.text]
        args = []
        for ch in shape:
            if ch == "e":
                args.append(self.parse_expr())
            elif ch == "p":
                args.append(self.parse_place())
            else:
                self.expect(PUNCTUATION, ch)
        self.expect_semicolon()
        return ast.MachineOp(opcode, tuple(args), tok.line)

    def parse_place(self) -> ast.Place:
        if self.at(PUNCTUATION, "["):
            self.advance()
            address = self.parse_expr()
            self.expect(PUNCTUATION, "]")
            return ast.Mem(address)
        tok = self.expect(IDENTIFIER)
        target = self.resolve(tok)
        if not isinstance(target, ast.Reg):
            raise CompileError(f"cannot assign to constant {tok.text!r}", tok.line)
        return target

    # -- expressions -----------------------------------------------------

    def parse_expr(self) -> ast.Expr:
        left = self.parse_additive()
        while self.current is not None and self.current.kind == OPERATOR and self.current.text in COMPARISONS:
            op = self.advance().text
            left = ast.BinOp(op, left, self.parse_additive())
        return left

    def parse_additive(self) -> ast.Expr:
        left = self.parse_term()
        while self.at(OPERATOR, "+") or self.at(OPERATOR, "-"):
            op = self.advance().text
            left = ast.BinOp(op, left, self.parse_term())
        return left

    def parse_term(self) -> ast.Expr:
        left = self.parse_unary()
        while self.at(OPERATOR, "*") or self.at(OPERATOR, "/") or self.at(OPERATOR, "%"):
            op = self.advance().text
            left = ast.BinOp(op, left, self.parse_unary())
        return left

    def parse_unary(self) -> ast.Expr:
        if self.at(OPERATOR, "-"):
            self.advance()
            operand = self.parse_unary()
            if isinstance(operand, ast.Num):
                return ast.Num(-operand.value)
            return ast.Neg(operand)
        return self.parse_primary()

    def parse_primary(self) -> ast.Expr:
        tok = self.current
        if tok is None:
            raise self.error("expected an expression, found end of input")
        if tok.kind == INTEGER:
            self.advance()
            return ast.Num(int(tok.text))
        if tok.kind == STRING:
            self.advance()
            return ast.Str(tok.text)
        if tok.kind == IDENTIFIER:
            self.advance()
            return self.resolve(tok)
        if self.at(PUNCTUATION, "("):
            self.advance()
            expr = self.parse_expr()
            self.expect(PUNCTUATION, ")")
            return expr
        if self.at(PUNCTUATION, "["):
            self.advance()
            address = self.parse_expr()
            self.expect(PUNCTUATION, "]")
            return ast.Mem(address)
        raise self.error(f"expected an expression, found {tok.text!r}")

    def resolve(self, tok: Token) -> ast.Expr:
        name = tok.text
        if name in self.symbols.aliases:
            return ast.Reg(self.symbols.aliases[name])
        if name in self.symbols.constants:
            return self.symbols.constants[name]
        if name in SCRATCH_REGISTERS:
            raise CompileError(f"{name} is reserved for the compiler", tok.line)
        if name in REGISTERS:
            return ast.Reg(name)
        raise CompileError(f"undefined identifier {name!r}", tok.line)


def parse(tokens: list[Token] | str) -> ast.Seq:
    if isinstance(tokens, str):
        tokens = tokenize(tokens)
    return Parser(tokens).parse_program()


def parse_with_symbols(source: str) -> tuple[ast.Seq, SymbolTable]:
    parser = Parser(tokenize(source))
    return parser.parse_program(), parser.symbols
