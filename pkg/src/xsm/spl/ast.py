"""Syntax tree for SPL programs.

Identifiers are resolved while parsing: aliases become :class:`Reg` nodes and
constants become :class:`Num` or :class:`Str` literals.
"""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True)
class Num:
    value: int


@dataclass(frozen=True)
class Str:
    value: str


@dataclass(frozen=True)
class Reg:
    name: str


@dataclass(frozen=True)
class Mem:
    address: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Neg:
    operand: "Expr"


Expr = Num | Str | Reg | Mem | BinOp | Neg
Place = Reg | Mem


@dataclass
class Assign:
    place: Place
    expr: Expr
    line: int = 0


@dataclass
class If:
    cond: Expr
    then: list = field(default_factory=list)
    orelse: list = field(default_factory=list)
    line: int = 0


@dataclass
class While:
    cond: Expr
    body: list = field(default_factory=list)
    line: int = 0


@dataclass
class Breakpoint:
    line: int = 0


@dataclass
class Halt:
    line: int = 0


@dataclass
class IReturn:
    line: int = 0


@dataclass
class Return:
    line: int = 0


@dataclass
class Push:
    expr: Expr
    line: int = 0


@dataclass
class Pop:
    place: Place
    line: int = 0


@dataclass
class Call:
    expr: Expr
    line: int = 0


@dataclass
class MachineOp:
    """Statements mapping onto one privileged instruction (load, print, tsl, ...)."""

    opcode: str
    args: tuple = ()
    line: int = 0


@dataclass
class Seq:
    body: list = field(default_factory=list)
