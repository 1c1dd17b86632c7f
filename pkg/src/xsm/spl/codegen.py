"""Lowering of SPL syntax trees to XSM assembly text.

Expressions are evaluated into the scratch registers R16-R19, used as an
operand stack.  Every instruction occupies two words, so the instruction with
index ``i`` lives at ``base + 2*i``; branch targets are emitted as absolute
addresses.
"""

from __future__ import annotations

from ..isa import SCRATCH_REGISTERS
from ..machine import MEMORY_SIZE
from . import ast
from .errors import CompileError

DEFAULT_BASE = 512

_ARITH = {"+": "ADD", "-": "SUB", "*": "MUL", "/": "DIV", "%": "MOD"}
_COMPARE = {"<": "LT", ">": "GT", "<=": "LE", ">=": "GE", "==": "EQ", "!=": "NE"}
OPCODES = {**_ARITH, **_COMPARE}

_SIMPLE = {ast.Breakpoint: "BRKP", ast.Halt: "HALT", ast.IReturn: "IRET", ast.Return: "RET"}


class _Label:
    __slots__ = ("index",)

    def __init__(self):
        self.index: int | None = None


def _quote(s: str) -> str:
    return f'"{s}"'


class CodeGenerator:
    def __init__(self, base: int = DEFAULT_BASE):
        if base % 2 or not 0 <= base <= MEMORY_SIZE - 2:
            raise CompileError(f"load address {base} must be even and within [0, {MEMORY_SIZE - 2}]")
        self.base = base
        # each entry: (text, label) where label, if set, is appended as the final operand
        self.code: list[tuple[str, _Label | None]] = []
        self.line = 0

    # -- emission ------------------------------------------------------

    def emit(self, text: str, target: _Label | None = None) -> None:
        self.code.append((text, target))

    def place(self, label: _Label) -> None:
        label.index = len(self.code)

    def scratch(self, depth: int) -> str:
        if depth >= len(SCRATCH_REGISTERS):
            raise CompileError("expression too complex", self.line)
        return SCRATCH_REGISTERS[depth]

    def assemble(self) -> list[str]:
        if self.base + 2 * len(self.code) > MEMORY_SIZE:
            raise CompileError(
                f"code of {len(self.code)} instructions at {self.base} does not fit in memory"
            )
        lines = []
        for text, target in self.code:
            if target is not None:
                text = f"{text}{self.base + 2 * target.index}"
            lines.append(text)
        return lines

    # -- expressions ---------------------------------------------------

    def operand(self, expr: ast.Expr, depth: int) -> str:
        """Source operand for ``expr``: literals and registers directly, anything else via scratch."""
        if isinstance(expr, ast.Num):
            return str(expr.value)
        if isinstance(expr, ast.Str):
            return _quote(expr.value)
        if isinstance(expr, ast.Reg):
            return expr.name
        return self.evaluate(expr, depth)

    def numeric_operand(self, expr: ast.Expr, depth: int) -> str:
        # operands of LOAD/STORE/JMP-like instructions take no string literals
        if isinstance(expr, (ast.Num, ast.Reg)):
            return self.operand(expr, depth)
        return self.evaluate(expr, depth)

    def register_operand(self, expr: ast.Expr, depth: int) -> str:
        if isinstance(expr, ast.Reg):
            return expr.name
        return self.evaluate(expr, depth)

    def address(self, expr: ast.Expr, depth: int) -> str:
        """Memory operand ``[...]`` addressing the value of ``expr``."""
        if isinstance(expr, (ast.Num, ast.Reg)):
            return f"[{self.operand(expr, depth)}]"
        return f"[{self.evaluate(expr, depth)}]"

    def evaluate(self, expr: ast.Expr, depth: int) -> str:
        """Emit code leaving the value of ``expr`` in scratch register ``depth``."""
        reg = self.scratch(depth)
        if isinstance(expr, (ast.Num, ast.Str, ast.Reg)):
            self.emit(f"MOV {reg}, {self.operand(expr, depth)}")
        elif isinstance(expr, ast.Mem):
            self.emit(f"MOV {reg}, {self.address(expr.address, depth)}")
        elif isinstance(expr, ast.Neg):
            self.evaluate(expr.operand, depth)
            self.emit(f"MUL {reg}, -1")
        elif isinstance(expr, ast.BinOp):
            self.evaluate(expr.left, depth)
            right = self.operand(expr.right, depth + 1)
            self.emit(f"{OPCODES[expr.op]} {reg}, {right}")
        else:
            raise CompileError(f"cannot evaluate {expr!r}", self.line)
        return reg

    def store_to(self, place: ast.Place, source: str, depth: int) -> None:
        """Move ``source`` (a register or literal operand) into ``place``."""
        if isinstance(place, ast.Reg):
            self.emit(f"MOV {place.name}, {source}")
        else:
            self.emit(f"MOV {self.address(place.address, depth)}, {source}")

    def condition(self, expr: ast.Expr) -> str:
        if isinstance(expr, ast.Reg):
            return expr.name
        return self.evaluate(expr, 0)

    # -- statements ----------------------------------------------------

    def statements(self, body: list) -> None:
        for stmt in body:
            self.statement(stmt)

    def statement(self, stmt) -> None:
        self.line = getattr(stmt, "line", self.line)
        kind = type(stmt)
        if kind in _SIMPLE:
            self.emit(_SIMPLE[kind])
        elif kind is ast.Assign:
            self.assign(stmt)
        elif kind is ast.If:
            self.if_(stmt)
        elif kind is ast.While:
            self.while_(stmt)
        elif kind is ast.Push:
            self.emit(f"PUSH {self.operand(stmt.expr, 0)}")
        elif kind is ast.Pop:
            if isinstance(stmt.place, ast.Reg):
                self.emit(f"POP {stmt.place.name}")
            else:
                self.emit(f"POP {self.scratch(0)}")
                self.store_to(stmt.place, self.scratch(0), 1)
        elif kind is ast.Call:
            self.emit(f"CALL {self.numeric_operand(stmt.expr, 0)}")
        elif kind is ast.MachineOp:
            self.machine_op(stmt)
        elif kind is ast.Seq:
            self.statements(stmt.body)
        else:
            raise CompileError(f"cannot compile {stmt!r}", self.line)

    def assign(self, stmt: ast.Assign) -> None:
        expr, place = stmt.expr, stmt.place
        if isinstance(place, ast.Reg):
            if isinstance(expr, ast.Mem):
                self.emit(f"MOV {place.name}, {self.address(expr.address, 0)}")
            else:
                self.emit(f"MOV {place.name}, {self.operand(expr, 0)}")
            return
        source = self.operand(expr, 0)
        self.store_to(place, source, 1 if source in SCRATCH_REGISTERS else 0)

    def if_(self, stmt: ast.If) -> None:
        cond = self.condition(stmt.cond)
        orelse, end = _Label(), _Label()
        self.emit(f"JZ {cond}, ", orelse if stmt.orelse else end)
        self.statements(stmt.then)
        if stmt.orelse:
            self.emit("JMP ", end)
            self.place(orelse)
            self.statements(stmt.orelse)
        self.place(end)

    def while_(self, stmt: ast.While) -> None:
        top, end = _Label(), _Label()
        self.place(top)
        cond = self.condition(stmt.cond)
        self.emit(f"JZ {cond}, ", end)
        self.statements(stmt.body)
        self.emit("JMP ", top)
        self.place(end)

    def machine_op(self, stmt: ast.MachineOp) -> None:
        op, args = stmt.opcode, stmt.args
        if op in ("LOAD", "LOADI", "STORE", "STOREI"):
            first = self.numeric_operand(args[0], 0)
            second = self.numeric_operand(args[1], 1 if first in SCRATCH_REGISTERS else 0)
            self.emit(f"{op} {first}, {second}")
        elif op in ("PRINT", "OUT"):
            self.emit(f"{op} {self.register_operand(args[0], 0)}")
        elif op in ("IN", "BACKUP", "RESTORE"):
            self.emit(op)
        elif op == "INI":
            self.in_place(op, args[0])
        elif op == "ENCRYPT":
            place = args[0]
            if isinstance(place, ast.Reg):
                self.emit(f"ENCRYPT {place.name}")
            else:
                loc = self.address(place.address, 1)
                self.emit(f"MOV {self.scratch(0)}, {loc}")
                self.emit(f"ENCRYPT {self.scratch(0)}")
                self.emit(f"MOV {loc}, {self.scratch(0)}")
        elif op == "TSL":
            place, address = args
            target = place.name if isinstance(place, ast.Reg) else self.scratch(0)
            self.emit(f"TSL {target}, {self.address(address, 1)}")
            if not isinstance(place, ast.Reg):
                self.store_to(place, target, 1)
        elif op == "START":
            self.emit(f"START {self.numeric_operand(args[0], 0)}")
        else:
            raise CompileError(f"unknown machine operation {op}", self.line)

    def in_place(self, op: str, place: ast.Place) -> None:
        if isinstance(place, ast.Reg):
            self.emit(f"{op} {place.name}")
        else:
            self.emit(f"{op} {self.scratch(0)}")
            self.store_to(place, self.scratch(0), 1)


def generate(program: ast.Seq, base: int = DEFAULT_BASE) -> str:
    """Assembly text for ``program`` loaded at ``base``, one instruction per line."""
    gen = CodeGenerator(base)
    gen.statements(program.body)
    lines = gen.assemble()
    return "".join(line + "\n" for line in lines)
