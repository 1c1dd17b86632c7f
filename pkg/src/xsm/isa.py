"""Assembly grammar of the machine.

Code is stored as text: each instruction occupies the even word of a
two-word slot and is parsed when fetched.  ``parse_instruction`` turns one
such word into an :class:`Instruction` or raises :class:`InvalidInstruction`.
"""

from __future__ import annotations

import functools
import re
from dataclasses import dataclass

GENERAL_REGISTERS = tuple(f"R{i}" for i in range(20))
PORT_REGISTERS = ("P0", "P1", "P2", "P3")
REGISTERS = GENERAL_REGISTERS + ("SP", "BP", "IP", "PTBR", "PTLR", "EIP", "EC", "EPN", "EMA") + PORT_REGISTERS
# Registers user-mode code may touch (IP only for reading).
USER_REGISTERS = frozenset(GENERAL_REGISTERS + ("SP", "BP", "IP"))
SCRATCH_REGISTERS = ("R16", "R17", "R18", "R19")

_REGISTER_SET = frozenset(REGISTERS)

# operand kinds
REG = "reg"
INT = "int"
STR = "str"
MEM_REG = "mem_reg"
MEM_INT = "mem_int"

_R = frozenset({REG})
_I = frozenset({INT})
_M = frozenset({MEM_REG, MEM_INT})
_RI = _R | _I
_RIS = _RI | {STR}
_ANY = _RIS | _M

# opcode -> allowed kinds for each operand position
SIGNATURES: dict[str, tuple[frozenset, ...]] = {
    "MOV": (_R | _M, _ANY),
    "ADD": (_R, _RIS),
    "SUB": (_R, _RIS),
    "MUL": (_R, _RIS),
    "DIV": (_R, _RIS),
    "MOD": (_R, _RIS),
    "INR": (_R,),
    "DCR": (_R,),
    "LT": (_R, _RIS),
    "GT": (_R, _RIS),
    "EQ": (_R, _RIS),
    "NE": (_R, _RIS),
    "GE": (_R, _RIS),
    "LE": (_R, _RIS),
    "JZ": (_R, _RI),
    "JNZ": (_R, _RI),
    "JMP": (_RI,),
    "PUSH": (_RIS,),
    "POP": (_R,),
    "CALL": (_RI,),
    "RET": (),
    "BRKP": (),
    "INT": (_I,),
    "IRET": (),
    "HALT": (),
    "LOAD": (_RI, _RI),
    "LOADI": (_RI, _RI),
    "STORE": (_RI, _RI),
    "STOREI": (_RI, _RI),
    "IN": (),
    "INI": (_R,),
    "OUT": (_R,),
    "PRINT": (_R,),
    "ENCRYPT": (_R,),
    "BACKUP": (),
    "RESTORE": (),
    "TSL": (_R, _M),
    "START": (_RI,),
}

PRIVILEGED = frozenset(
    {
        "IRET", "HALT", "LOAD", "LOADI", "STORE", "STOREI", "IN", "INI", "OUT",
        "PRINT", "ENCRYPT", "BACKUP", "RESTORE", "TSL", "START",
    }
)


class InvalidInstruction(ValueError):
    pass


@dataclass(frozen=True)
class Operand:
    kind: str
    value: str | int

    def __str__(self) -> str:
        if self.kind == STR:
            return f'"{self.value}"'
        if self.kind in (MEM_REG, MEM_INT):
            return f"[{self.value}]"
        return str(self.value)


@dataclass(frozen=True)
class Instruction:
    opcode: str
    operands: tuple[Operand, ...] = ()

    def __str__(self) -> str:
        if not self.operands:
            return self.opcode
        return f"{self.opcode} " + ", ".join(str(op) for op in self.operands)


_OPCODE = re.compile(r"\s*([A-Za-z]+)(?:\s+|\Z)")
_INT = re.compile(r"-?[0-9]+\Z")


def _split_operands(text: str) -> list[str]:
    parts: list[str] = []
    current: list[str] = []
    in_string = False
    for ch in text:
        if ch == '"':
            in_string = not in_string
        if ch == "," and not in_string:
            parts.append("".join(current))
            current = []
        else:
            current.append(ch)
    if in_string:
        raise InvalidInstruction("unterminated string operand")
    parts.append("".join(current))
    return [p.strip() for p in parts]


def _register(text: str) -> str | None:
    name = text.upper()
    return name if name in _REGISTER_SET else None


def parse_operand(text: str) -> Operand:
    if not text:
        raise InvalidInstruction("missing operand")
    if len(text) >= 2 and text[0] == '"' and text[-1] == '"' and '"' not in text[1:-1]:
        return Operand(STR, text[1:-1])
    if _INT.match(text):
        return Operand(INT, int(text))
    reg = _register(text)
    if reg is not None:
        return Operand(REG, reg)
    if text[0] == "[" and text[-1] == "]":
        inner = text[1:-1].strip()
        if _INT.match(inner):
            return Operand(MEM_INT, int(inner))
        reg = _register(inner)
        if reg is not None:
            return Operand(MEM_REG, reg)
    raise InvalidInstruction(f"malformed operand {text!r}")


@functools.lru_cache(maxsize=8192)
def parse_instruction(text: str) -> Instruction:
    m = _OPCODE.match(text)
    if m is None:
        raise InvalidInstruction(f"not an instruction: {text!r}")
    opcode = m.group(1).upper()
    signature = SIGNATURES.get(opcode)
    if signature is None:
        raise InvalidInstruction(f"unknown opcode {m.group(1)!r}")
    rest = text[m.end():].strip()
    operands = tuple(parse_operand(p) for p in _split_operands(rest)) if rest else ()
    if len(operands) != len(signature):
        raise InvalidInstruction(f"{opcode} takes {len(signature)} operand(s), got {len(operands)}")
    for position, (op, allowed) in enumerate(zip(operands, signature), 1):
        if op.kind not in allowed:
            raise InvalidInstruction(f"{opcode}: operand {position} cannot be {op}")
    if sum(op.kind in (MEM_REG, MEM_INT) for op in operands) > 1:
        raise InvalidInstruction(f"{opcode}: at most one memory operand")
    return Instruction(opcode, operands)
