"""Interactive kernel debugger.

The prompt opens when BRKP executes in debug mode or a watched physical
address is written.  Commands come from the terminal or, for scripted runs,
from a file; in scripted mode every command is echoed after the prompt so the
output reads as a transcript.
"""

from __future__ import annotations

import inspect
import sys
from typing import Callable, Iterable, TextIO

from . import isa
from .isa import InvalidInstruction, parse_instruction
from .machine import KERNEL, MEMORY_SIZE, NUM_PAGES, PAGE_SIZE, READ, CpuException, Machine
from .word import NotNumeric, word_as_integer

PROMPT = "(db) "

# returned by Debugger.enter
RESUME = "resume"
EXIT = "exit"

HELP = """\
step [n]     execute n instructions (default 1)
c            continue until the next breakpoint, watchpoint or halt
reg [name]   print one or all registers
mem a [b]    print physical words a..b
page n       print the non-empty words of page n
pt           decode the page table at PTBR
watch a      stop after physical address a is written
unwatch a    remove a watchpoint
where        IP, mode and last trap
list         disassemble the instructions around IP
help         this text
exit         terminate the simulation
Enter repeats the previous command."""


class UsageError(Exception):
    pass


def _number(text: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise UsageError(f"not a number: {text!r}") from None


def _address(text: str) -> int:
    addr = _number(text)
    if not 0 <= addr < MEMORY_SIZE:
        raise UsageError(f"address {addr} out of range")
    return addr


class Debugger:
    def __init__(
        self,
        machine: Machine,
        step: Callable[[], bool] | None = None,
        commands: Iterable[str] | None = None,
        out: TextIO | None = None,
    ):
        """``step`` advances the simulation by one step and returns False once it cannot go on.

        With ``commands`` the debugger replays them instead of reading the
        terminal; running out of commands resumes execution.
        """
        self.machine = machine
        self._step = step if step is not None else self._machine_step
        self._script = iter(commands) if commands is not None else None
        self._out = out
        self.last_command = ""
        self.core_index = 0

    @property
    def out(self) -> TextIO:
        return self._out if self._out is not None else sys.stdout

    def say(self, text: str = "") -> None:
        print(text, file=self.out)

    def _machine_step(self) -> bool:
        self.machine.step()
        return not self.machine.halted

    @property
    def core(self):
        return self.machine.cores[self.core_index]

    # -- prompt loop ---------------------------------------------------

    def enter(self) -> str:
        """Run the prompt until the user resumes; returns RESUME or EXIT."""
        self._report_stop()
        while True:
            line = self._read()
            if line is None:
                return RESUME
            if not line.strip():
                line = self.last_command
            else:
                self.last_command = line
            if not line.strip():
                continue
            result = self.execute(line)
            if result is not None:
                return result

    def _read(self) -> str | None:
        if self._script is not None:
            line = next(self._script, None)
            if line is None:
                return None
            self.say(PROMPT + line)
            return line
        try:
            return input(PROMPT)
        except EOFError:
            self.say()
            return None

    def _report_stop(self) -> None:
        m = self.machine
        if m.break_hit:
            self.core_index = m.break_core
            self.say(f"breakpoint: core {m.break_core}, IP {self.core.regs['IP']}")
        for addr in m.watch_hits:
            self.say(f"watchpoint: [{addr}] = {m.memory[addr]!r}")
        m.break_hit = False
        m.watch_hits.clear()

    def execute(self, line: str) -> str | None:
        """Run one command; returns RESUME/EXIT when control leaves the prompt."""
        name, *args = line.split()
        handler = getattr(self, f"cmd_{name}", None) if name.isidentifier() else None
        if name == "s":
            handler = self.cmd_step
        if handler is None:
            self.say(f"unknown command {name!r}; type 'help' for a list")
            return None
        try:
            inspect.signature(handler).bind(*args)
        except TypeError:
            self.say(f"wrong number of arguments for {name!r}; type 'help' for usage")
            return None
        try:
            return handler(*args)
        except UsageError as exc:
            self.say(str(exc))
        return None

    # -- commands ------------------------------------------------------

    def cmd_help(self):
        self.say(HELP)

    def cmd_exit(self):
        return EXIT

    def cmd_c(self):
        return RESUME

    cmd_continue = cmd_c

    def cmd_step(self, count="1"):
        n = _number(count)
        m = self.machine
        for _ in range(n):
            if m.halted or not self._step():
                break
            if m.break_hit or m.watch_hits:
                break
        if m.fault is not None:
            self.say(f"machine fault: {m.fault}")
        elif m.halted:
            self.say("machine halted")
        self._report_stop()
        if not m.halted:
            self.say(self._current_line())

    def cmd_reg(self, name=None):
        regs = self.core.regs
        if name is not None:
            reg = name.upper()
            if reg not in regs:
                raise UsageError(f"no register {name!r}")
            self.say(f"{reg}: {regs[reg]}")
            return
        names = list(isa.REGISTERS)
        for i in range(0, len(names), 4):
            self.say("  ".join(f"{r:>4}: {regs[r]!s:<12}" for r in names[i:i + 4]).rstrip())

    def cmd_mem(self, start, end=None):
        a = _address(start)
        b = _address(end) if end is not None else a
        if b < a:
            raise UsageError("empty range")
        for addr in range(a, b + 1):
            self.say(f"{addr:5d}: {self.machine.memory[addr]}")

    def cmd_page(self, number):
        n = _number(number)
        if not 0 <= n < NUM_PAGES:
            raise UsageError(f"page {n} out of range")
        base = n * PAGE_SIZE
        words = self.machine.memory[base:base + PAGE_SIZE]
        used = [(base + i, w) for i, w in enumerate(words) if w != ""]
        self.say(f"page {n} ({base}-{base + PAGE_SIZE - 1}): {len(used)} non-empty words")
        for addr, word in used:
            self.say(f"{addr:5d}: {word}")

    def cmd_pt(self):
        regs = self.core.regs
        try:
            ptbr = word_as_integer(regs["PTBR"])
            ptlr = word_as_integer(regs["PTLR"])
        except NotNumeric:
            self.say("page table registers not set")
            return
        if ptlr <= 0:
            self.say("empty page table")
            return
        memory = self.machine.memory
        self.say(f"page table at {ptbr}, {ptlr} entries")
        for page in range(ptlr):
            entry = ptbr + 2 * page
            if not 0 <= entry < MEMORY_SIZE - 1:
                self.say(f"  {page:3d}: entry outside memory")
                continue
            self.say(f"  {page:3d} -> {memory[entry]:>4} flags {memory[entry + 1]}")

    def cmd_watch(self, address):
        addr = _address(address)
        self.machine.watchpoints.add(addr)
        self.say(f"watching [{addr}]")

    def cmd_unwatch(self, address):
        addr = _address(address)
        if addr not in self.machine.watchpoints:
            raise UsageError(f"no watchpoint at {addr}")
        self.machine.watchpoints.discard(addr)
        self.say(f"removed watchpoint [{addr}]")

    def cmd_where(self):
        core = self.core
        trap = core.last_trap or "none"
        self.say(f"core {self.core_index}  IP {core.regs['IP']}  mode {core.mode}  "
                 f"tick {self.machine.ticks}  last trap: {trap}")

    def cmd_list(self):
        try:
            ip = word_as_integer(self.core.regs["IP"])
        except NotNumeric:
            self.say(f"IP {self.core.regs['IP']!r} is not an address")
            return
        for addr in range(ip - 4, ip + 6, 2):
            marker = "=>" if addr == ip else "  "
            self.say(f"{marker} {addr:5d}: {self._disassemble(addr)}")

    # -- helpers -------------------------------------------------------

    def _fetch(self, addr: int) -> str | None:
        try:
            physical = self.machine.translate(addr, READ, self.core, touch=False)
        except CpuException:
            return None
        return self.machine.memory[physical]

    def _disassemble(self, addr: int) -> str:
        text = self._fetch(addr)
        if text is None:
            return "<unmapped>"
        try:
            return str(parse_instruction(text))
        except InvalidInstruction:
            return f"<invalid> {text!r}"

    def _current_line(self) -> str:
        core = self.core
        try:
            ip = word_as_integer(core.regs["IP"])
        except NotNumeric:
            return f"IP {core.regs['IP']!r}"
        mode = "" if core.mode == KERNEL else " (user)"
        return f"{ip}{mode}: {self._disassemble(ip)}"
