"""The XSM processor: registers, paged memory, traps and the step loop."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

from . import isa
from .devices import CONSOLE, DISK, PAGE_SIZE, TIMER, DeviceError, Devices, InputExhausted
from .disk import BLOCK_SIZE, DiskImage
from .isa import Instruction, InvalidInstruction, Operand, parse_instruction
from .word import NotNumeric, encrypt, integer_word, word_as_integer

NUM_PAGES = 128
MEMORY_SIZE = NUM_PAGES * PAGE_SIZE
BOOT_PAGE = 1
BOOT_ADDRESS = BOOT_PAGE * PAGE_SIZE

KERNEL = "kernel"
USER = "user"

READ = "read"
WRITE = "write"
FETCH = "fetch"

ILLEGAL_INSTRUCTION = "illegal_instruction"
ILLEGAL_MEMORY_ACCESS = "illegal_memory_access"
PAGE_FAULT = "page_fault"
ARITHMETIC = "arithmetic"
EXCEPTION_CODES = {ILLEGAL_INSTRUCTION: 0, ILLEGAL_MEMORY_ACCESS: 1, PAGE_FAULT: 2, ARITHMETIC: 3}

EXCEPTION_VECTOR = 1024
DEVICE_VECTORS = {TIMER: 2048, DISK: 3072, CONSOLE: 4096}
MIN_SOFTWARE_INT = 4
MAX_SOFTWARE_INT = 18

# page-table entry flag positions
VALID, WRITABLE, REFERENCED, DIRTY = range(4)

BACKUP_REGISTERS = isa.GENERAL_REGISTERS + ("BP",)


def software_int_vector(n: int) -> int:
    return PAGE_SIZE * (10 + 2 * (n - MIN_SOFTWARE_INT))


class CpuException(Exception):
    """An exception condition raised while executing one instruction."""

    def __init__(self, cause: str, detail: str = "", *, ema: str | None = None, epn: str | None = None):
        super().__init__(detail or cause)
        self.cause = cause
        self.detail = detail
        self.ema = ema
        self.epn = epn


class MachineFault(Exception):
    """Unrecoverable condition: simulation stops with a diagnostic."""

    def __init__(self, message: str, *, core: int = 0, ip: str = "", cause: str | None = None):
        super().__init__(message)
        self.core = core
        self.ip = ip
        self.cause = cause


def fresh_registers() -> dict[str, str]:
    return {name: "" for name in isa.REGISTERS}


@dataclass
class Core:
    regs: dict[str, str] = field(default_factory=fresh_registers)
    mode: str = KERNEL
    halted: bool = False
    started: bool = True
    last_trap: str | None = None

    def snapshot(self) -> tuple:
        return (tuple(self.regs.items()), self.mode, self.halted, self.started, self.last_trap)


class Machine:
    """A single-core XSM machine sharing memory with its devices and disk."""

    num_cores = 1

    def __init__(
        self,
        disk: DiskImage | None = None,
        *,
        timer_interval: int = 32,
        disk_latency: int = 10,
        console_latency: int = 5,
        read_line: Callable[[], str | None] | None = None,
        on_output: Callable[[str], None] | None = None,
        debug: bool = False,
    ):
        self.memory = [""] * MEMORY_SIZE
        self.disk = disk if disk is not None else DiskImage()
        self.cores = [Core(started=(i == 0)) for i in range(self.num_cores)]
        self.devices = Devices(
            self.memory,
            self.disk,
            self.cores[0].regs,
            timer_interval=timer_interval,
            disk_latency=disk_latency,
            console_latency=console_latency,
            read_line=read_line,
            on_output=on_output,
        )
        self.devices.on_memory_write = self._dma_written
        self.debug = debug
        self.ticks = 0
        self.halted = False
        self.fault: MachineFault | None = None
        # set when BRKP executes in debug mode; cleared by whoever opens the prompt
        self.break_hit = False
        self.break_core = 0
        self.watchpoints: set[int] = set()
        self.watch_hits: list[int] = []
        self.tracer: Callable[[str], None] | None = None
        self._dispatch = {op: getattr(self, f"_op_{op.lower()}") for op in isa.SIGNATURES}

    # -- power-on -------------------------------------------------------

    def boot(self) -> None:
        """Firmware start: disk block 0 is copied to memory page 1 and run in kernel mode."""
        self.memory[:] = [""] * MEMORY_SIZE
        self.memory[BOOT_ADDRESS:BOOT_ADDRESS + PAGE_SIZE] = self.disk.block(0)
        for i, core in enumerate(self.cores):
            core.regs.update(fresh_registers())
            core.mode = KERNEL
            core.halted = False
            core.started = i == 0
            core.last_trap = None
        self.cores[0].regs["IP"] = str(BOOT_ADDRESS)
        self.ticks = 0
        self.halted = False
        self.fault = None

    # -- inspection -----------------------------------------------------

    @property
    def regs(self) -> dict[str, str]:
        return self.cores[0].regs

    @property
    def mode(self) -> str:
        return self.cores[0].mode

    def snapshot(self) -> tuple:
        return (
            tuple(self.memory),
            tuple(self.disk.words),
            tuple(core.snapshot() for core in self.cores),
            self.devices.snapshot(),
            self.ticks,
            self.halted,
        )

    # -- address translation --------------------------------------------

    def translate(self, addr: int, access: str, core: Core | None = None, *, mode: str | None = None,
                  touch: bool = True) -> int:
        """Map a logical address to a physical one for ``core``.

        Kernel mode addresses memory physically.  In user mode the page table
        at PTBR is consulted and the Referenced/Dirty flags are updated unless
        ``touch`` is false.
        """
        core = core if core is not None else self.cores[0]
        mode = mode if mode is not None else core.mode
        if mode == KERNEL:
            if not 0 <= addr < MEMORY_SIZE:
                raise CpuException(ILLEGAL_MEMORY_ACCESS, f"address {addr} out of range", ema=str(addr))
            return addr
        try:
            ptbr = word_as_integer(core.regs["PTBR"])
            ptlr = word_as_integer(core.regs["PTLR"])
        except NotNumeric:
            raise CpuException(ILLEGAL_MEMORY_ACCESS, "page table registers not set", ema=str(addr)) from None
        page, offset = divmod(addr, PAGE_SIZE)
        if addr < 0 or page >= ptlr:
            raise CpuException(ILLEGAL_MEMORY_ACCESS, f"address {addr} outside address space", ema=str(addr))
        entry = ptbr + 2 * page
        if not 0 <= entry < MEMORY_SIZE - 1:
            raise CpuException(ILLEGAL_MEMORY_ACCESS, f"page table entry at {entry} out of range", ema=str(addr))
        flags = self.memory[entry + 1]
        if len(flags) != 4:
            raise CpuException(ILLEGAL_MEMORY_ACCESS, f"malformed page table flags {flags!r}", ema=str(addr))
        if flags[VALID] != "1":
            raise CpuException(PAGE_FAULT, f"page {page} not valid", epn=str(page))
        if access == WRITE and flags[WRITABLE] != "1":
            raise CpuException(ILLEGAL_MEMORY_ACCESS, f"page {page} is read-only", ema=str(addr))
        try:
            phys_page = word_as_integer(self.memory[entry])
        except NotNumeric:
            raise CpuException(ILLEGAL_MEMORY_ACCESS, "malformed page table entry", ema=str(addr)) from None
        physical = phys_page * PAGE_SIZE + offset
        if not 0 <= physical < MEMORY_SIZE:
            raise CpuException(ILLEGAL_MEMORY_ACCESS, f"physical address {physical} out of range", ema=str(addr))
        if touch:
            new_flags = flags[:REFERENCED] + "1" + ("1" if access == WRITE else flags[DIRTY])
            if new_flags != flags:
                self._store(entry + 1, new_flags)
        return physical

    # -- stepping -------------------------------------------------------

    def step(self) -> None:
        """Deliver a pending interrupt or execute one instruction, then advance the devices."""
        if self.halted:
            return
        try:
            executed = self._core_step(0)
            if self.cores[0].halted:
                self.halted = True
            if executed:
                self._tick()
        except MachineFault as fault:
            self._die(fault)

    def run(self, max_ticks: int | None = None) -> None:
        while not self.halted and (max_ticks is None or self.ticks < max_ticks):
            self.step()

    def _tick(self) -> None:
        self.ticks += 1
        self.devices.tick()
        if self.devices.events:
            if self.tracer is not None:
                for tick, event in self.devices.events:
                    self.tracer(f"{tick}\t-\tdevice\t-\t{event}")
            self.devices.events.clear()

    def _die(self, fault: MachineFault) -> None:
        # the fatal step counts as a tick; devices stop with the machine
        self.ticks += 1
        self.fault = fault
        self.halted = True

    def _core_step(self, index: int) -> bool:
        """Advance one core; returns whether an instruction was executed."""
        core = self.cores[index]
        if index == 0 and core.mode == USER and self.devices.pending:
            kind = self.devices.take_interrupt()
            self._trace_trap(index, core, kind)
            self._push_and_vector(core, index, core.regs["IP"], DEVICE_VECTORS[kind], kind)
            return False
        ip_word = core.regs["IP"]
        try:
            try:
                ip = word_as_integer(ip_word)
            except NotNumeric:
                raise CpuException(ILLEGAL_MEMORY_ACCESS, f"IP {ip_word!r} is not an address", ema=ip_word) from None
            text = self.memory[self.translate(ip, FETCH, core)]
            if self.tracer is not None:
                self.tracer(f"{self.ticks + 1}\t{index}\t{core.mode}\t{ip}\t{text}")
            try:
                instr = parse_instruction(text)
            except InvalidInstruction as exc:
                raise CpuException(ILLEGAL_INSTRUCTION, str(exc)) from None
            self.execute(instr, core, index, ip)
        except CpuException as exc:
            self._exception(core, index, ip_word, exc)
        return True

    def _trace_trap(self, index: int, core: Core, kind: str) -> None:
        if self.tracer is not None:
            self.tracer(f"{self.ticks}\t{index}\ttrap\t{core.regs['IP']}\t{kind}")

    # -- trap delivery --------------------------------------------------

    def _exception(self, core: Core, index: int, ip_word: str, exc: CpuException) -> None:
        if core.mode == KERNEL:
            raise MachineFault(
                f"{exc.cause.replace('_', ' ')} in kernel mode at IP {ip_word}"
                + (f": {exc.detail}" if exc.detail else ""),
                core=index, ip=ip_word, cause=exc.cause,
            )
        regs = core.regs
        regs["EIP"] = ip_word
        regs["EC"] = str(EXCEPTION_CODES[exc.cause])
        if exc.epn is not None:
            regs["EPN"] = exc.epn
        if exc.ema is not None:
            regs["EMA"] = exc.ema
        core.mode = KERNEL
        core.last_trap = f"exception {exc.cause} at IP {ip_word}"
        regs["IP"] = str(EXCEPTION_VECTOR)
        if self.tracer is not None:
            self.tracer(f"{self.ticks + 1}\t{index}\ttrap\t{ip_word}\texception {exc.cause}")

    def _push_and_vector(self, core: Core, index: int, return_ip: str, vector: int, kind: str) -> None:
        try:
            sp = word_as_integer(core.regs["SP"]) + 1
            self._store(self.translate(sp, WRITE, core), return_ip)
        except (NotNumeric, CpuException) as exc:
            raise MachineFault(f"stack push failed while delivering {kind}: {exc}", core=index,
                               ip=core.regs["IP"]) from None
        core.regs["SP"] = str(sp)
        core.mode = KERNEL
        core.last_trap = kind
        core.regs["IP"] = str(vector)

    # -- operands -------------------------------------------------------

    def _store(self, physical: int, word: str) -> None:
        self.memory[physical] = word
        if physical in self.watchpoints:
            self.watch_hits.append(physical)

    def _dma_written(self, start: int, stop: int) -> None:
        for addr in sorted(self.watchpoints):
            if start <= addr < stop:
                self.watch_hits.append(addr)

    def read_reg(self, core: Core, name: str) -> str:
        if core.mode == USER and name not in isa.USER_REGISTERS:
            raise CpuException(ILLEGAL_INSTRUCTION, f"register {name} is privileged")
        return core.regs[name]

    def write_reg(self, core: Core, name: str, word: str) -> None:
        if name == "IP":
            raise CpuException(ILLEGAL_INSTRUCTION, "IP cannot be written")
        if core.mode == USER and name not in isa.USER_REGISTERS:
            raise CpuException(ILLEGAL_INSTRUCTION, f"register {name} is privileged")
        core.regs[name] = word

    def _address(self, core: Core, op: Operand) -> int:
        if op.kind == isa.MEM_INT:
            return op.value
        word = self.read_reg(core, op.value)
        try:
            return word_as_integer(word)
        except NotNumeric:
            raise CpuException(ILLEGAL_MEMORY_ACCESS, f"{word!r} is not an address", ema=word) from None

    def _value(self, core: Core, op: Operand) -> str:
        kind = op.kind
        if kind == isa.REG:
            return self.read_reg(core, op.value)
        if kind == isa.INT:
            return str(op.value)
        if kind == isa.STR:
            return op.value
        return self.memory[self.translate(self._address(core, op), READ, core)]

    def _number(self, core: Core, op: Operand, cause: str = ARITHMETIC) -> int:
        word = self._value(core, op)
        try:
            return word_as_integer(word)
        except NotNumeric:
            raise CpuException(cause, f"{word!r} is not a number") from None

    def _push(self, core: Core, word: str) -> None:
        sp = self._number(core, isa.Operand(isa.REG, "SP"), ILLEGAL_MEMORY_ACCESS) + 1
        physical = self.translate(sp, WRITE, core)
        self._store(physical, word)
        core.regs["SP"] = str(sp)

    def _pop(self, core: Core, mode: str | None = None) -> str:
        sp = self._number(core, isa.Operand(isa.REG, "SP"), ILLEGAL_MEMORY_ACCESS)
        word = self.memory[self.translate(sp, READ, core, mode=mode)]
        core.regs["SP"] = str(sp - 1)
        return word

    # -- execution ------------------------------------------------------

    def execute(self, instr: Instruction, core: Core, index: int = 0, ip: int | None = None) -> None:
        if ip is None:
            ip = word_as_integer(core.regs["IP"])
        if core.mode == USER and instr.opcode in isa.PRIVILEGED:
            raise CpuException(ILLEGAL_INSTRUCTION, f"{instr.opcode} is privileged")
        next_ip = self._dispatch[instr.opcode](core, index, ip, *instr.operands)
        if core.halted:
            return
        core.regs["IP"] = str(ip + 2 if next_ip is None else next_ip)

    def _op_mov(self, core, index, ip, dst, src):
        value = self._value(core, src)
        if dst.kind == isa.REG:
            self.write_reg(core, dst.value, value)
        else:
            self._store(self.translate(self._address(core, dst), WRITE, core), value)

    def _arith(self, core, dst, src, fn):
        a = self._number(core, dst)
        b = self._number(core, src)
        try:
            result = integer_word(fn(a, b))
        except (OverflowError, ZeroDivisionError) as exc:
            raise CpuException(ARITHMETIC, str(exc) or type(exc).__name__) from None
        self.write_reg(core, dst.value, result)

    def _op_add(self, core, index, ip, dst, src):
        self._arith(core, dst, src, lambda a, b: a + b)

    def _op_sub(self, core, index, ip, dst, src):
        self._arith(core, dst, src, lambda a, b: a - b)

    def _op_mul(self, core, index, ip, dst, src):
        self._arith(core, dst, src, lambda a, b: a * b)

    def _op_div(self, core, index, ip, dst, src):
        self._arith(core, dst, src, truncated_div)

    def _op_mod(self, core, index, ip, dst, src):
        self._arith(core, dst, src, truncated_mod)

    def _op_inr(self, core, index, ip, dst):
        self._arith(core, dst, isa.Operand(isa.INT, 1), lambda a, b: a + b)

    def _op_dcr(self, core, index, ip, dst):
        self._arith(core, dst, isa.Operand(isa.INT, 1), lambda a, b: a - b)

    def _ordered(self, core, dst, src, fn):
        a = self._number(core, dst)
        b = self._number(core, src)
        self.write_reg(core, dst.value, "1" if fn(a, b) else "0")

    def _equal(self, core, dst, src) -> bool:
        a = self.read_reg(core, dst.value)
        b = self._value(core, src)
        try:
            return word_as_integer(a) == word_as_integer(b)
        except NotNumeric:
            return a == b

    def _op_lt(self, core, index, ip, dst, src):
        self._ordered(core, dst, src, lambda a, b: a < b)

    def _op_gt(self, core, index, ip, dst, src):
        self._ordered(core, dst, src, lambda a, b: a > b)

    def _op_le(self, core, index, ip, dst, src):
        self._ordered(core, dst, src, lambda a, b: a <= b)

    def _op_ge(self, core, index, ip, dst, src):
        self._ordered(core, dst, src, lambda a, b: a >= b)

    def _op_eq(self, core, index, ip, dst, src):
        self.write_reg(core, dst.value, "1" if self._equal(core, dst, src) else "0")

    def _op_ne(self, core, index, ip, dst, src):
        self.write_reg(core, dst.value, "0" if self._equal(core, dst, src) else "1")

    def _target(self, core, op) -> int:
        return self._number(core, op, ILLEGAL_INSTRUCTION)

    def _op_jz(self, core, index, ip, cond, target):
        if self._number(core, cond) == 0:
            return self._target(core, target)
        return None

    def _op_jnz(self, core, index, ip, cond, target):
        if self._number(core, cond) != 0:
            return self._target(core, target)
        return None

    def _op_jmp(self, core, index, ip, target):
        return self._target(core, target)

    def _op_push(self, core, index, ip, src):
        self._push(core, self._value(core, src))

    def _op_pop(self, core, index, ip, dst):
        if dst.value == "IP":
            raise CpuException(ILLEGAL_INSTRUCTION, "IP cannot be written")
        self.read_reg(core, dst.value)
        self.write_reg(core, dst.value, self._pop(core))

    def _op_call(self, core, index, ip, target):
        address = self._target(core, target)
        self._push(core, str(ip + 2))
        return address

    def _op_ret(self, core, index, ip):
        return self._pop(core)

    def _op_brkp(self, core, index, ip):
        if self.debug:
            self.break_hit = True
            self.break_core = index

    def _op_int(self, core, index, ip, number):
        n = number.value
        if core.mode != USER:
            raise CpuException(ILLEGAL_INSTRUCTION, "INT is issued from user mode only")
        if not MIN_SOFTWARE_INT <= n <= MAX_SOFTWARE_INT:
            raise CpuException(ILLEGAL_INSTRUCTION, f"no software interrupt {n}")
        kind = f"int {n}"
        if self.tracer is not None:
            self.tracer(f"{self.ticks + 1}\t{index}\ttrap\t{ip}\t{kind}")
        self._push_and_vector(core, index, str(ip + 2), software_int_vector(n), kind)
        return software_int_vector(n)

    def _op_iret(self, core, index, ip):
        return_ip = self._pop(core, mode=USER)
        core.mode = USER
        return return_ip

    def _op_halt(self, core, index, ip):
        core.halted = True

    def _disk(self, core, kind, page_op, block_op, immediate):
        page = self._number(core, page_op, ILLEGAL_INSTRUCTION)
        block = self._number(core, block_op, ILLEGAL_INSTRUCTION)
        try:
            self.devices.disk_request(kind, page, block, immediate)
        except DeviceError as exc:
            raise CpuException(ILLEGAL_INSTRUCTION, str(exc)) from None

    def _op_load(self, core, index, ip, page, block):
        self._disk(core, "load", page, block, False)

    def _op_loadi(self, core, index, ip, page, block):
        self._disk(core, "load", page, block, True)

    def _op_store(self, core, index, ip, block, page):
        self._disk(core, "store", page, block, False)

    def _op_storei(self, core, index, ip, block, page):
        self._disk(core, "store", page, block, True)

    def _op_in(self, core, index, ip):
        try:
            self.devices.console_input(False)
        except DeviceError as exc:
            raise CpuException(ILLEGAL_INSTRUCTION, str(exc)) from None

    def _op_ini(self, core, index, ip, dst):
        self.read_reg(core, dst.value)
        if dst.value == "IP":
            raise CpuException(ILLEGAL_INSTRUCTION, "IP cannot be written")
        try:
            line = self.devices.console_input(True)
        except InputExhausted:
            raise MachineFault(f"console input exhausted at IP {ip}", core=index, ip=str(ip)) from None
        self.write_reg(core, dst.value, line)

    def _op_out(self, core, index, ip, src):
        self.devices.console_output(self.read_reg(core, src.value), False)

    def _op_print(self, core, index, ip, src):
        self.devices.console_output(self.read_reg(core, src.value), True)

    def _op_encrypt(self, core, index, ip, dst):
        self.write_reg(core, dst.value, encrypt(self.read_reg(core, dst.value)))

    def _op_backup(self, core, index, ip):
        for name in BACKUP_REGISTERS:
            self._push(core, core.regs[name])

    def _op_restore(self, core, index, ip):
        sp = self._number(core, isa.Operand(isa.REG, "SP"), ILLEGAL_MEMORY_ACCESS)
        bottom = sp - len(BACKUP_REGISTERS) + 1
        for addr in (bottom, sp):
            self.translate(addr, READ, core, touch=False)
        for name in reversed(BACKUP_REGISTERS):
            core.regs[name] = self._pop(core)

    def _op_tsl(self, core, index, ip, dst, loc):
        raise CpuException(ILLEGAL_INSTRUCTION, "TSL needs the two-core machine")

    def _op_start(self, core, index, ip, addr):
        raise CpuException(ILLEGAL_INSTRUCTION, "START needs the two-core machine")


def truncated_div(a: int, b: int) -> int:
    q = abs(a) // abs(b)
    return q if (a < 0) == (b < 0) else -q


def truncated_mod(a: int, b: int) -> int:
    return a - b * truncated_div(a, b)
