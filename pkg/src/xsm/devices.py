"""Timer, disk controller and console.

Time is measured in ticks; one tick passes per executed instruction.  A
request issued by the instruction executed at tick ``t`` with latency ``L``
completes during the device update at the end of tick ``t + L``; the
interrupt is raised only once the transfer has been applied.
"""

from __future__ import annotations

import sys
from collections import deque
from dataclasses import dataclass
from typing import Callable, Iterable

from .disk import BLOCK_SIZE, NUM_BLOCKS, DiskImage

PAGE_SIZE = 512
NUM_PAGES = 128

TIMER = "timer"
DISK = "disk"
CONSOLE = "console"
# highest priority first
INTERRUPT_PRIORITY = (TIMER, DISK, CONSOLE)

DEFAULT_TIMER_INTERVAL = 32
DEFAULT_DISK_LATENCY = 10
DEFAULT_CONSOLE_LATENCY = 5


class DeviceError(Exception):
    """A request the hardware refuses; the CPU reports it as an illegal instruction."""


class InputExhausted(Exception):
    pass


@dataclass
class DiskOp:
    kind: str  # "load" or "store"
    page: int
    block: int
    due: int


class ScriptInput:
    """Console lines supplied up front, one per line of an input script."""

    def __init__(self, lines: Iterable[str]):
        self._lines = deque(lines)

    @classmethod
    def from_file(cls, path) -> ScriptInput:
        with open(path, encoding="utf-8") as f:
            return cls(f.read().splitlines())

    def __call__(self) -> str | None:
        return self._lines.popleft() if self._lines else None


def terminal_input() -> str | None:
    line = sys.stdin.readline()
    if not line:
        return None
    return line.rstrip("\n")


class Devices:
    def __init__(
        self,
        memory: list[str],
        disk: DiskImage,
        ports: dict[str, str],
        *,
        timer_interval: int = DEFAULT_TIMER_INTERVAL,
        disk_latency: int = DEFAULT_DISK_LATENCY,
        console_latency: int = DEFAULT_CONSOLE_LATENCY,
        read_line: Callable[[], str | None] | None = None,
        on_output: Callable[[str], None] | None = None,
    ):
        if timer_interval < 1:
            raise ValueError("timer interval must be at least 1")
        if disk_latency < 0 or console_latency < 0:
            raise ValueError("latencies cannot be negative")
        self.memory = memory
        self.disk = disk
        self.ports = ports
        self.timer_interval = timer_interval
        self.timer_countdown = timer_interval
        self.disk_latency = disk_latency
        self.console_latency = console_latency
        self.read_line = read_line if read_line is not None else ScriptInput(())
        self.on_output = on_output
        self.now = 0
        self.disk_op: DiskOp | None = None
        self.console_out: deque[tuple[str, int]] = deque()
        self.console_in: tuple[str, int] | None = None
        self.pending: set[str] = set()
        self.output: list[str] = []
        # (tick, description) of completed device events, drained by the tracer
        self.events: list[tuple[int, str]] = []
        # called with (start, stop) physical range after a transfer writes memory
        self.on_memory_write: Callable[[int, int], None] | None = None

    def snapshot(self) -> tuple:
        return (
            self.now,
            self.timer_countdown,
            None if self.disk_op is None else (self.disk_op.kind, self.disk_op.page, self.disk_op.block, self.disk_op.due),
            tuple(self.console_out),
            self.console_in,
            tuple(sorted(self.pending)),
            tuple(self.output),
        )

    def tick(self) -> None:
        self.now += 1
        self.timer_countdown -= 1
        if self.timer_countdown == 0:
            self.timer_countdown = self.timer_interval
            self._raise(TIMER)
        if self.disk_op is not None and self.disk_op.due <= self.now:
            op, self.disk_op = self.disk_op, None
            self._transfer(op.kind, op.page, op.block)
            self._raise(DISK, f"{op.kind} page={op.page} block={op.block}")
        while self.console_out and self.console_out[0][1] <= self.now:
            word, _ = self.console_out.popleft()
            self._emit(word)
            self._raise(CONSOLE, "out")
        if self.console_in is not None and self.console_in[1] <= self.now:
            line, _ = self.console_in
            self.console_in = None
            self.ports["P0"] = line
            self._raise(CONSOLE, "in")

    def take_interrupt(self) -> str | None:
        """Remove and return the highest-priority pending interrupt."""
        for kind in INTERRUPT_PRIORITY:
            if kind in self.pending:
                self.pending.discard(kind)
                return kind
        return None

    def disk_request(self, kind: str, page: int, block: int, immediate: bool) -> None:
        if not 0 <= page < NUM_PAGES:
            raise DeviceError(f"page {page} out of range")
        if not 0 <= block < NUM_BLOCKS:
            raise DeviceError(f"block {block} out of range")
        if immediate:
            self._transfer(kind, page, block)
            return
        if self.disk_op is not None:
            raise DeviceError("disk busy")
        self.disk_op = DiskOp(kind, page, block, self.now + 1 + self.disk_latency)

    def console_output(self, word: str, synchronous: bool) -> None:
        if synchronous:
            self._emit(word)
        else:
            self.console_out.append((word, self.now + 1 + self.console_latency))

    def console_input(self, synchronous: bool) -> str | None:
        if synchronous:
            line = self.read_line()
            if line is None:
                raise InputExhausted("console input exhausted")
            return line
        if self.console_in is not None:
            raise DeviceError("console input busy")
        line = self.read_line()
        # with no more input the request never completes
        if line is not None:
            self.console_in = (line, self.now + 1 + self.console_latency)
        return None

    def _transfer(self, kind: str, page: int, block: int) -> None:
        start = page * PAGE_SIZE
        if kind == "load":
            self.memory[start:start + PAGE_SIZE] = self.disk.block(block)
            if self.on_memory_write is not None:
                self.on_memory_write(start, start + PAGE_SIZE)
        else:
            self.disk.write_block(block, self.memory[start:start + BLOCK_SIZE])

    def _emit(self, word: str) -> None:
        self.output.append(word)
        if self.on_output is not None:
            self.on_output(word)

    def _raise(self, kind: str, detail: str = "") -> None:
        self.pending.add(kind)
        self.events.append((self.now, f"{kind} {detail}".rstrip()))
