"""Helpers shared by the test modules."""

from __future__ import annotations

from pathlib import Path

from xsm.disk import DiskImage
from xsm.machine import KERNEL, PAGE_SIZE, USER, Machine
from xsm.nexsm import NexsmMachine
from xsm.spl import compile_source
from xsm.xfs import FileSystem

FIXTURES = Path(__file__).parent / "fixtures"


def boot_disk(instructions: list[str]) -> DiskImage:
    fs = FileSystem.formatted()
    fs.load_boot(instructions)
    return fs.disk


def boot_machine(instructions: list[str], cls=Machine, **kwargs) -> Machine:
    machine = cls(boot_disk(instructions), **kwargs)
    machine.boot()
    return machine


def compile_lines(source: str, base: int = 512) -> list[str]:
    return compile_source(source, base).splitlines()


def boot_spl(source: str, cls=Machine, **kwargs) -> Machine:
    return boot_machine(compile_lines(source), cls, **kwargs)


def place_code(machine: Machine, physical: int, instructions: list[str]) -> None:
    for i, text in enumerate(instructions):
        machine.memory[physical + 2 * i] = text
        machine.memory[physical + 2 * i + 1] = ""


def user_machine(ptbr: int = 28 * PAGE_SIZE, pages: dict[int, tuple[int, str]] | None = None,
                 ptlr: int = 4, **kwargs) -> Machine:
    """Fresh machine in user mode with a page table holding ``pages`` (logical -> (phys, flags))."""
    machine = Machine(**kwargs)
    machine.boot()
    regs = machine.regs
    regs["PTBR"] = str(ptbr)
    regs["PTLR"] = str(ptlr)
    for page in range(ptlr):
        phys, flags = (pages or {}).get(page, (0, "0000"))
        machine.memory[ptbr + 2 * page] = str(phys)
        machine.memory[ptbr + 2 * page + 1] = flags
    machine.cores[0].mode = USER
    return machine


def counter_image(path) -> None:
    """Disk image whose boot block holds the compiled counter fixture."""
    fs = FileSystem.formatted()
    fs.load_boot((FIXTURES / "counter.xsm").read_text().splitlines())
    fs.disk.save(path)


def image_with_boot(path, instructions: list[str]) -> None:
    boot_disk(instructions).save(path)


def run_until_halt(machine: Machine, limit: int = 100_000) -> Machine:
    machine.run(max_ticks=limit)
    return machine


__all__ = [
    "FIXTURES", "KERNEL", "USER", "NexsmMachine", "boot_disk", "counter_image", "image_with_boot", "boot_machine", "boot_spl", "compile_lines",
    "place_code", "run_until_halt", "user_machine",
]
