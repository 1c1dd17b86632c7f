"""NEXSM: the two-core variant of the machine.

Both cores share memory, devices and disk.  Cores execute in strict
alternation (core 0, then core 1) and the devices advance once per round.
Device interrupts are routed to core 0 only.
"""

from __future__ import annotations

from .machine import ILLEGAL_INSTRUCTION, KERNEL, READ, WRITE, CpuException, Machine, MachineFault, fresh_registers


class NexsmMachine(Machine):
    num_cores = 2

    def step(self) -> None:
        self.dual_step()

    def dual_step(self) -> None:
        if self.halted:
            return
        try:
            executed = False
            for index, core in enumerate(self.cores):
                if core.started and not core.halted:
                    executed |= self._core_step(index)
                    if index == 0 and core.halted:
                        self.halted = True
                        break
            if executed:
                self._tick()
        except MachineFault as fault:
            self._die(fault)

    def start_core(self, addr: int) -> None:
        second = self.cores[1]
        if second.started:
            return
        second.regs.update(fresh_registers())
        second.regs["IP"] = str(addr)
        second.mode = KERNEL
        second.halted = False
        second.started = True

    def _op_start(self, core, index, ip, addr_op):
        if index != 0:
            raise CpuException(ILLEGAL_INSTRUCTION, "START is issued by core 0")
        addr = self._number(core, addr_op, ILLEGAL_INSTRUCTION)
        self.translate(addr, READ, core, touch=False)
        self.start_core(addr)

    def _op_tsl(self, core, index, ip, dst, loc):
        if dst.value == "IP":
            raise CpuException(ILLEGAL_INSTRUCTION, "IP cannot be written")
        physical = self.translate(self._address(core, loc), WRITE, core)
        # read and write happen inside one instruction: no other core runs in between
        old = self.memory[physical]
        self._store(physical, "1")
        self.write_reg(core, dst.value, old)


def make_machine(cores: int = 1, **kwargs) -> Machine:
    if cores == 1:
        return Machine(**kwargs)
    if cores == 2:
        return NexsmMachine(**kwargs)
    raise ValueError(f"unsupported core count {cores}")

