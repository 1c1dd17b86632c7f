import pytest
from hypothesis import given, settings, strategies as st

from support import boot_machine, place_code, user_machine
from xsm.machine import (
    ARITHMETIC,
    EXCEPTION_VECTOR,
    ILLEGAL_INSTRUCTION,
    ILLEGAL_MEMORY_ACCESS,
    KERNEL,
    PAGE_FAULT,
    USER,
    WRITE,
    CpuException,
    Machine,
    software_int_vector,
)
from xsm.disk import DiskImage
from xsm.isa import Operand, REG, parse_instruction


def execute(machine, text):
    machine.execute(parse_instruction(text), machine.cores[0])


def kernel_machine():
    m = Machine()
    m.boot()
    return m


# -- boot ------------------------------------------------------------------


def test_boot_copies_block_zero_to_page_one():
    disk = DiskImage()
    disk.words[0] = "JMP 512"
    disk.words[511] = "last"
    disk.words[512] = "block one"
    m = Machine(disk)
    m.boot()
    assert m.memory[512] == "JMP 512"
    assert m.memory[1023] == "last"
    assert m.memory[1024] == ""
    assert m.regs["IP"] == "512"
    assert m.mode == KERNEL
    assert m.regs["SP"] == ""
    assert all(v == "" for k, v in m.regs.items() if k != "IP")


# -- instructions ----------------------------------------------------------


def test_add_advances_ip():
    m = kernel_machine()
    m.regs.update(R0="2", R1="3")
    execute(m, "ADD R0, R1")
    assert m.regs["R0"] == "5"
    assert m.regs["IP"] == "514"


@pytest.mark.parametrize(
    "text, before, after",
    [
        ("SUB R0, 10", "3", "-7"),
        ("MUL R0, -4", "3", "-12"),
        ("DIV R0, 2", "-7", "-3"),
        ("MOD R0, 2", "-7", "-1"),
        ("DIV R0, -2", "7", "-3"),
        ("MOD R0, -2", "7", "1"),
        ("INR R0", "9", "10"),
        ("DCR R0", "0", "-1"),
    ],
)
def test_arithmetic(text, before, after):
    m = kernel_machine()
    m.regs["R0"] = before
    execute(m, text)
    assert m.regs["R0"] == after


def test_push_stack_grows_up():
    m = kernel_machine()
    m.regs.update(SP="4095", R0="9")
    execute(m, "PUSH R0")
    assert m.memory[4096] == "9"
    assert m.regs["SP"] == "4096"


@given(word=st.text(alphabet=st.characters(blacklist_characters="\n"), max_size=20),
       sp=st.integers(min_value=0, max_value=65534))
def test_push_pop_round_trip(word, sp):
    m = kernel_machine()
    m.regs.update(SP=str(sp), R3=word)
    execute(m, "PUSH R3")
    execute(m, "POP R5")
    assert m.regs["SP"] == str(sp)
    assert m.regs["R5"] == word


def test_backup_restore_round_trip():
    m = kernel_machine()
    m.regs["SP"] = "5000"
    values = {f"R{i}": f"v{i}" for i in range(20)}
    m.regs.update(values, BP="base")
    execute(m, "BACKUP")
    assert m.regs["SP"] == "5021"
    m.regs.update({f"R{i}": "" for i in range(20)}, BP="")
    execute(m, "RESTORE")
    assert m.regs["SP"] == "5000"
    assert {r: m.regs[r] for r in values} == values
    assert m.regs["BP"] == "base"


@pytest.mark.parametrize(
    "op, a, b, expected",
    [
        ("EQ", "abc", "abc", "1"),
        ("EQ", "abc", "abd", "0"),
        ("EQ", "05", "5", "1"),
        ("NE", "x", "5", "1"),
        ("LT", "3", "4", "1"),
        ("GE", "3", "4", "0"),
        ("LE", "4", "4", "1"),
        ("GT", "-1", "-2", "1"),
    ],
)
def test_comparisons(op, a, b, expected):
    m = kernel_machine()
    m.regs.update(R0=a, R1=b)
    execute(m, f"{op} R0, R1")
    assert m.regs["R0"] == expected


def test_ordering_needs_numbers():
    m = kernel_machine()
    m.regs.update(R0="a", R1="b")
    with pytest.raises(CpuException) as exc:
        execute(m, "LT R0, R1")
    assert exc.value.cause == ARITHMETIC


def test_division_by_zero_is_arithmetic_exception():
    m = kernel_machine()
    m.regs["R2"] = "10"
    with pytest.raises(CpuException) as exc:
        execute(m, "DIV R2, 0")
    assert exc.value.cause == ARITHMETIC
    assert m.regs["R2"] == "10"


def test_overflow_is_arithmetic_exception():
    m = kernel_machine()
    m.regs["R0"] = str(2**63 - 1)
    with pytest.raises(CpuException) as exc:
        execute(m, "INR R0")
    assert exc.value.cause == ARITHMETIC


def test_uninitialized_register_is_not_a_number():
    m = kernel_machine()
    with pytest.raises(CpuException):
        execute(m, "ADD R0, 1")


def test_ip_cannot_be_written():
    m = kernel_machine()
    for text in ["MOV IP, 5", "ADD IP, 2", "POP IP"]:
        m.regs["SP"] = "5000"
        with pytest.raises(CpuException) as exc:
            execute(m, text)
        assert exc.value.cause == ILLEGAL_INSTRUCTION


def test_jumps_and_calls():
    m = kernel_machine()
    m.regs.update(R0="0", SP="5000")
    execute(m, "JZ R0, 600")
    assert m.regs["IP"] == "600"
    execute(m, "JNZ R0, 700")
    assert m.regs["IP"] == "602"
    execute(m, "CALL 800")
    assert m.regs["IP"] == "800"
    assert m.memory[5001] == "604"
    execute(m, "RET")
    assert m.regs["IP"] == "604"
    assert m.regs["SP"] == "5000"


def test_encrypt_and_print():
    out = []
    m = Machine(on_output=out.append)
    m.boot()
    m.regs.update(R0="abc", R1="hello world")
    execute(m, "ENCRYPT R0")
    execute(m, "PRINT R1")
    assert m.regs["R0"] == "*294*294"
    assert out == ["hello world"]


@pytest.mark.parametrize("text", ["LOAD 3, 5", "HALT", "PRINT R0", "IRET", "BACKUP", "MOV R0, PTBR", "MOV EC, 1"])
def test_privileged_in_user_mode(text):
    m = user_machine(pages={0: (30, "1100")})
    with pytest.raises(CpuException) as exc:
        execute(m, text)
    assert exc.value.cause == ILLEGAL_INSTRUCTION


# -- traps -----------------------------------------------------------------


def test_int_pushes_return_address_and_vectors():
    m = user_machine(pages={4: (30, "1100"), 8: (31, "1110")}, ptlr=10)
    m.regs.update(IP="2048", SP="4500")
    m.memory[30 * 512] = "INT 9"
    m.step()
    assert software_int_vector(9) == 10240
    assert m.regs["IP"] == "10240"
    assert m.mode == KERNEL
    assert m.regs["SP"] == "4501"
    assert m.memory[31 * 512 + 4501 - 4096] == "2050"


def test_int_range():
    assert software_int_vector(4) == 5120
    assert software_int_vector(18) == 19456
    m = user_machine(pages={0: (30, "1100")})
    m.regs.update(IP="0", SP="0")
    m.memory[30 * 512] = "INT 3"
    m.step()
    assert m.regs["EC"] == "0"
    assert m.regs["IP"] == str(EXCEPTION_VECTOR)


def test_page_fault_exception_records_cause():
    m = user_machine(pages={0: (30, "1100")})
    m.regs.update(IP="0", R0="1600", SP="")
    m.memory[30 * 512] = "MOV R1, [R0]"
    m.step()
    assert m.regs["EC"] == "2"
    assert m.regs["EPN"] == "3"
    assert m.regs["EIP"] == "0"
    assert m.regs["IP"] == "1024"
    assert m.mode == KERNEL
    assert m.regs["SP"] == ""  # nothing pushed


def test_illegal_access_records_address():
    m = user_machine(pages={0: (30, "1100")}, ptlr=2)
    m.regs.update(IP="0", R0="1500")
    m.memory[30 * 512] = "MOV R1, [R0]"
    m.step()
    assert m.regs["EC"] == "1"
    assert m.regs["EMA"] == "1500"


def test_arithmetic_exception_from_user_mode():
    m = user_machine(pages={0: (30, "1100")})
    m.regs.update(IP="0", R2="5")
    m.memory[30 * 512] = "DIV R2, 0"
    m.step()
    assert m.regs["EC"] == "3"
    assert m.regs["EIP"] == "0"


def test_exception_in_kernel_mode_is_fatal():
    m = boot_machine(["DIV R0, 0"])
    m.step()
    assert m.halted
    assert m.fault is not None
    assert "arithmetic" in str(m.fault)
    assert m.fault.ip == "512"


def test_empty_word_is_not_code():
    m = boot_machine([])
    m.step()
    assert m.fault is not None
    assert m.fault.cause == ILLEGAL_INSTRUCTION
    assert m.ticks == 1


def test_interrupt_waits_for_user_mode():
    m = boot_machine(["JMP 512"], timer_interval=4)
    for _ in range(10):
        m.step()
    assert m.devices.pending == {"timer"}
    assert m.mode == KERNEL
    assert m.regs["IP"] == "512"


def test_timer_delivered_in_user_mode():
    m = user_machine(pages={0: (30, "1100"), 1: (31, "1110")}, timer_interval=1000)
    m.regs.update(IP="0", SP="600")
    m.devices.pending.add("timer")
    ticks = m.ticks
    m.step()
    assert m.regs["IP"] == "2048"
    assert m.mode == KERNEL
    assert m.regs["SP"] == "601"
    assert m.memory[31 * 512 + 601 - 512] == "0"
    assert m.ticks == ticks  # delivery executes no instruction


def test_interrupt_priority():
    m = user_machine(pages={0: (30, "1100"), 1: (31, "1110")})
    m.regs.update(IP="0", SP="600")
    m.devices.pending.update({"console", "disk", "timer"})
    m.step()
    assert m.regs["IP"] == "2048"
    assert m.devices.pending == {"console", "disk"}


def test_push_failure_during_delivery_is_fatal():
    m = user_machine(pages={0: (30, "1100")})  # stack page invalid
    m.regs.update(IP="0", SP="600")
    m.devices.pending.add("disk")
    m.step()
    assert m.fault is not None


def test_iret_returns_to_user():
    m = boot_machine(["IRET"])
    m.regs.update(PTBR=str(28 * 512), PTLR="2", SP="512")
    m.memory[28 * 512:28 * 512 + 4] = ["30", "1100", "31", "1110"]
    m.memory[31 * 512] = "6"
    m.step()
    assert m.mode == USER
    assert m.regs["IP"] == "6"
    assert m.regs["SP"] == "511"


def test_halt():
    m = boot_machine(["HALT"])
    m.step()
    assert m.halted and m.fault is None


def test_determinism():
    program = ["MOV R0, 0", "INR R0", "LT R1, 3", "JMP 514"]

    def trace():
        m = boot_machine(program)
        lines = []
        m.tracer = lines.append
        for _ in range(200):
            m.step()
        return lines, m.snapshot()

    assert trace() == trace()


def test_mode_discipline_on_random_streams():
    rng = __import__("random").Random(7)
    opcodes = ["MOV R0, 1", "INR R0", "INT 5", "IRET", "DIV R0, 0", "JMP 0", "HALT", "PUSH R0",
               "MOV R1, [R0]", "LOAD 3, 4", "POP R2", "BRKP", "MOV R0, PTBR", ""]
    for trial in range(60):
        m = user_machine(pages={0: (30, "1100"), 1: (31, "1110")}, timer_interval=7)
        m.regs.update(IP="0", SP="520", R0="0")
        stream = [rng.choice(opcodes) for _ in range(256)]
        place_code(m, 30 * 512, stream)
        place_code(m, 1024, [rng.choice(opcodes) for _ in range(40)])
        previous = m.mode
        for _ in range(300):
            if m.halted:
                break
            line_count = []
            m.tracer = line_count.append
            m.step()
            if m.halted:
                break
            if previous == USER and m.mode == KERNEL:
                assert any("\ttrap\t" in l for l in line_count)
            if previous == KERNEL and m.mode == USER:
                assert any(l.endswith("IRET") for l in line_count)
            previous = m.mode
