import pytest

from xsm.isa import INT, MEM_INT, MEM_REG, REG, STR, Instruction, InvalidInstruction, Operand, parse_instruction


def test_mov_register_immediate():
    assert parse_instruction("MOV R0, 5") == Instruction("MOV", (Operand(REG, "R0"), Operand(INT, 5)))


@pytest.mark.parametrize(
    "text, operands",
    [
        ('MOV R1, "hello, world"', (Operand(REG, "R1"), Operand(STR, "hello, world"))),
        ("MOV [R3], -12", (Operand(MEM_REG, "R3"), Operand(INT, -12))),
        ("MOV SP, [4096]", (Operand(REG, "SP"), Operand(MEM_INT, 4096))),
        ('EQ R0, ""', (Operand(REG, "R0"), Operand(STR, ""))),
        ("TSL R2, [ 7000 ]", (Operand(REG, "R2"), Operand(MEM_INT, 7000))),
    ],
)
def test_operand_forms(text, operands):
    assert parse_instruction(text).operands == operands


def test_case_and_spacing_are_flexible():
    assert parse_instruction("  jmp   514 ") == Instruction("JMP", (Operand(INT, 514),))
    assert parse_instruction("mov r0,sp") == Instruction("MOV", (Operand(REG, "R0"), Operand(REG, "SP")))


@pytest.mark.parametrize(
    "text",
    [
        "",
        "   ",
        "MOV [R0], [R1]",  # two memory operands
        "FOO R0",
        "MOV R0",
        "HALT R0",
        "ADD 5, R0",
        "MOV R20, 1",
        'MOV R0, "unterminated',
        "JMP [R0]",
        "INT R0",
        "TSL R0, 7000",
        "MOV R0, [R0 + 1]",
        "PUSH [R1]",
    ],
)
def test_malformed_instructions(text):
    with pytest.raises(InvalidInstruction):
        parse_instruction(text)


def test_str_round_trips():
    for text in ["MOV R0, 5", 'MOV [R1], "a b"', "HALT", "JZ R16, 530", "TSL R1, [7000]"]:
        assert str(parse_instruction(text)) == text
