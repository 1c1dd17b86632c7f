"""Random SPL programs paired with the statement tree the reference evaluator runs."""

from __future__ import annotations

import random

from xsm.machine import Machine

VARIABLES = ["R0", "R1", "R2", "R3", "R4", "R5"]
COUNTERS = ["R6", "R7"]
ARITH = ["+", "-", "*", "/", "%"]
COMPARE = ["<", ">", "<=", ">=", "==", "!="]
DATA = 8000
CELLS = 16


class Generator:
    def __init__(self, rng: random.Random, *, control: bool = True):
        self.rng = rng
        self.control = control

    def leaf(self):
        rng = self.rng
        roll = rng.random()
        if roll < 0.35:
            n = rng.randint(-20, 20) if rng.random() < 0.8 else rng.randint(-10**6, 10**6)
            return str(n), n
        if roll < 0.37:
            s = rng.choice(["a", "xy", "zz"])
            return f'"{s}"', s
        if roll < 0.9:
            reg = rng.choice(VARIABLES + COUNTERS)
            return reg, ("reg", reg)
        k = rng.randrange(CELLS)
        return f"[{DATA + k}]", ("mem", DATA + k)

    def expr(self, depth: int):
        rng = self.rng
        if depth == 0 or rng.random() < 0.3:
            return self.leaf()
        roll = rng.random()
        if roll < 0.1:
            text, tree = self.expr(depth - 1)
            return f"-({text})", ("neg", tree)
        if roll < 0.18:
            text, tree = self.expr(depth - 1)
            return f"[{DATA + 8} + (({text}) % 8)]", ("mem", ("+", DATA + 8, ("%", tree, 8)))
        op = rng.choice(ARITH + COMPARE)
        lt, ltree = self.expr(depth - 1)
        rt, rtree = self.expr(depth - 1)
        return f"({lt} {op} {rt})", (op, ltree, rtree)

    def statement(self, free_counters: list[str], depth: int, indent: str):
        rng = self.rng
        roll = rng.random()
        if self.control and depth > 0 and roll < 0.15:
            ct, ctree = self.expr(2)
            then_text, then_tree = self.block(free_counters, depth - 1, indent + "  ")
            else_text, else_tree = self.block(free_counters, depth - 1, indent + "  ")
            text = f"{indent}if ({ct}) then\n{then_text}"
            if else_tree or rng.random() < 0.5:
                text += f"{indent}else\n{else_text}"
            text += f"{indent}endif;\n"
            return text, [("if", ctree, then_tree, else_tree)]
        if self.control and depth > 0 and free_counters and roll < 0.3:
            counter, rest = free_counters[0], free_counters[1:]
            limit = rng.randint(0, 5)
            body_text, body_tree = self.block(rest, depth - 1, indent + "  ")
            text = (f"{indent}{counter} = 0;\n{indent}while ({counter} < {limit}) do\n{body_text}"
                    f"{indent}  {counter} = {counter} + 1;\n{indent}endwhile;\n")
            step = ("set", counter, ("+", ("reg", counter), 1))
            return text, [("set", counter, 0), ("while", ("<", ("reg", counter), limit), body_tree + [step])]
        et, etree = self.expr(3)
        if roll < 0.8:
            reg = rng.choice(VARIABLES)
            return f"{indent}{reg} = {et};\n", [("set", reg, etree)]
        k = rng.randrange(CELLS)
        return f"{indent}[{DATA + k}] = {et};\n", [("store", DATA + k, etree)]

    def block(self, free_counters, depth, indent):
        texts, trees = [], []
        for _ in range(self.rng.randint(0, 3)):
            text, tree = self.statement(free_counters, depth, indent)
            texts.append(text)
            trees.extend(tree)
        return "".join(texts), trees

    def program(self):
        """(source, statements) with every variable initialised first."""
        rng = self.rng
        lines, tree = [], []
        for reg in VARIABLES + COUNTERS:
            n = rng.randint(-9, 9)
            lines.append(f"{reg} = {n};\n")
            tree.append(("set", reg, n))
        for k in range(CELLS):
            n = rng.randint(-9, 9)
            lines.append(f"[{DATA + k}] = {n};\n")
            tree.append(("store", DATA + k, n))
        for _ in range(rng.randint(1, 6)):
            text, stmts = self.statement(list(COUNTERS), 2, "")
            lines.append(text)
            tree.extend(stmts)
        lines.append("halt;\n")
        return "".join(lines), tree


def run_compiled(lines: list[str], limit: int = 200_000) -> Machine:
    """Boot an empty machine, place ``lines`` at 512 and run to HALT or fault."""
    machine = Machine()
    machine.boot()
    for i, text in enumerate(lines):
        machine.memory[512 + 2 * i] = text
    machine.run(max_ticks=limit)
    return machine
