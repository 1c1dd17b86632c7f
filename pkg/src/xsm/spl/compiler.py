from __future__ import annotations

import os
from dataclasses import dataclass

from .codegen import DEFAULT_BASE, generate
from .errors import CompileError
from .parser import parse
from .lexer import tokenize


@dataclass
class CompileReport:
    source: str
    output: str
    instructions: int

    @property
    def words(self) -> int:
        return 2 * self.instructions


def compile_source(source: str, base: int = DEFAULT_BASE) -> str:
    return generate(parse(tokenize(source)), base)


def compile_file(path, base: int = DEFAULT_BASE, out_path=None) -> CompileReport:
    """Compile the SPL file at ``path`` and write its assembly next to it (or to ``out_path``)."""
    path = os.fspath(path)
    if out_path is None:
        out_path = os.path.splitext(path)[0] + ".xsm"
    try:
        with open(path, encoding="utf-8") as f:
            source = f.read()
    except OSError as exc:
        raise CompileError(f"cannot read source: {exc.strerror}", path=path) from None
    try:
        text = compile_source(source, base)
    except CompileError as exc:
        exc.path = path
        raise
    with open(out_path, "w", encoding="utf-8") as f:
        f.write(text)
    return CompileReport(path, os.fspath(out_path), text.count("\n"))
