"""SPL: the kernel programming language of the XSM machine."""

from .codegen import generate
from .compiler import CompileReport, compile_file, compile_source
from .errors import CompileError
from .lexer import tokenize
from .parser import parse

__all__ = ["CompileError", "CompileReport", "compile_file", "compile_source", "generate", "parse", "tokenize"]
