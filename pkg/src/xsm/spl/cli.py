import argparse
import sys

from .codegen import DEFAULT_BASE
from .compiler import compile_file
from .errors import CompileError


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="spl", description="Compile SPL kernel code to XSM assembly.")
    parser.add_argument("source")
    parser.add_argument("--base", type=int, default=DEFAULT_BASE,
                        help=f"load address of the first instruction (default {DEFAULT_BASE})")
    parser.add_argument("-o", "--output", help="assembly output file (default: source with .xsm suffix)")
    args = parser.parse_args(argv)
    try:
        report = compile_file(args.source, args.base, args.output)
    except CompileError as exc:
        print(f"spl: error: {exc}", file=sys.stderr)
        return 1
    print(f"{report.output}: {report.instructions} instructions, {report.words} words at {args.base}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
