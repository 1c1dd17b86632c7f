"""``xsm``: boot a disk image and run it.

Exit codes: 0 halt (or debugger exit), 1 machine fault, 2 usage or
configuration error, 3 tick limit reached.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, field
from typing import TextIO

from .debugger import EXIT, Debugger
from .devices import (
    DEFAULT_CONSOLE_LATENCY,
    DEFAULT_DISK_LATENCY,
    DEFAULT_TIMER_INTERVAL,
    ScriptInput,
    terminal_input,
)
from .disk import DiskImage, DiskImageError
from .nexsm import make_machine

HALT = "halt"
FAULT = "fault"
TICK_LIMIT = "tick_limit"
DEBUGGER_EXIT = "debugger_exit"

EXIT_CODES = {HALT: 0, DEBUGGER_EXIT: 0, FAULT: 1, TICK_LIMIT: 3}
USAGE_EXIT = 2


class ConfigError(Exception):
    pass


@dataclass
class SimConfig:
    disk_path: str
    debug: bool = False
    debug_script: str | None = None
    input_script: str | None = None
    timer: int = DEFAULT_TIMER_INTERVAL
    disk_latency: int = DEFAULT_DISK_LATENCY
    console_latency: int = DEFAULT_CONSOLE_LATENCY
    cores: int = 1
    max_ticks: int | None = None
    trace_path: str | None = None
    transcript_path: str | None = None

    def validate(self) -> None:
        if self.timer < 1:
            raise ConfigError("--timer must be at least 1")
        if self.disk_latency < 0 or self.console_latency < 0:
            raise ConfigError("latencies cannot be negative")
        if self.cores not in (1, 2):
            raise ConfigError("--cores must be 1 or 2")
        if self.max_ticks is not None and self.max_ticks < 0:
            raise ConfigError("--max-ticks cannot be negative")
        if self.debug_script is not None and not self.debug:
            raise ConfigError("--debug-script requires --debug")


@dataclass
class ExitReport:
    reason: str
    ticks: int
    message: str = ""
    output: list[str] = field(default_factory=list)

    @property
    def exit_code(self) -> int:
        return EXIT_CODES[self.reason]


def _read_lines(path: str, what: str) -> list[str]:
    try:
        with open(path, encoding="utf-8") as f:
            return f.read().splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read {what} {path!r}: {exc.strerror}") from None


def _create(path: str | None, what: str) -> TextIO | None:
    if path is None:
        return None
    try:
        return open(path, "w", encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot write {what} {path!r}: {exc.strerror}") from None


def run(config: SimConfig, stdout: TextIO | None = None) -> ExitReport:
    """Boot the image named by ``config`` and run until the machine stops.

    The disk image is written back only after a clean HALT.
    """
    out = stdout if stdout is not None else sys.stdout
    config.validate()
    try:
        disk = DiskImage.load(config.disk_path)
    except DiskImageError as exc:
        raise ConfigError(str(exc)) from None
    input_lines = _read_lines(config.input_script, "input script") if config.input_script else None
    debug_lines = _read_lines(config.debug_script, "debug script") if config.debug_script else None

    transcript = _create(config.transcript_path, "transcript")
    trace = _create(config.trace_path, "trace file")

    def emit(word: str) -> None:
        print(word, file=out, flush=True)
        if transcript is not None:
            transcript.write(word + "\n")

    try:
        machine = make_machine(
            config.cores,
            disk=disk,
            timer_interval=config.timer,
            disk_latency=config.disk_latency,
            console_latency=config.console_latency,
            read_line=ScriptInput(input_lines) if input_lines is not None else terminal_input,
            on_output=emit,
            debug=config.debug,
        )
        if trace is not None:
            machine.tracer = lambda line: trace.write(line + "\n")
        machine.boot()

        def step() -> bool:
            if config.max_ticks is not None and machine.ticks >= config.max_ticks:
                return False
            machine.step()
            return not machine.halted

        debugger = Debugger(machine, step, debug_lines, out) if config.debug else None
        reason = None
        while reason is None:
            if machine.halted:
                reason = FAULT if machine.fault is not None else HALT
            elif config.max_ticks is not None and machine.ticks >= config.max_ticks:
                reason = TICK_LIMIT
            else:
                machine.step()
                if debugger is not None and (machine.break_hit or machine.watch_hits):
                    if debugger.enter() == EXIT:
                        reason = DEBUGGER_EXIT
    finally:
        if transcript is not None:
            transcript.close()
        if trace is not None:
            trace.close()

    if reason == HALT:
        disk.save(config.disk_path)
        message = f"halted after {machine.ticks} ticks"
    elif reason == FAULT:
        fault = machine.fault
        message = f"machine fault at tick {machine.ticks} on core {fault.core}: {fault}"
    elif reason == TICK_LIMIT:
        message = f"tick limit {config.max_ticks} reached"
    else:
        message = f"debugger exit after {machine.ticks} ticks"
    return ExitReport(reason, machine.ticks, message, list(machine.devices.output))


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be at least 1, got {value}")
    return value


def _non_negative(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"cannot be negative, got {value}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="xsm", description="Run the XSM machine on a disk image.")
    parser.add_argument("--disk", required=True, help="disk image (text, one word per line)")
    parser.add_argument("--debug", action="store_true", help="open the debugger when BRKP executes")
    parser.add_argument("--debug-script", metavar="FILE", help="debugger commands, one per line")
    parser.add_argument("--input", metavar="FILE", help="console input, read one line per request")
    parser.add_argument("--timer", type=_positive, default=DEFAULT_TIMER_INTERVAL,
                        help="instructions between timer interrupts")
    parser.add_argument("--disk-latency", type=_non_negative, default=DEFAULT_DISK_LATENCY)
    parser.add_argument("--console-latency", type=_non_negative, default=DEFAULT_CONSOLE_LATENCY)
    parser.add_argument("--cores", type=int, choices=(1, 2), default=1)
    parser.add_argument("--max-ticks", type=_non_negative, metavar="N")
    parser.add_argument("--trace", metavar="FILE", help="per-instruction trace output")
    parser.add_argument("--transcript", metavar="FILE", help="copy of the console output")
    return parser


def parse_config(argv=None) -> SimConfig:
    """Parse command-line flags; usage errors exit with status 2."""
    parser = build_parser()
    args = parser.parse_args(argv)
    config = SimConfig(
        disk_path=args.disk,
        debug=args.debug,
        debug_script=args.debug_script,
        input_script=args.input,
        timer=args.timer,
        disk_latency=args.disk_latency,
        console_latency=args.console_latency,
        cores=args.cores,
        max_ticks=args.max_ticks,
        trace_path=args.trace,
        transcript_path=args.transcript,
    )
    try:
        config.validate()
    except ConfigError as exc:
        parser.error(str(exc))
    return config


def main(argv=None) -> int:
    config = parse_config(argv)
    try:
        report = run(config)
    except ConfigError as exc:
        print(f"xsm: error: {exc}", file=sys.stderr)
        return USAGE_EXIT
    print(f"xsm: {report.message}", file=sys.stderr)
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())
