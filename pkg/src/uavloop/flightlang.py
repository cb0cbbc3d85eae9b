"""The flight-command language: parsing, pretty-printing and execution.

Grammar, one command per line::

    line    := ws [ verb ws [ "(" ws number ws ")" ] ws ] [ "#" comment ]
    verb    := takeoff | land | forward | backward | left | right
             | up | down | turn_cw | turn_ccw          (case-insensitive)
    number  := [+-] digits [ "." digits ]

``land`` takes no argument (``land()`` is accepted); every other verb takes
exactly one positive number.
"""

from __future__ import annotations

import enum
import math
import re
from dataclasses import dataclass, field
from decimal import Decimal

from uavloop.sim import (
    INITIAL_STATE,
    ActionError,
    Command,
    SimConfig,
    Transition,
    UavState,
    Verb,
    apply,
)

__all__ = [
    "Command",
    "ErrorKind",
    "ExecutionTrace",
    "ExtractionError",
    "FlightScript",
    "ParseError",
    "TraceStep",
    "Verb",
    "extract_script",
    "format_command",
    "format_script",
    "parse",
    "run",
]

_WS = " \t\r\f\v"
_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_NUMBER = re.compile(r"[+-]?[0-9]+(?:\.[0-9]+)?")
_VERBS = {v.value: v for v in Verb}


class ErrorKind(str, enum.Enum):
    UNKNOWN_VERB = "UnknownVerb"
    BAD_ARITY = "BadArity"
    BAD_NUMBER = "BadNumber"
    NON_POSITIVE = "NonPositive"
    EMPTY_SCRIPT = "EmptyScript"
    TRAILING_GARBAGE = "TrailingGarbage"


class ParseError(Exception):
    def __init__(self, line: int, column: int, kind: ErrorKind, message: str):
        super().__init__(f"line {line}, column {column}: {kind.value}: {message}")
        self.line = line
        self.column = column
        self.kind = kind
        self.message = message


class ExtractionError(Exception):
    pass


@dataclass(frozen=True)
class FlightScript:
    commands: tuple[Command, ...]
    source_text: str = ""

    def __len__(self) -> int:
        return len(self.commands)

    def __iter__(self):
        return iter(self.commands)


def _skip_ws(text: str, pos: int) -> int:
    while pos < len(text) and text[pos] in _WS:
        pos += 1
    return pos


def _parse_line(line: str, lineno: int) -> Command | None:
    hash_at = line.find("#")
    body = line if hash_at < 0 else line[:hash_at]
    pos = _skip_ws(body, 0)
    if pos == len(body):
        return None

    m = _IDENT.match(body, pos)
    if m is None:
        raise ParseError(lineno, pos + 1, ErrorKind.UNKNOWN_VERB, f"expected a command, found {body[pos]!r}")
    verb = _VERBS.get(m.group().lower())
    if verb is None:
        raise ParseError(lineno, pos + 1, ErrorKind.UNKNOWN_VERB, f"unknown command {m.group()!r}")
    verb_col = pos + 1
    pos = _skip_ws(body, m.end())

    argument: float | None = None
    arg_col = pos + 1
    if pos < len(body) and body[pos] == "(":
        pos = _skip_ws(body, pos + 1)
        arg_col = pos + 1
        if pos < len(body) and body[pos] == ")":
            pos += 1
        else:
            n = _NUMBER.match(body, pos)
            if n is None or (n.end() < len(body) and (body[n.end()].isalnum() or body[n.end()] in "._")):
                raise ParseError(lineno, arg_col, ErrorKind.BAD_NUMBER, "malformed number")
            argument = float(n.group())
            if not math.isfinite(argument):
                raise ParseError(lineno, arg_col, ErrorKind.BAD_NUMBER, "number out of range")
            pos = _skip_ws(body, n.end())
            if pos < len(body) and body[pos] == ",":
                raise ParseError(lineno, pos + 1, ErrorKind.BAD_ARITY, f"{verb.value} takes at most one argument")
            if pos >= len(body) or body[pos] != ")":
                raise ParseError(lineno, pos + 1, ErrorKind.TRAILING_GARBAGE, "expected ')'")
            pos += 1
        pos = _skip_ws(body, pos)

    if pos < len(body):
        raise ParseError(lineno, pos + 1, ErrorKind.TRAILING_GARBAGE, f"unexpected {body[pos]!r} after command")

    if verb.takes_argument and argument is None:
        raise ParseError(lineno, verb_col, ErrorKind.BAD_ARITY, f"{verb.value} requires one argument")
    if not verb.takes_argument and argument is not None:
        raise ParseError(lineno, arg_col, ErrorKind.BAD_ARITY, "land takes no argument")
    if argument is not None and argument <= 0:
        raise ParseError(lineno, arg_col, ErrorKind.NON_POSITIVE, f"{verb.value} argument must be positive")
    return Command(verb, argument, lineno)


def parse(source: str | bytes) -> FlightScript:
    """Parse a script, raising the first ParseError encountered."""
    if isinstance(source, (bytes, bytearray)):
        source = bytes(source).decode("utf-8", errors="replace")
    commands = []
    for lineno, line in enumerate(source.split("\n"), start=1):
        cmd = _parse_line(line, lineno)
        if cmd is not None:
            commands.append(cmd)
    if not commands:
        raise ParseError(1, 1, ErrorKind.EMPTY_SCRIPT, "script contains no commands")
    return FlightScript(tuple(commands), source)


def _format_number(value: float) -> str:
    text = format(Decimal(repr(value)), "f")
    if "." in text:
        text = text.rstrip("0").rstrip(".")
    return text


def format_command(cmd: Command) -> str:
    if cmd.argument is None:
        return cmd.verb.value
    return f"{cmd.verb.value}({_format_number(cmd.argument)})"


def format_script(script: FlightScript | list[Command] | tuple[Command, ...]) -> str:
    commands = script.commands if isinstance(script, FlightScript) else script
    return "\n".join(format_command(c) for c in commands)


@dataclass(frozen=True)
class TraceStep:
    command: Command
    state_before: UavState
    state_after: UavState
    transition: Transition | None = None
    error: ActionError | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


@dataclass
class ExecutionTrace:
    initial_state: UavState = INITIAL_STATE
    steps: list[TraceStep] = field(default_factory=list)

    @property
    def final_state(self) -> UavState:
        return self.steps[-1].state_after if self.steps else self.initial_state

    def executed_transitions(self) -> list[Transition]:
        """Transitions of the actions that actually ran (errored steps are skipped)."""
        return [s.transition for s in self.steps if s.transition is not None]

    def __len__(self) -> int:
        return len(self.steps)


def run(script: FlightScript, config: SimConfig | None = None) -> ExecutionTrace:
    """Execute on a fresh vehicle at the origin; failed actions are no-ops."""
    config = config or SimConfig()
    trace = ExecutionTrace(INITIAL_STATE)
    state = INITIAL_STATE
    for cmd in script.commands:
        try:
            new_state, transition = apply(state, cmd, config)
        except ActionError as exc:
            trace.steps.append(TraceStep(cmd, state, state, error=exc))
            continue
        trace.steps.append(TraceStep(cmd, state, new_state, transition=transition))
        state = new_state
    return trace


_FENCE = re.compile(r"^[ \t]*```")
_COMMAND_SHAPE = re.compile(r"^[ \t]*(?:[A-Za-z_][A-Za-z0-9_]*[ \t]*(?:\([^()\n]*\))?[ \t]*)?(?:#.*)?$")


def extract_script(llm_response: str) -> str:
    """Pull the script text out of a free-form model reply."""
    lines = llm_response.replace("\r\n", "\n").split("\n")
    for i, line in enumerate(lines):
        if _FENCE.match(line):
            body = []
            for inner in lines[i + 1:]:
                if _FENCE.match(inner):
                    break
                body.append(inner)
            text = "\n".join(body).strip("\n")
            if not text.strip():
                raise ExtractionError("fenced code block is empty")
            return text

    kept = [line for line in lines if _COMMAND_SHAPE.match(line)]
    if not any(line.split("#", 1)[0].strip() for line in kept):
        raise ExtractionError("no flight commands found in response")
    return "\n".join(kept).strip("\n")
