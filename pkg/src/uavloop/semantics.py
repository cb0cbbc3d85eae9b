"""Turn execution traces into step-wise natural-language trajectory text.

Every step becomes one ``Action k: ...`` line. The wording is a fixed
template so the text can be parsed back (:func:`parse_observation`), which is
how the transform is tested.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from uavloop.flightlang import ExecutionTrace, TraceStep
from uavloop.sim import ActionError, Command, Transition

CARDINALS = {0.0: "North", 90.0: "East", 180.0: "South", 270.0: "West"}
NO_CHANGE = "No change in state."


@dataclass(frozen=True)
class FormatConfig:
    decimals: int = 2
    position_epsilon: float = 1e-6
    yaw_epsilon: float = 1e-6


DEFAULT_FORMAT = FormatConfig()


@dataclass(frozen=True)
class ObservationStep:
    index: int
    text: str
    raw: Transition | ActionError
    position_after: tuple[float, float, float]


@dataclass(frozen=True)
class TrajectoryObservation:
    steps: tuple[ObservationStep, ...]

    @property
    def rendered(self) -> str:
        return render_steps(self.steps)

    def __str__(self) -> str:
        return self.rendered


def render_steps(steps) -> str:
    return "\n".join(f"Action {s.index}: {s.text}" for s in steps)


def _num(value: float, fmt: FormatConfig) -> str:
    text = f"{value:.{fmt.decimals}f}"
    # keep "-0.00" out of the text
    if float(text) == 0:
        text = f"{0.0:.{fmt.decimals}f}"
    return text


def facing(yaw: float, fmt: FormatConfig = DEFAULT_FORMAT) -> str:
    for angle, name in CARDINALS.items():
        diff = abs((yaw - angle + 180.0) % 360.0 - 180.0)
        if diff <= fmt.yaw_epsilon:
            return name
    return f"heading {_num(yaw, fmt)} degrees"


def command_text(cmd: Command, fmt: FormatConfig = DEFAULT_FORMAT) -> str:
    if cmd.argument is None:
        return cmd.verb.value
    return f"{cmd.verb.value}({_num(cmd.argument, fmt)})"


def describe_step(step: TraceStep, fmt: FormatConfig = DEFAULT_FORMAT) -> str:
    if step.error is not None:
        return f"Error in executing {command_text(step.command, fmt)} with error message {step.error.message}."
    return describe_transition(step.transition, step.state_after.yaw, step.state_after.position, fmt)


def describe_transition(
    delta: Transition,
    yaw_after: float,
    position_after: tuple[float, float, float],
    fmt: FormatConfig = DEFAULT_FORMAT,
) -> str:
    parts = []
    face = facing(yaw_after, fmt)
    if abs(delta.d_yaw) > fmt.yaw_epsilon:
        sense = "clockwise" if delta.d_yaw > 0 else "counter-clockwise"
        parts.append(f"Rotate {_num(abs(delta.d_yaw), fmt)} degrees {sense} in Yaw.")
        parts.append(f"The UAV now faces {face}.")

    moved = False
    for value, positive, negative in (
        (delta.d_north, "North", "South"),
        (delta.d_east, "East", "West"),
        (-delta.d_down, "Up", "Down"),
    ):
        if abs(value) > fmt.position_epsilon:
            word = positive if value > 0 else negative
            parts.append(f"Move {_num(abs(value), fmt)} meters {word} while facing {face}.")
            moved = True
    if moved:
        n, e, d = (_num(v, fmt) for v in position_after)
        parts.append(f"The UAV moves to [{n}, {e}, {d}].")
    return " ".join(parts) if parts else NO_CHANGE


def transform(trace: ExecutionTrace, fmt: FormatConfig = DEFAULT_FORMAT) -> TrajectoryObservation:
    steps = []
    for k, step in enumerate(trace.steps, start=1):
        raw = step.error if step.error is not None else step.transition
        steps.append(ObservationStep(k, describe_step(step, fmt), raw, step.state_after.position))
    return TrajectoryObservation(tuple(steps))


def render_numeric(trace: ExecutionTrace, fmt: FormatConfig = DEFAULT_FORMAT) -> str:
    """Raw state tuples, one line per action, for the numeric-observation baseline."""
    lines = []
    for k, step in enumerate(trace.steps, start=1):
        if step.error is not None:
            lines.append(f"Action {k}: error {step.error.kind}")
        else:
            values = ", ".join(_num(v, fmt) for v in step.state_after.as_list())
            lines.append(f"Action {k}: state [{values}]")
    return "\n".join(lines)


class ObservationParseError(ValueError):
    pass


@dataclass(frozen=True)
class RecoveredStep:
    index: int
    transition: Transition
    errored: bool = False


_NUM = r"(\d+\.\d+)"
_SIGNED = r"(-?\d+\.\d+)"
_FACE = r"(?:North|East|South|West|heading -?\d+\.\d+ degrees)"
_LINE = re.compile(r"^Action (\d+): (.+)$")
_ERROR = re.compile(r"^Error in executing .+ with error message .+\.$")
_ROTATE = re.compile(rf"Rotate {_NUM} degrees (clockwise|counter-clockwise) in Yaw\. The UAV now faces {_FACE}\.")
_MOVE = re.compile(rf"Move {_NUM} meters (North|South|East|West|Up|Down) while facing {_FACE}\.")
_POSITION = re.compile(rf"The UAV moves to \[{_SIGNED}, {_SIGNED}, {_SIGNED}\]\.")

_AXIS = {"North": (0, 1.0), "South": (0, -1.0), "East": (1, 1.0), "West": (1, -1.0), "Up": (2, -1.0), "Down": (2, 1.0)}


def _parse_sentences(text: str) -> Transition:
    if text == NO_CHANGE:
        return Transition()
    delta = [0.0, 0.0, 0.0, 0.0]
    pos = 0
    m = _ROTATE.match(text, pos)
    if m:
        magnitude = float(m.group(1))
        delta[3] = magnitude if m.group(2) == "clockwise" else -magnitude
        pos = m.end()
    seen_axes = set()
    while pos < len(text):
        if text[pos] == " ":
            pos += 1
        m = _MOVE.match(text, pos)
        if not m:
            break
        axis, sign = _AXIS[m.group(2)]
        if axis in seen_axes:
            raise ObservationParseError(f"axis repeated in {text!r}")
        seen_axes.add(axis)
        delta[axis] = sign * float(m.group(1))
        pos = m.end()
    if seen_axes:
        m = _POSITION.match(text, pos)
        if not m:
            raise ObservationParseError(f"missing position sentence in {text!r}")
        pos = m.end()
    if pos != len(text) or (not seen_axes and delta[3] == 0.0):
        raise ObservationParseError(f"unrecognized sentence in {text!r}")
    return Transition.from_seq(delta)


def parse_observation(rendered: str) -> list[RecoveredStep]:
    """Invert :func:`transform`; error steps come back as flagged zero deltas."""
    steps: list[RecoveredStep] = []
    if not rendered:
        return steps
    for expected, line in enumerate(rendered.split("\n"), start=1):
        m = _LINE.match(line)
        if not m or int(m.group(1)) != expected:
            raise ObservationParseError(f"bad action line {expected}: {line!r}")
        body = m.group(2)
        if _ERROR.match(body):
            steps.append(RecoveredStep(expected, Transition(), errored=True))
        else:
            steps.append(RecoveredStep(expected, _parse_sentences(body)))
    return steps
