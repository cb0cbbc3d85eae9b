"""Deterministic kinematic UAV model in the NED frame.

Each primitive action teleports the vehicle to its successor state; there is
no intra-action dynamics. Yaw is compass-style: 0 = North, clockwise-positive.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from typing import Iterable


class Verb(str, enum.Enum):
    TAKEOFF = "takeoff"
    LAND = "land"
    FORWARD = "forward"
    BACKWARD = "backward"
    LEFT = "left"
    RIGHT = "right"
    UP = "up"
    DOWN = "down"
    TURN_CW = "turn_cw"
    TURN_CCW = "turn_ccw"

    @property
    def takes_argument(self) -> bool:
        return self is not Verb.LAND

    @property
    def is_translation(self) -> bool:
        return self in _BODY_VERBS


class BodyDirection(str, enum.Enum):
    FORWARD = "forward"
    BACKWARD = "backward"
    LEFT = "left"
    RIGHT = "right"
    UP = "up"
    DOWN = "down"


_BODY_VERBS = {
    Verb.FORWARD: BodyDirection.FORWARD,
    Verb.BACKWARD: BodyDirection.BACKWARD,
    Verb.LEFT: BodyDirection.LEFT,
    Verb.RIGHT: BodyDirection.RIGHT,
    Verb.UP: BodyDirection.UP,
    Verb.DOWN: BodyDirection.DOWN,
}

# Heading offset of each horizontal body direction relative to the nose.
_HEADING_OFFSET = {
    BodyDirection.FORWARD: 0.0,
    BodyDirection.RIGHT: 90.0,
    BodyDirection.BACKWARD: 180.0,
    BodyDirection.LEFT: 270.0,
}

_QUADRANT_UNIT = {0.0: (1.0, 0.0), 90.0: (0.0, 1.0), 180.0: (-1.0, 0.0), 270.0: (0.0, -1.0)}


@dataclass(frozen=True)
class Command:
    """One parsed DSL command; ``argument`` is None only for ``land``."""

    verb: Verb
    argument: float | None = None
    source_line: int = 1

    def __str__(self) -> str:
        if self.argument is None:
            return self.verb.value
        return f"{self.verb.value}({self.argument:.2f})"


@dataclass(frozen=True)
class UavState:
    north: float = 0.0
    east: float = 0.0
    down: float = 0.0
    yaw: float = 0.0
    airborne: bool = False

    @property
    def position(self) -> tuple[float, float, float]:
        return (self.north, self.east, self.down)

    def as_list(self) -> list[float]:
        return [self.north, self.east, self.down, self.yaw]


INITIAL_STATE = UavState()


@dataclass(frozen=True)
class Transition:
    """Per-action delta ``[d_north, d_east, d_down, d_yaw]``.

    ``d_yaw`` is the commanded rotation, so a 450 degree turn stays 450 here
    even though the resulting state stores 90.
    """

    d_north: float = 0.0
    d_east: float = 0.0
    d_down: float = 0.0
    d_yaw: float = 0.0

    @classmethod
    def from_seq(cls, values: Iterable[float]) -> "Transition":
        dn, de, dd, dy = (float(v) for v in values)
        return cls(dn, de, dd, dy)

    def as_list(self) -> list[float]:
        return [self.d_north, self.d_east, self.d_down, self.d_yaw]

    def __add__(self, other: "Transition") -> "Transition":
        return Transition(
            self.d_north + other.d_north,
            self.d_east + other.d_east,
            self.d_down + other.d_down,
            self.d_yaw + other.d_yaw,
        )

    @property
    def is_zero(self) -> bool:
        return not any(self.as_list())


@dataclass(frozen=True)
class SimConfig:
    max_altitude: float = 120.0
    max_leg_distance: float = 100.0
    position_epsilon: float = 1e-6
    yaw_epsilon: float = 1e-6

    def __post_init__(self) -> None:
        for name in ("max_altitude", "max_leg_distance", "position_epsilon", "yaw_epsilon"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be positive and finite, got {value!r}")
        if self.position_epsilon >= 1 or self.yaw_epsilon >= 1:
            raise ValueError("epsilons must be < 1")


class ActionError(Exception):
    """An action that the vehicle refused; the state is left unchanged."""

    kind = "ActionError"

    def __init__(self, detail: str):
        super().__init__(detail)
        self.detail = detail

    @property
    def message(self) -> str:
        return f"{self.kind}: {self.detail}"

    def __eq__(self, other: object) -> bool:
        return type(other) is type(self) and other.detail == self.detail  # type: ignore[attr-defined]

    def __hash__(self) -> int:
        return hash((self.kind, self.detail))


class NotAirborne(ActionError):
    kind = "NotAirborne"


class AlreadyAirborne(ActionError):
    kind = "AlreadyAirborne"


class AltitudeViolation(ActionError):
    kind = "AltitudeViolation"


class DistanceViolation(ActionError):
    kind = "DistanceViolation"


class NonPositiveArgument(ActionError):
    kind = "NonPositiveArgument"


ACTION_ERRORS: dict[str, type[ActionError]] = {
    cls.kind: cls
    for cls in (NotAirborne, AlreadyAirborne, AltitudeViolation, DistanceViolation, NonPositiveArgument)
}


def normalize_yaw(yaw: float) -> float:
    wrapped = yaw % 360.0
    # tiny negatives wrap to exactly 360.0 in floating point
    return 0.0 if wrapped >= 360.0 else wrapped + 0.0


def body_to_ned(yaw: float, direction: BodyDirection, distance: float) -> tuple[float, float, float]:
    """Map a body-frame move to ``(d_north, d_east, d_down)``."""
    direction = BodyDirection(direction)
    if direction is BodyDirection.UP:
        return (0.0, 0.0, -distance)
    if direction is BodyDirection.DOWN:
        return (0.0, 0.0, distance)
    heading = normalize_yaw(yaw + _HEADING_OFFSET[direction])
    unit = _QUADRANT_UNIT.get(heading)
    if unit is None:
        rad = math.radians(heading)
        unit = (math.cos(rad), math.sin(rad))
    return (distance * unit[0] + 0.0, distance * unit[1] + 0.0, 0.0)


def compose(transitions: Iterable[Transition]) -> Transition:
    total = Transition()
    for t in transitions:
        total = total + t
    return total


def apply(state: UavState, action: Command, config: SimConfig | None = None) -> tuple[UavState, Transition]:
    """Return the successor state and the exact delta, or raise ActionError."""
    config = config or SimConfig()
    verb = action.verb
    arg = action.argument

    if verb.takes_argument:
        if arg is None or not math.isfinite(arg) or arg <= 0:
            raise NonPositiveArgument(f"{verb.value} requires a positive finite argument, got {arg!r}")

    if verb is Verb.TAKEOFF:
        if state.airborne:
            raise AlreadyAirborne("takeoff requested while already airborne")
        if arg > config.max_altitude:
            raise AltitudeViolation(f"takeoff altitude {arg:.2f} m exceeds limit {config.max_altitude:.2f} m")
        new = replace(state, down=-arg, airborne=True)
        return new, Transition(d_down=new.down - state.down)

    if not state.airborne:
        raise NotAirborne(f"cannot {verb.value} while landed")

    if verb is Verb.LAND:
        new = replace(state, down=0.0, airborne=False)
        return new, Transition(d_down=0.0 - state.down)

    if verb in (Verb.TURN_CW, Verb.TURN_CCW):
        d_yaw = arg if verb is Verb.TURN_CW else -arg
        new = replace(state, yaw=normalize_yaw(state.yaw + d_yaw))
        return new, Transition(d_yaw=d_yaw)

    if arg > config.max_leg_distance:
        raise DistanceViolation(f"leg of {arg:.2f} m exceeds limit {config.max_leg_distance:.2f} m")
    dn, de, dd = body_to_ned(state.yaw, _BODY_VERBS[verb], arg)
    new_down = state.down + dd
    if new_down > 0:
        raise AltitudeViolation(f"{verb.value}({arg:.2f}) would descend below ground level")
    if -new_down > config.max_altitude:
        raise AltitudeViolation(f"{verb.value}({arg:.2f}) would exceed altitude limit {config.max_altitude:.2f} m")
    new = replace(state, north=state.north + dn, east=state.east + de, down=new_down)
    return new, Transition(dn, de, dd, 0.0)


class Simulator:
    """Mutable wrapper around :func:`apply`; one instance per run."""

    def __init__(self, config: SimConfig | None = None, initial: UavState = INITIAL_STATE):
        self.config = config or SimConfig()
        self.state = initial

    def step(self, action: Command) -> Transition:
        self.state, transition = apply(self.state, action, self.config)
        return transition
