"""Task corpus records and their JSON file format.

A corpus file is a JSON array of task objects::

    [{"id": "adv-01", "tier": "advanced", "description": "...",
      "ground_truth": [[0, 0, -5, 0], [5, 0, 0, 0], ...],
      "max_actions": 20}]

``ground_truth`` rows are ``[d_north, d_east, d_down, d_yaw]``.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Literal, Sequence

from uavloop.flightlang import FlightScript, format_script
from uavloop.sim import Command, Transition, Verb, compose

TIER_BOUNDS = {"basic": (1, 4), "advanced": (6, 19)}


class CorpusError(ValueError):
    pass


@dataclass(frozen=True)
class TaskSpec:
    id: str
    tier: Literal["basic", "advanced"]
    description: str
    ground_truth: tuple[Transition, ...]
    max_actions: int

    def __post_init__(self) -> None:
        if self.tier not in TIER_BOUNDS:
            raise CorpusError(f"{self.id}: unknown tier {self.tier!r}")
        if not self.ground_truth:
            raise CorpusError(f"{self.id}: ground truth is empty")
        lo, hi = TIER_BOUNDS[self.tier]
        if not lo <= len(self.ground_truth) <= hi:
            raise CorpusError(f"{self.id}: {self.tier} task has {len(self.ground_truth)} transitions, expected {lo}-{hi}")
        if not self.description.strip():
            raise CorpusError(f"{self.id}: empty description")
        if self.max_actions < len(self.ground_truth):
            raise CorpusError(f"{self.id}: max_actions below ground-truth length")

    @property
    def goal(self) -> Transition:
        """Cumulative displacement from the start state."""
        return compose(self.ground_truth)

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "tier": self.tier,
            "description": self.description,
            "ground_truth": [t.as_list() for t in self.ground_truth],
            "max_actions": self.max_actions,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TaskSpec":
        try:
            rows = data["ground_truth"]
            gt = []
            for row in rows:
                if len(row) != 4 or not all(isinstance(v, (int, float)) and math.isfinite(v) for v in row):
                    raise CorpusError(f"{data.get('id')}: ground-truth rows must be 4 finite numbers")
                gt.append(Transition.from_seq(row))
            return cls(
                id=str(data["id"]),
                tier=data["tier"],
                description=data["description"],
                ground_truth=tuple(gt),
                max_actions=int(data.get("max_actions", len(gt))),
            )
        except (KeyError, TypeError) as exc:
            raise CorpusError(f"malformed task record: {exc}") from exc


def load_corpus(path: str | os.PathLike) -> list[TaskSpec]:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise CorpusError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(data, list):
        raise CorpusError(f"{path}: expected a JSON array of tasks")
    tasks = [TaskSpec.from_dict(item) for item in data]
    seen = set()
    for t in tasks:
        if t.id in seen:
            raise CorpusError(f"duplicate task id {t.id!r}")
        seen.add(t.id)
    return tasks


def dump_corpus(tasks: Sequence[TaskSpec]) -> str:
    return json.dumps([t.to_dict() for t in tasks], indent=2) + "\n"


def default_corpus_path() -> Path:
    return Path(str(resources.files("uavloop") / "data" / "corpus.json"))


def default_corpus(tier: str | None = None) -> list[TaskSpec]:
    tasks = load_corpus(default_corpus_path())
    return [t for t in tasks if tier is None or t.tier == tier]


_DIRECTION_BY_OFFSET = {0: Verb.FORWARD, 90: Verb.RIGHT, 180: Verb.BACKWARD, 270: Verb.LEFT}


def ground_truth_script(ground_truth: Sequence[Transition], *, tol: float = 1e-6) -> FlightScript:
    """Build a DSL script whose execution reproduces ``ground_truth``.

    Each transition must be a single primitive: a rotation, a vertical move,
    or a horizontal move along one of the four body axes at the current yaw.
    """
    commands: list[Command] = []
    yaw = 0.0
    down = 0.0
    airborne = False
    for i, t in enumerate(ground_truth, start=1):
        horizontal = math.hypot(t.d_north, t.d_east)
        if abs(t.d_yaw) > tol:
            if horizontal > tol or abs(t.d_down) > tol:
                raise CorpusError(f"transition {i} mixes rotation and translation")
            verb = Verb.TURN_CW if t.d_yaw > 0 else Verb.TURN_CCW
            commands.append(Command(verb, abs(t.d_yaw), i))
            yaw = (yaw + t.d_yaw) % 360.0
        elif horizontal > tol:
            if abs(t.d_down) > tol:
                raise CorpusError(f"transition {i} mixes horizontal and vertical motion")
            bearing = math.degrees(math.atan2(t.d_east, t.d_north))
            offset = round((bearing - yaw) % 360.0, 6) % 360.0
            if offset not in _DIRECTION_BY_OFFSET:
                raise CorpusError(f"transition {i} is not along a body axis (offset {offset:.3f} deg)")
            commands.append(Command(_DIRECTION_BY_OFFSET[offset], horizontal, i))
        elif abs(t.d_down) > tol:
            new_down = down + t.d_down
            if not airborne:
                commands.append(Command(Verb.TAKEOFF, -t.d_down, i))
                airborne = True
            elif abs(new_down) <= tol:
                commands.append(Command(Verb.LAND, None, i))
                airborne = False
                new_down = 0.0
            elif t.d_down < 0:
                commands.append(Command(Verb.UP, -t.d_down, i))
            else:
                commands.append(Command(Verb.DOWN, t.d_down, i))
            down = new_down
        else:
            raise CorpusError(f"transition {i} is empty")
    script = tuple(commands)
    return FlightScript(script, format_script(script))
