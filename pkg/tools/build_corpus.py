"""Regenerate src/uavloop/data/corpus.json and the shipped scripted sessions.

Each task is authored as a description plus a reference script; the ground
truth is whatever the simulator records when that script runs.

    python tools/build_corpus.py
"""

from __future__ import annotations

import json
from pathlib import Path

from uavloop.evalharness.corpus import TaskSpec, dump_corpus
from uavloop.flightlang import parse, run

ROOT = Path(__file__).resolve().parents[1]
DATA = ROOT / "src" / "uavloop" / "data"

BASIC = [
    ("Take off to an altitude of 3 meters.", "takeoff(3)"),
    ("Take off to 5 meters.", "takeoff(5)"),
    ("Take off to 10 meters, then land.", "takeoff(10)\nland"),
    ("Take off and fly 5 meters forward.", "takeoff(2)\nforward(5)"),
    ("Take off and fly 3 meters backward.", "takeoff(2)\nbackward(3)"),
    ("Take off and fly 4 meters to the right.", "takeoff(2)\nright(4)"),
    ("Take off and fly 6 meters to the left.", "takeoff(2)\nleft(6)"),
    ("Take off to 4 meters and climb another 2 meters.", "takeoff(4)\nup(2)"),
    ("Take off to 8 meters and descend 3 meters.", "takeoff(8)\ndown(3)"),
    ("Take off and rotate 90 degrees clockwise.", "takeoff(2)\nturn_cw(90)"),
    ("Take off and rotate 90 degrees counter-clockwise.", "takeoff(2)\nturn_ccw(90)"),
    ("Take off and turn 180 degrees clockwise so the drone faces South.", "takeoff(2)\nturn_cw(180)"),
    ("Turn 90° clockwise, then fly 4 meters left in the drone's body frame", "takeoff(2)\nturn_cw(90)\nleft(4)"),
    ("Take off and fly 1 meter forward.", "takeoff(2)\nforward(1)"),
    ("Take off, fly 7 meters forward, then land.", "takeoff(2)\nforward(7)\nland"),
    (
        "Take off to 3 meters, turn 45 degrees clockwise and fly 10 meters forward.",
        "takeoff(3)\nturn_cw(45)\nforward(10)",
    ),
    ("Take off and fly 5 meters North without turning.", "takeoff(2)\nforward(5)"),
    ("Take off and fly 4 meters East without changing the heading.", "takeoff(2)\nright(4)"),
    ("Take off and rotate 270 degrees clockwise.", "takeoff(2)\nturn_cw(270)"),
    ("Take off, climb 3 meters, then fly 2 meters forward.", "takeoff(2)\nup(3)\nforward(2)"),
    ("Take off to 6 meters, fly 5 meters backward, then land.", "takeoff(6)\nbackward(5)\nland"),
    ("Take off, turn 90 degrees counter-clockwise, then fly 3 meters forward.", "takeoff(2)\nturn_ccw(90)\nforward(3)"),
    ("Take off to 5 meters, rotate 30 degrees clockwise, then fly forward 2 meters.", "takeoff(5)\nturn_cw(30)\nforward(2)"),
    ("Take off and fly 2.5 meters to the right.", "takeoff(2)\nright(2.5)"),
    ("Take off to 1.5 meters.", "takeoff(1.5)"),
    (
        "Take off to 4 meters, turn 180 degrees clockwise, fly 4 meters forward, and land.",
        "takeoff(4)\nturn_cw(180)\nforward(4)\nland",
    ),
    ("Take off and fly 12 meters forward.", "takeoff(2)\nforward(12)"),
    ("Take off to 20 meters and descend 10 meters.", "takeoff(20)\ndown(10)"),
    ("Take off, fly 3 meters left, then 3 meters right.", "takeoff(2)\nleft(3)\nright(3)"),
    ("Take off, fly 5 meters forward, then 5 meters backward.", "takeoff(2)\nforward(5)\nbackward(5)"),
    ("Take off and rotate 60 degrees counter-clockwise.", "takeoff(2)\nturn_ccw(60)"),
    ("Take off to 3 meters, then fly up 2 meters and down 1 meter.", "takeoff(3)\nup(2)\ndown(1)"),
    ("Take off, fly 8 meters forward, then turn 90 degrees clockwise.", "takeoff(2)\nforward(8)\nturn_cw(90)"),
    ("Take off, turn 90 degrees clockwise, and fly 6 meters forward.", "takeoff(2)\nturn_cw(90)\nforward(6)"),
    ("Take off to 2 meters and land immediately.", "takeoff(2)\nland"),
    (
        "Take off, turn 45 degrees counter-clockwise, then fly 5 meters backward.",
        "takeoff(2)\nturn_ccw(45)\nbackward(5)",
    ),
    ("Take off, fly 4 meters to the right, then land.", "takeoff(2)\nright(4)\nland"),
    ("Take off to 7 meters and rotate 120 degrees clockwise.", "takeoff(7)\nturn_cw(120)"),
    ("Take off and fly 9 meters to the left.", "takeoff(2)\nleft(9)"),
    ("Take off to 5 meters and spin a full 360 degrees clockwise.", "takeoff(5)\nturn_cw(360)"),
    ("Take off, climb 5 meters, then land.", "takeoff(2)\nup(5)\nland"),
    ("Take off, fly 2 meters forward and then 2 meters to the right.", "takeoff(2)\nforward(2)\nright(2)"),
    (
        "Take off to 6 meters, turn 90 degrees counter-clockwise and fly 3 meters to the right.",
        "takeoff(6)\nturn_ccw(90)\nright(3)",
    ),
    ("Take off and rotate 15 degrees clockwise.", "takeoff(2)\nturn_cw(15)"),
]

SQUARE_TASK = (
    "Take off to 5 meters and examine a 6-meter square area: fly its perimeter clockwise "
    "starting toward the North, always facing the flying direction, and finish facing North "
    "at the starting corner. Then climb 2 meters, fly 3 meters forward and 3 meters to the "
    "right to hover above the center of the square, and land."
)
SQUARE_SCRIPT = """takeoff(5)
forward(6)
turn_cw(90)
forward(6)
turn_cw(90)
forward(6)
turn_cw(90)
forward(6)
turn_cw(90)
up(2)
forward(3)
right(3)
land"""
# action 12 goes left (West) instead of right (East)
SQUARE_WRONG_SCRIPT = SQUARE_SCRIPT.replace("right(3)", "left(3)")


def _repeat(block: str, n: int) -> str:
    return "\n".join([block] * n)


ADVANCED = [
    (
        "Take off and fly up 5 meters. You should fly in a square pattern with 5-meter sides by moving "
        "forward, right, backward, and left. Make sure the drone is oriented to the flying direction.",
        "takeoff(5)\nforward(5)\nturn_cw(90)\nforward(5)\nturn_cw(90)\nforward(5)\nturn_cw(90)\nforward(5)",
    ),
    (SQUARE_TASK, SQUARE_SCRIPT),
    (
        "Take off to 4 meters. Fly a 6-meter square counter-clockwise, starting toward the North and "
        "always facing the flying direction. Return to the start facing North, then land.",
        "takeoff(4)\nforward(6)\nturn_ccw(90)\nforward(6)\nturn_ccw(90)\nforward(6)\nturn_ccw(90)\nforward(6)\nturn_ccw(90)\nland",
    ),
    (
        "Take off to 3 meters. Without rotating, trace an 8 by 4 meter rectangle: 8 meters forward, "
        "4 meters right, 8 meters backward, 4 meters left. Then land.",
        "takeoff(3)\nforward(8)\nright(4)\nbackward(8)\nleft(4)\nland",
    ),
    (
        "Take off to 6 meters and survey a field with a lawnmower pattern without rotating: four "
        "10-meter passes alternating forward and backward, shifting 3 meters to the right between "
        "passes. Land after the last pass.",
        "takeoff(6)\nforward(10)\nright(3)\nbackward(10)\nright(3)\nforward(10)\nright(3)\nbackward(10)\nland",
    ),
    (
        "Take off to 2 meters and climb a staircase: repeat 'fly 2 meters forward, then climb 2 meters' "
        "three times, and finish with one more 2-meter forward step.",
        "takeoff(2)\nforward(2)\nup(2)\nforward(2)\nup(2)\nforward(2)\nup(2)\nforward(2)",
    ),
    (
        "Take off to 4 meters and fly an equilateral triangle with 6-meter sides, facing the flying "
        "direction: fly forward, then turn 120 degrees clockwise after every side, including the last.",
        "takeoff(4)\nforward(6)\nturn_cw(120)\nforward(6)\nturn_cw(120)\nforward(6)\nturn_cw(120)",
    ),
    (
        "Take off to 5 meters and fly a regular hexagon with 3-meter sides: six times, fly 3 meters "
        "forward and then turn 60 degrees clockwise.",
        "takeoff(5)\n" + _repeat("forward(3)\nturn_cw(60)", 6),
    ),
    (
        "Take off to 3 meters. Turn 45 degrees clockwise and fly a zigzag of four 4-meter legs forward, "
        "alternating the heading by turning 90 degrees counter-clockwise before the second leg, 90 degrees "
        "clockwise before the third, and 90 degrees counter-clockwise before the fourth.",
        "takeoff(3)\nturn_cw(45)\nforward(4)\nturn_ccw(90)\nforward(4)\nturn_cw(90)\nforward(4)\nturn_ccw(90)\nforward(4)",
    ),
    (
        "Take off to 2 meters and scan a building facade in front of you without rotating: fly 5 meters "
        "right, climb 3 meters, fly 5 meters left, climb 3 meters, fly 5 meters right, climb 3 meters, "
        "fly 5 meters left, then land.",
        "takeoff(2)\nright(5)\nup(3)\nleft(5)\nup(3)\nright(5)\nup(3)\nleft(5)\nland",
    ),
    (
        "Take off to 10 meters and patrol: fly 20 meters forward, turn around with a 180-degree clockwise "
        "turn, fly 20 meters forward back to the start, turn 180 degrees clockwise again, and land.",
        "takeoff(10)\nforward(20)\nturn_cw(180)\nforward(20)\nturn_cw(180)\nland",
    ),
    (
        "Take off to 8 meters to deliver a package: fly 15 meters forward, turn 90 degrees clockwise, "
        "fly 10 meters forward, descend 6 meters, and land.",
        "takeoff(8)\nforward(15)\nturn_cw(90)\nforward(10)\ndown(6)\nland",
    ),
    (
        "Take off to 4 meters and inspect a cross pattern from the center without rotating: fly 5 meters "
        "forward and back, 5 meters right and back, 5 meters backward and back, then 5 meters left and back.",
        "takeoff(4)\nforward(5)\nbackward(5)\nright(5)\nleft(5)\nbackward(5)\nforward(5)\nleft(5)\nright(5)",
    ),
    (
        "Take off to 5 meters and fly a regular pentagon with 4-meter sides: five times, fly 4 meters "
        "forward and then turn 72 degrees clockwise.",
        "takeoff(5)\n" + _repeat("forward(4)\nturn_cw(72)", 5),
    ),
    (
        "Take off to 5 meters and fly a square spiral facing the flying direction: legs of 2, 2, 4, 4, 6 "
        "and 6 meters, turning 90 degrees clockwise between consecutive legs.",
        "takeoff(5)\nforward(2)\nturn_cw(90)\nforward(2)\nturn_cw(90)\nforward(4)\nturn_cw(90)\nforward(4)\n"
        "turn_cw(90)\nforward(6)\nturn_cw(90)\nforward(6)",
    ),
    (
        "Take off to 3 meters and trace a 4-meter square without rotating (forward, right, backward, left). "
        "Climb 3 meters and trace the same square again, then land.",
        "takeoff(3)\nforward(4)\nright(4)\nbackward(4)\nleft(4)\nup(3)\nforward(4)\nright(4)\nbackward(4)\nleft(4)\nland",
    ),
    (
        "Take off to 2 meters and inspect a tower: three times, climb 4 meters and then spin a full "
        "360 degrees clockwise to scan. Land at the end.",
        "takeoff(2)\n" + _repeat("up(4)\nturn_cw(360)", 3) + "\nland",
    ),
    (
        "Take off to 5 meters. Fly a 3-meter square clockwise facing the flying direction (four times: "
        "3 meters forward, turn 90 degrees clockwise). Climb 2 meters and fly the same square "
        "counter-clockwise (four times: 3 meters forward, turn 90 degrees counter-clockwise). Then land.",
        "takeoff(5)\n" + _repeat("forward(3)\nturn_cw(90)", 4) + "\nup(2)\n" + _repeat("forward(3)\nturn_ccw(90)", 4) + "\nland",
    ),
    (
        "Take off to 4 meters and fly a figure of two joined 4-meter squares facing the flying direction: "
        "fly 4 meters forward, turn 90 degrees clockwise, 4 forward, turn 90 clockwise, 4 forward, turn 90 "
        "clockwise, 8 forward, then turn 90 counter-clockwise, 4 forward, turn 90 counter-clockwise, "
        "4 forward, turn 90 counter-clockwise, 4 forward.",
        "takeoff(4)\nforward(4)\nturn_cw(90)\nforward(4)\nturn_cw(90)\nforward(4)\nturn_cw(90)\nforward(8)\n"
        "turn_ccw(90)\nforward(4)\nturn_ccw(90)\nforward(4)\nturn_ccw(90)\nforward(4)",
    ),
    (
        "Search and rescue: take off to 15 meters, turn 90 degrees clockwise and fly 10 meters forward. "
        "Then, facing the flying direction, search a box by turning 90 degrees counter-clockwise before "
        "each leg: legs of 10, 20, 10 and 10 meters. Finally descend 10 meters and land.",
        "takeoff(15)\nturn_cw(90)\nforward(10)\nturn_ccw(90)\nforward(10)\nturn_ccw(90)\nforward(20)\n"
        "turn_ccw(90)\nforward(10)\nturn_ccw(90)\nforward(10)\ndown(10)\nland",
    ),
]

def build_tasks() -> tuple[list[TaskSpec], dict[str, str]]:
    tasks, scripts = [], {}
    for tier, items, prefix in (("basic", BASIC, "basic"), ("advanced", ADVANCED, "adv")):
        for i, (description, source) in enumerate(items, start=1):
            trace = run(parse(source))
            errors = [s for s in trace.steps if s.error is not None]
            assert not errors, (description, errors)
            gt = tuple(trace.executed_transitions())
            task_id = f"{prefix}-{i:02d}"
            tasks.append(TaskSpec(task_id, tier, description, gt, max_actions=max(len(gt) + 6, 25 if tier == "advanced" else 10)))
            scripts[task_id] = source
    assert sum(t.tier == "basic" for t in tasks) == 44
    assert sum(t.tier == "advanced" for t in tasks) == 20
    return tasks, scripts


def fence(script: str) -> str:
    return f"```\n{script}\n```"


def main() -> None:
    tasks, scripts = build_tasks()
    (DATA / "corpus.json").write_text(dump_corpus(tasks), encoding="utf-8")

    sessions = DATA / "sessions"
    sessions.mkdir(exist_ok=True)

    square_session = {
        "task": SQUARE_TASK,
        "entries": [
            {"agent": "generator", "content": "Plan: square perimeter, then move to the center.\n" + fence(SQUARE_WRONG_SCRIPT)},
            {
                "agent": "evaluator",
                "content": "VERDICT: NO\nAction 12 flies West instead of East. To reach the center of the "
                "square from the starting corner the UAV must move 3 meters to the right (East) while facing North.",
            },
            {"agent": "generator", "content": "Corrected: action 12 now moves right.\n" + fence(SQUARE_SCRIPT)},
            {"agent": "evaluator", "content": "VERDICT: YES\nThe trajectory examines the square and ends above its center."},
        ],
    }
    (sessions / "square_survey.json").write_text(json.dumps(square_session, indent=2) + "\n", encoding="utf-8")

    wrong = SQUARE_WRONG_SCRIPT
    always_wrong = {
        "task": SQUARE_TASK,
        "entries": [{"agent": "generator", "content": fence(wrong)} for _ in range(11)]
        + [{"agent": "evaluator", "content": "VERDICT: NO\nAction 12 flies West instead of East."} for _ in range(10)],
    }
    (sessions / "always_wrong.json").write_text(json.dumps(always_wrong, indent=2) + "\n", encoding="utf-8")

    gt_session = {"entries": [{"agent": "generator", "task": t.id, "content": fence(scripts[t.id])} for t in tasks]}
    (sessions / "ground_truth.json").write_text(json.dumps(gt_session, indent=2) + "\n", encoding="utf-8")
    print(f"wrote {len(tasks)} tasks and 3 sessions under {DATA}")


if __name__ == "__main__":
    main()
