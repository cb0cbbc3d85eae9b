"""Evaluator-precision benchmark over correct / deliberately broken observations."""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Literal, Sequence

from uavloop.agents import (
    EvaluationError,
    EvaluatorPrompt,
    Verdict,
    evaluate,
    oracle_evaluate,
    oracle_verdict,
)
from uavloop.evalharness.corpus import TaskSpec, ground_truth_script
from uavloop.evalharness.matching import DEFAULT_TOLERANCES, Tolerances
from uavloop.flightlang import FlightScript, run
from uavloop.llmclient import ChatBackend
from uavloop.looprunner import observe
from uavloop.semantics import ObservationParseError, parse_observation
from uavloop.sim import Command, Verb

Label = Literal["Correct", "Incorrect"]

_FLIP = {
    Verb.FORWARD: Verb.BACKWARD,
    Verb.BACKWARD: Verb.FORWARD,
    Verb.LEFT: Verb.RIGHT,
    Verb.RIGHT: Verb.LEFT,
    Verb.UP: Verb.DOWN,
    Verb.DOWN: Verb.UP,
    Verb.TURN_CW: Verb.TURN_CCW,
    Verb.TURN_CCW: Verb.TURN_CW,
}


@dataclass(frozen=True)
class PrecisionItem:
    task_id: str
    task: str
    observation: str
    label: Label
    ground_truth: tuple
    mutation: str | None = None


def mutate(command: Command, kind: str, tolerances: Tolerances) -> Command:
    if kind == "flip":
        return Command(_FLIP[command.verb], command.argument, command.source_line)
    if kind == "magnitude":
        if command.verb in (Verb.TURN_CW, Verb.TURN_CCW):
            bump = max(15.0, 2 * tolerances.yaw, 0.5 * command.argument)
        else:
            bump = max(1.0, 2 * tolerances.position, 0.5 * command.argument)
        return Command(command.verb, command.argument + bump, command.source_line)
    raise ValueError(f"unknown mutation {kind!r}")


def _candidates(script: FlightScript) -> list[tuple[int, str]]:
    out = []
    for i, cmd in enumerate(script.commands):
        if cmd.verb in _FLIP:
            out.append((i, "flip"))
        if cmd.argument is not None:
            out.append((i, "magnitude"))
    return out


def build_precision_dataset(
    corpus: Sequence[TaskSpec],
    *,
    seed: int = 0,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
    observation_mode: str = "semantic",
) -> list[PrecisionItem]:
    """One correct and one single-step-mutated observation per task."""
    items: list[PrecisionItem] = []
    for task in corpus:
        script = ground_truth_script(task.ground_truth)
        correct_trace = run(script)
        items.append(
            PrecisionItem(task.id, task.description, observe(correct_trace, observation_mode), "Correct", task.ground_truth)
        )

        rng = random.Random(f"{seed}:{task.id}")
        candidates = _candidates(script)
        rng.shuffle(candidates)
        for index, kind in candidates:
            commands = list(script.commands)
            commands[index] = mutate(commands[index], kind, tolerances)
            trace = run(FlightScript(tuple(commands)))
            # self-check: the broken trajectory must be rejected by the matcher
            if oracle_evaluate(trace, task.ground_truth, tolerances).accepted:
                continue
            label = f"{kind} action {index + 1} ({commands[index].verb.value})"
            items.append(
                PrecisionItem(task.id, task.description, observe(trace, observation_mode), "Incorrect", task.ground_truth, label)
            )
            break
        else:
            raise ValueError(f"no single-step mutation of {task.id} is detectable")
    return items


@dataclass(frozen=True)
class EvaluatorSetup:
    mode: Literal["oracle", "external"] = "oracle"
    backend: ChatBackend | None = None
    prompt: EvaluatorPrompt | None = None
    rule: str = "structured"
    tolerances: Tolerances = DEFAULT_TOLERANCES


@dataclass(frozen=True)
class PrecisionReport:
    precision_correct: float
    precision_incorrect: float
    precision_total: float
    evaluations: int

    def to_dict(self) -> dict:
        return {
            "precision_correct": self.precision_correct,
            "precision_incorrect": self.precision_incorrect,
            "precision_total": self.precision_total,
            "evaluations": self.evaluations,
        }


def _judge(item: PrecisionItem, setup: EvaluatorSetup) -> Verdict:
    if setup.mode == "oracle":
        try:
            steps = parse_observation(item.observation)
        except ObservationParseError as exc:
            raise EvaluationError(exc) from exc
        executed = [None if s.errored else s.transition for s in steps]
        return oracle_verdict(executed, item.ground_truth, setup.tolerances)
    if setup.backend is None or setup.prompt is None:
        raise ValueError("external evaluation needs a backend and a prompt")
    return evaluate(item.task, item.observation, setup.backend, setup.prompt, rule=setup.rule, task_id=item.task_id)


def is_correct_evaluation(item: PrecisionItem, verdict: Verdict | None) -> bool:
    if verdict is None:
        return False
    if item.label == "Correct":
        return verdict.accepted
    return not verdict.accepted and bool(verdict.explanation.strip())


def evaluator_precision(dataset: Sequence[PrecisionItem], setup: EvaluatorSetup, repetitions: int = 1) -> PrecisionReport:
    if not dataset:
        raise ValueError("dataset must be non-empty")
    if repetitions < 1:
        raise ValueError("repetitions must be >= 1")
    hits = {"Correct": 0, "Incorrect": 0}
    totals = {"Correct": 0, "Incorrect": 0}
    for _ in range(repetitions):
        for item in dataset:
            try:
                verdict = _judge(item, setup)
            except EvaluationError:
                verdict = None
            totals[item.label] += 1
            hits[item.label] += is_correct_evaluation(item, verdict)

    def ratio(h: int, t: int) -> float:
        return h / t if t else 0.0

    return PrecisionReport(
        ratio(hits["Correct"], totals["Correct"]),
        ratio(hits["Incorrect"], totals["Incorrect"]),
        ratio(sum(hits.values()), sum(totals.values())),
        sum(totals.values()),
    )
