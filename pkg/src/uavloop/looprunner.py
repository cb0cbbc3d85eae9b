"""The generate -> simulate -> observe -> evaluate -> refine loop.

Iteration counting follows the classic closed-loop procedure: the initial
script is generated before the loop, every round evaluates the current
script, and a NO verdict triggers a refinement, including on the last round.
The refined script from that final round is returned unevaluated, and the
result is flagged for human review.
"""

from __future__ import annotations

import enum
import json
import logging
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Literal, Sequence

from uavloop.agents import (
    Conversation,
    Decision,
    EvaluationError,
    EvaluatorPrompt,
    GenerationError,
    GeneratorPrompt,
    Verdict,
    evaluate,
    generate,
    oracle_evaluate,
    refine,
    self_evaluate,
)
from uavloop.evalharness.matching import DEFAULT_TOLERANCES, Tolerances
from uavloop.flightlang import ExecutionTrace, FlightScript, format_script, run
from uavloop.llmclient import ChatBackend, LlmError
from uavloop.semantics import DEFAULT_FORMAT, FormatConfig, render_numeric, transform
from uavloop.sim import SimConfig, Transition

log = logging.getLogger(__name__)


class Outcome(str, enum.Enum):
    ACCEPTED = "Accepted"
    MAX_ITERATIONS = "MaxIterationsExceeded"
    FAULTED = "Faulted"
    # zero-iteration sweep point: the initial script is kept without evaluation
    OPEN_LOOP = "OpenLoop"


@dataclass(frozen=True)
class LoopConfig:
    max_iterations: int = 6
    observation_mode: Literal["semantic", "numeric"] = "semantic"
    evaluator_mode: Literal["external", "self", "oracle"] = "external"
    verdict_rule: Literal["structured", "substring"] = "structured"
    record_transcripts: bool = True

    def __post_init__(self) -> None:
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.observation_mode not in ("semantic", "numeric"):
            raise ValueError(f"unknown observation mode {self.observation_mode!r}")
        if self.evaluator_mode not in ("external", "self", "oracle"):
            raise ValueError(f"unknown evaluator mode {self.evaluator_mode!r}")
        if self.verdict_rule not in ("structured", "substring"):
            raise ValueError(f"unknown verdict rule {self.verdict_rule!r}")


@dataclass
class IterationRecord:
    iteration: int
    script_text: str
    observation_text: str
    verdict: Verdict
    trace: ExecutionTrace | None = None
    llm_response: str | None = None

    def to_dict(self) -> dict:
        states = None
        if self.trace is not None:
            states = [self.trace.initial_state.as_list()] + [s.state_after.as_list() for s in self.trace.steps]
        return {
            "iteration": self.iteration,
            "script": self.script_text,
            "observation": self.observation_text,
            "verdict": self.verdict.to_dict(),
            "trace_states": states,
            "trace_errors": None
            if self.trace is None
            else [s.error.message if s.error else None for s in self.trace.steps],
            "llm_response": self.llm_response,
        }


@dataclass
class LoopResult:
    outcome: Outcome
    final_script: FlightScript | None
    iterations_used: int
    per_iteration: list[IterationRecord] = field(default_factory=list)
    needs_human: bool = False
    fault: str | None = None
    conversation: Conversation | None = None

    def final_trace(self, sim_config: SimConfig | None = None) -> ExecutionTrace:
        if self.final_script is None:
            return ExecutionTrace()
        return run(self.final_script, sim_config)


@dataclass
class Prompts:
    generator: GeneratorPrompt
    evaluator: EvaluatorPrompt

    @classmethod
    def default(cls) -> "Prompts":
        return cls(GeneratorPrompt.load(), EvaluatorPrompt.load())


def observe(trace: ExecutionTrace, mode: str, fmt: FormatConfig = DEFAULT_FORMAT) -> str:
    if mode == "numeric":
        return render_numeric(trace, fmt)
    return transform(trace, fmt).rendered


def _synthetic_no(exc: GenerationError) -> Verdict:
    return Verdict(Decision.NO, f"The previous response could not be used: {exc}")


def run_loop(
    task: str,
    config: LoopConfig,
    generator_backend: ChatBackend,
    evaluator_backend: ChatBackend | None = None,
    prompts: Prompts | None = None,
    *,
    ground_truth: Sequence[Transition] | None = None,
    task_id: str | None = None,
    sim_config: SimConfig | None = None,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
    fmt: FormatConfig = DEFAULT_FORMAT,
) -> LoopResult:
    prompts = prompts or Prompts.default()
    if config.evaluator_mode == "oracle" and ground_truth is None:
        raise ValueError("oracle evaluation needs ground_truth")
    if config.evaluator_mode == "external" and evaluator_backend is None:
        raise ValueError("external evaluation needs an evaluator backend")

    conversation = Conversation.for_generator(prompts.generator, task_id)
    records: list[IterationRecord] = []

    def faulted(exc: Exception, script: FlightScript | None) -> LoopResult:
        log.error("loop faulted: %s", exc)
        return LoopResult(Outcome.FAULTED, script, len(records), records, False, str(exc), conversation)

    script: FlightScript | None
    failure: GenerationError | None = None
    try:
        script = generate(task, generator_backend, conversation)
    except GenerationError as exc:
        if isinstance(exc.cause, LlmError):
            return faulted(exc.cause, None)
        script, failure = None, exc

    for itr in range(1, config.max_iterations + 1):
        if script is None:
            assert failure is not None
            verdict = _synthetic_no(failure)
            records.append(IterationRecord(itr, failure.response_text or "", "", verdict, None, failure.response_text))
        else:
            trace = run(script, sim_config)
            observation = observe(trace, config.observation_mode, fmt)
            try:
                if config.evaluator_mode == "oracle":
                    verdict = oracle_evaluate(trace, ground_truth, tolerances)
                elif config.evaluator_mode == "self":
                    verdict = self_evaluate(
                        task, observation, generator_backend, conversation, prompts.evaluator, rule=config.verdict_rule
                    )
                else:
                    verdict = evaluate(
                        task,
                        observation,
                        evaluator_backend,
                        prompts.evaluator,
                        rule=config.verdict_rule,
                        task_id=task_id,
                    )
            except EvaluationError as exc:
                if isinstance(exc.cause, LlmError):
                    return faulted(exc.cause, script)
                verdict = Verdict(Decision.NO, f"Evaluation was inconclusive: {exc}")
            records.append(IterationRecord(itr, format_script(script), observation, verdict, trace))
            if verdict.accepted:
                return LoopResult(Outcome.ACCEPTED, script, itr, records, False, None, conversation)

        try:
            script, failure = refine(verdict, generator_backend, conversation), None
        except GenerationError as exc:
            if isinstance(exc.cause, LlmError):
                return faulted(exc.cause, script)
            script, failure = None, exc

    return LoopResult(Outcome.MAX_ITERATIONS, script, len(records), records, True, None, conversation)


def run_open_loop(
    task: str,
    generator_backend: ChatBackend,
    prompts: Prompts | None = None,
    *,
    task_id: str | None = None,
) -> LoopResult:
    """Generate once and keep the script without evaluating it."""
    prompts = prompts or Prompts.default()
    conversation = Conversation.for_generator(prompts.generator, task_id)
    try:
        script = generate(task, generator_backend, conversation)
    except GenerationError as exc:
        if isinstance(exc.cause, LlmError):
            return LoopResult(Outcome.FAULTED, None, 0, [], False, str(exc.cause), conversation)
        script = None
    return LoopResult(Outcome.OPEN_LOOP, script, 0, [], False, None, conversation)


def transcript(task: str, config: LoopConfig, result: LoopResult, *, task_id: str | None = None) -> dict:
    return {
        "task": task,
        "task_id": task_id,
        "config": asdict(config),
        "outcome": result.outcome.value,
        "iterations_used": result.iterations_used,
        "needs_human": result.needs_human,
        "fault": result.fault,
        "final_script": None if result.final_script is None else format_script(result.final_script),
        "iterations": [r.to_dict() for r in result.per_iteration],
        "conversation": None
        if result.conversation is None
        else [{"role": t.role, "content": t.content} for t in result.conversation.turns],
    }


def write_transcript(path: str | os.PathLike, data: dict) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n", encoding="utf-8")
