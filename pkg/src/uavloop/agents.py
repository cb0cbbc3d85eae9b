"""Prompt assembly and response handling for the code generator and the evaluator.

Prompt templates live in plain-text files split into ``=== name ===`` sections.
Repeated ``example`` / ``reference`` sections become few-shot entries.
"""

from __future__ import annotations

import enum
import os
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Sequence

from uavloop.evalharness.matching import DEFAULT_TOLERANCES, Tolerances, transitions_match
from uavloop.flightlang import (
    ExecutionTrace,
    ExtractionError,
    FlightScript,
    ParseError,
    extract_script,
    parse,
)
from uavloop.llmclient import ChatBackend, ChatRequest, LlmError, Turn
from uavloop.semantics import describe_transition
from uavloop.sim import Transition

REFINE_INSTRUCTION = (
    "The trajectory deviated from the task as described above. "
    "Fix the deviations and emit a corrected full script in a single fenced code block."
)

_SECTION = re.compile(r"^=== (\w+) ===[ \t]*$", re.MULTILINE)


class PromptError(ValueError):
    pass


def read_sections(text: str) -> list[tuple[str, str]]:
    """Split a template into ``(name, body)`` pairs in file order."""
    matches = list(_SECTION.finditer(text))
    if not matches:
        raise PromptError("template has no '=== name ===' sections")
    sections = []
    for m, nxt in zip(matches, matches[1:] + [None]):
        body = text[m.end(): nxt.start() if nxt else len(text)].strip("\n")
        sections.append((m.group(1), body.rstrip()))
    return sections


def _fields(body: str, keys: Sequence[str]) -> dict[str, str]:
    pattern = re.compile(rf"^({'|'.join(keys)}):[ \t]?", re.MULTILINE)
    found = list(pattern.finditer(body))
    out = {}
    for m, nxt in zip(found, found[1:] + [None]):
        out[m.group(1)] = body[m.end(): nxt.start() if nxt else len(body)].strip()
    missing = [k for k in keys if k not in out]
    if missing:
        raise PromptError(f"section is missing fields {missing}: {body[:60]!r}")
    return out


def _template_text(source: str | os.PathLike | None, default_name: str) -> str:
    if source is None:
        return (resources.files("uavloop") / "data" / "prompts" / default_name).read_text(encoding="utf-8")
    return Path(source).read_text(encoding="utf-8")


@dataclass(frozen=True)
class GeneratorExample:
    task: str
    reasoning: str
    script: str


@dataclass(frozen=True)
class GeneratorPrompt:
    guidelines: str
    skill_api_reference: str
    constraints: str
    examples: tuple[GeneratorExample, ...]

    def __post_init__(self) -> None:
        for name in ("guidelines", "skill_api_reference", "constraints"):
            if not getattr(self, name).strip():
                raise PromptError(f"generator prompt section {name!r} is empty")
        if not self.examples:
            raise PromptError("generator prompt needs at least one example")
        for ex in self.examples:
            try:
                parse(ex.script)
            except ParseError as exc:
                raise PromptError(f"example script for {ex.task!r} does not parse: {exc}") from exc

    @classmethod
    def load(cls, path: str | os.PathLike | None = None) -> "GeneratorPrompt":
        sections = read_sections(_template_text(path, "generator.txt"))
        named = {k: v for k, v in sections if k != "example"}
        try:
            examples = tuple(
                GeneratorExample(f["Task"], f["Reasoning"], f["Script"])
                for f in (_fields(body, ("Task", "Reasoning", "Script")) for k, body in sections if k == "example")
            )
            return cls(named["guidelines"], named["skill_api"], named["constraints"], examples)
        except KeyError as exc:
            raise PromptError(f"generator template lacks section {exc}") from exc

    def assemble(self) -> str:
        parts = [
            "# Guidelines\n" + self.guidelines,
            "# Skill API\n" + self.skill_api_reference,
            "# Constraints\n" + self.constraints,
            "# Examples",
        ]
        for i, ex in enumerate(self.examples, start=1):
            parts.append(
                f"## Example {i}\nTask: {ex.task}\nReasoning:\n{ex.reasoning}\nResponse:\n```\n{ex.script}\n```"
            )
        return "\n\n".join(parts) + "\n"


class Decision(str, enum.Enum):
    YES = "YES"
    NO = "NO"


@dataclass(frozen=True)
class Verdict:
    decision: Decision
    explanation: str = ""

    def __post_init__(self) -> None:
        if self.decision is Decision.NO and not self.explanation.strip():
            raise ValueError("a NO verdict needs an explanation")

    @property
    def accepted(self) -> bool:
        return self.decision is Decision.YES

    def to_dict(self) -> dict:
        return {"decision": self.decision.value, "explanation": self.explanation}


@dataclass(frozen=True)
class EvaluatorReference:
    task: str
    observation: str
    verdict: Decision
    explanation: str


@dataclass(frozen=True)
class EvaluatorPrompt:
    roles: str
    rules: str
    references: tuple[EvaluatorReference, ...]
    # section switches for the roles / rules / references ablation
    use_rules: bool = True
    use_references: bool = True

    def __post_init__(self) -> None:
        if not self.roles.strip() or not self.rules.strip():
            raise PromptError("evaluator roles and rules must be non-empty")
        if not self.references:
            raise PromptError("evaluator prompt needs at least one reference")

    @classmethod
    def load(cls, path: str | os.PathLike | None = None, *, use_rules: bool = True, use_references: bool = True) -> "EvaluatorPrompt":
        sections = read_sections(_template_text(path, "evaluator.txt"))
        named = {k: v for k, v in sections if k != "reference"}
        refs = []
        for kind, body in sections:
            if kind != "reference":
                continue
            f = _fields(body, ("Task", "Observation", "Verdict", "Explanation"))
            try:
                decision = Decision(f["Verdict"].strip())
            except ValueError as exc:
                raise PromptError(f"reference verdict must be YES or NO, got {f['Verdict']!r}") from exc
            refs.append(EvaluatorReference(f["Task"], f["Observation"], decision, f["Explanation"]))
        try:
            return cls(named["roles"], named["rules"], tuple(refs), use_rules, use_references)
        except KeyError as exc:
            raise PromptError(f"evaluator template lacks section {exc}") from exc

    def configured(self, *, use_rules: bool, use_references: bool) -> "EvaluatorPrompt":
        return EvaluatorPrompt(self.roles, self.rules, self.references, use_rules, use_references)

    def assemble(self) -> str:
        parts = ["# Role\n" + self.roles]
        if self.use_rules:
            parts.append("# Rules\n" + self.rules)
        if self.use_references:
            parts.append("# References")
            for i, ref in enumerate(self.references, start=1):
                parts.append(
                    f"## Reference {i}\nTask: {ref.task}\nTrajectory observation:\n{ref.observation}\n"
                    f"Answer:\nVERDICT: {ref.verdict.value}\n{ref.explanation}"
                )
        return "\n\n".join(parts) + "\n"


class GenerationError(Exception):
    def __init__(self, cause: Exception, response_text: str | None = None):
        super().__init__(f"{type(cause).__name__}: {cause}")
        self.cause = cause
        self.response_text = response_text


class EvaluationError(Exception):
    def __init__(self, cause: Exception | str, response_text: str | None = None):
        super().__init__(str(cause))
        self.cause = cause
        self.response_text = response_text


class MissingVerdict(ValueError):
    pass


@dataclass
class Conversation:
    """Generator chat history; refinement continues the same conversation."""

    system_prompt: str
    turns: list[Turn] = field(default_factory=list)
    task_id: str | None = None

    @classmethod
    def for_generator(cls, prompt: GeneratorPrompt, task_id: str | None = None) -> "Conversation":
        return cls(prompt.assemble(), [], task_id)

    @property
    def has_script(self) -> bool:
        return any(t.role == "assistant" for t in self.turns)


def _request(backend: ChatBackend, system_prompt: str, turns, agent: str, task_id: str | None) -> ChatRequest:
    cfg = getattr(backend, "config", None)
    settings = {}
    if cfg is not None:
        settings = {"model": cfg.model, "temperature": cfg.temperature, "max_output_tokens": cfg.max_output_tokens}
    return ChatRequest(system_prompt, tuple(turns), agent=agent, task_id=task_id, **settings)


def _ask_generator(backend: ChatBackend, conversation: Conversation, message: str) -> FlightScript:
    turns = conversation.turns + [Turn("user", message)]
    try:
        reply = backend.complete(_request(backend, conversation.system_prompt, turns, "generator", conversation.task_id))
    except LlmError as exc:
        raise GenerationError(exc) from exc
    conversation.turns = turns + [Turn("assistant", reply.content)]
    try:
        return parse(extract_script(reply.content))
    except (ExtractionError, ParseError) as exc:
        raise GenerationError(exc, reply.content) from exc


def generate(task: str, backend: ChatBackend, conversation: Conversation) -> FlightScript:
    """First generation for ``task``; appends the exchange to ``conversation``."""
    if not task.strip():
        raise ValueError("task must be non-empty")
    if conversation.turns:
        raise ValueError("generate expects a fresh conversation")
    return _ask_generator(backend, conversation, task)


def refinement_message(feedback: Verdict) -> str:
    return f"Evaluation feedback:\n{feedback.explanation}\n\n{REFINE_INSTRUCTION}"


def refine(feedback: Verdict, backend: ChatBackend, conversation: Conversation) -> FlightScript:
    if not conversation.turns or not conversation.has_script:
        raise ValueError("refine needs a conversation holding the task and a generated script")
    return _ask_generator(backend, conversation, refinement_message(feedback))


_VERDICT_LINE = re.compile(r"^[\s*_#>`-]*VERDICT\s*:\s*[*_`]*\s*(YES|NO)\b[*_`]*", re.MULTILINE)


def parse_verdict(text: str, rule: str = "structured") -> Verdict:
    """Read a verdict out of an evaluator reply.

    ``structured`` looks for a ``VERDICT: YES|NO`` line and ignores stray
    YES/NO tokens elsewhere; ``substring`` accepts on any "YES" in the text.
    """
    if rule == "substring":
        decision = Decision.YES if "YES" in text else Decision.NO
        explanation = text.strip()
    elif rule == "structured":
        m = _VERDICT_LINE.search(text)
        if m is None:
            raise MissingVerdict("no 'VERDICT: YES' or 'VERDICT: NO' line in evaluator reply")
        decision = Decision(m.group(1))
        line_start = text.rfind("\n", 0, m.start()) + 1
        line_end = text.find("\n", m.end())
        rest = text[:line_start] + ("" if line_end < 0 else text[line_end + 1:])
        explanation = rest.strip()
    else:
        raise ValueError(f"unknown verdict rule {rule!r}")
    if decision is Decision.NO and not explanation:
        raise MissingVerdict("NO verdict without an explanation")
    return Verdict(decision, explanation)


def evaluation_message(task: str, observation: str) -> str:
    return f"Task description:\n{task}\n\nTrajectory observation:\n{observation}"


def evaluate(
    task: str,
    observation: str,
    backend: ChatBackend,
    prompt: EvaluatorPrompt,
    *,
    rule: str = "structured",
    task_id: str | None = None,
) -> Verdict:
    if not observation.strip():
        raise ValueError("observation must be non-empty")
    request = _request(backend, prompt.assemble(), [Turn("user", evaluation_message(task, observation))], "evaluator", task_id)
    try:
        reply = backend.complete(request)
    except LlmError as exc:
        raise EvaluationError(exc) from exc
    try:
        return parse_verdict(reply.content, rule)
    except MissingVerdict as exc:
        raise EvaluationError(exc, reply.content) from exc


def self_evaluate(
    task: str,
    observation: str,
    backend: ChatBackend,
    conversation: Conversation,
    prompt: EvaluatorPrompt,
    *,
    rule: str = "structured",
) -> Verdict:
    """Self-refine variant: the generator judges its own trajectory in its own conversation."""
    message = prompt.assemble() + "\n" + evaluation_message(task, observation)
    turns = conversation.turns + [Turn("user", message)]
    try:
        reply = backend.complete(_request(backend, conversation.system_prompt, turns, "generator", conversation.task_id))
    except LlmError as exc:
        raise EvaluationError(exc) from exc
    conversation.turns = turns + [Turn("assistant", reply.content)]
    try:
        return parse_verdict(reply.content, rule)
    except MissingVerdict as exc:
        raise EvaluationError(exc, reply.content) from exc


def _delta_words(t: Transition) -> str:
    text = describe_transition(t, 0.0, (0.0, 0.0, 0.0))
    # drop the facing/position clauses: only the delta itself matters here
    text = re.sub(r" while facing North", "", text)
    text = re.sub(r" ?The UAV (now faces North|moves to \[[^\]]*\])\.", "", text)
    return text.strip()


def oracle_verdict(
    executed: Sequence[Transition | None],
    ground_truth: Sequence[Transition],
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> Verdict:
    """Deterministic evaluator: ``executed`` holds one entry per action, None for errored ones.

    Errored actions are no-ops, so they are skipped when aligning against the
    ground truth; YES exactly when the scoring matcher would report success.
    """
    if not executed:
        return Verdict(Decision.NO, "No actions executed.")
    first_error = next((k for k, step in enumerate(executed, start=1) if step is None), None)
    error_note = f" Action {first_error} failed with an execution error." if first_error else ""
    j = 0
    for k, step in enumerate(executed, start=1):
        if step is None:
            continue
        if j >= len(ground_truth):
            return Verdict(Decision.NO, f"Action {k} is extra: '{_delta_words(step)}' is not part of the task.")
        expected = ground_truth[j]
        if not transitions_match(step, expected, tolerances):
            return Verdict(
                Decision.NO,
                f"Action {k} deviates: expected '{_delta_words(expected)}' but the UAV did '{_delta_words(step)}'.",
            )
        j += 1
    if j < len(ground_truth):
        return Verdict(
            Decision.NO,
            f"Action {len(executed) + 1} is missing: expected '{_delta_words(ground_truth[j])}'.{error_note}",
        )
    return Verdict(Decision.YES, "Trajectory matches the ground truth.")


def oracle_evaluate(
    trace: ExecutionTrace,
    ground_truth: Sequence[Transition],
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> Verdict:
    return oracle_verdict([s.transition for s in trace.steps], ground_truth, tolerances)
