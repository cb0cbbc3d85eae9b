from pathlib import Path

import pytest

from uavloop.agents import (
    Conversation,
    Decision,
    EvaluationError,
    EvaluatorPrompt,
    GenerationError,
    GeneratorExample,
    GeneratorPrompt,
    MissingVerdict,
    PromptError,
    Verdict,
    evaluate,
    generate,
    oracle_evaluate,
    oracle_verdict,
    parse_verdict,
    read_sections,
    refine,
    self_evaluate,
)
from uavloop.flightlang import ExecutionTrace, ExtractionError, ParseError, parse, run
from uavloop.llmclient import Exhausted, ScriptedBackend, ScriptEntry
from uavloop.sim import Transition

SNAPSHOTS = Path(__file__).parent / "fixtures" / "snapshots"


def gen_backend(*replies, task=None):
    return ScriptedBackend([ScriptEntry("generator", r, task) for r in replies])


def eval_backend(*replies):
    return ScriptedBackend([ScriptEntry("evaluator", r) for r in replies])


@pytest.fixture(scope="module")
def gprompt():
    return GeneratorPrompt.load()


@pytest.fixture(scope="module")
def eprompt():
    return EvaluatorPrompt.load()


def test_generator_prompt_snapshot(gprompt):
    assert gprompt.assemble() == (SNAPSHOTS / "generator_system_prompt.txt").read_text()


def test_evaluator_prompt_snapshot(eprompt):
    assert eprompt.assemble() == (SNAPSHOTS / "evaluator_system_prompt.txt").read_text()
    stripped = eprompt.configured(use_rules=False, use_references=False).assemble()
    assert stripped == (SNAPSHOTS / "evaluator_roles_only.txt").read_text()
    assert "# Rules" not in stripped and "# References" not in stripped


def test_prompt_assembly_is_deterministic():
    assert GeneratorPrompt.load().assemble() == GeneratorPrompt.load().assemble()
    assert EvaluatorPrompt.load().assemble() == EvaluatorPrompt.load().assemble()


def test_shipped_examples_run_error_free(gprompt):
    assert len(gprompt.examples) >= 2
    for ex in gprompt.examples:
        trace = run(parse(ex.script))
        assert all(step.ok for step in trace.steps), ex.task


def test_shipped_references_cover_both_verdicts(eprompt):
    assert {r.verdict for r in eprompt.references} == {Decision.YES, Decision.NO}


def test_generator_prompt_rejects_broken_example():
    with pytest.raises(PromptError):
        GeneratorPrompt("g", "api", "c", (GeneratorExample("t", "r", "hover(2)"),))
    with pytest.raises(PromptError):
        GeneratorPrompt("", "api", "c", (GeneratorExample("t", "r", "takeoff(2)"),))


def test_read_sections():
    text = "=== a ===\none\n=== b ===\ntwo\nthree\n"
    assert read_sections(text) == [("a", "one"), ("b", "two\nthree")]
    with pytest.raises(PromptError):
        read_sections("no headers")


def test_custom_template_file(tmp_path):
    path = tmp_path / "gen.txt"
    path.write_text(
        "=== guidelines ===\nBe exact.\n=== skill_api ===\ntakeoff(h)\n=== constraints ===\nTake off first.\n"
        "=== example ===\nTask: rise\nReasoning: one step\nScript:\ntakeoff(3)\n"
    )
    prompt = GeneratorPrompt.load(path)
    assert prompt.examples == (GeneratorExample("rise", "one step", "takeoff(3)"),)
    assert prompt.assemble().startswith("# Guidelines\nBe exact.\n")


def test_generate_fenced_script(gprompt):
    conv = Conversation.for_generator(gprompt)
    script = generate("Take off to 5 meters and land.", gen_backend("```\ntakeoff(5)\nland\n```"), conv)
    assert len(script) == 2
    assert [t.role for t in conv.turns] == ["user", "assistant"]


def test_generate_prose_only(gprompt):
    with pytest.raises(GenerationError) as info:
        generate("fly", gen_backend("I would rather not."), Conversation.for_generator(gprompt))
    assert isinstance(info.value.cause, ExtractionError)
    assert info.value.response_text == "I would rather not."


def test_generate_bad_verb(gprompt):
    with pytest.raises(GenerationError) as info:
        generate("fly", gen_backend("takeoff(5)\nhover(1)"), Conversation.for_generator(gprompt))
    assert isinstance(info.value.cause, ParseError)
    assert info.value.cause.line == 2


def test_generate_wraps_backend_errors(gprompt):
    with pytest.raises(GenerationError) as info:
        generate("fly", gen_backend(), Conversation.for_generator(gprompt))
    assert isinstance(info.value.cause, Exhausted)


def test_generate_needs_fresh_conversation(gprompt):
    conv = Conversation.for_generator(gprompt)
    backend = gen_backend("takeoff(1)", "takeoff(2)")
    generate("fly", backend, conv)
    with pytest.raises(ValueError):
        generate("fly", backend, conv)


def test_refine_returns_corrected_script(gprompt):
    conv = Conversation.for_generator(gprompt)
    backend = gen_backend("```\ntakeoff(2)\nleft(3)\n```", "```\ntakeoff(2)\nright(3)\n```")
    generate("Take off and fly 3 meters right.", backend, conv)
    fixed = refine(Verdict(Decision.NO, "Action 2 flies West instead of East."), backend, conv)
    assert fixed.commands == parse("takeoff(2)\nright(3)").commands
    # the second request carries the whole history plus the feedback
    last = backend.requests[-1]
    assert len(last.turns) == 3
    assert "Action 2 flies West instead of East." in last.turns[-1].content


def test_refine_without_script(gprompt):
    with pytest.raises(ValueError):
        refine(Verdict(Decision.NO, "wrong"), gen_backend("takeoff(1)"), Conversation.for_generator(gprompt))


def test_refine_twice_grows_by_two_turns(gprompt):
    conv = Conversation.for_generator(gprompt)
    backend = gen_backend("takeoff(1)", "takeoff(2)", "takeoff(3)")
    generate("fly", backend, conv)
    lengths = [len(conv.turns)]
    for _ in range(2):
        refine(Verdict(Decision.NO, "still wrong"), backend, conv)
        lengths.append(len(conv.turns))
    assert lengths == [2, 4, 6]


def test_evaluate_yes(eprompt):
    verdict = evaluate("task", "Action 1: ...", eval_backend("VERDICT: YES\nTrajectory matches."), eprompt)
    assert verdict.accepted


def test_evaluate_no_keeps_explanation(eprompt):
    backend = eval_backend("VERDICT: NO\nAction 12 flies West instead of East")
    verdict = evaluate("task", "Action 1: ...", backend, eprompt)
    assert verdict == Verdict(Decision.NO, "Action 12 flies West instead of East")
    req = backend.requests[0]
    assert req.agent == "evaluator"
    assert req.system_prompt == eprompt.assemble()
    assert req.turns[0].content == "Task description:\ntask\n\nTrajectory observation:\nAction 1: ..."


def test_evaluate_without_verdict_line(eprompt):
    with pytest.raises(EvaluationError) as info:
        evaluate("task", "Action 1: ...", eval_backend("Looks fine to me."), eprompt)
    assert isinstance(info.value.cause, MissingVerdict)


@pytest.mark.parametrize(
    "text, decision",
    [
        ("VERDICT: YES", Decision.YES),
        ("verdict: yes", None),
        ("**VERDICT: NO**\nAction 3 is wrong.", Decision.NO),
        ("VERDICT:NO\nAction 1 missing.", Decision.NO),
        ("Reasoning first.\n\nVERDICT: YES\nAll good.", Decision.YES),
        ("YES, this is mostly right.\nVERDICT: NO\nAction 4 turns the wrong way.", Decision.NO),
        ("VERDICT: NO\nYES is what I would say if action 2 were right.", Decision.NO),
        ("The answer is NOT a YES. VERDICT: YES", None),
        ("VERDICT: YESTERDAY", None),
    ],
)
def test_parse_verdict_structured(text, decision):
    if decision is None:
        with pytest.raises(MissingVerdict):
            parse_verdict(text)
    else:
        assert parse_verdict(text).decision is decision


def test_parse_verdict_no_without_explanation():
    with pytest.raises(MissingVerdict):
        parse_verdict("VERDICT: NO")


def test_parse_verdict_substring_rule():
    # the looser rule is fooled by a stray YES
    assert parse_verdict("YES, but action 3 flies West.", "substring").accepted
    assert not parse_verdict("Action 3 flies West.", "substring").accepted
    with pytest.raises(ValueError):
        parse_verdict("VERDICT: YES", "vibes")


def test_self_evaluate_uses_generator_conversation(gprompt, eprompt):
    conv = Conversation.for_generator(gprompt)
    backend = gen_backend("takeoff(2)", "VERDICT: YES\nMatches.")
    generate("Take off.", backend, conv)
    verdict = self_evaluate("Take off.", "Action 1: ...", backend, conv, eprompt)
    assert verdict.accepted
    assert backend.requests[-1].agent == "generator"
    assert len(conv.turns) == 4


def test_oracle_accepts_matching_trace():
    trace = run(parse("takeoff(2)\nforward(3)"))
    assert oracle_evaluate(trace, trace.executed_transitions()).accepted


def test_oracle_names_deviating_action():
    gt = run(parse("takeoff(2)\nturn_cw(90)\nleft(4)")).executed_transitions()
    trace = run(parse("takeoff(2)\nturn_cw(90)\nright(4)"))
    # hand check: facing East, left is North (+4 N) and right is South (-4 N)
    assert gt[2] == Transition(4.0, 0.0, 0.0, 0.0)
    assert trace.steps[2].transition == Transition(-4.0, 0.0, 0.0, 0.0)
    verdict = oracle_evaluate(trace, gt)
    assert verdict.decision is Decision.NO
    assert verdict.explanation.startswith("Action 3 deviates")
    assert "4.00 meters North" in verdict.explanation and "4.00 meters South" in verdict.explanation


def test_oracle_east_instead_of_west():
    gt = [Transition(0, 0, -2, 0), Transition(2, 0, 0, 0), Transition(0, -3, 0, 0)]
    executed = [Transition(0, 0, -2, 0), Transition(2, 0, 0, 0), Transition(0, 3, 0, 0)]
    verdict = oracle_verdict(executed, gt)
    assert "Action 3" in verdict.explanation
    assert "West" in verdict.explanation and "East" in verdict.explanation


def test_oracle_empty_trace():
    verdict = oracle_evaluate(ExecutionTrace(), [Transition(0, 0, -2, 0)])
    assert verdict.decision is Decision.NO
    assert "no actions executed" in verdict.explanation.lower()


def test_oracle_extra_and_missing_actions():
    gt = [Transition(0, 0, -2, 0), Transition(1, 0, 0, 0)]
    extra = oracle_verdict(gt + [Transition(0, 0, 2, 0)], gt)
    assert extra.explanation.startswith("Action 3 is extra")
    missing = oracle_verdict(gt[:1], gt)
    assert missing.explanation.startswith("Action 2 is missing")


def test_oracle_skips_errored_steps():
    gt = run(parse("takeoff(2)\nforward(1)")).executed_transitions()
    trace = run(parse("forward(1)\ntakeoff(2)\nforward(1)"))
    assert oracle_evaluate(trace, gt).accepted


def test_verdict_no_needs_explanation():
    with pytest.raises(ValueError):
        Verdict(Decision.NO, "  ")
