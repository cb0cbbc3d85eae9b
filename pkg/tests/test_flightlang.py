import json
import random
from pathlib import Path

import pytest
from hypothesis import given, settings, strategies as st

from scriptgen import random_script
from uavloop.flightlang import (
    ErrorKind,
    ExtractionError,
    FlightScript,
    ParseError,
    extract_script,
    format_script,
    parse,
    run,
)
from uavloop.sim import Command, UavState, Verb

GOLDEN = Path(__file__).parent / "fixtures" / "golden"
EXPECTED = json.loads((GOLDEN / "expected.json").read_text())


def as_rows(script: FlightScript):
    return [[c.verb.value, c.argument, c.source_line] for c in script.commands]


@pytest.mark.parametrize("name", sorted(EXPECTED["valid"]))
def test_golden_valid(name):
    script = parse((GOLDEN / "valid" / name).read_bytes())
    assert as_rows(script) == EXPECTED["valid"][name]


@pytest.mark.parametrize("name", sorted(EXPECTED["invalid"]))
def test_golden_invalid(name):
    line, column, kind = EXPECTED["invalid"][name]
    with pytest.raises(ParseError) as info:
        parse((GOLDEN / "invalid" / name).read_bytes())
    assert (info.value.line, info.value.column, info.value.kind.value) == (line, column, kind)


def test_golden_corpus_size():
    assert len(EXPECTED["valid"]) >= 30
    assert len(EXPECTED["invalid"]) >= 30
    assert sorted(p.name for p in (GOLDEN / "valid").glob("*.fl")) == sorted(EXPECTED["valid"])
    assert sorted(p.name for p in (GOLDEN / "invalid").glob("*.fl")) == sorted(EXPECTED["invalid"])


def test_parse_three_commands():
    assert len(parse("takeoff(5)\nforward(3)\nland")) == 3


def test_parse_unknown_verb_on_line_two():
    with pytest.raises(ParseError) as info:
        parse("takeoff(5)\nhover(3)")
    assert info.value.line == 2
    assert info.value.kind is ErrorKind.UNKNOWN_VERB


def test_parse_negative_distance():
    with pytest.raises(ParseError) as info:
        parse("forward(-2)")
    assert (info.value.line, info.value.kind) == (1, ErrorKind.NON_POSITIVE)


def test_parse_error_message_mentions_position():
    with pytest.raises(ParseError) as info:
        parse("takeoff(5)\nfly(2)")
    assert "2:1" in str(info.value) or "line 2" in str(info.value)


def test_parse_rejects_non_finite_numbers():
    with pytest.raises(ParseError) as info:
        parse("forward(" + "9" * 400 + ")")
    assert info.value.kind is ErrorKind.BAD_NUMBER


def test_run_takeoff_forward_land():
    trace = run(parse("takeoff(5)\nforward(3)\nland"))
    assert len(trace) == 3
    assert trace.final_state == UavState(3.0, 0.0, 0.0, 0.0, False)


def test_run_continues_after_error():
    trace = run(parse("forward(3)\ntakeoff(5)"))
    assert trace.steps[0].error is not None
    assert trace.steps[0].error.kind == "NotAirborne"
    assert trace.steps[0].state_after == trace.steps[0].state_before
    assert trace.steps[1].ok
    assert trace.final_state == UavState(0.0, 0.0, -5.0, 0.0, True)
    assert len(trace.executed_transitions()) == 1


def test_run_single_takeoff():
    trace = run(parse("takeoff(5)"))
    assert len(trace) == 1 and trace.final_state.airborne


def test_run_always_starts_at_origin():
    script = parse("takeoff(5)\nright(4)")
    assert run(script).final_state == run(script).final_state == UavState(0, 4, -5, 0, True)


@settings(max_examples=300, deadline=None)
@given(st.integers(min_value=0, max_value=2**32 - 1))
def test_format_parse_round_trip(seed):
    commands = random_script(random.Random(seed))
    text = format_script(commands)
    again = parse(text)
    assert [(c.verb, c.argument) for c in again.commands] == [(c.verb, c.argument) for c in commands]
    assert format_script(again) == text


def test_format_strips_trailing_zeros():
    assert format_script([Command(Verb.TAKEOFF, 5.0), Command(Verb.LEFT, 0.25), Command(Verb.LAND)]) == (
        "takeoff(5)\nleft(0.25)\nland"
    )


@settings(max_examples=500, deadline=None)
@given(st.text(max_size=80))
def test_parse_never_crashes_on_text(text):
    try:
        parse(text)
    except ParseError as exc:
        assert exc.line >= 1 and exc.column >= 1


def test_extract_fenced_block():
    assert extract_script("Here is the plan:\n```\ntakeoff(5)\n```") == "takeoff(5)"


def test_extract_fenced_block_with_language_tag():
    reply = "Plan:\n```python\ntakeoff(5)\nland\n```\nDone, the UAV lands."
    assert extract_script(reply) == "takeoff(5)\nland"


def test_extract_first_fence_only():
    reply = "```\ntakeoff(1)\n```\nor\n```\ntakeoff(2)\n```"
    assert extract_script(reply) == "takeoff(1)"


def test_extract_unclosed_fence_runs_to_end():
    assert extract_script("```\ntakeoff(5)\nland") == "takeoff(5)\nland"


def test_extract_without_fence():
    assert extract_script("takeoff(5)\nland") == "takeoff(5)\nland"


def test_extract_without_fence_drops_prose():
    reply = "Sure, here you go.\ntakeoff(5)\nforward(2)\nThis flies two meters ahead."
    assert parse(extract_script(reply)).commands == parse("takeoff(5)\nforward(2)").commands


def test_extract_prose_only():
    with pytest.raises(ExtractionError):
        extract_script("I cannot do that.")


def test_extract_empty_fence():
    with pytest.raises(ExtractionError):
        extract_script("```\n\n```")
