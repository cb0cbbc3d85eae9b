import csv
import io
import json

import pytest

from uavloop.agents import Decision, Verdict
from uavloop.evalharness.corpus import (
    CorpusError,
    TaskSpec,
    default_corpus,
    dump_corpus,
    ground_truth_script,
    load_corpus,
)
from uavloop.evalharness.harness import (
    aggregate_rows,
    format_table,
    rows_csv,
    run_corpus,
    sweep_csv,
    sweep_iterations,
    write_report,
)
from uavloop.evalharness.matching import Tolerances
from uavloop.evalharness.precision import (
    EvaluatorSetup,
    build_precision_dataset,
    evaluator_precision,
    is_correct_evaluation,
    mutate,
)
from uavloop.flightlang import format_script, parse, run
from uavloop.llmclient import ScriptedBackend, ScriptEntry
from uavloop.looprunner import LoopConfig
from uavloop.sim import Command, Transition, Verb

ORACLE = LoopConfig(evaluator_mode="oracle")


def task(tid, script, tier="basic"):
    return TaskSpec(tid, tier, f"task {tid}", tuple(run(parse(script)).executed_transitions()), 20)


TASKS = [task("a", "takeoff(2)\nforward(3)"), task("b", "takeoff(4)\nturn_cw(90)\nright(2)")]


def fenced(text):
    return f"```\n{text}\n```"


def perfect_generator(tasks):
    entries = [ScriptEntry("generator", fenced(format_script(ground_truth_script(t.ground_truth))), t.id) for t in tasks]
    return lambda: ScriptedBackend(entries)


def test_ground_truth_generator_scores_perfectly():
    report = run_corpus(TASKS, ORACLE, generator=perfect_generator(TASKS))
    assert report.sr == 1.0 and report.mean_completeness == 1.0
    assert [r.iterations_used for r in report.rows] == [1, 1]
    assert report.failed_tasks["count"] == 0


def test_one_wrong_task_never_fixed():
    wrong = fenced("takeoff(4)\nturn_cw(90)\nleft(2)")
    entries = [
        ScriptEntry("generator", fenced("takeoff(2)\nforward(3)"), "a"),
        ScriptEntry("generator", wrong, "b"),
        ScriptEntry("generator", wrong, "b"),
    ]
    report = run_corpus(TASKS, LoopConfig(evaluator_mode="oracle", max_iterations=1), generator=lambda: ScriptedBackend(entries))
    assert report.sr == 0.5
    # b: takeoff and turn match, the left/right leg does not
    assert report.mean_completeness == pytest.approx((1 + 2 / 3) / 2)
    assert report.failed_tasks["ids"] == ["b"]
    assert report.failed_tasks["faulted_runs"] == 0
    b = [r for r in report.rows if r.task_id == "b"][0]
    assert (b.outcome, b.iterations_used, b.success) == ("MaxIterationsExceeded", 1, 0)


def test_faulted_run_scores_zero():
    entries = [ScriptEntry("generator", fenced("takeoff(2)\nbackward(3)"), "a")]
    report = run_corpus(TASKS[:1], ORACLE, generator=lambda: ScriptedBackend(entries))
    row = report.rows[0]
    assert (row.outcome, row.completeness, row.faulted) == ("Faulted", 0.0, True)


def test_repetitions_give_rows_per_task():
    report = run_corpus(TASKS, ORACLE, 3, generator=perfect_generator(TASKS))
    assert [(r.task_id, r.repetition) for r in report.rows] == [(t, k) for t in "ab" for k in (1, 2, 3)]
    assert all(t.repetitions == 3 for t in report.per_task)
    assert len(report.transcripts) == 6


def test_workers_do_not_change_results():
    one = run_corpus(TASKS, ORACLE, 2, generator=perfect_generator(TASKS))
    many = run_corpus(TASKS, ORACLE, 2, generator=perfect_generator(TASKS), workers=4)
    assert rows_csv(one.rows) == rows_csv(many.rows)
    assert one.summary() == many.summary()


def test_aggregate_is_order_invariant():
    report = run_corpus(TASKS, ORACLE, 2, generator=perfect_generator(TASKS))
    _, agg1, failed1 = aggregate_rows(report.rows, TASKS)
    _, agg2, failed2 = aggregate_rows(list(reversed(report.rows)), TASKS)
    assert (agg1, failed1) == (agg2, failed2)


def fix_on_feedback_generator():
    entries = [
        ScriptEntry("generator", fenced("takeoff(2)\nbackward(3)"), "a"),
        ScriptEntry("generator", fenced("takeoff(2)\nforward(3)"), "a"),
    ]
    return lambda: ScriptedBackend(entries)


def test_sweep_zero_to_one():
    points = sweep_iterations(TASKS[:1], ORACLE, [0, 1], generator=fix_on_feedback_generator())
    # k=0 keeps the first script; k=1 evaluates it and returns the refinement
    assert [(p.k, p.sr) for p in points] == [(0, 0.0), (1, 1.0)]
    assert sweep_csv(points).splitlines()[0] == "k,sr,completeness,runs"


def test_sweep_is_monotone_for_cooperative_fixture():
    points = sweep_iterations(TASKS[:1], ORACLE, [0, 1, 2, 3], generator=fix_on_feedback_generator())
    srs = [p.sr for p in points]
    assert srs == sorted(srs)


def test_sweep_repeatable():
    runs = [sweep_iterations(TASKS, ORACLE, [1, 2], generator=perfect_generator(TASKS)) for _ in range(2)]
    assert runs[0] == runs[1]


def test_sweep_empty_corpus():
    assert sweep_iterations([], ORACLE, [0, 1], generator=perfect_generator(TASKS)) == []
    with pytest.raises(ValueError):
        sweep_iterations(TASKS, ORACLE, [], generator=perfect_generator(TASKS))


def test_write_report(tmp_path):
    report = run_corpus(TASKS, ORACLE, generator=perfect_generator(TASKS))
    paths = write_report(report, tmp_path)
    assert {p.name for p in paths} >= {"runs.csv", "summary.json", "a_r1.json", "b_r1.json"}
    rows = list(csv.DictReader(io.StringIO((tmp_path / "runs.csv").read_text())))
    assert [r["task_id"] for r in rows] == ["a", "b"]
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["aggregate"]["sr"] == 1.0
    assert "100.0%" in format_table(report)


def test_shipped_corpus_shape():
    corpus = default_corpus()
    assert sum(t.tier == "basic" for t in corpus) == 44
    assert sum(t.tier == "advanced" for t in corpus) == 20
    for t in corpus:
        trace = run(ground_truth_script(t.ground_truth))
        assert all(s.ok for s in trace.steps), t.id
        replay = trace.executed_transitions()
        assert len(replay) == len(t.ground_truth)
        for got, want in zip(replay, t.ground_truth):
            assert max(abs(x - y) for x, y in zip(got.as_list(), want.as_list())) < 1e-9, t.id


def test_corpus_round_trip(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(dump_corpus(TASKS))
    assert load_corpus(path) == TASKS


@pytest.mark.parametrize(
    "record",
    [
        {"id": "x", "tier": "basic", "description": "d", "ground_truth": []},
        {"id": "x", "tier": "expert", "description": "d", "ground_truth": [[0, 0, -1, 0]]},
        {"id": "x", "tier": "advanced", "description": "d", "ground_truth": [[0, 0, -1, 0]]},
        {"id": "x", "tier": "basic", "description": "d", "ground_truth": [[0, 0, -1]]},
        {"id": "x", "tier": "basic", "ground_truth": [[0, 0, -1, 0]]},
    ],
)
def test_corpus_validation(tmp_path, record):
    path = tmp_path / "c.json"
    path.write_text(json.dumps([record]))
    with pytest.raises(CorpusError):
        load_corpus(path)


def test_duplicate_ids(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(dump_corpus([TASKS[0], TASKS[0]]))
    with pytest.raises(CorpusError):
        load_corpus(path)


def test_ground_truth_script_rejects_diagonals():
    with pytest.raises(CorpusError):
        ground_truth_script([Transition(0, 0, -2, 0), Transition(1, 1, 0, 0)])


@pytest.fixture(scope="module")
def advanced_dataset():
    return build_precision_dataset(default_corpus("advanced"), seed=0)


def test_precision_dataset_is_balanced(advanced_dataset):
    assert len(advanced_dataset) == 40
    assert sum(i.label == "Correct" for i in advanced_dataset) == 20
    assert build_precision_dataset(default_corpus("advanced"), seed=0) == advanced_dataset
    assert build_precision_dataset(default_corpus("advanced"), seed=1) != advanced_dataset


def test_oracle_precision_is_perfect(advanced_dataset):
    report = evaluator_precision(advanced_dataset, EvaluatorSetup("oracle"))
    assert (report.precision_correct, report.precision_incorrect, report.precision_total) == (1.0, 1.0, 1.0)


def test_always_yes_evaluator(advanced_dataset):
    entries = [ScriptEntry("evaluator", "VERDICT: YES\nLooks right.")] * len(advanced_dataset)
    from uavloop.agents import EvaluatorPrompt

    setup = EvaluatorSetup("external", ScriptedBackend(entries), EvaluatorPrompt.load())
    report = evaluator_precision(advanced_dataset, setup)
    assert (report.precision_correct, report.precision_incorrect, report.precision_total) == (1.0, 0.0, 0.5)


def test_exhausted_evaluator_counts_as_wrong(advanced_dataset):
    from uavloop.agents import EvaluatorPrompt

    setup = EvaluatorSetup("external", ScriptedBackend([]), EvaluatorPrompt.load())
    assert evaluator_precision(advanced_dataset[:2], setup).precision_total == 0.0


def test_mutations():
    tol = Tolerances()
    assert mutate(Command(Verb.LEFT, 3), "flip", tol) == Command(Verb.RIGHT, 3)
    assert mutate(Command(Verb.TURN_CW, 90), "magnitude", tol).argument == 135
    assert mutate(Command(Verb.FORWARD, 0.5), "magnitude", tol).argument == 1.5
    with pytest.raises(ValueError):
        mutate(Command(Verb.LEFT, 3), "swap", tol)


def test_is_correct_evaluation(advanced_dataset):
    correct, incorrect = advanced_dataset[0], advanced_dataset[1]
    assert is_correct_evaluation(correct, Verdict(Decision.YES))
    assert not is_correct_evaluation(incorrect, Verdict(Decision.YES))
    assert is_correct_evaluation(incorrect, Verdict(Decision.NO, "action 2"))
    assert not is_correct_evaluation(correct, None)
