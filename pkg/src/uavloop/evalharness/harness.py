"""Corpus runs, iteration sweeps and their report files.

Report formats
--------------
``runs.csv``
    One row per (task, repetition): ``task_id, tier, repetition, outcome,
    iterations_used, completeness, success, faulted, executed_actions``.
``summary.json``
    ``aggregate`` (``runs``, ``sr``, ``completeness``, ``per_tier``),
    ``per_task`` entries and the ``failed_tasks`` breakdown.
``sweep.csv``
    ``k, sr, completeness, runs`` for plotting.
"""

from __future__ import annotations

import csv
import io
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from statistics import fmean
from typing import Callable, Sequence

from uavloop.evalharness.corpus import TaskSpec
from uavloop.evalharness.matching import DEFAULT_TOLERANCES, Tolerances, completeness, success
from uavloop.llmclient import BackendConfig, ChatBackend, make_backend
from uavloop.looprunner import LoopConfig, LoopResult, Outcome, Prompts, run_loop, run_open_loop, transcript
from uavloop.sim import SimConfig

BackendSource = BackendConfig | ChatBackend | Callable[[], ChatBackend] | None


def backend_getter(source: BackendSource) -> Callable[[], ChatBackend | None]:
    """Per-run backend factory.

    Scripted configs are re-read for every run so each (task, repetition)
    replays its script from the start; HTTP configs share one client.
    """
    if source is None:
        return lambda: None
    if isinstance(source, BackendConfig):
        if source.kind == "scripted":
            return lambda: make_backend(source)
        shared = make_backend(source)
        return lambda: shared
    if hasattr(source, "complete"):
        return lambda: source  # type: ignore[return-value]
    return source  # type: ignore[return-value]


@dataclass(frozen=True)
class RunRow:
    task_id: str
    tier: str
    repetition: int
    outcome: str
    iterations_used: int
    completeness: float
    success: int
    faulted: bool
    executed_actions: int


@dataclass
class TaskScore:
    id: str
    tier: str
    repetitions: int
    completeness: list[float]
    success: list[int]
    iterations_used: list[int]

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "tier": self.tier,
            "repetitions": self.repetitions,
            "completeness": self.completeness,
            "success": self.success,
            "iterations_used": self.iterations_used,
        }


@dataclass
class ScoreReport:
    rows: list[RunRow]
    per_task: list[TaskScore]
    aggregate: dict
    failed_tasks: dict
    transcripts: list[dict] = field(default_factory=list, repr=False)

    @property
    def sr(self) -> float:
        return self.aggregate["sr"]

    @property
    def mean_completeness(self) -> float:
        return self.aggregate["completeness"]

    def summary(self) -> dict:
        return {
            "aggregate": self.aggregate,
            "failed_tasks": self.failed_tasks,
            "per_task": [t.to_dict() for t in self.per_task],
        }


def score_result(result: LoopResult, task: TaskSpec, tolerances: Tolerances, sim_config: SimConfig | None) -> tuple[float, int, int]:
    if result.outcome is Outcome.FAULTED:
        return 0.0, 0, 0
    executed = result.final_trace(sim_config).executed_transitions()
    return (
        completeness(executed, task.ground_truth, tolerances),
        success(executed, task.ground_truth, tolerances),
        len(executed),
    )


def aggregate_rows(rows: Sequence[RunRow], corpus: Sequence[TaskSpec]) -> tuple[list[TaskScore], dict, dict]:
    by_task: dict[str, list[RunRow]] = {}
    for row in rows:
        by_task.setdefault(row.task_id, []).append(row)
    per_task = []
    for task in corpus:
        task_rows = sorted(by_task.get(task.id, []), key=lambda r: r.repetition)
        if not task_rows:
            continue
        per_task.append(
            TaskScore(
                task.id,
                task.tier,
                len(task_rows),
                [r.completeness for r in task_rows],
                [r.success for r in task_rows],
                [r.iterations_used for r in task_rows],
            )
        )

    def stats(subset: Sequence[RunRow]) -> dict:
        if not subset:
            return {"runs": 0, "sr": 0.0, "completeness": 0.0}
        return {
            "runs": len(subset),
            "sr": fmean(r.success for r in subset),
            "completeness": fmean(r.completeness for r in subset),
        }

    # sort first so float sums do not depend on task order
    ordered = sorted(rows, key=lambda r: (r.task_id, r.repetition))
    aggregate = stats(ordered)
    aggregate["per_tier"] = {tier: stats([r for r in ordered if r.tier == tier]) for tier in sorted({r.tier for r in ordered})}
    failed = [r for r in ordered if r.success == 0]
    failed_ids = sorted({r.task_id for r in failed})
    failed_tasks = {
        "count": len(failed_ids),
        "ids": failed_ids,
        "failed_runs": len(failed),
        "mean_completeness": fmean(r.completeness for r in failed) if failed else None,
        "faulted_runs": sum(r.faulted for r in ordered),
    }
    return per_task, aggregate, failed_tasks


def run_corpus(
    corpus: Sequence[TaskSpec],
    config: LoopConfig,
    repetitions: int = 1,
    *,
    generator: BackendSource,
    evaluator: BackendSource = None,
    prompts: Prompts | None = None,
    workers: int = 1,
    open_loop: bool = False,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
    sim_config: SimConfig | None = None,
) -> ScoreReport:
    """Run the loop for every task x repetition and score the returned scripts."""
    if repetitions < 1:
        raise ValueError("repetitions must be >= 1")
    prompts = prompts or Prompts.default()
    get_generator = backend_getter(generator)
    get_evaluator = backend_getter(evaluator)
    jobs = [(task, rep) for task in corpus for rep in range(1, repetitions + 1)]

    def one(job: tuple[TaskSpec, int]) -> tuple[RunRow, dict]:
        task, rep = job
        if open_loop:
            result = run_open_loop(task.description, get_generator(), prompts, task_id=task.id)
        else:
            result = run_loop(
                task.description,
                config,
                get_generator(),
                get_evaluator(),
                prompts,
                ground_truth=task.ground_truth,
                task_id=task.id,
                sim_config=sim_config,
                tolerances=tolerances,
            )
        comp, succ, n_exec = score_result(result, task, tolerances, sim_config)
        row = RunRow(
            task.id,
            task.tier,
            rep,
            result.outcome.value,
            result.iterations_used,
            comp,
            succ,
            result.outcome is Outcome.FAULTED,
            n_exec,
        )
        record = transcript(task.description, config, result, task_id=task.id)
        record["repetition"] = rep
        return row, record

    if workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, jobs))
    else:
        results = [one(job) for job in jobs]

    rows = [r for r, _ in results]
    per_task, aggregate, failed = aggregate_rows(rows, corpus)
    transcripts = [t for _, t in results] if config.record_transcripts else []
    return ScoreReport(rows, per_task, aggregate, failed, transcripts)


@dataclass(frozen=True)
class SweepPoint:
    k: int
    sr: float
    completeness: float
    runs: int


def sweep_iterations(
    corpus: Sequence[TaskSpec],
    config: LoopConfig,
    k_values: Sequence[int],
    repetitions: int = 1,
    **kwargs,
) -> list[SweepPoint]:
    """SR and completeness per iteration budget; k = 0 keeps the initial script unevaluated."""
    if not k_values:
        raise ValueError("k_values must be non-empty")
    if any(k < 0 for k in k_values):
        raise ValueError("k values must be >= 0")
    if not corpus:
        return []
    points = []
    for k in k_values:
        if k == 0:
            report = run_corpus(corpus, config, repetitions, open_loop=True, **kwargs)
        else:
            report = run_corpus(corpus, replace(config, max_iterations=k), repetitions, **kwargs)
        points.append(SweepPoint(k, report.sr, report.mean_completeness, report.aggregate["runs"]))
    return points


def rows_csv(rows: Sequence[RunRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["task_id", "tier", "repetition", "outcome", "iterations_used", "completeness", "success", "faulted", "executed_actions"])
    for r in rows:
        writer.writerow([r.task_id, r.tier, r.repetition, r.outcome, r.iterations_used, repr(r.completeness), r.success, int(r.faulted), r.executed_actions])
    return buf.getvalue()


def sweep_csv(points: Sequence[SweepPoint]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["k", "sr", "completeness", "runs"])
    for p in points:
        writer.writerow([p.k, repr(p.sr), repr(p.completeness), p.runs])
    return buf.getvalue()


def _dump(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def write_report(report: ScoreReport, out_dir: str | os.PathLike) -> list[Path]:
    out = Path(out_dir)
    written = [out / "runs.csv", out / "summary.json"]
    _dump(written[0], rows_csv(report.rows))
    _dump(written[1], json.dumps(report.summary(), indent=2, sort_keys=True) + "\n")
    for t in report.transcripts:
        path = out / "transcripts" / f"{t['task_id']}_r{t['repetition']}.json"
        _dump(path, json.dumps(t, indent=2, sort_keys=True) + "\n")
        written.append(path)
    return written


def format_table(report: ScoreReport) -> str:
    lines = [f"{'tier':<10}{'runs':>6}{'SR':>10}{'Completeness':>15}"]
    for tier, s in report.aggregate["per_tier"].items():
        lines.append(f"{tier:<10}{s['runs']:>6}{s['sr'] * 100:>9.1f}%{s['completeness'] * 100:>14.1f}%")
    a = report.aggregate
    lines.append(f"{'all':<10}{a['runs']:>6}{a['sr'] * 100:>9.1f}%{a['completeness'] * 100:>14.1f}%")
    f = report.failed_tasks
    mean = "n/a" if f["mean_completeness"] is None else f"{f['mean_completeness'] * 100:.1f}%"
    lines.append(f"failed task ids: {f['count']}, mean completeness of failed runs: {mean}")
    return "\n".join(lines)
