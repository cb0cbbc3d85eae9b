"""Command-line entry point.

Settings merge in three layers: built-in defaults, then a JSON ``--config``
file, then command-line flags. Example config::

    {
      "backend": {"kind": "http", "endpoint_url": "https://api.openai.com/v1",
                  "api_key_env_var": "OPENAI_API_KEY", "model": "o3-mini"},
      "evaluator_backend": {"kind": "http", "model": "o3-mini"},
      "loop": {"max_iterations": 6, "evaluator_mode": "external"},
      "corpus": "my_tasks.json", "out": "results", "workers": 4,
      "repetitions": 3, "seed": 0
    }

``run`` exits 0 when the script is accepted, 2 when the iteration budget ran
out (human review needed) and 1 on faults or bad input.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

from uavloop.agents import EvaluatorPrompt, GeneratorPrompt
from uavloop.evalharness.corpus import CorpusError, default_corpus_path, ground_truth_script, load_corpus
from uavloop.evalharness.harness import format_table, run_corpus, sweep_csv, sweep_iterations, write_report
from uavloop.evalharness.precision import EvaluatorSetup, build_precision_dataset, evaluator_precision
from uavloop.flightlang import format_script, run
from uavloop.llmclient import BackendConfig, make_backend
from uavloop.looprunner import LoopConfig, Outcome, Prompts, run_loop, transcript, write_transcript

log = logging.getLogger("uavloop")

EXIT_OK, EXIT_FAULT, EXIT_NEEDS_HUMAN = 0, 1, 2


class CliError(Exception):
    pass


@dataclass
class CliConfig:
    backend: BackendConfig = field(default_factory=BackendConfig)
    evaluator_backend: BackendConfig | None = None
    loop: LoopConfig = field(default_factory=LoopConfig)
    corpus: str | None = None
    out: str = "uavloop-out"
    workers: int = 1
    seed: int = 0
    repetitions: int = 1
    generator_prompt: str | None = None
    evaluator_prompt: str | None = None


def session_path(name: str) -> Path:
    """Resolve ``--script``: a file path, or the name of a shipped session."""
    path = Path(name)
    if path.exists():
        return path
    shipped = Path(str(resources.files("uavloop") / "data" / "sessions" / f"{name}.json"))
    if shipped.exists():
        return shipped
    raise CliError(f"script file not found: {name}")


def build_config(args: argparse.Namespace) -> CliConfig:
    cfg = CliConfig()
    if args.config:
        path = Path(args.config)
        if not path.is_file():
            raise CliError(f"config file not found: {path}")
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise CliError(f"{path}: invalid JSON: {exc}") from exc
        try:
            if "backend" in data:
                cfg.backend = BackendConfig.from_dict(data["backend"])
            if data.get("evaluator_backend") is not None:
                cfg.evaluator_backend = BackendConfig.from_dict(data["evaluator_backend"])
            if "loop" in data:
                cfg.loop = LoopConfig(**data["loop"])
        except (TypeError, ValueError) as exc:
            raise CliError(f"{path}: {exc}") from exc
        for key in ("corpus", "out", "workers", "seed", "repetitions", "generator_prompt", "evaluator_prompt"):
            if key in data:
                setattr(cfg, key, data[key])

    if args.backend:
        cfg.backend = replace(cfg.backend, kind=args.backend)
    if args.script:
        script = str(session_path(args.script))
        cfg.backend = replace(cfg.backend, kind=args.backend or "scripted", script_path=script)
        if cfg.evaluator_backend is not None:
            cfg.evaluator_backend = replace(cfg.evaluator_backend, kind=args.backend or "scripted", script_path=script)
    loop_overrides = {}
    if args.evaluator:
        loop_overrides["evaluator_mode"] = args.evaluator
    if args.observation:
        loop_overrides["observation_mode"] = args.observation
    if args.max_iterations is not None:
        loop_overrides["max_iterations"] = args.max_iterations
    try:
        cfg.loop = replace(cfg.loop, **loop_overrides)
    except ValueError as exc:
        raise CliError(str(exc)) from exc
    for key in ("repetitions", "seed", "out", "workers"):
        value = getattr(args, key)
        if value is not None:
            setattr(cfg, key, value)
    if getattr(args, "corpus", None):
        cfg.corpus = args.corpus

    if cfg.workers < 1 or cfg.repetitions < 1:
        raise CliError("--workers and --repetitions must be >= 1")
    needs_backend = getattr(args, "needs_backend", True)
    if getattr(args, "command", None) == "precision":
        needs_backend = cfg.loop.evaluator_mode != "oracle"
    for b in (cfg.backend, cfg.evaluator_backend) if needs_backend else ():
        if b is not None and b.kind == "scripted":
            if not b.script_path:
                raise CliError("the scripted backend needs --script")
            if not Path(b.script_path).is_file():
                raise CliError(f"script file not found: {b.script_path}")
    for p in (cfg.generator_prompt, cfg.evaluator_prompt):
        if p and not Path(p).is_file():
            raise CliError(f"prompt file not found: {p}")
    if cfg.corpus and not Path(cfg.corpus).is_file():
        raise CliError(f"corpus file not found: {cfg.corpus}")
    return cfg


def _corpus(cfg: CliConfig, tier: str | None = None):
    path = cfg.corpus or default_corpus_path()
    try:
        tasks = load_corpus(path)
    except (OSError, CorpusError) as exc:
        raise CliError(f"cannot load corpus {path}: {exc}") from exc
    return [t for t in tasks if tier is None or t.tier == tier]


def _prompts(cfg: CliConfig) -> Prompts:
    return Prompts(GeneratorPrompt.load(cfg.generator_prompt), EvaluatorPrompt.load(cfg.evaluator_prompt))


def _evaluator_source(cfg: CliConfig):
    if cfg.loop.evaluator_mode != "external":
        return None
    return cfg.evaluator_backend or cfg.backend


def cmd_run(args: argparse.Namespace, cfg: CliConfig) -> int:
    task_text = args.task
    ground_truth = None
    task_id = args.task_id
    if task_id:
        matches = [t for t in _corpus(cfg) if t.id == task_id]
        if not matches:
            raise CliError(f"task {task_id!r} not in corpus")
        task_text, ground_truth = matches[0].description, matches[0].ground_truth
    if not task_text and cfg.backend.script_path:
        session = json.loads(Path(cfg.backend.script_path).read_text(encoding="utf-8"))
        task_text = session.get("task") if isinstance(session, dict) else None
    if not task_text:
        raise CliError("give a task description or --task-id")
    if cfg.loop.evaluator_mode == "oracle" and ground_truth is None:
        raise CliError("--evaluator oracle needs --task-id (ground truth)")

    prompts = _prompts(cfg)
    generator = make_backend(cfg.backend)
    if cfg.loop.evaluator_mode != "external":
        evaluator = None
    elif cfg.evaluator_backend is None:
        evaluator = generator
    else:
        evaluator = make_backend(cfg.evaluator_backend)

    result = run_loop(task_text, cfg.loop, generator, evaluator, prompts, ground_truth=ground_truth, task_id=task_id)
    for rec in result.per_iteration:
        print(f"=== Iteration {rec.iteration} ===")
        print(rec.observation_text or "(no observation: the script could not be used)")
        print(f"VERDICT: {rec.verdict.decision.value}")
        if rec.verdict.explanation:
            print(rec.verdict.explanation)
    if cfg.loop.record_transcripts:
        path = Path(cfg.out) / "transcript.json"
        write_transcript(path, transcript(task_text, cfg.loop, result, task_id=task_id))
        print(f"transcript: {path}")

    if result.outcome is Outcome.ACCEPTED:
        print(f"Accepted after {result.iterations_used} iteration(s).")
        print(format_script(result.final_script))
        return EXIT_OK
    if result.outcome is Outcome.MAX_ITERATIONS:
        print(f"No accepted script after {result.iterations_used} iteration(s); human intervention required.")
        return EXIT_NEEDS_HUMAN
    print(f"fault: {result.fault}", file=sys.stderr)
    return EXIT_FAULT


def cmd_bench(args: argparse.Namespace, cfg: CliConfig) -> int:
    corpus = _corpus(cfg, args.tier)
    report = run_corpus(
        corpus,
        cfg.loop,
        cfg.repetitions,
        generator=cfg.backend,
        evaluator=_evaluator_source(cfg),
        prompts=_prompts(cfg),
        workers=cfg.workers,
    )
    write_report(report, cfg.out)
    print(format_table(report))
    print(f"SR {report.sr * 100:.1f}%, completeness {report.mean_completeness * 100:.1f}%")
    return EXIT_FAULT if report.failed_tasks["faulted_runs"] else EXIT_OK


def _parse_k(text: str) -> list[int]:
    try:
        if ".." in text:
            lo, hi = text.split("..", 1)
            return list(range(int(lo), int(hi) + 1))
        return [int(k) for k in text.split(",") if k.strip()]
    except ValueError as exc:
        raise CliError(f"bad --k value {text!r}; use e.g. 0,1,2 or 0..6") from exc


def cmd_sweep(args: argparse.Namespace, cfg: CliConfig) -> int:
    corpus = _corpus(cfg, args.tier)
    points = sweep_iterations(
        corpus,
        cfg.loop,
        _parse_k(args.k),
        cfg.repetitions,
        generator=cfg.backend,
        evaluator=_evaluator_source(cfg),
        prompts=_prompts(cfg),
        workers=cfg.workers,
    )
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "sweep.csv").write_text(sweep_csv(points), encoding="utf-8")
    print(f"{'k':>3}{'SR':>10}{'Completeness':>15}")
    for p in points:
        print(f"{p.k:>3}{p.sr * 100:>9.1f}%{p.completeness * 100:>14.1f}%")
    return EXIT_OK


def cmd_precision(args: argparse.Namespace, cfg: CliConfig) -> int:
    corpus = _corpus(cfg, args.tier)
    dataset = build_precision_dataset(corpus, seed=cfg.seed)
    sections = {s.strip() for s in args.sections.split(",")}
    if cfg.loop.evaluator_mode == "oracle":
        setup = EvaluatorSetup("oracle")
    elif cfg.loop.evaluator_mode == "external":
        prompt = EvaluatorPrompt.load(
            cfg.evaluator_prompt, use_rules="rules" in sections, use_references="references" in sections
        )
        setup = EvaluatorSetup("external", make_backend(cfg.evaluator_backend or cfg.backend), prompt, cfg.loop.verdict_rule)
    else:
        raise CliError("precision supports --evaluator oracle or external")
    report = evaluator_precision(dataset, setup, cfg.repetitions)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "precision.json").write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    items = [
        {"task_id": i.task_id, "label": i.label, "mutation": i.mutation, "observation": i.observation} for i in dataset
    ]
    (out / "precision_dataset.json").write_text(json.dumps(items, indent=2) + "\n", encoding="utf-8")
    print(f"items: {len(dataset)}  evaluations: {report.evaluations}")
    print("precision correct / incorrect / total: "
          f"{report.precision_correct * 100:.1f} / {report.precision_incorrect * 100:.1f} / {report.precision_total * 100:.1f}")
    return EXIT_OK


def cmd_validate_corpus(args: argparse.Namespace, cfg: CliConfig) -> int:
    tasks = _corpus(cfg)
    problems = 0
    for t in tasks:
        try:
            trace = run(ground_truth_script(t.ground_truth))
        except CorpusError as exc:
            print(f"{t.id}: {exc}", file=sys.stderr)
            problems += 1
            continue
        if any(s.error for s in trace.steps):
            print(f"{t.id}: ground truth is not flyable", file=sys.stderr)
            problems += 1
    counts = {tier: sum(t.tier == tier for t in tasks) for tier in ("basic", "advanced")}
    print(f"{len(tasks)} tasks ({counts['basic']} basic, {counts['advanced']} advanced), {problems} problem(s)")
    return EXIT_FAULT if problems else EXIT_OK


def cmd_export_session(args: argparse.Namespace, cfg: CliConfig) -> int:
    """Write a scripted session whose generator replies with each task's ground-truth script."""
    entries = [
        {"agent": "generator", "task": t.id, "content": f"```\n{format_script(ground_truth_script(t.ground_truth))}\n```"}
        for t in _corpus(cfg, args.tier)
    ]
    path = Path(args.output)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps({"entries": entries}, indent=2) + "\n", encoding="utf-8")
    print(f"wrote {len(entries)} entries to {path}")
    return EXIT_OK


def _global_flags() -> argparse.ArgumentParser:
    # SUPPRESS so flags work both before and after the subcommand
    p = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--backend", choices=["http", "scripted"])
    p.add_argument("--script", help="scripted session file (or a shipped session name)")
    p.add_argument("--evaluator", choices=["external", "self", "oracle"])
    p.add_argument("--observation", choices=["semantic", "numeric"])
    p.add_argument("--max-iterations", type=int)
    p.add_argument("--repetitions", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output directory")
    p.add_argument("--workers", type=int)
    p.add_argument("-v", "--verbose", action="store_true")
    return p


_FLAG_NAMES = (
    "config", "backend", "script", "evaluator", "observation", "max_iterations",
    "repetitions", "seed", "out", "workers", "verbose",
)


def build_parser() -> argparse.ArgumentParser:
    common = _global_flags()
    parser = argparse.ArgumentParser(prog="uavloop", description=__doc__.splitlines()[0], parents=[common])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", parents=[common], help="run the closed loop on one task")
    p.add_argument("task", nargs="?", help="task description")
    p.add_argument("--task-id", help="take the task (and ground truth) from the corpus")
    p.add_argument("--corpus")
    p.set_defaults(func=cmd_run)

    for name, func, helptext in (
        ("bench", cmd_bench, "score a corpus"),
        ("sweep", cmd_sweep, "sweep the iteration budget"),
        ("precision", cmd_precision, "evaluator precision benchmark"),
        ("validate-corpus", cmd_validate_corpus, "check a corpus file"),
        ("export-session", cmd_export_session, "write a ground-truth scripted session"),
    ):
        p = sub.add_parser(name, parents=[common], help=helptext)
        p.add_argument("corpus", nargs="?", help="corpus JSON (default: the shipped corpus)")
        if name != "validate-corpus":
            p.add_argument("--tier", choices=["basic", "advanced"])
        p.set_defaults(func=func, needs_backend=name in ("bench", "sweep"))
        if name == "sweep":
            p.add_argument("--k", default="0..6", help="iteration budgets, e.g. 0,1,2 or 0..10")
        if name == "precision":
            p.set_defaults(tier="advanced")
            p.add_argument("--sections", default="roles,rules,references", help="evaluator prompt sections to include")
        if name == "export-session":
            p.add_argument("-o", "--output", required=True)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    for name in _FLAG_NAMES:
        if not hasattr(args, name):
            setattr(args, name, None)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = build_config(args)
        return args.func(args, cfg)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAULT
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAULT


if __name__ == "__main__":
    sys.exit(main())
