"""Command line: ``pract {run,optimize,eval,gen-suite,report}``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .envs.suites import ENV_IDS, generate_suite, write_suite
from .executor import AgentMode, agent_action_space, run_episode
from .harness import RunConfig, emit_report, evaluate, load_run, optimize_run, split_tasks
from .reflection import format_score
from .store import load_principles


def _principles(cfg: RunConfig, path: str | None, space):
    if cfg.agent_mode is not AgentMode.PRACT:
        return None
    return load_principles(path) if path else cfg.initial_principles(space)


def cmd_run(args: argparse.Namespace) -> int:
    cfg = RunConfig.from_file(args.config)
    suite = cfg.load_suite()
    task = suite.tasks[args.task]
    space = agent_action_space(suite.actions, cfg.agent_mode)
    backend = cfg.make_backends().executor
    t = run_episode(cfg.executor_config(), task.query, suite.make_env(task), _principles(cfg, args.principles, space), backend)
    print(f"Task: {t.query}")
    for i, step in enumerate(t.steps, 1):
        print(f"Action {i}: {step.action.render()}")
        print(f"Observation {i}: {step.observation.text}")
    reward = "none" if t.reward is None else format_score(t.reward)
    print(f"terminated={t.terminated.value} reward={reward}")
    return 0


def cmd_optimize(args: argparse.Namespace) -> int:
    cfg = RunConfig.from_file(args.config)
    run = optimize_run(cfg, args.output)
    for rec in run.seed_runs:
        print(f"seed {rec.seed}: stop_iter={rec.stop_iter} best_version={rec.best_version} test={format_score(rec.test_score)}")
    print(f"test mean over {len(run.seed_runs)} seeds: {format_score(run.test_mean)}")
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    cfg = RunConfig.from_file(args.config)
    suite = cfg.load_suite()
    tasks = list(suite.tasks)
    if args.split != "all":
        parts = dict(zip(("train", "val", "test"), split_tasks(tasks, cfg.split_ratio, args.seed)))
        tasks = parts[args.split]
    space = agent_action_space(suite.actions, cfg.agent_mode)
    ev = evaluate(
        tasks,
        _principles(cfg, args.principles, space),
        cfg.executor_config(),
        cfg.make_backends().executor,
        suite.make_env,
        cfg.workers,
    )
    for task, r in zip(tasks, ev.rewards):
        print(f"{task.task_id}\t{format_score(r)}")
    print(f"mean\t{format_score(ev.mean)}")
    return 0


def cmd_gen_suite(args: argparse.Namespace) -> int:
    suite = generate_suite(args.env, args.seed)
    if args.out:
        write_suite(suite, args.out)
        print(f"wrote {len(suite.tasks)} {args.env} tasks to {args.out}")
    else:
        sys.stdout.write(suite.dumps())
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    run = load_run(args.run)
    paths = emit_report(run, args.run)
    print(Path(paths["results"]).read_text(encoding="utf-8"), end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pract", description="Principle-conditioned agents and principle optimization.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run one episode and print its trajectory")
    r.add_argument("--config", required=True)
    r.add_argument("--task", type=int, default=0, help="task index in the suite")
    r.add_argument("--principles", help="principle file (defaults to the config's seed principles)")
    r.set_defaults(func=cmd_run)

    o = sub.add_parser("optimize", help="full optimization run")
    o.add_argument("--config", required=True)
    o.add_argument("--output", help="override the config's output_dir")
    o.set_defaults(func=cmd_optimize)

    e = sub.add_parser("eval", help="score a principle file on a split")
    e.add_argument("--config", required=True)
    e.add_argument("--principles")
    e.add_argument("--split", choices=("train", "val", "test", "all"), default="test")
    e.add_argument("--seed", type=int, default=0, help="split seed")
    e.set_defaults(func=cmd_eval)

    g = sub.add_parser("gen-suite", help="generate a task suite from a seed")
    g.add_argument("--env", required=True, choices=ENV_IDS)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out")
    g.set_defaults(func=cmd_gen_suite)

    rep = sub.add_parser("report", help="re-emit CSVs for a run directory")
    rep.add_argument("--run", required=True)
    rep.set_defaults(func=cmd_report)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
