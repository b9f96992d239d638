"""Training runs: split tasks, iterate execute -> reflect -> optimize, stop early
on validation reward, report test scores averaged over seeds.

Two protocols:

* reward protocol (``train``): 3:1:1 train/val/test split, reward-based
  reflection on sampled training batches, early stopping on validation,
  best-validation principles scored on test.
* self protocol (``train_self_reflect``): no split and no reward in the
  reflector; every iteration executes the whole task set, self-reflects on a
  sampled batch of those trajectories and optimizes, for a fixed number of
  iterations.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import random
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Callable, Sequence

from .backend import BackendConfig, RoleBackends, make_backend
from .core import ActionSpec, PrincipleSet, Provenance, ReflectionMode, Terminated, Trajectory, seed_principles
from .envs.suites import Suite, Task, generate_suite, load_task_suite
from .executor import AgentMode, ExecutorConfig, agent_action_space, run_batch
from .reflection import FailedReflection, ReflectorConfig, format_score, reflect_all, usable
from .rpo import RpoConfig, optimize
from .store import PrincipleStore, load_principles, write_jsonl, write_reflections, write_trajectories

logger = logging.getLogger(__name__)

ROLES = ("executor", "reflector", "optimizer")
SELF_PROTOCOL_NOTE = (
    "self-reflection protocol: reflection tasks are the test tasks; the reflector never sees "
    "rewards or ground truth, so there is no data leakage"
)


class TooFewTasks(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    env_id: str
    backends: dict[str, BackendConfig]
    suite: str | None = None
    suite_seed: int = 0
    agent_mode: AgentMode = AgentMode.PRACT
    reflector_mode: ReflectionMode = ReflectionMode.REWARD
    rpo_method: str = "batch"
    batch_size: int = 10
    max_iters: int = 10
    patience: int = 3
    split_ratio: tuple[int, int, int] = (3, 1, 1)
    seeds: tuple[int, ...] = (0,)
    templates: dict[str, str] = field(default_factory=dict)
    template_dir: str | None = None
    seed_principles: str | None = None
    max_steps: int = 15
    parse_retries: int = 2
    max_reflection_chars: int = 4000
    max_principle_chars: int = 1500
    workers: int = 1
    output_dir: str = "runs/latest"
    base_dir: str = "."

    def __post_init__(self) -> None:
        missing = [r for r in ROLES if r not in self.backends]
        if missing:
            raise ValueError(f"backend configs missing for roles {missing}")
        if min(self.batch_size, self.max_iters, self.patience) < 1:
            raise ValueError("batch_size, max_iters and patience must be positive")
        if len(self.split_ratio) != 3 or min(self.split_ratio) < 1:
            raise ValueError("split_ratio must be three positive integers")
        if not self.seeds:
            raise ValueError("need at least one seed")

    @classmethod
    def from_dict(cls, d: dict[str, Any], base_dir: str | Path = ".") -> RunConfig:
        d = dict(d)
        d["backends"] = {k: BackendConfig.from_dict(v) for k, v in d["backends"].items()}
        for key, conv in (("agent_mode", AgentMode), ("reflector_mode", ReflectionMode)):
            if key in d:
                d[key] = conv(d[key])
        for key in ("split_ratio", "seeds"):
            if key in d:
                d[key] = tuple(d[key])
        d["base_dir"] = str(base_dir)
        return cls(**d)

    @classmethod
    def from_file(cls, path: str | Path) -> RunConfig:
        path = Path(path)
        return cls.from_dict(json.loads(path.read_text(encoding="utf-8")), path.parent)

    def snapshot(self) -> dict[str, Any]:
        """Config as recorded in the run; machine-local paths are left out."""
        d = asdict(self)
        for key in ("output_dir", "base_dir"):
            d.pop(key)
        d["agent_mode"] = self.agent_mode.value
        d["reflector_mode"] = self.reflector_mode.value
        d["split_ratio"] = list(self.split_ratio)
        d["seeds"] = list(self.seeds)
        return d

    def resolve(self, path: str) -> Path:
        p = Path(path)
        return p if p.is_absolute() else Path(self.base_dir) / p

    def executor_config(self) -> ExecutorConfig:
        return ExecutorConfig(
            self.agent_mode,
            self.max_steps,
            self.parse_retries,
            self.templates.get("executor", "executor"),
            self._template_dir(),
        )

    def reflector_config(self) -> ReflectorConfig:
        return ReflectorConfig(
            self.reflector_mode, self.templates.get("reflect", "reflect"), self._template_dir(), self.max_reflection_chars
        )

    def rpo_config(self) -> RpoConfig:
        t = self.templates
        return RpoConfig(
            self.rpo_method,
            self.max_principle_chars,
            t.get("optimize", "optimize"),
            t.get("summarize", "summarize"),
            t.get("concat", "concat"),
            t.get("candidate", "candidate"),
            self._template_dir(),
        )

    def _template_dir(self) -> str | None:
        return str(self.resolve(self.template_dir)) if self.template_dir else None

    def load_suite(self) -> Suite:
        return load_task_suite(self.resolve(self.suite)) if self.suite else generate_suite(self.env_id, self.suite_seed)

    def make_backends(self) -> RoleBackends:
        return RoleBackends(*(make_backend(self.backends[r], self.base_dir) for r in ROLES))

    def initial_principles(self, space: Sequence[ActionSpec]) -> PrincipleSet:
        if self.seed_principles:
            return load_principles(self.resolve(self.seed_principles))
        return seed_principles(space)


@dataclass
class IterationRecord:
    iteration: int
    principle_version: int
    train_reward: float
    val_reward: float | None
    no_update: bool = False
    failed_reflections: int = 0


@dataclass
class SeedRun:
    seed: int
    iterations: list[IterationRecord] = field(default_factory=list)
    best_version: int | None = None
    best_val: float | None = None
    best_iter: int | None = None
    stop_iter: int = 0
    test_score: float | None = None
    split: dict[str, list[str]] = field(default_factory=dict)


@dataclass
class OptimizationRun:
    config: dict[str, Any]
    protocol: str
    seed_runs: list[SeedRun] = field(default_factory=list)
    complete: bool = False
    notes: list[str] = field(default_factory=list)

    @property
    def test_mean(self) -> float | None:
        scores = [s.test_score for s in self.seed_runs]
        if not scores or any(x is None for x in scores):
            return None
        return sum(scores) / len(scores)

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["test_mean"] = self.test_mean
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> OptimizationRun:
        seeds = []
        for s in d["seed_runs"]:
            s = dict(s)
            s["iterations"] = [IterationRecord(**r) for r in s["iterations"]]
            seeds.append(SeedRun(**s))
        return cls(d["config"], d["protocol"], seeds, d["complete"], list(d.get("notes", [])))


def split_tasks(tasks: Sequence[Task], ratio: Sequence[int] = (3, 1, 1), seed: int = 0) -> tuple[list, list, list]:
    """Seeded shuffle, then floor-proportional sizes with the remainder going to train."""
    n = len(tasks)
    if n < sum(ratio):
        raise TooFewTasks(f"need at least {sum(ratio)} tasks, got {n}")
    total = sum(ratio)
    n_val, n_test = n * ratio[1] // total, n * ratio[2] // total
    n_train = n - n_val - n_test
    order = list(range(n))
    random.Random(seed).shuffle(order)
    shuffled = [tasks[i] for i in order]
    return shuffled[:n_train], shuffled[n_train : n_train + n_val], shuffled[n_train + n_val :]


def episode_score(t: Trajectory) -> float:
    """Parse failures and rewardless episodes count as 0."""
    if t.terminated is Terminated.PARSE_FAILURE or t.reward is None:
        return 0.0
    return t.reward


def mean(xs: Sequence[float]) -> float:
    return sum(xs) / len(xs) if xs else 0.0


@dataclass
class Evaluation:
    mean: float
    rewards: list[float]
    trajectories: list[Trajectory]


def evaluate(
    tasks: Sequence[Task],
    principles: PrincipleSet | None,
    cfg: ExecutorConfig,
    backend,
    env_factory: Callable[[Task], Any],
    workers: int = 1,
) -> Evaluation:
    if not tasks:
        raise ValueError("tasks must be non-empty")
    trajs = run_batch(cfg, tasks, env_factory, principles, backend, workers)
    rewards = [episode_score(t) for t in trajs]
    return Evaluation(mean(rewards), rewards, trajs)


@dataclass
class IterationOutcome:
    trajectories: list[Trajectory]
    reflections: list
    principles: PrincipleSet
    no_update: bool = False

    @property
    def failed(self) -> int:
        return sum(isinstance(r, FailedReflection) for r in self.reflections)


class Session:
    """Everything one seed needs: configs, fresh role backends, suite, output dir."""

    def __init__(self, cfg: RunConfig, out: Path, suite: Suite | None = None):
        if cfg.agent_mode is not AgentMode.PRACT:
            raise ValueError("principle optimization needs agent_mode 'pract'")
        self.cfg = cfg
        self.out = out
        self.suite = suite or cfg.load_suite()
        self.space = agent_action_space(self.suite.actions, AgentMode.PRACT)
        self.backends = cfg.make_backends()
        self.exec_cfg = cfg.executor_config()
        self.refl_cfg = cfg.reflector_config()
        self.rpo_cfg = cfg.rpo_config()
        self.store = PrincipleStore(out / "principles")

    def execute(self, tasks: Sequence[Task], principles: PrincipleSet) -> list[Trajectory]:
        return run_batch(self.exec_cfg, tasks, self.suite.make_env, principles, self.backends.executor, self.cfg.workers)

    def evaluate(self, tasks: Sequence[Task], principles: PrincipleSet, name: Path) -> Evaluation:
        ev = evaluate(tasks, principles, self.exec_cfg, self.backends.executor, self.suite.make_env, self.cfg.workers)
        write_jsonl(name, ({"task_id": t.task_id, "reward": r} for t, r in zip(tasks, ev.rewards)))
        return ev

    def improve(self, trajectories: Sequence[Trajectory], principles: PrincipleSet) -> IterationOutcome:
        """Reflect on trajectories and optimize; always yields exactly one new version."""
        refl = reflect_all(self.refl_cfg, trajectories, principles, self.backends.reflector, self.cfg.workers)
        good = usable(refl)
        if good:
            new = optimize(self.rpo_cfg, good, principles, self.space, self.backends.optimizer, self.cfg.workers)
        else:
            logger.warning("no usable reflections; carrying principles v%d forward", principles.version)
            new = principles.derive(principles.entries, Provenance.MANUAL)
        self.store.save(new)
        return IterationOutcome(list(trajectories), refl, new, new.entries == principles.entries)

    def iterate(self, tasks: Sequence[Task], principles: PrincipleSet, it_dir: Path) -> IterationOutcome:
        trajs = self.execute(tasks, principles)
        outcome = self.improve(trajs, principles)
        _persist_iteration(it_dir, trajs, outcome)
        return outcome


def _persist_iteration(it_dir: Path, trajs: Sequence[Trajectory], outcome: IterationOutcome) -> None:
    write_trajectories(it_dir / "trajectories.jsonl", trajs)
    write_reflections(it_dir / "reflections.jsonl", [r for r in outcome.reflections if not isinstance(r, FailedReflection)])


class BatchSampler:
    """Without replacement inside a batch; the pool is reshuffled when it runs short."""

    def __init__(self, items: Sequence[Any], batch_size: int, rng: random.Random):
        self.items = list(items)
        self.batch_size = min(batch_size, len(self.items))
        self.rng = rng
        self.pool: list[Any] = []

    def next(self) -> list[Any]:
        if len(self.pool) < self.batch_size:
            self.pool = list(self.items)
            self.rng.shuffle(self.pool)
        batch, self.pool = self.pool[: self.batch_size], self.pool[self.batch_size :]
        return batch


def _train_seed(cfg: RunConfig, seed: int, out: Path, rec: SeedRun, suite: Suite | None) -> None:
    s = Session(cfg, out, suite)
    train, val_tasks, test = split_tasks(list(s.suite.tasks), cfg.split_ratio, seed)
    rec.split = {"train": [t.task_id for t in train], "val": [t.task_id for t in val_tasks], "test": [t.task_id for t in test]}
    sampler = BatchSampler(train, cfg.batch_size, random.Random(f"batches:{seed}"))
    principles = cfg.initial_principles(s.space)
    s.store.save(principles)
    best: PrincipleSet | None = None
    since_best = 0

    for it in range(1, cfg.max_iters + 1):
        it_dir = out / f"iter_{it:03d}"
        outcome = s.iterate(sampler.next(), principles, it_dir)
        principles = outcome.principles
        val = s.evaluate(val_tasks, principles, it_dir / "val_rewards.jsonl").mean
        rec.iterations.append(
            IterationRecord(
                it,
                principles.version,
                mean([episode_score(t) for t in outcome.trajectories]),
                val,
                outcome.no_update,
                outcome.failed,
            )
        )
        rec.stop_iter = it
        if rec.best_val is None or val > rec.best_val:
            best, rec.best_val, rec.best_version, rec.best_iter = principles, val, principles.version, it
            since_best = 0
        else:
            since_best += 1
        if since_best >= cfg.patience:
            break

    rec.test_score = s.evaluate(test, best, out / "test_rewards.jsonl").mean


def _self_reflect_seed(cfg: RunConfig, seed: int, out: Path, rec: SeedRun, suite: Suite | None) -> None:
    s = Session(cfg, out, suite)
    tasks = list(s.suite.tasks)
    rec.split = {"test": [t.task_id for t in tasks]}
    sampler = BatchSampler(range(len(tasks)), cfg.batch_size, random.Random(f"batches:{seed}"))
    principles = cfg.initial_principles(s.space)
    s.store.save(principles)

    for it in range(1, cfg.max_iters + 1):
        it_dir = out / f"iter_{it:03d}"
        trajs = s.execute(tasks, principles)
        picked = [trajs[i] for i in sampler.next()]
        outcome = s.improve(picked, principles)
        write_trajectories(it_dir / "trajectories.jsonl", trajs)
        write_reflections(it_dir / "reflections.jsonl", usable(outcome.reflections))
        rec.iterations.append(
            IterationRecord(it, outcome.principles.version, mean([episode_score(t) for t in trajs]), None,
                            outcome.no_update, outcome.failed)
        )
        rec.stop_iter = it
        principles = outcome.principles

    rec.best_version = principles.version
    rec.test_score = s.evaluate(tasks, principles, out / "test_rewards.jsonl").mean


def _run(cfg: RunConfig, output_dir: str | Path | None, suite: Suite | None, protocol: str) -> OptimizationRun:
    out = Path(output_dir or cfg.resolve(cfg.output_dir))
    run = OptimizationRun(cfg.snapshot(), protocol)
    if protocol == "self":
        run.notes.append(SELF_PROTOCOL_NOTE)
    seed_fn = _self_reflect_seed if protocol == "self" else _train_seed
    try:
        for seed in cfg.seeds:
            rec = SeedRun(seed)
            run.seed_runs.append(rec)
            seed_fn(cfg, seed, out / f"seed_{seed}", rec, suite)
        run.complete = True
    finally:
        if not run.complete:
            run.notes.append("aborted")
        emit_report(run, out)
    return run


def train(cfg: RunConfig, output_dir: str | Path | None = None, suite: Suite | None = None) -> OptimizationRun:
    if cfg.reflector_mode is not ReflectionMode.REWARD:
        raise ValueError("train() is the reward-reflector protocol; use train_self_reflect()")
    return _run(cfg, output_dir, suite, "reward")


def train_self_reflect(cfg: RunConfig, output_dir: str | Path | None = None, suite: Suite | None = None) -> OptimizationRun:
    if cfg.reflector_mode is not ReflectionMode.SELF:
        raise ValueError("train_self_reflect() needs reflector_mode 'self'")
    return _run(cfg, output_dir, suite, "self")


def optimize_run(cfg: RunConfig, output_dir: str | Path | None = None) -> OptimizationRun:
    if cfg.reflector_mode is ReflectionMode.SELF:
        return train_self_reflect(cfg, output_dir)
    return train(cfg, output_dir)


def _fmt(x: float | None) -> str:
    return "" if x is None else format_score(x)


def _csv(rows: list[list[Any]]) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    return buf.getvalue()


def curve_csv(rec: SeedRun, complete: bool) -> str:
    rows: list[list[Any]] = [["iteration", "principle_version", "train_reward", "val_reward"]]
    rows += [[r.iteration, r.principle_version, _fmt(r.train_reward), _fmt(r.val_reward)] for r in rec.iterations]
    status = "complete" if complete and rec.test_score is not None else "incomplete"
    rows.append(["summary", f"test_mean={_fmt(rec.test_score)}", "seeds=1", f"status={status}"])
    return _csv(rows)


def emit_report(run: OptimizationRun, out: str | Path) -> dict[str, Path]:
    """Write per-seed curves, cross-seed results, run.json and a manifest."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    paths: dict[str, Path] = {}
    for rec in run.seed_runs:
        p = out / f"seed_{rec.seed}" / "curve.csv"
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_text(curve_csv(rec, run.complete), encoding="utf-8")
        paths[f"curve_{rec.seed}"] = p

    rows: list[list[Any]] = [["seed", "stop_iter", "best_version", "best_val", "test_score"]]
    rows += [[r.seed, r.stop_iter, r.best_version, _fmt(r.best_val), _fmt(r.test_score)] for r in run.seed_runs]
    status = "complete" if run.complete else "incomplete"
    rows.append(["summary", f"seeds={len(run.seed_runs)}", f"status={status}", "", _fmt(run.test_mean)])
    paths["results"] = out / "results.csv"
    paths["results"].write_text(_csv(rows), encoding="utf-8")

    longest = max((len(r.iterations) for r in run.seed_runs), default=0)
    mrows: list[list[Any]] = [["iteration", "train_reward", "val_reward", "seeds"]]
    for i in range(longest):
        recs = [r.iterations[i] for r in run.seed_runs if len(r.iterations) > i]
        vals = [r.val_reward for r in recs if r.val_reward is not None]
        mrows.append([i + 1, _fmt(mean([r.train_reward for r in recs])), _fmt(mean(vals) if vals else None), len(recs)])
    paths["curve_mean"] = out / "curve_mean.csv"
    paths["curve_mean"].write_text(_csv(mrows), encoding="utf-8")

    paths["run"] = out / "run.json"
    paths["run"].write_text(json.dumps(run.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")

    manifest = {
        str(p.relative_to(out)): hashlib.sha256(p.read_bytes()).hexdigest()
        for p in sorted(out.rglob("*"))
        if p.is_file() and p.name != "manifest.json"
    }
    paths["manifest"] = out / "manifest.json"
    paths["manifest"].write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return paths


def load_run(run_dir: str | Path) -> OptimizationRun:
    return OptimizationRun.from_dict(json.loads((Path(run_dir) / "run.json").read_text(encoding="utf-8")))
