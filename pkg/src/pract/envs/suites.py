"""Task suite files: one JSON document holding the env id, action space,
knowledge base or catalog, and the tasks.

Tool suite::

    {"env": "academia", "seed": 0, "actions": [ActionSpec...],
     "kb": {"papers": [...]}, "tasks": [{"task_id", "query", "ground_truth", "kb_ref"}...]}

Shop suite::

    {"env": "shop", "seed": 0, "actions": [...], "catalog": [ShopItem...],
     "tasks": [{"task_id", "query", "goal": {"required_attributes", "price_max", "query_hint"}}...]}
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Sequence, Union

from ..core import ActionSpec, check_action_space
from .shop import SHOP_ACTIONS, ShopEnv, ShopItem, ShopTask, generate_shop
from .tools import DOMAINS, GENERATORS, KnowledgeBase, ToolEnv, ToolTask

ENV_IDS = ("academia", "movie", "weather", "shop")
Task = Union[ToolTask, ShopTask]


class SuiteError(ValueError):
    pass


@dataclass(frozen=True)
class Suite:
    env_id: str
    tasks: tuple[Task, ...]
    actions: tuple[ActionSpec, ...]
    kb: KnowledgeBase | None = None
    catalog: tuple[ShopItem, ...] | None = None
    seed: int | None = None

    def make_env(self, task: Task) -> ToolEnv | ShopEnv:
        if self.env_id == "shop":
            return ShopEnv(self.catalog, task, actions=self.actions)
        return ToolEnv(self.kb, self.actions, DOMAINS[self.env_id][1], task)

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"env": self.env_id, "seed": self.seed, "actions": [a.to_dict() for a in self.actions]}
        if self.env_id == "shop":
            out["catalog"] = [it.to_dict() for it in self.catalog]
        else:
            out["kb"] = self.kb.tables
        out["tasks"] = [t.to_dict() for t in self.tasks]
        return out

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False, indent=1) + "\n"


def generate_suite(env_id: str, seed: int = 0) -> Suite:
    if env_id == "shop":
        catalog, tasks = generate_shop(seed)
        return Suite("shop", tuple(tasks), SHOP_ACTIONS, catalog=tuple(catalog), seed=seed)
    if env_id not in GENERATORS:
        raise SuiteError(f"unknown env {env_id!r}; expected one of {ENV_IDS}")
    kb, tasks = GENERATORS[env_id](seed)
    return Suite(env_id, tuple(tasks), DOMAINS[env_id][0], kb=kb, seed=seed)


def write_suite(suite: Suite, path: str | Path) -> None:
    Path(path).write_text(suite.dumps(), encoding="utf-8")


def _require(cond: bool, where: str, msg: str) -> None:
    if not cond:
        raise SuiteError(f"{where}: {msg}")


def _check_args(action: ActionSpec, args: dict[str, Any], where: str) -> None:
    names = {p.name for p in action.params}
    _require(set(args) <= names, where, f"unknown args {sorted(set(args) - names)} for {action.name}")
    missing = [p.name for p in action.params if p.required and p.name not in args]
    _require(not missing, where, f"missing args {missing} for {action.name}")


def parse_suite(data: Any) -> Suite:
    _require(isinstance(data, dict), "$", "suite must be an object")
    env_id = data.get("env")
    _require(env_id in ENV_IDS, "$.env", f"must be one of {ENV_IDS}, got {env_id!r}")
    _require(isinstance(data.get("tasks"), list) and data["tasks"], "$.tasks", "must be a non-empty list")
    try:
        actions = tuple(ActionSpec.from_dict(a) for a in data.get("actions", []))
        check_action_space(actions)
    except (KeyError, TypeError, ValueError) as exc:
        raise SuiteError(f"$.actions: {exc}") from exc
    if not actions:
        actions = SHOP_ACTIONS if env_id == "shop" else DOMAINS[env_id][0]
    by_name = {a.name: a for a in actions}

    if env_id != "shop":
        handlers = DOMAINS[env_id][1]
        for i, a in enumerate(actions):
            _require(a.name in handlers, f"$.actions[{i}]", f"{env_id} has no tool {a.name!r}")
        tables = data.get("kb")
        _require(isinstance(tables, dict), "$.kb", "must be an object of tables")
        for name, rows in tables.items():
            _require(isinstance(rows, list), f"$.kb.{name}", "table must be a list of records")
        if env_id == "weather":
            ids = {s["station_id"] for s in tables.get("stations", [])}
            for j, r in enumerate(tables.get("daily", [])):
                _require(r.get("station_id") in ids, f"$.kb.daily[{j}].station_id", "unknown station")
        tasks: list[Task] = []
        for i, t in enumerate(data["tasks"]):
            where = f"$.tasks[{i}]"
            try:
                task = ToolTask.from_dict(t)
            except (KeyError, TypeError) as exc:
                raise SuiteError(f"{where}: missing field {exc}") from exc
            _require(bool(task.query.strip()), f"{where}.query", "must be non-empty")
            _require(bool(task.ground_truth), f"{where}.ground_truth", "must be non-empty")
            for j, c in enumerate(task.ground_truth):
                _require(c.action in by_name, f"{where}.ground_truth[{j}]", f"unknown action {c.action!r}")
                _check_args(by_name[c.action], c.args, f"{where}.ground_truth[{j}]")
            tasks.append(task)
        suite = Suite(env_id, tuple(tasks), actions, kb=KnowledgeBase(tables), seed=data.get("seed"))
    else:
        catalog = []
        for i, it in enumerate(data.get("catalog", [])):
            try:
                catalog.append(ShopItem.from_dict(it))
            except (KeyError, TypeError, ValueError) as exc:
                raise SuiteError(f"$.catalog[{i}]: {exc}") from exc
        _require(bool(catalog), "$.catalog", "must be non-empty")
        _require(len({it.id for it in catalog}) == len(catalog), "$.catalog", "item ids must be unique")
        tasks = []
        for i, t in enumerate(data["tasks"]):
            try:
                tasks.append(ShopTask.from_dict(t))
            except (KeyError, TypeError, ValueError) as exc:
                raise SuiteError(f"$.tasks[{i}]: {exc}") from exc
        suite = Suite("shop", tuple(tasks), actions, catalog=tuple(catalog), seed=data.get("seed"))

    ids = [t.task_id for t in suite.tasks]
    _require(len(set(ids)) == len(ids), "$.tasks", "task ids must be unique")
    return suite


def load_task_suite(path: str | Path) -> Suite:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SuiteError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return parse_suite(data)


def select(tasks: Sequence[Task], ids: Sequence[str]) -> list[Task]:
    index = {t.task_id: t for t in tasks}
    return [index[i] for i in ids]
