"""Principle-conditioned executor: prompt rendering, action parsing, episodes."""

from __future__ import annotations

import logging
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import Any, Callable, Protocol, Sequence

from .backend import Backend, BackendError, ChatMessage
from .core import (
    FINISH,
    FINISH_SPEC,
    THINK_SPEC,
    ActionCall,
    ActionSpec,
    Observation,
    PrincipleSet,
    Step,
    Terminated,
    Trajectory,
    validate_principle_set,
)
from .templates import load_template

logger = logging.getLogger(__name__)


class AgentMode(str, Enum):
    ACT = "act"
    REACT = "react"
    PRACT = "pract"


class ActionParseError(ValueError):
    def __init__(self, message: str, raw: str):
        super().__init__(message)
        self.raw = raw


class Unparseable(ActionParseError):
    pass


class UnknownAction(ActionParseError):
    pass


class ArityMismatch(ActionParseError):
    pass


class TypeMismatch(ActionParseError):
    pass


class InvalidPrincipleSet(ValueError):
    def __init__(self, violations: list[str]):
        super().__init__("; ".join(violations))
        self.violations = violations


class Environment(Protocol):
    actions: Sequence[ActionSpec]
    done: bool

    def step(self, call: ActionCall) -> Observation: ...

    def reward(self, trajectory: Trajectory) -> float | None: ...


@dataclass(frozen=True)
class ExecutorConfig:
    mode: AgentMode = AgentMode.PRACT
    max_steps: int = 15
    parse_retries: int = 2
    template_id: str = "executor"
    template_dir: str | None = None
    max_prompt_chars: int = 32000

    def __post_init__(self) -> None:
        if self.max_steps < 1 or self.parse_retries < 0:
            raise ValueError("max_steps must be >= 1 and parse_retries >= 0")


def agent_action_space(env_actions: Sequence[ActionSpec], mode: AgentMode) -> tuple[ActionSpec, ...]:
    """Environment actions plus ``think`` (react/pract only) plus ``finish``."""
    extra = (FINISH_SPEC,) if mode is AgentMode.ACT else (THINK_SPEC, FINISH_SPEC)
    return tuple(env_actions) + extra


def render_actions(space: Sequence[ActionSpec]) -> str:
    return "\n".join(f"- {a.signature()}: {a.description}" for a in space)


def render_principles(principles: PrincipleSet) -> str:
    return "\n".join(f"- {p.action}: {p.text}" for p in principles)


def render_steps(steps: Sequence[Step], start: int = 1) -> str:
    lines = []
    for i, step in enumerate(steps, start):
        lines.append(f"Action {i}: {step.action.render()}")
        lines.append(f"Observation {i}: {step.observation.text}")
    return "\n".join(lines)


def render_prompt(
    query: str,
    context: Sequence[Step],
    principles: PrincipleSet | None,
    space: Sequence[ActionSpec],
    mode: AgentMode,
    template_id: str = "executor",
    template_dir: str | None = None,
    max_chars: int | None = None,
) -> list[ChatMessage]:
    if (principles is not None) != (mode is AgentMode.PRACT):
        raise ValueError(f"principles must be given iff mode is pract (mode={mode.value})")
    principle_block = ""
    if principles is not None:
        violations = validate_principle_set(principles, space)
        if violations:
            raise InvalidPrincipleSet(violations)
        principle_block = (
            "\nAction principles (check them before choosing and forming each action):\n"
            + render_principles(principles)
            + "\n"
        )
    template = load_template(template_id, template_dir)

    def build(skip: int) -> list[ChatMessage]:
        kept = context[skip:]
        history = render_steps(kept, start=skip + 1) if kept else "(no actions yet)"
        if skip:
            history = f"[{skip} earlier steps omitted]\n" + history
        return template.render(query=query, actions=render_actions(space), principles=principle_block, history=history)

    skip = 0
    messages = build(skip)
    while max_chars is not None and skip < len(context) and sum(len(m.content) for m in messages) > max_chars:
        skip += 1
        messages = build(skip)
    return messages


_CALL_RE = re.compile(r"^(?:action\s*\d*\s*:\s*)?([A-Za-z_]\w*)\s*\[(.*)\]$", re.DOTALL | re.IGNORECASE)
_INT_RE = re.compile(r"^[+-]?\d+$")


def _find_call(raw: str) -> re.Match[str] | None:
    m = _CALL_RE.match(raw.strip())
    if m:
        return m
    for line in raw.splitlines():
        m = _CALL_RE.match(line.strip())
        if m:
            return m
    return None


def parse_action(raw: str, space: Sequence[ActionSpec]) -> ActionCall:
    """Parse ``name[arg1; arg2; ...]`` and check it against the action space.

    Actions with a single string parameter take the whole bracket content as
    that argument, so free text such as thoughts may contain semicolons.
    """
    m = _find_call(raw)
    if m is None:
        raise Unparseable(f"expected action_name[args], got {raw.strip()[:80]!r}", raw)
    name, inner = m.group(1), m.group(2).strip()
    spec = next((a for a in space if a.name == name), None)
    if spec is None:
        raise UnknownAction(f"unknown action {name!r}; choose from {[a.name for a in space]}", raw)

    params = spec.params
    if len(params) == 1 and params[0].type == "string":
        values = [inner] if inner else []
    else:
        values = [v.strip() for v in inner.split(";")] if inner else []
    required = sum(p.required for p in params)
    if not required <= len(values) <= len(params):
        raise ArityMismatch(f"{name} takes {required}..{len(params)} arguments, got {len(values)}", raw)

    args: dict[str, Any] = {}
    for p, v in zip(params, values):
        if p.type == "integer":
            if not _INT_RE.match(v):
                raise TypeMismatch(f"{name}.{p.name} must be an integer, got {v!r}", raw)
            args[p.name] = int(v)
        elif p.type == "enum":
            match = next((x for x in p.values if x.lower() == v.lower()), None)
            if match is None:
                raise TypeMismatch(f"{name}.{p.name} must be one of {list(p.values)}, got {v!r}", raw)
            args[p.name] = match
        else:
            if not v and p.required:
                raise ArityMismatch(f"{name}.{p.name} must not be empty", raw)
            args[p.name] = v
    return ActionCall(name, args, raw)


def run_episode(
    cfg: ExecutorConfig,
    query: str,
    env: Environment,
    principles: PrincipleSet | None,
    backend: Backend,
) -> Trajectory:
    space = agent_action_space(env.actions, cfg.mode)
    by_name = {a.name: a for a in space}
    use_principles = principles if cfg.mode is AgentMode.PRACT else None
    steps: list[Step] = []
    terminated = Terminated.MAX_STEPS

    for _ in range(cfg.max_steps):
        messages = render_prompt(
            query, steps, use_principles, space, cfg.mode, cfg.template_id, cfg.template_dir, cfg.max_prompt_chars
        )
        call = None
        for _attempt in range(cfg.parse_retries + 1):
            raw = backend.complete(messages)
            try:
                call = parse_action(raw, space)
                break
            except ActionParseError as exc:
                messages = messages + [
                    ChatMessage("assistant", raw),
                    ChatMessage("user", f"Your action could not be used: {exc}. Reply with one valid action."),
                ]
        if call is None:
            terminated = Terminated.PARSE_FAILURE
            break
        if by_name[call.action].is_inner:
            obs = Observation.null()
        else:
            obs = env.step(call)
        steps.append(Step(call, obs))
        if call.action == FINISH or env.done:
            terminated = Terminated.FINISHED
            break

    partial = Trajectory(query, tuple(steps), None, terminated)
    return Trajectory(query, tuple(steps), env.reward(partial), terminated)


def run_batch(
    cfg: ExecutorConfig,
    tasks: Sequence[Any],
    env_factory: Callable[[Any], Environment],
    principles: PrincipleSet | None,
    backend: Backend,
    workers: int = 1,
) -> list[Trajectory]:
    """One trajectory per task, in input order; each task gets a fresh environment.

    ``tasks`` may be plain query strings or objects with a ``query`` attribute.
    """
    if not tasks:
        raise ValueError("tasks must be non-empty")

    def one(task: Any) -> Trajectory:
        query = getattr(task, "query", task)
        try:
            return run_episode(cfg, query, env_factory(task), principles, backend)
        except BackendError as exc:
            logger.warning("episode for %r failed: %s", query, exc)
            return Trajectory(query, (), None, Terminated.PARSE_FAILURE)

    if workers <= 1:
        return [one(t) for t in tasks]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, tasks))
