"""Critiques of finished trajectories, with or without the environment reward."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from typing import Sequence

from .backend import Backend, BackendError, ChatMessage
from .core import PrincipleSet, Reflection, ReflectionMode, Trajectory
from .executor import render_principles, render_steps
from .templates import load_template

logger = logging.getLogger(__name__)


class MissingReward(ValueError):
    pass


def format_score(x: float) -> str:
    """Four decimals, half-up on the decimal repr (0.60115 -> "0.6012")."""
    return str(Decimal(repr(float(x))).quantize(Decimal("0.0001"), rounding=ROUND_HALF_UP))


@dataclass(frozen=True)
class ReflectorConfig:
    mode: ReflectionMode = ReflectionMode.REWARD
    template_id: str = "reflect"
    template_dir: str | None = None
    max_reflection_chars: int = 4000


@dataclass(frozen=True)
class FailedReflection:
    query: str
    trajectory_id: str
    error: str


def render_reflection_prompt(cfg: ReflectorConfig, t: Trajectory, principles: PrincipleSet) -> list[ChatMessage]:
    reward = ""
    if cfg.mode is ReflectionMode.REWARD:
        if t.reward is None:
            raise MissingReward(f"trajectory for {t.query!r} has no reward")
        reward = f"\nReward for this attempt: {format_score(t.reward)} (1.0000 is best)\n"
    trajectory = render_steps(t.steps) if t.steps else "(no actions taken)"
    trajectory += f"\nEpisode ended: {t.terminated.value}"
    return load_template(cfg.template_id, cfg.template_dir).render(
        query=t.query, trajectory=trajectory, principles=render_principles(principles), reward=reward
    )


def reflect(cfg: ReflectorConfig, t: Trajectory, principles: PrincipleSet, backend: Backend) -> Reflection:
    messages = render_reflection_prompt(cfg, t, principles)
    text = backend.complete(messages)[: cfg.max_reflection_chars]
    reward = t.reward if cfg.mode is ReflectionMode.REWARD else None
    return Reflection(t.query, t.id, text, cfg.mode, reward)


def reflect_all(
    cfg: ReflectorConfig,
    ts: Sequence[Trajectory],
    principles: PrincipleSet,
    backend: Backend,
    workers: int = 1,
) -> list[Reflection | FailedReflection]:
    """One entry per trajectory, order-aligned. Failures do not abort the batch."""
    if not ts:
        raise ValueError("trajectories must be non-empty")

    def one(t: Trajectory) -> Reflection | FailedReflection:
        try:
            return reflect(cfg, t, principles, backend)
        except (MissingReward, BackendError) as exc:
            logger.warning("reflection for %r failed: %s", t.query, exc)
            return FailedReflection(t.query, t.id, str(exc))

    if workers <= 1:
        return [one(t) for t in ts]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, ts))


def usable(reflections: Sequence[Reflection | FailedReflection]) -> list[Reflection]:
    """Reflections the optimizer may consume: not failed, not degenerate."""
    return [r for r in reflections if isinstance(r, Reflection) and not r.degenerate]
