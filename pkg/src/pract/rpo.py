"""Principle optimization from reflections.

``rpo_traj`` optimizes once per reflection and merges the candidates with one
summarizer call (|Q|+1 optimizer calls). ``rpo_batch`` concatenates all
reflections into one optimizer prompt (1 call, |Q|-times longer critique
section). Both keep the principle key set equal to the action space by
falling back to the current text for any action the model leaves out.
"""

from __future__ import annotations

import logging
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

from .backend import Backend, ChatMessage
from .core import ActionSpec, PrincipleSet, Provenance, Reflection
from .executor import render_actions, render_principles
from .templates import load_template

logger = logging.getLogger(__name__)


class NoUsableReflections(ValueError):
    pass


@dataclass(frozen=True)
class RpoConfig:
    method: str = "batch"  # "traj" | "batch"
    max_principle_chars: int = 1500
    opt_template_id: str = "optimize"
    summarize_template_id: str = "summarize"
    concat_template_id: str = "concat"
    candidate_template_id: str = "candidate"
    template_dir: str | None = None

    def __post_init__(self) -> None:
        if self.method not in ("traj", "batch"):
            raise ValueError(f"unknown rpo method {self.method!r}")
        if self.max_principle_chars < 1:
            raise ValueError("max_principle_chars must be positive")


@dataclass(frozen=True)
class CandidatePrincipleSet:
    entries: dict[str, str]
    source_query: str
    no_update: bool = False


_HEADER_RE = re.compile(r"^[-*]?\s*([A-Za-z_]\w*)\s*:\s*(.*)$")


def truncate_at_space(text: str, max_chars: int) -> str:
    if len(text) <= max_chars:
        return text
    cut = text[:max_chars]
    if not text[max_chars].isspace():
        idx = max(cut.rfind(" "), cut.rfind("\n"), cut.rfind("\t"))
        if idx > 0:
            cut = cut[:idx]
    return cut.rstrip()


def parse_principles(raw: str, space: Sequence[ActionSpec], max_chars: int = 1500) -> dict[str, str]:
    """Parse ``action_name: text`` lines; indented lines continue the previous entry.

    Unknown action names are skipped (with their continuation lines) and
    logged. Empty texts are dropped; each text is capped at ``max_chars``.
    """
    names = {a.name for a in space}
    parts: dict[str, list[str]] = {}
    current: str | None = None
    for line in raw.splitlines():
        if not line.strip():
            continue
        if line[0].isspace():
            if current is not None:
                parts[current].append(line.strip())
            continue
        m = _HEADER_RE.match(line)
        if m is None:
            current = None
            continue
        name, text = m.groups()
        if name not in names:
            logger.warning("ignoring principle for unknown action %r", name)
            current = None
            continue
        current = name
        parts[current] = [text.strip()]
    out = {}
    for name, chunks in parts.items():
        text = " ".join(c for c in chunks if c)
        if text:
            out[name] = truncate_at_space(text, max_chars)
    return out


def concat_reflections(cfg: RpoConfig, rs: Sequence[Reflection]) -> str:
    template = load_template(cfg.concat_template_id, cfg.template_dir)
    return "\n".join(template.fill(index=str(i), query=r.query, text=r.text) for i, r in enumerate(rs, 1))


def render_optimizer_prompt(
    cfg: RpoConfig, rs: Sequence[Reflection], principles: PrincipleSet, space: Sequence[ActionSpec]
) -> list[ChatMessage]:
    return load_template(cfg.opt_template_id, cfg.template_dir).render(
        actions=render_actions(space),
        principles=render_principles(principles),
        reflection=concat_reflections(cfg, rs),
    )


def optimize_one(
    cfg: RpoConfig, r: Reflection, principles: PrincipleSet, space: Sequence[ActionSpec], backend: Backend
) -> CandidatePrincipleSet:
    if r.degenerate:
        raise ValueError("cannot optimize from a degenerate reflection")
    raw = backend.complete(render_optimizer_prompt(cfg, [r], principles, space))
    parsed = parse_principles(raw, space, cfg.max_principle_chars)
    return CandidatePrincipleSet({**principles.entries, **parsed}, r.query, no_update=not parsed)


def _checked(rs: Sequence[Reflection]) -> list[Reflection]:
    good = [r for r in rs if not r.degenerate]
    if not good:
        raise NoUsableReflections("need at least one non-degenerate reflection")
    return good


def rpo_traj(
    cfg: RpoConfig,
    rs: Sequence[Reflection],
    principles: PrincipleSet,
    space: Sequence[ActionSpec],
    backend: Backend,
    workers: int = 1,
) -> PrincipleSet:
    good = _checked(rs)
    if workers <= 1:
        candidates = [optimize_one(cfg, r, principles, space, backend) for r in good]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            candidates = list(pool.map(lambda r: optimize_one(cfg, r, principles, space, backend), good))

    cand_template = load_template(cfg.candidate_template_id, cfg.template_dir)
    block = "\n".join(
        cand_template.fill(
            index=str(i),
            query=c.source_query,
            principles="\n".join(f"- {a}: {t}" for a, t in c.entries.items()),
        )
        for i, c in enumerate(candidates, 1)
    )
    messages = load_template(cfg.summarize_template_id, cfg.template_dir).render(
        actions=render_actions(space), principles=render_principles(principles), candidates=block
    )
    merged = parse_principles(backend.complete(messages), space, cfg.max_principle_chars)
    if not merged:
        logger.warning("summarizer output unparseable; keeping current principles")
        return principles.derive(principles.entries, Provenance.MANUAL)
    return principles.derive({**principles.entries, **merged}, Provenance.RPO_TRAJ)


def rpo_batch(
    cfg: RpoConfig,
    rs: Sequence[Reflection],
    principles: PrincipleSet,
    space: Sequence[ActionSpec],
    backend: Backend,
) -> PrincipleSet:
    good = _checked(rs)
    raw = backend.complete(render_optimizer_prompt(cfg, good, principles, space))
    parsed = parse_principles(raw, space, cfg.max_principle_chars)
    return principles.derive({**principles.entries, **parsed}, Provenance.RPO_BATCH)


def optimize(
    cfg: RpoConfig,
    rs: Sequence[Reflection],
    principles: PrincipleSet,
    space: Sequence[ActionSpec],
    backend: Backend,
    workers: int = 1,
) -> PrincipleSet:
    if cfg.method == "traj":
        return rpo_traj(cfg, rs, principles, space, backend, workers)
    return rpo_batch(cfg, rs, principles, space, backend)
