"""Prompt templates: text files with ``{named}`` placeholders, keyed by id.

A template file may contain a ``---- user ----`` marker line. Text above it
becomes the system message and text below it the user message; without a
marker the whole file is one user message. Literal braces must be doubled.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .backend import ChatMessage

USER_MARKER = "---- user ----"


@dataclass(frozen=True)
class Template:
    template_id: str
    system: str
    user: str

    def render(self, **fields: str) -> list[ChatMessage]:
        messages = []
        if self.system:
            messages.append(ChatMessage("system", self.system.format(**fields).strip() + "\n"))
        messages.append(ChatMessage("user", self.user.format(**fields).strip() + "\n"))
        return messages

    def fill(self, **fields: str) -> str:
        """Render to a single string (for fragment templates like ``concat``)."""
        return "\n".join(m.content for m in self.render(**fields))


def parse_template(template_id: str, text: str) -> Template:
    lines = text.splitlines()
    if USER_MARKER in (ln.strip() for ln in lines):
        i = [ln.strip() for ln in lines].index(USER_MARKER)
        return Template(template_id, "\n".join(lines[:i]), "\n".join(lines[i + 1 :]))
    return Template(template_id, "", text)


@functools.lru_cache(maxsize=None)
def load_template(template_id: str, template_dir: str | None = None) -> Template:
    """Look in ``template_dir`` first, then in the shipped defaults."""
    if template_dir is not None:
        path = Path(template_dir) / f"{template_id}.txt"
        if path.exists():
            return parse_template(template_id, path.read_text(encoding="utf-8"))
    shipped = resources.files("pract") / "templates" / f"{template_id}.txt"
    if not shipped.is_file():
        raise KeyError(f"no template {template_id!r}")
    return parse_template(template_id, shipped.read_text(encoding="utf-8"))
