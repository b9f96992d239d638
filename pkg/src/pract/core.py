"""Domain types shared by the executor, reflector, optimizer and harness.

Every value type here is a frozen dataclass. Containers inside them
(``args``, ``entries``) are plain dicts/tuples and are treated as read-only
once constructed.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Iterator, Mapping, Sequence

NULL_OBSERVATION_TEXT = "OK."
THINK = "think"
FINISH = "finish"


class Terminated(str, Enum):
    FINISHED = "finished"
    MAX_STEPS = "max_steps"
    PARSE_FAILURE = "parse_failure"


class Provenance(str, Enum):
    SEED = "seed"
    RPO_TRAJ = "rpo_traj"
    RPO_BATCH = "rpo_batch"
    MANUAL = "manual"


class ReflectionMode(str, Enum):
    SELF = "self"
    REWARD = "reward"


@dataclass(frozen=True)
class ParamSpec:
    name: str
    type: str = "string"  # "string" | "integer" | "enum"
    required: bool = True
    values: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.type not in ("string", "integer", "enum"):
            raise ValueError(f"unknown param type {self.type!r}")
        if self.type == "enum" and not self.values:
            raise ValueError(f"enum param {self.name!r} needs at least one value")

    def schema(self) -> str:
        kind = f"enum({', '.join(self.values)})" if self.type == "enum" else self.type
        return f"{self.name}: {kind}" + ("" if self.required else " (optional)")

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"name": self.name, "type": self.type, "required": self.required}
        if self.values:
            out["values"] = list(self.values)
        return out

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> ParamSpec:
        return cls(d["name"], d.get("type", "string"), d.get("required", True), tuple(d.get("values", ())))


@dataclass(frozen=True)
class ActionSpec:
    name: str
    description: str
    params: tuple[ParamSpec, ...] = ()
    is_inner: bool = False

    def signature(self) -> str:
        return f"{self.name}[{'; '.join(p.schema() for p in self.params)}]"

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "description": self.description,
            "params": [p.to_dict() for p in self.params],
            "is_inner": self.is_inner,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> ActionSpec:
        return cls(
            d["name"],
            d.get("description", ""),
            tuple(ParamSpec.from_dict(p) for p in d.get("params", ())),
            bool(d.get("is_inner", False)),
        )


THINK_SPEC = ActionSpec(
    THINK,
    "Reason about the task and the observations so far. Does not touch the environment.",
    (ParamSpec("thought"),),
    is_inner=True,
)
FINISH_SPEC = ActionSpec(
    FINISH,
    "End the episode, optionally stating the final answer.",
    (ParamSpec("answer", required=False),),
    is_inner=True,
)


def check_action_space(space: Sequence[ActionSpec]) -> None:
    names = [a.name for a in space]
    dupes = {n for n in names if names.count(n) > 1}
    if dupes:
        raise ValueError(f"duplicate action names: {sorted(dupes)}")


@dataclass(frozen=True)
class ActionCall:
    action: str
    args: dict[str, Any] = field(default_factory=dict)
    raw_text: str = ""

    def render(self) -> str:
        """Canonical ``name[arg1; arg2]`` form, args in insertion order."""
        return f"{self.action}[{'; '.join(str(v) for v in self.args.values())}]"

    def to_dict(self) -> dict[str, Any]:
        return {"action": self.action, "args": dict(self.args), "raw_text": self.raw_text}

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> ActionCall:
        return cls(d["action"], dict(d.get("args", {})), d.get("raw_text", ""))


@dataclass(frozen=True)
class Observation:
    text: str
    is_null: bool = False

    def __post_init__(self) -> None:
        if self.is_null and self.text != NULL_OBSERVATION_TEXT:
            raise ValueError("null observation must carry the sentinel text")

    @classmethod
    def null(cls) -> Observation:
        return cls(NULL_OBSERVATION_TEXT, True)


@dataclass(frozen=True)
class Step:
    action: ActionCall
    observation: Observation

    def to_dict(self) -> dict[str, Any]:
        return {
            "action": self.action.to_dict(),
            "observation": {"text": self.observation.text, "is_null": self.observation.is_null},
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> Step:
        o = d["observation"]
        return cls(ActionCall.from_dict(d["action"]), Observation(o["text"], bool(o["is_null"])))


@dataclass(frozen=True)
class Trajectory:
    query: str
    steps: tuple[Step, ...] = ()
    reward: float | None = None
    terminated: Terminated = Terminated.FINISHED

    def __post_init__(self) -> None:
        if self.reward is not None and not 0.0 <= self.reward <= 1.0:
            raise ValueError(f"reward {self.reward} outside [0, 1]")

    @property
    def id(self) -> str:
        return hashlib.sha1(serialize_trajectory(self).encode("utf-8")).hexdigest()[:16]

    def to_dict(self) -> dict[str, Any]:
        return {
            "query": self.query,
            "steps": [s.to_dict() for s in self.steps],
            "reward": self.reward,
            "terminated": self.terminated.value,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> Trajectory:
        return cls(
            d["query"],
            tuple(Step.from_dict(s) for s in d.get("steps", ())),
            d.get("reward"),
            Terminated(d.get("terminated", "finished")),
        )


@dataclass(frozen=True)
class Principle:
    action: str
    text: str


@dataclass(frozen=True)
class PrincipleSet:
    """Versioned action → guideline map. Its key set mirrors the action space."""

    entries: dict[str, str]
    version: int = 0
    parent_version: int | None = None
    provenance: Provenance = Provenance.SEED

    def __post_init__(self) -> None:
        if self.parent_version is not None and self.parent_version >= self.version:
            raise ValueError("version must be greater than parent_version")

    def __iter__(self) -> Iterator[Principle]:
        return (Principle(a, t) for a, t in self.entries.items())

    def __getitem__(self, action: str) -> str:
        return self.entries[action]

    def derive(self, entries: Mapping[str, str], provenance: Provenance) -> PrincipleSet:
        return PrincipleSet(dict(entries), self.version + 1, self.version, provenance)

    def to_dict(self) -> dict[str, Any]:
        return {
            "version": self.version,
            "parent_version": self.parent_version,
            "provenance": self.provenance.value,
            "entries": dict(self.entries),
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> PrincipleSet:
        return cls(
            dict(d["entries"]),
            int(d.get("version", 0)),
            d.get("parent_version"),
            Provenance(d.get("provenance", "seed")),
        )


def seed_principles(space: Sequence[ActionSpec]) -> PrincipleSet:
    """Version-0 principles: one plain guideline per action, taken from its description."""
    return PrincipleSet({a.name: a.description or f"Use {a.name} when it helps." for a in space})


@dataclass(frozen=True)
class Reflection:
    query: str
    trajectory_id: str
    text: str
    mode: ReflectionMode
    reward: float | None = None

    def __post_init__(self) -> None:
        if self.mode is ReflectionMode.REWARD and self.reward is None:
            raise ValueError("reward-mode reflection needs a reward")
        if self.mode is ReflectionMode.SELF and self.reward is not None:
            raise ValueError("self-mode reflection must not carry a reward")

    @property
    def degenerate(self) -> bool:
        return not self.text.strip()

    def to_dict(self) -> dict[str, Any]:
        return {
            "query": self.query,
            "trajectory_id": self.trajectory_id,
            "text": self.text,
            "mode": self.mode.value,
            "reward": self.reward,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> Reflection:
        return cls(d["query"], d["trajectory_id"], d["text"], ReflectionMode(d["mode"]), d.get("reward"))


def _dumps(obj: Any) -> str:
    return json.dumps(obj, ensure_ascii=False, separators=(",", ":"))


def serialize_trajectory(t: Trajectory) -> str:
    return _dumps(t.to_dict())


def deserialize_trajectory(line: str) -> Trajectory:
    return Trajectory.from_dict(json.loads(line))


def serialize_reflection(r: Reflection) -> str:
    return _dumps(r.to_dict())


def deserialize_reflection(line: str) -> Reflection:
    return Reflection.from_dict(json.loads(line))


def serialize_principles(p: PrincipleSet) -> str:
    return json.dumps(p.to_dict(), ensure_ascii=False, indent=2) + "\n"


def deserialize_principles(text: str) -> PrincipleSet:
    return PrincipleSet.from_dict(json.loads(text))


def validate_principle_set(p: PrincipleSet, space: Sequence[ActionSpec]) -> list[str]:
    """Return violations; an empty list means the set covers ``space`` exactly."""
    names = [a.name for a in space]
    violations = [f"missing principle for action {n!r}" for n in names if n not in p.entries]
    violations += [f"unknown action {k!r}" for k in p.entries if k not in names]
    violations += [f"empty principle for action {k!r}" for k, t in p.entries.items() if not t.strip()]
    return violations
