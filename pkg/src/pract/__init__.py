"""Principle-conditioned LLM agents and reflective principle optimization."""

from .backend import BackendConfig, ChatMessage, HttpBackend, ScriptedBackend, ScriptRule, make_backend
from .core import (
    ActionCall,
    ActionSpec,
    Observation,
    PrincipleSet,
    Reflection,
    Step,
    Trajectory,
    seed_principles,
    validate_principle_set,
)
from .executor import AgentMode, ExecutorConfig, agent_action_space, parse_action, render_prompt, run_batch, run_episode
from .harness import RunConfig, evaluate, split_tasks, train, train_self_reflect
from .reflection import ReflectorConfig, reflect, reflect_all
from .rpo import RpoConfig, parse_principles, rpo_batch, rpo_traj

__version__ = "0.1.0"
