"""Principle-conditioned prompting and a scripted episode.

The executor prompt is the same in all three agent modes except for one
block: in ``pract`` mode every action's principle is listed before the
history. A scripted backend stands in for the model so the run is exact.
"""

# %%
from pract import AgentMode, ExecutorConfig, agent_action_space, render_prompt, run_episode, seed_principles
from pract.backend import ScriptedBackend, ScriptRule
from pract.envs import generate_suite

suite = generate_suite("movie", seed=0)
task = suite.tasks[0]
print(task.query)

# %% The three modes see different action spaces; only pract sees principles.
for mode in AgentMode:
    space = agent_action_space(suite.actions, mode)
    principles = seed_principles(space) if mode is AgentMode.PRACT else None
    messages = render_prompt(task.query, [], principles, space, mode)
    size = sum(len(m.content) for m in messages)
    print(f"{mode.value:>5}: {len(space)} actions, {size} prompt chars")

space = agent_action_space(suite.actions, AgentMode.PRACT)
print(render_prompt(task.query, [], seed_principles(space), space, AgentMode.PRACT)[0].content)

# %% A scripted episode: think, call the tool, finish.
title = task.ground_truth[0].args["title"]
backend = ScriptedBackend(
    [
        ScriptRule("Observation 2:", "finish[the rating is in the observation]"),
        ScriptRule("Observation 1:", f"get_movie_rating[{title}]"),
        ScriptRule("", "think[the question is about a rating; use the rating tool]"),
    ]
)
t = run_episode(ExecutorConfig(), task.query, suite.make_env(task), seed_principles(space), backend)
for i, step in enumerate(t.steps, 1):
    print(f"{i}. {step.action.render()}  ->  {step.observation.text}")
print("terminated:", t.terminated.value, "| reward:", t.reward, "| model calls:", backend.call_count)
