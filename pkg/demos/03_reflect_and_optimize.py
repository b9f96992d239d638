"""Reflection and the two optimizer variants.

Per-trajectory optimization asks the optimizer once per reflection and then
once more to merge the candidates; the batch variant asks once with every
critique concatenated. The call counters make the difference visible.
"""

# %%
from pract import AgentMode, PrincipleSet, Trajectory, agent_action_space, seed_principles
from pract.backend import ScriptedBackend, ScriptRule
from pract.core import ActionCall, Observation, ReflectionMode, Step
from pract.envs import generate_suite
from pract.reflection import ReflectorConfig, reflect_all, render_reflection_prompt, usable
from pract.rpo import RpoConfig, rpo_batch, rpo_traj

suite = generate_suite("movie", 0)
space = agent_action_space(suite.actions, AgentMode.PRACT)
p0 = seed_principles(space)

trajs = [
    Trajectory(
        t.query,
        (Step(ActionCall("search_movie", {"title": "x"}), Observation("no records found")),),
        0.0,
    )
    for t in suite.tasks[:4]
]

# %% Reward mode shows the score; self mode leaves it out.
for mode in ReflectionMode:
    text = render_reflection_prompt(ReflectorConfig(mode), trajs[0], p0)[1].content
    print(f"--- {mode.value} ---\n{text}\n")

# %%
reflector = ScriptedBackend([ScriptRule("", "search_movie returned nothing; the title argument was a placeholder.")])
reflections = usable(reflect_all(ReflectorConfig(), trajs, p0, reflector))
print(len(reflections), "reflections from", reflector.call_count, "reflector calls")

# %%
def optimizer() -> ScriptedBackend:
    return ScriptedBackend(
        [
            ScriptRule("Merge the candidate", "search_movie: Pass the exact movie title taken from the question."),
            ScriptRule("", "search_movie: Use the title as written in the question."),
        ]
    )


for name, fn in (("traj", rpo_traj), ("batch", rpo_batch)):
    backend = optimizer()
    p1: PrincipleSet = fn(RpoConfig(name), reflections, p0, space, backend)
    print(f"{name:>5}: {backend.call_count} optimizer calls -> v{p1.version} ({p1.provenance.value})")
    print("       search_movie:", p1.entries["search_movie"])
