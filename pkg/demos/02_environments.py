"""The four task environments and their rewards.

Tool domains score recall of the ground-truth calls; the shop scores how
many goal attributes the purchase covers (a price ceiling counts as one).
"""

# %%
from pract.core import ActionCall, Step, Trajectory
from pract.envs import generate_suite, tool_reward

for env_id in ("academia", "movie", "weather", "shop"):
    print(f"{env_id:>8}: {len(generate_suite(env_id, 0).tasks)} tasks")

# %% Weather: call only part of the ground truth and the recall shows it.
weather = generate_suite("weather", 0)
task = next(t for t in weather.tasks if len(t.ground_truth) == 3)
print(task.query)
env = weather.make_env(task)
steps = []
for call in task.ground_truth[:2]:
    obs = env.step(call)
    steps.append(Step(call, obs))
    print(f"  {call.render()} -> {obs.text}")
print("recall:", tool_reward(Trajectory(task.query, tuple(steps)), task))

# %% Shop: search, open a result, pick options, buy.
shop = generate_suite("shop", 0)
task = shop.tasks[0]
goal = task.goal
print(task.query)
env = shop.make_env(task)
print(env.step(ActionCall("search", {"query": task.query})).text)
target = env.results[0]
print(env.step(ActionCall("click", {"target": f"item {target.id}"})).text)
for name in ("color", "size"):
    want = goal.required_attributes[name]
    if want in target.options.get(name, []):
        print(env.step(ActionCall("click", {"target": f"{name}: {want}"})).text)
print(env.step(ActionCall("click", {"target": "buy now"})).text)
print(f"coverage: {env.reward(Trajectory(task.query)):.4f} of {goal.size} goal attributes")
