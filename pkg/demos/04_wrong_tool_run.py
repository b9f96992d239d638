"""A complete optimization run on the shipped wrong-tool scenario.

The seed principles steer the scripted executor to ``search_movie`` for
rating questions, which never returns ratings. One reflect/optimize round
rewrites the ``get_movie_rating`` principle, and since the executor script
keys on that text, every rating question is then answered correctly.
The same run is available as ``pract optimize --config <scenario>/config.json``.
"""

# %%
import tempfile
from pathlib import Path

from pract.harness import RunConfig, Session, optimize_run
from pract.scenarios import scenario_dir

cfg = RunConfig.from_file(scenario_dir("wrong_tool") / "config.json")
out = Path(tempfile.mkdtemp(prefix="pract-demo-"))

# %% One iteration by hand.
s = Session(cfg, out / "manual")
tasks = list(s.suite.tasks)
p0 = cfg.initial_principles(s.space)
before = s.evaluate(tasks, p0, out / "before.jsonl")
print("before:", [round(r, 2) for r in before.rewards], "mean", round(before.mean, 4))
outcome = s.improve(before.trajectories, p0)
print("rewritten:", outcome.principles.entries["get_movie_rating"])
after = s.evaluate(tasks, outcome.principles, out / "after.jsonl")
print("after: ", after.rewards, "mean", after.mean)

# %% The full train/val/test protocol with early stopping, two seeds.
run = optimize_run(cfg, out / "run")
for rec in run.seed_runs:
    print(f"seed {rec.seed}: stopped at {rec.stop_iter}, best v{rec.best_version}, test {rec.test_score}")
print((out / "run" / "results.csv").read_text())
print("artifacts in", out)
