from __future__ import annotations

import json
import random
import re
from fractions import Fraction

import pytest
from helpers import movie_suite, shop_catalog, shop_task

from pract.core import ActionCall, Observation, Step, Trajectory
from pract.envs import (
    Purchase,
    ShopEnv,
    ShopGoal,
    ShopItem,
    ShopTask,
    SuiteError,
    ToolTask,
    generate_suite,
    load_task_suite,
    rank_items,
    shop_reward,
    tool_reward,
)
from pract.envs.shop import NOTHING
from pract.envs.suites import ENV_IDS, parse_suite

# ---- independent oracles ---------------------------------------------------


def oracle_recall(executed: list[tuple[str, dict, bool]], truth: list[tuple[str, dict]]) -> Fraction:
    def canon(name, args):
        return name.lower() + "|" + "|".join(f"{k}={' '.join(str(v).lower().split())}" for k, v in sorted(args.items()))

    done = {canon(n, a) for n, a, is_null in executed if not is_null}
    wanted = {canon(n, a) for n, a in truth}
    return Fraction(sum(w in done for w in wanted), len(wanted))


def oracle_coverage(item: dict | None, selected: dict, required: dict, price_max) -> Fraction:
    n = len(required) + (price_max is not None)
    if item is None:
        return Fraction(0, n)
    hits = 0
    for k, v in required.items():
        k, v = k.strip().lower(), v.strip().lower()
        found = False
        for source in (item["attributes"], selected):
            for kk, vv in source.items():
                if kk.strip().lower() == k and vv.strip().lower() == v:
                    found = True
        hits += found
    if price_max is not None and item["price"] <= price_max:
        hits += 1
    return Fraction(hits, n)


def oracle_rank(query: str, catalog: list[ShopItem], k: int) -> list[int]:
    def words(s):
        return set(w for w in re.split(r"[^0-9a-z]+", s.lower()) if w)

    q = words(query)
    scores = []
    for it in catalog:
        bag = words(it.title + " " + " ".join(it.attributes.values()))
        s = len(q & bag)
        if s:
            scores.append((s, it.id))
    # highest score first, ties to lower id
    scores.sort(key=lambda p: p[1])
    scores.sort(key=lambda p: p[0], reverse=True)
    return [i for _, i in scores[:k]]


# ---- tool environments -----------------------------------------------------

NAMES = ["get_movie_rating", "get_movie_cast", "search_movie"]
VALUES = ["Alpha", "Beta", "Gamma Ray", "Delta"]


def jitter(rng: random.Random, s: str) -> str:
    s = rng.choice([s, s.upper(), s.lower()])
    return rng.choice(["", " ", "  "]) + s.replace(" ", rng.choice([" ", "  ", "\t"])) + rng.choice(["", " "])


def test_tool_reward_matches_oracle_randomized():
    rng = random.Random(7)
    for _ in range(1500):
        truth = [(rng.choice(NAMES), {"title": rng.choice(VALUES)}) for _ in range(rng.randint(1, 4))]
        executed = []
        for _ in range(rng.randint(0, 6)):
            name, args = rng.choice(truth) if rng.random() < 0.6 else (rng.choice(NAMES), {"title": rng.choice(VALUES)})
            executed.append((name, {"title": jitter(rng, args["title"])}, rng.random() < 0.15))
        steps = tuple(
            Step(ActionCall(n, a), Observation.null() if null else Observation("r")) for n, a, null in executed
        )
        task = ToolTask("t", "q", tuple(ActionCall(n, a) for n, a in truth), "movie")
        expected = oracle_recall(executed, truth)
        assert tool_reward(Trajectory("q", steps), task) == expected.numerator / expected.denominator


def test_recall_hand_computed():
    a, b, c, d = (ActionCall("search_movie", {"title": x}) for x in "ABCD")
    task = ToolTask("t", "q", (a, b, c), "movie")
    t = Trajectory("q", tuple(Step(x, Observation("ok")) for x in (a, c, d)))
    assert tool_reward(t, task) == pytest.approx(0.6667, abs=1e-4)
    assert abs(tool_reward(t, task) - 2 / 3) < 1e-9


def test_repeated_calls_count_once():
    a = ActionCall("search_movie", {"title": "A"})
    task = ToolTask("t", "q", (a, ActionCall("search_movie", {"title": "B"})), "movie")
    t = Trajectory("q", tuple(Step(a, Observation("ok")) for _ in range(3)))
    assert tool_reward(t, task) == 0.5


def test_movie_tools_answer_from_kb():
    suite = movie_suite()
    env = suite.make_env(suite.tasks[0])
    rating = env.step(ActionCall("get_movie_rating", {"title": "  alpha "})).text
    assert "7.5" in rating
    assert "A Two" in env.step(ActionCall("get_movie_cast", {"title": "Beta"})).text
    assert env.step(ActionCall("get_movie_rating", {"title": "Omega"})).text == "no records found"
    assert len(env.executed) == 3


def test_weather_tools_integer_and_enum_args():
    suite = generate_suite("weather", 0)
    task = suite.tasks[0]
    env = suite.make_env(task)
    station = task.ground_truth[0]
    sid = env.step(station).text
    assert "WS0" in sid
    call = task.ground_truth[1]
    out = env.step(call).text
    assert out != "no records found"
    assert tool_reward(Trajectory(task.query, (Step(station, Observation(sid)), Step(call, Observation(out)))), task) == 1.0


# ---- shop ------------------------------------------------------------------


def test_shop_reward_matches_oracle_randomized():
    rng = random.Random(11)
    keys = ["color", "size", "material", "style"]
    vals = ["red", "blue", "xl", "m", "cotton", "wool"]
    for _ in range(1500):
        attrs = {k: rng.choice(vals) for k in rng.sample(keys, rng.randint(0, 3))}
        opts = {k: [rng.choice(vals), rng.choice(vals)] for k in rng.sample(keys, rng.randint(0, 2))}
        price = round(rng.uniform(5, 40), 2)
        item = ShopItem(1, "thing", attrs, opts, price)
        selected = {k: jitter(rng, rng.choice(v)) for k, v in opts.items() if rng.random() < 0.7}
        required = {k: rng.choice(vals) for k in rng.sample(keys, rng.randint(1, 4))}
        price_max = rng.choice([None, 10.0, 20.0, 30.0, price])
        bought = rng.random() < 0.9
        expected = oracle_coverage(
            {"attributes": attrs, "price": price} if bought else None, selected, required, price_max
        )
        got = shop_reward(Purchase(item, selected) if bought else None, ShopGoal(required, price_max))
        assert got == expected.numerator / expected.denominator


def test_coverage_hand_computed():
    item = ShopItem(1, "dress", {"color": "red"}, {"size": ["M", "L"]}, 25.0)
    goal = ShopGoal({"color": "red", "size": "M"}, price_max=20.0)
    r = shop_reward(Purchase(item, {"size": "M"}), goal)
    assert abs(r - 2 / 3) < 1e-9


def test_search_ranking_matches_oracle():
    rng = random.Random(3)
    words = ["red", "blue", "cotton", "dress", "shirt", "slim", "long", "vintage", "wool", "coat"]
    catalog = [
        ShopItem(
            i,
            " ".join(rng.sample(words, 3)),
            {"color": rng.choice(["red", "blue"]), "material": rng.choice(["cotton", "wool"])},
            {},
            10.0,
        )
        for i in rng.sample(range(1, 100), 20)
    ]
    for _ in range(200):
        q = " ".join(rng.sample(words + ["zzz"], rng.randint(1, 4)))
        assert [it.id for it in rank_items(q, catalog, 5)] == oracle_rank(q, catalog, 5)


def click(env, target):
    return env.step(ActionCall("click", {"target": target})).text


def test_shop_click_flow_full_reward():
    env = ShopEnv(shop_catalog(), shop_task())
    out = env.step(ActionCall("search", {"query": "red dress"})).text
    assert out.splitlines()[1].startswith("item 1:")
    assert "options: size: S, M, XL" in click(env, "item 1")
    assert click(env, "size: xl") == "You selected size: XL."
    assert click(env, "buy now").startswith("You bought item 1")
    assert env.done
    assert env.reward(Trajectory("q")) == 1.0


def test_shop_partial_reward():
    env = ShopEnv(shop_catalog(), shop_task())
    env.step(ActionCall("search", {"query": "red dress"}))
    click(env, "item 1")
    click(env, "buy now")
    assert env.reward(Trajectory("q")) == pytest.approx(2 / 3)


def test_shop_invalid_clicks():
    env = ShopEnv(shop_catalog(), shop_task())
    assert click(env, "item 1") == NOTHING  # no results page yet
    env.step(ActionCall("search", {"query": "jeans"}))
    assert click(env, "item 1") == NOTHING  # not among results
    click(env, "item 2")
    assert click(env, "size: XXL") == NOTHING
    assert click(env, "back to search") == "search page"
    assert env.step(ActionCall("search", {"query": "zzz"})).text == 'no results for "zzz"'
    assert env.reward(Trajectory("q")) == 0.0


def test_shop_search_from_item_page():
    env = ShopEnv(shop_catalog(), shop_task())
    env.step(ActionCall("search", {"query": "red"}))
    click(env, "item 3")
    env.step(ActionCall("search", {"query": "dress"}))
    assert env.page == "results"
    assert click(env, "item 1").startswith("item 1:")


# ---- suites ----------------------------------------------------------------


@pytest.mark.parametrize("env_id, n", [("academia", 60), ("movie", 60), ("weather", 60), ("shop", 251)])
def test_suite_counts(env_id, n):
    suite = generate_suite(env_id, 0)
    assert len(suite.tasks) == n
    assert len({t.task_id for t in suite.tasks}) == n


@pytest.mark.parametrize("env_id", ENV_IDS)
def test_suite_deterministic_and_round_trips(env_id, tmp_path):
    a, b = generate_suite(env_id, 5), generate_suite(env_id, 5)
    assert a.dumps() == b.dumps()
    assert generate_suite(env_id, 6).dumps() != a.dumps()
    (tmp_path / "s.json").write_text(a.dumps())
    assert load_task_suite(tmp_path / "s.json").dumps() == a.dumps()


def test_generated_ground_truth_is_reachable():
    for env_id in ("academia", "movie", "weather"):
        suite = generate_suite(env_id, 1)
        for task in suite.tasks:
            env = suite.make_env(task)
            steps = tuple(Step(c, env.step(c)) for c in task.ground_truth)
            assert all(s.observation.text != "no records found" for s in steps), task
            assert tool_reward(Trajectory(task.query, steps), task) == 1.0


def test_shop_goals_are_satisfiable():
    suite = generate_suite("shop", 0)
    for task in suite.tasks[:50]:
        goal = task.goal
        ok = [
            it
            for it in suite.catalog
            if all(it.attributes.get(k) == v or v in it.options.get(k, []) for k, v in goal.required_attributes.items())
            and (goal.price_max is None or it.price <= goal.price_max)
        ]
        assert ok, task


@pytest.mark.parametrize(
    "mutate, where",
    [
        (lambda d: d.update(env="chess"), "$.env"),
        (lambda d: d.update(tasks=[]), "$.tasks"),
        (lambda d: d["tasks"][1].pop("query"), "$.tasks[1]"),
        (lambda d: d["tasks"][2]["ground_truth"][0].update(action="fly"), "$.tasks[2].ground_truth[0]"),
        (lambda d: d["tasks"][0]["ground_truth"][0]["args"].clear(), "$.tasks[0].ground_truth[0]"),
        (lambda d: d["tasks"].append(dict(d["tasks"][0])), "$.tasks"),
    ],
)
def test_suite_errors_name_location(mutate, where):
    data = json.loads(movie_suite().dumps())
    mutate(data)
    with pytest.raises(SuiteError) as info:
        parse_suite(data)
    assert str(info.value).startswith(where + ":")


def test_suite_json_error_has_line(tmp_path):
    (tmp_path / "bad.json").write_text('{"env": "movie",\n "tasks": [}')
    with pytest.raises(SuiteError, match="line 2"):
        load_task_suite(tmp_path / "bad.json")


def test_shop_task_round_trip():
    t = ShopTask("s", "q", ShopGoal({"color": "red"}, 12.5, "hint"))
    assert ShopTask.from_dict(json.loads(json.dumps(t.to_dict()))) == t
