from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

from pract.backend import ScriptedBackend, ScriptRule, save_script
from pract.core import ActionCall
from pract.envs.shop import ShopGoal, ShopItem, ShopTask
from pract.envs.suites import Suite
from pract.envs.tools import MOVIE_ACTIONS, WEATHER_ACTIONS, KnowledgeBase, ToolTask


def scripted(*rules: tuple) -> ScriptedBackend:
    return ScriptedBackend([ScriptRule(*r) if isinstance(r, tuple) else r for r in rules])


def movie_suite() -> Suite:
    movies = [
        {"title": "Alpha", "year": 2001, "director": "D One", "cast": ["A One", "A Two"], "rating": 7.5, "genre": "drama"},
        {"title": "Beta", "year": 2005, "director": "D Two", "cast": ["A Two", "A Three"], "rating": 6.0, "genre": "comedy"},
    ]
    tasks = tuple(
        ToolTask(f"m{i}", f'What is the rating of "{m["title"]}"?', (ActionCall("get_movie_rating", {"title": m["title"]}),), "movie")
        for i, m in enumerate(movies * 4)
    )
    tasks = tuple(ToolTask(f"m{i}", t.query + f" (#{i})", t.ground_truth, t.kb_ref) for i, t in enumerate(tasks))
    return Suite("movie", tasks, MOVIE_ACTIONS, kb=KnowledgeBase({"movies": movies}))


def shop_catalog() -> list[ShopItem]:
    return [
        ShopItem(1, "long red dress", {"category": "dress", "color": "red"}, {"size": ["S", "M", "XL"]}, 15.0),
        ShopItem(2, "blue denim jeans", {"category": "jeans", "color": "blue"}, {"size": ["M", "L"]}, 40.0),
        ShopItem(3, "red cotton shirt", {"category": "shirt", "color": "red"}, {"size": ["S", "M"]}, 12.5),
    ]


def shop_task() -> ShopTask:
    return ShopTask("s0", "red dress in size XL under 20 dollars", ShopGoal({"color": "red", "size": "XL"}, 20.0))


def early_stop_suite(n_tasks: int = 5, days: int = 10) -> Suite:
    """Weather tasks whose ground truth is get_daily_weather[WS001; d] for d = 1..days."""
    stations = [{"station_id": "WS001", "city": "Oslo"}]
    daily = [{"station_id": "WS001", "day": d, "temp_c": float(d), "precip_mm": 0.0} for d in range(1, days + 1)]
    gt = tuple(ActionCall("get_daily_weather", {"station_id": "WS001", "day": d}) for d in range(1, days + 1))
    tasks = tuple(ToolTask(f"w{i}", f"Report every day for Oslo (request {i}).", gt, "weather") for i in range(n_tasks))
    return Suite("weather", tasks, WEATHER_ACTIONS, kb=KnowledgeBase({"stations": stations, "daily": daily}))


def marker(k: int) -> str:
    return f"Fetch exactly K={k} days."


def early_stop_scripts(val_sequence: list[float], days: int = 10) -> dict[str, list[ScriptRule]]:
    """Scripts making the k-th optimizer output drive the executor to recall val_sequence[k].

    The optimizer emits a principle carrying marker K=k; the executor fetches
    days 1..k and finishes once it sees that marker and k observations.
    """
    ks = [round(v * days) for v in val_sequence]
    executor = [
        ScriptRule(rf"{marker(k).replace('.', '[.]')}.*Observation {k}:", "finish[]", regex=True) for k in sorted(set(ks))
    ]
    executor += [ScriptRule(f"Observation {n}:", f"get_daily_weather[WS001; {n + 1}]") for n in range(days - 1, 0, -1)]
    executor.append(ScriptRule("", "get_daily_weather[WS001; 1]"))
    optimizer = [ScriptRule("", f"get_daily_weather: {marker(k)}", max_uses=1) for k in ks]
    optimizer.append(ScriptRule("", "nothing to change"))
    reflector = [ScriptRule("", "The agent should fetch a different number of days.")]
    return {"executor": executor, "optimizer": optimizer, "reflector": reflector}


def write_run_dir(tmp: Path, suite: Suite, scripts: dict[str, list[ScriptRule]], **overrides) -> Path:
    """Write suite, scripts and a config.json into ``tmp``; return the config path."""
    tmp.mkdir(parents=True, exist_ok=True)
    (tmp / "suite.json").write_text(suite.dumps(), encoding="utf-8")
    for role, rules in scripts.items():
        save_script(rules, tmp / f"{role}.json")
    cfg = {
        "env_id": suite.env_id,
        "suite": "suite.json",
        "agent_mode": "pract",
        "reflector_mode": "reward",
        "rpo_method": "batch",
        "batch_size": 2,
        "max_iters": 10,
        "patience": 2,
        "seeds": [0],
        "max_steps": 10,
        "backends": {r: {"kind": "scripted", "script_path": f"{r}.json"} for r in ("executor", "reflector", "optimizer")},
        "output_dir": "out",
    }
    cfg.update(overrides)
    path = tmp / "config.json"
    path.write_text(json.dumps(cfg, indent=2), encoding="utf-8")
    return path


class StubServer:
    """Loopback chat-completion endpoint replaying a list of (status, body) replies."""

    def __init__(self, replies: list[tuple[int, object]]):
        self.replies = list(replies)
        self.requests: list[dict] = []
        outer = self

        class Handler(BaseHTTPRequestHandler):
            def do_POST(self):  # noqa: N802
                length = int(self.headers.get("Content-Length", 0))
                outer.requests.append({"body": json.loads(self.rfile.read(length)), "auth": self.headers.get("Authorization")})
                status, body = outer.replies.pop(0) if len(outer.replies) > 1 else outer.replies[0]
                data = body.encode() if isinstance(body, str) else json.dumps(body).encode()
                self.send_response(status)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(data)))
                self.end_headers()
                self.wfile.write(data)

            def log_message(self, *args):
                pass

        self.server = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self.url = f"http://127.0.0.1:{self.server.server_address[1]}/v1/chat/completions"
        self.thread = threading.Thread(target=self.server.serve_forever, daemon=True)

    def __enter__(self) -> StubServer:
        self.thread.start()
        return self

    def __exit__(self, *exc) -> None:
        self.server.shutdown()
        self.server.server_close()


def completion(text: str) -> dict:
    return {"choices": [{"message": {"role": "assistant", "content": text}}]}
