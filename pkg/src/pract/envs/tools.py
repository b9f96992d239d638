"""Function-call environments over a synthetic knowledge base.

Three domains (academia, movie, weather) share one mechanism: each action is
a deterministic lookup rendered as text, and an episode is scored by the
recall of the task's ground-truth calls among the calls actually executed.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping

from ..core import ActionCall, ActionSpec, Observation, ParamSpec, Trajectory

NOT_FOUND = "no records found"


def normalize(text: Any) -> str:
    return " ".join(str(text).split()).casefold()


def call_key(call: ActionCall) -> tuple[str, tuple[tuple[str, str], ...]]:
    """Equality key for recall: action name plus trimmed, case-folded, whitespace-collapsed args."""
    return normalize(call.action), tuple(sorted((k, normalize(v)) for k, v in call.args.items()))


@dataclass(frozen=True)
class KnowledgeBase:
    tables: dict[str, list[dict[str, Any]]]

    def rows(self, table: str) -> list[dict[str, Any]]:
        return self.tables.get(table, [])


@dataclass(frozen=True)
class ToolTask:
    task_id: str
    query: str
    ground_truth: tuple[ActionCall, ...]
    kb_ref: str

    def to_dict(self) -> dict[str, Any]:
        return {
            "task_id": self.task_id,
            "query": self.query,
            "ground_truth": [{"action": c.action, "args": dict(c.args)} for c in self.ground_truth],
            "kb_ref": self.kb_ref,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> ToolTask:
        gt = tuple(ActionCall(c["action"], dict(c["args"])) for c in d["ground_truth"])
        return cls(d["task_id"], d["query"], gt, d["kb_ref"])


def tool_reward(t: Trajectory, task: ToolTask) -> float:
    """|executed ∩ ground truth| / |ground truth|, as sets; inner actions are not executed."""
    executed = {call_key(s.action) for s in t.steps if not s.observation.is_null}
    truth = {call_key(c) for c in task.ground_truth}
    return len(executed & truth) / len(truth)


Handler = Callable[[KnowledgeBase, Mapping[str, Any]], str]


@dataclass
class ToolEnv:
    kb: KnowledgeBase
    actions: tuple[ActionSpec, ...]
    handlers: Mapping[str, Handler]
    task: ToolTask
    executed: list[ActionCall] = field(default_factory=list)
    done: bool = False

    def step(self, call: ActionCall) -> Observation:
        self.executed.append(call)
        return Observation(self.handlers[call.action](self.kb, call.args))

    def reward(self, trajectory: Trajectory) -> float:
        return tool_reward(trajectory, self.task)


def _s(name: str) -> ParamSpec:
    return ParamSpec(name)


def _find(rows: list[dict[str, Any]], key: str, value: Any) -> list[dict[str, Any]]:
    return [r for r in rows if normalize(r[key]) == normalize(value)]


# ---- academia ---------------------------------------------------------------

ACADEMIA_ACTIONS = (
    ActionSpec("get_author_papers", "List the titles of all papers written by an author.", (_s("author"),)),
    ActionSpec("get_paper_info", "Show the authors, venue, year and citation count of a paper.", (_s("title"),)),
    ActionSpec(
        "get_venue_papers",
        "List the papers published at a venue in a given year.",
        (_s("venue"), ParamSpec("year", "integer")),
    ),
    ActionSpec("get_coauthors", "List everyone who has co-authored a paper with an author.", (_s("author"),)),
)


def _author_papers(kb: KnowledgeBase, args: Mapping[str, Any]) -> str:
    a = normalize(args["author"])
    titles = [p["title"] for p in kb.rows("papers") if a in {normalize(x) for x in p["authors"]}]
    return f"Papers by {args['author']}: " + "; ".join(titles) if titles else NOT_FOUND


def _paper_info(kb: KnowledgeBase, args: Mapping[str, Any]) -> str:
    rows = _find(kb.rows("papers"), "title", args["title"])
    if not rows:
        return NOT_FOUND
    p = rows[0]
    return (
        f"\"{p['title']}\" by {', '.join(p['authors'])}. Venue: {p['venue']}, year: {p['year']}, "
        f"citations: {p['citations']}."
    )


def _venue_papers(kb: KnowledgeBase, args: Mapping[str, Any]) -> str:
    titles = [
        p["title"]
        for p in kb.rows("papers")
        if normalize(p["venue"]) == normalize(args["venue"]) and p["year"] == args["year"]
    ]
    return f"Papers at {args['venue']} {args['year']}: " + "; ".join(titles) if titles else NOT_FOUND


def _coauthors(kb: KnowledgeBase, args: Mapping[str, Any]) -> str:
    a = normalize(args["author"])
    names: list[str] = []
    for p in kb.rows("papers"):
        if a in {normalize(x) for x in p["authors"]}:
            names += [x for x in p["authors"] if normalize(x) != a and x not in names]
    return f"Co-authors of {args['author']}: " + ", ".join(names) if names else NOT_FOUND


ACADEMIA_HANDLERS: dict[str, Handler] = {
    "get_author_papers": _author_papers,
    "get_paper_info": _paper_info,
    "get_venue_papers": _venue_papers,
    "get_coauthors": _coauthors,
}

# ---- movie ------------------------------------------------------------------

MOVIE_ACTIONS = (
    ActionSpec("search_movie", "Look up a movie's year, genre and director by title.", (_s("title"),)),
    ActionSpec("get_movie_cast", "List the main cast of a movie.", (_s("title"),)),
    ActionSpec("get_movie_rating", "Show the audience rating of a movie.", (_s("title"),)),
    ActionSpec("get_actor_movies", "List the movies an actor appeared in.", (_s("actor"),)),
    ActionSpec("get_director_movies", "List the movies a director directed.", (_s("director"),)),
)


def _search_movie(kb: KnowledgeBase, args: Mapping[str, Any]) -> str:
    rows = _find(kb.rows("movies"), "title", args["title"])
    if not rows:
        return NOT_FOUND
    m = rows[0]
    return f"\"{m['title']}\" ({m['year']}), {m['genre']}, directed by {m['director']}."


def _movie_cast(kb: KnowledgeBase, args: Mapping[str, Any]) -> str:
    rows = _find(kb.rows("movies"), "title", args["title"])
    return f"Cast of \"{rows[0]['title']}\": " + ", ".join(rows[0]["cast"]) if rows else NOT_FOUND


def _movie_rating(kb: KnowledgeBase, args: Mapping[str, Any]) -> str:
    rows = _find(kb.rows("movies"), "title", args["title"])
    return f"\"{rows[0]['title']}\" is rated {rows[0]['rating']}/10." if rows else NOT_FOUND


def _actor_movies(kb: KnowledgeBase, args: Mapping[str, Any]) -> str:
    a = normalize(args["actor"])
    titles = [m["title"] for m in kb.rows("movies") if a in {normalize(x) for x in m["cast"]}]
    return f"Movies with {args['actor']}: " + "; ".join(titles) if titles else NOT_FOUND


def _director_movies(kb: KnowledgeBase, args: Mapping[str, Any]) -> str:
    titles = [m["title"] for m in _find(kb.rows("movies"), "director", args["director"])]
    return f"Movies directed by {args['director']}: " + "; ".join(titles) if titles else NOT_FOUND


MOVIE_HANDLERS: dict[str, Handler] = {
    "search_movie": _search_movie,
    "get_movie_cast": _movie_cast,
    "get_movie_rating": _movie_rating,
    "get_actor_movies": _actor_movies,
    "get_director_movies": _director_movies,
}

# ---- weather ----------------------------------------------------------------

UNITS = ("celsius", "fahrenheit")
WEATHER_ACTIONS = (
    ActionSpec("get_station", "Find the weather station id for a city.", (_s("city"),)),
    ActionSpec(
        "get_daily_weather",
        "Full daily record (temperature and precipitation) of a station on a day of the month.",
        (_s("station_id"), ParamSpec("day", "integer")),
    ),
    ActionSpec(
        "get_temperature",
        "Mean temperature of a station on a day, in the requested unit.",
        (_s("station_id"), ParamSpec("day", "integer"), ParamSpec("unit", "enum", values=UNITS)),
    ),
    ActionSpec(
        "get_precipitation",
        "Precipitation in millimetres at a station on a day.",
        (_s("station_id"), ParamSpec("day", "integer")),
    ),
)


def _day_record(kb: KnowledgeBase, args: Mapping[str, Any]) -> dict[str, Any] | None:
    sid = normalize(args["station_id"])
    for r in kb.rows("daily"):
        if normalize(r["station_id"]) == sid and r["day"] == args["day"]:
            return r
    return None


def _station(kb: KnowledgeBase, args: Mapping[str, Any]) -> str:
    rows = _find(kb.rows("stations"), "city", args["city"])
    return f"Station for {rows[0]['city']}: {rows[0]['station_id']}" if rows else NOT_FOUND


def _daily_weather(kb: KnowledgeBase, args: Mapping[str, Any]) -> str:
    r = _day_record(kb, args)
    if r is None:
        return NOT_FOUND
    return f"{r['station_id']} day {r['day']}: temperature {r['temp_c']} C, precipitation {r['precip_mm']} mm."


def _temperature(kb: KnowledgeBase, args: Mapping[str, Any]) -> str:
    r = _day_record(kb, args)
    if r is None:
        return NOT_FOUND
    if args["unit"] == "fahrenheit":
        return f"{r['station_id']} day {r['day']}: {round(r['temp_c'] * 9 / 5 + 32, 1)} F"
    return f"{r['station_id']} day {r['day']}: {r['temp_c']} C"


def _precipitation(kb: KnowledgeBase, args: Mapping[str, Any]) -> str:
    r = _day_record(kb, args)
    return f"{r['station_id']} day {r['day']}: {r['precip_mm']} mm" if r else NOT_FOUND


WEATHER_HANDLERS: dict[str, Handler] = {
    "get_station": _station,
    "get_daily_weather": _daily_weather,
    "get_temperature": _temperature,
    "get_precipitation": _precipitation,
}

DOMAINS: dict[str, tuple[tuple[ActionSpec, ...], dict[str, Handler]]] = {
    "academia": (ACADEMIA_ACTIONS, ACADEMIA_HANDLERS),
    "movie": (MOVIE_ACTIONS, MOVIE_HANDLERS),
    "weather": (WEATHER_ACTIONS, WEATHER_HANDLERS),
}

# ---- generators -------------------------------------------------------------

TASKS_PER_DOMAIN = 60

_FIRST = ["Ada", "Bo", "Chen", "Dara", "Eli", "Farah", "Goran", "Hana", "Ivo", "Jun", "Kemi", "Luis", "Mira", "Noor"]
_LAST = ["Smith", "Okafor", "Tanaka", "Novak", "Larsen", "Haddad", "Moreau", "Silva", "Kowalski", "Iyer", "Brandt"]
_ADJ = ["Scalable", "Robust", "Sparse", "Efficient", "Causal", "Neural", "Adaptive", "Private", "Federated", "Latent"]
_NOUN = ["Attention", "Retrieval", "Planning", "Embeddings", "Inference", "Graphs", "Agents", "Kernels", "Search"]
_TOPIC = ["Dialogue", "Vision", "Robotics", "Forecasting", "Code", "Biology", "Recommendation", "Translation"]
_VENUES = ["NeurIPS", "ICML", "ACL", "KDD", "CVPR", "ICLR"]
_MOVIE_ADJ = ["Silent", "Crimson", "Last", "Hidden", "Broken", "Golden", "Endless", "Lonely", "Electric", "Frozen"]
_MOVIE_NOUN = ["Harbor", "Garden", "Signal", "Empire", "River", "Orbit", "Letter", "Machine", "Summer", "Mask"]
_GENRES = ["drama", "comedy", "thriller", "science fiction", "animation", "documentary"]
_CITIES = ["Oslo", "Lima", "Nairobi", "Hanoi", "Quito", "Perth", "Tallinn", "Osaka", "Porto", "Denver"]


def _call(name: str, **args: Any) -> ActionCall:
    return ActionCall(name, args)


def _people(rng: random.Random, n: int) -> list[str]:
    pool = [f"{f} {l}" for f in _FIRST for l in _LAST]
    return rng.sample(pool, n)


def _unique_titles(n: int, make: Callable[[], str]) -> list[str]:
    out: list[str] = []
    while len(out) < n:
        t = make()
        if t not in out:
            out.append(t)
    return out


def _dedupe(calls: list[ActionCall]) -> tuple[ActionCall, ...]:
    seen, out = set(), []
    for c in calls:
        if call_key(c) not in seen:
            seen.add(call_key(c))
            out.append(c)
    return tuple(out)


def generate_academia(seed: int) -> tuple[KnowledgeBase, list[ToolTask]]:
    rng = random.Random(f"academia:{seed}")
    authors = _people(rng, 16)
    titles = _unique_titles(36, lambda: f"{rng.choice(_ADJ)} {rng.choice(_NOUN)} for {rng.choice(_TOPIC)}")
    papers = [
        {
            "title": t,
            "authors": rng.sample(authors, rng.randint(1, 3)),
            "venue": rng.choice(_VENUES),
            "year": rng.randint(2018, 2023),
            "citations": rng.randint(0, 500),
        }
        for t in titles
    ]
    kb = KnowledgeBase({"papers": papers})
    active = sorted({a for p in papers for a in p["authors"]})

    def by(a: str) -> list[str]:
        return [p["title"] for p in papers if a in p["authors"]]

    tasks = []
    for i in range(TASKS_PER_DOMAIN):
        kind = i % 5
        if kind == 0:
            a = rng.choice(active)
            q, gt = f"Which papers has {a} written?", [_call("get_author_papers", author=a)]
        elif kind == 1:
            p = rng.choice(papers)
            q = f'Who wrote the paper "{p["title"]}" and where was it published?'
            gt = [_call("get_paper_info", title=p["title"])]
        elif kind == 2:
            p = rng.choice(papers)
            q = f"Which papers appeared at {p['venue']} in {p['year']}?"
            gt = [_call("get_venue_papers", venue=p["venue"], year=p["year"])]
        elif kind == 3:
            a = rng.choice(active)
            q = f"At which venues has {a} published?"
            gt = [_call("get_author_papers", author=a)] + [_call("get_paper_info", title=t) for t in by(a)]
        else:
            a = rng.choice(active)
            q = f"Who has {a} co-authored papers with?"
            gt = [_call("get_coauthors", author=a)]
        tasks.append(ToolTask(f"academia-{i:03d}", q, _dedupe(gt), "academia"))
    return kb, tasks


def generate_movie(seed: int) -> tuple[KnowledgeBase, list[ToolTask]]:
    rng = random.Random(f"movie:{seed}")
    actors = _people(rng, 20)
    directors = _people(rng, 8)
    titles = _unique_titles(30, lambda: f"The {rng.choice(_MOVIE_ADJ)} {rng.choice(_MOVIE_NOUN)}")
    movies = [
        {
            "title": t,
            "year": rng.randint(1980, 2023),
            "director": rng.choice(directors),
            "cast": rng.sample(actors, 3),
            "rating": round(rng.uniform(4.0, 9.5), 1),
            "genre": rng.choice(_GENRES),
        }
        for t in titles
    ]
    kb = KnowledgeBase({"movies": movies})
    cast = sorted({a for m in movies for a in m["cast"]})
    used_directors = sorted({m["director"] for m in movies})

    tasks = []
    for i in range(TASKS_PER_DOMAIN):
        kind = i % 5
        m = rng.choice(movies)
        if kind == 0:
            q, gt = f'What is the rating of "{m["title"]}"?', [_call("get_movie_rating", title=m["title"])]
        elif kind == 1:
            q, gt = f'Who stars in "{m["title"]}"?', [_call("get_movie_cast", title=m["title"])]
        elif kind == 2:
            a = rng.choice(cast)
            q = f"Which movies has {a} appeared in, and how are they rated?"
            gt = [_call("get_actor_movies", actor=a)] + [
                _call("get_movie_rating", title=x["title"]) for x in movies if a in x["cast"]
            ]
        elif kind == 3:
            d = rng.choice(used_directors)
            q, gt = f"Which films did {d} direct?", [_call("get_director_movies", director=d)]
        else:
            q = f'Who directed "{m["title"]}", and what else did they direct?'
            gt = [_call("search_movie", title=m["title"]), _call("get_director_movies", director=m["director"])]
        tasks.append(ToolTask(f"movie-{i:03d}", q, _dedupe(gt), "movie"))
    return kb, tasks


def generate_weather(seed: int) -> tuple[KnowledgeBase, list[ToolTask]]:
    rng = random.Random(f"weather:{seed}")
    stations = [{"station_id": f"WS{n:03d}", "city": c} for n, c in enumerate(_CITIES, 1)]
    daily = [
        {
            "station_id": s["station_id"],
            "day": d,
            "temp_c": round(rng.uniform(-10, 35), 1),
            "precip_mm": round(max(0.0, rng.gauss(1.0, 3.0)), 1),
        }
        for s in stations
        for d in range(1, 31)
    ]
    kb = KnowledgeBase({"stations": stations, "daily": daily})

    tasks = []
    for i in range(TASKS_PER_DOMAIN):
        kind = i % 4
        s = rng.choice(stations)
        city, sid, day = s["city"], s["station_id"], rng.randint(1, 30)
        first = _call("get_station", city=city)
        if kind == 0:
            unit = rng.choice(UNITS)
            q = f"What was the temperature in {city} on day {day}, in {unit}?"
            gt = [first, _call("get_temperature", station_id=sid, day=day, unit=unit)]
        elif kind == 1:
            q = f"Did it rain in {city} on day {day}?"
            gt = [first, _call("get_precipitation", station_id=sid, day=day)]
        elif kind == 2:
            other = rng.choice([d for d in range(1, 31) if d != day])
            q = f"Compare the weather in {city} on day {day} and day {other}."
            gt = [first, _call("get_daily_weather", station_id=sid, day=day), _call("get_daily_weather", station_id=sid, day=other)]
        else:
            q = f"Give me the weather report for {city} on day {day}."
            gt = [first, _call("get_daily_weather", station_id=sid, day=day)]
        tasks.append(ToolTask(f"weather-{i:03d}", q, _dedupe(gt), "weather"))
    return kb, tasks


GENERATORS: dict[str, Callable[[int], tuple[KnowledgeBase, list[ToolTask]]]] = {
    "academia": generate_academia,
    "movie": generate_movie,
    "weather": generate_weather,
}
