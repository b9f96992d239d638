"""A small search-and-click shopping site with attribute-coverage reward.

Pages: search -> results -> item detail -> purchase. Search ranks items by
token overlap between the query and the item's title and attribute values:

    score(item) = |tokens(query) ∩ (tokens(title) ∪ tokens(attribute values))|

where tokens are lower-cased ``[a-z0-9]+`` runs. Items scoring 0 are dropped,
the rest are ordered by (-score, id) and the top ``k`` are shown.
"""

from __future__ import annotations

import math
import random
import re
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

from ..core import ActionCall, ActionSpec, Observation, ParamSpec, Trajectory
from .tools import normalize

SHOP_ACTIONS = (
    ActionSpec("search", "Search the catalog with a free-text query.", (ParamSpec("query"),)),
    ActionSpec(
        "click",
        "Click a visible element: a result ('item 3'), an option ('color: red'), 'buy now' or 'back to search'.",
        (ParamSpec("target"),),
    ),
)
NOTHING = "nothing happened"
TOP_K = 5


@dataclass(frozen=True)
class ShopItem:
    id: int
    title: str
    attributes: dict[str, str]
    options: dict[str, list[str]]
    price: float

    def __post_init__(self) -> None:
        if any(not v for v in self.options.values()):
            raise ValueError(f"item {self.id}: option lists must be non-empty")

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "title": self.title,
            "attributes": dict(self.attributes),
            "options": {k: list(v) for k, v in self.options.items()},
            "price": self.price,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> ShopItem:
        return cls(int(d["id"]), d["title"], dict(d["attributes"]), {k: list(v) for k, v in d["options"].items()}, float(d["price"]))


@dataclass(frozen=True)
class ShopGoal:
    required_attributes: dict[str, str]
    price_max: float | None = None
    query_hint: str = ""

    def __post_init__(self) -> None:
        if not self.required_attributes and self.price_max is None:
            raise ValueError("goal needs at least one required attribute")

    @property
    def size(self) -> int:
        return len(self.required_attributes) + (self.price_max is not None)


@dataclass(frozen=True)
class ShopTask:
    task_id: str
    query: str
    goal: ShopGoal

    def to_dict(self) -> dict[str, Any]:
        return {
            "task_id": self.task_id,
            "query": self.query,
            "goal": {
                "required_attributes": dict(self.goal.required_attributes),
                "price_max": self.goal.price_max,
                "query_hint": self.goal.query_hint,
            },
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> ShopTask:
        g = d["goal"]
        return cls(d["task_id"], d["query"], ShopGoal(dict(g["required_attributes"]), g.get("price_max"), g.get("query_hint", "")))


@dataclass(frozen=True)
class Purchase:
    item: ShopItem
    selected: dict[str, str]


def tokens(text: str) -> list[str]:
    return re.findall(r"[a-z0-9]+", text.lower())


def overlap_score(query: str, item: ShopItem) -> int:
    item_tokens = set(tokens(item.title))
    for v in item.attributes.values():
        item_tokens.update(tokens(v))
    return len(set(tokens(query)) & item_tokens)


def rank_items(query: str, catalog: Sequence[ShopItem], k: int = TOP_K) -> list[ShopItem]:
    scored = [(overlap_score(query, it), it) for it in catalog]
    ranked = sorted((p for p in scored if p[0] > 0), key=lambda p: (-p[0], p[1].id))
    return [it for _, it in ranked[:k]]


def shop_reward(final: Purchase | None, goal: ShopGoal) -> float:
    """Fraction of required attributes met by the purchased item's attributes
    and selected options; a price ceiling, if set, counts as one attribute."""
    if final is None:
        return 0.0
    pool = {(normalize(k), normalize(v)) for k, v in final.item.attributes.items()}
    pool |= {(normalize(k), normalize(v)) for k, v in final.selected.items()}
    hits = sum((normalize(k), normalize(v)) in pool for k, v in goal.required_attributes.items())
    if goal.price_max is not None and final.item.price <= goal.price_max:
        hits += 1
    return hits / goal.size


def _summary(item: ShopItem) -> str:
    attrs = "; ".join(f"{k}: {v}" for k, v in item.attributes.items())
    return f"item {item.id}: {item.title} | {attrs} | ${item.price:.2f}"


@dataclass
class ShopEnv:
    catalog: Sequence[ShopItem]
    task: ShopTask
    top_k: int = TOP_K
    actions: tuple[ActionSpec, ...] = SHOP_ACTIONS
    page: str = "search"
    results: list[ShopItem] = field(default_factory=list)
    current: ShopItem | None = None
    selected: dict[str, str] = field(default_factory=dict)
    purchase: Purchase | None = None
    done: bool = False

    def step(self, call: ActionCall) -> Observation:
        if self.done:
            return Observation("the episode is over")
        if call.action == "search":
            return self.search(call.args["query"])
        return self.click(call.args["target"])

    def search(self, query: str) -> Observation:
        # allowed from any page; returns to the results list
        self.results = rank_items(query, self.catalog, self.top_k)
        self.current, self.selected = None, {}
        self.page = "results"
        if not self.results:
            return Observation(f'no results for "{query}"')
        lines = [f'Search results for "{query}":'] + [_summary(it) for it in self.results]
        return Observation("\n".join(lines))

    def click(self, target: str) -> Observation:
        t = normalize(target)
        if t == "back to search":
            self.page, self.current, self.selected = "search", None, {}
            return Observation("search page")
        if self.page == "results":
            for it in self.results:
                if t == f"item {it.id}":
                    self.page, self.current, self.selected = "item", it, {}
                    return Observation(self._detail(it))
        elif self.page == "item" and self.current is not None:
            if t == "buy now":
                self.purchase = Purchase(self.current, dict(self.selected))
                self.page, self.done = "done", True
                chosen = ", ".join(f"{k}: {v}" for k, v in self.selected.items()) or "no options"
                return Observation(f"You bought item {self.current.id} ({chosen}).")
            name, _, value = t.partition(":")
            for opt, values in self.current.options.items():
                if normalize(opt) == name.strip():
                    for v in values:
                        if normalize(v) == value.strip():
                            self.selected[opt] = v
                            return Observation(f"You selected {opt}: {v}.")
        return Observation(NOTHING)

    def _detail(self, item: ShopItem) -> str:
        attrs = "; ".join(f"{k}: {v}" for k, v in item.attributes.items())
        opts = " | ".join(f"{k}: {', '.join(v)}" for k, v in item.options.items())
        return (
            f"item {item.id}: {item.title}\nprice: ${item.price:.2f}\nattributes: {attrs}\noptions: {opts}\n"
            "click an option as 'name: value', then 'buy now'; or 'back to search'"
        )

    def reward(self, trajectory: Trajectory) -> float:
        return shop_reward(self.purchase, self.task.goal)


SHOP_TASKS = 251
CATALOG_SIZE = 150
_CATEGORIES = ["dress", "shirt", "jacket", "shoes", "jeans", "skirt", "hoodie", "sweater", "coat", "sneakers"]
_MATERIALS = ["cotton", "wool", "linen", "denim", "leather", "polyester", "silk"]
_STYLES = ["casual", "formal", "vintage", "sporty", "classic", "boho"]
_BRANDS = ["Northwind", "Lumen", "Atlas", "Juniper", "Vela"]
_COLORS = ["red", "blue", "black", "white", "green", "pink", "navy", "gray"]
_SIZES = ["XS", "S", "M", "L", "XL", "XXL"]


def generate_catalog(rng: random.Random, n: int = CATALOG_SIZE) -> list[ShopItem]:
    items = []
    for i in range(1, n + 1):
        cat, mat, sty, brand = rng.choice(_CATEGORIES), rng.choice(_MATERIALS), rng.choice(_STYLES), rng.choice(_BRANDS)
        lo = rng.randint(0, 3)
        sizes = _SIZES[lo : lo + rng.randint(3, 5 - (lo > 1))]
        items.append(
            ShopItem(
                i,
                f"{brand} {sty} {mat} {cat}",
                {"category": cat, "material": mat, "style": sty, "brand": brand},
                {"color": rng.sample(_COLORS, rng.randint(2, 4)), "size": sizes},
                round(rng.uniform(8, 90), 2),
            )
        )
    return items


def generate_shop(seed: int) -> tuple[list[ShopItem], list[ShopTask]]:
    rng = random.Random(f"shop:{seed}")
    catalog = generate_catalog(rng)
    tasks = []
    for i in range(SHOP_TASKS):
        target = rng.choice(catalog)
        a = target.attributes
        req = {"category": a["category"]}
        if rng.random() < 0.6:
            req["material"] = a["material"]
        if rng.random() < 0.5:
            req["style"] = a["style"]
        req["color"] = rng.choice(target.options["color"])
        req["size"] = rng.choice(target.options["size"])
        price_max = float(math.ceil(target.price) + rng.randint(0, 15)) if rng.random() < 0.7 else None
        words = [req["color"]] + [req[k] for k in ("style", "material") if k in req] + [req["category"]]
        query = f"i am looking for a {' '.join(words)} in size {req['size']}"
        if price_max is not None:
            query += f", price lower than {price_max:.2f} dollars"
        hint = " ".join(req[k] for k in ("style", "material", "category") if k in req)
        tasks.append(ShopTask(f"shop-{i:03d}", query, ShopGoal(req, price_max, hint)))
    return catalog, tasks
