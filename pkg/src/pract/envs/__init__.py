from .shop import Purchase, ShopEnv, ShopGoal, ShopItem, ShopTask, rank_items, shop_reward
from .suites import Suite, SuiteError, generate_suite, load_task_suite, write_suite
from .tools import KnowledgeBase, ToolEnv, ToolTask, call_key, tool_reward

__all__ = [
    "KnowledgeBase",
    "Purchase",
    "ShopEnv",
    "ShopGoal",
    "ShopItem",
    "ShopTask",
    "Suite",
    "SuiteError",
    "ToolEnv",
    "ToolTask",
    "call_key",
    "generate_suite",
    "load_task_suite",
    "rank_items",
    "shop_reward",
    "tool_reward",
    "write_suite",
]
