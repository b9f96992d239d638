from __future__ import annotations

import pytest
from helpers import scripted

from pract.core import ActionSpec, ParamSpec, PrincipleSet, Provenance, Reflection, ReflectionMode
from pract.rpo import (
    NoUsableReflections,
    RpoConfig,
    concat_reflections,
    optimize,
    optimize_one,
    parse_principles,
    render_optimizer_prompt,
    rpo_batch,
    rpo_traj,
    truncate_at_space,
)
from pract.store import PrincipleStore

SPACE = (
    ActionSpec("search", "Search.", (ParamSpec("query"),)),
    ActionSpec("click", "Click.", (ParamSpec("target"),)),
    ActionSpec("finish", "Finish.", ()),
)
P0 = PrincipleSet({"search": "old search", "click": "old click", "finish": "old finish"})


def refl(i: int, text: str | None = None) -> Reflection:
    return Reflection(f"task {i}", f"{i:016x}", text or f"critique number {i} of the search step", ReflectionMode.REWARD, 0.5)


def opt_backend():
    return scripted(
        ("Merge the candidate principle sets", "search: merged search"),
        ("", "search: better search"),
    )


@pytest.mark.parametrize("q", [1, 2, 4, 8])
def test_call_count_law(q):
    rs = [refl(i) for i in range(q)]
    b = opt_backend()
    rpo_traj(RpoConfig("traj"), rs, P0, SPACE, b)
    assert b.call_count == q + 1
    b = opt_backend()
    rpo_batch(RpoConfig("batch"), rs, P0, SPACE, b)
    assert b.call_count == 1


def test_traj_parallel_same_count():
    b = opt_backend()
    out = rpo_traj(RpoConfig("traj"), [refl(i) for i in range(6)], P0, SPACE, b, workers=4)
    assert b.call_count == 7
    assert out.entries["search"] == "merged search"


def test_partial_update_keeps_other_entries():
    out = rpo_batch(RpoConfig(), [refl(0)], P0, SPACE, scripted(("", "click: click the cheapest match")))
    assert out.entries == {"search": "old search", "click": "click the cheapest match", "finish": "old finish"}
    assert (out.version, out.parent_version, out.provenance) == (1, 0, Provenance.RPO_BATCH)


def test_garbage_output_keeps_text_and_bumps_version():
    out = rpo_batch(RpoConfig(), [refl(0)], P0, SPACE, scripted(("", "I have no suggestions.")))
    assert out.entries == P0.entries and out.version == 1


def test_traj_unparseable_summary_falls_back():
    b = scripted(("Merge the candidate", "no idea"), ("", "search: s2"))
    out = rpo_traj(RpoConfig("traj"), [refl(0), refl(1)], P0, SPACE, b)
    assert out.entries == P0.entries
    assert out.provenance is Provenance.MANUAL and out.version == 1


def test_traj_summarizer_sees_full_candidates():
    b = opt_backend()
    rpo_traj(RpoConfig("traj"), [refl(0)], P0, SPACE, b)
    summary_prompt = b.prompts[-1]
    assert "Candidate 1 (from task: task 0)" in summary_prompt
    assert "- search: better search" in summary_prompt and "- click: old click" in summary_prompt


def test_fallback_is_idempotent():
    b = scripted(("", "nothing useful"))
    p1 = rpo_batch(RpoConfig(), [refl(0)], P0, SPACE, b)
    p2 = rpo_batch(RpoConfig(), [refl(0)], p1, SPACE, b)
    assert p2.entries == p1.entries == P0.entries
    assert p2.version == 2


def test_degenerate_reflections_rejected():
    with pytest.raises(NoUsableReflections):
        rpo_batch(RpoConfig(), [refl(0, "   ")], P0, SPACE, opt_backend())
    with pytest.raises(ValueError):
        optimize_one(RpoConfig(), refl(0, " "), P0, SPACE, opt_backend())


def test_optimize_one_flags_no_update():
    c = optimize_one(RpoConfig(), refl(0), P0, SPACE, scripted(("", "unrelated text")))
    assert c.no_update and c.entries == P0.entries and c.source_query == "task 0"


def test_batch_prompt_critique_section_scales_with_q():
    cfg = RpoConfig()
    one = concat_reflections(cfg, [refl(1)])
    four = concat_reflections(cfg, [refl(i) for i in (1, 2, 3, 4)])
    assert 3.8 <= len(four) / len(one) <= 4.2
    prompt = "\n".join(m.content for m in render_optimizer_prompt(cfg, [refl(i) for i in range(4)], P0, SPACE))
    assert all(f"critique number {i}" in prompt for i in range(4))


@pytest.mark.parametrize(
    "raw, expected",
    [
        ("search: a\nclick: b", {"search": "a", "click": "b"}),
        ("- search: use\n   short queries\n* click: b", {"search": "use short queries", "click": "b"}),
        ("Here you go:\nsearch: x", {"search": "x"}),
        ("buy: nope\n  more nope\nclick: y", {"click": "y"}),
        ("search:\nclick:   ", {}),
        ("no structure at all", {}),
    ],
)
def test_parse_principles(raw, expected):
    assert parse_principles(raw, SPACE) == expected


def test_parse_principles_truncates_on_space():
    out = parse_principles("search: " + "word " * 100, SPACE, max_chars=23)
    assert out["search"] == "word word word word"


@pytest.mark.parametrize(
    "text, n, out",
    [("abc def ghi", 20, "abc def ghi"), ("abc def ghi", 9, "abc def"), ("abc def ghi", 7, "abc def"), ("abcdefgh", 4, "abcd")],
)
def test_truncate_at_space(text, n, out):
    assert truncate_at_space(text, n) == out


def test_lineage_through_store(tmp_path):
    store = PrincipleStore(tmp_path)
    p = P0
    store.save(p)
    b = opt_backend()
    for method in ("batch", "traj", "batch"):
        p = optimize(RpoConfig(method), [refl(0), refl(1)], p, SPACE, b)
        store.save(p)
    assert store.versions() == [0, 1, 2, 3]
    assert store.lineage(3) == [3, 2, 1, 0]
    assert store.load(2).provenance is Provenance.RPO_TRAJ


def test_unknown_method_rejected():
    with pytest.raises(ValueError):
        RpoConfig("sgd")
