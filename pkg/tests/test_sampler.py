import json
import random

import pytest

from oracles import snowball_closure
from randomfix import oracle_inputs, write_random_fixture
from scilist.lexicon import match_titles
from scilist.sampler import (AttributeRecord, SampleResult, filter_self_identified, has_space,
                             read_attribute_records, select_seeds, snowball)
from scilist.source import FixtureSource, ListRecord, UserProfile, write_fixture


def rec(uid, listed, words):
    return AttributeRecord(uid, listed, tuple((w, 1.0 - i * 0.01) for i, w in enumerate(words)))


def test_seed_selection(lexicon):
    recs = [
        rec("a", 8, ["science", "physicist", "data"]),
        rec("b", 7, ["science", "physicist"]),          # listed fewer than 8 times
        rec("c", 50, ["physicist", "quantum"]),         # no "science" attribute
        rec("d", 50, ["science", "news"]),              # no title among the attributes
        rec("e", 9, ["science"] + ["w"] * 9 + ["ecologist"]),  # title only at rank 11
        rec("f", 9, ["Science", "Ecologists"]),
    ]
    assert select_seeds(recs, lexicon) == ["a", "f"]
    assert select_seeds(recs, lexicon, top_attrs=11) == ["a", "e", "f"]
    assert select_seeds(recs, lexicon, min_listed=7) == ["a", "b", "f"]


def test_attribute_weights_must_descend(tmp_path):
    with pytest.raises(ValueError):
        AttributeRecord("x", 1, (("a", 0.1), ("b", 0.5)))
    with pytest.raises(ValueError):
        AttributeRecord("x", 1, (("a", 0.0),))
    p = tmp_path / "a.jsonl"
    p.write_text(json.dumps({"user_id": 7, "listed_count": 9, "attributes": [["science", 2]]}) + "\n\n")
    assert read_attribute_records(p) == [AttributeRecord("7", 9, (("science", 2.0),))]


def test_has_space():
    assert has_space("Jane Doe") and not has_space("JaneDoe") and not has_space("  Jane ")


def tiny_world(tmp_path):
    users = [
        UserProfile("s", "s", "Seed Person", "physicist"),
        UserProfile("a", "a", "Alice Smith", "astronomer"),
        UserProfile("b", "b", "Bob Jones", "just here"),
        UserProfile("bot", "bot", "ScienceBot", "physicist"),
        UserProfile("p", "p", "Pat Private", "physicist", None, False),
        UserProfile("c", "c", "Carol King", "chemist"),
        UserProfile("z", "z", "Zed Far", "physicist"),
    ]
    lists = [
        ListRecord("L1", "Physicists", "", True, ("s", "a", "bot", "p")),
        ListRecord("L2", "Friends", "physicists I know", True, ("a", "z")),
        ListRecord("L3", "Astronomers", "", True, ("a", "b")),
        ListRecord("L4", "chemists", "", False, ("b", "c")),
    ]
    write_fixture(tmp_path, users, lists, [], {})
    return FixtureSource(tmp_path, page_size=2)


def test_snowball_small_world(tmp_path, lexicon):
    src = tiny_world(tmp_path)
    res = snowball(["s"], src, lexicon)
    assert res.visited == {"s", "a", "b"}
    assert res.candidates == {"s", "a", "b"}
    assert res.scientist_lists == {"L1", "L3"}
    assert filter_self_identified(res, src, lexicon) == {"s", "a"}
    assert res.frontier_log == [(0, "s", None), (1, "a", "L1"), (2, "b", "L3")]
    res.check()


def test_description_flag_opens_more_lists(tmp_path, lexicon):
    src = tiny_world(tmp_path)
    res = snowball(["s"], src, lexicon, match_descriptions=True)
    assert "z" in res.visited and "L2" in res.scientist_lists


def test_needs_a_seed(tmp_path, lexicon):
    with pytest.raises(ValueError):
        snowball([], tiny_world(tmp_path), lexicon)


def test_closure_and_seed_order_on_random_worlds(tmp_path, lexicon):
    rng = random.Random(3)
    for k in range(5):
        d = tmp_path / f"w{k}"
        users, lists = write_random_fixture(d, rng, rng.randint(20, 150), rng.randint(5, 40))
        src = FixtureSource(d, page_size=7)
        seeds = rng.sample([u.user_id for u in users], 3)
        uinfo, linfo = oracle_inputs(users, lists)
        vis, cand, sci = snowball_closure(seeds, uinfo, linfo,
                                          lambda name: bool(match_titles(name, lexicon)))
        results = []
        for perm in (seeds, seeds[::-1], seeds[1:] + seeds[:1]):
            res = snowball(perm, src, lexicon)
            res.check()
            assert res.visited == vis and res.candidates == cand and res.scientist_lists == sci
            results.append(res)
        assert all(r.visited == results[0].visited for r in results)


def test_parallel_prefetch_gives_same_result(tmp_path, lexicon):
    rng = random.Random(8)
    users, _ = write_random_fixture(tmp_path, rng, 200, 50)
    seeds = [u.user_id for u in users[:4]]
    one = snowball(seeds, FixtureSource(tmp_path), lexicon)
    many = snowball(seeds, FixtureSource(tmp_path), lexicon, workers=4)
    assert one.to_dict() == many.to_dict()


def test_checkpoint_resume_matches_full_run(tmp_path, lexicon):
    rng = random.Random(9)
    d = tmp_path / "w"
    users, _ = write_random_fixture(d, rng, 120, 30)
    seeds = [u.user_id for u in users[:3]]
    full = snowball(seeds, FixtureSource(d), lexicon)
    ck = tmp_path / "ck.json"
    snowball(seeds, FixtureSource(d), lexicon, checkpoint_path=ck, checkpoint_every=3)
    state = json.loads(ck.read_text())
    # rewind: pretend the crawl stopped after its first checkpoint
    ck2 = tmp_path / "ck2.json"

    class Stop(Exception):
        pass

    class Flaky(FixtureSource):
        calls = 0

        def fetch_memberships(self, uid):
            Flaky.calls += 1
            if Flaky.calls > 7:
                raise Stop()
            return super().fetch_memberships(uid)

    with pytest.raises(Stop):
        snowball(seeds, Flaky(d), lexicon, checkpoint_path=ck2, checkpoint_every=3)
    resumed = snowball(seeds, FixtureSource(d), lexicon, checkpoint_path=ck2,
                       checkpoint_every=3, resume=True)
    assert resumed.visited == full.visited and resumed.candidates == full.candidates
    assert resumed.frontier_log == full.frontier_log
    assert state["result"]["visited"] == sorted(full.visited)


def test_sample_result_roundtrip():
    r = SampleResult({"a", "b"}, {"L"}, {"b"}, {"b"}, [(0, "a", None), (1, "b", "L")])
    again = SampleResult.from_dict(json.loads(json.dumps(r.to_dict())))
    assert again == r
    again.check()
    bad = SampleResult({"a"}, set(), {"b"}, set(), [(0, "a", None)])
    with pytest.raises(AssertionError):
        bad.check()
