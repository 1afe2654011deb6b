"""Acceptance gate: ten numbered criteria, each with its own tolerance and time budget.

Run ``pytest tests/test_acceptance.py`` and read the "acceptance criteria" section of
the terminal summary for one PASS/FAIL line per criterion.
"""
import filecmp
import itertools
import math
import random
import time
from contextlib import contextmanager
from pathlib import Path

import pytest

from oracles import (brute_core_numbers, dense_pagerank, direct_assortativity,
                     exhaustive_minimum, snowball_closure, undirected_adjacency)
from randomfix import oracle_inputs, write_random_fixture
from scilist.cli import main
from scilist.communities import detect_communities, map_equation
from scilist.lexicon import OES_GROUPS, match_titles
from scilist.netanalysis import DirectedGraph, assortativity_discrete, k_core_numbers, pagerank
from scilist.profiles import gender_summary, workforce_table
from scilist.sampler import snowball
from scilist.source import FixtureSource
from scilist.urlshare import domain_counts, scientific_fraction
from test_lexicon import embedding_check
from test_urlshare import SCI, expanded

DEMO_INI = Path(__file__).resolve().parents[1] / "demo" / "demo.ini"


@contextmanager
def budget(seconds):
    t0 = time.perf_counter()
    yield
    elapsed = time.perf_counter() - t0
    assert elapsed < seconds, f"took {elapsed:.2f}s, budget {seconds}s"


def random_weighted_digraph(rng, n, p):
    nodes = [f"v{i:03d}" for i in range(n)]
    edges = [(a, b, float(rng.randint(1, 9))) for a in nodes for b in nodes
             if a != b and rng.random() < p]
    return nodes, edges


# ---------------------------------------------------------------- 1

@pytest.mark.criterion(1, "workforce table arithmetic")
def test_workforce_ratios():
    # group order: computer & info, mathematical, life, physical, social (percent)
    employment = [2.71, 15.48, 30.13, 30.68, 21.00]
    twitter = [3.62, 3.18, 25.18, 19.66, 48.37]
    want = [1.336, 0.205, 0.836, 0.641, 2.303]
    with budget(1.0):
        rows = workforce_table(dict(zip(OES_GROUPS, twitter)), dict(zip(OES_GROUPS, employment)))
    assert [r.group for r in rows] == list(OES_GROUPS)
    for r, w in zip(rows, want):
        assert abs(r.ratio - w) <= 0.001


# ---------------------------------------------------------------- 2

@pytest.mark.criterion(2, "gender arithmetic")
def test_gender_arithmetic():
    with budget(1.0):
        s = gender_summary(12732, 20232, 45867)
    assert abs(s.ratio - 0.629) <= 0.001
    assert abs(100 * s.female_share - 38.6) <= 0.1
    assert abs(100 * s.identified_fraction - 71.9) <= 0.1


# ---------------------------------------------------------------- 3

@pytest.mark.criterion(3, "snowball matches closure oracle")
def test_snowball_closure(tmp_path, lexicon):
    rng = random.Random(2024)
    with budget(30.0):
        sizes = [(1000, 200), (1000, 10)] + [(rng.randint(5, 1000), rng.randint(1, 200))
                                            for _ in range(18)]
        for k, (n_users, n_lists) in enumerate(sizes):
            d = tmp_path / f"world{k}"
            users, lists = write_random_fixture(d, rng, n_users, n_lists)
            src = FixtureSource(d, page_size=rng.randint(3, 100))
            seeds = rng.sample([u.user_id for u in users], min(3, n_users))
            uinfo, linfo = oracle_inputs(users, lists)
            vis, cand, sci = snowball_closure(seeds, uinfo, linfo,
                                              lambda name: bool(match_titles(name, lexicon)))
            for perm in itertools.permutations(seeds):
                res = snowball(list(perm), src, lexicon)
                res.check()
                assert res.visited == vis
                assert res.candidates == cand and res.scientist_lists == sci


# ---------------------------------------------------------------- 4

@pytest.mark.criterion(4, "lexicon longest match, 322 variants, embeddings")
def test_lexicon_behavior(lexicon):
    with budget(5.0):
        ms = match_titles("I am an evolutionary biologist", lexicon)
        assert [m.entry.canonical for m in ms] == ["evolutionary biologist"]
        assert len(lexicon.variants) == 322
        rng = random.Random(4)
        assert all(embedding_check(lexicon, rng) for _ in range(100))


# ---------------------------------------------------------------- 5

@pytest.mark.criterion(5, "pagerank matches dense solve")
def test_pagerank_oracle():
    rng = random.Random(5)
    with budget(10.0):
        for _ in range(50):
            nodes, edges = random_weighted_digraph(rng, rng.randint(1, 49), rng.random() * 0.2)
            nodes.append("sink")  # at least one dangling node per graph
            edges += [(v, "sink", 1.0) for v in nodes[:-1] if rng.random() < 0.1]
            pr = pagerank(DirectedGraph(nodes, edges)).values
            want = dense_pagerank(nodes, edges)
            assert max(abs(pr[v] - want[v]) for v in nodes) <= 1e-9
            assert abs(math.fsum(pr.values()) - 1.0) <= 1e-9


# ---------------------------------------------------------------- 6

@pytest.mark.criterion(6, "k-core matches brute force, nestedness")
def test_kcore_oracle():
    rng = random.Random(6)
    with budget(10.0):
        for _ in range(50):
            n = rng.randint(1, 200)
            nodes, edges = random_weighted_digraph(rng, n, rng.random() * min(1.0, 8 / n))
            core = k_core_numbers(DirectedGraph(nodes, edges)).values
            adj = undirected_adjacency(nodes, edges)
            assert core == brute_core_numbers(nodes, adj)
            for k in range(max(core.values()) + 1):
                members = {v for v in nodes if core[v] >= k}
                assert all(sum(u in members for u in adj[v]) >= k for v in members)


# ---------------------------------------------------------------- 7

@pytest.mark.criterion(7, "assortativity exact cases and oracle")
def test_assortativity():
    with budget(5.0):
        perfect = DirectedGraph(list("abcdef"), [("a", "b", 2.0), ("b", "c", 1.0),
                                                 ("d", "e", 5.0), ("f", "d", 1.0)])
        assert assortativity_discrete(perfect, dict(zip("abcdef", "xxxyyy"))) == 1.0

        a, b = [1, 2, 3], [2, 1, 4]
        nodes = [f"{c}{k}" for c in "xyz" for k in (1, 2)]
        edges = [(f"{ci}1", f"{cj}2", float(a[i] * b[j]))
                 for i, ci in enumerate("xyz") for j, cj in enumerate("xyz")]
        r = assortativity_discrete(DirectedGraph(nodes, edges), {v: v[0] for v in nodes})
        assert abs(r) < 1e-12

        rng = random.Random(7)
        checked = 0
        while checked < 30:
            nodes, edges = random_weighted_digraph(rng, rng.randint(4, 30), 0.25)
            labels = {v: rng.choice("ABCD") for v in nodes}
            r = assortativity_discrete(DirectedGraph(nodes, edges), labels)
            if r is None:
                continue
            assert abs(r - direct_assortativity(edges, labels)) <= 1e-12
            assert -1.0 <= r <= 1.0
            checked += 1


# ---------------------------------------------------------------- 8

def small_graphs():
    rng = random.Random(8)
    for k in range(24):
        n = 2 + k % 7  # sizes 2..8, every size at least three times
        nodes, edges = random_weighted_digraph(rng, n, 0.2 + 0.4 * rng.random())
        yield nodes, edges
    clique = [(a, b, 1.0) for a in "abcd" for b in "abcd" if a != b]
    other = [(a, b, 1.0) for a in "efgh" for b in "efgh" if a != b]
    yield list("abcdefgh"), clique + other + [("d", "e", 1.0), ("e", "d", 1.0)]


def planted(rng, n_inter):
    left = [f"a{i}" for i in range(10)]
    right = [f"b{i}" for i in range(10)]
    edges = [(x, y, 1.0) for side in (left, right) for x in side for y in side if x != y]
    for x, y in rng.sample([(x, y) for x in left for y in right], n_inter):
        edges += [(x, y, 1.0), (y, x, 1.0)]
    return DirectedGraph(left + right, edges), [set(left), set(right)]


@pytest.mark.criterion(8, "map equation minimum and planted recovery")
def test_map_equation():
    with budget(60.0):
        pair = DirectedGraph(["a", "b"], [("a", "b", 1.0), ("b", "a", 1.0)])
        assert map_equation(pair, {"a": 1, "b": 1}) == 1.0
        for nodes, edges in small_graphs():
            g = DirectedGraph(nodes, edges)
            assert detect_communities(g, seed=0).codelength <= exhaustive_minimum(nodes, g.edges) + 1e-9

        rng = random.Random(88)
        recovered = 0
        for seed in range(10):
            g, truth = planted(rng, seed % 3)
            p = detect_communities(g, seed=seed)
            recovered += sorted(map(set, p.modules.values()), key=min) == truth
        assert recovered >= 9


# ---------------------------------------------------------------- 9

@pytest.mark.criterion(9, "url semantics on hand corpus")
def test_url_semantics():
    with budget(5.0):
        ms = expanded()
        s = scientific_fraction(ms, SCI)
        counts = domain_counts(ms)
    assert s == {"A": 2 / 3, "B": 0.5, "D": 0.0}
    assert counts == {"arxiv.org": 1, "youtube.com": 1, "nature.com": 1, "nytimes.com": 2,
                      "sciencedirect.com": 1, "bit.ly": 1}
    assert sum(counts.values()) == len(ms) == 7


# ---------------------------------------------------------------- 10

def same_tree(a: Path, b: Path) -> bool:
    left = sorted(p.relative_to(a) for p in a.rglob("*"))
    right = sorted(p.relative_to(b) for p in b.rglob("*"))
    if left != right:
        return False
    return all(filecmp.cmp(a / p, b / p, shallow=False) for p in left if (a / p).is_file())


@pytest.mark.criterion(10, "end-to-end determinism")
def test_end_to_end_determinism(tmp_path):
    with budget(60.0):
        for run in ("one", "two"):
            assert main(["all", "-c", str(DEMO_INI), "--out", str(tmp_path / run)]) == 0
    assert same_tree(tmp_path / "one", tmp_path / "two")
