"""Two-level map-equation community detection on directed graphs.

Flow model: node visit rates are PageRank (uniform teleportation), and the
flow on link i->j is ``damping * p_i * w_ij / w_i``. Teleportation moves the
walker but is not encoded, so it never adds to module exit or entry rates.

With per-module entry rate q_in, exit rate q_out and total visit rate p_m::

    L = plogp(sum q_in) - sum plogp(q_in) - sum plogp(q_out)
        - sum_nodes plogp(p) + sum plogp(q_out + p_m)

which is the index-codebook term plus the module-codebook terms.
"""
from __future__ import annotations

import logging
import math
import random
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Hashable, Mapping

import numpy as np

from .lexicon import tokenize
from .netanalysis import DirectedGraph, pagerank, pagerank_array

log = logging.getLogger(__name__)

STOP_WORDS = frozenset(
    "a and of the in at to i for your on are my own with".split()
)
_EPS = 1e-10


def plogp(x: float) -> float:
    return x * math.log2(x) if x > 0 else 0.0


@dataclass
class FlowGraph:
    nodes: list[str]
    node_flow: np.ndarray
    out_links: list[dict[int, float]]

    @classmethod
    def from_graph(cls, g: DirectedGraph, damping: float = 0.85) -> FlowGraph:
        if not len(g):
            raise ValueError("map equation needs a nonempty graph")
        p = pagerank_array(g, damping)
        out = []
        for i, succ in enumerate(g.succ):
            tot = math.fsum(succ[j] for j in sorted(succ))
            out.append({j: damping * p[i] * w / tot for j, w in sorted(succ.items()) if j != i})
        return cls(list(g.nodes), p, out)

    @property
    def node_entropy_term(self) -> float:
        return math.fsum(plogp(x) for x in self.node_flow)


def _codelength_terms(flow: FlowGraph, module_of: list) -> float:
    enter: dict = defaultdict(float)
    exit_: dict = defaultdict(float)
    mflow: dict = defaultdict(float)
    for i, m in enumerate(module_of):
        mflow[m] += flow.node_flow[i]
        for j, f in flow.out_links[i].items():
            if module_of[j] != m:
                exit_[m] += f
                enter[module_of[j]] += f
    mods = sorted(mflow, key=str)
    total_enter = math.fsum(enter[m] for m in mods)
    return (plogp(total_enter)
            - math.fsum(plogp(enter[m]) for m in mods)
            - math.fsum(plogp(exit_[m]) for m in mods)
            - flow.node_entropy_term
            + math.fsum(plogp(exit_[m] + mflow[m]) for m in mods))


def map_equation(g: DirectedGraph, assignment: Mapping[str, Hashable],
                 damping: float = 0.85) -> float:
    """Two-level map-equation codelength (bits per step) of ``assignment``."""
    flow = FlowGraph.from_graph(g, damping)
    missing = [n for n in g.nodes if n not in assignment]
    if missing:
        raise ValueError(f"assignment misses nodes: {missing[:5]}")
    return max(0.0, _codelength_terms(flow, [assignment[n] for n in g.nodes]))


@dataclass
class Partition:
    assignment: dict[str, int]
    codelength: float
    seed: int | None = None

    @property
    def modules(self) -> dict[int, list[str]]:
        out: dict[int, list[str]] = defaultdict(list)
        for n, c in sorted(self.assignment.items()):
            out[c].append(n)
        return dict(sorted(out.items()))


class _Optimizer:
    """Greedy module moves over units (groups of original nodes)."""

    def __init__(self, flow: FlowGraph, units: list[list[int]], unit_module: list[int],
                 rng: random.Random, trace: list | None):
        self.rng = rng
        self.trace = trace
        self.units = units
        n = len(units)
        owner = {}
        for u, members in enumerate(units):
            for i in members:
                owner[i] = u
        self.uflow = [math.fsum(flow.node_flow[i] for i in members) for members in units]
        self.uout: list[dict[int, float]] = [defaultdict(float) for _ in range(n)]
        self.uin: list[dict[int, float]] = [defaultdict(float) for _ in range(n)]
        for i, links in enumerate(flow.out_links):
            for j, f in links.items():
                a, b = owner[i], owner[j]
                if a != b:
                    self.uout[a][b] += f
                    self.uin[b][a] += f
        self.out_tot = [math.fsum(d.values()) for d in self.uout]
        self.in_tot = [math.fsum(d.values()) for d in self.uin]
        self.module = list(unit_module)
        self.mflow: dict[int, float] = defaultdict(float)
        self.menter: dict[int, float] = defaultdict(float)
        self.mexit: dict[int, float] = defaultdict(float)
        self.msize: dict[int, int] = defaultdict(int)
        for u in range(n):
            m = self.module[u]
            self.mflow[m] += self.uflow[u]
            self.msize[m] += 1
            for v, f in self.uout[u].items():
                if self.module[v] != m:
                    self.mexit[m] += f
                    self.menter[self.module[v]] += f
        self.next_id = max(self.module, default=-1) + 1
        self.sum_enter = math.fsum(self.menter.values())

    def _links_by_module(self, u: int) -> dict[int, list[float]]:
        acc: dict[int, list[float]] = defaultdict(lambda: [0.0, 0.0])
        for v, f in self.uout[u].items():
            acc[self.module[v]][0] += f
        for v, f in self.uin[u].items():
            acc[self.module[v]][1] += f
        return acc

    def _delta(self, u: int, a: int, b: int, links: dict[int, list[float]]):
        oa, ia = links.get(a, (0.0, 0.0))
        ob, ib = links.get(b, (0.0, 0.0))
        out_u, in_u, p = self.out_tot[u], self.in_tot[u], self.uflow[u]
        ex_a = self.mexit[a] - (out_u - oa) + ia
        en_a = self.menter[a] - (in_u - ia) + oa
        ex_b = self.mexit[b] + (out_u - ob) - ib
        en_b = self.menter[b] + (in_u - ib) - ob
        fl_a = self.mflow[a] - p
        fl_b = self.mflow[b] + p
        ex_a, en_a, ex_b, en_b = (max(0.0, x) for x in (ex_a, en_a, ex_b, en_b))
        fl_a = max(0.0, fl_a)
        new_sum = self.sum_enter - self.menter[a] - self.menter[b] + en_a + en_b
        old = (plogp(self.sum_enter)
               - plogp(self.menter[a]) - plogp(self.menter[b])
               - plogp(self.mexit[a]) - plogp(self.mexit[b])
               + plogp(self.mexit[a] + self.mflow[a]) + plogp(self.mexit[b] + self.mflow[b]))
        new = (plogp(new_sum) - plogp(en_a) - plogp(en_b) - plogp(ex_a) - plogp(ex_b)
               + plogp(ex_a + fl_a) + plogp(ex_b + fl_b))
        return new - old, (ex_a, en_a, fl_a, ex_b, en_b, fl_b, new_sum)

    def _apply(self, u: int, a: int, b: int, vals) -> None:
        ex_a, en_a, fl_a, ex_b, en_b, fl_b, new_sum = vals
        self.mexit[a], self.menter[a], self.mflow[a] = ex_a, en_a, fl_a
        self.mexit[b], self.menter[b], self.mflow[b] = ex_b, en_b, fl_b
        self.sum_enter = new_sum
        self.msize[a] -= 1
        self.msize[b] += 1
        self.module[u] = b
        if self.msize[a] == 0:
            for d in (self.mexit, self.menter, self.mflow, self.msize):
                del d[a]

    def run(self, max_passes: int = 200) -> bool:
        """Move units until a full pass changes nothing; True if anything moved."""
        moved_any = False
        order = list(range(len(self.units)))
        for _ in range(max_passes):
            self.rng.shuffle(order)
            moved = 0
            for u in order:
                a = self.module[u]
                links = self._links_by_module(u)
                cands = sorted(links)
                if self.msize[a] > 1:
                    cands.append(self.next_id)
                best, best_b, best_vals = -_EPS, None, None
                for b in cands:
                    if b == a:
                        continue
                    d, vals = self._delta(u, a, b, links)
                    if d < best:
                        best, best_b, best_vals = d, b, vals
                if best_b is not None:
                    if best_b == self.next_id:
                        self.next_id += 1
                    self._apply(u, a, best_b, best_vals)
                    if self.trace is not None:
                        self.trace.append(best)
                    moved += 1
            if not moved:
                break
            moved_any = True
        return moved_any


def _relabel(module_of: list[int]) -> list[int]:
    ids: dict[int, int] = {}
    return [ids.setdefault(m, len(ids)) for m in module_of]


def _coarse(flow: FlowGraph, module_of: list[int], rng: random.Random, trace) -> list[int]:
    """Repeatedly aggregate modules into units and merge them greedily."""
    module_of = _relabel(module_of)
    while True:
        k = max(module_of) + 1
        units = [[] for _ in range(k)]
        for i, m in enumerate(module_of):
            units[m].append(i)
        opt = _Optimizer(flow, units, list(range(k)), rng, trace)
        if not opt.run():
            return module_of
        merged = _relabel(opt.module)
        module_of = [merged[m] for m in module_of]


def _fine(flow: FlowGraph, module_of: list[int], rng: random.Random, trace) -> list[int]:
    """Single-node moves starting from an existing partition."""
    units = [[i] for i in range(len(module_of))]
    opt = _Optimizer(flow, units, _relabel(module_of), rng, trace)
    opt.run()
    return _relabel(opt.module)


def _one_trial(flow: FlowGraph, rng: random.Random, trace) -> list[int]:
    n = len(flow.nodes)
    module_of = _coarse(flow, list(range(n)), rng, trace)
    best = _codelength_terms(flow, module_of)
    for _ in range(100):
        cand = _coarse(flow, _fine(flow, module_of, rng, trace), rng, trace)
        cl = _codelength_terms(flow, cand)
        if cl < best - _EPS:
            module_of, best = cand, cl
        else:
            break
    return module_of


def detect_communities(g: DirectedGraph, seed: int = 0, trials: int = 10,
                       damping: float = 0.85, trace: list | None = None) -> Partition:
    """Best of ``trials`` randomized greedy searches, compared against one module.

    Communities are numbered from 1 by decreasing size (ties: smallest member
    id). ``trace`` collects the codelength change of every accepted move.
    """
    flow = FlowGraph.from_graph(g, damping)
    n = len(flow.nodes)
    best_mod = [0] * n
    best_len = _codelength_terms(flow, best_mod)
    for t in range(max(1, trials)):
        rng = random.Random(seed * 1_000_003 + t)
        mod = _one_trial(flow, rng, trace)
        cl = _codelength_terms(flow, mod)
        if cl < best_len - _EPS:
            best_mod, best_len = mod, cl
    groups: dict[int, list[str]] = defaultdict(list)
    for i, m in enumerate(best_mod):
        groups[m].append(flow.nodes[i])
    ordered = sorted(groups.values(), key=lambda ms: (-len(ms), min(ms)))
    assignment = {node: cid for cid, ms in enumerate(ordered, 1) for node in ms}
    assignment = dict(sorted(assignment.items()))
    return Partition(assignment, map_equation(g, assignment, damping), seed)


# -- community network ------------------------------------------------------

@dataclass
class CommunityNetwork:
    communities: list[int]
    weights: dict[tuple[int, int], float]
    retained: list[tuple[int, int]]
    connected: bool

    def ordered_edges(self) -> list[tuple[tuple[int, int], float]]:
        return sorted(self.weights.items(), key=lambda kv: (-kv[1], kv[0]))


def community_network(g: DirectedGraph, partition: Partition, min_size: int = 10) -> CommunityNetwork:
    """Supernode graph of communities with at least ``min_size`` members.

    Pair weights sum edge weights in both directions. The retained edges are
    the shortest prefix of the heaviest-first edge order that connects every
    supernode; when no prefix does, the prefix up to the last edge that joined
    two components is kept and ``connected`` is False.
    """
    sizes = Counter(partition.assignment.values())
    keep = sorted(c for c, s in sizes.items() if s >= min_size)
    kept = set(keep)
    weights: dict[tuple[int, int], float] = defaultdict(float)
    for s, d, w in g.edges:
        a, b = partition.assignment.get(s), partition.assignment.get(d)
        if a is None or b is None or a == b or a not in kept or b not in kept:
            continue
        weights[(min(a, b), max(a, b))] += w
    weights = dict(sorted(weights.items()))
    net = CommunityNetwork(keep, weights, [], len(keep) <= 1)
    if len(keep) <= 1:
        return net

    parent = {c: c for c in keep}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    components = len(keep)
    last_merge = 0
    order = net.ordered_edges()
    for pos, ((a, b), _) in enumerate(order, 1):
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)
            components -= 1
            last_merge = pos
            if components == 1:
                break
    net.retained = [pair for pair, _ in order[:last_merge]]
    net.connected = components == 1
    if not net.connected:
        log.warning("community network stays disconnected (%d components)", components)
    return net


# -- labels -----------------------------------------------------------------

@dataclass
class CommunitySummary:
    community_id: int
    size: int
    label_words: list[str] = field(default_factory=list)
    top_members: list[tuple[str, float]] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"community_id": self.community_id, "size": self.size,
                "label_words": self.label_words,
                "top_members": [[u, pr] for u, pr in self.top_members]}


def label_words(descriptions, k: int = 5) -> list[str]:
    counts: Counter = Counter()
    for text in descriptions:
        counts.update(t for t, _, _ in tokenize(text) if t not in STOP_WORDS)
    return [w for w, _ in sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[:k]]


def label_and_rank(partition: Partition, profiles: Mapping[str, str], g: DirectedGraph,
                   damping: float = 0.85, n_words: int = 5, n_top: int = 3) -> list[CommunitySummary]:
    """Label each community by its members' most frequent bio words and list
    its top members by PageRank on ``g``."""
    pr = pagerank(g, damping).values if len(g) else {}
    out = []
    for cid, members in partition.modules.items():
        words = label_words(profiles[m] for m in members if m in profiles)
        ranked = sorted(((m, pr.get(m, 0.0)) for m in members), key=lambda x: (-x[1], x[0]))
        out.append(CommunitySummary(cid, len(members), words[:n_words], ranked[:n_top]))
    return out
