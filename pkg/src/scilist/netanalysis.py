"""Follower/retweet/mention networks and their centralities, group shares and assortativity."""
from __future__ import annotations

import heapq
import logging
import math
import re
from collections import defaultdict
from dataclasses import dataclass
from typing import Hashable, Iterable, Mapping, Sequence

import numpy as np
import scipy.sparse as sp

from .source import REPLY, RETWEET, TWEET, Status

log = logging.getLogger(__name__)

FOLLOWER, RETWEET_NET, MENTION = "Follower", "Retweet", "Mention"
IN_DEGREE, IN_STRENGTH, PAGERANK, KCORE = "InDegree", "InStrength", "PageRank", "KCore"

_MENTION = re.compile(r"(?<![\w@])@(\w{1,15})")


class DirectedGraph:
    """Weighted digraph over sorted string node ids; parallel edges are summed."""

    def __init__(self, nodes: Iterable[str] = (), edges: Iterable[tuple[str, str, float]] = ()):
        weights: dict[tuple[str, str], float] = {}
        node_set = set(nodes)
        for src, dst, w in edges:
            if w <= 0:
                raise ValueError(f"edge weight must be positive: {src}->{dst} {w}")
            node_set.add(src)
            node_set.add(dst)
            weights[(src, dst)] = weights.get((src, dst), 0.0) + float(w)
        self.nodes: list[str] = sorted(node_set)
        self.index: dict[str, int] = {n: i for i, n in enumerate(self.nodes)}
        self._w = dict(sorted(weights.items()))
        self.succ: list[dict[int, float]] = [{} for _ in self.nodes]
        self.pred: list[dict[int, float]] = [{} for _ in self.nodes]
        for (s, d), w in self._w.items():
            i, j = self.index[s], self.index[d]
            self.succ[i][j] = w
            self.pred[j][i] = w

    def __len__(self) -> int:
        return len(self.nodes)

    @property
    def edges(self) -> list[tuple[str, str, float]]:
        return [(s, d, w) for (s, d), w in self._w.items()]

    def number_of_edges(self) -> int:
        return len(self._w)

    def weight(self, src: str, dst: str) -> float:
        return self._w.get((src, dst), 0.0)

    def subgraph(self, nodes: Iterable[str]) -> DirectedGraph:
        keep = set(nodes) & set(self.nodes)
        return DirectedGraph(keep, ((s, d, w) for (s, d), w in self._w.items()
                                    if s in keep and d in keep))

    def undirected_neighbors(self) -> list[set[int]]:
        nbrs = [set() for _ in self.nodes]
        for i, out in enumerate(self.succ):
            for j in out:
                if i != j:
                    nbrs[i].add(j)
                    nbrs[j].add(i)
        return nbrs


# -- construction -----------------------------------------------------------

def build_follower_network(follows: Iterable[tuple[str, str]], scientists: Iterable[str]) -> DirectedGraph:
    """Edge a->b (weight 1) iff a follows b, both scientists."""
    sci = set(scientists)
    pairs = {(a, b) for a, b in follows if a in sci and b in sci and a != b}
    return DirectedGraph(sci, ((a, b, 1.0) for a, b in sorted(pairs)))


def build_retweet_network(statuses: Iterable[Status], scientists: Iterable[str]) -> DirectedGraph:
    """Edge a->b weighted by the number of button-retweets of b's tweets by a."""
    sci = set(scientists)
    edges = []
    for st in statuses:
        if st.kind != RETWEET:
            continue
        a, b = st.author_id, st.original.author_id
        if a != b and a in sci and b in sci:
            edges.append((a, b, 1.0))
    return DirectedGraph(sci, edges)


def mentioned_names(text: str) -> list[str]:
    return [m.lower() for m in _MENTION.findall(text)]


def build_mention_network(statuses: Iterable[Status], screen_names: Mapping[str, str],
                          scientists: Iterable[str]) -> DirectedGraph:
    """Edge a->b weighted by how often a's own tweets and replies mention @b.

    ``screen_names`` maps lowercase screen names to user ids. Retweets are
    skipped so that copying someone's tweet is not a mention of them.
    """
    sci = set(scientists)
    lookup = {k.lower(): v for k, v in screen_names.items()}
    edges = []
    for st in statuses:
        if st.kind not in (TWEET, REPLY) or st.author_id not in sci:
            continue
        for name in mentioned_names(st.text):
            b = lookup.get(name)
            if b is not None and b != st.author_id and b in sci:
                edges.append((st.author_id, b, 1.0))
    return DirectedGraph(sci, edges)


def build_network(kind: str, data, scientists: Iterable[str],
                  screen_names: Mapping[str, str] | None = None) -> DirectedGraph:
    if kind == FOLLOWER:
        return build_follower_network(data, scientists)
    if kind == RETWEET_NET:
        return build_retweet_network(data, scientists)
    if kind == MENTION:
        return build_mention_network(data, screen_names or {}, scientists)
    raise ValueError(f"unknown network kind {kind!r}")


# -- components -------------------------------------------------------------

def weak_components(g: DirectedGraph) -> list[list[str]]:
    parent = list(range(len(g)))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for i, out in enumerate(g.succ):
        for j in out:
            ri, rj = find(i), find(j)
            if ri != rj:
                parent[max(ri, rj)] = min(ri, rj)
    comps: dict[int, list[str]] = defaultdict(list)
    for i, n in enumerate(g.nodes):
        comps[find(i)].append(n)
    return sorted(comps.values(), key=lambda c: (-len(c), c[0]))


def largest_wcc(g: DirectedGraph) -> DirectedGraph:
    if not len(g):
        return DirectedGraph()
    return g.subgraph(weak_components(g)[0])


# -- centralities -----------------------------------------------------------

@dataclass(frozen=True)
class CentralityVector:
    kind: str
    values: dict[str, float]

    def top(self, k: int) -> list[tuple[str, float]]:
        return sorted(self.values.items(), key=lambda kv: (-kv[1], kv[0]))[:k]


class PageRankError(RuntimeError):
    pass


def in_degree(g: DirectedGraph) -> CentralityVector:
    return CentralityVector(IN_DEGREE, {n: len(g.pred[i]) for i, n in enumerate(g.nodes)})


def in_strength(g: DirectedGraph) -> CentralityVector:
    return CentralityVector(
        IN_STRENGTH, {n: math.fsum(g.pred[i][j] for j in sorted(g.pred[i]))
                      for i, n in enumerate(g.nodes)})


def transition_matrix(g: DirectedGraph) -> tuple[sp.csr_matrix, np.ndarray]:
    """Row-stochastic matrix of out-weights and a boolean dangling-node mask."""
    n = len(g)
    rows, cols, vals = [], [], []
    out_w = np.zeros(n)
    for i, out in enumerate(g.succ):
        tot = math.fsum(out[j] for j in sorted(out))
        out_w[i] = tot
        for j in sorted(out):
            rows.append(i)
            cols.append(j)
            vals.append(out[j] / tot)
    m = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
    return m, out_w == 0


def pagerank_array(g: DirectedGraph, damping: float = 0.85, tol: float = 1e-12,
                   max_iter: int = 1000) -> np.ndarray:
    if not 0 < damping < 1:
        raise ValueError("damping must be in (0, 1)")
    n = len(g)
    if n == 0:
        return np.zeros(0)
    m, dangling = transition_matrix(g)
    mt = m.T.tocsr()
    x = np.full(n, 1.0 / n)
    for _ in range(max_iter):
        nxt = damping * (mt @ x) + (damping * x[dangling].sum() + 1.0 - damping) / n
        nxt /= nxt.sum()
        err = np.abs(nxt - x).sum()
        x = nxt
        if err < tol:
            return x
    raise PageRankError(f"PageRank did not converge in {max_iter} iterations (residual {err:.3e})")


def pagerank(g: DirectedGraph, damping: float = 0.85, tol: float = 1e-12,
             max_iter: int = 1000) -> CentralityVector:
    x = pagerank_array(g, damping, tol, max_iter)
    return CentralityVector(PAGERANK, {n: float(x[i]) for i, n in enumerate(g.nodes)})


def k_core_numbers(g: DirectedGraph, mode: str = "undirected") -> CentralityVector:
    """Core numbers by repeated removal of a minimum-degree node.

    ``mode`` selects the degree: ``undirected`` (simple undirected projection,
    the default), or ``in``, ``out``, ``total`` on the directed graph, where
    mutual edges count twice for ``total``.
    """
    n = len(g)
    if mode == "undirected":
        nbrs = g.undirected_neighbors()
        deg = [len(s) for s in nbrs]
        affects = [[(j, 1) for j in s] for s in nbrs]
    elif mode in ("in", "out", "total"):
        deg = [0] * n
        affects = [[] for _ in range(n)]
        for i, out in enumerate(g.succ):
            for j in out:
                if i == j:
                    continue
                if mode in ("in", "total"):
                    deg[j] += 1
                    affects[i].append((j, 1))
                if mode in ("out", "total"):
                    deg[i] += 1
                    affects[j].append((i, 1))
    else:
        raise ValueError(f"unknown k-core mode {mode!r}")

    core = [0] * n
    removed = [False] * n
    heap = [(d, i) for i, d in enumerate(deg)]
    heapq.heapify(heap)
    k = 0
    while heap:
        d, i = heapq.heappop(heap)
        if removed[i] or d != deg[i]:
            continue
        removed[i] = True
        k = max(k, d)
        core[i] = k
        for j, amount in affects[i]:
            if not removed[j]:
                deg[j] -= amount
                heapq.heappush(heap, (deg[j], j))
    return CentralityVector(KCORE, {nd: core[i] for i, nd in enumerate(g.nodes)})


# -- group shares -----------------------------------------------------------

def group_share(c: CentralityVector, groups: Mapping[str, Hashable | None],
                all_groups: Sequence[Hashable] = (), include_unknown: bool = False) -> dict:
    """Fraction of total centrality held by each group.

    Nodes without a group are left out of the total unless
    ``include_unknown`` is set.
    """
    sums = {g: 0.0 for g in all_groups}
    covered = []
    for node, value in sorted(c.values.items()):
        grp = groups.get(node)
        if grp is None:
            continue
        covered.append(value)
        sums[grp] = sums.get(grp, 0.0) + value
    if include_unknown:
        total = math.fsum(v for _, v in sorted(c.values.items()))
    else:
        total = math.fsum(covered)
    return {g: (s / total if total else 0.0) for g, s in sums.items()}


def normalized_group_share(c: CentralityVector, groups: Mapping[str, Hashable | None],
                           all_groups: Sequence[Hashable] = (),
                           include_unknown: bool = False) -> dict:
    """Group share divided by the group's fraction of nodes; None for empty groups."""
    shares = group_share(c, groups, all_groups, include_unknown)
    sizes: dict = {g: 0 for g in shares}
    for node in c.values:
        grp = groups.get(node)
        if grp is not None:
            sizes[grp] += 1
    n = len(c.values) if include_unknown else sum(sizes.values())
    return {g: (shares[g] / (sizes[g] / n) if sizes[g] else None) for g in shares}


# -- assortativity ----------------------------------------------------------

def mixing_counts(g: DirectedGraph, labels: Mapping[str, Hashable | None],
                  weighted: bool = True) -> tuple[list, np.ndarray]:
    """Unnormalized category mixing matrix over edges with both ends labelled."""
    cats = sorted({labels[n] for n in g.nodes if labels.get(n) is not None}, key=str)
    pos = {c: i for i, c in enumerate(cats)}
    e = np.zeros((len(cats), len(cats)))
    for s, d, w in g.edges:
        ls, ld = labels.get(s), labels.get(d)
        if ls is None or ld is None:
            continue
        e[pos[ls], pos[ld]] += w if weighted else 1.0
    return cats, e


def assortativity_from_counts(e: np.ndarray) -> float | None:
    e = np.asarray(e, dtype=float)
    diag = math.fsum(np.diag(e))
    off = math.fsum(e[~np.eye(len(e), dtype=bool)])
    total = diag + off
    if total == 0:
        return None
    a = e.sum(axis=1)
    b = e.sum(axis=0)
    ab = math.fsum(a * b)
    denom = total * total - ab
    if denom == 0:
        return None
    return (total * diag - ab) / denom


def assortativity_discrete(g: DirectedGraph, labels: Mapping[str, Hashable | None],
                           weighted: bool = True) -> float | None:
    """Categorical assortativity of a directed graph; None when undefined."""
    _, e = mixing_counts(g, labels, weighted)
    r = assortativity_from_counts(e)
    if r is None:
        log.warning("assortativity undefined (fewer than two categories or no labelled edges)")
    return r
