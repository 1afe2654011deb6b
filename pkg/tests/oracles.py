"""Slow, obviously-correct reference implementations used by the tests.

None of these import the algorithm they check; they work from dense
matrices, brute-force enumeration or plain fixed-point iteration.
"""
from __future__ import annotations

import math
from collections import defaultdict

import numpy as np


def dense_pagerank(nodes, edges, damping=0.85):
    """Solve the PageRank linear system directly (dangling mass spread uniformly)."""
    n = len(nodes)
    idx = {v: i for i, v in enumerate(nodes)}
    w = np.zeros((n, n))
    for s, d, x in edges:
        w[idx[s], idx[d]] += x
    out = w.sum(axis=1)
    p = np.zeros((n, n))
    for i in range(n):
        if out[i] > 0:
            p[i] = w[i] / out[i]
        else:
            p[i] = 1.0 / n
    a = np.eye(n) - damping * p.T
    rhs = np.full(n, (1.0 - damping) / n)
    x = np.linalg.solve(a, rhs)
    return {v: float(x[idx[v]]) for v in nodes}


def brute_core_numbers(nodes, adjacency):
    """Core numbers by literally peeling for every k.

    ``adjacency`` maps node -> list of nodes whose removal lowers its degree
    by one each (with repeats for multiplicity).
    """
    core = {v: 0 for v in nodes}
    k = 0
    while True:
        k += 1
        alive = set(nodes)
        changed = True
        while changed:
            changed = False
            for v in sorted(alive):
                deg = sum(1 for u in adjacency[v] if u in alive)
                if deg < k:
                    alive.discard(v)
                    changed = True
        if not alive:
            return core
        for v in alive:
            core[v] = k


def undirected_adjacency(nodes, edges):
    nb = {v: set() for v in nodes}
    for s, d, _ in edges:
        if s != d:
            nb[s].add(d)
            nb[d].add(s)
    return {v: sorted(x) for v, x in nb.items()}


def directed_adjacency(nodes, edges, mode):
    """Degree contributions for in/out/total modes of a simple digraph."""
    adj = {v: [] for v in nodes}
    seen = set()
    for s, d, _ in edges:
        if s == d or (s, d) in seen:
            continue
        seen.add((s, d))
        if mode in ("in", "total"):
            adj[d].append(s)
        if mode in ("out", "total"):
            adj[s].append(d)
    return adj


def direct_assortativity(edges, labels, weighted=True):
    cats = sorted({labels[v] for s, d, _ in edges for v in (s, d) if labels.get(v) is not None})
    pos = {c: i for i, c in enumerate(cats)}
    e = np.zeros((len(cats), len(cats)))
    for s, d, w in edges:
        if labels.get(s) is None or labels.get(d) is None:
            continue
        e[pos[labels[s]], pos[labels[d]]] += w if weighted else 1.0
    e = e / e.sum()
    a, b = e.sum(axis=1), e.sum(axis=0)
    return (np.trace(e) - (a * b).sum()) / (1.0 - (a * b).sum())


def set_partitions(items):
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for p in set_partitions(rest):
        for i in range(len(p)):
            yield p[:i] + [[first] + p[i]] + p[i + 1:]
        yield [[first]] + p


def entropy_codelength(nodes, edges, blocks, damping=0.85):
    """Two-level map equation in its entropy form, q H(Q) + sum p_m H(P_m)."""
    pr = dense_pagerank(nodes, edges, damping)
    outw = defaultdict(float)
    for s, d, w in edges:
        outw[s] += w
    module = {v: m for m, blk in enumerate(blocks) for v in blk}
    enter = defaultdict(float)
    exit_ = defaultdict(float)
    for s, d, w in edges:
        if s == d or module[s] == module[d]:
            continue
        f = damping * pr[s] * w / outw[s]
        exit_[module[s]] += f
        enter[module[d]] += f

    def h(parts):
        tot = sum(parts)
        return -sum(x / tot * math.log2(x / tot) for x in parts if x > 0) if tot > 0 else 0.0

    q = sum(enter.values())
    total = q * h([enter[m] for m in range(len(blocks))])
    for m, blk in enumerate(blocks):
        parts = [exit_[m]] + [pr[v] for v in blk]
        total += sum(parts) * h(parts)
    return total


def exhaustive_minimum(nodes, edges, damping=0.85):
    return min(entropy_codelength(nodes, edges, p, damping) for p in set_partitions(list(nodes)))


def snowball_closure(seeds, users, lists, name_matches):
    """Fixed point of: public reachable users open their public scientist lists,
    whose public, space-named members become reachable.

    ``users``: id -> (is_public, display_name); ``lists``: id -> (name, is_public, members).
    Returns (visited, candidates, scientist_lists).
    """
    visited = set(seeds)
    candidates, sci_lists = set(), set()
    changed = True
    while changed:
        changed = False
        for lid, (name, public, members) in lists.items():
            if not public or not name_matches(name):
                continue
            if not any(m in visited and m in users and users[m][0] for m in members):
                continue
            sci_lists.add(lid)
            for m in members:
                if m in users and users[m][0] and " " in users[m][1].strip():
                    candidates.add(m)
                    if m not in visited:
                        visited.add(m)
                        changed = True
    return visited, candidates, sci_lists
