"""Recovery rate of two planted cliques as the number of bridging edges grows.

    python scripts/planted_recovery.py --size 10 --max-bridges 12 --seeds 20
"""
import argparse
import random

from scilist.communities import detect_communities
from scilist.netanalysis import DirectedGraph


def planted(rng, k, bridges):
    left = [f"a{i}" for i in range(k)]
    right = [f"b{i}" for i in range(k)]
    edges = [(x, y, 1.0) for side in (left, right) for x in side for y in side if x != y]
    for x, y in rng.sample([(x, y) for x in left for y in right], bridges):
        edges += [(x, y, 1.0), (y, x, 1.0)]
    return DirectedGraph(left + right, edges), [set(left), set(right)]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--size", type=int, default=10)
    ap.add_argument("--max-bridges", type=int, default=12)
    ap.add_argument("--seeds", type=int, default=20)
    ap.add_argument("--trials", type=int, default=10)
    args = ap.parse_args(argv)
    print("bridges  recovered  mean_modules")
    for b in range(args.max_bridges + 1):
        hits, modules = 0, 0
        for seed in range(args.seeds):
            g, truth = planted(random.Random(seed), args.size, b)
            p = detect_communities(g, seed=seed, trials=args.trials)
            hits += sorted(map(set, p.modules.values()), key=min) == truth
            modules += len(p.modules)
        print(f"{b:7d}  {hits:4d}/{args.seeds:<4d}  {modules / args.seeds:12.2f}")


if __name__ == "__main__":
    main()
