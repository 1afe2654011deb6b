"""Seed selection and list-based snowball sampling."""
from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .lexicon import TitleLexicon, match_titles
from .source import NotFound, Skipped, SourceError

log = logging.getLogger(__name__)

SCIENCE_ATTRIBUTE = "science"


@dataclass(frozen=True)
class AttributeRecord:
    user_id: str
    listed_count: int
    attributes: tuple[tuple[str, float], ...]

    def __post_init__(self):
        attrs = tuple((str(w), float(x)) for w, x in self.attributes)
        object.__setattr__(self, "attributes", attrs)
        weights = [x for _, x in attrs]
        if any(x <= 0 for x in weights):
            raise ValueError(f"{self.user_id}: attribute weights must be positive")
        if weights != sorted(weights, reverse=True):
            raise ValueError(f"{self.user_id}: attributes must be sorted by descending weight")


def read_attribute_records(path: str | Path) -> list[AttributeRecord]:
    """One JSON object per line: ``{"user_id", "listed_count", "attributes": [[word, weight], ...]}``."""
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                d = json.loads(line)
                out.append(AttributeRecord(str(d["user_id"]), int(d["listed_count"]),
                                           tuple(map(tuple, d["attributes"]))))
    return out


def select_seeds(records: Iterable[AttributeRecord], lexicon: TitleLexicon,
                 min_listed: int = 8, top_attrs: int = 10) -> list[str]:
    seeds = []
    for rec in records:
        if rec.listed_count < min_listed:
            continue
        words = [w.casefold() for w, _ in rec.attributes[:top_attrs]]
        if SCIENCE_ATTRIBUTE in words and any(match_titles(w, lexicon) for w in words):
            seeds.append(rec.user_id)
    return sorted(set(seeds))


@dataclass
class SampleResult:
    visited: set[str] = field(default_factory=set)
    scientist_lists: set[str] = field(default_factory=set)
    candidates: set[str] = field(default_factory=set)
    self_identified: set[str] = field(default_factory=set)
    frontier_log: list[tuple[int, str, str | None]] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "visited": sorted(self.visited),
            "scientist_lists": sorted(self.scientist_lists),
            "candidates": sorted(self.candidates),
            "self_identified": sorted(self.self_identified),
            "frontier_log": [list(x) for x in self.frontier_log],
        }

    @classmethod
    def from_dict(cls, d: dict) -> SampleResult:
        return cls(set(d["visited"]), set(d["scientist_lists"]), set(d["candidates"]),
                   set(d.get("self_identified", ())),
                   [(int(s), u, o) for s, u, o in d["frontier_log"]])

    def check(self) -> None:
        if not self.self_identified <= self.candidates <= self.visited:
            raise AssertionError("self_identified <= candidates <= visited violated")
        logged = [u for _, u, _ in self.frontier_log]
        if len(logged) != len(set(logged)) or set(logged) != self.visited:
            raise AssertionError("frontier_log does not replay to visited")


def has_space(display_name: str) -> bool:
    return " " in display_name.strip()


class _Crawl:
    """Mutable BFS state, kept separate so it can be checkpointed."""

    def __init__(self, seeds: Sequence[str]):
        self.result = SampleResult()
        self.queue: list[str] = []
        self.seen_lists: set[str] = set()
        self.named: dict[str, bool] = {}
        self.dequeues = 0
        for s in dict.fromkeys(seeds):
            self.result.visited.add(s)
            self.result.frontier_log.append((0, s, None))
            self.queue.append(s)

    def to_dict(self) -> dict:
        return {"result": self.result.to_dict(), "queue": self.queue,
                "seen_lists": sorted(self.seen_lists), "named": dict(sorted(self.named.items())),
                "dequeues": self.dequeues}

    @classmethod
    def from_dict(cls, d: dict) -> _Crawl:
        c = cls([])
        c.result = SampleResult.from_dict(d["result"])
        c.queue = list(d["queue"])
        c.seen_lists = set(d["seen_lists"])
        c.named = dict(d["named"])
        c.dequeues = int(d["dequeues"])
        return c


def snowball(seeds: Sequence[str], source, lexicon: TitleLexicon, *,
             match_descriptions: bool = False, workers: int = 1,
             checkpoint_path: str | Path | None = None, checkpoint_every: int = 0,
             resume: bool = False) -> SampleResult:
    """Breadth-first expansion over list memberships.

    A dequeued public user's lists are scanned; every public list whose name
    carries a scientist title has its members fetched, and members whose
    display name contains a space are queued if unseen. Runs until the queue
    is empty.

    With ``workers > 1`` the memberships of a whole BFS layer are fetched
    concurrently; the layer is then processed in FIFO order so the result is
    the same as the sequential crawl.
    """
    if checkpoint_path is not None and resume and Path(checkpoint_path).exists():
        crawl = _Crawl.from_dict(json.loads(Path(checkpoint_path).read_text(encoding="utf-8")))
        log.info("resumed crawl at %d dequeues", crawl.dequeues)
    else:
        if not seeds:
            raise ValueError("snowball needs at least one seed")
        crawl = _Crawl(seeds)
    res = crawl.result

    def list_matches(lr) -> bool:
        if match_titles(lr.name, lexicon):
            return True
        return match_descriptions and bool(match_titles(lr.description, lexicon))

    def spaced(uid: str) -> bool:
        if uid not in crawl.named:
            try:
                crawl.named[uid] = has_space(source.fetch_profile(uid).display_name)
            except SourceError as exc:
                log.info("member %s not queued: %s", uid, exc)
                crawl.named[uid] = False
        return crawl.named[uid]

    def memberships(uid: str):
        try:
            return source.fetch_memberships(uid)
        except (Skipped, NotFound) as exc:
            log.info("skipping user %s: %s", uid, exc)
            return None

    pool = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        while crawl.queue:
            layer, crawl.queue = crawl.queue, []
            if pool is not None:
                fetched = list(pool.map(memberships, layer))
            else:
                fetched = None
            for pos, uid in enumerate(layer):
                lists = fetched[pos] if fetched is not None else memberships(uid)
                crawl.dequeues += 1
                step = crawl.dequeues
                for lr in sorted(lists or (), key=lambda lr: lr.list_id):
                    if lr.list_id in crawl.seen_lists:
                        continue
                    crawl.seen_lists.add(lr.list_id)
                    if not lr.is_public or not list_matches(lr):
                        continue
                    try:
                        members = source.fetch_members(lr.list_id)
                    except (Skipped, NotFound) as exc:
                        log.info("skipping list %s: %s", lr.list_id, exc)
                        continue
                    res.scientist_lists.add(lr.list_id)
                    for m in members:
                        if not spaced(m):
                            continue
                        res.candidates.add(m)
                        if m not in res.visited:
                            res.visited.add(m)
                            res.frontier_log.append((step, m, lr.list_id))
                            crawl.queue.append(m)
                if checkpoint_path is not None and checkpoint_every > 0 \
                        and crawl.dequeues % checkpoint_every == 0:
                    pending = crawl.queue
                    crawl.queue = layer[pos + 1:] + pending
                    _write_checkpoint(checkpoint_path, crawl)
                    crawl.queue = pending
    finally:
        if pool is not None:
            pool.shutdown()
    if checkpoint_path is not None and checkpoint_every > 0:
        _write_checkpoint(checkpoint_path, crawl)
    return res


def _write_checkpoint(path: str | Path, crawl: _Crawl) -> None:
    path = Path(path)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(json.dumps(crawl.to_dict(), sort_keys=True), encoding="utf-8")
    tmp.replace(path)


def filter_self_identified(result: SampleResult, source, lexicon: TitleLexicon) -> set[str]:
    keep = set()
    for uid in sorted(result.candidates):
        try:
            prof = source.fetch_profile(uid)
        except SourceError as exc:
            log.info("dropping candidate %s: %s", uid, exc)
            continue
        if match_titles(prof.description, lexicon):
            keep.add(uid)
    return keep
