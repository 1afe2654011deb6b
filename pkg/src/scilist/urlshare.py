"""URL extraction, shortener expansion, domain rankings and the scientific-share fraction."""
from __future__ import annotations

import logging
import re
import urllib.error
import urllib.parse
import urllib.request
from collections import Counter, defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .source import REPLY, RETWEET, Status

log = logging.getLogger(__name__)

_LABEL = re.compile(r"(?!-)[a-z0-9-]{1,63}(?<!-)")


@dataclass(frozen=True)
class UrlMention:
    user_id: str
    status_id: str
    raw_url: str
    expanded_url: str | None = None
    domain: str = ""
    expand_failed: bool = False


class UrlParseError(ValueError):
    pass


def domain_of(url: str) -> str:
    """Lowercase hostname without a leading ``www.``; raises UrlParseError."""
    candidate = url.strip()
    if "://" not in candidate:
        candidate = "http://" + candidate
    try:
        parts = urllib.parse.urlsplit(candidate)
        host = parts.hostname
    except ValueError as exc:
        raise UrlParseError(f"unparseable url {url!r}") from exc
    if parts.scheme.lower() not in ("http", "https") or not host:
        raise UrlParseError(f"unparseable url {url!r}")
    host = host.rstrip(".").lower()
    labels = host.split(".")
    if len(labels) < 2 or not all(_LABEL.fullmatch(x) for x in labels):
        raise UrlParseError(f"bad hostname in {url!r}")
    if host.startswith("www."):
        host = host[4:]
    return host


def read_domain_list(path: str | Path) -> frozenset[str]:
    """One domain per line, ``#`` starts a comment."""
    out = set()
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.split("#", 1)[0].strip().lower()
        if line:
            out.add(line[4:] if line.startswith("www.") else line)
    return frozenset(out)


def extract_urls(statuses: Iterable[Status]) -> list[UrlMention]:
    """URL mentions from tweets and button-retweets; replies are ignored.

    A retweet contributes the original tweet's URLs, attributed to the
    retweeting user. Unparseable URLs are dropped with a log entry.
    """
    out = []
    for st in statuses:
        if st.kind == REPLY:
            continue
        urls = st.original.urls if st.kind == RETWEET else st.urls
        for u in urls:
            try:
                out.append(UrlMention(st.author_id, st.status_id, u, None, domain_of(u)))
            except UrlParseError as exc:
                log.info("dropping url in status %s: %s", st.status_id, exc)
    return out


Resolver = Callable[[str], str]


class FixtureResolver:
    """Resolves from a ``{short_url: final_url}`` map; unknown URLs raise LookupError."""

    def __init__(self, mapping: Mapping[str, str]):
        self.mapping = dict(mapping)

    def __call__(self, url: str) -> str:
        if url not in self.mapping:
            raise LookupError(f"no redirect recorded for {url}")
        return self.mapping[url]


class _NoRedirect(urllib.request.HTTPRedirectHandler):
    def redirect_request(self, req, fp, code, msg, headers, newurl):
        return None


class HttpResolver:
    """Follows HTTP redirects one hop at a time (HEAD requests)."""

    def __init__(self, max_redirects: int = 10, timeout: float = 10.0):
        self.max_redirects = max_redirects
        self.timeout = timeout
        self._opener = urllib.request.build_opener(_NoRedirect)

    def __call__(self, url: str) -> str:
        if "://" not in url:
            url = "http://" + url
        for _ in range(self.max_redirects + 1):
            req = urllib.request.Request(url, method="HEAD")
            try:
                with self._opener.open(req, timeout=self.timeout):
                    return url
            except urllib.error.HTTPError as exc:
                loc = exc.headers.get("Location") if exc.code in (301, 302, 303, 307, 308) else None
                if not loc:
                    raise
                url = urllib.parse.urljoin(url, loc)
        raise RuntimeError(f"more than {self.max_redirects} redirects")


def expand_and_domain(mention: UrlMention, resolver: Resolver,
                      shortener_domains: Iterable[str]) -> UrlMention:
    if mention.expanded_url is not None or mention.domain not in shortener_domains:
        return mention
    try:
        final = resolver(mention.raw_url)
        return replace(mention, expanded_url=final, domain=domain_of(final), expand_failed=False)
    except Exception as exc:
        log.info("could not expand %s: %s", mention.raw_url, exc)
        return replace(mention, expand_failed=True)


def expand_all(mentions: Sequence[UrlMention], resolver: Resolver,
               shortener_domains: Iterable[str], max_in_flight: int = 1) -> list[UrlMention]:
    shorteners = frozenset(shortener_domains)

    def one(m: UrlMention) -> UrlMention:
        return expand_and_domain(m, resolver, shorteners)

    todo = sorted({m.raw_url for m in mentions if m.domain in shorteners and m.expanded_url is None})
    probes = [UrlMention("", "", u, None, domain_of(u)) for u in todo]
    if max_in_flight > 1:
        with ThreadPoolExecutor(max_workers=max_in_flight) as pool:
            done = list(pool.map(one, probes))
    else:
        done = [one(p) for p in probes]
    cache = {p.raw_url: d for p, d in zip(probes, done)}
    out = []
    for m in mentions:
        d = cache.get(m.raw_url)
        if d is None or m.expanded_url is not None:
            out.append(m)
        else:
            out.append(replace(m, expanded_url=d.expanded_url, domain=d.domain,
                               expand_failed=d.expand_failed))
    return out


def is_scientific(domain: str, sci: Iterable[str]) -> bool:
    """True when ``domain`` or one of its parent domains is listed."""
    labels = domain.split(".")
    return any(".".join(labels[i:]) in sci for i in range(len(labels) - 1))


def _rank(counts: Counter, k: int) -> list[tuple[str, int]]:
    return sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[:k]


def top_domains(mentions: Iterable[UrlMention], k: int = 20,
                sci: Iterable[str] | None = None,
                discipline_of: Mapping[str, str] | None = None,
                dedup: bool = False):
    """Rank domains by mention count (ties lexicographic).

    With ``sci`` only scientific domains are counted. With ``discipline_of``
    (user_id -> discipline) the result is a dict of per-discipline rankings;
    users without a discipline are left out. ``dedup`` counts each
    (user, url) pair once.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    sci_set = frozenset(sci) if sci is not None else None
    seen = set()
    overall: Counter = Counter()
    grouped: dict[str, Counter] = defaultdict(Counter)
    for m in mentions:
        if sci_set is not None and not is_scientific(m.domain, sci_set):
            continue
        if dedup:
            key = (m.user_id, m.expanded_url or m.raw_url)
            if key in seen:
                continue
            seen.add(key)
        if discipline_of is None:
            overall[m.domain] += 1
        elif m.user_id in discipline_of:
            grouped[discipline_of[m.user_id]][m.domain] += 1
    if discipline_of is None:
        return _rank(overall, k)
    return {d: _rank(c, k) for d, c in sorted(grouped.items())}


def domain_counts(mentions: Iterable[UrlMention]) -> Counter:
    return Counter(m.domain for m in mentions)


def scientific_fraction(mentions: Iterable[UrlMention], sci: Iterable[str]) -> dict[str, float]:
    """Per user: scientific URL-bearing statuses / all URL-bearing statuses.

    A status counts as scientific if any of its URLs is. Users without
    URL-bearing statuses are absent from the result.
    """
    sci_set = frozenset(sci)
    by_status: dict[tuple[str, str], bool] = {}
    for m in mentions:
        key = (m.user_id, m.status_id)
        by_status[key] = by_status.get(key, False) or is_scientific(m.domain, sci_set)
    total: Counter = Counter()
    hits: Counter = Counter()
    for (uid, _), flag in by_status.items():
        total[uid] += 1
        hits[uid] += flag
    return {uid: hits[uid] / total[uid] for uid in sorted(total)}


def fraction_histogram(values_by_discipline: Mapping[str, Sequence[float]],
                       bins: int = 20) -> dict[str, list[tuple[float, float, int]]]:
    """Equal-width histogram of s on [0, 1]; the last bin is closed on the right."""
    if bins < 1:
        raise ValueError("bins must be >= 1")
    edges = np.linspace(0.0, 1.0, bins + 1)
    out = {}
    for disc in sorted(values_by_discipline):
        counts, _ = np.histogram(np.asarray(values_by_discipline[disc], dtype=float),
                                 bins=edges, range=(0.0, 1.0))
        out[disc] = [(float(edges[i]), float(edges[i + 1]), int(counts[i])) for i in range(bins)]
    return out
