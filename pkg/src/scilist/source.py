"""Rate-limited access to list/profile/follow/status data.

Two backends share one interface: :class:`FixtureSource` replays a directory
of JSON files, :class:`RestSource` talks to a configurable HTTP API.

Fixture layout (every file carries ``"version": 1``)::

    users.json               {"users": [UserProfile, ...]}
    lists.json               {"lists": [ListRecord, ...]}
    edges.json               {"follows": [[follower_id, followed_id], ...]}
    statuses/<user_id>.json  {"statuses": [Status, ...]}   newest first
"""
from __future__ import annotations

import json
import logging
import os
import threading
import time
import urllib.parse
import urllib.request
from collections import deque
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterator, NamedTuple, Protocol

log = logging.getLogger(__name__)

FIXTURE_VERSION = 1
DEFAULT_MAX_STATUSES = 3200


class SourceError(Exception):
    pass


class NotFound(SourceError):
    """The entity does not exist."""


class Skipped(SourceError):
    """The entity exists but is private; callers should move on."""


@dataclass(frozen=True)
class UserProfile:
    user_id: str
    screen_name: str
    display_name: str
    description: str = ""
    profile_image_url: str | None = None
    is_public: bool = True
    listed_count: int = 0

    def __post_init__(self):
        if self.listed_count < 0:
            raise ValueError(f"negative listed_count for {self.user_id}")


@dataclass(frozen=True)
class ListRecord:
    list_id: str
    name: str
    description: str = ""
    is_public: bool = True
    member_ids: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "member_ids", tuple(self.member_ids))
        if len(set(self.member_ids)) != len(self.member_ids):
            raise ValueError(f"duplicate members in list {self.list_id}")


@dataclass(frozen=True)
class OriginalRef:
    author_id: str
    status_id: str
    urls: tuple[str, ...] = ()


TWEET, RETWEET, REPLY = "Tweet", "Retweet", "Reply"


@dataclass(frozen=True)
class Status:
    status_id: str
    author_id: str
    kind: str
    text: str = ""
    urls: tuple[str, ...] = ()
    original: OriginalRef | None = None

    def __post_init__(self):
        if self.kind not in (TWEET, RETWEET, REPLY):
            raise ValueError(f"unknown status kind {self.kind!r}")
        object.__setattr__(self, "urls", tuple(self.urls))
        if (self.kind == RETWEET) != (self.original is not None):
            raise ValueError(f"status {self.status_id}: original set iff kind is Retweet")

    @classmethod
    def from_dict(cls, d: dict) -> Status:
        orig = d.get("original")
        if orig is not None:
            orig = OriginalRef(orig["author_id"], orig["status_id"], tuple(orig.get("urls", ())))
        return cls(
            d["status_id"], d["author_id"], d["kind"], d.get("text", ""),
            tuple(d.get("urls", ())), orig,
        )

    def to_dict(self) -> dict:
        d = asdict(self)
        d["urls"] = list(self.urls)
        if self.original is not None:
            d["original"]["urls"] = list(self.original.urls)
        return d


class UserBundle(NamedTuple):
    profile: UserProfile
    followers: list[str]
    followings: list[str]
    statuses: list[Status]


@dataclass(frozen=True)
class RateBudget:
    window_seconds: int = 900
    max_calls_per_window: int = 15

    def __post_init__(self):
        if self.window_seconds <= 0 or self.max_calls_per_window <= 0:
            raise ValueError("rate budget values must be positive")


class Clock(Protocol):
    def now(self) -> float: ...

    def sleep(self, seconds: float) -> None: ...


class SystemClock:
    def now(self) -> float:
        return time.monotonic()

    def sleep(self, seconds: float) -> None:
        time.sleep(seconds)


class VirtualClock:
    """Clock whose ``sleep`` advances time instantly."""

    def __init__(self, start: float = 0.0):
        self.t = float(start)
        self._lock = threading.Lock()

    def now(self) -> float:
        with self._lock:
            return self.t

    def sleep(self, seconds: float) -> None:
        with self._lock:
            self.t += max(0.0, seconds)


class RateLimiter:
    """Sliding-window call log per endpoint.

    ``acquire`` blocks (via the clock) until the call fits, so any interval
    of ``window_seconds`` holds at most ``max_calls_per_window`` calls.
    """

    def __init__(self, budget: RateBudget | dict[str, RateBudget], clock: Clock | None = None):
        self.budget = budget
        self.clock = clock or SystemClock()
        self._calls: dict[str, deque] = {}
        self._lock = threading.Lock()
        self.history: dict[str, list[float]] = {}

    def _budget_for(self, endpoint: str) -> RateBudget:
        if isinstance(self.budget, dict):
            return self.budget.get(endpoint) or self.budget.get("*") or RateBudget()
        return self.budget

    def acquire(self, endpoint: str) -> float:
        b = self._budget_for(endpoint)
        with self._lock:
            calls = self._calls.setdefault(endpoint, deque())
            while True:
                now = self.clock.now()
                # compare against the absolute deadline; a difference-based test
                # rounds differently from the sleep and can livelock
                while calls and calls[0] + b.window_seconds <= now:
                    calls.popleft()
                if len(calls) < b.max_calls_per_window:
                    break
                self.clock.sleep(calls[0] + b.window_seconds - now)
            calls.append(now)
            self.history.setdefault(endpoint, []).append(now)
            return now


def _paginate(items: list, page_size: int) -> Iterator[list]:
    cursor = 0
    while True:
        page = items[cursor:cursor + page_size]
        yield page
        cursor += page_size
        if cursor >= len(items):
            return


class FixtureSource:
    """Replays a fixture directory; see the module docstring for the layout."""

    def __init__(self, directory: str | Path, page_size: int = 100,
                 limiter: RateLimiter | None = None):
        self.directory = Path(directory)
        self.page_size = page_size
        self.limiter = limiter
        self._lock = threading.Lock()
        self._status_cache: dict[str, list[Status]] = {}

        users = _read_versioned(self.directory / "users.json")["users"]
        self.users: dict[str, UserProfile] = {}
        for u in users:
            p = UserProfile(**u)
            if p.user_id in self.users:
                raise ValueError(f"duplicate user_id {p.user_id}")
            self.users[p.user_id] = p
        lists = _read_versioned(self.directory / "lists.json")["lists"]
        self.lists: dict[str, ListRecord] = {}
        for rec in lists:
            lr = ListRecord(**{**rec, "member_ids": tuple(rec.get("member_ids", ()))})
            self.lists[lr.list_id] = lr
        self._memberships: dict[str, list[str]] = {}
        for lid in sorted(self.lists):
            for uid in self.lists[lid].member_ids:
                self._memberships.setdefault(uid, []).append(lid)
        edges_path = self.directory / "edges.json"
        follows = _read_versioned(edges_path)["follows"] if edges_path.exists() else []
        self._followers: dict[str, list[str]] = {}
        self._followings: dict[str, list[str]] = {}
        for a, b in follows:
            self._followings.setdefault(a, []).append(b)
            self._followers.setdefault(b, []).append(a)

    def _call(self, endpoint: str) -> None:
        if self.limiter is not None:
            self.limiter.acquire(endpoint)

    def _public_user(self, user_id: str) -> UserProfile:
        u = self.users.get(user_id)
        if u is None:
            raise NotFound(f"user {user_id}")
        if not u.is_public:
            raise Skipped(f"user {user_id} is private")
        return u

    def _public_list(self, list_id: str) -> ListRecord:
        lr = self.lists.get(list_id)
        if lr is None:
            raise NotFound(f"list {list_id}")
        if not lr.is_public:
            raise Skipped(f"list {list_id} is private")
        return lr

    def _stitched(self, endpoint: str, items: list) -> list:
        out = []
        for page in _paginate(items, self.page_size):
            self._call(endpoint)
            out.extend(page)
        return out

    def fetch_profile(self, user_id: str) -> UserProfile:
        self._call("users/show")
        return self._public_user(user_id)

    def fetch_memberships(self, user_id: str) -> list[ListRecord]:
        self._public_user(user_id)
        public = [self.lists[lid] for lid in self._memberships.get(user_id, ())
                  if self.lists[lid].is_public]
        return self._stitched("lists/memberships", public)

    def fetch_members(self, list_id: str) -> list[str]:
        lr = self._public_list(list_id)
        return self._stitched("lists/members", list(lr.member_ids))

    def fetch_list(self, list_id: str) -> ListRecord:
        self._call("lists/show")
        return self._public_list(list_id)

    def _statuses(self, user_id: str) -> list[Status]:
        with self._lock:
            cached = self._status_cache.get(user_id)
            if cached is None:
                path = self.directory / "statuses" / f"{user_id}.json"
                raw = _read_versioned(path)["statuses"] if path.exists() else []
                cached = [Status.from_dict(s) for s in raw]
                self._status_cache[user_id] = cached
            return cached

    def fetch_user_bundle(self, user_id: str,
                          max_statuses: int = DEFAULT_MAX_STATUSES) -> UserBundle:
        profile = self.fetch_profile(user_id)
        followers = self._stitched("followers/ids", list(self._followers.get(user_id, ())))
        followings = self._stitched("friends/ids", list(self._followings.get(user_id, ())))
        statuses = self._stitched("statuses/user_timeline", self._statuses(user_id)[:max_statuses])
        return UserBundle(profile, followers, followings, statuses)


def _read_versioned(path: Path) -> dict:
    doc = json.loads(path.read_text(encoding="utf-8"))
    if doc.get("version") != FIXTURE_VERSION:
        raise ValueError(f"{path}: unsupported fixture version {doc.get('version')!r}")
    return doc


def write_fixture(directory: str | Path, users: list[UserProfile], lists: list[ListRecord],
                  follows: list[tuple[str, str]], statuses: dict[str, list[Status]]) -> None:
    """Write a fixture directory readable by :class:`FixtureSource`."""
    d = Path(directory)
    (d / "statuses").mkdir(parents=True, exist_ok=True)

    def dump(path: Path, doc: dict) -> None:
        path.write_text(json.dumps({"version": FIXTURE_VERSION, **doc}, indent=1,
                                   sort_keys=True) + "\n", encoding="utf-8")

    dump(d / "users.json", {"users": [asdict(u) for u in users]})
    dump(d / "lists.json", {"lists": [{**asdict(lr), "member_ids": list(lr.member_ids)}
                                      for lr in lists]})
    dump(d / "edges.json", {"follows": [list(e) for e in follows]})
    for uid, sts in statuses.items():
        dump(d / "statuses" / f"{uid}.json", {"statuses": [s.to_dict() for s in sts]})


@dataclass
class RestConfig:
    base_url: str
    endpoints: dict[str, str] = field(default_factory=lambda: {
        "profile": "users/show.json?user_id={id}",
        "memberships": "lists/memberships.json?user_id={id}&count={count}&cursor={cursor}",
        "members": "lists/members.json?list_id={id}&count={count}&cursor={cursor}",
        "followers": "followers/ids.json?user_id={id}&count={count}&cursor={cursor}",
        "followings": "friends/ids.json?user_id={id}&count={count}&cursor={cursor}",
        "statuses": "statuses/user_timeline.json?user_id={id}&count={count}&max_id={cursor}",
    })
    page_size: int = 100
    auth_env: str = "SCILIST_API_TOKEN"
    timeout: float = 30.0


class RestSource:
    """Generic cursor-paginated HTTP backend.

    Each endpoint template returns JSON ``{"items": [...], "next_cursor": c}``
    (``next_cursor`` null or 0 at the end) and ``{"error": "not_found" |
    "private"}`` on failure. A page failure aborts that collection.
    """

    def __init__(self, config: RestConfig, limiter: RateLimiter | None = None):
        self.config = config
        self.limiter = limiter

    def _get(self, name: str, **params) -> dict:
        if self.limiter is not None:
            self.limiter.acquire(name)
        path = self.config.endpoints[name].format(
            **{k: urllib.parse.quote(str(v)) for k, v in params.items()})
        req = urllib.request.Request(urllib.parse.urljoin(self.config.base_url, path))
        token = os.environ.get(self.config.auth_env)
        if token:
            req.add_header("Authorization", f"Bearer {token}")
        with urllib.request.urlopen(req, timeout=self.config.timeout) as resp:
            doc = json.loads(resp.read().decode("utf-8"))
        err = doc.get("error") if isinstance(doc, dict) else None
        if err == "not_found":
            raise NotFound(f"{name} {params.get('id')}")
        if err == "private":
            raise Skipped(f"{name} {params.get('id')}")
        return doc

    def _collect(self, name: str, ident: str, limit: int | None = None) -> list:
        items: list = []
        cursor = -1
        while True:
            try:
                doc = self._get(name, id=ident, count=self.config.page_size, cursor=cursor)
            except (NotFound, Skipped):
                raise
            except Exception as exc:
                log.warning("aborting %s for %s after page failure: %s", name, ident, exc)
                raise SourceError(f"{name} {ident}: {exc}") from exc
            items.extend(doc.get("items", []))
            cursor = doc.get("next_cursor")
            if not cursor or (limit is not None and len(items) >= limit):
                return items[:limit] if limit is not None else items

    def fetch_profile(self, user_id: str) -> UserProfile:
        doc = self._get("profile", id=user_id, count=1, cursor=-1)
        prof = UserProfile(**(doc["item"] if "item" in doc else doc))
        if not prof.is_public:
            raise Skipped(f"user {user_id} is private")
        return prof

    def fetch_memberships(self, user_id: str) -> list[ListRecord]:
        out = []
        for d in self._collect("memberships", user_id):
            lr = ListRecord(**{**d, "member_ids": tuple(d.get("member_ids", ()))})
            if lr.is_public:
                out.append(lr)
        return sorted(out, key=lambda lr: lr.list_id)

    def fetch_members(self, list_id: str) -> list[str]:
        return [str(x) for x in self._collect("members", list_id)]

    def fetch_user_bundle(self, user_id: str,
                          max_statuses: int = DEFAULT_MAX_STATUSES) -> UserBundle:
        profile = self.fetch_profile(user_id)
        followers = [str(x) for x in self._collect("followers", user_id)]
        followings = [str(x) for x in self._collect("followings", user_id)]
        statuses = [Status.from_dict(s) for s in self._collect("statuses", user_id, max_statuses)]
        return UserBundle(profile, followers, followings, statuses)
