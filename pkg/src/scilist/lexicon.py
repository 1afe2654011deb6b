"""Scientist-title dictionary and longest-match title tagging."""
from __future__ import annotations

import enum
import json
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

log = logging.getLogger(__name__)

LEXICON_FORMAT_VERSION = 1
DEFAULT_GENERAL_TITLES = ("scientists", "researchers")

_WORD = re.compile(r"[^\W_]+")
_HYPHENS = "-‐‑"
_SPACE_SEP = re.compile(r"[\s\-\u2010\u2011]+")


class OesGroup(str, enum.Enum):
    COMPUTER_INFO = "ComputerInfo"
    MATHEMATICAL = "Mathematical"
    LIFE = "Life"
    PHYSICAL = "Physical"
    SOCIAL = "Social"
    GENERAL = "General"


OES_GROUPS = tuple(g for g in OesGroup if g is not OesGroup.GENERAL)


class LexiconError(ValueError):
    pass


@dataclass(frozen=True)
class TitleEntry:
    canonical: str
    variants: frozenset
    soc_code: str | None
    oes_group: OesGroup

    def __post_init__(self):
        if not self.canonical or self.canonical != self.canonical.lower():
            raise LexiconError(f"canonical must be nonempty lowercase: {self.canonical!r}")
        for v in self.variants:
            if not v or v != v.lower():
                raise LexiconError(f"bad variant {v!r} for {self.canonical!r}")

    def __lt__(self, other: TitleEntry) -> bool:
        return self.canonical < other.canonical

    def to_dict(self) -> dict:
        return {
            "canonical": self.canonical,
            "variants": sorted(self.variants),
            "soc_code": self.soc_code,
            "oes_group": self.oes_group.value,
        }


@dataclass(frozen=True)
class TitleMatch:
    entry: TitleEntry
    surface: str
    span: tuple[int, int]


@dataclass(frozen=True)
class _Pattern:
    tokens: tuple[str, ...]
    seps: tuple[str, ...]  # " " or "-" between consecutive tokens
    variant: str
    entry: TitleEntry


@dataclass
class TitleLexicon:
    entries: list[TitleEntry]
    exceptions: dict[str, str] = field(default_factory=dict)
    match_index: dict[str, list[_Pattern]] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        index: dict[str, list[_Pattern]] = {}
        owner: dict[str, TitleEntry] = {}
        for entry in self.entries:
            for v in entry.variants:
                if v in owner:
                    raise LexiconError(
                        f"variant {v!r} under both {owner[v].canonical!r} and {entry.canonical!r}"
                    )
                owner[v] = entry
                tokens, seps = _split_variant(v)
                index.setdefault(tokens[0], []).append(_Pattern(tokens, seps, v, entry))
        for patterns in index.values():
            patterns.sort(key=lambda p: (-len(p.tokens), -len(p.variant), p.variant))
        self.match_index = index
        self._owner = owner

    @property
    def variants(self) -> list[str]:
        return sorted(self._owner)

    def lookup(self, variant: str) -> TitleEntry | None:
        return self._owner.get(variant.casefold())

    def entry(self, canonical: str) -> TitleEntry:
        for e in self.entries:
            if e.canonical == canonical:
                return e
        raise KeyError(canonical)

    def to_json(self) -> str:
        doc = {
            "version": LEXICON_FORMAT_VERSION,
            "entries": [e.to_dict() for e in self.entries],
            "exceptions": dict(sorted(self.exceptions.items())),
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> TitleLexicon:
        doc = json.loads(text)
        if doc.get("version") != LEXICON_FORMAT_VERSION:
            raise LexiconError(f"unsupported lexicon version {doc.get('version')!r}")
        entries = [
            TitleEntry(
                canonical=e["canonical"],
                variants=frozenset(e["variants"]),
                soc_code=e["soc_code"],
                oes_group=OesGroup(e["oes_group"]),
            )
            for e in doc["entries"]
        ]
        return cls(entries, dict(doc.get("exceptions", {})))


def tokenize(text: str) -> list[tuple[str, int, int]]:
    """Case-folded word tokens with their character spans in ``text``.

    A word is a maximal run of letters/digits; everything else separates.
    """
    return [(m.group().casefold(), m.start(), m.end()) for m in _WORD.finditer(text)]


def _split_variant(variant: str) -> tuple[tuple[str, ...], tuple[str, ...]]:
    toks = tokenize(variant)
    if not toks:
        raise LexiconError(f"variant {variant!r} has no word characters")
    seps = []
    for (_, _, end), (_, start, _) in zip(toks, toks[1:]):
        gap = variant[end:start]
        seps.append("-" if len(gap) == 1 and gap in _HYPHENS else " ")
    return tuple(t for t, _, _ in toks), tuple(seps)


def singularize(word: str, exceptions: dict[str, str] | None = None) -> str:
    if exceptions and word in exceptions:
        return exceptions[word]
    if word.endswith("ics") or not word.endswith("s"):
        return word
    return word[:-1]


def title_variants(title: str, exceptions: dict[str, str] | None = None) -> tuple[str, set[str]]:
    """Return ``(canonical, variants)`` for one plural title.

    Variants are the title, its singular, and for multi-word titles the final
    word in plural and singular form ("clinical psychologists" also yields
    "psychologists" and "psychologist").
    """
    title = " ".join(title.casefold().split())
    words = title.split(" ")
    last = singularize(words[-1], exceptions)
    canonical = " ".join(words[:-1] + [last])
    variants = {title, canonical}
    if len(words) > 1:
        variants |= {words[-1], last}
    return canonical, variants


TitleSpec = tuple  # (title, soc_code or None, OesGroup or group name)


def compile_lexicon(
    soc_titles: Iterable[TitleSpec],
    wiki_titles: Iterable[TitleSpec],
    general_titles: Sequence[str] | None = None,
    exceptions: dict[str, str] | None = None,
) -> TitleLexicon:
    """Build a :class:`TitleLexicon` from titled rows.

    ``soc_titles`` and ``wiki_titles`` hold ``(title, soc_code, oes_group)``
    rows; ``general_titles`` are plain strings mapped to the General group.

    A variant produced by several titles goes to the title whose own
    plural/singular it is; otherwise to the longest canonical (ties:
    lexicographically smallest).
    """
    if general_titles is None:
        general_titles = DEFAULT_GENERAL_TITLES
    exceptions = {k.casefold(): v.casefold() for k, v in (exceptions or {}).items()}
    rows = [(t, c, OesGroup(g)) for t, c, g in soc_titles]
    rows += [(t, c, OesGroup(g)) for t, c, g in wiki_titles]
    rows += [(t, None, OesGroup.GENERAL) for t in general_titles]
    if not rows:
        raise LexiconError("empty lexicon")

    specs: dict[str, tuple[str | None, OesGroup, set[str], str]] = {}
    for title, soc_code, group in rows:
        canonical, variants = title_variants(title, exceptions)
        if soc_code in ("-", ""):
            soc_code = None
        if canonical in specs:
            prev_code, prev_group, prev_variants, prev_title = specs[canonical]
            if prev_group is not group:
                raise LexiconError(
                    f"conflicting groups for {canonical!r}: "
                    f"{prev_title!r} ({prev_group.value}) vs {title!r} ({group.value})"
                )
            specs[canonical] = (prev_code or soc_code, group, prev_variants | variants, prev_title)
        else:
            specs[canonical] = (soc_code, group, variants, title)

    claims: dict[str, list[str]] = {}
    for canonical, (_, _, variants, _) in specs.items():
        for v in variants:
            claims.setdefault(v, []).append(canonical)
    owner: dict[str, str] = {}
    for v, cands in claims.items():
        if len(cands) == 1:
            owner[v] = cands[0]
            continue
        own = [c for c in cands if v in (c, _plural_of(specs[c]))]
        pool = own or cands
        winner = min(pool, key=lambda c: (-len(c), c))
        owner[v] = winner
        log.debug("variant %r claimed by %s; assigned to %r", v, sorted(cands), winner)

    entries = []
    for canonical in sorted(specs):
        soc_code, group, _, _ = specs[canonical]
        mine = frozenset(v for v, c in owner.items() if c == canonical)
        entries.append(TitleEntry(canonical, mine, soc_code, group))
    return TitleLexicon(entries, exceptions)


def _plural_of(spec) -> str:
    return " ".join(spec[3].casefold().split())


def read_title_source(path: str | Path) -> tuple[list, list, list[str], dict[str, str]]:
    """Parse a tab-separated title source file.

    Returns ``(soc_rows, wiki_rows, general_titles, exceptions)``.
    """
    soc, wiki, general, exceptions = [], [], [], {}
    text = Path(path).read_text(encoding="utf-8")
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("!"):
            parts = line[1:].split("\t")
            if len(parts) != 2:
                raise LexiconError(f"{path}:{lineno}: exception needs plural<TAB>singular")
            exceptions[parts[0].strip()] = parts[1].strip()
            continue
        parts = [p.strip() for p in line.split("\t")]
        if len(parts) != 3:
            raise LexiconError(f"{path}:{lineno}: expected 3 tab-separated columns")
        title, code, group_name = parts
        try:
            group = OesGroup(group_name)
        except ValueError:
            raise LexiconError(f"{path}:{lineno}: unknown oes_group {group_name!r}") from None
        if group is OesGroup.GENERAL:
            general.append(title)
        elif code == "-":
            wiki.append((title, None, group))
        else:
            soc.append((title, code, group))
    return soc, wiki, general, exceptions


def load_lexicon(path: str | Path) -> TitleLexicon:
    """Load a lexicon from a ``.tsv`` title source or a compiled ``.json`` file."""
    path = Path(path)
    if path.suffix == ".json":
        return TitleLexicon.from_json(path.read_text(encoding="utf-8"))
    soc, wiki, general, exceptions = read_title_source(path)
    return compile_lexicon(soc, wiki, general, exceptions)


def default_lexicon_path() -> Path:
    return Path(__file__).parent / "data" / "titles.tsv"


def _sep_ok(gap: str, want: str) -> bool:
    if want == "-":
        return len(gap) == 1 and gap in _HYPHENS
    return _SPACE_SEP.fullmatch(gap) is not None


def match_titles(text: str, lexicon: TitleLexicon) -> list[TitleMatch]:
    """Tag ``text`` with lexicon titles, longest titles first.

    All candidate occurrences are collected, then accepted in order of
    decreasing token count (then character length, then position); a
    candidate overlapping an accepted one is discarded. Results are in text
    order.
    """
    toks = tokenize(text)
    if not toks:
        return []
    found = []
    for i, (tok, _, _) in enumerate(toks):
        for pat in lexicon.match_index.get(tok, ()):
            n = len(pat.tokens)
            if i + n > len(toks):
                continue
            ok = True
            for k in range(1, n):
                if toks[i + k][0] != pat.tokens[k] or not _sep_ok(
                    text[toks[i + k - 1][2]:toks[i + k][1]], pat.seps[k - 1]
                ):
                    ok = False
                    break
            if ok:
                start, end = toks[i][1], toks[i + n - 1][2]
                found.append((n, end - start, i, i + n, pat))

    found.sort(key=lambda f: (-f[0], -f[1], f[2]))
    taken = [False] * len(toks)
    accepted = []
    for _, _, i, j, pat in found:
        if any(taken[i:j]):
            continue
        for k in range(i, j):
            taken[k] = True
        start, end = toks[i][1], toks[j - 1][2]
        accepted.append(TitleMatch(pat.entry, text[start:end].casefold(), (start, end)))
    accepted.sort(key=lambda m: m.span)
    return accepted


def title_to_group(entry: TitleEntry) -> OesGroup:
    return entry.oes_group


def unique_titles(matches: Iterable[TitleMatch]) -> list[TitleEntry]:
    """Distinct entries in first-seen order (one count per document)."""
    seen: dict[str, TitleEntry] = {}
    for m in matches:
        seen.setdefault(m.entry.canonical, m.entry)
    return list(seen.values())
