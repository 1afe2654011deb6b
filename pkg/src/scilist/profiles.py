"""Discipline, gender and academic-rank assignment, plus workforce/gender summaries."""
from __future__ import annotations

import csv
import enum
import json
import logging
import math
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Mapping, Protocol, Sequence

from .lexicon import OES_GROUPS, OesGroup, TitleEntry, TitleLexicon, match_titles, unique_titles

log = logging.getLogger(__name__)


class Gender(str, enum.Enum):
    FEMALE = "Female"
    MALE = "Male"
    UNKNOWN = "Unknown"


class GenderMethod(str, enum.Enum):
    CENSUS = "Census"
    IMAGE = "Image"
    NONE = "None"


class Rank(str, enum.Enum):
    STUDENT = "Student"
    POSTDOC = "Postdoc"
    PROFESSOR = "Professor"
    UNKNOWN = "Unknown"


RANK_KEYWORDS: dict[Rank, tuple[str, ...]] = {
    Rank.STUDENT: ("phd student", "phd candidate", "graduate student", "grad student",
                   "doctoral student"),
    Rank.POSTDOC: ("postdoc", "post-doc", "postdoctoral"),
    Rank.PROFESSOR: ("assistant professor", "assistant prof", "asst prof", "associate professor",
                     "associate prof", "assoc prof", "professor", "prof", "faculty"),
}


@dataclass
class ScientistRecord:
    user_id: str
    profile_titles: list[TitleEntry] = field(default_factory=list)
    list_title_counts: dict[TitleEntry, int] = field(default_factory=dict)
    disciplines: list[TitleEntry] = field(default_factory=list)
    oes_group: OesGroup | None = None
    gender: Gender = Gender.UNKNOWN
    gender_method: GenderMethod = GenderMethod.NONE
    rank: Rank = Rank.UNKNOWN

    def __post_init__(self):
        if (self.gender is Gender.UNKNOWN) != (self.gender_method is GenderMethod.NONE):
            raise ValueError(f"{self.user_id}: gender Unknown iff method None")

    @property
    def oes_groups(self) -> list[OesGroup]:
        """Distinct non-General OES groups of the final titles, in title order."""
        return list(dict.fromkeys(t.oes_group for t in self.disciplines
                                  if t.oes_group is not OesGroup.GENERAL))


# -- discipline -------------------------------------------------------------

def count_list_titles(list_names: Iterable[str], lexicon: TitleLexicon) -> dict[TitleEntry, int]:
    """Per-title count of lists naming it; a list contributes at most 1 per title."""
    counts: Counter = Counter()
    for name in list_names:
        for entry in unique_titles(match_titles(name, lexicon)):
            counts[entry] += 1
    return dict(counts)


def assign_discipline(profile_titles: Sequence[TitleEntry],
                      list_title_counts: Mapping[TitleEntry, int]) -> list[TitleEntry]:
    if profile_titles:
        return list(dict.fromkeys(profile_titles))
    if list_title_counts:
        best = min(list_title_counts.items(), key=lambda kv: (-kv[1], kv[0].canonical))
        tied = [e.canonical for e, c in list_title_counts.items() if c == best[1]]
        if len(tied) > 1:
            log.debug("list-title tie %s broken to %r", sorted(tied), best[0].canonical)
        return [best[0]]
    return []


def primary_group(disciplines: Sequence[TitleEntry]) -> OesGroup | None:
    for t in disciplines:
        if t.oes_group is not OesGroup.GENERAL:
            return t.oes_group
    return None


# -- gender -----------------------------------------------------------------

@dataclass(frozen=True)
class CensusNameDb:
    female: Mapping[str, tuple[float, float, int]]
    male: Mapping[str, tuple[float, float, int]]

    @classmethod
    def load(cls, female_path: str | Path, male_path: str | Path) -> CensusNameDb:
        return cls(read_census_file(female_path), read_census_file(male_path))


def read_census_file(path: str | Path) -> dict[str, tuple[float, float, int]]:
    """Read a 1990 census ``dist.*.first`` file: ``NAME FREQ CUM RANK`` per line."""
    out = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="ascii").splitlines(), 1):
        parts = line.split()
        if not parts:
            continue
        if len(parts) != 4:
            raise ValueError(f"{path}:{lineno}: expected 4 columns")
        name, freq, cum, rank = parts
        if name != name.upper() or float(freq) < 0:
            raise ValueError(f"{path}:{lineno}: bad census row")
        out[name] = (float(freq), float(cum), int(rank))
    return out


_PREFIX = re.compile(r"^\s*(?:dr|prof)(?:\.|\s+|$)\s*", re.IGNORECASE)


def strip_prefixes(display_name: str) -> str:
    name = display_name.strip()
    while True:
        m = _PREFIX.match(name)
        if not m:
            return name
        name = name[m.end():].strip()


def first_name(display_name: str) -> str:
    parts = strip_prefixes(display_name).split()
    if not parts:
        return ""
    return parts[0].strip(".,;:!?\"'()[]").upper()


def census_gender(name: str, census: CensusNameDb, tie_eps: float = 1e-6) -> Gender | None:
    """Census lookup; None when the name is absent or equally frequent in both files."""
    f, m = census.female.get(name), census.male.get(name)
    if f is None and m is None:
        return None
    if m is None:
        return Gender.FEMALE
    if f is None:
        return Gender.MALE
    if abs(f[0] - m[0]) <= tie_eps:
        return None
    return Gender.FEMALE if f[0] > m[0] else Gender.MALE


class ImageClassifier(Protocol):
    def __call__(self, image_url: str) -> tuple[str, float]:
        """Return ``(gender, confidence)`` with confidence in 0-100."""


class FixtureImageClassifier:
    """Replays canned ``{url: [gender, confidence]}`` responses.

    Unknown URLs raise ``ConnectionError`` like a failed request would.
    """

    def __init__(self, responses: Mapping[str, Sequence]):
        self.responses = {k: (str(v[0]), float(v[1])) for k, v in responses.items()}

    @classmethod
    def from_file(cls, path: str | Path) -> FixtureImageClassifier:
        return cls(json.loads(Path(path).read_text(encoding="utf-8")))

    def __call__(self, image_url: str) -> tuple[str, float]:
        if image_url not in self.responses:
            raise ConnectionError(f"no canned response for {image_url}")
        return self.responses[image_url]


def assign_gender(display_name: str, census: CensusNameDb,
                  image_classifier: Callable[[str], tuple[str, float]] | None = None,
                  confidence_threshold: float = 90.0,
                  image_url: str | None = None) -> tuple[Gender, GenderMethod]:
    g = census_gender(first_name(display_name), census)
    if g is not None:
        return g, GenderMethod.CENSUS
    if image_classifier is None or not image_url:
        return Gender.UNKNOWN, GenderMethod.NONE
    try:
        label, confidence = image_classifier(image_url)
    except Exception as exc:
        log.warning("image classifier failed for %s: %s", image_url, exc)
        return Gender.UNKNOWN, GenderMethod.NONE
    if confidence <= confidence_threshold:
        return Gender.UNKNOWN, GenderMethod.NONE
    label = label.strip().lower()
    if label == "female":
        return Gender.FEMALE, GenderMethod.IMAGE
    if label == "male":
        return Gender.MALE, GenderMethod.IMAGE
    return Gender.UNKNOWN, GenderMethod.NONE


# -- academic rank ----------------------------------------------------------

def _keyword_regex(kw: str) -> re.Pattern:
    parts = []
    for i, word in enumerate(kw.split(" ")):
        if i:
            parts.append(r"[\s\-]+")
        parts.append(re.escape(word))
    return re.compile(r"(?<![^\W_])" + "".join(parts) + r"(?![^\W_])", re.IGNORECASE)


_RANK_PATTERNS = [(rank, kw, _keyword_regex(kw))
                  for rank, kws in RANK_KEYWORDS.items() for kw in kws]


def assign_rank(description: str, order: str = "offset") -> Rank:
    """Academic rank from profile keywords.

    ``order="offset"`` picks the keyword occurring earliest in the text
    (longest keyword on ties); ``order="listing"`` picks the first rank, in
    student/postdoc/professor order, with any keyword present.
    """
    hits = []
    for rank, kw, rx in _RANK_PATTERNS:
        m = rx.search(description)
        if m:
            hits.append((m.start(), -(m.end() - m.start()), rank))
    if not hits:
        return Rank.UNKNOWN
    if order == "listing":
        present = {r for _, _, r in hits}
        return next(r for r in RANK_KEYWORDS if r in present)
    if order != "offset":
        raise ValueError(f"unknown rank order {order!r}")
    return min(hits, key=lambda h: (h[0], h[1]))[2]


# -- tables -----------------------------------------------------------------

@dataclass(frozen=True)
class WorkforceRow:
    group: OesGroup
    employment: float
    employment_pct: float
    twitter_count: float
    twitter_pct: float
    ratio: float


def aggregate_by_group(discipline_counts: Mapping[TitleEntry, int]) -> dict[OesGroup, int]:
    out = {g: 0 for g in OES_GROUPS}
    for entry, n in discipline_counts.items():
        if entry.oes_group is not OesGroup.GENERAL:
            out[entry.oes_group] += n
    return out


def workforce_table(group_counts: Mapping[OesGroup, float],
                    oes_employment: Mapping[OesGroup, float]) -> list[WorkforceRow]:
    """Employment share vs. Twitter share per OES group, ratio = twitter/employment."""
    for g in OES_GROUPS:
        if oes_employment.get(g, 0) <= 0:
            raise ValueError(f"employment for {g.value} must be positive")
    emp_total = math.fsum(oes_employment[g] for g in OES_GROUPS)
    tw_total = math.fsum(group_counts.get(g, 0) for g in OES_GROUPS)
    rows = []
    for g in OES_GROUPS:
        emp_pct = oes_employment[g] / emp_total
        tw = group_counts.get(g, 0)
        tw_pct = tw / tw_total if tw_total else 0.0
        rows.append(WorkforceRow(g, oes_employment[g], emp_pct, tw, tw_pct, tw_pct / emp_pct))
    return rows


def workforce_comparison(discipline_counts: Mapping[TitleEntry, int],
                         oes_employment: Mapping[OesGroup, float]) -> list[WorkforceRow]:
    return workforce_table(aggregate_by_group(discipline_counts), oes_employment)


def discipline_user_counts(records: Iterable[ScientistRecord]) -> dict[TitleEntry, int]:
    counts: Counter = Counter()
    for r in records:
        for t in dict.fromkeys(r.disciplines):
            counts[t] += 1
    return dict(counts)


def group_user_counts(records: Iterable[ScientistRecord]) -> dict[OesGroup, int]:
    """Users per OES group; a user counts once in each distinct group of their titles."""
    out = {g: 0 for g in OES_GROUPS}
    for r in records:
        for g in r.oes_groups:
            out[g] += 1
    return out


@dataclass(frozen=True)
class GenderSummary:
    female: int
    male: int
    total: int
    ratio: float | None
    female_share: float | None
    identified_fraction: float | None

    @property
    def undefined(self) -> bool:
        return self.ratio is None


def gender_summary(female: int, male: int, total: int) -> GenderSummary:
    identified = female + male
    return GenderSummary(
        female, male, total,
        female / male if male else None,
        female / identified if identified else None,
        identified / total if total else None,
    )


def gender_ratio(records: Iterable[ScientistRecord]) -> GenderSummary:
    records = list(records)
    f = sum(r.gender is Gender.FEMALE for r in records)
    m = sum(r.gender is Gender.MALE for r in records)
    s = gender_summary(f, m, len(records))
    if s.undefined:
        log.warning("gender ratio undefined: no identified males among %d records", len(records))
    return s


def read_oes_csv(path: str | Path) -> dict[OesGroup, int]:
    out = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            out[OesGroup(row["group"].strip())] = int(row["employment"])
    return out
