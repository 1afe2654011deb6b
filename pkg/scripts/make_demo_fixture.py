#!/usr/bin/env python3
"""Generate the 60-user demo fixture under demo/ (deterministic).

Four scientist clusters of 12 users follow each other densely and share
links from cluster-specific domains. Twelve more users exercise the
filters: private accounts, single-word display names, a private list,
an off-topic list, and people who are never reached from the seeds.

The census files written here are small synthetic excerpts in the
census column layout, not real census data.
"""
from __future__ import annotations

import argparse
import json
import random
from pathlib import Path

from scilist.source import ListRecord, OriginalRef, Status, UserProfile, write_fixture

CLUSTERS = {
    "eco": {
        "titles": ["ecologist", "evolutionary biologist", "marine biologist", "biologist"],
        "lists": ["Ecologists", "Evolutionary biologists", "marine-biologists"],
        "words": ["coral reefs", "field work", "biodiversity", "fisheries"],
        "sci": ["nature.com/articles/e{}", "esapubs.esa.org/e{}", "journals.plos.org/plosone/e{}",
                "onlinelibrary.wiley.com/doi/e{}"],
        "other": ["theguardian.com/environment/e{}", "youtube.com/watch?v=e{}"],
    },
    "phys": {
        "titles": ["physicist", "astronomer", "astrophysicist", "cosmologist"],
        "lists": ["Physicists", "Astronomers I follow", "astro folks"],
        "words": ["dark matter", "telescopes", "galaxies", "quantum"],
        "sci": ["arxiv.org/abs/p{}", "journals.aps.org/prl/p{}", "sciencemag.org/p{}",
                "iopscience.iop.org/p{}"],
        "other": ["nasa.gov/p{}", "youtube.com/watch?v=p{}"],
    },
    "soc": {
        "titles": ["economist", "political scientist", "sociologist", "historian"],
        "lists": ["Economists", "Political scientists", "Social scientists"],
        "words": ["inequality", "elections", "labor markets", "policy"],
        "sci": ["nber.org/papers/s{}", "papers.ssrn.com/s{}", "blogs.lse.ac.uk/s{}",
                "tandfonline.com/doi/s{}"],
        "other": ["nytimes.com/s{}", "washingtonpost.com/s{}"],
    },
    "cs": {
        "titles": ["computer scientist", "statistician", "data scientist", "mathematician"],
        "lists": ["computer scientists", "Statisticians", "Data Scientists"],
        "words": ["machine learning", "bayes", "algorithms", "open source"],
        "sci": ["dl.acm.org/doi/c{}", "arxiv.org/abs/c{}", "ieeexplore.ieee.org/c{}",
                "link.springer.com/c{}"],
        "other": ["github.com/c{}", "medium.com/c{}"],
    },
}

FEMALE = ["MARY", "LINDA", "SUSAN", "KAREN", "BETSEY", "HELEN", "SARAH", "LAURA",
          "EMMA", "GRACE", "ANNA", "RUTH", "CLAIRE", "NORA", "JULIA"]
MALE = ["JAMES", "JOHN", "ROBERT", "DAVID", "PAUL", "MARK", "GEORGE", "PETER",
        "THOMAS", "DANIEL", "ERIC", "HENRY", "SAMUEL", "OSCAR", "VICTOR"]
BOTH = {"JORDAN": (0.012, 0.094), "TAYLOR": (0.051, 0.050), "JESSIE": (0.067, 0.067)}
UNLISTED = ["Oluwaseun", "Xiadani", "Ikaika", "Zeynep", "Anahera", "Tenzin"]
SURNAMES = ["Smith", "Garcia", "Chen", "Okafor", "Novak", "Silva", "Khan", "Muller",
            "Rossi", "Tanaka", "Larsen", "Dubois", "Kowalski", "Haddad", "Moreau", "Park"]


def census_lines(names: dict[str, float]) -> list[str]:
    cum = 0.0
    out = []
    for rank, (name, freq) in enumerate(sorted(names.items(), key=lambda kv: (-kv[1], kv[0])), 1):
        cum += freq
        out.append(f"{name:<15}{freq:6.3f}{cum:7.3f}{rank:7d}")
    return out


def build(out: Path, seed: int = 2016) -> None:
    rng = random.Random(seed)
    users, statuses, follows = [], {}, set()
    lists: list[ListRecord] = []
    responses, redirects = {}, {}
    first_pool = ([n.title() for n in FEMALE] + [n.title() for n in MALE]
                  + [n.title() for n in BOTH] + UNLISTED)
    rng.shuffle(first_pool)

    members: dict[str, list[str]] = {c: [] for c in CLUSTERS}
    uid = 100
    for ci, (cname, c) in enumerate(CLUSTERS.items()):
        for k in range(12):
            uid += 1
            u = f"u{uid}"
            first = first_pool[(ci * 12 + k) % len(first_pool)]
            prefix = "Dr. " if k % 5 == 0 else ""
            display = f"{prefix}{first} {SURNAMES[(ci * 5 + k) % len(SURNAMES)]}"
            title = c["titles"][k % len(c["titles"])]
            rank = ["PhD student", "Postdoc", "Assistant Professor", "Professor", ""][k % 5]
            word = c["words"][k % len(c["words"])]
            if k == 11:
                # listed but silent about their job: reached, never self-identified
                desc = f"Coffee, {word} and long walks. Views my own."
            else:
                desc = f"{rank + ', ' if rank else ''}{title} working on {word}."
            img = f"https://img.example.org/{u}.jpg"
            users.append(UserProfile(u, f"{cname}_{first.lower()}{k}", display, desc, img,
                                     True, 20 + 3 * k))
            members[cname].append(u)
            if first.upper() in UNLISTED_UPPER or first.upper() in ("TAYLOR", "JESSIE"):
                label = "female" if (ci + k) % 2 else "male"
                conf = 97.5 if k % 3 else 71.0
                responses[img] = [label, conf]

    # noise users
    noise = []
    for k, (name, public, spaced) in enumerate([
        ("ScienceNews", True, False), ("LabBot", True, False), ("ArxivDaily", True, False),
        ("Priya Raman", False, True), ("Tomas Berg", False, True),
        ("Lena Fischer", True, True), ("Omar Aziz", True, True), ("Ines Duarte", True, True),
        ("Ravi Shah", True, True), ("PaperAlerts", True, False), ("Mia Kato", True, True),
        ("Noah Price", True, True),
    ]):
        uid += 1
        u = f"u{uid}"
        desc = ["Daily science headlines", "I post papers", "New preprints", "biologist",
                "physicist", "ecologist who is never listed", "economist, unlisted",
                "Travel and food", "Chemist", "Alerts", "statistician", "Writer"][k]
        users.append(UserProfile(u, name.lower().replace(" ", "_"), name, desc, None, public, k))
        noise.append(u)
    n_sci, n_bot, n_priv = noise[3:5], noise[:3] + noise[9:10], noise[3:5]
    unreached = noise[5:9] + noise[10:12]

    lid = 0
    for cname, c in CLUSTERS.items():
        mem = members[cname]
        for j, lname in enumerate(c["lists"]):
            lid += 1
            chosen = [m for i, m in enumerate(mem) if (i + j) % 3 != 0 or i == j]
            if j == 0:
                chosen += n_bot[:2] + [n_priv[0]]
            lists.append(ListRecord(f"L{lid:03d}", lname, f"curated by {cname}", True, tuple(chosen)))
    lid += 1
    lists.append(ListRecord(f"L{lid:03d}", "chemists", "secret list", False,
                            tuple(unreached[:3] + members["eco"][:2])))
    lid += 1
    lists.append(ListRecord(f"L{lid:03d}", "Friends", "people I like", True,
                            tuple(members["soc"][:3] + unreached[3:5])))
    lid += 1
    lists.append(ListRecord(f"L{lid:03d}", "Great accounts", "a statistician and others", True,
                            tuple(members["cs"][5:8] + [unreached[5]])))

    all_sci = [u for c in CLUSTERS for u in members[c]]
    for cname in CLUSTERS:
        for a in members[cname]:
            for b in members[cname]:
                if a != b and rng.random() < 0.55:
                    follows.add((a, b))
    for a in all_sci:
        for b in all_sci:
            if a != b and rng.random() < 0.02:
                follows.add((a, b))
        for b in noise:
            if rng.random() < 0.1:
                follows.add((a, b))

    screen = {u.user_id: u.screen_name for u in users}
    sid = 10_000
    tweets_by: dict[str, list[tuple[str, tuple[str, ...]]]] = {}
    for cname, c in CLUSTERS.items():
        for k, u in enumerate(members[cname]):
            own = []
            for t in range(rng.randint(4, 9)):
                sid += 1
                r = rng.random()
                if r < 0.45:
                    urls = (f"https://{rng.choice(c['sci']).format(sid)}",)
                elif r < 0.7:
                    urls = (f"https://www.{rng.choice(c['other']).format(sid)}",)
                elif r < 0.85:
                    short = f"http://bit.ly/{cname[0]}{sid}"
                    redirects[short] = f"https://{rng.choice(c['sci']).format(sid)}"
                    urls = (short,)
                elif r < 0.92:
                    urls = (f"https://{rng.choice(c['sci']).format(sid)}",
                            f"https://www.{rng.choice(c['other']).format(sid)}")
                else:
                    urls = ()
                mention = rng.choice(members[cname])
                text = f"New on {rng.choice(c['words'])}"
                if mention != u and rng.random() < 0.5:
                    text += f" with @{screen[mention]}"
                own.append(Status(f"s{sid}", u, "Tweet", text, urls))
            if k == 3:
                sid += 1
                own.append(Status(f"s{sid}", u, "Tweet", "dead link", ("http://bit.ly/gone",)))
            tweets_by[u] = [(s.status_id, s.urls) for s in own]
            statuses[u] = own
    for cname in CLUSTERS:
        for u in members[cname]:
            extra = []
            for _ in range(rng.randint(1, 5)):
                sid += 1
                if rng.random() < 0.8:
                    other = rng.choice(members[cname])
                else:
                    other = rng.choice(all_sci)
                if other == u or not tweets_by[other]:
                    continue
                osid, ourls = rng.choice(tweets_by[other])
                extra.append(Status(f"s{sid}", u, "Retweet", "", (),
                                    OriginalRef(other, osid, ourls)))
            sid += 1
            target = rng.choice(members[cname])
            extra.append(Status(f"s{sid}", u, "Reply", f"@{screen[target]} agreed",
                                (f"https://www.youtube.com/watch?v=r{sid}",)))
            statuses[u] = sorted(statuses[u] + extra, key=lambda s: s.status_id, reverse=True)

    write_fixture(out / "fixture", users, lists, sorted(follows), statuses)

    attrs = []
    for i, u in enumerate(users):
        cl = next((c for c in CLUSTERS if u.user_id in members[c]), None)
        if cl is None:
            words = [["news", 0.9], ["science", 0.5], ["daily", 0.2]]
        else:
            words = [["science", 0.9], [CLUSTERS[cl]["titles"][0], 0.8], ["research", 0.4]]
        if i % 7 == 2 and cl is not None:
            words = [["research", 0.9], ["data", 0.5]]
        attrs.append({"user_id": u.user_id, "listed_count": u.listed_count if cl else 3,
                      "attributes": words})
    (out / "attributes.jsonl").write_text(
        "".join(json.dumps(a, sort_keys=True) + "\n" for a in attrs), encoding="utf-8")
    (out / "image_responses.json").write_text(
        json.dumps(responses, indent=1, sort_keys=True) + "\n", encoding="utf-8")
    (out / "redirects.json").write_text(
        json.dumps(redirects, indent=1, sort_keys=True) + "\n", encoding="utf-8")

    census = out / "census"
    census.mkdir(parents=True, exist_ok=True)
    fem = {n: round(2.0 / (i + 1), 3) for i, n in enumerate(FEMALE)}
    mal = {n: round(2.5 / (i + 1), 3) for i, n in enumerate(MALE)}
    for n, (f, m) in BOTH.items():
        fem[n], mal[n] = f, m
    (census / "dist.female.first").write_text("\n".join(census_lines(fem)) + "\n", encoding="ascii")
    (census / "dist.male.first").write_text("\n".join(census_lines(mal)) + "\n", encoding="ascii")


UNLISTED_UPPER = {n.upper() for n in UNLISTED}


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default=str(Path(__file__).resolve().parent.parent / "demo"))
    ap.add_argument("--seed", type=int, default=2016)
    args = ap.parse_args()
    build(Path(args.out), args.seed)


if __name__ == "__main__":
    main()
