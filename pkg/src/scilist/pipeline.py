"""Pipeline stages. Each stage reads its predecessors' artifacts from the
output directory and writes its own subdirectory plus a manifest."""
from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import shutil
from collections import Counter
from pathlib import Path
from typing import Callable, Iterable, Sequence

from . import communities as cm
from . import netanalysis as na
from .config import PipelineConfig
from .lexicon import OES_GROUPS, OesGroup, load_lexicon, match_titles, unique_titles
from .profiles import (CensusNameDb, FixtureImageClassifier, Gender, ScientistRecord,
                       assign_discipline, assign_gender, assign_rank, count_list_titles,
                       gender_summary, primary_group, read_oes_csv, workforce_table)
from .sampler import (SampleResult, filter_self_identified, read_attribute_records,
                      select_seeds, snowball)
from .source import (FixtureSource, RateBudget, RateLimiter, RestConfig, RestSource,
                     SourceError, Status, SystemClock, VirtualClock)
from .urlshare import (FixtureResolver, HttpResolver, domain_counts, expand_all,
                       extract_urls, fraction_histogram, read_domain_list, scientific_fraction,
                       top_domains)

log = logging.getLogger(__name__)

STAGES = ("sample", "classify", "urls", "networks", "communities", "report")
REQUIRES = {
    "sample": (),
    "classify": ("sample",),
    "urls": ("classify",),
    "networks": ("classify",),
    "communities": ("classify", "networks"),
    "report": ("classify", "urls", "networks", "communities"),
}
NETWORKS = (na.FOLLOWER, na.RETWEET_NET, na.MENTION)
CENTRALITIES = (na.IN_DEGREE, na.IN_STRENGTH, na.PAGERANK, na.KCORE)
REPORT_TABLES = ("disciplines", "workforce", "gender", "domains", "s_histograms",
                 "network_summary", "centrality_tops", "group_shares", "communities")


class StageDependencyError(RuntimeError):
    def __init__(self, stage: str, needed: str):
        super().__init__(f"stage {stage!r} needs the output of {needed!r}; "
                         f"run `scilist {needed}` first")
        self.needed = needed


class DataError(RuntimeError):
    pass


# -- artifact writing -------------------------------------------------------

def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> list[list[str]]:
    table = [[_fmt(x) for x in r] for r in rows]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(table)
    path.write_text(buf.getvalue(), encoding="utf-8")
    return table


def read_csv(path: Path) -> list[dict[str, str]]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def render_text(header: Sequence[str], rows: Sequence[Sequence], title: str = "") -> str:
    """Left-aligned text table; floats are shown with four decimals."""
    def cell(v):
        if isinstance(v, float):
            return f"{v:.4f}"
        return _fmt(v)

    cells = [[cell(x) for x in r] for r in rows]
    widths = [max([len(h)] + [len(r[i]) for r in cells]) for i, h in enumerate(header)]
    line = "  ".join(h.ljust(w) for h, w in zip(header, widths)).rstrip()
    out = [title, "=" * len(title)] if title else []
    out += [line, "  ".join("-" * w for w in widths)]
    out += ["  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in cells]
    return "\n".join(out) + "\n"


def write_json(path: Path, doc) -> None:
    path.write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n", encoding="utf-8")


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def write_manifest(stage_dir: Path, stage: str, cfg: PipelineConfig) -> None:
    files = sorted(p for p in stage_dir.rglob("*") if p.is_file() and p.name != "manifest.json")
    write_json(stage_dir / "manifest.json", {
        "stage": stage,
        "config_hash": cfg.hash(),
        "seed": cfg.seed,
        "files": {p.relative_to(stage_dir).as_posix(): _sha256(p) for p in files},
    })


def _fresh_dir(path: Path) -> Path:
    if path.exists():
        shutil.rmtree(path)
    path.mkdir(parents=True)
    return path


def _require(cfg: PipelineConfig, stage: str) -> None:
    for dep in REQUIRES[stage]:
        if not (cfg.out_dir / dep / "manifest.json").is_file():
            raise StageDependencyError(stage, dep)


def _load_json(path: Path):
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc


# -- shared inputs ----------------------------------------------------------

def make_source(cfg: PipelineConfig):
    budget = RateBudget(cfg.window_seconds, cfg.max_calls)
    if cfg.fixture:
        # fixture replay never waits on the wall clock
        limiter = RateLimiter(budget, VirtualClock())
        return FixtureSource(cfg.path("fixture"), cfg.page_size, limiter)
    limiter = RateLimiter(budget, SystemClock())
    return RestSource(RestConfig(cfg.rest_base_url, page_size=cfg.page_size), limiter)


def _lexicon(cfg: PipelineConfig):
    return load_lexicon(cfg.path("lexicon"))


def _scientists(cfg: PipelineConfig) -> list[dict[str, str]]:
    return read_csv(cfg.out_dir / "classify" / "scientists.csv")


def _split(field: str) -> list[str]:
    return [x for x in field.split(";") if x]


# -- stages -----------------------------------------------------------------

def stage_sample(cfg: PipelineConfig) -> None:
    out = _fresh_dir(cfg.out_dir / "sample")
    lex = _lexicon(cfg)
    source = make_source(cfg)
    if cfg.seeds:
        seeds = [s.strip() for s in cfg.path("seeds").read_text(encoding="utf-8").splitlines()
                 if s.strip() and not s.startswith("#")]
    else:
        recs = read_attribute_records(cfg.path("attributes"))
        seeds = select_seeds(recs, lex, cfg.min_listed, cfg.top_attrs)
    if not seeds:
        raise DataError("no seed users selected")
    ckpt = out / "crawl.checkpoint" if cfg.checkpoint_every else None
    res = snowball(seeds, source, lex, match_descriptions=cfg.match_list_descriptions,
                   workers=cfg.workers, checkpoint_path=ckpt,
                   checkpoint_every=cfg.checkpoint_every)
    if ckpt is not None:
        ckpt.unlink(missing_ok=True)
    res.self_identified = filter_self_identified(res, source, lex)
    res.check()
    (out / "seeds.txt").write_text("".join(s + "\n" for s in seeds), encoding="utf-8")
    write_json(out / "result.json", res.to_dict())
    log.info("sample: %d visited, %d candidates, %d self-identified", len(res.visited),
             len(res.candidates), len(res.self_identified))
    write_manifest(out, "sample", cfg)


def stage_classify(cfg: PipelineConfig) -> None:
    _require(cfg, "classify")
    res = SampleResult.from_dict(_load_json(cfg.out_dir / "sample" / "result.json"))
    out = _fresh_dir(cfg.out_dir / "classify")
    lex = _lexicon(cfg)
    source = make_source(cfg)
    census = CensusNameDb.load(cfg.path("census_female"), cfg.path("census_male"))
    classifier = (FixtureImageClassifier.from_file(cfg.path("image_responses"))
                  if cfg.image_responses else None)

    rows, profiles, bundles = [], {}, {}
    for uid in sorted(res.self_identified):
        try:
            bundle = source.fetch_user_bundle(uid, cfg.max_statuses)
            lists = source.fetch_memberships(uid)
        except SourceError as exc:
            log.info("classify: dropping %s: %s", uid, exc)
            continue
        prof = bundle.profile
        ptitles = unique_titles(match_titles(prof.description, lex))
        lcounts = count_list_titles((lr.name for lr in lists), lex)
        rec = ScientistRecord(uid, ptitles, lcounts, assign_discipline(ptitles, lcounts))
        rec.oes_group = primary_group(rec.disciplines)
        rec.gender, rec.gender_method = assign_gender(
            prof.display_name, census, classifier, cfg.confidence, prof.profile_image_url)
        rec.rank = assign_rank(prof.description, cfg.rank_order)
        rows.append([
            uid, prof.screen_name,
            ";".join(t.canonical for t in rec.disciplines),
            rec.oes_group.value if rec.oes_group else "",
            ";".join(g.value for g in rec.oes_groups),
            ";".join(t.canonical for t in rec.profile_titles),
            ";".join(f"{t.canonical}={n}" for t, n in sorted(lcounts.items())),
            rec.gender.value, rec.gender_method.value, rec.rank.value,
        ])
        profiles[uid] = {"screen_name": prof.screen_name, "display_name": prof.display_name,
                         "description": prof.description}
        bundles[uid] = {"followers": sorted(bundle.followers),
                        "followings": sorted(bundle.followings),
                        "statuses": [s.to_dict() for s in bundle.statuses]}
    write_csv(out / "scientists.csv",
              ["user_id", "screen_name", "disciplines", "oes_group", "oes_groups",
               "profile_titles", "list_titles", "gender", "gender_method", "rank"], rows)
    write_json(out / "profiles.json", profiles)
    write_json(out / "bundles.json", bundles)
    log.info("classify: %d scientists", len(rows))
    write_manifest(out, "classify", cfg)


def _primary_discipline(rows) -> dict[str, str]:
    return {r["user_id"]: _split(r["disciplines"])[0] for r in rows if r["disciplines"]}


def _top_disciplines(rows, n: int) -> list[str]:
    counts = Counter(_primary_discipline(rows).values())
    return [d for d, _ in sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[:n]]


def _statuses(bundles: dict) -> list[Status]:
    return [Status.from_dict(s) for uid in sorted(bundles) for s in bundles[uid]["statuses"]]


def stage_urls(cfg: PipelineConfig) -> None:
    _require(cfg, "urls")
    rows = _scientists(cfg)
    bundles = _load_json(cfg.out_dir / "classify" / "bundles.json")
    out = _fresh_dir(cfg.out_dir / "urls")
    sci = read_domain_list(cfg.path("sci_domains"))
    shorteners = read_domain_list(cfg.path("shorteners"))
    if cfg.redirects:
        resolver = FixtureResolver(_load_json(cfg.path("redirects")))
    elif cfg.rest_base_url:
        resolver = HttpResolver()
    else:
        resolver = FixtureResolver({})
    mentions = expand_all(extract_urls(_statuses(bundles)), resolver, shorteners,
                          cfg.max_in_flight)
    if sum(domain_counts(mentions).values()) != len(mentions):
        raise DataError("domain counts do not add up to the number of mentions")
    write_csv(out / "mentions.csv",
              ["user_id", "status_id", "raw_url", "expanded_url", "domain", "expand_failed"],
              ([m.user_id, m.status_id, m.raw_url, m.expanded_url, m.domain, m.expand_failed]
               for m in mentions))

    disc_of = _primary_discipline(rows)
    top = _top_disciplines(rows, cfg.n_disciplines)
    ranking = []
    for scope, items in (("all", top_domains(mentions, cfg.top_k, dedup=cfg.dedup)),
                         ("scientific", top_domains(mentions, cfg.top_k, sci, dedup=cfg.dedup))):
        ranking += [[scope, "", i, d, c] for i, (d, c) in enumerate(items, 1)]
    per_disc = top_domains(mentions, cfg.top_k_discipline, sci,
                           {u: d for u, d in disc_of.items() if d in top}, dedup=cfg.dedup)
    for d in top:
        ranking += [["discipline", d, i, dom, c] for i, (dom, c) in enumerate(per_disc.get(d, []), 1)]
    write_csv(out / "domains.csv", ["scope", "discipline", "rank", "domain", "count"], ranking)

    s = scientific_fraction(mentions, sci)
    write_csv(out / "s_values.csv", ["user_id", "discipline", "s"],
              ([u, disc_of.get(u, ""), v] for u, v in s.items()))
    by_disc = {d: [v for u, v in s.items() if disc_of.get(u) == d] for d in top}
    hist = fraction_histogram(by_disc, cfg.bins)
    write_csv(out / "s_histogram.csv", ["discipline", "bin_lo", "bin_hi", "count"],
              ([d, lo, hi, c] for d in top for lo, hi, c in hist[d]))
    write_manifest(out, "urls", cfg)


def _follows(bundles: dict) -> list[tuple[str, str]]:
    pairs = set()
    for uid, b in bundles.items():
        pairs.update((uid, f) for f in b["followings"])
        pairs.update((f, uid) for f in b["followers"])
    return sorted(pairs)


def _networks(cfg: PipelineConfig, rows, bundles) -> dict[str, na.DirectedGraph]:
    scientists = [r["user_id"] for r in rows]
    names = {r["screen_name"].lower(): r["user_id"] for r in rows}
    statuses = _statuses(bundles)
    return {
        na.FOLLOWER: na.build_follower_network(_follows(bundles), scientists),
        na.RETWEET_NET: na.build_retweet_network(statuses, scientists),
        na.MENTION: na.build_mention_network(statuses, names, scientists),
    }


def _centralities(cfg: PipelineConfig, g: na.DirectedGraph) -> list[na.CentralityVector]:
    if not len(g):
        return [na.CentralityVector(k, {}) for k in CENTRALITIES]
    return [na.in_degree(g), na.in_strength(g), na.pagerank(g, cfg.damping, cfg.tol),
            na.k_core_numbers(g, cfg.kcore_mode)]


def stage_networks(cfg: PipelineConfig) -> None:
    _require(cfg, "networks")
    rows = _scientists(cfg)
    bundles = _load_json(cfg.out_dir / "classify" / "bundles.json")
    out = _fresh_dir(cfg.out_dir / "networks")
    graphs = _networks(cfg, rows, bundles)
    group_of = {r["user_id"]: (r["oes_group"] or None) for r in rows}
    labels = {
        "discipline": _primary_discipline(rows),
        "oes_group": group_of,
        "gender": {r["user_id"]: (r["gender"] if r["gender"] != Gender.UNKNOWN.value else None)
                   for r in rows},
    }
    summary, cent_rows, share_rows, assort_rows = [], [], [], []
    groups = [g.value for g in OES_GROUPS]
    for kind in NETWORKS:
        g = graphs[kind]
        write_csv(out / f"edges_{kind.lower()}.csv", ["src", "dst", "weight"], g.edges)
        w = na.largest_wcc(g)
        summary.append([kind, len(g), g.number_of_edges(), len(w), w.number_of_edges()])
        for c in _centralities(cfg, w):
            cent_rows += [[kind, c.kind, u, v] for u, v in sorted(c.values.items())]
            share = na.group_share(c, group_of, groups, cfg.include_unknown)
            norm = na.normalized_group_share(c, group_of, groups, cfg.include_unknown)
            share_rows += [[kind, c.kind, grp, share[grp], norm[grp]] for grp in groups]
        for attr, lab in labels.items():
            r = na.assortativity_discrete(w, lab, cfg.weighted_assortativity)
            assort_rows.append([kind, attr, r])
    write_csv(out / "summary.csv", ["network", "nodes", "links", "wcc_nodes", "wcc_links"], summary)
    write_csv(out / "centralities.csv", ["network", "kind", "user_id", "value"], cent_rows)
    write_csv(out / "group_shares.csv",
              ["network", "centrality", "group", "share", "normalized_share"], share_rows)
    write_csv(out / "assortativity.csv", ["network", "attribute", "r"], assort_rows)
    write_manifest(out, "networks", cfg)


def _read_graph(path: Path, nodes: Iterable[str]) -> na.DirectedGraph:
    edges = [(r["src"], r["dst"], float(r["weight"])) for r in read_csv(path)]
    return na.DirectedGraph(nodes, edges)


def stage_communities(cfg: PipelineConfig) -> None:
    _require(cfg, "communities")
    rows = _scientists(cfg)
    profiles = _load_json(cfg.out_dir / "classify" / "profiles.json")
    out = _fresh_dir(cfg.out_dir / "communities")
    g = _read_graph(cfg.out_dir / "networks" / "edges_follower.csv", (r["user_id"] for r in rows))
    if not len(g):
        raise DataError("follower network is empty")
    part = cm.detect_communities(g, seed=cfg.seed, trials=cfg.trials, damping=cfg.damping)
    write_csv(out / "partition.csv", ["user_id", "community_id"], sorted(part.assignment.items()))
    net = cm.community_network(g, part, cfg.min_community_size)
    kept = set(net.retained)
    write_csv(out / "community_network.csv", ["src_comm", "dst_comm", "weight", "retained"],
              ([a, b, w, (a, b) in kept] for (a, b), w in net.ordered_edges()))
    bios = {u: p["description"] for u, p in profiles.items()}
    summaries = cm.label_and_rank(part, bios, g, cfg.damping, cfg.label_words, cfg.top_members)
    write_json(out / "summaries.json", {
        "seed": part.seed, "trials": cfg.trials, "codelength": part.codelength,
        "community_network_connected": net.connected,
        "communities": [s.to_dict() for s in summaries],
    })
    write_manifest(out, "communities", cfg)


# -- report -----------------------------------------------------------------

def _emit(out: Path, name: str, title: str, header, rows) -> None:
    write_csv(out / f"{name}.csv", header, rows)
    (out / f"{name}.txt").write_text(render_text(header, rows, title), encoding="utf-8")


def stage_report(cfg: PipelineConfig) -> None:
    _require(cfg, "report")
    rows = _scientists(cfg)
    base = cfg.out_dir
    out = _fresh_dir(base / "report")

    counts: Counter = Counter()
    for r in rows:
        counts.update(set(_split(r["disciplines"])))
    top = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[:cfg.n_disciplines_table]
    _emit(out, "disciplines", "Users in the most represented disciplines",
          ["discipline", "users"], [[d, n] for d, n in top])

    group_counts = {g: 0 for g in OES_GROUPS}
    for r in rows:
        for g in _split(r["oes_groups"]):
            group_counts[OesGroup(g)] += 1
    wf = workforce_table(group_counts, read_oes_csv(cfg.path("oes")))
    _emit(out, "workforce", "Scientists on the platform vs. science workforce",
          ["group", "employment", "employment_pct", "twitter_users", "twitter_pct", "ratio"],
          [[w.group.value, int(w.employment), 100 * w.employment_pct, int(w.twitter_count),
            100 * w.twitter_pct, w.ratio] for w in wf])

    gc = Counter(r["gender"] for r in rows)
    mc = Counter(r["gender_method"] for r in rows)
    rc = Counter(r["rank"] for r in rows)
    gs = gender_summary(gc[Gender.FEMALE.value], gc[Gender.MALE.value], len(rows))
    measures = [
        ("total", gs.total), ("female", gs.female), ("male", gs.male),
        ("female_to_male_ratio", gs.ratio),
        ("female_share_pct", None if gs.female_share is None else 100 * gs.female_share),
        ("identified_pct", None if gs.identified_fraction is None else 100 * gs.identified_fraction),
        ("by_census", mc["Census"]), ("by_image", mc["Image"]),
        ("rank_student", rc["Student"]), ("rank_postdoc", rc["Postdoc"]),
        ("rank_professor", rc["Professor"]),
    ]
    _emit(out, "gender", "Gender and academic rank", ["measure", "value"], measures)

    doms = read_csv(base / "urls" / "domains.csv")
    _emit(out, "domains", "Most shared domains", ["scope", "discipline", "rank", "domain", "count"],
          [[d["scope"], d["discipline"], int(d["rank"]), d["domain"], int(d["count"])] for d in doms])
    hist = read_csv(base / "urls" / "s_histogram.csv")
    _emit(out, "s_histograms", "Fraction of scientific URLs per user, by discipline",
          ["discipline", "bin_lo", "bin_hi", "count"],
          [[h["discipline"], float(h["bin_lo"]), float(h["bin_hi"]), int(h["count"])] for h in hist])

    assort = {(a["network"], a["attribute"]): (float(a["r"]) if a["r"] else None)
              for a in read_csv(base / "networks" / "assortativity.csv")}
    summ = read_csv(base / "networks" / "summary.csv")
    _emit(out, "network_summary", "Scientist networks (largest weakly connected component)",
          ["network", "nodes", "links", "wcc_nodes", "wcc_links", "r_discipline", "r_oes_group",
           "r_gender"],
          [[s["network"], int(s["nodes"]), int(s["links"]), int(s["wcc_nodes"]),
            int(s["wcc_links"]), assort[(s["network"], "discipline")],
            assort[(s["network"], "oes_group")], assort[(s["network"], "gender")]] for s in summ])

    names = {r["user_id"]: r["screen_name"] for r in rows}
    by: dict = {}
    for c in read_csv(base / "networks" / "centralities.csv"):
        by.setdefault((c["network"], c["kind"]), []).append((c["user_id"], float(c["value"])))
    tops = []
    for net in NETWORKS:
        for kind in CENTRALITIES:
            ranked = sorted(by.get((net, kind), []), key=lambda x: (-x[1], x[0]))[:cfg.top_n]
            tops += [[net, kind, i, u, names.get(u, ""), v] for i, (u, v) in enumerate(ranked, 1)]
    _emit(out, "centrality_tops", "Top users by centrality",
          ["network", "centrality", "rank", "user_id", "screen_name", "value"], tops)

    shares = read_csv(base / "networks" / "group_shares.csv")
    _emit(out, "group_shares", "Centrality share held by each OES group",
          ["network", "centrality", "group", "share", "normalized_share"],
          [[s["network"], s["centrality"], s["group"], float(s["share"]),
            float(s["normalized_share"]) if s["normalized_share"] else None] for s in shares])

    comm = _load_json(base / "communities" / "summaries.json")
    crow = []
    for c in comm["communities"]:
        if c["size"] < cfg.min_community_size:
            continue
        crow.append([c["community_id"], c["size"], " ".join(c["label_words"]),
                     " ".join(f"{names.get(u, u)}({pr:.4f})" for u, pr in c["top_members"])])
    _emit(out, "communities", "Communities of the follower network",
          ["community_id", "size", "label_words", "top_members"], crow)
    write_manifest(out, "report", cfg)


RUNNERS: dict[str, Callable[[PipelineConfig], None]] = {
    "sample": stage_sample,
    "classify": stage_classify,
    "urls": stage_urls,
    "networks": stage_networks,
    "communities": stage_communities,
    "report": stage_report,
}


def run_stage(stage: str, cfg: PipelineConfig) -> None:
    if stage == "all":
        for s in STAGES:
            run_stage(s, cfg)
        return
    log.info("running stage %s", stage)
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    try:
        RUNNERS[stage](cfg)
    except (StageDependencyError, DataError):
        raise
    except (SourceError, ValueError, KeyError, OSError) as exc:
        raise DataError(f"{stage}: {exc}") from exc
