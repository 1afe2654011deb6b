"""Pipeline configuration: an INI file whose keys can each be overridden by a CLI flag."""
from __future__ import annotations

import configparser
import hashlib
import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

DATA_DIR = Path(__file__).resolve().parent / "data"
BUILTIN = "builtin:"


class ConfigError(ValueError):
    def __init__(self, problems: list[str]):
        super().__init__("invalid configuration:\n  " + "\n  ".join(problems))
        self.problems = problems


@dataclass(frozen=True)
class Key:
    section: str
    name: str
    kind: str  # int | float | bool | str | path | dir | choice
    default: Any = None
    check: Callable[[Any], bool] | None = None
    rule: str = ""
    choices: tuple[str, ...] = ()
    required: bool = False

    @property
    def flag(self) -> str:
        return "--" + self.name.replace("_", "-")


def _ge(lo):
    return (lambda v: v >= lo), f">= {lo}"


def _open01():
    return (lambda v: 0 < v < 1), "in (0, 1)"


def _k(section, name, kind, default=None, rule=None, **kw) -> Key:
    check, text = rule if rule else (None, "")
    return Key(section, name, kind, default, check, text, **kw)


# Every numeric default the paper leaves open lives in this table and in
# the commented example config, never inline in stage code.
SCHEMA: tuple[Key, ...] = (
    _k("source", "fixture", "dir"),
    _k("source", "rest_base_url", "str"),
    _k("source", "page_size", "int", 100, _ge(1)),
    _k("source", "max_calls", "int", 15, _ge(1)),
    _k("source", "window_seconds", "float", 900.0, ((lambda v: v > 0), "> 0")),
    _k("source", "workers", "int", 1, _ge(1)),
    _k("inputs", "lexicon", "path", BUILTIN + "titles.tsv"),
    _k("inputs", "seeds", "path"),
    _k("inputs", "attributes", "path"),
    _k("inputs", "census_female", "path", required=True),
    _k("inputs", "census_male", "path", required=True),
    _k("inputs", "oes", "path", BUILTIN + "oes_employment.csv"),
    _k("inputs", "sci_domains", "path", BUILTIN + "sci_domains.txt"),
    _k("inputs", "shorteners", "path", BUILTIN + "shorteners.txt"),
    _k("inputs", "image_responses", "path"),
    _k("inputs", "redirects", "path"),
    _k("sample", "min_listed", "int", 8, _ge(0)),
    _k("sample", "top_attrs", "int", 10, _ge(1)),
    _k("sample", "match_list_descriptions", "bool", False),
    _k("sample", "checkpoint_every", "int", 0, _ge(0)),
    _k("classify", "max_statuses", "int", 3200, _ge(0)),
    _k("classify", "confidence", "float", 90.0, ((lambda v: 0 <= v <= 100), "in [0, 100]")),
    _k("classify", "rank_order", "choice", "offset", choices=("offset", "listing")),
    _k("urls", "top_k", "int", 20, _ge(1)),
    _k("urls", "top_k_discipline", "int", 5, _ge(1)),
    _k("urls", "n_disciplines", "int", 10, _ge(1)),
    _k("urls", "bins", "int", 20, _ge(1)),
    _k("urls", "dedup", "bool", False),
    _k("urls", "max_in_flight", "int", 1, _ge(1)),
    _k("networks", "damping", "float", 0.85, _open01()),
    _k("networks", "tol", "float", 1e-12, ((lambda v: v > 0), "> 0")),
    _k("networks", "kcore_mode", "choice", "undirected", choices=("undirected", "in", "out", "total")),
    _k("networks", "weighted_assortativity", "bool", True),
    _k("networks", "include_unknown", "bool", False),
    _k("networks", "top_n", "int", 5, _ge(1)),
    _k("communities", "trials", "int", 10, _ge(1)),
    _k("communities", "seed", "int", 0, _ge(0)),
    _k("communities", "min_community_size", "int", 10, _ge(1)),
    _k("communities", "label_words", "int", 5, _ge(1)),
    _k("communities", "top_members", "int", 3, _ge(1)),
    _k("report", "n_disciplines_table", "int", 24, _ge(1)),
    _k("output", "out", "str", "scilist_out"),
)

KEYS = {k.name: k for k in SCHEMA}
assert len(KEYS) == len(SCHEMA), "config key names must be unique across sections"

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def _parse(key: Key, raw: str):
    raw = raw.strip()
    if key.kind == "int":
        return int(raw)
    if key.kind == "float":
        return float(raw)
    if key.kind == "bool":
        low = raw.lower()
        if low in _TRUE:
            return True
        if low in _FALSE:
            return False
        raise ValueError(f"not a boolean: {raw!r}")
    return raw


@dataclass
class PipelineConfig:
    """Validated settings. ``raw`` keeps the values as written, for hashing."""

    values: dict[str, Any]
    raw: dict[str, str]
    base_dir: Path
    config_path: Path | None = None
    extra: dict[str, Any] = field(default_factory=dict)

    def __getattr__(self, name: str):
        try:
            return self.__dict__["values"][name]
        except KeyError:
            raise AttributeError(name) from None

    def path(self, name: str) -> Path | None:
        v = self.values.get(name)
        if v in (None, ""):
            return None
        return resolve_path(v, self.base_dir)

    @property
    def out_dir(self) -> Path:
        return resolve_path(self.values["out"], self.base_dir)

    def hash(self) -> str:
        """Digest of every setting except the output directory."""
        doc = {k: v for k, v in sorted(self.raw.items()) if k != "out"}
        return hashlib.sha256(json.dumps(doc, sort_keys=True).encode()).hexdigest()


def resolve_path(value: str, base: Path) -> Path:
    if value.startswith(BUILTIN):
        return DATA_DIR / value[len(BUILTIN):]
    p = Path(value).expanduser()
    return p if p.is_absolute() else base / p


def load_config(path: str | Path | None, overrides: dict[str, str] | None = None) -> PipelineConfig:
    """Read the INI file (if any), apply overrides, validate, and collect every problem."""
    problems: list[str] = []
    raw: dict[str, str] = {}
    base = Path.cwd()
    cfg_path = None
    if path is not None:
        cfg_path = Path(path)
        if not cfg_path.is_file():
            raise ConfigError([f"config file {cfg_path} does not exist"])
        parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
        try:
            parser.read(cfg_path, encoding="utf-8")
        except configparser.Error as exc:
            raise ConfigError([f"cannot parse {cfg_path}: {exc}"]) from exc
        base = cfg_path.resolve().parent
        for section in parser.sections():
            for name, value in parser.items(section):
                key = KEYS.get(name)
                if key is None or key.section != section:
                    problems.append(f"unknown key [{section}] {name}")
                    continue
                raw[name] = value
    for name, value in (overrides or {}).items():
        if value is None:
            continue
        value = str(value)
        key = KEYS.get(name)
        if key is None:
            problems.append(f"unknown override {name}")
            continue
        # paths given on the command line are relative to the working directory
        if (key.kind in ("path", "dir") or name == "out") and value and \
                not value.startswith(BUILTIN):
            value = os.path.abspath(value)
        raw[name] = value

    values: dict[str, Any] = {}
    for key in SCHEMA:
        if key.name not in raw or raw[key.name].strip() == "":
            values[key.name] = key.default
            if key.required:
                problems.append(f"[{key.section}] {key.name} is required")
            continue
        try:
            v = _parse(key, raw[key.name])
        except ValueError as exc:
            problems.append(f"[{key.section}] {key.name}: {exc}")
            continue
        if key.kind == "choice" and v not in key.choices:
            problems.append(f"[{key.section}] {key.name} must be one of {', '.join(key.choices)}")
        if key.check is not None and not key.check(v):
            problems.append(f"[{key.section}] {key.name} = {v} must be {key.rule}")
        if key.kind in ("path", "dir"):
            p = resolve_path(v, base)
            ok = p.is_dir() if key.kind == "dir" else p.is_file()
            if not ok:
                problems.append(f"[{key.section}] {key.name}: {p} does not exist")
        values[key.name] = v
    for key in SCHEMA:
        if key.kind in ("path",) and key.default and key.name not in raw:
            if not resolve_path(key.default, base).is_file():
                problems.append(f"[{key.section}] {key.name}: packaged default missing")

    if not values.get("fixture") and not values.get("rest_base_url"):
        problems.append("[source] one of fixture or rest_base_url is required")
    if values.get("fixture") and values.get("rest_base_url"):
        problems.append("[source] fixture and rest_base_url are mutually exclusive")
    if not values.get("seeds") and not values.get("attributes"):
        problems.append("[inputs] one of seeds or attributes is required")
    if problems:
        raise ConfigError(problems)
    # hash what was effectively used, defaults included, so that setting a key
    # to its default does not change the digest
    effective = {k.name: (raw[k.name].strip() if k.name in raw else
                          ("" if k.default is None else str(k.default))) for k in SCHEMA}
    for k in SCHEMA:
        if k.kind in ("int", "float", "bool") and k.name in raw:
            effective[k.name] = str(values[k.name])
    return PipelineConfig(values, effective, base, cfg_path)


def example_config() -> str:
    """A commented INI listing every key with its default."""
    lines = ["; scilist pipeline configuration. Relative paths resolve against this file;",
             "; 'builtin:NAME' refers to a file shipped in the package data directory."]
    section = None
    for key in SCHEMA:
        if key.section != section:
            section = key.section
            lines += ["", f"[{section}]"]
        note = key.rule or ("|".join(key.choices) if key.choices else key.kind)
        if key.required:
            note += ", required"
        if key.default is None:
            default = ""
        elif key.kind == "bool":
            default = str(key.default).lower()
        else:
            default = str(key.default)
        lines.append(f"; {key.name}: {note}")
        lines.append(f"{key.name} = {default}" if default else f";{key.name} =")
    return "\n".join(lines) + "\n"
