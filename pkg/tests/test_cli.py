import filecmp
import json
import shutil
from pathlib import Path

import pytest

from scilist.cli import main
from scilist.config import SCHEMA, ConfigError, load_config
from scilist.pipeline import STAGES

DEMO = Path(__file__).resolve().parents[1] / "demo"
INI = str(DEMO / "demo.ini")


def run(*args):
    return main(list(args))


@pytest.fixture(scope="module")
def demo_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("demo") / "out"
    assert run("all", "-c", INI, "--out", str(out)) == 0
    return out


def test_all_stages_leave_manifests(demo_run):
    for stage in STAGES:
        doc = json.loads((demo_run / stage / "manifest.json").read_text())
        assert doc["stage"] == stage and doc["seed"] == 0
        for name, digest in doc["files"].items():
            assert (demo_run / stage / name).is_file() and len(digest) == 64


def test_report_matches_golden(demo_run):
    golden = sorted(p.name for p in (DEMO / "golden").iterdir())
    assert len(golden) == 18
    _, mismatch, errors = filecmp.cmpfiles(DEMO / "golden", demo_run / "report", golden,
                                           shallow=False)
    assert mismatch == [] and errors == []


def test_rerunning_one_stage_is_isolated(demo_run, tmp_path):
    out = tmp_path / "out"
    shutil.copytree(demo_run, out)
    shutil.rmtree(out / "urls")
    assert run("urls", "-c", INI, "--out", str(out)) == 0
    cmp = filecmp.dircmp(demo_run / "urls", out / "urls")
    assert not cmp.diff_files and not cmp.left_only and not cmp.right_only
    for stage in ("sample", "networks", "report"):
        assert filecmp.cmp(demo_run / stage / "manifest.json", out / stage / "manifest.json",
                           shallow=False)


def test_missing_upstream_stage_exits_3(tmp_path, capsys):
    assert run("report", "-c", INI, "--out", str(tmp_path / "empty")) == 3
    assert "first" in capsys.readouterr().err


def test_validation_lists_every_problem(tmp_path, capsys):
    code = run("sample", "-c", INI, "--out", str(tmp_path), "--damping", "1.5",
               "--page-size", "many", "--rank-order", "random")
    assert code == 2
    err = capsys.readouterr().err
    assert "damping" in err and "page_size" in err and "rank_order" in err


def test_unknown_config_key_exits_2(tmp_path, capsys):
    ini = tmp_path / "bad.ini"
    ini.write_text(DEMO.joinpath("demo.ini").read_text() + "\n[extra]\nmystery = 1\n")
    assert run("sample", "-c", str(ini)) == 2
    assert "mystery" in capsys.readouterr().err


def test_corrupt_fixture_exits_4(tmp_path, capsys):
    shutil.copytree(DEMO, tmp_path / "demo", ignore=shutil.ignore_patterns("out", "golden"))
    (tmp_path / "demo" / "fixture" / "users.json").write_text("{not json")
    assert run("sample", "-c", str(tmp_path / "demo" / "demo.ini"),
               "--out", str(tmp_path / "o")) == 4
    assert "data error" in capsys.readouterr().err


def test_example_config_round_trips(tmp_path, capsys):
    assert run("example-config") == 0
    text = capsys.readouterr().out
    for key in SCHEMA:
        assert key.name in text
    # the template is a valid file once the required inputs are filled in
    ini = tmp_path / "t.ini"
    ini.write_text(text)
    shutil.copytree(DEMO, tmp_path / "d", ignore=shutil.ignore_patterns("out", "golden"))
    d = tmp_path / "d"
    cfg = load_config(ini, {"fixture": str(d / "fixture"), "attributes": str(d / "attributes.jsonl"),
                            "census_female": str(d / "census" / "dist.female.first"),
                            "census_male": str(d / "census" / "dist.male.first")})
    assert cfg.damping == 0.85 and cfg.trials == 10


@pytest.mark.parametrize("flag,value", [("damping", "0.9"), ("trials", "3"), ("seed", "7"),
                                        ("top_k", "5"), ("rank_order", "listing"),
                                        ("dedup", "true"), ("confidence", "80")])
def test_every_override_changes_the_hash(flag, value):
    base = load_config(INI)
    changed = load_config(INI, {flag: value})
    assert getattr(changed, flag) != getattr(base, flag)
    assert changed.hash() != base.hash()


def test_output_location_does_not_change_the_hash(tmp_path):
    assert load_config(INI, {"out": str(tmp_path)}).hash() == load_config(INI).hash()


def test_config_error_collects_problems():
    with pytest.raises(ConfigError) as info:
        load_config(INI, {"damping": "0", "trials": "-1"})
    assert len(info.value.problems) >= 2
