import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scilist.lexicon import (LexiconError, OesGroup, TitleLexicon, compile_lexicon,
                             default_lexicon_path, load_lexicon, match_titles, read_title_source,
                             singularize, title_variants, tokenize, unique_titles)

FILLER = ["i", "love", "my", "work", "at", "the", "lab", "coffee", "on", "weekends",
          "team", "city", "views", "own", "hiking", "dad", "mom", "and", "with", "runner"]


def canonicals(text, lex):
    return [m.entry.canonical for m in match_titles(text, lex)]


def test_shipped_file_has_322_variants(lexicon):
    assert len(lexicon.variants) == 322


def test_every_variant_maps_to_exactly_one_entry(lexicon):
    seen = {}
    for e in lexicon.entries:
        for v in e.variants:
            assert v not in seen, v
            seen[v] = e
    assert set(seen) == set(lexicon.variants)


def test_every_entry_has_a_known_group(lexicon):
    for e in lexicon.entries:
        assert isinstance(e.oes_group, OesGroup)
    general = {e.canonical for e in lexicon.entries if e.oes_group is OesGroup.GENERAL}
    assert general == {"scientist", "researcher"}


def test_longest_match_wins(lexicon):
    assert canonicals("I am an evolutionary biologist", lexicon) == ["evolutionary biologist"]


def test_two_titles_in_one_text(lexicon):
    text = "biologist and sociologist walk in"
    ms = match_titles(text, lexicon)
    assert [m.entry.canonical for m in ms] == ["biologist", "sociologist"]
    assert [text[slice(*m.span)] for m in ms] == ["biologist", "sociologist"]


def test_no_word_interior_match(lexicon):
    assert match_titles("psychologistic tendencies", lexicon) == []
    assert match_titles("xastrophysicists", lexicon) == []
    # underscores separate words, as in handles like phd_student
    assert canonicals("astrophysicists_club", lexicon) == ["astrophysicist"]


def test_case_and_spacing_are_ignored(lexicon):
    assert canonicals("EVOLUTIONARY   Biologists!", lexicon) == ["evolutionary biologist"]
    assert canonicals("Evolutionary-Biologist", lexicon) == ["evolutionary biologist"]


def test_hyphenated_variant_needs_the_hyphen(lexicon):
    assert canonicals("industrial-organizational psychologist", lexicon) == [
        "industrial-organizational psychologist"]
    # without the hyphen only the core title remains
    assert canonicals("industrial organizational psychologist", lexicon) == ["psychologist"]


def test_plural_and_core_variants_map_to_their_entry(lexicon):
    assert lexicon.lookup("clinical psychologists").canonical == "clinical psychologist"
    assert lexicon.lookup("psychologists").canonical == "psychologist"
    assert lexicon.lookup("physicist").oes_group is OesGroup.PHYSICAL


def test_unique_titles_counts_once():
    lex = compile_lexicon([("ecologists", "19-1", "Life")], [])
    ms = match_titles("ecologist, ecologists and more ecologists", lex)
    assert len(ms) == 3
    assert [e.canonical for e in unique_titles(ms)] == ["ecologist"]


def test_singular_rule():
    assert singularize("physicists") == "physicist"
    assert singularize("physics") == "physics"
    assert singularize("mice", {"mice": "mouse"}) == "mouse"
    assert title_variants("Marine Biologists") == (
        "marine biologist", {"marine biologists", "marine biologist", "biologists", "biologist"})


def test_collision_goes_to_own_title_then_longest():
    lex = compile_lexicon([("biologists", "x", "Life"), ("marine biologists", "y", "Life"),
                           ("cell biologists", "z", "Life")], [])
    assert lex.lookup("biologist").canonical == "biologist"
    assert lex.lookup("marine biologist").canonical == "marine biologist"
    lex2 = compile_lexicon([("marine biologists", "y", "Life"), ("cell biologists", "z", "Life")], [])
    # no entry owns "biologist"; the longest canonical takes it, ties lexicographic
    assert lex2.lookup("biologist").canonical == "marine biologist"


def test_conflicting_groups_name_both_titles():
    with pytest.raises(LexiconError, match="physicists.*Physicists"):
        compile_lexicon([("physicists", "a", "Physical")], [("Physicists", None, "Life")],
                        general_titles=())


def test_empty_input_is_an_error():
    with pytest.raises(LexiconError):
        compile_lexicon([], [], general_titles=())


def test_json_roundtrip(lexicon, tmp_path):
    doc = lexicon.to_json()
    again = TitleLexicon.from_json(doc)
    assert again.variants == lexicon.variants
    assert json.loads(doc)["version"] == 1
    p = tmp_path / "lex.json"
    p.write_text(doc)
    assert load_lexicon(p).variants == lexicon.variants


def test_source_file_sections():
    soc, wiki, general, exceptions = read_title_source(default_lexicon_path())
    assert soc and wiki and general == ["scientists", "researchers"]
    assert exceptions == {}


def test_bad_source_line(tmp_path):
    p = tmp_path / "t.tsv"
    p.write_text("physicists\t19-2012\tNowhere\n")
    with pytest.raises(LexiconError, match="unknown oes_group"):
        read_title_source(p)


def test_tokenize_spans():
    text = "Post-doc, (PhD) at MIT"
    assert [(t, text[a:b]) for t, a, b in tokenize(text)] == [
        ("post", "Post"), ("doc", "doc"), ("phd", "PhD"), ("at", "at"), ("mit", "MIT")]


def embedding_check(lex, rng):
    """Embed one random variant among filler words; it must be found whole."""
    variant = rng.choice(lex.variants)
    words = [rng.choice(FILLER) for _ in range(rng.randint(0, 6))]
    pos = rng.randint(0, len(words))
    surface = "".join(c.upper() if rng.random() < 0.3 else c for c in variant)
    text = " ".join(words[:pos] + [surface] + words[pos:])
    ms = match_titles(text, lex)
    ok_whole = (len(ms) == 1 and ms[0].entry is lex.lookup(variant)
                and text[slice(*ms[0].span)].casefold() == variant)
    glued = text.replace(surface, "x" + surface + "q")
    ok_interior = match_titles(glued, lex) == []
    return ok_whole and ok_interior


def test_randomized_embeddings(lexicon):
    rng = random.Random(11)
    assert all(embedding_check(lexicon, rng) for _ in range(100))


@settings(max_examples=200, deadline=None)
@given(st.text(alphabet=st.characters(codec="utf-8"), max_size=80))
def test_matches_are_disjoint_and_on_word_boundaries(lexicon, text):
    ms = match_titles(text, lexicon)
    spans = [m.span for m in ms]
    assert spans == sorted(spans)
    for (a, b), (c, d) in zip(spans, spans[1:]):
        assert b <= c
    for m in ms:
        a, b = m.span
        assert a == 0 or not text[a - 1].isalnum()
        assert b == len(text) or not text[b].isalnum()


@settings(max_examples=100, deadline=None)
@given(st.lists(st.sampled_from(FILLER), max_size=5), st.lists(st.sampled_from(FILLER), max_size=5),
       st.integers(0, 321))
def test_no_shorter_title_shadows_a_longer_one(lexicon, left, right, k):
    variant = lexicon.variants[k]
    text = " ".join(left + [variant] + right)
    ms = match_titles(text, lexicon)
    assert [m.entry for m in ms] == [lexicon.lookup(variant)]
