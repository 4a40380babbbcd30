import logging

import numpy as np
import pytest

from acrokit.corpus import Document, index_sentences
from acrokit.dictionary import (
    AcronymDictionary,
    ADSample,
    build_dictionary,
    collect_long_form_counts,
    generate_ad_samples,
    levenshtein,
    normalize_long_forms,
    read_ad_dataset,
    subsample_per_long_form,
    write_ad_dataset,
)
from acrokit.extraction import LONG, SHORT, Span, SpanAnnotation
from acrokit.validation import DataError

from helpers import chain_sample, oracle_edit_distance_grid, sent


def test_levenshtein_known_values():
    assert levenshtein("", "") == 0
    assert levenshtein("", "abc") == 3
    assert levenshtein("abc", "abc") == 0
    assert levenshtein("kitten", "sitting") == 3
    assert levenshtein("flaw", "lawn") == 2


def test_levenshtein_matches_matrix_oracle():
    rng = np.random.default_rng(3)
    alphabet = "abcd"
    for _ in range(200):
        a = "".join(alphabet[int(rng.integers(4))] for _ in range(int(rng.integers(0, 7))))
        b = "".join(alphabet[int(rng.integers(4))] for _ in range(int(rng.integers(0, 7))))
        expected = int(oracle_edit_distance_grid([a], [b])[0, 0])
        assert levenshtein(a, b) == expected
        assert levenshtein(b, a) == expected


def test_normalize_merges_and_orders():
    raw = [
        ("machine learning", 5),
        ("machine learnin", 2),
        ("Machine Learning", 1),
        ("markup language", 4),
    ]
    canonical, variant_map = normalize_long_forms(raw)
    assert canonical == [("machine learning", 8), ("markup language", 4)]
    assert variant_map == {
        "machine learnin": "machine learning",
        "Machine Learning": "machine learning",
    }


def test_normalize_tie_breaks_lexicographically():
    canonical, variant_map = normalize_long_forms([("abd", 3), ("abc", 3)])
    assert canonical == [("abc", 6)]
    assert variant_map == {"abd": "abc"}


def test_normalize_is_transitive():
    # b is within 2 of a, c within 2 of b but 4 away from a; chain resolves to a
    raw = [("aaaaaa", 9), ("aaaabb", 5), ("aabbbb", 2)]
    assert levenshtein("aaaaaa", "aabbbb") > 2
    canonical, variant_map = normalize_long_forms(raw)
    assert canonical == [("aaaaaa", 16)]
    assert variant_map == {"aaaabb": "aaaaaa", "aabbbb": "aaaabb"} or variant_map == {
        "aaaabb": "aaaaaa",
        "aabbbb": "aaaaaa",
    }
    # the chain must resolve to the fixed point when followed
    resolved = variant_map["aabbbb"]
    while resolved in variant_map:
        resolved = variant_map[resolved]
    assert resolved == "aaaaaa"


def test_normalize_conserves_mass_and_is_idempotent():
    raw = [("alpha", 3), ("alphb", 2), ("gamma rays", 7), ("alpha", 1)]
    canonical, _ = normalize_long_forms(raw)
    assert sum(c for _, c in canonical) == sum(c for _, c in raw)
    again, variants = normalize_long_forms(canonical)
    assert again == canonical and variants == {}


def test_normalize_rejects_non_positive_counts():
    with pytest.raises(DataError):
        normalize_long_forms([("x", 0)])


def _defs_doc():
    s0 = sent(["machine", "learning", "(", "ML", ")"], doc="d1", sid="s0")
    s1 = sent(["we", "apply", "ML", "here"], doc="d1", sid="s1")
    s2 = sent(["maximum", "likelihood", "(", "ML", ")"], doc="d2", sid="s0")
    s3 = sent(["ML", "estimates"], doc="d2", sid="s1")
    docs = [Document("d1", (s0, s1)), Document("d2", (s2, s3))]
    anns = [
        SpanAnnotation(("d1", "s0"), [Span(3, 4, SHORT), Span(0, 2, LONG)], [(0, 1)]),
        SpanAnnotation(("d2", "s0"), [Span(3, 4, SHORT), Span(0, 2, LONG)], [(0, 1)]),
    ]
    return docs, anns


def test_collect_counts_uses_surface_strings():
    docs, anns = _defs_doc()
    counts = collect_long_form_counts(anns, index_sentences(docs))
    assert counts == {"ML": {"machine learning": 1, "maximum likelihood": 1}}


def test_build_dictionary_keeps_only_ambiguous():
    docs, anns = _defs_doc()
    # one extra unambiguous acronym that must be dropped
    s = sent(["access", "point", "(", "AP", ")"], doc="d3", sid="s0")
    docs = docs + [Document("d3", (s,))]
    anns = anns + [
        SpanAnnotation(("d3", "s0"), [Span(3, 4, SHORT), Span(0, 2, LONG)], [(0, 1)])
    ]
    d = build_dictionary(anns, index_sentences(docs))
    assert sorted(d.entries) == ["ML"]
    assert d.canonical_forms("ML") == ["machine learning", "maximum likelihood"]
    assert d.all_long_forms() == ["machine learning", "maximum likelihood"]


def test_build_dictionary_is_case_sensitive_per_acronym():
    s0 = sent(["machine", "learning", "(", "ML", ")"], doc="d1", sid="s0")
    s1 = sent(["milliliter", "(", "mL", ")"], doc="d1", sid="s1")
    docs = [Document("d1", (s0, s1))]
    anns = [
        SpanAnnotation(("d1", "s0"), [Span(3, 4, SHORT), Span(0, 2, LONG)], [(0, 1)]),
        SpanAnnotation(("d1", "s1"), [Span(2, 3, SHORT), Span(0, 1, LONG)], [(0, 1)]),
    ]
    counts = collect_long_form_counts(anns, index_sentences(docs))
    assert set(counts) == {"ML", "mL"}  # distinct keys, both unambiguous
    assert build_dictionary(anns, index_sentences(docs)).entries == {}


def test_build_dictionary_overrides_repoint_variants():
    docs, anns = _defs_doc()
    overrides = {"maximum likelihood": "machine learning"}
    d = build_dictionary(anns, index_sentences(docs), overrides=overrides)
    assert d.entries == {}  # collapsed to one meaning, no longer ambiguous
    d2 = build_dictionary(anns, index_sentences(docs), overrides={})
    assert len(d2.entries["ML"]) == 2


def test_dictionary_validate_errors():
    with pytest.raises(DataError):
        AcronymDictionary({"AB": [("alpha", 3)]}, {}).validate()
    with pytest.raises(DataError):
        AcronymDictionary({"AB": [("a", 3), ("a", 1)]}, {}).validate()
    with pytest.raises(DataError):
        AcronymDictionary({"AB": [("a", 3), ("b", 0)]}, {}).validate()
    with pytest.raises(DataError):
        AcronymDictionary({"AB": [("a", 3), ("b", 1)]}, {"x": "zz"}).validate()


def test_dictionary_save_load_round_trip(tmp_path):
    d = AcronymDictionary(
        {"ML": [("machine learning", 8), ("maximum likelihood", 2)]},
        {"Machine Learning": "machine learning"},
    )
    path = tmp_path / "dict.json"
    d.save(path)
    loaded = AcronymDictionary.load(path)
    assert loaded == d
    assert loaded.canonical_of("Machine Learning") == "machine learning"
    assert loaded.canonical_of("novel phrase") == "novel phrase"


DICT = AcronymDictionary(
    {"ML": [("machine learning", 2), ("maximum likelihood", 1)]}, {}
)


def test_generate_samples_propagates_definition_within_document():
    docs, anns = _defs_doc()
    samples = generate_ad_samples(docs, anns, DICT)
    got = [(s.sentence.ref, s.acronym_index, s.gold_long_form) for s in samples]
    assert got == [
        (("d1", "s0"), 3, "machine learning"),
        (("d1", "s1"), 2, "machine learning"),
        (("d2", "s0"), 3, "maximum likelihood"),
        (("d2", "s1"), 0, "maximum likelihood"),
    ]


def test_generate_samples_skips_two_meaning_documents(caplog):
    s0 = sent(["machine", "learning", "(", "ML", ")"], doc="d1", sid="s0")
    s1 = sent(["maximum", "likelihood", "(", "ML", ")"], doc="d1", sid="s1")
    docs = [Document("d1", (s0, s1))]
    anns = [
        SpanAnnotation(("d1", "s0"), [Span(3, 4, SHORT), Span(0, 2, LONG)], [(0, 1)]),
        SpanAnnotation(("d1", "s1"), [Span(3, 4, SHORT), Span(0, 2, LONG)], [(0, 1)]),
    ]
    with caplog.at_level(logging.WARNING):
        samples = generate_ad_samples(docs, anns, DICT)
    assert samples == []
    assert any("2 meanings" in rec.getMessage() for rec in caplog.records)


def test_generate_samples_ignores_unknown_long_form(caplog):
    s0 = sent(["something", "else", "(", "ML", ")"], doc="d1", sid="s0")
    docs = [Document("d1", (s0,))]
    anns = [
        SpanAnnotation(("d1", "s0"), [Span(3, 4, SHORT), Span(0, 2, LONG)], [(0, 1)])
    ]
    with caplog.at_level(logging.WARNING):
        samples = generate_ad_samples(docs, anns, DICT)
    assert samples == []
    assert any("definition ignored" in rec.getMessage() for rec in caplog.records)


def test_generate_samples_requires_single_token_definitions():
    s0 = sent(["machine", "learning", "(", "M", "L", ")"], doc="d1", sid="s0")
    docs = [Document("d1", (s0,))]
    anns = [
        SpanAnnotation(("d1", "s0"), [Span(3, 5, SHORT), Span(0, 2, LONG)], [(0, 1)])
    ]
    assert generate_ad_samples(docs, anns, DICT) == []


def test_subsample_caps_each_long_form():
    samples = [
        chain_sample(["ML", "x"], 0, "machine learning", sid=f"s{i}")
        for i in range(10)
    ] + [
        chain_sample(["ML", "y"], 0, "maximum likelihood", sid=f"t{i}")
        for i in range(3)
    ]
    kept = subsample_per_long_form(samples, k=4, seed=1)
    by_form = {}
    for s in kept:
        by_form.setdefault(s.gold_long_form, []).append(s)
    assert len(by_form["machine learning"]) == 4
    assert len(by_form["maximum likelihood"]) == 3
    # survivors keep their original relative order
    ids = [s.sentence.sent_id for s in kept]
    original = [s.sentence.sent_id for s in samples if s.sentence.sent_id in ids]
    assert ids == original
    assert subsample_per_long_form(samples, k=4, seed=1) == kept  # deterministic
    assert subsample_per_long_form(samples, k=100, seed=0) == samples
    with pytest.raises(DataError):
        subsample_per_long_form(samples, k=0)


def test_ad_dataset_round_trip(tmp_path):
    samples = [
        chain_sample(["ML", "works"], 0, "machine learning"),
        ADSample(sent(["use", "ML"]), 1, "ML", None),
    ]
    path = tmp_path / "ad.jsonl"
    write_ad_dataset(samples, path)
    back = read_ad_dataset(path)
    assert back == samples
    assert back[1].gold_long_form is None


def test_ad_dataset_read_errors_name_line(tmp_path):
    path = tmp_path / "ad.jsonl"
    path.write_text(
        '{"doc_id":"d","sent_id":"s","tokens":["a"],"pos":["N"],'
        '"acronym_index":5,"acronym":"a"}\n'
    )
    with pytest.raises(DataError) as err:
        read_ad_dataset(path)
    assert "line 1" in str(err.value)
    path.write_text(
        '{"doc_id":"d","sent_id":"s","tokens":["a"],"pos":["N"],'
        '"acronym_index":0,"acronym":"b"}\n'
    )
    with pytest.raises(DataError):
        read_ad_dataset(path)


def test_ad_sample_validate_against_dictionary():
    sample = chain_sample(["ML", "x"], 0, "bogus meaning")
    with pytest.raises(DataError):
        sample.validate(DICT)
    chain_sample(["ML", "x"], 0, "machine learning").validate(DICT)
