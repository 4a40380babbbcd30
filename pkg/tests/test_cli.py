import json
from pathlib import Path

import pytest

import acrokit
from acrokit.cli import main
from acrokit.corpus import ingest_corpus, iter_sentences
from acrokit.dictionary import AcronymDictionary, read_ad_dataset
from acrokit.extraction import (
    read_ai_dataset,
    read_annotations,
    spans_to_bio,
    write_ai_dataset,
    AiRecord,
)


def _conllu_doc(doc_id, sentences):
    lines = [f"# doc_id = {doc_id}"]
    for sid, words in sentences:
        lines.append(f"# sent_id = {sid}")
        for i, w in enumerate(words, start=1):
            head = i - 1  # chain tree rooted at the first token
            lines.append(f"{i}\t{w}\tN\t{head}")
        lines.append("")
    return "\n".join(lines) + "\n"


DOCS = [
    ("d0", [("s0", "machine learning ( ML ) helps data".split()),
            ("s1", "we use ML for data work".split())]),
    ("d1", [("s0", "maximum likelihood ( ML ) estimate given".split()),
            ("s1", "the ML estimate improves fit".split())]),
    ("d2", [("s0", "machine learning ( ML ) again data".split()),
            ("s1", "ML shines on data sets".split())]),
    ("d3", [("s0", "maximum likelihood ( ML ) fits well".split()),
            ("s1", "our ML fit converges here".split())]),
    ("d4", [("s0", "access point ( AP ) devices".split()),
            ("s1", "the AP covers rooms".split())]),
    ("d5", [("s0", "action potential ( AP ) spikes".split())]),
]


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    root = tmp_path_factory.mktemp("pipeline")
    raw = root / "raw.conllu"
    raw.write_text("".join(_conllu_doc(d, s) for d, s in DOCS), encoding="utf-8")
    return root


def _run(argv):
    return main([str(a) for a in argv])


def _manifest(output):
    return json.loads(Path(str(output) + ".manifest.json").read_text())


@pytest.fixture(scope="module")
def pipeline(workdir):
    """Run the full flow once; individual tests assert on the artifacts."""
    art = {
        "raw": workdir / "raw.conllu",
        "corpus": workdir / "corpus.jsonl",
        "filtered": workdir / "filtered.jsonl",
        "annotations": workdir / "annotations.jsonl",
        "dictionary": workdir / "dictionary.json",
        "ad_data": workdir / "ad.jsonl",
        "ad_small": workdir / "ad_small.jsonl",
        "mf_model": workdir / "mf.json",
        "gcn_model": workdir / "graph.ckpt",
        "ad_pred": workdir / "ad_pred.jsonl",
        "ad_report": workdir / "ad_report.json",
        "ai_labels": workdir / "ai_labels.jsonl",
        "ai_model": workdir / "tagger.ckpt",
        "ai_pred": workdir / "ai_pred.jsonl",
        "ai_pred_labels": workdir / "ai_pred_labels.jsonl",
        "ai_report": workdir / "ai_report.json",
        "stats": workdir / "stats.json",
        "prefix": workdir / "split",
    }
    steps = [
        ["ingest", "--input", art["raw"], "--format", "conllu_like",
         "--output", art["corpus"]],
        ["filter-sentences", "--corpus", art["corpus"],
         "--output", art["filtered"]],
        ["rule-extract", "--corpus", art["corpus"],
         "--output", art["annotations"]],
        ["build-dict", "--corpus", art["corpus"],
         "--annotations", art["annotations"], "--output", art["dictionary"]],
        ["gen-ad", "--corpus", art["corpus"],
         "--annotations", art["annotations"],
         "--dictionary", art["dictionary"], "--output", art["ad_data"]],
        ["subsample", "--input", art["ad_data"], "--output", art["ad_small"],
         "--per-long-form", "3", "--seed", "1"],
        ["split", "--input", art["ad_data"], "--kind", "ad",
         "--ratios", "0.6", "0.2", "0.2", "--unit", "document",
         "--output-prefix", art["prefix"]],
        ["train-ad", "--data", art["ad_data"],
         "--dictionary", art["dictionary"], "--model", "mf",
         "--output", art["mf_model"]],
        ["train-ad", "--data", art["ad_data"],
         "--dictionary", art["dictionary"], "--model", "gcn",
         "--embed-dim", "6", "--pos-embed-dim", "2", "--hidden-dim", "4",
         "--num-layers", "1", "--gcn-layers", "1", "--dropout", "0.0",
         "--batch-size", "4", "--epochs", "2", "--threads", "1",
         "--output", art["gcn_model"]],
        ["predict-ad", "--checkpoint", art["mf_model"],
         "--data", art["ad_data"], "--topk", "2",
         "--output", art["ad_pred"]],
        ["eval-ad", "--gold", art["ad_data"], "--pred", art["ad_pred"],
         "--output", art["ad_report"]],
        ["stats", "--dictionary", art["dictionary"], "--data", art["ad_data"],
         "--threshold", "3", "--output", art["stats"]],
    ]
    for argv in steps:
        assert _run(argv) == 0, f"step failed: {argv[0]}"

    # BIO labels derived from the rule annotations, joined back by ref
    anns = {a.sent_ref: a for a in read_annotations(art["annotations"])}
    records = []
    for sentence in iter_sentences(ingest_corpus(art["corpus"], "json_lines")):
        ann = anns.get(sentence.ref)
        if ann is None:
            continue
        labels = spans_to_bio(ann, len(sentence))
        records.append(AiRecord(sentence.doc_id, sentence.sent_id,
                                sentence.texts, labels))
    write_ai_dataset(records, art["ai_labels"])
    ai_steps = [
        ["train-ai", "--corpus", art["corpus"], "--labels", art["ai_labels"],
         "--embed-dim", "6", "--pos-embed-dim", "2", "--hidden-dim", "4",
         "--num-layers", "1", "--dropout", "0.0", "--batch-size", "4",
         "--epochs", "2", "--output", art["ai_model"]],
        ["predict-ai", "--checkpoint", art["ai_model"],
         "--corpus", art["filtered"], "--output", art["ai_pred"],
         "--labels-output", art["ai_pred_labels"]],
    ]
    for argv in ai_steps:
        assert _run(argv) == 0, f"step failed: {argv[0]}"
    return art


def test_ingest_round_trips_and_writes_manifest(pipeline):
    docs = ingest_corpus(pipeline["corpus"], "json_lines")
    assert [d.doc_id for d in docs] == [d for d, _ in DOCS]
    manifest = _manifest(pipeline["corpus"])
    assert manifest["schema_version"] == 1
    assert manifest["command"] == "ingest"
    assert manifest["versions"]["package"] == acrokit.__version__
    (digest,) = [v for k, v in manifest["inputs"].items() if "raw" in k]
    assert len(digest) == 64 and set(digest) <= set("0123456789abcdef")
    assert str(pipeline["corpus"]) in manifest["outputs"]
    assert manifest["config"]["format"] == "conllu_like"


def test_filter_keeps_definition_sentences_only(pipeline):
    kept = list(iter_sentences(ingest_corpus(pipeline["filtered"], "json_lines")))
    assert len(kept) == 6
    assert all(s.sent_id == "s0" for s in kept)


def test_rule_annotations_pair_definitions(pipeline):
    anns = read_annotations(pipeline["annotations"])
    by_ref = {a.sent_ref: a for a in anns}
    d0 = by_ref[("d0", "s0")]
    assert len(d0.pairs) == 1
    short_id, long_id = d0.pairs[0]
    assert d0.spans[short_id].start == 3  # "ML"
    assert (d0.spans[long_id].start, d0.spans[long_id].end) == (0, 2)
    # occurrence-only sentences get short spans without pairs
    d0s1 = by_ref[("d0", "s1")]
    assert d0s1.pairs == [] and len(d0s1.spans) == 1


def test_dictionary_contents(pipeline):
    d = AcronymDictionary.load(pipeline["dictionary"])
    assert sorted(d.entries) == ["AP", "ML"]
    assert d.canonical_forms("ML") == ["machine learning", "maximum likelihood"]
    assert d.canonical_forms("AP") == ["access point", "action potential"]


def test_ad_samples_follow_one_sense_per_document(pipeline):
    samples = read_ad_dataset(pipeline["ad_data"])
    assert len(samples) == 11
    golds = {(s.sentence.doc_id, s.gold_long_form) for s in samples}
    assert ("d0", "machine learning") in golds
    assert ("d1", "maximum likelihood") in golds
    assert ("d5", "action potential") in golds
    small = read_ad_dataset(pipeline["ad_small"])
    per_form = {}
    for s in small:
        per_form[s.gold_long_form] = per_form.get(s.gold_long_form, 0) + 1
    assert max(per_form.values()) <= 3


def test_split_outputs_cover_input_without_overlap(pipeline):
    parts = [read_ad_dataset(f"{pipeline['prefix']}.{name}.jsonl")
             for name in ("train", "dev", "test")]
    total = read_ad_dataset(pipeline["ad_data"])
    assert sum(len(p) for p in parts) == len(total)
    refs = [((s.sentence.ref), s.acronym_index) for p in parts for s in p]
    assert len(set(refs)) == len(refs)
    docs_of = [{s.sentence.doc_id for s in p} for p in parts]
    assert not (docs_of[0] & docs_of[1] | docs_of[0] & docs_of[2]
                | docs_of[1] & docs_of[2])
    manifest = json.loads(
        Path(f"{pipeline['prefix']}.manifest.json").read_text())
    assert manifest["command"] == "split"
    assert len(manifest["outputs"]) == 3


def test_predict_ad_output_schema(pipeline):
    lines = [json.loads(l) for l in
             Path(pipeline["ad_pred"]).read_text().splitlines()]
    samples = read_ad_dataset(pipeline["ad_data"])
    assert len(lines) == len(samples)
    for obj, sample in zip(lines, samples):
        assert obj["sent_id"] == sample.sentence.sent_id
        assert obj["acronym_index"] == sample.acronym_index
        assert obj["acronym"] == sample.acronym
        assert isinstance(obj["predicted_long_form"], str)
        topk = obj["scores_topk"]
        assert 1 <= len(topk) <= 2
        scores = [s for _, s in topk]
        assert scores == sorted(scores, reverse=True)


def test_eval_ad_report_structure(pipeline):
    report = json.loads(Path(pipeline["ad_report"]).read_text())
    assert set(report) == {"per_class", "macro"}
    assert 0.0 <= report["macro"]["f1"] <= 1.0
    # the MF baseline gets the majority meanings right on training data
    assert report["macro"]["recall"] > 0.4


def test_stats_output(pipeline):
    stats = json.loads(Path(pipeline["stats"]).read_text())
    assert stats["ambiguity_histogram"] == {"2": 2}
    assert stats["sample_ambiguity_histogram"] == {"2": 11}
    assert stats["long_form_support"]["threshold"] == 3
    assert (stats["long_form_support"]["below"]
            + stats["long_form_support"]["at_or_above"]) == 4


def test_predict_ai_artifacts(pipeline):
    anns = read_annotations(pipeline["ai_pred"])
    filtered = list(iter_sentences(
        ingest_corpus(pipeline["filtered"], "json_lines")))
    assert len(anns) == len(filtered)
    records = read_ai_dataset(pipeline["ai_pred_labels"])
    assert [r.ref for r in records] == [s.ref for s in filtered]
    assert all(len(r.labels) == len(r.tokens) for r in records)


def test_eval_ai_on_matching_files(pipeline, workdir):
    # rule annotations evaluated against themselves must be perfect
    gold = workdir / "eval_gold.jsonl"
    report_path = workdir / "ai_self_report.json"
    annotations = read_annotations(pipeline["annotations"])
    from acrokit.extraction import write_annotations

    write_annotations(annotations, gold)
    assert _run(["eval-ai", "--gold", pipeline["annotations"],
                 "--pred", gold, "--output", report_path]) == 0
    report = json.loads(report_path.read_text())
    assert report["macro"]["precision"] == 1.0
    assert report["macro"]["recall"] == 1.0
    assert report["macro"]["f1"] == 1.0


def test_gcn_checkpoint_predicts(pipeline, workdir):
    out = workdir / "gcn_pred.jsonl"
    assert _run(["predict-ad", "--checkpoint", pipeline["gcn_model"],
                 "--data", pipeline["ad_data"], "--output", out]) == 0
    lines = [json.loads(l) for l in Path(out).read_text().splitlines()]
    d = AcronymDictionary.load(pipeline["dictionary"])
    for obj in lines:
        assert obj["predicted_long_form"] in d.canonical_forms(obj["acronym"])


def test_predict_ad_unmasked_mode_flag(pipeline, workdir):
    out = workdir / "unmasked_pred.jsonl"
    assert _run(["predict-ad", "--checkpoint", pipeline["gcn_model"],
                 "--data", pipeline["ad_data"], "--mode", "unmasked",
                 "--topk", "10", "--output", out]) == 0
    lines = [json.loads(l) for l in Path(out).read_text().splitlines()]
    assert any(len(obj["scores_topk"]) == 4 for obj in lines)


def test_config_file_merging(pipeline, workdir, capsys):
    cfg_path = workdir / "sub.json"
    cfg_path.write_text(json.dumps({"per_long_form": 1, "seed": 9}))
    out = workdir / "sub_one.jsonl"
    assert _run(["subsample", "--input", pipeline["ad_data"],
                 "--config", cfg_path, "--output", out]) == 0
    per_form = {}
    for s in read_ad_dataset(out):
        per_form[s.gold_long_form] = per_form.get(s.gold_long_form, 0) + 1
    assert set(per_form.values()) == {1}
    manifest = _manifest(out)
    assert manifest["config"]["per_long_form"] == 1
    assert manifest["config"]["seed"] == 9
    # explicit flag beats the config file
    out2 = workdir / "sub_two.jsonl"
    assert _run(["subsample", "--input", pipeline["ad_data"],
                 "--config", cfg_path, "--per-long-form", "2",
                 "--output", out2]) == 0
    assert _manifest(out2)["config"]["per_long_form"] == 2


def test_config_file_rejects_unknown_keys(pipeline, workdir, capsys):
    cfg_path = workdir / "bad.json"
    cfg_path.write_text(json.dumps({"per_long_form": 1, "bogus_option": 5}))
    out = workdir / "never.jsonl"
    assert _run(["subsample", "--input", pipeline["ad_data"],
                 "--config", cfg_path, "--output", out]) == 1
    assert "bogus_option" in capsys.readouterr().err
    assert not out.exists()


def test_usage_errors_exit_one(capsys):
    assert main([]) == 1
    assert main(["frobnicate"]) == 1
    assert main(["ingest"]) == 1  # missing required options
    assert main(["ingest", "--nope", "x"]) == 1
    err = capsys.readouterr().err
    assert "error" in err or "missing" in err


def test_missing_file_exits_one(workdir, capsys):
    out = workdir / "no.jsonl"
    assert _run(["ingest", "--input", workdir / "absent.conllu",
                 "--output", out]) == 1
    assert _run(["subsample", "--input", workdir / "absent.jsonl",
                 "--output", out]) == 1


def test_malformed_data_exits_two(workdir, capsys):
    bad = workdir / "bad.conllu"
    bad.write_text("# doc_id = d\n# sent_id = s\n1\tonly-two-cols\n")
    out = workdir / "bad_out.jsonl"
    assert _run(["ingest", "--input", bad, "--output", out]) == 2
    assert "line 3" in capsys.readouterr().err


def test_eval_ad_misaligned_predictions_exit_two(pipeline, workdir, capsys):
    pred = workdir / "wrong_pred.jsonl"
    pred.write_text(json.dumps({
        "sent_id": "zzz", "acronym_index": 0,
        "predicted_long_form": "machine learning",
    }) + "\n")
    report = workdir / "never_report.json"
    assert _run(["eval-ad", "--gold", pipeline["ad_data"], "--pred", pred,
                 "--output", report]) == 2
    assert "zzz" in capsys.readouterr().err


def test_stats_requires_some_input(workdir, capsys):
    assert _run(["stats", "--output", workdir / "s.json"]) == 1
    assert "needs" in capsys.readouterr().err


def test_threads_flag_validation(workdir, capsys):
    assert _run(["stats", "--threads", "0",
                 "--output", workdir / "s.json"]) == 1
    assert "threads" in capsys.readouterr().err


def test_adapt_ai_records(workdir):
    src = workdir / "released_ai.json"
    src.write_text(json.dumps([
        {"id": "TR-1", "tokens": ["machine", "learning", "(", "ML", ")"],
         "labels": ["B-long", "I-long", "O", "B-short", "O"]},
        {"tokens": ["plain"], "labels": ["O"]},
    ]))
    out = workdir / "adapted_ai.jsonl"
    assert _run(["adapt", "--input", src, "--task", "ai",
                 "--output", out]) == 0
    records = read_ai_dataset(out)
    assert records[0].labels == ["B-long", "I-long", "O", "B-acronym", "O"]
    assert records[0].ref == ("TR-1", "TR-1")
    assert records[1].ref == ("1", "1")
    bad = workdir / "released_bad.json"
    bad.write_text(json.dumps([{"tokens": ["x"], "labels": ["B-mystery"]}]))
    assert _run(["adapt", "--input", bad, "--task", "ai",
                 "--output", workdir / "never_ai.jsonl"]) == 2


def test_adapt_ad_records(workdir):
    src = workdir / "released_ad.jsonl"
    rows = [
        {"id": "TS-9", "tokens": ["the", "ML", "model"], "acronym": 1,
         "expansion": "machine learning"},
        {"tokens": ["AP", "fired"], "acronym": 0, "label": "action potential"},
    ]
    src.write_text("\n".join(json.dumps(r) for r in rows) + "\n")
    out = workdir / "adapted_ad.jsonl"
    assert _run(["adapt", "--input", src, "--task", "ad",
                 "--output", out]) == 0
    samples = read_ad_dataset(out)
    assert samples[0].acronym == "ML"
    assert samples[0].gold_long_form == "machine learning"
    assert samples[0].sentence.pos_tags == ["_", "_", "_"]
    assert samples[0].sentence.heads == [None, None, None]
    assert samples[1].gold_long_form == "action potential"
