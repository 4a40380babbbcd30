"""Command-line pipeline: corpus ingestion through training and evaluation.

Every subcommand accepts --config FILE (JSON whose keys are option names with
underscores; unknown keys are rejected), with explicit flags taking precedence
over the file. Every run writes a manifest next to its outputs recording the
resolved config, sha256 hashes of the inputs, and tool versions. Exit codes:
0 success, 1 usage/config error, 2 data error.

Heavy imports happen inside the handlers so that --threads can pin the BLAS
thread pools before numpy is loaded.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from pathlib import Path
from types import SimpleNamespace

MANIFEST_SCHEMA_VERSION = 1

_THREAD_ENV_VARS = (
    "OMP_NUM_THREADS",
    "OPENBLAS_NUM_THREADS",
    "MKL_NUM_THREADS",
    "NUMEXPR_NUM_THREADS",
    "VECLIB_MAXIMUM_THREADS",
)


class CliError(Exception):
    """Usage or configuration problem (exit code 1)."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError(f"{self.prog}: error: {message}")


# ---------------------------------------------------------------------------
# option plumbing


def _add(parser, registry, *flags, default=None, required=False, **kwargs):
    action = parser.add_argument(*flags, default=argparse.SUPPRESS, **kwargs)
    registry["defaults"][action.dest] = default
    if required:
        registry["required"].append(action.dest)


def _add_common(parser, registry):
    _add(parser, registry, "--config", metavar="FILE",
         help="JSON config file; explicit flags override its values")
    _add(parser, registry, "--seed", type=int, default=0,
         help="random seed (default 0)")
    _add(parser, registry, "--threads", type=int,
         help="pin numeric thread pools to N (1 guarantees determinism)")


def _resolve(registry, namespace) -> SimpleNamespace:
    provided = {k: v for k, v in vars(namespace).items() if k != "command"}
    cfg = dict(registry["defaults"])
    config_path = provided.get("config", cfg.get("config"))
    if config_path:
        try:
            with open(config_path, encoding="utf-8") as fh:
                file_values = json.load(fh)
        except FileNotFoundError:
            raise CliError(f"config file not found: {config_path}") from None
        except json.JSONDecodeError as exc:
            raise CliError(f"{config_path}: invalid JSON ({exc.msg})") from None
        if not isinstance(file_values, dict):
            raise CliError(f"{config_path}: config must be a JSON object")
        allowed = set(cfg) - {"config"}
        unknown = sorted(set(file_values) - allowed)
        if unknown:
            raise CliError(f"{config_path}: unknown config keys: "
                           f"{', '.join(unknown)}")
        cfg.update(file_values)
    cfg.update(provided)
    missing = [name for name in registry["required"] if cfg.get(name) is None]
    if missing:
        raise CliError("missing required options: "
                       + ", ".join("--" + m.replace("_", "-") for m in missing))
    return SimpleNamespace(**cfg)


def _sha256(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _write_manifest(manifest_path, command: str, cfg: SimpleNamespace,
                    inputs: list, outputs: list) -> None:
    import platform

    import numpy

    from . import __version__

    manifest = {
        "schema_version": MANIFEST_SCHEMA_VERSION,
        "command": command,
        "config": {k: v for k, v in sorted(vars(cfg).items())},
        "inputs": {str(p): _sha256(p) for p in inputs if p is not None},
        "outputs": [str(p) for p in outputs],
        "versions": {
            "package": __version__,
            "python": platform.python_version(),
            "numpy": numpy.__version__,
        },
    }
    with open(manifest_path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _manifest_for(output) -> str:
    return str(output) + ".manifest.json"


# ---------------------------------------------------------------------------
# handlers


def _cmd_ingest(cfg) -> int:
    from .corpus import ingest_corpus, iter_sentences, write_corpus

    docs = ingest_corpus(cfg.input, cfg.format)
    write_corpus(docs, cfg.output, cfg.output_format)
    _write_manifest(_manifest_for(cfg.output), "ingest", cfg,
                    [cfg.input], [cfg.output])
    n = sum(1 for _ in iter_sentences(docs))
    print(f"ingested {n} sentences in {len(docs)} documents -> {cfg.output}")
    return 0


def _limits(cfg):
    from .extraction import SearchLimits

    return SearchLimits(max_window=cfg.max_window, max_skips=cfg.max_skips)


def _cmd_filter_sentences(cfg) -> int:
    from .corpus import group_documents, ingest_corpus, write_corpus
    from .extraction import filter_annotation_sentences

    docs = ingest_corpus(cfg.corpus, cfg.corpus_format)
    kept = filter_annotation_sentences(docs, _limits(cfg), cfg.min_acronym_len)
    write_corpus(group_documents(kept), cfg.output, "json_lines")
    _write_manifest(_manifest_for(cfg.output), "filter-sentences", cfg,
                    [cfg.corpus], [cfg.output])
    print(f"kept {len(kept)} sentences with acronym/long-form candidates")
    return 0


def _cmd_rule_extract(cfg) -> int:
    from .corpus import ingest_corpus, iter_sentences
    from .extraction import rule_pair_baseline, write_annotations

    docs = ingest_corpus(cfg.corpus, cfg.corpus_format)
    limits = _limits(cfg)
    annotations = []
    for sentence in iter_sentences(docs):
        ann = rule_pair_baseline(sentence, limits, cfg.min_acronym_len)
        if ann.spans:
            annotations.append(ann)
    write_annotations(annotations, cfg.output)
    _write_manifest(_manifest_for(cfg.output), "rule-extract", cfg,
                    [cfg.corpus], [cfg.output])
    n_pairs = sum(len(a.pairs) for a in annotations)
    print(f"annotated {len(annotations)} sentences, {n_pairs} short/long pairs")
    return 0


def _cmd_build_dict(cfg) -> int:
    from .corpus import index_sentences, ingest_corpus
    from .dictionary import build_dictionary
    from .extraction import read_annotations

    docs = ingest_corpus(cfg.corpus, cfg.corpus_format)
    annotations = read_annotations(cfg.annotations)
    overrides = None
    if cfg.overrides:
        with open(cfg.overrides, encoding="utf-8") as fh:
            overrides = json.load(fh)
    dictionary = build_dictionary(annotations, index_sentences(docs),
                                  threshold=cfg.edit_threshold,
                                  overrides=overrides)
    dictionary.save(cfg.output)
    _write_manifest(_manifest_for(cfg.output), "build-dict", cfg,
                    [cfg.corpus, cfg.annotations, cfg.overrides], [cfg.output])
    print(f"dictionary: {len(dictionary.entries)} ambiguous acronyms, "
          f"{len(dictionary.all_long_forms())} long forms -> {cfg.output}")
    return 0


def _cmd_gen_ad(cfg) -> int:
    from .corpus import ingest_corpus
    from .dictionary import AcronymDictionary, generate_ad_samples, write_ad_dataset
    from .extraction import read_annotations

    docs = ingest_corpus(cfg.corpus, cfg.corpus_format)
    annotations = read_annotations(cfg.annotations)
    dictionary = AcronymDictionary.load(cfg.dictionary)
    samples = generate_ad_samples(docs, annotations, dictionary)
    write_ad_dataset(samples, cfg.output)
    _write_manifest(_manifest_for(cfg.output), "gen-ad", cfg,
                    [cfg.corpus, cfg.annotations, cfg.dictionary], [cfg.output])
    print(f"generated {len(samples)} disambiguation samples -> {cfg.output}")
    return 0


def _cmd_subsample(cfg) -> int:
    from .dictionary import read_ad_dataset, subsample_per_long_form, write_ad_dataset

    samples = read_ad_dataset(cfg.input)
    kept = subsample_per_long_form(samples, cfg.per_long_form, cfg.seed)
    write_ad_dataset(kept, cfg.output)
    _write_manifest(_manifest_for(cfg.output), "subsample", cfg,
                    [cfg.input], [cfg.output])
    print(f"kept {len(kept)} of {len(samples)} samples "
          f"(<= {cfg.per_long_form} per long form)")
    return 0


def _cmd_split(cfg) -> int:
    from .evaluation import split_dataset

    if cfg.kind == "ai":
        from .extraction import read_ai_dataset, write_ai_dataset

        items = read_ai_dataset(cfg.input)
        writer = write_ai_dataset
    elif cfg.kind == "ad":
        from .dictionary import read_ad_dataset, write_ad_dataset

        items = read_ad_dataset(cfg.input)
        writer = write_ad_dataset
    else:  # corpus
        from .corpus import group_documents, ingest_corpus, iter_sentences, write_corpus

        docs = ingest_corpus(cfg.input, "json_lines")
        items = list(iter_sentences(docs))

        def writer(sentences, path):
            write_corpus(group_documents(list(sentences)), path, "json_lines")

    parts = split_dataset(items, tuple(cfg.ratios), cfg.seed, cfg.unit)
    # membership comes from the shuffle; files keep the original input order
    position = {id(item): i for i, item in enumerate(items)}
    outputs = []
    for name, part in zip(("train", "dev", "test"), parts):
        path = f"{cfg.output_prefix}.{name}.jsonl"
        writer(sorted(part, key=lambda it: position[id(it)]), path)
        outputs.append(path)
    _write_manifest(f"{cfg.output_prefix}.manifest.json", "split", cfg,
                    [cfg.input], outputs)
    print("split sizes: " + ", ".join(
        f"{name}={len(part)}" for name, part in zip(("train", "dev", "test"), parts)))
    return 0


def _load_embedding_table(path):
    if path is None:
        return None
    from .corpus import load_embeddings

    return load_embeddings(path)


def _join_ai_records(corpus_path, corpus_format, labels_path):
    from .corpus import index_sentences, ingest_corpus
    from .extraction import read_ai_dataset
    from .validation import DataError

    index = index_sentences(ingest_corpus(corpus_path, corpus_format))
    X, y = [], []
    for record in read_ai_dataset(labels_path):
        sentence = index.get(record.ref)
        if sentence is None:
            raise DataError(f"labels reference unknown sentence {record.ref}")
        if sentence.texts != record.tokens:
            raise DataError(f"tokens for sentence {record.ref} differ between "
                            "the corpus and the label file")
        X.append(sentence)
        y.append(record.labels)
    return X, y


def _cmd_train_ai(cfg) -> int:
    from .tagger import AcronymTagger

    X, y = _join_ai_records(cfg.corpus, cfg.corpus_format, cfg.labels)
    tagger = AcronymTagger(
        embeddings=_load_embedding_table(cfg.embeddings),
        embed_dim=cfg.embed_dim,
        pos_embed_dim=cfg.pos_embed_dim,
        hidden_dim=cfg.hidden_dim,
        num_layers=cfg.num_layers,
        dropout=cfg.dropout,
        batch_size=cfg.batch_size,
        lr=cfg.lr,
        epochs=cfg.epochs,
        seed=cfg.seed,
        constrained_decoding=cfg.constrained_decoding,
    )
    tagger.fit(X, y)
    tagger.save(cfg.output)
    _write_manifest(_manifest_for(cfg.output), "train-ai", cfg,
                    [cfg.corpus, cfg.labels, cfg.embeddings], [cfg.output])
    print(f"trained on {len(X)} sentences for {tagger.n_iter_} epochs; "
          f"final loss {tagger.training_loss_[-1]:.4f} -> {cfg.output}")
    return 0


def _cmd_predict_ai(cfg) -> int:
    from .corpus import ingest_corpus, iter_sentences
    from .extraction import AiRecord, write_ai_dataset, write_annotations
    from .tagger import AcronymTagger

    model = AcronymTagger.load(cfg.checkpoint)
    sentences = list(iter_sentences(ingest_corpus(cfg.corpus, cfg.corpus_format)))
    labels = model.predict(sentences)
    annotations = model.predict_annotations(sentences)
    write_annotations(annotations, cfg.output)
    outputs = [cfg.output]
    if cfg.labels_output:
        records = [AiRecord(s.doc_id, s.sent_id, s.texts, labs)
                   for s, labs in zip(sentences, labels)]
        write_ai_dataset(records, cfg.labels_output)
        outputs.append(cfg.labels_output)
    _write_manifest(_manifest_for(cfg.output), "predict-ai", cfg,
                    [cfg.checkpoint, cfg.corpus], outputs)
    n_spans = sum(len(a.spans) for a in annotations)
    print(f"predicted {n_spans} spans over {len(sentences)} sentences")
    return 0


def _cmd_train_ad(cfg) -> int:
    from .dictionary import AcronymDictionary, read_ad_dataset
    from .disambiguator import GraphDisambiguator, MostFrequentBaseline

    samples = read_ad_dataset(cfg.data)
    dictionary = AcronymDictionary.load(cfg.dictionary) if cfg.dictionary else None
    if cfg.model == "mf":
        model = MostFrequentBaseline(dictionary=dictionary)
        model.fit(samples)
        model.save(cfg.output)
        summary = f"most-frequent baseline over {len(model.inventory_)} long forms"
    else:
        model = GraphDisambiguator(
            dictionary=dictionary,
            embeddings=_load_embedding_table(cfg.embeddings),
            embed_dim=cfg.embed_dim,
            pos_embed_dim=cfg.pos_embed_dim,
            hidden_dim=cfg.hidden_dim,
            num_layers=cfg.num_layers,
            gcn_layers=cfg.gcn_layers,
            dropout=cfg.dropout,
            batch_size=cfg.batch_size,
            lr=cfg.lr,
            epochs=cfg.epochs,
            seed=cfg.seed,
            masked_inference=not cfg.unmasked_inference,
            patience=cfg.patience,
        )
        model.fit(samples)
        model.save(cfg.output)
        summary = (f"trained for {model.n_iter_} epochs; "
                   f"final loss {model.training_loss_[-1]:.4f}")
    _write_manifest(_manifest_for(cfg.output), "train-ad", cfg,
                    [cfg.data, cfg.dictionary, cfg.embeddings], [cfg.output])
    print(f"{summary} -> {cfg.output}")
    return 0


def _load_ad_model(path):
    from .disambiguator import GraphDisambiguator, MostFrequentBaseline
    from .nn.checkpoint import MAGIC

    with open(path, "rb") as fh:
        head = fh.read(len(MAGIC))
    if head == MAGIC:
        return GraphDisambiguator.load(path)
    return MostFrequentBaseline.load(path)


def _cmd_predict_ad(cfg) -> int:
    from .dictionary import read_ad_dataset
    from .disambiguator import GraphDisambiguator, mf_predict

    model = _load_ad_model(cfg.checkpoint)
    samples = read_ad_dataset(cfg.data)
    forms = model.inventory_.forms
    lines = []
    if isinstance(model, GraphDisambiguator):
        mode = cfg.mode
        for sample, (best, scores) in zip(samples,
                                          model.predict_scores(samples, mode)):
            effective = mode or ("masked" if model.masked_inference else "unmasked")
            if effective == "masked":
                pool = sorted(model.inventory_.candidates(sample.acronym))
            else:
                pool = range(len(forms))
            ranked = sorted(pool, key=lambda i: (-scores[i], i))[:cfg.topk]
            lines.append((sample, forms[best],
                          [[forms[i], float(scores[i])] for i in ranked]))
    else:
        for sample in samples:
            best = mf_predict(model.inventory_, sample.acronym)
            pool = sorted(model.inventory_.candidates(sample.acronym))
            freq = model.inventory_.train_freq
            ranked = sorted(pool, key=lambda i: (-freq[i], i))[:cfg.topk]
            lines.append((sample, forms[best],
                          [[forms[i], float(freq[i])] for i in ranked]))
    with open(cfg.output, "w", encoding="utf-8") as fh:
        for sample, predicted, topk in lines:
            fh.write(json.dumps({
                "doc_id": sample.sentence.doc_id,
                "sent_id": sample.sentence.sent_id,
                "acronym_index": sample.acronym_index,
                "acronym": sample.acronym,
                "predicted_long_form": predicted,
                "scores_topk": topk,
            }) + "\n")
    _write_manifest(_manifest_for(cfg.output), "predict-ad", cfg,
                    [cfg.checkpoint, cfg.data], [cfg.output])
    print(f"predicted long forms for {len(samples)} samples -> {cfg.output}")
    return 0


def _emit_report(report, output) -> None:
    with open(output, "w", encoding="utf-8") as fh:
        json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(report.text_table())


def _cmd_eval_ai(cfg) -> int:
    from .evaluation import evaluate_ai
    from .extraction import read_annotations

    report = evaluate_ai(read_annotations(cfg.gold), read_annotations(cfg.pred))
    _emit_report(report, cfg.output)
    _write_manifest(_manifest_for(cfg.output), "eval-ai", cfg,
                    [cfg.gold, cfg.pred], [cfg.output])
    return 0


def _cmd_eval_ad(cfg) -> int:
    from .dictionary import read_ad_dataset
    from .evaluation import evaluate_ad
    from .validation import DataError

    gold = read_ad_dataset(cfg.gold)
    preds = []
    with open(cfg.pred, encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            if not raw.strip():
                continue
            obj = json.loads(raw)
            form = obj.get("predicted_long_form", obj.get("long_form"))
            if form is None:
                raise DataError(f"{cfg.pred}: line {line_no}: no "
                                "predicted_long_form or long_form field")
            i = len(preds)
            if "sent_id" in obj and i < len(gold):
                expected = gold[i]
                if (obj.get("sent_id") != expected.sentence.sent_id
                        or obj.get("acronym_index", expected.acronym_index)
                        != expected.acronym_index):
                    raise DataError(
                        f"{cfg.pred}: line {line_no}: prediction is for "
                        f"sentence {obj.get('sent_id')!r} index "
                        f"{obj.get('acronym_index')!r}, but the gold sample "
                        f"there is {expected.sentence.sent_id!r} index "
                        f"{expected.acronym_index}")
            preds.append(form)
    report = evaluate_ad(gold, preds)
    _emit_report(report, cfg.output)
    _write_manifest(_manifest_for(cfg.output), "eval-ad", cfg,
                    [cfg.gold, cfg.pred], [cfg.output])
    return 0


def _cmd_stats(cfg) -> int:
    from .evaluation import (
        ambiguity_histogram,
        long_form_support_split,
        sample_ambiguity_histogram,
    )

    if not cfg.dictionary and not cfg.data:
        raise CliError("stats needs --dictionary and/or --data")
    parts: dict = {}
    dictionary = samples = None
    if cfg.dictionary:
        from .dictionary import AcronymDictionary

        dictionary = AcronymDictionary.load(cfg.dictionary)
        parts["ambiguity_histogram"] = {
            str(k): v for k, v in ambiguity_histogram(dictionary).items()}
    if cfg.data:
        from .dictionary import read_ad_dataset

        samples = read_ad_dataset(cfg.data)
        parts["long_form_support"] = long_form_support_split(samples,
                                                             cfg.threshold)
    if dictionary is not None and samples is not None:
        parts["sample_ambiguity_histogram"] = {
            str(k): v
            for k, v in sample_ambiguity_histogram(samples, dictionary).items()}
    with open(cfg.output, "w", encoding="utf-8") as fh:
        json.dump(parts, fh, indent=2, sort_keys=True)
        fh.write("\n")
    _write_manifest(_manifest_for(cfg.output), "stats", cfg,
                    [cfg.dictionary, cfg.data], [cfg.output])
    print(f"wrote {', '.join(sorted(parts))} -> {cfg.output}")
    return 0


# Released span-labeling files may spell the tags B-short/I-short; this is the
# one-way mapping onto the label set used here.
_ADAPT_LABELS = {
    "B-short": "B-acronym",
    "I-short": "I-acronym",
    "B-long": "B-long",
    "I-long": "I-long",
    "O": "O",
    "B-acronym": "B-acronym",
    "I-acronym": "I-acronym",
}


def _read_records(path):
    text = Path(path).read_text(encoding="utf-8")
    stripped = text.lstrip()
    if stripped.startswith("["):
        return json.loads(text)
    return [json.loads(line) for line in text.splitlines() if line.strip()]


def _cmd_adapt(cfg) -> int:
    from .validation import DataError

    records = _read_records(cfg.input)
    if cfg.task == "ai":
        from .extraction import AiRecord, write_ai_dataset

        out = []
        for i, obj in enumerate(records):
            rid = str(obj.get("id", i))
            labels = []
            for label in obj["labels"]:
                if label not in _ADAPT_LABELS:
                    raise DataError(f"{cfg.input}: record {rid}: "
                                    f"unknown source label {label!r}")
                labels.append(_ADAPT_LABELS[label])
            out.append(AiRecord(rid, rid, list(obj["tokens"]), labels))
        write_ai_dataset(out, cfg.output)
    else:
        from .corpus import make_sentence
        from .dictionary import ADSample, write_ad_dataset

        out = []
        for i, obj in enumerate(records):
            rid = str(obj.get("id", i))
            tokens = list(obj["tokens"])
            index = int(obj["acronym"])
            if not 0 <= index < len(tokens):
                raise DataError(f"{cfg.input}: record {rid}: acronym index "
                                f"{index} out of range")
            gold = obj.get("expansion", obj.get("label"))
            # released files carry no POS tags or parses; "_" marks that
            sentence = make_sentence(tokens, ["_"] * len(tokens), None, rid, rid)
            out.append(ADSample(sentence, index, tokens[index], gold))
        write_ad_dataset(out, cfg.output)
    _write_manifest(_manifest_for(cfg.output), "adapt", cfg,
                    [cfg.input], [cfg.output])
    print(f"adapted {len(records)} records -> {cfg.output}")
    return 0


# ---------------------------------------------------------------------------
# parser assembly


def build_parser():
    parser = _Parser(prog="acrokit",
                     description="Acronym identification and disambiguation "
                                 "pipeline.")
    subparsers = parser.add_subparsers(dest="command", required=True,
                                       metavar="SUBCOMMAND",
                                       parser_class=_Parser)
    commands: dict[str, dict] = {}

    def sub(name, handler, help_text):
        registry = {"defaults": {}, "required": [], "handler": handler}
        sp = subparsers.add_parser(name, help=help_text)
        _add_common(sp, registry)
        commands[name] = registry
        return sp, registry

    sp, reg = sub("ingest", _cmd_ingest, "validate and normalize a corpus file")
    _add(sp, reg, "--input", required=True, metavar="FILE")
    _add(sp, reg, "--format", default="conllu_like",
         choices=("conllu_like", "json_lines"))
    _add(sp, reg, "--output", required=True, metavar="FILE")
    _add(sp, reg, "--output-format", default="json_lines",
         choices=("conllu_like", "json_lines"))

    def add_search_limits(sp, reg):
        _add(sp, reg, "--max-window", type=int,
             help="window token cap (default: acronym length + 5)")
        _add(sp, reg, "--max-skips", type=int, default=2)
        _add(sp, reg, "--min-acronym-len", type=int, default=2)

    sp, reg = sub("filter-sentences", _cmd_filter_sentences,
                  "keep sentences with acronym/long-form candidates")
    _add(sp, reg, "--corpus", required=True, metavar="FILE")
    _add(sp, reg, "--corpus-format", default="json_lines",
         choices=("conllu_like", "json_lines"))
    _add(sp, reg, "--output", required=True, metavar="FILE")
    add_search_limits(sp, reg)

    sp, reg = sub("rule-extract", _cmd_rule_extract,
                  "rule-based span annotation (no learning)")
    _add(sp, reg, "--corpus", required=True, metavar="FILE")
    _add(sp, reg, "--corpus-format", default="json_lines",
         choices=("conllu_like", "json_lines"))
    _add(sp, reg, "--output", required=True, metavar="FILE")
    add_search_limits(sp, reg)

    sp, reg = sub("build-dict", _cmd_build_dict,
                  "build the ambiguous-acronym dictionary")
    _add(sp, reg, "--corpus", required=True, metavar="FILE")
    _add(sp, reg, "--corpus-format", default="json_lines",
         choices=("conllu_like", "json_lines"))
    _add(sp, reg, "--annotations", required=True, metavar="FILE")
    _add(sp, reg, "--output", required=True, metavar="FILE")
    _add(sp, reg, "--edit-threshold", type=int, default=2)
    _add(sp, reg, "--overrides", metavar="FILE",
         help="JSON of raw long form -> canonical form")

    sp, reg = sub("gen-ad", _cmd_gen_ad,
                  "generate disambiguation samples (one sense per document)")
    _add(sp, reg, "--corpus", required=True, metavar="FILE")
    _add(sp, reg, "--corpus-format", default="json_lines",
         choices=("conllu_like", "json_lines"))
    _add(sp, reg, "--annotations", required=True, metavar="FILE")
    _add(sp, reg, "--dictionary", required=True, metavar="FILE")
    _add(sp, reg, "--output", required=True, metavar="FILE")

    sp, reg = sub("subsample", _cmd_subsample,
                  "cap samples per long form (seeded)")
    _add(sp, reg, "--input", required=True, metavar="FILE")
    _add(sp, reg, "--output", required=True, metavar="FILE")
    _add(sp, reg, "--per-long-form", type=int, default=17)

    sp, reg = sub("split", _cmd_split, "80:10:10 train/dev/test split")
    _add(sp, reg, "--input", required=True, metavar="FILE")
    _add(sp, reg, "--kind", default="ai", choices=("ai", "ad", "corpus"))
    _add(sp, reg, "--unit", default="sentence",
         choices=("sentence", "document"))
    _add(sp, reg, "--ratios", type=float, nargs=3, default=[0.8, 0.1, 0.1],
         metavar=("TRAIN", "DEV", "TEST"))
    _add(sp, reg, "--output-prefix", required=True, metavar="PREFIX")

    def add_train_options(sp, reg):
        _add(sp, reg, "--embeddings", metavar="FILE",
             help="static word vectors; omit to learn embeddings")
        _add(sp, reg, "--embed-dim", type=int, default=50,
             help="learned word embedding size (ignored with --embeddings)")
        _add(sp, reg, "--pos-embed-dim", type=int, default=25)
        _add(sp, reg, "--hidden-dim", type=int, default=200)
        _add(sp, reg, "--num-layers", type=int, default=2)
        _add(sp, reg, "--dropout", type=float, default=0.2)
        _add(sp, reg, "--batch-size", type=int, default=50)
        _add(sp, reg, "--lr", type=float, default=1e-3)
        _add(sp, reg, "--epochs", type=int, default=10)

    sp, reg = sub("train-ai", _cmd_train_ai, "train the span tagger")
    _add(sp, reg, "--corpus", required=True, metavar="FILE")
    _add(sp, reg, "--corpus-format", default="json_lines",
         choices=("conllu_like", "json_lines"))
    _add(sp, reg, "--labels", required=True, metavar="FILE",
         help="JSON-lines token/label file")
    _add(sp, reg, "--output", required=True, metavar="FILE")
    add_train_options(sp, reg)
    _add(sp, reg, "--constrained-decoding", action="store_true", default=False)

    sp, reg = sub("predict-ai", _cmd_predict_ai, "tag sentences with a checkpoint")
    _add(sp, reg, "--checkpoint", required=True, metavar="FILE")
    _add(sp, reg, "--corpus", required=True, metavar="FILE")
    _add(sp, reg, "--corpus-format", default="json_lines",
         choices=("conllu_like", "json_lines"))
    _add(sp, reg, "--output", required=True, metavar="FILE",
         help="span annotations (JSON lines)")
    _add(sp, reg, "--labels-output", metavar="FILE",
         help="also write per-token BIO labels")

    sp, reg = sub("train-ad", _cmd_train_ad, "train a disambiguation model")
    _add(sp, reg, "--data", required=True, metavar="FILE")
    _add(sp, reg, "--dictionary", metavar="FILE")
    _add(sp, reg, "--output", required=True, metavar="FILE")
    _add(sp, reg, "--model", default="gcn", choices=("gcn", "mf"))
    add_train_options(sp, reg)
    _add(sp, reg, "--gcn-layers", type=int, default=2)
    _add(sp, reg, "--patience", type=int,
         help="stop after N epochs without training-loss improvement")
    _add(sp, reg, "--unmasked-inference", action="store_true", default=False,
         help="score all long forms instead of the acronym's candidates")

    sp, reg = sub("predict-ad", _cmd_predict_ad,
                  "predict long forms with a checkpoint")
    _add(sp, reg, "--checkpoint", required=True, metavar="FILE")
    _add(sp, reg, "--data", required=True, metavar="FILE")
    _add(sp, reg, "--output", required=True, metavar="FILE")
    _add(sp, reg, "--mode", choices=("masked", "unmasked"),
         help="override the checkpoint's inference mode")
    _add(sp, reg, "--topk", type=int, default=5)

    sp, reg = sub("eval-ai", _cmd_eval_ai, "boundary-match span metrics")
    _add(sp, reg, "--gold", required=True, metavar="FILE")
    _add(sp, reg, "--pred", required=True, metavar="FILE")
    _add(sp, reg, "--output", required=True, metavar="FILE")

    sp, reg = sub("eval-ad", _cmd_eval_ad, "per-long-form metrics")
    _add(sp, reg, "--gold", required=True, metavar="FILE")
    _add(sp, reg, "--pred", required=True, metavar="FILE")
    _add(sp, reg, "--output", required=True, metavar="FILE")

    sp, reg = sub("stats", _cmd_stats, "ambiguity and support distributions")
    _add(sp, reg, "--dictionary", metavar="FILE")
    _add(sp, reg, "--data", metavar="FILE")
    _add(sp, reg, "--threshold", type=int, default=10)
    _add(sp, reg, "--output", required=True, metavar="FILE")

    sp, reg = sub("adapt", _cmd_adapt,
                  "convert released-style records to this pipeline's formats")
    _add(sp, reg, "--input", required=True, metavar="FILE",
         help="JSON array or JSON-lines file")
    _add(sp, reg, "--task", required=True, choices=("ai", "ad"))
    _add(sp, reg, "--output", required=True, metavar="FILE")

    return parser, commands


def main(argv=None) -> int:
    parser, commands = build_parser()
    try:
        namespace = parser.parse_args(argv)
        registry = commands[namespace.command]
        cfg = _resolve(registry, namespace)
    except CliError as exc:
        print(exc, file=sys.stderr)
        return 1
    if getattr(cfg, "threads", None) is not None:
        if cfg.threads < 1:
            print("--threads must be >= 1", file=sys.stderr)
            return 1
        for var in _THREAD_ENV_VARS:
            os.environ[var] = str(cfg.threads)
    try:
        return registry["handler"](cfg)
    except CliError as exc:
        print(exc, file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(exc, file=sys.stderr)
        return 1
    except (ValueError, KeyError, OSError) as exc:
        message = str(exc) if not isinstance(exc, KeyError) else f"missing key {exc}"
        print(message, file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
